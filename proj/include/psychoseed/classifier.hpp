#pragma once

#include "psychoseed/common.hpp"
#include "psychoseed/corpus.hpp"
#include "psychoseed/text.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace psychoseed {

/// Sparse vector over [0, dim): indices strictly increasing.
struct FeatureVector {
    std::vector<std::uint32_t> indices;
    std::vector<float> values;
    std::uint32_t dim = 0;

    std::size_t nnz() const noexcept { return indices.size(); }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::uint32_t kDefaultFeatureDim = 1u << 18;

/// Hash key used for the bucket and sign of a unigram or bigram. Bucket is
/// FNV-1a 64 of the key from the standard offset basis, masked to dim-1;
/// the sign is the top bit of FNV-1a 64 from kSignBasis.
inline constexpr std::uint64_t kSignBasis = 0x84222325cbf29ce4ULL;
std::string unigram_key(const std::string& token);
std::string bigram_key(const std::string& left, const std::string& right);

/// Signed feature hashing of unigrams and (when ngrams == 2) adjacent
/// bigrams. dim must be a power of two.
FeatureVector featurize(const TokenSeq& seq, std::uint32_t dim = kDefaultFeatureDim, int ngrams = 2);

/// How a model turns text into features.
struct FeatureSpace {
    enum class Kind { hashed, remote };

    Kind kind = Kind::hashed;
    std::uint32_t dim = kDefaultFeatureDim;
    int ngrams = 2;
    /// Base URL of an encoder service (kind == remote). It serves
    /// POST /encode {"texts": [str]} -> {"embeddings": [[float]]}.
    std::string endpoint;

    void validate() const;
    friend bool operator==(const FeatureSpace&, const FeatureSpace&) = default;
};

/// Featurizes texts for a feature space; remote spaces go over HTTP in a
/// single request per call.
std::vector<FeatureVector> encode_texts(const FeatureSpace& space, std::span<const std::string> texts);
FeatureVector encode_tokens(const FeatureSpace& space, const TokenSeq& seq);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 16;
    int max_epochs = 200;
    int patience = 5;
    /// An epoch counts as progress only when its validation loss beats the
    /// best so far by more than this.
    double min_delta = 1e-3;
    std::uint64_t seed = 42;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Inverse class-frequency example weights.
    bool balance_classes = false;
    FeatureSpace features;

    void validate() const;
};

struct TrainMeta {
    int epochs_run = 0;
    int best_epoch = 0;
    double final_val_loss = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

/// Per-concept logistic model. Immutable after training.
struct Model {
    ConceptId concept_id;
    FeatureSpace features;
    std::vector<float> weights;
    double bias = 0.0;
    TrainMeta meta;

    std::uint32_t dim() const noexcept { return features.dim; }
    friend bool operator==(const Model&, const Model&) = default;
};

/// A zero-initialized model, mostly for tests and explanations.
Model make_model(ConceptId concept_id, FeatureSpace features = {});

struct LabeledText {
    std::string text;
    Polarity label = Polarity::pos;
};

std::vector<LabeledText> labeled_texts(const ItemSet& set);

/// One training example in feature space; y is 1 for pos.
struct Example {
    FeatureVector x;
    double y = 0.0;
    double weight = 1.0;
};

/// Weighted mean binary cross-entropy. `params` holds the dim weights
/// followed by the bias.
double batch_loss(std::span<const double> params, std::span<const Example> batch);

/// Same loss, plus its gradient written to `grad` (same layout as params).
double batch_loss_and_gradient(std::span<const double> params, std::span<const Example> batch,
                               std::span<double> grad);

/// Adam with bias correction over a flat parameter vector.
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grad);
    std::uint64_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    double beta1_pow_ = 1.0;
    double beta2_pow_ = 1.0;
    std::vector<double> m_, v_;
};

/// Tracks validation loss. The best epoch is the one with the lowest loss;
/// training stops once more than `patience` consecutive epochs fail to beat
/// the best loss by more than `min_delta`.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience, double min_delta = 0.0);

    /// Records the loss of `epoch` (1-based); returns true on a new lowest loss.
    bool update(int epoch, double val_loss);
    bool should_stop() const noexcept { return bad_epochs_ > patience_; }
    int best_epoch() const noexcept { return best_epoch_; }
    double best_loss() const noexcept { return best_loss_; }

private:
    int patience_;
    double min_delta_;
    int bad_epochs_ = 0;
    int best_epoch_ = 0;
    double best_loss_;
};

/// Called after each epoch with (epoch, train_loss, val_loss).
using EpochCallback = std::function<void(int, double, double)>;

/// Minibatch Adam on mean BCE with early stopping on validation loss;
/// returns the parameters of the best validation epoch.
Model train(const ConceptId& concept_id, std::span<const LabeledText> train_set, std::span<const LabeledText> val_set,
            const TrainConfig& config, const EpochCallback& on_epoch = {});

Model train(const ItemSet& train_set, const ItemSet& val_set, const TrainConfig& config,
            const EpochCallback& on_epoch = {});

struct Prediction {
    Polarity label = Polarity::pos;
    double p_pos = 0.5;
};

double sigmoid(double z) noexcept;
double logit(const Model& model, const FeatureVector& x);
Prediction predict(const Model& model, const std::string& text);
Prediction predict_tokens(const Model& model, const TokenSeq& seq);
std::vector<Prediction> predict_batch(const Model& model, std::span<const std::string> texts);

void save_model(std::ostream& out, const Model& model);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(std::istream& in, const std::string& source = "<stream>");
Model load_model(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace psychoseed
