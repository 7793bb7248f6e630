#include "psychoseed/classifier.hpp"

#include "psychoseed/rng.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace psychoseed {
namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

void add_hashed(const std::string& key, std::uint32_t mask, std::vector<std::pair<std::uint32_t, float>>& out) {
    const std::uint64_t bucket = fnv1a64(key);
    const std::uint64_t sign = fnv1a64(key, kSignBasis);
    out.emplace_back(static_cast<std::uint32_t>(bucket & mask), (sign >> 63) != 0 ? -1.0f : 1.0f);
}

/// Numerically stable BCE on a logit.
double bce(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

double dot(std::span<const double> params, const FeatureVector& x) {
    double z = params.back();
    for (std::size_t k = 0; k < x.indices.size(); ++k) z += params[x.indices[k]] * x.values[k];
    return z;
}

template <typename Get>
double loss_impl(std::span<const double> params, std::size_t n, Get&& get, std::span<double> grad) {
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Example& ex = get(i);
        if (ex.x.dim + 1 != params.size()) throw Error("feature dimension does not match parameters");
        const double z = dot(params, ex.x);
        total += ex.weight * bce(z, ex.y);
        weight_sum += ex.weight;
        if (want_grad) {
            const double g = ex.weight * (sigmoid(z) - ex.y);
            for (std::size_t k = 0; k < ex.x.indices.size(); ++k) grad[ex.x.indices[k]] += g * ex.x.values[k];
            grad.back() += g;
        }
    }
    if (weight_sum <= 0.0) throw Error("empty batch");
    if (want_grad) {
        for (double& g : grad) g /= weight_sum;
    }
    return total / weight_sum;
}

std::uint32_t to_le_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

json space_to_json(const FeatureSpace& s) {
    json j = {{"kind", s.kind == FeatureSpace::Kind::hashed ? "hashed" : "remote"}, {"ngrams", s.ngrams}};
    if (s.kind == FeatureSpace::Kind::remote) j["endpoint"] = s.endpoint;
    return j;
}

std::vector<Example> make_examples(const FeatureSpace& space, std::span<const LabeledText> data, bool balance) {
    std::vector<std::string> texts;
    texts.reserve(data.size());
    for (const auto& d : data) texts.push_back(d.text);
    auto features = encode_texts(space, texts);

    std::size_t n_pos = 0;
    for (const auto& d : data) n_pos += d.label == Polarity::pos ? 1 : 0;
    const std::size_t n_neg = data.size() - n_pos;
    const double n = static_cast<double>(data.size());

    std::vector<Example> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i].x = std::move(features[i]);
        out[i].y = data[i].label == Polarity::pos ? 1.0 : 0.0;
        if (balance) {
            const std::size_t n_class = data[i].label == Polarity::pos ? n_pos : n_neg;
            out[i].weight = n_class > 0 ? n / (2.0 * static_cast<double>(n_class)) : 1.0;
        }
    }
    return out;
}

}  // namespace

std::string unigram_key(const std::string& token) { return "u\x1f" + token; }

std::string bigram_key(const std::string& left, const std::string& right) {
    return "b\x1f" + left + "\x1f" + right;
}

FeatureVector featurize(const TokenSeq& seq, std::uint32_t dim, int ngrams) {
    if (dim == 0 || !std::has_single_bit(dim)) throw Error("feature dimension must be a power of two");
    if (ngrams != 1 && ngrams != 2) throw Error("ngrams must be 1 or 2");
    const std::uint32_t mask = dim - 1;

    std::vector<std::pair<std::uint32_t, float>> raw;
    raw.reserve(seq.tokens.size() * 2);
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        add_hashed(unigram_key(seq.tokens[i]), mask, raw);
        if (ngrams == 2 && i + 1 < seq.tokens.size()) add_hashed(bigram_key(seq.tokens[i], seq.tokens[i + 1]), mask, raw);
    }
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    FeatureVector fv;
    fv.dim = dim;
    for (std::size_t i = 0; i < raw.size();) {
        float v = 0.0f;
        const std::uint32_t idx = raw[i].first;
        for (; i < raw.size() && raw[i].first == idx; ++i) v += raw[i].second;
        if (v != 0.0f) {
            fv.indices.push_back(idx);
            fv.values.push_back(v);
        }
    }
    return fv;
}

void FeatureSpace::validate() const {
    if (kind == Kind::hashed) {
        if (dim == 0 || !std::has_single_bit(dim)) throw Error("feature dimension must be a power of two");
        if (ngrams != 1 && ngrams != 2) throw Error("ngrams must be 1 or 2");
    } else {
        if (endpoint.empty()) throw Error("remote feature space needs an encoder endpoint");
        if (dim == 0) throw Error("embedding dimension must be positive");
    }
}

std::vector<FeatureVector> encode_texts(const FeatureSpace& space, std::span<const std::string> texts) {
    std::vector<FeatureVector> out;
    out.reserve(texts.size());
    if (space.kind == FeatureSpace::Kind::hashed) {
        for (const auto& t : texts) out.push_back(featurize(tokenize(t), space.dim, space.ngrams));
        return out;
    }
    if (texts.empty()) return out;

    httplib::Client client(space.endpoint);
    client.set_read_timeout(120, 0);
    auto res = client.Post("/encode", json{{"texts", texts}}.dump(), "application/json");
    if (!res) throw AdapterError("", "POST " + space.endpoint + "/encode failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw AdapterError("", "POST /encode: HTTP " + std::to_string(res->status));
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw AdapterError("", "POST /encode returned non-JSON body");
    }
    if (!reply.contains("embeddings") || !reply["embeddings"].is_array() || reply["embeddings"].size() != texts.size()) {
        throw AdapterError("", "POST /encode: expected one embedding per text");
    }
    for (const auto& emb : reply["embeddings"]) {
        if (!emb.is_array() || emb.size() != space.dim) {
            throw AdapterError("", "POST /encode: embedding size differs from " + std::to_string(space.dim));
        }
        FeatureVector fv;
        fv.dim = space.dim;
        for (std::uint32_t k = 0; k < space.dim; ++k) {
            fv.indices.push_back(k);
            fv.values.push_back(emb[k].get<float>());
        }
        out.push_back(std::move(fv));
    }
    return out;
}

FeatureVector encode_tokens(const FeatureSpace& space, const TokenSeq& seq) {
    if (space.kind == FeatureSpace::Kind::hashed) return featurize(seq, space.dim, space.ngrams);
    const std::string text = join_words(seq.tokens);
    return encode_texts(space, std::span<const std::string>(&text, 1)).front();
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (max_epochs < 1) throw Error("max_epochs must be >= 1");
    if (patience < 0) throw Error("patience must be >= 0");
    if (!(min_delta >= 0.0)) throw Error("min_delta must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw Error("Adam betas must be in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw Error("adam_eps must be > 0");
    features.validate();
}

Model make_model(ConceptId concept_id, FeatureSpace features) {
    features.validate();
    Model m;
    m.concept_id = std::move(concept_id);
    m.features = std::move(features);
    m.weights.assign(m.features.dim, 0.0f);
    return m;
}

std::vector<LabeledText> labeled_texts(const ItemSet& set) {
    std::vector<LabeledText> out;
    out.reserve(set.items.size());
    for (const auto& item : set.items) out.push_back({item.text, item.polarity});
    return out;
}

double batch_loss(std::span<const double> params, std::span<const Example> batch) {
    return loss_impl(params, batch.size(), [&](std::size_t i) -> const Example& { return batch[i]; }, {});
}

double batch_loss_and_gradient(std::span<const double> params, std::span<const Example> batch,
                               std::span<double> grad) {
    if (grad.size() != params.size()) throw Error("gradient buffer size mismatch");
    return loss_impl(params, batch.size(), [&](std::size_t i) -> const Example& { return batch[i]; }, grad);
}

AdamOptimizer::AdamOptimizer(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw Error("Adam: size mismatch");
    ++t_;
    beta1_pow_ *= beta1_;
    beta2_pow_ *= beta2_;
    const double c1 = 1.0 - beta1_pow_;
    const double c2 = 1.0 - beta2_pow_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta), best_loss_(INFINITY) {}

bool EarlyStopping::update(int epoch, double val_loss) {
    if (val_loss < best_loss_ - min_delta_) {
        bad_epochs_ = 0;
    } else {
        ++bad_epochs_;
    }
    if (val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch;
        return true;
    }
    return false;
}

Model train(const ConceptId& concept_id, std::span<const LabeledText> train_set, std::span<const LabeledText> val_set,
            const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw Error("training set for '" + concept_id.str() + "' is empty");
    if (val_set.empty()) throw Error("validation set for '" + concept_id.str() + "' is empty");
    const auto n_pos = std::count_if(train_set.begin(), train_set.end(),
                                     [](const LabeledText& t) { return t.label == Polarity::pos; });
    if (n_pos == 0 || static_cast<std::size_t>(n_pos) == train_set.size()) {
        throw Error("training set for '" + concept_id.str() + "' contains a single class");
    }

    const auto train_ex = make_examples(config.features, train_set, config.balance_classes);
    const auto val_ex = make_examples(config.features, val_set, config.balance_classes);
    const std::size_t n_params = static_cast<std::size_t>(config.features.dim) + 1;

    std::vector<double> params(n_params, 0.0);
    std::vector<double> grad(n_params, 0.0);
    std::vector<double> best = params;
    AdamOptimizer adam(n_params, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
    EarlyStopping stopper(config.patience, config.min_delta);

    std::vector<std::size_t> order(train_ex.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(config.batch_size);

    int epoch = 0;
    while (epoch < config.max_epochs) {
        ++epoch;
        Rng rng(derive_seed(config.seed, {"epoch", concept_id.str()}, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order.begin(), order.end());

        double train_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t n = std::min(batch, order.size() - start);
            const double loss = loss_impl(
                params, n, [&](std::size_t i) -> const Example& { return train_ex[order[start + i]]; }, grad);
            if (!std::isfinite(loss)) {
                throw Error("training '" + concept_id.str() + "' diverged at epoch " + std::to_string(epoch));
            }
            train_loss += loss * static_cast<double>(n);
            adam.step(params, grad);
        }
        train_loss /= static_cast<double>(order.size());

        const double val_loss = batch_loss(params, val_ex);
        if (!std::isfinite(val_loss)) {
            throw Error("training '" + concept_id.str() + "' diverged at epoch " + std::to_string(epoch));
        }
        if (on_epoch) on_epoch(epoch, train_loss, val_loss);
        if (stopper.update(epoch, val_loss)) best = params;
        if (stopper.should_stop()) break;
    }

    Model model;
    model.concept_id = concept_id;
    model.features = config.features;
    model.weights.resize(config.features.dim);
    std::transform(best.begin(), best.end() - 1, model.weights.begin(), [](double w) { return static_cast<float>(w); });
    model.bias = best.back();
    model.meta = TrainMeta{epoch, stopper.best_epoch(), stopper.best_loss(), config.seed};
    return model;
}

Model train(const ItemSet& train_set, const ItemSet& val_set, const TrainConfig& config, const EpochCallback& on_epoch) {
    const auto tr = labeled_texts(train_set);
    const auto va = labeled_texts(val_set);
    return train(train_set.concept_id, tr, va, config, on_epoch);
}

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(const Model& model, const FeatureVector& x) {
    if (x.dim != model.features.dim) throw Error("feature dimension does not match model");
    double z = model.bias;
    for (std::size_t k = 0; k < x.indices.size(); ++k) {
        z += static_cast<double>(model.weights[x.indices[k]]) * static_cast<double>(x.values[k]);
    }
    return z;
}

namespace {
Prediction from_logit(double z) {
    const double p = sigmoid(z);
    return Prediction{p >= 0.5 ? Polarity::pos : Polarity::neg, p};
}
}  // namespace

Prediction predict_tokens(const Model& model, const TokenSeq& seq) {
    return from_logit(logit(model, encode_tokens(model.features, seq)));
}

Prediction predict(const Model& model, const std::string& text) {
    if (model.features.kind == FeatureSpace::Kind::hashed) return predict_tokens(model, tokenize(text));
    return from_logit(logit(model, encode_texts(model.features, std::span<const std::string>(&text, 1)).front()));
}

std::vector<Prediction> predict_batch(const Model& model, std::span<const std::string> texts) {
    std::vector<Prediction> out;
    out.reserve(texts.size());
    if (model.features.kind == FeatureSpace::Kind::hashed) {
        for (const auto& t : texts) out.push_back(predict(model, t));
        return out;
    }
    for (const auto& fv : encode_texts(model.features, texts)) out.push_back(from_logit(logit(model, fv)));
    return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw Error("invalid base64 length");
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw Error("invalid base64 data");
    std::size_t padding = 0;
    if (!text.empty() && text.back() == '=') ++padding;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

void save_model(std::ostream& out, const Model& model) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(model.weights.size() * 4);
    for (float w : model.weights) {
        const std::uint32_t b = to_le_bits(w);
        for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<std::uint8_t>(b >> s));
    }
    const json j = {{"format", "psychoseed-model"},
                    {"version", kModelFormatVersion},
                    {"concept", model.concept_id.str()},
                    {"D", model.features.dim},
                    {"features", space_to_json(model.features)},
                    {"bias", model.bias},
                    {"weights", base64_encode(bytes)},
                    {"train_meta",
                     {{"epochs_run", model.meta.epochs_run},
                      {"best_epoch", model.meta.best_epoch},
                      {"final_val_loss", model.meta.final_val_loss},
                      {"seed", model.meta.seed}}}};
    out << j.dump() << '\n';
}

void save_model(const std::filesystem::path& path, const Model& model) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model '" + path.string() + "'");
    save_model(out, model);
}

Model load_model(std::istream& in, const std::string& source) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": malformed model file: " + e.what());
    }
    try {
        if (j.at("format") != "psychoseed-model") throw Error("not a psychoseed model");
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw Error("unsupported model version " + j.at("version").dump());
        }
        Model m;
        m.concept_id = ConceptId(j.at("concept").get<std::string>());
        const json& f = j.at("features");
        const std::string kind = f.at("kind").get<std::string>();
        if (kind == "hashed") {
            m.features.kind = FeatureSpace::Kind::hashed;
        } else if (kind == "remote") {
            m.features.kind = FeatureSpace::Kind::remote;
            m.features.endpoint = f.at("endpoint").get<std::string>();
        } else {
            throw Error("unknown feature space '" + kind + "'");
        }
        m.features.ngrams = f.at("ngrams").get<int>();
        m.features.dim = j.at("D").get<std::uint32_t>();
        m.features.validate();
        m.bias = j.at("bias").get<double>();

        const auto bytes = base64_decode(j.at("weights").get<std::string>());
        if (bytes.size() != static_cast<std::size_t>(m.features.dim) * 4) {
            throw Error("weight payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(static_cast<std::size_t>(m.features.dim) * 4));
        }
        m.weights.resize(m.features.dim);
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            std::uint32_t b = 0;
            for (int s = 0; s < 4; ++s) b |= static_cast<std::uint32_t>(bytes[4 * i + s]) << (8 * s);
            m.weights[i] = std::bit_cast<float>(b);
            if (!std::isfinite(m.weights[i])) throw Error("non-finite weight at index " + std::to_string(i));
        }
        const json& meta = j.at("train_meta");
        m.meta.epochs_run = meta.at("epochs_run").get<int>();
        m.meta.best_epoch = meta.at("best_epoch").get<int>();
        m.meta.final_val_loss = meta.at("final_val_loss").get<double>();
        m.meta.seed = meta.at("seed").get<std::uint64_t>();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(source + ": " + e.what());
    } catch (const Error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model '" + path.string() + "'");
    return load_model(in, path.string());
}

}  // namespace psychoseed
