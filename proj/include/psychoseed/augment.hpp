#pragma once

#include "psychoseed/common.hpp"
#include "psychoseed/corpus.hpp"
#include "psychoseed/rng.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace psychoseed {

struct AugmentationConfig {
    double alpha_sr = 0.1;
    double alpha_ri = 0.1;
    double alpha_rs = 0.1;
    double p_rd = 0.3;
    int n_per_op = 5;
    int max_paraphrases = 50;
    int gen_count_per_label = 3000;
    int gen_max_tokens = 100;
    double gen_temperature = 1.5;
    bool dedup = true;
    std::uint64_t seed = 42;

    /// Throws Error when a rate is outside [0, 1] or a count is negative.
    void validate() const;
};

/// Word -> synonyms map with a stopword list. Lookups are case-insensitive.
class SynonymLexicon {
public:
    SynonymLexicon() = default;

    /// Adds synonyms for `word`, skipping the word itself and repeats.
    void add(const std::string& word, const std::vector<std::string>& synonyms);
    void add_stopword(const std::string& word);

    const std::vector<std::string>* synonyms(const std::string& word) const;
    bool is_stopword(const std::string& word) const;
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    /// TSV lexicon (word TAB comma-separated synonyms) and an optional
    /// newline-delimited stopword file.
    static SynonymLexicon load(const std::filesystem::path& tsv,
                               const std::filesystem::path& stopwords = {});

private:
    std::map<std::string, std::vector<std::string>> entries_;
    std::set<std::string> stopwords_;
};

/// Number of edits for a rate applied to a sentence: max(1, round(alpha * n)).
std::size_t edit_count(double alpha, std::size_t word_count);

std::string synonym_replacement(const std::string& text, double alpha, const SynonymLexicon& lexicon, Rng& rng);
std::string random_insertion(const std::string& text, double alpha, const SynonymLexicon& lexicon, Rng& rng);
std::string random_swap(const std::string& text, double alpha, Rng& rng);
std::string random_deletion(const std::string& text, double p, Rng& rng);

/// 4 x n_per_op EDA variants of an original item. Each variant draws from
/// its own stream derived from (seed, item id, operation, repetition).
std::vector<Item> eda_augment(const Item& item, const AugmentationConfig& config, const SynonymLexicon& lexicon);

/// Client side of the paraphrase/generation service protocol.
class GenerationAdapter {
public:
    virtual ~GenerationAdapter() = default;

    virtual std::vector<std::string> paraphrase(const std::string& text, int max_variants, std::uint64_t seed) = 0;

    virtual std::vector<std::string> generate(const ConceptId& concept_id, Polarity polarity, int count,
                                              int max_tokens, double temperature, std::uint64_t seed) = 0;
};

/// Deterministic stand-in for the real paraphrase/generation models.
class MockAdapter final : public GenerationAdapter {
public:
    std::vector<std::string> paraphrase(const std::string& text, int max_variants, std::uint64_t seed) override;
    std::vector<std::string> generate(const ConceptId& concept_id, Polarity polarity, int count, int max_tokens,
                                      double temperature, std::uint64_t seed) override;
};

/// JSON-over-HTTP adapter: POST /paraphrase and POST /generate.
class HttpAdapter final : public GenerationAdapter {
public:
    explicit HttpAdapter(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(60));

    std::vector<std::string> paraphrase(const std::string& text, int max_variants, std::uint64_t seed) override;
    std::vector<std::string> generate(const ConceptId& concept_id, Polarity polarity, int count, int max_tokens,
                                      double temperature, std::uint64_t seed) override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

/// "mock" yields a MockAdapter, anything else is treated as a base URL.
std::unique_ptr<GenerationAdapter> make_adapter(const std::string& spec,
                                                std::chrono::milliseconds timeout = std::chrono::seconds(60));

/// Up to max_paraphrases variants with inherited label. Adapter failures
/// surface as AdapterError carrying the item id; nothing is kept for that item.
std::vector<Item> paraphrase_augment(const Item& item, GenerationAdapter& adapter, int max_paraphrases,
                                     std::uint64_t seed = 42);

std::vector<Item> generate_items(const ConceptId& concept_id, Polarity polarity, GenerationAdapter& adapter,
                                 const AugmentationConfig& config);

enum class AugmentMethod { none, eda, paraphrase, generate };

std::string_view to_string(AugmentMethod m) noexcept;
AugmentMethod parse_augment_method(std::string_view s);

/// Augments every original item of `set` and returns originals followed by
/// the new items. Items are processed on `threads` workers; output order and
/// content do not depend on the thread count. With config.dedup, augmented
/// items whose text repeats an earlier item of the concept are dropped.
ItemSet augment_set(const ItemSet& set, AugmentMethod method, const AugmentationConfig& config,
                    const SynonymLexicon* lexicon, GenerationAdapter* adapter, unsigned threads = 1);

/// Drops augmented items whose exact text already appeared earlier in the set.
ItemSet dedup_set(const ItemSet& set);

}  // namespace psychoseed
