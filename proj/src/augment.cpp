#include "psychoseed/augment.hpp"

#include "psychoseed/parallel.hpp"
#include "psychoseed/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

namespace psychoseed {
namespace {

bool is_candidate(const std::string& word, const SynonymLexicon& lexicon) {
    const std::string key = to_lower(word);
    return !lexicon.is_stopword(key) && lexicon.synonyms(key) != nullptr;
}

const std::vector<std::string>& synonyms_of(const std::string& word, const SynonymLexicon& lexicon) {
    return *lexicon.synonyms(to_lower(word));
}

constexpr const char* kOpNames[] = {"sr", "ri", "rs", "rd"};

}  // namespace

void AugmentationConfig::validate() const {
    auto unit = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(name) + " must be in [0, 1]");
    };
    unit(alpha_sr, "alpha_sr");
    unit(alpha_ri, "alpha_ri");
    unit(alpha_rs, "alpha_rs");
    unit(p_rd, "p_rd");
    if (n_per_op < 0 || max_paraphrases < 0 || gen_count_per_label < 0 || gen_max_tokens < 0) {
        throw Error("augmentation counts must be >= 0");
    }
    if (!(gen_temperature > 0.0)) throw Error("gen_temperature must be > 0");
}

void SynonymLexicon::add(const std::string& word, const std::vector<std::string>& synonyms) {
    const std::string key = to_lower(word);
    if (key.empty()) return;
    auto& list = entries_[key];
    for (const auto& s : synonyms) {
        const std::string syn = trim(s);
        if (syn.empty() || to_lower(syn) == key) continue;
        if (std::find(list.begin(), list.end(), syn) == list.end()) list.push_back(syn);
    }
    if (list.empty()) entries_.erase(key);
}

void SynonymLexicon::add_stopword(const std::string& word) {
    const std::string w = to_lower(trim(word));
    if (!w.empty()) stopwords_.insert(w);
}

const std::vector<std::string>* SynonymLexicon::synonyms(const std::string& word) const {
    auto it = entries_.find(to_lower(word));
    return it == entries_.end() ? nullptr : &it->second;
}

bool SynonymLexicon::is_stopword(const std::string& word) const { return stopwords_.contains(to_lower(word)); }

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& tsv, const std::filesystem::path& stopwords) {
    SynonymLexicon lex;
    std::ifstream in(tsv);
    if (!in) throw Error("cannot open lexicon '" + tsv.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(tsv.string() + ":" + std::to_string(line_no) + ": expected word<TAB>synonyms");
        }
        std::vector<std::string> syns;
        std::string rest = line.substr(tab + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            const auto comma = rest.find(',', start);
            syns.push_back(rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        lex.add(trim(line.substr(0, tab)), syns);
    }
    if (!stopwords.empty()) {
        std::ifstream sw(stopwords);
        if (!sw) throw Error("cannot open stopword file '" + stopwords.string() + "'");
        while (std::getline(sw, line)) lex.add_stopword(line);
    }
    return lex;
}

std::size_t edit_count(double alpha, std::size_t word_count) {
    const auto n = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(word_count) + 0.5));
    return std::max<std::size_t>(1, n);
}

std::string synonym_replacement(const std::string& text, double alpha, const SynonymLexicon& lexicon, Rng& rng) {
    auto words = split_words(text);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (is_candidate(words[i], lexicon)) candidates.push_back(i);
    }
    if (candidates.empty()) return text;

    rng.shuffle(candidates.begin(), candidates.end());
    const std::size_t n = std::min(edit_count(alpha, words.size()), candidates.size());
    for (std::size_t k = 0; k < n; ++k) {
        std::string& w = words[candidates[k]];
        const auto& syns = synonyms_of(w, lexicon);
        std::string replacement = syns[rng.index(syns.size())];
        w = starts_upper(w) ? capitalize_first(replacement) : std::move(replacement);
    }
    return join_words(words);
}

std::string random_insertion(const std::string& text, double alpha, const SynonymLexicon& lexicon, Rng& rng) {
    auto words = split_words(text);
    if (words.empty()) return text;
    const std::size_t n = edit_count(alpha, words.size());
    bool changed = false;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (is_candidate(words[i], lexicon)) candidates.push_back(i);
        }
        if (candidates.empty()) break;
        const auto& syns = synonyms_of(words[candidates[rng.index(candidates.size())]], lexicon);
        std::string synonym = syns[rng.index(syns.size())];
        const std::size_t at = rng.index(words.size() + 1);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), std::move(synonym));
        changed = true;
    }
    return changed ? join_words(words) : text;
}

std::string random_swap(const std::string& text, double alpha, Rng& rng) {
    auto words = split_words(text);
    if (words.size() < 2) return text;
    const std::size_t n = edit_count(alpha, words.size());
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = rng.index(words.size());
        std::size_t j = rng.index(words.size() - 1);
        if (j >= i) ++j;
        std::swap(words[i], words[j]);
    }
    return join_words(words);
}

std::string random_deletion(const std::string& text, double p, Rng& rng) {
    auto words = split_words(text);
    if (words.empty()) return text;
    std::vector<std::string> kept;
    kept.reserve(words.size());
    for (auto& w : words) {
        if (!rng.bernoulli(p)) kept.push_back(w);
    }
    if (kept.size() == words.size()) return text;
    if (kept.empty()) return words[rng.index(words.size())];
    return join_words(kept);
}

std::vector<Item> eda_augment(const Item& item, const AugmentationConfig& config, const SynonymLexicon& lexicon) {
    if (item.origin != Origin::original) {
        throw Error("eda_augment: item '" + item.id + "' is not an original item");
    }
    std::vector<Item> out;
    std::unordered_set<std::string> seen;
    if (config.dedup) seen.insert(item.text);

    for (int op = 0; op < 4; ++op) {
        for (int rep = 0; rep < config.n_per_op; ++rep) {
            Rng rng(derive_seed(config.seed, {item.id, kOpNames[op]}, static_cast<std::uint64_t>(rep)));
            std::string text;
            switch (op) {
            case 0: text = synonym_replacement(item.text, config.alpha_sr, lexicon, rng); break;
            case 1: text = random_insertion(item.text, config.alpha_ri, lexicon, rng); break;
            case 2: text = random_swap(item.text, config.alpha_rs, rng); break;
            default: text = random_deletion(item.text, config.p_rd, rng); break;
            }
            if (config.dedup && !seen.insert(text).second) continue;
            out.push_back(Item{item.id + "~eda-" + kOpNames[op] + "-" + std::to_string(rep), std::move(text),
                               item.concept_id, item.polarity, Origin::eda, item.id});
        }
    }
    return out;
}

std::vector<Item> paraphrase_augment(const Item& item, GenerationAdapter& adapter, int max_paraphrases,
                                     std::uint64_t seed) {
    if (max_paraphrases <= 0) return {};
    if (item.origin != Origin::original) {
        throw Error("paraphrase_augment: item '" + item.id + "' is not an original item");
    }
    std::vector<std::string> variants;
    try {
        variants = adapter.paraphrase(item.text, max_paraphrases, derive_seed(seed, {item.id, "paraphrase"}));
    } catch (const AdapterError& e) {
        throw AdapterError(item.id, e.what());
    } catch (const std::exception& e) {
        throw AdapterError(item.id, e.what());
    }
    if (variants.size() > static_cast<std::size_t>(max_paraphrases)) variants.resize(max_paraphrases);

    std::vector<Item> out;
    std::unordered_set<std::string> seen{trim(item.text)};
    for (std::size_t k = 0; k < variants.size(); ++k) {
        std::string text = trim(variants[k]);
        if (text.empty() || !seen.insert(text).second) continue;
        out.push_back(Item{item.id + "~para-" + std::to_string(k), std::move(text), item.concept_id, item.polarity,
                           Origin::paraphrase, item.id});
    }
    return out;
}

std::vector<Item> generate_items(const ConceptId& concept_id, Polarity polarity, GenerationAdapter& adapter,
                                 const AugmentationConfig& config) {
    if (config.gen_count_per_label <= 0) return {};
    const std::string context = "generate/" + concept_id.str() + "/" + std::string(to_string(polarity));
    std::vector<std::string> texts;
    try {
        texts = adapter.generate(concept_id, polarity, config.gen_count_per_label, config.gen_max_tokens,
                                 config.gen_temperature,
                                 derive_seed(config.seed, {concept_id.str(), to_string(polarity), "generate"}));
    } catch (const AdapterError& e) {
        throw AdapterError(context, e.what());
    } catch (const std::exception& e) {
        throw AdapterError(context, e.what());
    }
    if (texts.size() > static_cast<std::size_t>(config.gen_count_per_label)) {
        texts.resize(config.gen_count_per_label);
    }

    std::vector<Item> out;
    std::unordered_set<std::string> seen;
    for (std::size_t k = 0; k < texts.size(); ++k) {
        auto words = split_words(texts[k]);
        if (words.size() > static_cast<std::size_t>(config.gen_max_tokens)) words.resize(config.gen_max_tokens);
        std::string text = join_words(words);
        if (text.empty()) continue;
        if (config.dedup && !seen.insert(text).second) continue;
        out.push_back(Item{"gen-" + concept_id.str() + "-" + std::string(to_string(polarity)) + "-" + std::to_string(k),
                           std::move(text), concept_id, polarity, Origin::generated, std::nullopt});
    }
    return out;
}

std::string_view to_string(AugmentMethod m) noexcept {
    switch (m) {
    case AugmentMethod::none: return "none";
    case AugmentMethod::eda: return "eda";
    case AugmentMethod::paraphrase: return "paraphrase";
    case AugmentMethod::generate: return "generate";
    }
    return "none";
}

AugmentMethod parse_augment_method(std::string_view s) {
    if (s == "none" || s == "plain") return AugmentMethod::none;
    if (s == "eda") return AugmentMethod::eda;
    if (s == "paraphrase") return AugmentMethod::paraphrase;
    if (s == "generate") return AugmentMethod::generate;
    throw Error("unknown augmentation method '" + std::string(s) + "'");
}

ItemSet dedup_set(const ItemSet& set) {
    std::unordered_set<std::string> seen;
    for (const auto& item : set.items) {
        if (item.origin == Origin::original) seen.insert(item.text);
    }
    ItemSet out{set.concept_id, {}};
    for (const auto& item : set.items) {
        if (item.origin == Origin::original || seen.insert(item.text).second) out.items.push_back(item);
    }
    return out;
}

ItemSet augment_set(const ItemSet& set, AugmentMethod method, const AugmentationConfig& config,
                    const SynonymLexicon* lexicon, GenerationAdapter* adapter, unsigned threads) {
    config.validate();
    ItemSet out = set;
    if (method == AugmentMethod::none) return out;

    if (method == AugmentMethod::generate) {
        if (adapter == nullptr) throw Error("generation requires an adapter");
        for (Polarity p : {Polarity::pos, Polarity::neg}) {
            auto gen = generate_items(set.concept_id, p, *adapter, config);
            out.items.insert(out.items.end(), std::make_move_iterator(gen.begin()), std::make_move_iterator(gen.end()));
        }
    } else {
        if (method == AugmentMethod::eda && lexicon == nullptr) throw Error("EDA requires a synonym lexicon");
        if (method == AugmentMethod::paraphrase && adapter == nullptr) throw Error("paraphrasing requires an adapter");

        std::vector<const Item*> originals;
        for (const auto& item : set.items) {
            if (item.origin == Origin::original) originals.push_back(&item);
        }
        std::vector<std::vector<Item>> produced(originals.size());
        parallel_for(originals.size(), threads, [&](std::size_t i) {
            produced[i] = method == AugmentMethod::eda
                              ? eda_augment(*originals[i], config, *lexicon)
                              : paraphrase_augment(*originals[i], *adapter, config.max_paraphrases, config.seed);
        });
        for (auto& batch : produced) {
            out.items.insert(out.items.end(), std::make_move_iterator(batch.begin()),
                             std::make_move_iterator(batch.end()));
        }
    }
    if (config.dedup) out = dedup_set(out);
    validate(out);
    return out;
}

}  // namespace psychoseed
