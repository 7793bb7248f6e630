#include "psychoseed/corpus.hpp"

#include "psychoseed/rng.hpp"
#include "psychoseed/text.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace psychoseed {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string where(const std::string& source, std::size_t line_no) {
    return source + ":" + std::to_string(line_no);
}

const json& require(const json& obj, const char* key, const std::string& at) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(at + ": missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& at) {
    const json& v = require(obj, key, at);
    if (!v.is_string()) throw ParseError(at + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

Item item_from_json(const json& j, const std::string& at) {
    if (!j.is_object()) throw ParseError(at + ": expected a JSON object");
    Item item;
    item.id = require_string(j, "id", at);
    item.text = require_string(j, "text", at);
    try {
        item.concept_id = ConceptId(require_string(j, "concept", at));
        item.polarity = parse_polarity(require_string(j, "polarity", at));
        if (auto it = j.find("origin"); it != j.end() && !it->is_null()) {
            item.origin = parse_origin(it->get<std::string>());
        }
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(at + ": " + e.what());
    }
    if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError(at + ": field 'parent_id' must be a string");
        item.parent_id = it->get<std::string>();
    }
    return item;
}

json item_to_json(const Item& item) {
    json j = {{"id", item.id},
              {"text", item.text},
              {"concept", item.concept_id.str()},
              {"polarity", to_string(item.polarity)},
              {"origin", to_string(item.origin)}};
    if (item.parent_id) j["parent_id"] = *item.parent_id;
    return j;
}

std::map<ConceptId, double> scores_from_json(const json& j, const std::string& at) {
    if (!j.is_object()) throw ParseError(at + ": 'scores' must be an object");
    std::map<ConceptId, double> scores;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw ParseError(at + ": score for '" + key + "' must be a number");
        try {
            scores.emplace(ConceptId(key), value.get<double>());
        } catch (const Error& e) {
            throw ParseError(at + ": " + e.what());
        }
    }
    return scores;
}

std::vector<std::string> split_on(const std::string& line, const std::string& sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

void collect_documents(const boost::property_tree::ptree& node, std::vector<std::string>& out) {
    for (const auto& [name, child] : node) {
        if (name == "document") {
            out.push_back(child.get_value<std::string>());
        } else if (name != "<xmlattr>") {
            collect_documents(child, out);
        }
    }
}

/// Joins profile lines with truth scores and fills gold labels and counts.
ProfileCorpus finish_profiles(std::vector<Profile> profiles, const ProfileLoadOptions& options,
                              std::vector<std::string> warnings) {
    for (auto& p : profiles) {
        for (const auto& c : options.required_concepts) {
            if (!p.scores.contains(c)) {
                throw Error("truth record for user '" + p.user_id + "' has no score for '" + c.str() + "'");
            }
        }
        p.gold.clear();
        for (const auto& [c, s] : p.scores) {
            try {
                p.gold.emplace(c, derive_label(s));
            } catch (const Error& e) {
                throw Error("user '" + p.user_id + "', concept '" + c.str() + "': " + e.what());
            }
        }
    }
    ProfileCorpus corpus;
    corpus.counts = count_labels(profiles);
    corpus.profiles = std::move(profiles);
    corpus.warnings = std::move(warnings);
    return corpus;
}

/// Drops blank tweets, applies optional normalization, rejects empty profiles.
void clean_tweets(Profile& p, bool normalize, std::vector<std::string>& warnings) {
    std::vector<std::string> kept;
    kept.reserve(p.tweets.size());
    std::size_t dropped = 0;
    for (auto& t : p.tweets) {
        if (trim(t).empty()) {
            ++dropped;
            continue;
        }
        kept.push_back(normalize ? normalize_text(t) : std::move(t));
    }
    if (dropped > 0) {
        warnings.push_back("user '" + p.user_id + "': dropped " + std::to_string(dropped) + " blank tweet(s)");
    }
    if (kept.empty()) throw Error("user '" + p.user_id + "' has no non-blank tweets");
    p.tweets = std::move(kept);
}

}  // namespace

std::size_t ItemSet::count(Polarity p) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [p](const Item& i) { return i.polarity == p; }));
}

std::size_t ItemSet::count(Origin o) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [o](const Item& i) { return i.origin == o; }));
}

void validate(const ItemSet& set) {
    std::unordered_map<std::string, const Item*> by_id;
    by_id.reserve(set.items.size());
    for (const auto& item : set.items) {
        if (item.concept_id != set.concept_id) {
            throw Error("item '" + item.id + "' has concept '" + item.concept_id.str() + "' in set '" +
                        set.concept_id.str() + "'");
        }
        if (item.id.empty()) throw Error("item with empty id");
        if (trim(item.text).empty()) throw Error("item '" + item.id + "' has empty text");
        const bool needs_parent = item.origin == Origin::eda || item.origin == Origin::paraphrase;
        if (needs_parent && !item.parent_id) {
            throw Error("item '" + item.id + "' (" + std::string(to_string(item.origin)) + ") has no parent_id");
        }
        if (!needs_parent && item.parent_id) {
            throw Error("item '" + item.id + "' (" + std::string(to_string(item.origin)) +
                        ") must not have a parent_id");
        }
        if (!by_id.emplace(item.id, &item).second) throw Error("duplicate item id '" + item.id + "'");
    }
    for (const auto& item : set.items) {
        if (!item.parent_id) continue;
        auto it = by_id.find(*item.parent_id);
        if (it == by_id.end()) {
            throw Error("item '" + item.id + "' references unknown parent '" + *item.parent_id + "'");
        }
        if (it->second->origin != Origin::original) {
            throw Error("item '" + item.id + "' has non-original parent '" + *item.parent_id + "'");
        }
        if (it->second->polarity != item.polarity) {
            throw Error("item '" + item.id + "' polarity differs from its parent '" + *item.parent_id + "'");
        }
    }
}

ItemCorpus parse_items(std::istream& in, const std::string& source) {
    ItemCorpus corpus;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const std::string at = where(source, line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(at + ": malformed JSON: " + e.what());
        }
        Item item = item_from_json(j, at);
        if (trim(item.text).empty()) throw ParseError(at + ": empty text for item '" + item.id + "'");
        if (!ids.insert(item.id).second) throw ParseError(at + ": duplicate id '" + item.id + "'");
        auto [it, inserted] = corpus.try_emplace(item.concept_id);
        if (inserted) it->second.concept_id = item.concept_id;
        it->second.items.push_back(std::move(item));
    }
    if (corpus.empty()) throw ParseError(source + ": no items");
    for (const auto& [c, set] : corpus) {
        try {
            validate(set);
        } catch (const Error& e) {
            throw ParseError(source + ": " + e.what());
        }
    }
    return corpus;
}

ItemCorpus load_items(const fs::path& path) {
    auto in = open_in(path);
    return parse_items(in, path.string());
}

void write_items(std::ostream& out, const ItemSet& set) {
    for (const auto& item : set.items) out << item_to_json(item).dump() << '\n';
}

void save_items(const fs::path& path, const ItemCorpus& corpus) {
    auto out = open_out(path);
    for (const auto& [c, set] : corpus) write_items(out, set);
}

GoldLabel derive_label(double score) {
    if (!std::isfinite(score)) throw Error("truth score is not finite");
    if (score < -0.5 || score > 0.5) {
        std::ostringstream msg;
        msg << "truth score " << score << " outside [-0.5, 0.5]";
        throw Error(msg.str());
    }
    if (score > 0.0) return GoldLabel::pos;
    if (score < 0.0) return GoldLabel::neg;
    return GoldLabel::excluded;
}

GoldLabel Profile::gold_for(const ConceptId& c) const {
    auto it = gold.find(c);
    if (it == gold.end()) throw Error("user '" + user_id + "' has no gold label for '" + c.str() + "'");
    return it->second;
}

TruthColumns TruthColumns::parse(const std::string& comma_separated) {
    TruthColumns cols;
    cols.names = split_on(comma_separated, ",");
    for (auto& n : cols.names) n = trim(n);
    if (std::count(cols.names.begin(), cols.names.end(), "user_id") != 1) {
        throw Error("truth column map must name 'user_id' exactly once");
    }
    return cols;
}

std::vector<TruthRecord> load_truth(const fs::path& path, const TruthColumns& columns) {
    auto in = open_in(path);
    const bool jsonl = path.extension() == ".jsonl" || path.extension() == ".json";
    std::vector<TruthRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        const std::string at = where(path.string(), line_no);
        TruthRecord rec;
        if (jsonl) {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(at + ": malformed JSON: " + e.what());
            }
            rec.user_id = require_string(j, "user_id", at);
            rec.scores = scores_from_json(require(j, "scores", at), at);
        } else {
            const std::string sep = line.find(":::") != std::string::npos ? ":::" : ":";
            const auto fields = split_on(line, sep);
            if (fields.size() != columns.names.size()) {
                throw ParseError(at + ": expected " + std::to_string(columns.names.size()) + " fields, got " +
                                 std::to_string(fields.size()));
            }
            for (std::size_t i = 0; i < fields.size(); ++i) {
                const std::string& name = columns.names[i];
                if (name == "user_id") {
                    rec.user_id = trim(fields[i]);
                } else if (name == "-" || name == "gender" || name == "age_group") {
                    continue;
                } else {
                    std::size_t used = 0;
                    double v = 0.0;
                    try {
                        v = std::stod(fields[i], &used);
                    } catch (const std::exception&) {
                        used = 0;
                    }
                    if (used == 0) throw ParseError(at + ": bad score '" + fields[i] + "' for '" + name + "'");
                    rec.scores[ConceptId(name)] = v;
                }
            }
        }
        if (rec.user_id.empty()) throw ParseError(at + ": empty user id");
        records.push_back(std::move(rec));
    }
    return records;
}

std::map<ConceptId, LabelCounts> count_labels(const std::vector<Profile>& profiles) {
    std::map<ConceptId, LabelCounts> counts;
    for (const auto& p : profiles) {
        for (const auto& [c, g] : p.gold) {
            auto& lc = counts[c];
            switch (g) {
            case GoldLabel::pos:
                ++lc.pos;
                lc.pos_tweets += p.tweets.size();
                break;
            case GoldLabel::neg:
                ++lc.neg;
                lc.neg_tweets += p.tweets.size();
                break;
            case GoldLabel::excluded: ++lc.excluded; break;
            }
        }
    }
    return counts;
}

ProfileCorpus load_profiles(const fs::path& tweets_path, const std::optional<fs::path>& truth_path,
                            const ProfileLoadOptions& options) {
    std::vector<Profile> profiles;
    std::vector<std::string> warnings;
    std::set<std::string> seen;
    {
        auto in = open_in(tweets_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (blank(line)) continue;
            const std::string at = where(tweets_path.string(), line_no);
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(at + ": malformed JSON: " + e.what());
            }
            Profile p;
            p.user_id = require_string(j, "user_id", at);
            const json& tweets = require(j, "tweets", at);
            if (!tweets.is_array()) throw ParseError(at + ": 'tweets' must be an array");
            for (const auto& t : tweets) {
                if (!t.is_string()) throw ParseError(at + ": tweets must be strings");
                p.tweets.push_back(t.get<std::string>());
            }
            if (!truth_path) {
                auto it = j.find("scores");
                if (it == j.end()) throw Error("user '" + p.user_id + "' has no truth record");
                p.scores = scores_from_json(*it, at);
            }
            if (!seen.insert(p.user_id).second) throw ParseError(at + ": duplicate user '" + p.user_id + "'");
            clean_tweets(p, options.normalize, warnings);
            profiles.push_back(std::move(p));
        }
    }

    if (truth_path) {
        std::map<std::string, TruthRecord> truth;
        for (auto& rec : load_truth(*truth_path, options.columns)) {
            const std::string id = rec.user_id;
            if (!truth.emplace(id, std::move(rec)).second) {
                throw ParseError(truth_path->string() + ": duplicate truth record for '" + id + "'");
            }
        }
        for (auto& p : profiles) {
            auto it = truth.find(p.user_id);
            if (it == truth.end()) throw Error("user '" + p.user_id + "' has no truth record");
            p.scores = it->second.scores;
        }
        for (const auto& [id, rec] : truth) {
            if (!seen.contains(id)) warnings.push_back("truth record for '" + id + "' has no tweets; skipped");
        }
    }
    return finish_profiles(std::move(profiles), options, std::move(warnings));
}

void save_profiles(const fs::path& path, const std::vector<Profile>& profiles) {
    auto out = open_out(path);
    for (const auto& p : profiles) {
        json scores = json::object();
        for (const auto& [c, s] : p.scores) scores[c.str()] = s;
        out << json{{"user_id", p.user_id}, {"tweets", p.tweets}, {"scores", scores}}.dump() << '\n';
    }
}

std::vector<std::string> read_pan_author(const fs::path& xml_path) {
    boost::property_tree::ptree tree;
    try {
        auto in = open_in(xml_path);
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error& e) {
        throw ParseError(xml_path.string() + ": " + e.what());
    }
    std::vector<std::string> docs;
    collect_documents(tree, docs);
    return docs;
}

ProfileCorpus convert_pan(const fs::path& xml_dir, const fs::path& truth_path, const ProfileLoadOptions& options) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(xml_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::map<std::string, TruthRecord> truth;
    for (auto& rec : load_truth(truth_path, options.columns)) {
        const std::string id = rec.user_id;
        truth.emplace(id, std::move(rec));
    }

    std::vector<Profile> profiles;
    std::vector<std::string> warnings;
    std::set<std::string> seen;
    for (const auto& f : files) {
        Profile p;
        p.user_id = f.stem().string();
        p.tweets = read_pan_author(f);
        auto it = truth.find(p.user_id);
        if (it == truth.end()) throw Error("user '" + p.user_id + "' has no truth record");
        p.scores = it->second.scores;
        clean_tweets(p, options.normalize, warnings);
        seen.insert(p.user_id);
        profiles.push_back(std::move(p));
    }
    for (const auto& [id, rec] : truth) {
        if (!seen.contains(id)) warnings.push_back("truth record for '" + id + "' has no tweets; skipped");
    }
    return finish_profiles(std::move(profiles), options, std::move(warnings));
}

std::pair<ItemSet, ItemSet> split_items(const ItemSet& set, const SplitSpec& spec) {
    if (!(spec.ratio > 0.0 && spec.ratio < 1.0)) throw Error("split ratio must be strictly between 0 and 1");

    // group index per item, groups numbered by first appearance
    std::vector<std::size_t> group_of(set.items.size());
    std::size_t groups = 0;
    if (spec.group_by_parent) {
        std::unordered_map<std::string, std::size_t> original_group;
        for (std::size_t i = 0; i < set.items.size(); ++i) {
            if (!set.items[i].parent_id) {
                group_of[i] = groups++;
                if (set.items[i].origin == Origin::original) original_group.emplace(set.items[i].id, group_of[i]);
            }
        }
        for (std::size_t i = 0; i < set.items.size(); ++i) {
            const auto& parent = set.items[i].parent_id;
            if (!parent) continue;
            auto it = original_group.find(*parent);
            if (it == original_group.end()) {
                throw Error("item '" + set.items[i].id + "': parent '" + *parent + "' is not in the set");
            }
            group_of[i] = it->second;
        }
    } else {
        std::iota(group_of.begin(), group_of.end(), std::size_t{0});
        groups = set.items.size();
    }
    if (groups < 2) throw Error("cannot split '" + set.concept_id.str() + "': fewer than 2 groups");

    const std::size_t n_train = std::clamp<std::size_t>(round_half_up(spec.ratio * static_cast<double>(groups)), 1,
                                                        groups - 1);
    std::vector<std::size_t> order(groups);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(spec.seed, {"split_items", set.concept_id.str()}));
    rng.shuffle(order.begin(), order.end());

    std::vector<bool> in_train(groups, false);
    for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = true;

    std::pair<ItemSet, ItemSet> parts{ItemSet{set.concept_id, {}}, ItemSet{set.concept_id, {}}};
    for (std::size_t i = 0; i < set.items.size(); ++i) {
        (in_train[group_of[i]] ? parts.first : parts.second).items.push_back(set.items[i]);
    }
    return parts;
}

ProfileSplitSizes profile_split_sizes(std::size_t n) {
    if (n < 4) throw Error("need at least 4 profiles to split, got " + std::to_string(n));
    ProfileSplitSizes s;
    s.test = std::clamp<std::size_t>((n + 1) / 2, 1, n - 2);
    const std::size_t rest = n - s.test;
    s.train = std::clamp<std::size_t>((9 * rest + 5) / 10, 1, rest - 1);
    s.val = rest - s.train;
    return s;
}

ProfileSplit split_profiles(const std::vector<Profile>& profiles, std::uint64_t seed) {
    const auto sizes = profile_split_sizes(profiles.size());
    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {"split_profiles"}));
    rng.shuffle(order.begin(), order.end());

    // 0 = test, 1 = train, 2 = val
    std::vector<int> part(profiles.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        part[order[k]] = k < sizes.test ? 0 : (k < sizes.test + sizes.train ? 1 : 2);
    }
    ProfileSplit split;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        (part[i] == 0 ? split.test : part[i] == 1 ? split.train : split.val).push_back(profiles[i]);
    }
    return split;
}

}  // namespace psychoseed
