#pragma once

#include "psychoseed/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace psychoseed {

struct Item {
    std::string id;
    std::string text;
    ConceptId concept_id;
    Polarity polarity = Polarity::pos;
    Origin origin = Origin::original;
    std::optional<std::string> parent_id;

    friend bool operator==(const Item&, const Item&) = default;
};

/// Items of a single concept in file order. Ids are unique.
struct ItemSet {
    ConceptId concept_id;
    std::vector<Item> items;

    std::size_t size() const noexcept { return items.size(); }
    std::size_t count(Polarity p) const noexcept;
    std::size_t count(Origin o) const noexcept;
};

using ItemCorpus = std::map<ConceptId, ItemSet>;

/// Checks the per-item invariants plus id uniqueness and parent references.
/// Throws Error describing the first violation.
void validate(const ItemSet& set);

ItemCorpus parse_items(std::istream& in, const std::string& source = "<stream>");
ItemCorpus load_items(const std::filesystem::path& path);
void write_items(std::ostream& out, const ItemSet& set);
void save_items(const std::filesystem::path& path, const ItemCorpus& corpus);

/// Sign rule on a truth score in [-0.5, 0.5]; zero is excluded.
GoldLabel derive_label(double score);

struct TruthRecord {
    std::string user_id;
    std::map<ConceptId, double> scores;
};

struct Profile {
    std::string user_id;
    std::vector<std::string> tweets;
    std::map<ConceptId, double> scores;
    std::map<ConceptId, GoldLabel> gold;

    GoldLabel gold_for(const ConceptId& c) const;
};

struct LabelCounts {
    std::size_t pos = 0;
    std::size_t neg = 0;
    std::size_t excluded = 0;
    std::size_t pos_tweets = 0;
    std::size_t neg_tweets = 0;

    friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct ProfileCorpus {
    std::vector<Profile> profiles;
    std::map<ConceptId, LabelCounts> counts;
    std::vector<std::string> warnings;
};

/// Column layout of a colon-separated truth file. Columns named "-" are
/// ignored; every other non-id column is a concept score.
struct TruthColumns {
    std::vector<std::string> names{"user_id",       "gender",       "age_group",  "openness",
                                   "conscientiousness", "extraversion", "agreeableness", "neuroticism"};

    static TruthColumns parse(const std::string& comma_separated);
};

struct ProfileLoadOptions {
    TruthColumns columns;
    bool normalize = false;
    /// Concepts every truth record must cover; empty means no check.
    std::vector<ConceptId> required_concepts;
};

std::vector<TruthRecord> load_truth(const std::filesystem::path& path, const TruthColumns& columns = {});

/// Reads profiles.jsonl and joins it with truth records. Without a truth
/// path the inline "scores" of each profile line are used.
ProfileCorpus load_profiles(const std::filesystem::path& tweets_path,
                            const std::optional<std::filesystem::path>& truth_path,
                            const ProfileLoadOptions& options = {});

/// Builds the gold labels and per-concept counts of already joined profiles.
std::map<ConceptId, LabelCounts> count_labels(const std::vector<Profile>& profiles);

void save_profiles(const std::filesystem::path& path, const std::vector<Profile>& profiles);

/// Reads one PAN author XML file (one <document> per tweet).
std::vector<std::string> read_pan_author(const std::filesystem::path& xml_path);

/// Converts a PAN directory of <user>.xml files plus its truth file into
/// profiles carrying scores and gold labels.
ProfileCorpus convert_pan(const std::filesystem::path& xml_dir, const std::filesystem::path& truth_path,
                          const ProfileLoadOptions& options = {});

struct SplitSpec {
    double ratio = 0.8;
    std::uint64_t seed = 42;
    bool group_by_parent = true;
};

/// Group-aware split: an original item and all its descendants land on the
/// same side. Items keep their relative order within each part.
std::pair<ItemSet, ItemSet> split_items(const ItemSet& set, const SplitSpec& spec);

struct ProfileSplit {
    std::vector<Profile> test;
    std::vector<Profile> train;
    std::vector<Profile> val;
};

/// 50% test, then 90/10 train/val of the remainder, round-half-up with at
/// least one profile per part. Input order is kept within each part.
ProfileSplit split_profiles(const std::vector<Profile>& profiles, std::uint64_t seed);

struct ProfileSplitSizes {
    std::size_t test = 0;
    std::size_t train = 0;
    std::size_t val = 0;
};

ProfileSplitSizes profile_split_sizes(std::size_t n);

}  // namespace psychoseed
