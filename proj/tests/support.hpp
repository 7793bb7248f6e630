#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include "psychoseed/corpus.hpp"
#include "psychoseed/rng.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = fs::temp_directory_path() /
                ("psychoseed-" + tag + "-" + std::to_string(psychoseed::mix64(reinterpret_cast<std::uintptr_t>(this))));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// n original items of one concept; the first n_pos are pos.
inline psychoseed::ItemSet original_items(const std::string& concept_name, std::size_t n, std::size_t n_pos,
                                          std::uint64_t seed = 7) {
    static const char* words[] = {"quiet", "people", "often", "enjoy", "plans", "art", "music", "talk",
                                  "worry", "help", "rules", "ideas", "friends", "work", "calm", "new"};
    psychoseed::Rng rng(seed);
    psychoseed::ItemSet set{psychoseed::ConceptId(concept_name), {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::string text = "I";
        const std::size_t len = 3 + rng.index(6);
        for (std::size_t k = 0; k < len; ++k) text += std::string(" ") + words[rng.index(std::size(words))];
        text += " " + std::to_string(i) + ".";
        set.items.push_back(psychoseed::Item{concept_name + "-" + std::to_string(i), text, set.concept_id,
                                             i < n_pos ? psychoseed::Polarity::pos : psychoseed::Polarity::neg,
                                             psychoseed::Origin::original, std::nullopt});
    }
    return set;
}

/// Separable corpus: every pos item contains "alpha", every neg item "beta",
/// the rest are filler words shared by both classes.
inline psychoseed::ItemSet separable_items(std::size_t per_class = 100, std::uint64_t seed = 11) {
    static const char* filler[] = {"the", "cat", "sat", "on", "a", "mat", "while", "dogs", "ran", "over",
                                   "hills", "and", "rivers", "under", "blue", "skies", "green", "fields"};
    psychoseed::Rng rng(seed);
    psychoseed::ItemSet set{psychoseed::ConceptId("synthetic"), {}};
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool pos = i % 2 == 0;
        std::vector<std::string> words;
        const std::size_t len = 4 + rng.index(5);
        for (std::size_t k = 0; k < len; ++k) words.emplace_back(filler[rng.index(std::size(filler))]);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.index(words.size() + 1)), pos ? "alpha" : "beta");
        std::string text;
        for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
        set.items.push_back(psychoseed::Item{"s" + std::to_string(i), text, set.concept_id,
                                             pos ? psychoseed::Polarity::pos : psychoseed::Polarity::neg,
                                             psychoseed::Origin::original, std::nullopt});
    }
    return set;
}

}  // namespace testsupport
