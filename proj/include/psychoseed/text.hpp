#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace psychoseed {

/// Lowercase word tokens; never contains an empty string.
struct TokenSeq {
    std::vector<std::string> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// NFC-normalize, lowercase, split on Unicode whitespace, strip leading and
/// trailing punctuation from each token, drop empties.
TokenSeq tokenize(std::string_view text);

/// Splits on Unicode whitespace only; punctuation stays attached.
std::vector<std::string> split_words(std::string_view text);

std::string join_words(const std::vector<std::string>& words, std::string_view sep = " ");

/// Full Unicode lowercase (no normalization).
std::string to_lower(std::string_view text);

/// Uppercases the first code point, leaves the rest untouched.
std::string capitalize_first(std::string_view word);

/// True when the first code point is an uppercase letter.
bool starts_upper(std::string_view word);

/// Lowercase and collapse runs of whitespace into single spaces.
std::string normalize_text(std::string_view text);

/// Trims Unicode whitespace on both ends.
std::string trim(std::string_view text);

}  // namespace psychoseed
