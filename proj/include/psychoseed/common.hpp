#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace psychoseed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; the message carries the path and line number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Failure talking to a paraphrase/generation or encoder service.
class AdapterError : public Error {
public:
    AdapterError(std::string item_id, const std::string& what)
        : Error(item_id.empty() ? what : "item '" + item_id + "': " + what),
          item_id_(std::move(item_id)) {}

    const std::string& item_id() const noexcept { return item_id_; }

private:
    std::string item_id_;
};

enum class Polarity : std::uint8_t { neg = 0, pos = 1 };

/// Gold label of a profile for one concept. Neutral scores are excluded.
enum class GoldLabel : std::uint8_t { neg = 0, pos = 1, excluded = 2 };

enum class Origin : std::uint8_t { original, eda, paraphrase, generated };

/// Lowercase ASCII concept name such as "openness".
class ConceptId {
public:
    ConceptId() = default;
    explicit ConceptId(std::string id);

    const std::string& str() const noexcept { return id_; }
    bool empty() const noexcept { return id_.empty(); }

    friend auto operator<=>(const ConceptId&, const ConceptId&) = default;

private:
    std::string id_;
};

inline constexpr std::string_view kBigFive[] = {
    "openness", "conscientiousness", "extraversion", "agreeableness", "neuroticism"};

std::string_view to_string(Polarity p) noexcept;
std::string_view to_string(GoldLabel g) noexcept;
std::string_view to_string(Origin o) noexcept;

Polarity parse_polarity(std::string_view s);
Origin parse_origin(std::string_view s);

inline std::optional<Polarity> as_polarity(GoldLabel g) noexcept {
    switch (g) {
    case GoldLabel::pos: return Polarity::pos;
    case GoldLabel::neg: return Polarity::neg;
    default: return std::nullopt;
    }
}

}  // namespace psychoseed
