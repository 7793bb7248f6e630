#include "psychoseed/common.hpp"

#include <algorithm>

namespace psychoseed {

ConceptId::ConceptId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) {
        throw Error("concept id must not be empty");
    }
    const bool ok = std::all_of(id_.begin(), id_.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
    if (!ok) {
        throw Error("concept id must be lowercase ASCII: '" + id_ + "'");
    }
}

std::string_view to_string(Polarity p) noexcept {
    return p == Polarity::pos ? "pos" : "neg";
}

std::string_view to_string(GoldLabel g) noexcept {
    switch (g) {
    case GoldLabel::pos: return "pos";
    case GoldLabel::neg: return "neg";
    case GoldLabel::excluded: return "excluded";
    }
    return "excluded";
}

std::string_view to_string(Origin o) noexcept {
    switch (o) {
    case Origin::original: return "original";
    case Origin::eda: return "eda";
    case Origin::paraphrase: return "paraphrase";
    case Origin::generated: return "generated";
    }
    return "original";
}

Polarity parse_polarity(std::string_view s) {
    if (s == "pos") return Polarity::pos;
    if (s == "neg") return Polarity::neg;
    throw Error("unknown polarity '" + std::string(s) + "' (expected pos or neg)");
}

Origin parse_origin(std::string_view s) {
    if (s == "original") return Origin::original;
    if (s == "eda") return Origin::eda;
    if (s == "paraphrase") return Origin::paraphrase;
    if (s == "generated") return Origin::generated;
    throw Error("unknown origin '" + std::string(s) + "'");
}

}  // namespace psychoseed
