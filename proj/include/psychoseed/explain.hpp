#pragma once

#include "psychoseed/classifier.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace psychoseed {

struct Explanation {
    std::string text;
    std::vector<std::string> tokens;
    /// Attribution per token position (surrogate coefficients).
    std::vector<double> weights;
    double intercept = 0.0;
    double p_pos_original = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

struct ExplainOptions {
    /// Probability that a token survives in a perturbed sample.
    double keep_prob = 0.5;
    /// Sample weight is exp(-(1 - kept_fraction)^2 / kernel_width).
    double kernel_width = 0.25;
    double ridge_lambda = 1.0;
    unsigned threads = 1;
};

/// Local linear surrogate of the model's p_pos around `text`, fitted by
/// weighted ridge regression on random token masks. The first sample is
/// always the unmasked text.
Explanation explain(const Model& model, const std::string& text, std::size_t n_samples, std::uint64_t seed,
                    const ExplainOptions& options = {});

/// Token positions ordered by attribution, highest first.
std::vector<std::size_t> ranked_positions(const Explanation& exp);

nlohmann::json explanation_to_json(const Explanation& exp, std::size_t top_k);
Explanation explanation_from_json(const nlohmann::json& j);

/// Tokens with the top_k positive attributions wrapped as [+tok], the
/// top_k negative as [-tok]. With color, ANSI green/red is used instead.
std::string render_terminal(const Explanation& exp, std::size_t top_k, bool color = false);

/// Standalone HTML snippet with highlighted tokens.
std::string render_html(const Explanation& exp, std::size_t top_k);

}  // namespace psychoseed
