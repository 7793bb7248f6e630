#include "psychoseed/explain.hpp"

#include "psychoseed/parallel.hpp"
#include "psychoseed/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace psychoseed {
namespace {

using nlohmann::json;

enum class Mark { none, positive, negative };

std::vector<Mark> marks(const Explanation& exp, std::size_t top_k) {
    std::vector<Mark> out(exp.tokens.size(), Mark::none);
    if (top_k == 0) return out;
    const auto ranked = ranked_positions(exp);
    std::size_t n = 0;
    for (auto it = ranked.begin(); it != ranked.end() && n < top_k; ++it) {
        if (exp.weights[*it] > 0.0) {
            out[*it] = Mark::positive;
            ++n;
        }
    }
    n = 0;
    for (auto it = ranked.rbegin(); it != ranked.rend() && n < top_k; ++it) {
        if (exp.weights[*it] < 0.0) {
            out[*it] = Mark::negative;
            ++n;
        }
    }
    return out;
}

std::string html_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

}  // namespace

Explanation explain(const Model& model, const std::string& text, std::size_t n_samples, std::uint64_t seed,
                    const ExplainOptions& options) {
    if (n_samples < 10) throw Error("explain needs at least 10 samples");
    const TokenSeq seq = tokenize(text);
    if (seq.empty()) throw Error("text has no tokens to explain");
    const std::size_t m = seq.size();

    // Masks are drawn sequentially so scoring can run in any order.
    Rng rng(derive_seed(seed, {"explain"}));
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(m));
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t j = 0; j < m; ++j) {
            X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) =
                (s == 0 || rng.bernoulli(options.keep_prob)) ? 1.0 : 0.0;
        }
    }

    Eigen::VectorXd y(static_cast<Eigen::Index>(n_samples));
    Eigen::VectorXd sw(static_cast<Eigen::Index>(n_samples));
    parallel_for(n_samples, options.threads, [&](std::size_t s) {
        const auto row = static_cast<Eigen::Index>(s);
        TokenSeq kept;
        for (std::size_t j = 0; j < m; ++j) {
            if (X(row, static_cast<Eigen::Index>(j)) != 0.0) kept.tokens.push_back(seq.tokens[j]);
        }
        y(row) = predict_tokens(model, kept).p_pos;
        const double distance = 1.0 - static_cast<double>(kept.size()) / static_cast<double>(m);
        sw(row) = std::exp(-distance * distance / options.kernel_width);
    });

    const double w_sum = sw.sum();
    const Eigen::RowVectorXd x_mean = (sw.transpose() * X) / w_sum;
    const double y_mean = sw.dot(y) / w_sum;
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    const Eigen::MatrixXd XtW = Xc.transpose() * sw.asDiagonal();
    Eigen::MatrixXd gram = XtW * Xc;
    for (Eigen::Index j = 0; j < gram.rows(); ++j) {
        if (gram(j, j) <= 1e-12) {
            throw Error("degenerate design: token '" + seq.tokens[static_cast<std::size_t>(j)] +
                        "' was never masked; increase n_samples");
        }
    }
    gram.diagonal().array() += options.ridge_lambda;
    const Eigen::VectorXd beta = gram.ldlt().solve(XtW * yc);

    Explanation exp;
    exp.text = text;
    exp.tokens = seq.tokens;
    exp.weights.assign(beta.data(), beta.data() + beta.size());
    exp.intercept = y_mean - x_mean.dot(beta);
    exp.p_pos_original = predict(model, text).p_pos;
    exp.n_samples = n_samples;
    exp.seed = seed;
    for (double w : exp.weights) {
        if (!std::isfinite(w)) throw Error("explanation produced non-finite weights");
    }
    return exp;
}

std::vector<std::size_t> ranked_positions(const Explanation& exp) {
    std::vector<std::size_t> order(exp.tokens.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return exp.weights[a] > exp.weights[b]; });
    return order;
}

json explanation_to_json(const Explanation& exp, std::size_t top_k) {
    const auto mk = marks(exp, top_k);
    json positive = json::array();
    json negative = json::array();
    for (std::size_t i : ranked_positions(exp)) {
        if (mk[i] == Mark::positive) positive.push_back(i);
    }
    const auto ranked = ranked_positions(exp);
    for (auto it = ranked.rbegin(); it != ranked.rend(); ++it) {
        if (mk[*it] == Mark::negative) negative.push_back(*it);
    }
    return json{{"text", exp.text},
                {"tokens", exp.tokens},
                {"weights", exp.weights},
                {"intercept", exp.intercept},
                {"p_pos_original", exp.p_pos_original},
                {"n_samples", exp.n_samples},
                {"seed", exp.seed},
                {"ranking", ranked},
                {"top_positive", positive},
                {"top_negative", negative}};
}

Explanation explanation_from_json(const json& j) {
    try {
        Explanation e;
        e.text = j.at("text").get<std::string>();
        e.tokens = j.at("tokens").get<std::vector<std::string>>();
        e.weights = j.at("weights").get<std::vector<double>>();
        e.intercept = j.value("intercept", 0.0);
        e.p_pos_original = j.at("p_pos_original").get<double>();
        e.n_samples = j.at("n_samples").get<std::size_t>();
        e.seed = j.at("seed").get<std::uint64_t>();
        if (e.tokens.size() != e.weights.size()) throw Error("tokens and weights differ in length");
        return e;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed explanation: ") + ex.what());
    }
}

std::string render_terminal(const Explanation& exp, std::size_t top_k, bool color) {
    const auto mk = marks(exp, top_k);
    std::string out;
    for (std::size_t i = 0; i < exp.tokens.size(); ++i) {
        if (i > 0) out += ' ';
        switch (mk[i]) {
        case Mark::positive: out += color ? "\x1b[32m" + exp.tokens[i] + "\x1b[0m" : "[+" + exp.tokens[i] + "]"; break;
        case Mark::negative: out += color ? "\x1b[31m" + exp.tokens[i] + "\x1b[0m" : "[-" + exp.tokens[i] + "]"; break;
        case Mark::none: out += exp.tokens[i]; break;
        }
    }
    return out;
}

std::string render_html(const Explanation& exp, std::size_t top_k) {
    const auto mk = marks(exp, top_k);
    double max_abs = 0.0;
    for (double w : exp.weights) max_abs = std::max(max_abs, std::abs(w));

    std::string out = "<p class=\"psychoseed-explanation\">";
    for (std::size_t i = 0; i < exp.tokens.size(); ++i) {
        if (i > 0) out += ' ';
        const std::string tok = html_escape(exp.tokens[i]);
        if (mk[i] == Mark::none || max_abs == 0.0) {
            out += tok;
            continue;
        }
        const double alpha = 0.2 + 0.6 * std::abs(exp.weights[i]) / max_abs;
        char style[96];
        std::snprintf(style, sizeof style, "background-color: rgba(%s, %.2f)",
                      mk[i] == Mark::positive ? "64, 130, 109" : "183, 110, 121", alpha);
        char weight[32];
        std::snprintf(weight, sizeof weight, "%.4f", exp.weights[i]);
        out += "<span style=\"" + std::string(style) + "\" title=\"" + weight + "\">" + tok + "</span>";
    }
    out += "</p>\n";
    return out;
}

}  // namespace psychoseed
