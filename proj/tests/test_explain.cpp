#include "psychoseed/explain.hpp"
#include "psychoseed/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace psychoseed;

namespace {

constexpr std::uint32_t kDim = 1u << 16;

Model unigram_model() {
    return make_model(ConceptId("openness"), FeatureSpace{FeatureSpace::Kind::hashed, kDim, 1, {}});
}

void set_weight(Model& m, const std::string& token, double w) {
    const auto fv = featurize(TokenSeq{{token}}, kDim, 1);
    m.weights[fv.indices[0]] = static_cast<float>(w * fv.values[0]);
}

}  // namespace

TEST_CASE("zero model has zero attributions") {
    const Model m = unigram_model();
    const auto exp = explain(m, "I love to daydream about far away places", 2000, 42);
    REQUIRE(exp.weights.size() == exp.tokens.size());
    for (double w : exp.weights) CHECK(std::abs(w) < 1e-6);
    CHECK(exp.p_pos_original == 0.5);
}

TEST_CASE("single relevant token ranks first") {
    Model m = unigram_model();
    set_weight(m, "love", 1.5);
    const auto exp = explain(m, "I love to daydream about far away places", 2000, 42);
    const auto ranked = ranked_positions(exp);
    CHECK(exp.tokens[ranked[0]] == "love");
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(exp.weights[ranked[0]] > exp.weights[ranked[i]]);
    CHECK(exp.weights[ranked[0]] > 0.0);
}

TEST_CASE("attribution signs follow model weights") {
    Rng rng(31);
    for (int c = 0; c < 10; ++c) {
        Model m = unigram_model();
        std::vector<std::string> words;
        std::vector<double> wts;
        std::set<std::uint32_t> slots;
        for (int i = 0; words.size() < 8; ++i) {
            const std::string w = "tok" + std::to_string(c) + "x" + std::to_string(i);
            const auto idx = featurize(TokenSeq{{w}}, kDim, 1).indices[0];
            if (!slots.insert(idx).second) continue;  // keep the vocabulary collision-free
            const double mag = 0.3 + 1.5 * rng.uniform();
            const double weight = rng.bernoulli(0.5) ? mag : -mag;
            set_weight(m, w, weight);
            words.push_back(w);
            wts.push_back(weight);
        }
        std::string text;
        for (const auto& w : words) text += w + " ";
        const auto exp = explain(m, text, 2000, 100 + c);
        REQUIRE(exp.weights.size() == words.size());
        for (std::size_t i = 0; i < words.size(); ++i) CHECK((exp.weights[i] > 0) == (wts[i] > 0));
    }
}

TEST_CASE("explain contracts") {
    Model m = unigram_model();
    set_weight(m, "love", 1.0);
    set_weight(m, "hate", -1.0);
    const std::string text = "I love art but hate noise";

    SUBCASE("deterministic and thread-independent") {
        const auto a = explain(m, text, 500, 7);
        ExplainOptions opt;
        opt.threads = 4;
        const auto b = explain(m, text, 500, 7, opt);
        CHECK(a.weights == b.weights);
        CHECK(a.intercept == b.intercept);
    }
    SUBCASE("the all-kept sample reproduces p_pos") {
        const auto a = explain(m, text, 500, 7);
        CHECK(predict_tokens(m, tokenize(text)).p_pos == a.p_pos_original);
        CHECK(predict(m, text).p_pos == a.p_pos_original);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(explain(m, text, 5, 1), Error);
        CHECK_THROWS_AS(explain(m, " .. ", 100, 1), Error);
    }
    SUBCASE("JSON round-trip") {
        const auto a = explain(m, text, 500, 7);
        const auto j = explanation_to_json(a, 2);
        const auto b = explanation_from_json(j);
        CHECK(b.tokens == a.tokens);
        CHECK(b.weights == a.weights);
        CHECK(b.p_pos_original == a.p_pos_original);
        CHECK(b.seed == 7);
        CHECK(b.n_samples == 500);
        CHECK(explanation_to_json(b, 2) == j);
        CHECK(j["top_positive"][0] == 1);
        CHECK(j["top_negative"][0] == 4);
        CHECK_THROWS_AS(explanation_from_json(nlohmann::json{{"text", "x"}}), ParseError);
    }
    SUBCASE("rendering") {
        const auto a = explain(m, text, 500, 7);
        CHECK(render_terminal(a, 0) == "i love art but hate noise");
        CHECK(render_html(a, 0).find("<span") == std::string::npos);
        const auto one = render_terminal(a, 1);
        CHECK(one.find("[+love]") != std::string::npos);
        CHECK(one.find("[-hate]") != std::string::npos);
        CHECK(render_terminal(a, 1, true).find("\x1b[32mlove\x1b[0m") != std::string::npos);

        const auto all = explanation_to_json(a, 100);
        CHECK(all["ranking"].size() == a.tokens.size());
        CHECK(all["top_positive"].size() + all["top_negative"].size() <= a.tokens.size());
        CHECK(render_html(a, 1).find("title=") != std::string::npos);
    }
}
