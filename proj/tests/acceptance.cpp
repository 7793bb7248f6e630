// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "psychoseed/augment.hpp"
#include "psychoseed/classifier.hpp"
#include "psychoseed/corpus.hpp"
#include "psychoseed/eval.hpp"
#include "psychoseed/experiment.hpp"
#include "psychoseed/explain.hpp"
#include "psychoseed/profiler.hpp"
#include "psychoseed/rng.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace psychoseed;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum class Status { pass, fail, skip } status;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Outcome::Status::skip, std::move(d)}; }
Outcome check(bool ok, std::string d) { return ok ? pass(std::move(d)) : fail(std::move(d)); }

SynonymLexicon small_lexicon() {
    SynonymLexicon lex;
    lex.add("enjoy", {"love", "like", "relish"});
    lex.add("people", {"folks", "persons"});
    lex.add("music", {"songs", "tunes"});
    lex.add("ideas", {"notions", "thoughts"});
    lex.add("calm", {"relaxed", "serene"});
    lex.add_stopword("i");
    return lex;
}

Outcome eda_count() {
    const auto set = testsupport::original_items("openness", 60, 28);
    AugmentationConfig cfg;
    cfg.dedup = false;
    const auto lex = small_lexicon();
    const auto aug = augment_set(set, AugmentMethod::eda, cfg, &lex, nullptr, 4);
    std::map<std::string, std::size_t> children;
    for (const auto& it : aug.items) {
        if (it.parent_id) ++children[*it.parent_id];
    }
    bool each20 = children.size() == 60;
    for (const auto& [id, n] : children) each20 = each20 && n == 20;
    return check(aug.size() == 1260 && each20,
                 "total " + std::to_string(aug.size()) + " (expected 1260), every original has 20 children: " +
                     (each20 ? "yes" : "no"));
}

Outcome grouped_split() {
    const auto lex = small_lexicon();
    Rng rng(2024);
    std::size_t separated = 0, checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.index(29);
        const auto set = testsupport::original_items("agreeableness", n, rng.index(n + 1), rng.next());
        AugmentationConfig cfg;
        cfg.dedup = rng.bernoulli(0.5);
        cfg.n_per_op = static_cast<int>(rng.index(4));
        cfg.seed = rng.next();
        const auto aug = augment_set(set, AugmentMethod::eda, cfg, &lex, nullptr);
        const double ratio = 0.05 + 0.9 * rng.uniform();
        const auto [tr, va] = split_items(aug, SplitSpec{ratio, rng.next(), true});
        std::set<std::string> train_ids;
        for (const auto& it : tr.items) train_ids.insert(it.id);
        for (const auto* part : {&tr, &va}) {
            const bool in_train = part == &tr;
            for (const auto& it : part->items) {
                if (!it.parent_id) continue;
                ++checked;
                if (train_ids.contains(*it.parent_id) != in_train) ++separated;
            }
        }
        if (tr.size() + va.size() != aug.size()) ++separated;
    }
    return check(separated == 0, "1000 trials, " + std::to_string(checked) + " augmented items checked, " +
                                     std::to_string(separated) + " separated from their parent");
}

Outcome metrics_oracle() {
    using P = Polarity;
    const std::vector<Polarity> golds{P::pos, P::pos, P::neg, P::neg};
    const std::vector<Polarity> preds{P::pos, P::neg, P::neg, P::neg};
    const double w = score(preds, golds).weighted.f1;
    const double perfect = score(golds, golds).weighted.f1;
    std::ostringstream d;
    d.precision(12);
    d << "weighted F1 " << w << " vs 11/15, perfect " << perfect;
    return check(std::abs(w - 11.0 / 15.0) <= 1e-9 && perfect == 1.0, d.str());
}

Outcome aggregation_brute_force() {
    // Part 1: probabilities k/1024 make the tie-break an exact integer comparison.
    Rng rng(1000);
    std::size_t mismatches = 0, ties = 0;
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = 1 + rng.index(10);
        std::vector<double> p(n);
        long pos = 0, sum = 0;
        for (auto& x : p) {
            const long k = rng.bernoulli(0.5) ? 496 + static_cast<long>(rng.index(33)) : static_cast<long>(rng.index(1025));
            x = static_cast<double>(k) / 1024.0;
            pos += 2 * k >= 1024 ? 1 : 0;
            sum += k;
        }
        const long neg = static_cast<long>(n) - pos;
        const Polarity expected = pos != neg ? (pos > neg ? Polarity::pos : Polarity::neg)
                                             : (2 * sum >= 1024L * static_cast<long>(n) ? Polarity::pos : Polarity::neg);
        ties += pos == neg ? 1 : 0;
        if (aggregate_votes(p).label != expected) ++mismatches;
    }

    // Part 2: full predict_profile on single-token tweets with known weights.
    constexpr std::uint32_t dim = 1u << 12;
    Model m = make_model(ConceptId("neuroticism"), FeatureSpace{FeatureSpace::Kind::hashed, dim, 1, {}});
    const std::vector<std::pair<std::string, double>> vocab{{"zero", 0.0}, {"up", 0.8},    {"down", -0.8},
                                                            {"high", 2.5}, {"low", -2.5},  {"tiny", 0.05},
                                                            {"dip", -0.3}};
    std::set<std::uint32_t> slots;
    for (const auto& [tok, w] : vocab) {
        const auto fv = featurize(TokenSeq{{tok}}, dim, 1);
        slots.insert(fv.indices[0]);
        m.weights[fv.indices[0]] = static_cast<float>(w * fv.values[0]);
    }
    if (slots.size() != vocab.size()) return fail("fixture vocabulary collides in the hash space");
    ModelSet models;
    models.emplace(m.concept_id, m);
    for (int c = 0; c < 1000; ++c) {
        Profile prof{"u" + std::to_string(c), {}, {}, {}};
        const std::size_t n = 1 + rng.index(9);
        std::size_t pos = 0;
        long double sum = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const auto& tok = vocab[rng.index(vocab.size())].first;
            prof.tweets.push_back(tok);
            const double p = predict(m, tok).p_pos;
            pos += p >= 0.5 ? 1 : 0;
            sum += p;
        }
        const std::size_t neg = n - pos;
        const Polarity expected = pos != neg ? (pos > neg ? Polarity::pos : Polarity::neg)
                                             : (sum / n >= 0.5L ? Polarity::pos : Polarity::neg);
        if (predict_profile(models, prof).per_concept.at(m.concept_id).label != expected) ++mismatches;
    }
    return check(mismatches == 0, "2000 cases (" + std::to_string(ties) + " vote ties), " +
                                      std::to_string(mismatches) + " mismatches");
}

Outcome baseline_distribution() {
    Rng rng(42);
    const auto preds = sample_predictions(ClassDistribution{0.6, 0.4}, 10000, rng);
    const double rate = static_cast<double>(std::count(preds.begin(), preds.end(), Polarity::pos)) / 10000.0;
    std::ostringstream d;
    d << "empirical pos-rate " << rate << " (target 0.6 +- 0.02)";
    return check(std::abs(rate - 0.6) <= 0.02, d.str());
}

Outcome gradient_check() {
    Rng rng(7);
    double worst = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
        const std::uint32_t dim = 32;
        std::vector<Example> batch(8);
        for (auto& ex : batch) {
            ex.x.dim = dim;
            for (std::uint32_t k = 0; k < dim; ++k) {
                if (rng.bernoulli(0.25)) {
                    ex.x.indices.push_back(k);
                    ex.x.values.push_back(static_cast<float>(rng.uniform() * 4.0 - 2.0));
                }
            }
            ex.y = rng.bernoulli(0.5) ? 1.0 : 0.0;
            ex.weight = 0.5 + rng.uniform();
        }
        std::vector<double> params(dim + 1), grad(dim + 1);
        for (double& p : params) p = rng.uniform() - 0.5;
        batch_loss_and_gradient(params, batch, grad);
        double diff = 0.0, norm = 0.0;
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto plus = params, minus = params;
            plus[k] += 1e-5;
            minus[k] -= 1e-5;
            const double numeric = (batch_loss(plus, batch) - batch_loss(minus, batch)) / 2e-5;
            diff += (grad[k] - numeric) * (grad[k] - numeric);
            norm += (std::abs(grad[k]) + std::abs(numeric)) * (std::abs(grad[k]) + std::abs(numeric));
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12));
    }
    std::ostringstream d;
    d << "20 instances, worst relative error " << worst << " (limit 1e-4)";
    return check(worst < 1e-4, d.str());
}

Outcome classifier_sanity() {
    const auto set = testsupport::separable_items(100);
    const auto [tr, va] = split_items(set, SplitSpec{0.8, 42, true});
    const TrainConfig cfg;
    const Model m = train(tr, va, cfg);
    std::size_t ok = 0;
    for (const auto& it : va.items) ok += predict(m, it.text).label == it.polarity ? 1 : 0;
    const double acc = static_cast<double>(ok) / static_cast<double>(va.size());
    std::ostringstream d;
    d << "val accuracy " << acc << ", stopped after " << m.meta.epochs_run << " epochs (best " << m.meta.best_epoch
      << ", cap " << cfg.max_epochs << ")";
    return check(acc >= 0.95 && m.meta.epochs_run < cfg.max_epochs, d.str());
}

Outcome determinism() {
    const fs::path config_path = fs::path(PSYCHOSEED_SOURCE_DIR) / "data/mini/experiment.json";
    if (!fs::exists(config_path)) return fail("missing " + config_path.string());
    testsupport::TempDir a("accept-a"), b("accept-b");
    auto run = [&](const fs::path& out, unsigned threads) {
        auto cfg = ExperimentConfig::load(config_path);
        cfg.paths.out = out;
        RunOptions opt;
        opt.threads = threads;
        run_experiment(cfg, opt);
    };
    run(a.path(), 1);
    run(b.path(), 4);
    std::vector<std::string> differing;
    for (const char* f : {"manifest.json", "report.json", "report.txt"}) {
        const auto x = testsupport::read_file(a / f);
        if (x.empty() || x != testsupport::read_file(b / f)) differing.emplace_back(f);
    }
    if (!differing.empty()) {
        std::string d = "differs:";
        for (const auto& f : differing) d += " " + f;
        return fail(d);
    }
    return pass("two runs (1 and 4 threads), seed 42: manifest.json, report.json and report.txt byte-identical");
}

Outcome label_derivation() {
    const char* truth = std::getenv("PSYCHOSEED_PAN_TRUTH");
    if (truth == nullptr || *truth == '\0') return skip("set PSYCHOSEED_PAN_TRUTH to a PAN 2015 English truth file");
    // Profile counts (pos, neg) of the PAN 2015 English training set.
    const std::map<std::string, std::pair<std::size_t, std::size_t>> expected{{"openness", {288, 3}},
                                                                               {"conscientiousness", {229, 15}},
                                                                               {"extraversion", {235, 21}},
                                                                               {"agreeableness", {223, 29}},
                                                                               {"neuroticism", {76, 197}}};
    std::vector<Profile> profiles;
    for (auto& r : load_truth(truth)) profiles.push_back(Profile{r.user_id, {"-"}, r.scores, {}});
    const auto counts = count_labels(profiles);
    std::ostringstream d;
    bool ok = true;
    for (const auto& [c, want] : expected) {
        const auto it = counts.find(ConceptId(c));
        const auto got = it == counts.end() ? std::pair<std::size_t, std::size_t>{0, 0}
                                            : std::pair{it->second.pos, it->second.neg};
        ok = ok && got == want;
        d << c << " " << got.first << "/" << got.second << " ";
    }
    return check(ok, d.str() + "(pos/neg)");
}

Outcome explanation_sanity() {
    constexpr std::uint32_t dim = 1u << 16;
    const std::string text = "I love to daydream about far away places";
    Model zero = make_model(ConceptId("openness"), FeatureSpace{FeatureSpace::Kind::hashed, dim, 1, {}});
    const auto e0 = explain(zero, text, 2000, 42);
    double max_abs = 0.0;
    for (double w : e0.weights) max_abs = std::max(max_abs, std::abs(w));

    Model one = zero;
    const auto fv = featurize(TokenSeq{{"love"}}, dim, 1);
    one.weights[fv.indices[0]] = 1.5f * fv.values[0];
    const auto e1 = explain(one, text, 2000, 42);
    const auto ranked = ranked_positions(e1);
    const bool unique_top = e1.tokens[ranked[0]] == "love" && e1.weights[ranked[0]] > e1.weights[ranked[1]];
    std::ostringstream d;
    d << "zero model max |w| " << max_abs << "; top token '" << e1.tokens[ranked[0]] << "'";
    return check(max_abs < 1e-6 && unique_top, d.str());
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"EDA count contract", eda_count},
        {"grouped-split invariant", grouped_split},
        {"metrics oracle", metrics_oracle},
        {"aggregation equals brute force", aggregation_brute_force},
        {"baseline distribution", baseline_distribution},
        {"gradient check", gradient_check},
        {"classifier sanity", classifier_sanity},
        {"determinism", determinism},
        {"label derivation (PAN truth file)", label_derivation},
        {"explanation sanity", explanation_sanity},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = o.status == Outcome::Status::pass ? "PASS" : o.status == Outcome::Status::fail ? "FAIL" : "SKIP";
        if (o.status == Outcome::Status::fail) ++failures;
        std::ostringstream t;
        t.precision(2);
        t << std::fixed << secs;
        std::cout << tag << "  " << name << ": " << o.detail << " [" << t.str() << "s]" << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
