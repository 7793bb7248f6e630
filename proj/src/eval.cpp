#include "psychoseed/eval.hpp"

#include "psychoseed/parallel.hpp"
#include "psychoseed/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace psychoseed {
namespace {

using nlohmann::json;

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

json metrics_json(const ClassMetrics& m) {
    return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

ClassMetrics metrics_from_json(const json& j) {
    return ClassMetrics{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

json report_json(const MetricsReport& r) {
    json neg = metrics_json(r.of(Polarity::neg));
    neg["support"] = r.support_of(Polarity::neg);
    json pos = metrics_json(r.of(Polarity::pos));
    pos["support"] = r.support_of(Polarity::pos);
    return json{{"neg", neg}, {"pos", pos}, {"avg", metrics_json(r.macro)}, {"w-avg", metrics_json(r.weighted)}};
}

MetricsReport report_from_json(const json& j) {
    MetricsReport r;
    r.per_class[0] = metrics_from_json(j.at("neg"));
    r.per_class[1] = metrics_from_json(j.at("pos"));
    r.support[0] = j.at("neg").value("support", std::size_t{0});
    r.support[1] = j.at("pos").value("support", std::size_t{0});
    r.macro = metrics_from_json(j.at("avg"));
    r.weighted = metrics_from_json(j.at("w-avg"));
    return r;
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width, bool left = false) {
    if (s.size() >= width) return s;
    const std::string fill(width - s.size(), ' ');
    return left ? s + fill : fill + s;
}

}  // namespace

Confusion confusion(std::span<const Polarity> preds, std::span<const Polarity> golds, Polarity positive) {
    if (preds.size() != golds.size()) {
        throw Error("prediction/gold length mismatch: " + std::to_string(preds.size()) + " vs " +
                    std::to_string(golds.size()));
    }
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == positive;
        const bool g = golds[i] == positive;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ClassMetrics class_metrics(const Confusion& c) {
    ClassMetrics m;
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

MetricsReport score(std::span<const Polarity> preds, std::span<const Polarity> golds) {
    if (preds.size() != golds.size()) {
        throw Error("prediction/gold length mismatch: " + std::to_string(preds.size()) + " vs " +
                    std::to_string(golds.size()));
    }
    if (golds.empty()) throw Error("cannot score an empty prediction set");

    MetricsReport r;
    for (Polarity p : {Polarity::neg, Polarity::pos}) {
        const auto c = confusion(preds, golds, p);
        r.per_class[static_cast<std::size_t>(p)] = class_metrics(c);
        r.support[static_cast<std::size_t>(p)] = c.tp + c.fn;
    }
    const double n = static_cast<double>(golds.size());
    const double w_neg = static_cast<double>(r.support[0]) / n;
    const double w_pos = static_cast<double>(r.support[1]) / n;
    auto combine = [&](double ClassMetrics::*field, double a, double b) {
        return a * r.per_class[0].*field + b * r.per_class[1].*field;
    };
    for (auto field : {&ClassMetrics::precision, &ClassMetrics::recall, &ClassMetrics::f1}) {
        r.macro.*field = combine(field, 0.5, 0.5);
        r.weighted.*field = combine(field, w_neg, w_pos);
    }
    return r;
}

void ClassDistribution::validate() const {
    if (!(pos >= 0.0 && pos <= 1.0 && neg >= 0.0 && neg <= 1.0)) {
        throw Error("class probabilities must be in [0, 1]");
    }
    if (std::abs(pos + neg - 1.0) > 1e-9) throw Error("class distribution must sum to 1");
}

ClassDistribution ClassDistribution::of(std::span<const Polarity> labels) {
    if (labels.empty()) throw Error("cannot derive a class distribution from no labels");
    const auto n_pos = std::count(labels.begin(), labels.end(), Polarity::pos);
    const double p = static_cast<double>(n_pos) / static_cast<double>(labels.size());
    return ClassDistribution{p, 1.0 - p};
}

std::vector<Polarity> sample_predictions(const ClassDistribution& dist, std::size_t n, Rng& rng) {
    dist.validate();
    std::vector<Polarity> out(n);
    for (auto& p : out) p = rng.bernoulli(dist.pos) ? Polarity::pos : Polarity::neg;
    return out;
}

BaselineResult random_baseline(const ClassDistribution& dist, std::span<const Polarity> golds, std::uint64_t seed,
                               std::size_t trials, unsigned threads) {
    dist.validate();
    if (trials < 1) throw Error("baseline needs at least one trial");
    if (golds.empty()) throw Error("cannot score an empty prediction set");

    std::vector<MetricsReport> runs(trials);
    std::vector<std::size_t> pos_counts(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, {"random_baseline"}, t));
        const auto preds = sample_predictions(dist, golds.size(), rng);
        pos_counts[t] = static_cast<std::size_t>(std::count(preds.begin(), preds.end(), Polarity::pos));
        runs[t] = score(preds, golds);
    });

    // Flattened view of every number in a report, in a fixed order.
    auto fields = [](MetricsReport& r) {
        std::vector<double*> f;
        for (auto* m : {&r.per_class[0], &r.per_class[1], &r.macro, &r.weighted}) {
            f.push_back(&m->precision);
            f.push_back(&m->recall);
            f.push_back(&m->f1);
        }
        return f;
    };

    BaselineResult out;
    out.trials = trials;
    out.mean.support = runs.front().support;
    out.stddev.support = runs.front().support;
    auto mean_f = fields(out.mean);
    auto std_f = fields(out.stddev);
    const double n = static_cast<double>(trials);
    for (std::size_t k = 0; k < mean_f.size(); ++k) {
        double sum = 0.0;
        for (auto& r : runs) sum += *fields(r)[k];
        const double mean = sum / n;
        double sq = 0.0;
        for (auto& r : runs) {
            const double d = *fields(r)[k] - mean;
            sq += d * d;
        }
        *mean_f[k] = mean;
        *std_f[k] = std::sqrt(sq / n);
    }
    std::size_t total_pos = 0;
    for (auto c : pos_counts) total_pos += c;
    out.pos_rate = static_cast<double>(total_pos) / (n * static_cast<double>(golds.size()));
    return out;
}

void ReportTable::add(const std::string& concept_id, const std::string& system, const MetricsReport& report,
                      SystemKind kind, std::optional<MetricsReport> stddev) {
    if (std::find(systems_.begin(), systems_.end(), system) == systems_.end()) systems_.push_back(system);
    entries_[concept_id][system] = Entry{report, std::move(stddev), kind};
}

std::vector<std::string> ReportTable::concepts() const {
    std::vector<std::string> out;
    for (const auto& [c, e] : entries_) out.push_back(c);
    return out;
}

const ReportTable::Entry* ReportTable::find(const std::string& concept_id, const std::string& system) const {
    auto c = entries_.find(concept_id);
    if (c == entries_.end()) return nullptr;
    auto s = c->second.find(system);
    return s == c->second.end() ? nullptr : &s->second;
}

std::optional<std::string> ReportTable::best(const std::string& concept_id) const {
    std::optional<std::string> best;
    double best_f1 = -1.0;
    for (const auto& system : systems_) {
        const Entry* e = find(concept_id, system);
        if (e == nullptr || e->kind != SystemKind::model) continue;
        if (e->report.weighted.f1 > best_f1) {
            best_f1 = e->report.weighted.f1;
            best = system;
        }
    }
    return best;
}

json ReportTable::to_json() const {
    if (empty()) throw Error("no reports to emit");
    json concepts = json::object();
    for (const auto& [c, by_system] : entries_) {
        json systems = json::object();
        for (const auto& [s, e] : by_system) {
            json block = report_json(e.report);
            block["kind"] = e.kind == SystemKind::model ? "model" : "baseline";
            if (e.stddev) block["std"] = report_json(*e.stddev);
            systems[s] = std::move(block);
        }
        json cj = {{"systems", std::move(systems)}};
        if (auto b = best(c)) cj["best"] = *b;
        concepts[c] = std::move(cj);
    }
    return json{{"systems", systems_}, {"concepts", std::move(concepts)}};
}

ReportTable ReportTable::from_json(const json& j) {
    ReportTable t;
    try {
        t.systems_ = j.at("systems").get<std::vector<std::string>>();
        for (const auto& [c, cj] : j.at("concepts").items()) {
            for (const auto& [s, block] : cj.at("systems").items()) {
                Entry e;
                e.report = report_from_json(block);
                e.kind = block.value("kind", std::string("model")) == "baseline" ? SystemKind::baseline
                                                                                   : SystemKind::model;
                if (block.contains("std")) e.stddev = report_from_json(block.at("std"));
                t.entries_[c][s] = std::move(e);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
    return t;
}

std::string ReportTable::to_text() const {
    if (empty()) throw Error("no reports to emit");
    constexpr std::size_t kConceptW = 18;
    constexpr std::size_t kRowW = 6;
    constexpr std::size_t kCellW = 6;

    std::vector<std::size_t> widths;
    for (const auto& s : systems_) widths.push_back(std::max(s.size(), 3 * kCellW));

    std::ostringstream out;
    out << pad("concept", kConceptW, true) << pad("", kRowW, true);
    for (std::size_t i = 0; i < systems_.size(); ++i) out << " | " << pad(systems_[i], widths[i], true);
    out << '\n' << pad("", kConceptW + kRowW, true);
    for (std::size_t i = 0; i < systems_.size(); ++i) {
        out << " | " << pad(pad("P", kCellW) + pad("R", kCellW) + pad("F1", kCellW), widths[i], true);
    }
    out << '\n';

    bool any_best = false;
    for (const auto& [concept_id, by_system] : entries_) {
        const auto best_system = best(concept_id);
        out << std::string(kConceptW + kRowW, '-');
        for (std::size_t w : widths) out << "-+-" << std::string(w, '-');
        out << '\n';

        const char* row_names[] = {"-", "+", "avg", "w-avg"};
        for (int row = 0; row < 4; ++row) {
            out << pad(row == 0 ? concept_id : "", kConceptW, true) << pad(row_names[row], kRowW, true);
            for (std::size_t i = 0; i < systems_.size(); ++i) {
                const Entry* e = find(concept_id, systems_[i]);
                std::string cell;
                if (e != nullptr) {
                    const ClassMetrics& m = row == 0   ? e->report.of(Polarity::neg)
                                            : row == 1 ? e->report.of(Polarity::pos)
                                            : row == 2 ? e->report.macro
                                                       : e->report.weighted;
                    std::string f1 = fixed2(m.f1);
                    if (row == 3 && best_system && *best_system == systems_[i]) {
                        f1 += "*";
                        any_best = true;
                    }
                    cell = pad(fixed2(m.precision), kCellW) + pad(fixed2(m.recall), kCellW) + pad(f1, kCellW);
                }
                out << " | " << pad(cell, widths[i], true);
            }
            out << '\n';
        }
    }
    if (any_best) out << "\n* best weighted F1 per concept\n";
    return out.str();
}

}  // namespace psychoseed
