#pragma once

#include "psychoseed/common.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psychoseed {

class Rng;

/// Binary confusion counts with `pos` as the positive class.
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

Confusion confusion(std::span<const Polarity> preds, std::span<const Polarity> golds, Polarity positive);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

/// 0/0 is taken as 0 for precision, recall and F1.
ClassMetrics class_metrics(const Confusion& c);

struct MetricsReport {
    std::array<ClassMetrics, 2> per_class{};  // indexed by Polarity
    std::array<std::size_t, 2> support{};
    ClassMetrics macro;
    ClassMetrics weighted;

    const ClassMetrics& of(Polarity p) const { return per_class[static_cast<std::size_t>(p)]; }
    std::size_t support_of(Polarity p) const { return support[static_cast<std::size_t>(p)]; }
    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport score(std::span<const Polarity> preds, std::span<const Polarity> golds);

/// Class prior used by the random baseline.
struct ClassDistribution {
    double pos = 0.5;
    double neg = 0.5;

    void validate() const;
    static ClassDistribution of(std::span<const Polarity> labels);
};

std::vector<Polarity> sample_predictions(const ClassDistribution& dist, std::size_t n, Rng& rng);

struct BaselineResult {
    MetricsReport mean;
    MetricsReport stddev;
    std::size_t trials = 0;
    /// Fraction of pos predictions over all trials.
    double pos_rate = 0.0;
};

/// Averages `trials` independent draws of predictions that follow `dist`.
/// Trial t uses its own stream derived from (seed, t).
BaselineResult random_baseline(const ClassDistribution& dist, std::span<const Polarity> golds, std::uint64_t seed,
                               std::size_t trials = 1000, unsigned threads = 1);

enum class SystemKind { model, baseline };

/// Reports keyed by (concept, system); systems keep insertion order.
class ReportTable {
public:
    struct Entry {
        MetricsReport report;
        std::optional<MetricsReport> stddev;
        SystemKind kind = SystemKind::model;
    };

    void add(const std::string& concept_id, const std::string& system, const MetricsReport& report,
             SystemKind kind = SystemKind::model, std::optional<MetricsReport> stddev = std::nullopt);

    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<std::string>& systems() const noexcept { return systems_; }
    std::vector<std::string> concepts() const;
    const Entry* find(const std::string& concept_id, const std::string& system) const;

    /// Model system with the highest weighted F1 for `concept` (first on ties).
    std::optional<std::string> best(const std::string& concept_id) const;

    nlohmann::json to_json() const;
    static ReportTable from_json(const nlohmann::json& j);

    /// Aligned text table: one block of rows (-, +, avg, w-avg) per concept,
    /// P/R/F1 columns per system, two decimals; '*' marks the best w-avg.
    std::string to_text() const;

private:
    std::vector<std::string> systems_;
    std::map<std::string, std::map<std::string, Entry>> entries_;
};

}  // namespace psychoseed
