#pragma once

#include "psychoseed/augment.hpp"
#include "psychoseed/classifier.hpp"
#include "psychoseed/eval.hpp"
#include "psychoseed/profiler.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psychoseed {

/// Error raised by run_experiment; what() starts with "[stage] ".
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

enum class ExperimentMode { psychometric, in_domain };

struct ExperimentPaths {
    std::filesystem::path items;
    std::filesystem::path profiles;
    std::optional<std::filesystem::path> truth;
    std::filesystem::path lexicon;
    std::filesystem::path stopwords;
    std::filesystem::path out;
};

struct ExperimentConfig {
    std::vector<ConceptId> concepts;
    ExperimentPaths paths;
    ExperimentMode mode = ExperimentMode::psychometric;
    /// Also train the in-domain comparator in psychometric mode.
    bool compare_in_domain = false;
    std::vector<AugmentMethod> methods{AugmentMethod::none};
    AugmentationConfig augmentation;
    std::string adapter = "mock";
    TrainConfig train;
    double item_split_ratio = 0.8;
    std::size_t baseline_trials = 1000;
    bool normalize_tweets = false;
    TruthColumns truth_columns;
    std::uint64_t seed = 42;

    /// Parses the JSON config; relative paths resolve against `base_dir`.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Canonical form of every setting that affects results (no paths).
    nlohmann::json settings_json() const;
};

AugmentationConfig augmentation_from_json(const nlohmann::json& j, AugmentationConfig base = {});
nlohmann::json augmentation_to_json(const AugmentationConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json train_config_to_json(const TrainConfig& c);

struct ExperimentResult {
    ReportTable reports;
    std::map<std::string, ModelSet> models;  // by system name
    nlohmann::json manifest;
    nlohmann::json run_log;
};

struct RunOptions {
    unsigned threads = 1;
    /// Progress lines; null for silence.
    std::ostream* log = nullptr;
    bool write_outputs = true;
};

/// ingest -> augment -> split -> train -> predict -> aggregate -> evaluate.
/// Writes models/, predictions/, report.json, report.txt, manifest.json and
/// run_log.json under config.paths.out. manifest.json depends only on the
/// config settings and the input bytes; timings go to run_log.json.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace psychoseed
