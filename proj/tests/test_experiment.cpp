#include "psychoseed/experiment.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace psychoseed;
using nlohmann::json;

namespace {

json minimal_config() {
    return json{{"concepts", {"openness"}},
                {"paths", {{"items", "items.jsonl"}, {"profiles", "profiles.jsonl"}, {"lexicon", "lexicon.tsv"}}},
                {"seed", 7}};
}

}  // namespace

TEST_CASE("experiment config") {
    SUBCASE("defaults and path resolution") {
        const auto c = ExperimentConfig::from_json(minimal_config(), "/data");
        CHECK(c.concepts == std::vector<ConceptId>{ConceptId("openness")});
        CHECK(c.paths.items == std::filesystem::path("/data/items.jsonl"));
        CHECK(c.paths.out == std::filesystem::path("/data/out"));
        CHECK(c.methods == std::vector<AugmentMethod>{AugmentMethod::none});
        CHECK(c.seed == 7);
        CHECK(c.train.seed == 7);
        CHECK(c.augmentation.seed == 7);
        CHECK(c.train.max_epochs == 200);
        CHECK(c.train.min_delta == 1e-3);
        CHECK(c.baseline_trials == 1000);
    }
    SUBCASE("nested settings") {
        auto j = minimal_config();
        j["augmentation"] = {{"methods", {"eda", "paraphrase"}}, {"n_per_op", 2}, {"adapter", "http://x:1"}};
        j["train"] = {{"learning_rate", 0.01}, {"patience", 5}, {"min_delta", 0.0}};
        j["mode"] = "in_domain";
        const auto c = ExperimentConfig::from_json(j);
        CHECK(c.methods == std::vector<AugmentMethod>{AugmentMethod::eda, AugmentMethod::paraphrase});
        CHECK(c.augmentation.n_per_op == 2);
        CHECK(c.adapter == "http://x:1");
        CHECK(c.train.learning_rate == 0.01);
        CHECK(c.train.patience == 5);
        CHECK(c.train.min_delta == 0.0);
        CHECK(c.mode == ExperimentMode::in_domain);
    }
    SUBCASE("unknown keys and bad values are rejected") {
        auto j = minimal_config();
        j["sede"] = 1;
        CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(j), doctest::Contains("sede"), Error);
        j = minimal_config();
        j["train"] = {{"learning_rat", 0.1}};
        CHECK_THROWS_WITH_AS(ExperimentConfig::from_json(j), doctest::Contains("learning_rat"), Error);
        j = minimal_config();
        j["mode"] = "transductive";
        CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
        j = minimal_config();
        j["item_split_ratio"] = 1.0;
        CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
        j = minimal_config();
        j["augmentation"] = {{"methods", json::array()}};
        CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
        j = minimal_config();
        j.erase("paths");
        CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
    }
    SUBCASE("settings carry no paths") {
        const auto a = ExperimentConfig::from_json(minimal_config(), "/a");
        const auto b = ExperimentConfig::from_json(minimal_config(), "/b");
        CHECK(a.settings_json() == b.settings_json());
        CHECK(a.settings_json().dump().find("items.jsonl") == std::string::npos);
    }
    SUBCASE("train config round-trip") {
        TrainConfig t;
        t.learning_rate = 0.02;
        t.min_delta = 5e-4;
        const auto back = train_config_from_json(train_config_to_json(t));
        CHECK(back.learning_rate == 0.02);
        CHECK(back.min_delta == 5e-4);
        CHECK(train_config_to_json(back) == train_config_to_json(t));
        AugmentationConfig a;
        a.p_rd = 0.2;
        CHECK(augmentation_to_json(augmentation_from_json(augmentation_to_json(a))) == augmentation_to_json(a));
    }
}

TEST_CASE("sha256") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run_experiment on the bundled mini-corpus") {
    auto cfg = ExperimentConfig::load(std::filesystem::path(PSYCHOSEED_SOURCE_DIR) / "data/mini/experiment.json");
    cfg.concepts = {ConceptId("openness"), ConceptId("neuroticism")};
    testsupport::TempDir out("experiment");
    cfg.paths.out = out.path();
    const auto result = run_experiment(cfg, RunOptions{2, nullptr, true});

    for (const char* f : {"manifest.json", "report.json", "report.txt", "run_log.json"}) {
        CHECK(std::filesystem::exists(out / f));
    }
    CHECK(result.reports.systems() == std::vector<std::string>{"plain", "eda", "in-domain", "baseline"});
    CHECK(result.reports.concepts().size() == 2);
    CHECK(result.models.at("eda").size() == 2);
    const auto& manifest = result.manifest;
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest["artifacts"].contains("models/eda/openness.psd"));
    CHECK(manifest.dump().find(out.path().string()) == std::string::npos);
    CHECK(json::parse(testsupport::read_file(out / "report.json")) == result.reports.to_json());

    auto bad = cfg;
    bad.paths.items = out / "missing.jsonl";
    CHECK_THROWS_AS(run_experiment(bad, RunOptions{1, nullptr, false}), Error);
}
