#include "psychoseed/experiment.hpp"

#include "psychoseed/parallel.hpp"
#include "psychoseed/rng.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace psychoseed {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kInDomain = "in-domain";
constexpr const char* kBaseline = "baseline";

std::string system_name(AugmentMethod m) {
    return m == AugmentMethod::none ? "plain" : std::string(to_string(m));
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw Error("unknown key '" + key + "' in " + where);
    }
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

class StageTimer {
public:
    StageTimer(json& timings, std::ostream* log) : timings_(timings), log_(log) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) {
        if (log_) *log_ << "[" << stage << "] start\n";
        const auto t0 = std::chrono::steady_clock::now();
        struct Record {
            StageTimer& self;
            const std::string& stage;
            std::chrono::steady_clock::time_point t0;
            ~Record() {
                const double secs =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                self.timings_[stage] = self.timings_.value(stage, 0.0) + secs;
            }
        } record{*this, stage, t0};
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    }

private:
    json& timings_;
    std::ostream* log_;
};

json counts_json(const ItemSet& set) {
    json by_origin = json::object();
    for (Origin o : {Origin::original, Origin::eda, Origin::paraphrase, Origin::generated}) {
        if (const auto n = set.count(o); n > 0) by_origin[std::string(to_string(o))] = n;
    }
    return json{{"total", set.size()},
                {"pos", set.count(Polarity::pos)},
                {"neg", set.count(Polarity::neg)},
                {"by_origin", by_origin}};
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

AugmentationConfig augmentation_from_json(const json& j, AugmentationConfig c) {
    reject_unknown(j,
                   {"alpha_sr", "alpha_ri", "alpha_rs", "p_rd", "n_per_op", "max_paraphrases", "gen_count_per_label",
                    "gen_max_tokens", "gen_temperature", "dedup", "seed", "methods", "method", "adapter"},
                   "augmentation");
    c.alpha_sr = j.value("alpha_sr", c.alpha_sr);
    c.alpha_ri = j.value("alpha_ri", c.alpha_ri);
    c.alpha_rs = j.value("alpha_rs", c.alpha_rs);
    c.p_rd = j.value("p_rd", c.p_rd);
    c.n_per_op = j.value("n_per_op", c.n_per_op);
    c.max_paraphrases = j.value("max_paraphrases", c.max_paraphrases);
    c.gen_count_per_label = j.value("gen_count_per_label", c.gen_count_per_label);
    c.gen_max_tokens = j.value("gen_max_tokens", c.gen_max_tokens);
    c.gen_temperature = j.value("gen_temperature", c.gen_temperature);
    c.dedup = j.value("dedup", c.dedup);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

json augmentation_to_json(const AugmentationConfig& c) {
    return json{{"alpha_sr", c.alpha_sr},
                {"alpha_ri", c.alpha_ri},
                {"alpha_rs", c.alpha_rs},
                {"p_rd", c.p_rd},
                {"n_per_op", c.n_per_op},
                {"max_paraphrases", c.max_paraphrases},
                {"gen_count_per_label", c.gen_count_per_label},
                {"gen_max_tokens", c.gen_max_tokens},
                {"gen_temperature", c.gen_temperature},
                {"dedup", c.dedup},
                {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
    reject_unknown(j,
                   {"learning_rate", "batch_size", "max_epochs", "patience", "min_delta", "seed", "adam_beta1", "adam_beta2",
                    "adam_eps", "balance_classes", "feature_dim", "ngrams", "encoder_endpoint", "embedding_dim"},
                   "train");
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.min_delta = j.value("min_delta", c.min_delta);
    c.seed = j.value("seed", c.seed);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.balance_classes = j.value("balance_classes", c.balance_classes);
    c.features.dim = j.value("feature_dim", c.features.dim);
    c.features.ngrams = j.value("ngrams", c.features.ngrams);
    if (j.contains("encoder_endpoint") && !j["encoder_endpoint"].is_null()) {
        c.features.kind = FeatureSpace::Kind::remote;
        c.features.endpoint = j["encoder_endpoint"].get<std::string>();
        c.features.dim = j.value("embedding_dim", 0u);
    }
    c.validate();
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    json j = {{"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"min_delta", c.min_delta},
              {"seed", c.seed},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"balance_classes", c.balance_classes},
              {"feature_dim", c.features.dim},
              {"ngrams", c.features.ngrams}};
    if (c.features.kind == FeatureSpace::Kind::remote) {
        j["encoder_endpoint"] = c.features.endpoint;
        j["embedding_dim"] = c.features.dim;
    }
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
    try {
        reject_unknown(j,
                       {"concepts", "paths", "mode", "compare_in_domain", "augmentation", "train", "item_split_ratio",
                        "baseline_trials", "normalize_tweets", "truth_columns", "seed"},
                       "experiment config");
        ExperimentConfig c;
        c.seed = j.value("seed", c.seed);
        if (j.contains("concepts")) {
            for (const auto& s : j.at("concepts")) c.concepts.emplace_back(s.get<std::string>());
        } else {
            for (auto s : kBigFive) c.concepts.emplace_back(std::string(s));
        }
        if (c.concepts.empty()) throw Error("'concepts' must not be empty");

        const json& p = j.at("paths");
        reject_unknown(p, {"items", "profiles", "truth", "lexicon", "stopwords", "out"}, "paths");
        c.paths.items = resolve(base_dir, p.at("items").get<std::string>());
        c.paths.profiles = resolve(base_dir, p.at("profiles").get<std::string>());
        if (p.contains("truth") && !p["truth"].is_null()) c.paths.truth = resolve(base_dir, p["truth"].get<std::string>());
        if (p.contains("lexicon")) c.paths.lexicon = resolve(base_dir, p["lexicon"].get<std::string>());
        if (p.contains("stopwords")) c.paths.stopwords = resolve(base_dir, p["stopwords"].get<std::string>());
        c.paths.out = resolve(base_dir, p.value("out", std::string("out")));

        const std::string mode = j.value("mode", std::string("psychometric"));
        if (mode == "psychometric") c.mode = ExperimentMode::psychometric;
        else if (mode == "in_domain") c.mode = ExperimentMode::in_domain;
        else throw Error("unknown mode '" + mode + "'");
        c.compare_in_domain = j.value("compare_in_domain", c.compare_in_domain);

        c.augmentation.seed = c.seed;
        if (j.contains("augmentation")) {
            const json& a = j.at("augmentation");
            c.augmentation = augmentation_from_json(a, c.augmentation);
            if (a.contains("methods")) {
                c.methods.clear();
                for (const auto& m : a.at("methods")) c.methods.push_back(parse_augment_method(m.get<std::string>()));
            } else if (a.contains("method")) {
                c.methods = {parse_augment_method(a.at("method").get<std::string>())};
            }
            c.adapter = a.value("adapter", c.adapter);
        }
        if (c.methods.empty()) throw Error("at least one augmentation method is required");

        c.train.seed = c.seed;
        if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);

        c.item_split_ratio = j.value("item_split_ratio", c.item_split_ratio);
        c.baseline_trials = j.value("baseline_trials", c.baseline_trials);
        c.normalize_tweets = j.value("normalize_tweets", c.normalize_tweets);
        if (j.contains("truth_columns")) c.truth_columns = TruthColumns::parse(j.at("truth_columns").get<std::string>());
        if (!(c.item_split_ratio > 0.0 && c.item_split_ratio < 1.0)) throw Error("item_split_ratio must be in (0, 1)");
        if (c.baseline_trials < 1) throw Error("baseline_trials must be >= 1");
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

json ExperimentConfig::settings_json() const {
    json concepts_j = json::array();
    for (const auto& c : concepts) concepts_j.push_back(c.str());
    json methods_j = json::array();
    for (auto m : methods) methods_j.push_back(to_string(m));
    json truth_cols = truth_columns.names;
    return json{{"concepts", concepts_j},
                {"mode", mode == ExperimentMode::psychometric ? "psychometric" : "in_domain"},
                {"compare_in_domain", compare_in_domain},
                {"methods", methods_j},
                {"augmentation", augmentation_to_json(augmentation)},
                {"adapter", adapter},
                {"train", train_config_to_json(train)},
                {"item_split_ratio", item_split_ratio},
                {"baseline_trials", baseline_trials},
                {"normalize_tweets", normalize_tweets},
                {"truth_columns", truth_cols},
                {"seed", seed}};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    json timings = json::object();
    StageTimer timer(timings, opts.log);
    const unsigned threads = std::max(1u, opts.threads);

    ExperimentResult result;
    json warnings = json::array();
    json counts = json::object();
    json inputs = json::object();

    // ingest
    ItemCorpus items;
    ProfileCorpus profiles;
    timer.run("ingest", [&] {
        items = load_items(cfg.paths.items);
        for (const auto& c : cfg.concepts) {
            if (!items.contains(c)) throw Error("no items for concept '" + c.str() + "'");
        }
        ProfileLoadOptions po;
        po.columns = cfg.truth_columns;
        po.normalize = cfg.normalize_tweets;
        po.required_concepts = cfg.concepts;
        profiles = load_profiles(cfg.paths.profiles, cfg.paths.truth, po);
        for (const auto& w : profiles.warnings) warnings.push_back("ingest: " + w);

        inputs["items"] = sha256_file(cfg.paths.items);
        inputs["profiles"] = sha256_file(cfg.paths.profiles);
        if (cfg.paths.truth) inputs["truth"] = sha256_file(*cfg.paths.truth);
        return 0;
    });

    const bool psychometric = cfg.mode == ExperimentMode::psychometric;
    const bool in_domain = cfg.mode == ExperimentMode::in_domain || cfg.compare_in_domain;

    const ProfileSplit psplit = timer.run("split", [&] { return split_profiles(profiles.profiles, cfg.seed); });
    counts["profiles"] = {{"total", profiles.profiles.size()},
                          {"test", psplit.test.size()},
                          {"train", psplit.train.size()},
                          {"val", psplit.val.size()}};
    for (const auto& c : cfg.concepts) {
        const auto& lc = profiles.counts[c];
        counts["labels"][c.str()] = {{"pos", lc.pos},
                                     {"neg", lc.neg},
                                     {"excluded", lc.excluded},
                                     {"pos_tweets", lc.pos_tweets},
                                     {"neg_tweets", lc.neg_tweets}};
        counts["items"][c.str()]["original"] = counts_json(items.at(c));
    }

    std::optional<SynonymLexicon> lexicon;
    std::unique_ptr<GenerationAdapter> adapter;
    if (psychometric) {
        for (auto m : cfg.methods) {
            if (m == AugmentMethod::eda && !lexicon) {
                lexicon = timer.run("augment", [&] {
                    if (cfg.paths.lexicon.empty()) throw Error("EDA needs paths.lexicon");
                    inputs["lexicon"] = sha256_file(cfg.paths.lexicon);
                    if (!cfg.paths.stopwords.empty()) inputs["stopwords"] = sha256_file(cfg.paths.stopwords);
                    return SynonymLexicon::load(cfg.paths.lexicon, cfg.paths.stopwords);
                });
            }
            if ((m == AugmentMethod::paraphrase || m == AugmentMethod::generate) && !adapter) {
                adapter = make_adapter(cfg.adapter);
            }
        }

        for (auto method : cfg.methods) {
            const std::string system = system_name(method);
            std::vector<std::pair<ItemSet, ItemSet>> splits;
            for (const auto& c : cfg.concepts) {
                ItemSet aug = timer.run("augment", [&] {
                    return augment_set(items.at(c), method, cfg.augmentation, lexicon ? &*lexicon : nullptr,
                                       adapter.get(), threads);
                });
                auto parts = timer.run("split", [&] {
                    return split_items(aug, SplitSpec{cfg.item_split_ratio, cfg.seed, true});
                });
                json& cj = counts["items"][c.str()][system];
                cj["augmented"] = counts_json(aug);
                cj["train"] = parts.first.size();
                cj["val"] = parts.second.size();
                splits.push_back(std::move(parts));
            }
            std::vector<Model> trained(cfg.concepts.size());
            timer.run("train", [&] {
                parallel_for(cfg.concepts.size(), threads, [&](std::size_t i) {
                    try {
                        trained[i] = train(splits[i].first, splits[i].second, cfg.train);
                    } catch (const std::exception& e) {
                        throw Error(system + "/" + cfg.concepts[i].str() + ": " + e.what());
                    }
                });
                return 0;
            });
            auto& models = result.models[system];
            for (auto& m : trained) {
                const ConceptId c = m.concept_id;
                models.emplace(c, std::move(m));
            }
        }
    }

    if (in_domain) {
        auto& models = result.models[kInDomain];
        for (const auto& c : cfg.concepts) {
            auto tweets_of = [&](const std::vector<Profile>& part) {
                std::vector<LabeledText> out;
                for (const auto& p : part) {
                    const auto label = as_polarity(p.gold_for(c));
                    if (!label) continue;
                    for (const auto& t : p.tweets) out.push_back({t, *label});
                }
                return out;
            };
            const auto tr = tweets_of(psplit.train);
            const auto va = tweets_of(psplit.val);
            const auto n_pos = std::count_if(tr.begin(), tr.end(), [](const auto& t) { return t.label == Polarity::pos; });
            counts["in_domain"][c.str()] = {{"train_tweets", tr.size()}, {"val_tweets", va.size()}};
            if (va.empty() || n_pos == 0 || static_cast<std::size_t>(n_pos) == tr.size()) {
                warnings.push_back("in-domain: skipped '" + c.str() +
                                   "' (needs both classes in train and labeled validation tweets)");
                continue;
            }
            models.emplace(c, timer.run("train", [&] { return train(c, tr, va, cfg.train); }));
        }
    }

    // predict + aggregate + evaluate
    std::map<std::string, std::vector<ProfilePrediction>> predictions;
    for (const auto& [system, models] : result.models) {
        std::vector<ConceptId> wanted;
        for (const auto& c : cfg.concepts) {
            if (models.contains(c)) wanted.push_back(c);
        }
        predictions[system] = timer.run("predict", [&] {
            return predict_corpus(models, psplit.test, wanted, threads);
        });
    }

    // Table order: psychometric systems in config order, then in-domain, then baseline.
    std::vector<std::string> system_order;
    if (psychometric) {
        for (auto m : cfg.methods) system_order.push_back(system_name(m));
    }
    if (in_domain) system_order.push_back(kInDomain);

    timer.run("evaluate", [&] {
        for (const auto& c : cfg.concepts) {
            std::vector<Polarity> golds;
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < psplit.test.size(); ++i) {
                if (auto g = as_polarity(psplit.test[i].gold_for(c))) {
                    golds.push_back(*g);
                    rows.push_back(i);
                }
            }
            if (golds.empty()) {
                warnings.push_back("evaluate: no labeled test profiles for '" + c.str() + "'");
                continue;
            }
            for (const auto& system : system_order) {
                const auto& preds = predictions[system];
                if (!result.models[system].contains(c)) continue;
                std::vector<Polarity> p;
                for (std::size_t i : rows) p.push_back(preds[i].per_concept.at(c).label);
                result.reports.add(c.str(), system, score(p, golds));
            }

            std::vector<Polarity> train_golds;
            for (const auto& prof : psplit.train) {
                if (auto g = as_polarity(prof.gold_for(c))) train_golds.push_back(*g);
            }
            if (train_golds.empty()) {
                warnings.push_back("evaluate: no labeled train profiles for the '" + c.str() + "' baseline");
                continue;
            }
            const auto dist = ClassDistribution::of(train_golds);
            const auto base = random_baseline(dist, golds, derive_seed(cfg.seed, {"baseline", c.str()}),
                                              cfg.baseline_trials, threads);
            result.reports.add(c.str(), kBaseline, base.mean, SystemKind::baseline, base.stddev);
            counts["baseline"][c.str()] = {{"train_pos_rate", dist.pos}, {"test_profiles", golds.size()}};
        }
        if (result.reports.empty()) throw Error("nothing to evaluate");
        return 0;
    });

    const json settings = cfg.settings_json();
    result.manifest = json{{"format", "psychoseed-manifest"},
                           {"version", 1},
                           {"config_hash", sha256_hex(settings.dump())},
                           {"settings", settings},
                           {"inputs", inputs},
                           {"seeds",
                            {{"global", cfg.seed},
                             {"augmentation", cfg.augmentation.seed},
                             {"item_split", cfg.seed},
                             {"profile_split", cfg.seed},
                             {"train", cfg.train.seed},
                             {"baseline", cfg.seed}}},
                           {"counts", counts},
                           {"warnings", warnings}};
    for (const auto& [system, models] : result.models) {
        for (const auto& [c, m] : models) {
            result.manifest["training"][system][c.str()] = {{"epochs_run", m.meta.epochs_run},
                                                            {"best_epoch", m.meta.best_epoch},
                                                            {"final_val_loss", m.meta.final_val_loss}};
        }
    }

    timer.run("write", [&] {
        json artifacts = json::object();
        const std::string report_json = result.reports.to_json().dump(2) + "\n";
        const std::string report_txt = result.reports.to_text();
        artifacts["report.json"] = sha256_hex(report_json);
        artifacts["report.txt"] = sha256_hex(report_txt);
        std::map<std::string, std::string> files{{"report.json", report_json}, {"report.txt", report_txt}};

        for (const auto& [system, models] : result.models) {
            for (const auto& [c, m] : models) {
                std::ostringstream buf;
                save_model(buf, m);
                const std::string rel = "models/" + system + "/" + c.str() + ".psd";
                artifacts[rel] = sha256_hex(buf.str());
                files[rel] = buf.str();
            }
        }
        for (const auto& [system, preds] : predictions) {
            std::ostringstream buf;
            for (const auto& p : preds) buf << prediction_to_json(p).dump() << '\n';
            const std::string rel = "predictions/" + system + ".jsonl";
            artifacts[rel] = sha256_hex(buf.str());
            files[rel] = buf.str();
        }
        result.manifest["artifacts"] = artifacts;

        if (opts.write_outputs) {
            for (const auto& [rel, content] : files) write_text(cfg.paths.out / rel, content);
            write_text(cfg.paths.out / "manifest.json", result.manifest.dump(2) + "\n");
        }
        return 0;
    });

    result.run_log = json{{"threads", threads}, {"timings_seconds", timings}};
    if (opts.write_outputs) write_text(cfg.paths.out / "run_log.json", result.run_log.dump(2) + "\n");
    return result;
}

}  // namespace psychoseed
