#include "psychoseed/adapter_server.hpp"
#include "psychoseed/augment.hpp"
#include "psychoseed/classifier.hpp"
#include "psychoseed/corpus.hpp"
#include "psychoseed/eval.hpp"
#include "psychoseed/experiment.hpp"
#include "psychoseed/explain.hpp"
#include "psychoseed/profiler.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psychoseed;

namespace {

struct Globals {
    std::uint64_t seed = 42;
    unsigned threads = 0;
    std::string out;

    unsigned workers() const { return threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency()); }
};

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

fs::path require_out(const Globals& g, const char* what) {
    if (g.out.empty()) throw Error(std::string("--out ") + what + " is required");
    return g.out;
}

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

json counts_json(const std::map<ConceptId, LabelCounts>& counts) {
    json j = json::object();
    for (const auto& [c, lc] : counts) {
        j[c.str()] = {{"pos", lc.pos},
                      {"neg", lc.neg},
                      {"excluded", lc.excluded},
                      {"pos_tweets", lc.pos_tweets},
                      {"neg_tweets", lc.neg_tweets}};
    }
    return j;
}

// ingest

struct IngestArgs {
    std::string items, profiles, truth, pan_dir, truth_columns;
    bool normalize = false;
};

void run_ingest(const IngestArgs& a, const Globals& g) {
    const fs::path out = require_out(g, "<dir>");
    json stats = json::object();

    if (!a.items.empty()) {
        const ItemCorpus items = load_items(a.items);
        save_items(out / "items.jsonl", items);
        for (const auto& [c, set] : items) {
            stats["items"][c.str()] = {{"total", set.size()},
                                       {"pos", set.count(Polarity::pos)},
                                       {"neg", set.count(Polarity::neg)}};
        }
    }

    ProfileLoadOptions po;
    if (!a.truth_columns.empty()) po.columns = TruthColumns::parse(a.truth_columns);
    po.normalize = a.normalize;

    std::optional<ProfileCorpus> profiles;
    if (!a.pan_dir.empty()) {
        if (a.truth.empty()) throw Error("--pan-dir needs --truth");
        profiles = convert_pan(a.pan_dir, a.truth, po);
    } else if (!a.profiles.empty()) {
        profiles = load_profiles(a.profiles, opt_path(a.truth), po);
    }
    if (profiles) {
        save_profiles(out / "profiles.jsonl", profiles->profiles);
        stats["profiles"] = profiles->profiles.size();
        stats["labels"] = counts_json(profiles->counts);
        stats["warnings"] = profiles->warnings;
        for (const auto& w : profiles->warnings) std::cerr << "warning: " << w << '\n';
    }
    if (stats.empty()) throw Error("nothing to ingest: pass --items, --profiles or --pan-dir");
    write_file(out / "stats.json", stats.dump(2) + "\n");
    std::cout << stats.dump(2) << '\n';
}

// augment

struct AugmentArgs {
    std::string method = "eda", items, lexicon, stopwords, adapter = "mock", config;
    std::vector<std::string> concepts;
    bool no_dedup = false;
};

void run_augment(const AugmentArgs& a, const Globals& g) {
    const fs::path out = require_out(g, "<path>");
    AugmentationConfig cfg;
    cfg.seed = g.seed;
    if (!a.config.empty()) {
        json j = read_json(a.config);
        if (j.contains("augmentation")) j = j["augmentation"];
        j.erase("methods");
        j.erase("method");
        j.erase("adapter");
        cfg = augmentation_from_json(j, cfg);
    }
    if (a.no_dedup) cfg.dedup = false;

    const AugmentMethod method = parse_augment_method(a.method);
    std::optional<SynonymLexicon> lexicon;
    if (method == AugmentMethod::eda) {
        if (a.lexicon.empty()) throw Error("--method eda needs --lexicon");
        lexicon = SynonymLexicon::load(a.lexicon, a.stopwords);
    }
    std::unique_ptr<GenerationAdapter> adapter;
    if (method == AugmentMethod::paraphrase || method == AugmentMethod::generate) adapter = make_adapter(a.adapter);

    const ItemCorpus items = load_items(a.items);
    ItemCorpus result;
    for (const auto& [c, set] : items) {
        if (!a.concepts.empty() && std::find(a.concepts.begin(), a.concepts.end(), c.str()) == a.concepts.end()) {
            continue;
        }
        ItemSet aug = augment_set(set, method, cfg, lexicon ? &*lexicon : nullptr, adapter.get(), g.workers());
        std::cerr << c.str() << ": " << set.size() << " -> " << aug.size() << " items\n";
        result.emplace(c, std::move(aug));
    }
    if (result.empty()) throw Error("no items selected");
    save_items(out, result);
}

// train

struct TrainArgs {
    std::string concept_name, train, val, config;
    double split_ratio = 0.8;
    int ngrams = 0;
    bool verbose = false;
};

const ItemSet& pick_concept(const ItemCorpus& corpus, const std::string& name, const std::string& path) {
    if (name.empty()) {
        if (corpus.size() != 1) throw Error("'" + path + "' holds several concepts; pass --concept");
        return corpus.begin()->second;
    }
    auto it = corpus.find(ConceptId(name));
    if (it == corpus.end()) throw Error("no '" + name + "' items in '" + path + "'");
    return it->second;
}

void run_train(const TrainArgs& a, const Globals& g) {
    const fs::path out = require_out(g, "model.psd");
    TrainConfig cfg;
    cfg.seed = g.seed;
    if (!a.config.empty()) {
        json j = read_json(a.config);
        if (j.contains("train")) j = j["train"];
        cfg = train_config_from_json(j, cfg);
    }
    if (a.ngrams != 0) {
        cfg.features.ngrams = a.ngrams;
        cfg.validate();
    }
    const ItemCorpus train_items = load_items(a.train);
    ItemSet tr = pick_concept(train_items, a.concept_name, a.train);
    ItemSet va;
    if (a.val.empty()) {
        // Grouped split so augmented items stay with their original.
        std::tie(tr, va) = split_items(tr, SplitSpec{a.split_ratio, g.seed, true});
    } else {
        const ItemCorpus val_items = load_items(a.val);
        va = pick_concept(val_items, tr.concept_id.str(), a.val);
    }

    EpochCallback cb;
    if (a.verbose) {
        cb = [](int epoch, double train_loss, double val_loss) {
            std::cerr << "epoch " << epoch << " train_loss " << train_loss << " val_loss " << val_loss << '\n';
        };
    }
    const Model model = train(tr, va, cfg, cb);
    save_model(out, model);
    std::cout << json{{"concept", model.concept_id.str()},
                      {"epochs_run", model.meta.epochs_run},
                      {"best_epoch", model.meta.best_epoch},
                      {"final_val_loss", model.meta.final_val_loss}}
                     .dump()
              << '\n';
}

// predict / aggregate

ModelSet load_models(const std::vector<std::string>& paths) {
    ModelSet models;
    for (const auto& p : paths) {
        std::vector<fs::path> files;
        if (fs::is_directory(p)) {
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.path().extension() == ".psd") files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
        } else {
            files.emplace_back(p);
        }
        for (const auto& f : files) {
            Model m = load_model(f);
            const ConceptId c = m.concept_id;
            if (!models.emplace(c, std::move(m)).second) throw Error("two models for '" + c.str() + "'");
        }
    }
    if (models.empty()) throw Error("no models found");
    return models;
}

struct PredictArgs {
    std::vector<std::string> models;
    std::string profiles, truth;
    bool aggregate_now = false;
};

std::vector<Profile> load_tweets_only(const std::string& path, const std::string& truth) {
    ProfileLoadOptions po;
    return load_profiles(path, opt_path(truth), po).profiles;
}

void run_predict(const PredictArgs& a, const Globals& g) {
    const fs::path out = require_out(g, "<path>");
    const ModelSet models = load_models(a.models);
    const auto profiles = load_tweets_only(a.profiles, a.truth);
    if (a.aggregate_now) {
        save_predictions(out, predict_corpus(models, profiles, {}, g.workers(), [](std::size_t done, std::size_t total) {
                             std::cerr << "predicted " << done << "/" << total << " profiles\n";
                         }));
    } else {
        save_tweet_scores(out, score_tweets(models, profiles, g.workers()));
    }
}

void run_aggregate(const std::string& scores, const Globals& g) {
    save_predictions(require_out(g, "<path>"), aggregate(load_tweet_scores(scores)));
}

// evaluate

struct EvaluateArgs {
    std::string pred, gold, truth, baseline_dist, system = "model", truth_columns;
    std::size_t trials = 1000;
};

ClassDistribution dist_from_json(const json& j) {
    ClassDistribution d;
    d.pos = j.at("pos").get<double>();
    d.neg = j.value("neg", 1.0 - d.pos);
    d.validate();
    return d;
}

void run_evaluate(const EvaluateArgs& a, const Globals& g) {
    const fs::path out = require_out(g, "<dir>");
    const auto preds = load_predictions(a.pred);
    ProfileLoadOptions po;
    if (!a.truth_columns.empty()) po.columns = TruthColumns::parse(a.truth_columns);
    const auto gold = load_profiles(a.gold, opt_path(a.truth), po);

    std::map<std::string, const Profile*> by_user;
    for (const auto& p : gold.profiles) by_user[p.user_id] = &p;

    std::optional<json> dist_j;
    if (!a.baseline_dist.empty()) dist_j = read_json(a.baseline_dist);

    std::set<ConceptId> concepts;
    for (const auto& p : preds) {
        for (const auto& [c, v] : p.per_concept) concepts.insert(c);
    }

    ReportTable table;
    for (const auto& c : concepts) {
        std::vector<Polarity> p_labels, golds;
        for (const auto& p : preds) {
            auto it = by_user.find(p.user_id);
            if (it == by_user.end()) throw Error("no gold profile for user '" + p.user_id + "'");
            auto vote = p.per_concept.find(c);
            if (vote == p.per_concept.end()) continue;
            if (auto gl = as_polarity(it->second->gold_for(c))) {
                p_labels.push_back(vote->second.label);
                golds.push_back(*gl);
            }
        }
        if (golds.empty()) {
            std::cerr << "warning: no labeled profiles for '" << c.str() << "'\n";
            continue;
        }
        table.add(c.str(), a.system, score(p_labels, golds));
        if (dist_j) {
            const json& dj = dist_j->contains(c.str()) ? (*dist_j)[c.str()] : *dist_j;
            if (!dj.contains("pos")) throw Error("--baseline-dist has no distribution for '" + c.str() + "'");
            const auto base =
                random_baseline(dist_from_json(dj), golds, derive_seed(g.seed, {"baseline", c.str()}), a.trials,
                                g.workers());
            table.add(c.str(), "baseline", base.mean, SystemKind::baseline, base.stddev);
        }
    }
    if (table.empty()) throw Error("nothing to evaluate");
    write_file(out / "report.json", table.to_json().dump(2) + "\n");
    write_file(out / "report.txt", table.to_text());
    std::cout << table.to_text();
}

// explain

struct ExplainArgs {
    std::string model, text, html;
    std::size_t samples = 2000;
    std::size_t top_k = 5;
    bool color = false;
};

void run_explain(const ExplainArgs& a, const Globals& g) {
    const Model model = load_model(fs::path(a.model));
    ExplainOptions opts;
    opts.threads = g.workers();
    const Explanation exp = explain(model, a.text, a.samples, g.seed, opts);
    if (!g.out.empty()) write_file(g.out, explanation_to_json(exp, a.top_k).dump(2) + "\n");
    if (!a.html.empty()) write_file(a.html, render_html(exp, a.top_k));
    std::cout << "p_pos " << exp.p_pos_original << '\n' << render_terminal(exp, a.top_k, a.color) << '\n';
}

// run-experiment

void run_experiment_cmd(const std::string& config_path, bool quiet, const Globals& g, bool seed_given) {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    if (!g.out.empty()) cfg.paths.out = g.out;
    if (seed_given) {
        cfg.seed = g.seed;
        cfg.augmentation.seed = g.seed;
        cfg.train.seed = g.seed;
    }
    RunOptions opts;
    opts.threads = g.workers();
    opts.log = quiet ? nullptr : &std::cerr;
    const auto result = run_experiment(cfg, opts);
    std::cout << result.reports.to_text();
    for (const auto& w : result.manifest["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    std::cerr << "outputs written to " << cfg.paths.out.string() << '\n';
}

// mock-server

void run_mock_server(const std::string& host, int port) {
    MockAdapter adapter;
    httplib::Server server;
    mount_adapter_routes(server, adapter);
    std::cerr << "mock adapter listening on " << host << ":" << port << '\n';
    if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Profile social-media users with classifiers trained on psychometric items."};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Global random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");
    app.add_option("--out", g.out, "Output file or directory");

    IngestArgs ia;
    auto* ingest = app.add_subcommand("ingest", "Validate items and profiles; convert PAN data");
    ingest->add_option("--items", ia.items, "items.jsonl")->check(CLI::ExistingFile);
    ingest->add_option("--profiles", ia.profiles, "profiles.jsonl")->check(CLI::ExistingFile);
    ingest->add_option("--truth", ia.truth, "Truth file (':::'-separated or JSONL)")->check(CLI::ExistingFile);
    ingest->add_option("--pan-dir", ia.pan_dir, "Directory of PAN <user>.xml files")->check(CLI::ExistingDirectory);
    ingest->add_option("--truth-columns", ia.truth_columns, "Comma-separated truth column map");
    ingest->add_flag("--normalize", ia.normalize, "Lowercase tweets and collapse whitespace");

    AugmentArgs aa;
    auto* augment = app.add_subcommand("augment", "Augment an item corpus");
    augment->add_option("--method", aa.method, "none|eda|paraphrase|generate")->capture_default_str();
    augment->add_option("--items", aa.items, "items.jsonl")->required()->check(CLI::ExistingFile);
    augment->add_option("--lexicon", aa.lexicon, "Synonym TSV")->check(CLI::ExistingFile);
    augment->add_option("--stopwords", aa.stopwords, "Stopword list")->check(CLI::ExistingFile);
    augment->add_option("--adapter", aa.adapter, "'mock' or a base URL")->capture_default_str();
    augment->add_option("--config", aa.config, "JSON augmentation settings")->check(CLI::ExistingFile);
    augment->add_option("--concept", aa.concepts, "Restrict to these concepts");
    augment->add_flag("--no-dedup", aa.no_dedup, "Keep duplicate augmented texts");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train one concept model");
    train_cmd->add_option("--concept", ta.concept_name, "Concept id");
    train_cmd->add_option("--train", ta.train, "Training items")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--val", ta.val, "Validation items (default: grouped split of --train)")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--split-ratio", ta.split_ratio, "Train share when --val is absent")
        ->check(CLI::Range(0.0, 1.0));
    train_cmd->add_option("--config", ta.config, "JSON train settings")->check(CLI::ExistingFile);
    train_cmd->add_option("--ngrams", ta.ngrams, "1 or 2")->check(CLI::IsMember({1, 2}));
    train_cmd->add_flag("-v,--verbose", ta.verbose, "Print per-epoch losses");

    PredictArgs pa;
    auto* predict_cmd = app.add_subcommand("predict", "Score every tweet of every profile");
    predict_cmd->add_option("--model", pa.models, "Model files or directories")->required();
    predict_cmd->add_option("--profiles", pa.profiles, "profiles.jsonl")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--truth", pa.truth, "Truth file when profiles carry no scores")
        ->check(CLI::ExistingFile);
    predict_cmd->add_flag("--aggregate", pa.aggregate_now, "Write profile predictions instead of tweet scores");

    std::string scores_path;
    auto* aggregate_cmd = app.add_subcommand("aggregate", "Majority-vote tweet scores into profile labels");
    aggregate_cmd->add_option("--scores", scores_path, "Tweet scores from predict")->required()->check(
        CLI::ExistingFile);

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Score profile predictions against gold labels");
    evaluate->add_option("--pred", ea.pred, "predictions.jsonl")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--gold", ea.gold, "profiles.jsonl with scores")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--truth", ea.truth, "Truth file for the gold profiles")->check(CLI::ExistingFile);
    evaluate->add_option("--truth-columns", ea.truth_columns, "Comma-separated truth column map");
    evaluate->add_option("--baseline-dist", ea.baseline_dist, "JSON class distribution for the random baseline")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--trials", ea.trials, "Baseline trials")->capture_default_str();
    evaluate->add_option("--system", ea.system, "System name in the report")->capture_default_str();

    ExplainArgs xa;
    auto* explain_cmd = app.add_subcommand("explain", "Per-token attributions for one text");
    explain_cmd->add_option("--model", xa.model, "Model file")->required()->check(CLI::ExistingFile);
    explain_cmd->add_option("--text", xa.text, "Text to explain")->required();
    explain_cmd->add_option("--samples", xa.samples, "Perturbed samples")->capture_default_str();
    explain_cmd->add_option("--top-k", xa.top_k, "Highlighted tokens per sign")->capture_default_str();
    explain_cmd->add_option("--html", xa.html, "Also write an HTML rendering");
    explain_cmd->add_flag("--color", xa.color, "ANSI colors in the terminal rendering");

    std::string config_path;
    bool quiet = false;
    auto* experiment = app.add_subcommand("run-experiment", "Run the full pipeline from a config file");
    experiment->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    experiment->add_flag("-q,--quiet", quiet, "No progress lines");

    std::string host = "127.0.0.1";
    int port = 8765;
    auto* server = app.add_subcommand("mock-server", "Serve the mock adapter over HTTP");
    server->add_option("--host", host)->capture_default_str();
    server->add_option("--port", port)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (*ingest) run_ingest(ia, g);
        else if (*augment) run_augment(aa, g);
        else if (*train_cmd) run_train(ta, g);
        else if (*predict_cmd) run_predict(pa, g);
        else if (*aggregate_cmd) run_aggregate(scores_path, g);
        else if (*evaluate) run_evaluate(ea, g);
        else if (*explain_cmd) run_explain(xa, g);
        else if (*experiment) run_experiment_cmd(config_path, quiet, g, seed_opt->count() > 0);
        else if (*server) run_mock_server(host, port);
    } catch (const StageError& e) {
        std::cerr << "psychoseed: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "psychoseed: [" << stage << "] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
