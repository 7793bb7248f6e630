#include "psychoseed/profiler.hpp"

#include "psychoseed/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>

namespace psychoseed {
namespace {

using nlohmann::json;

const Model& model_for(const ModelSet& models, const ConceptId& c) {
    auto it = models.find(c);
    if (it == models.end()) throw Error("no model for concept '" + c.str() + "'");
    return it->second;
}

std::vector<ConceptId> resolve_concepts(const ModelSet& models, const std::vector<ConceptId>& concepts) {
    if (!concepts.empty()) return concepts;
    std::vector<ConceptId> all;
    for (const auto& [c, m] : models) all.push_back(c);
    return all;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string at = path.string() + ":" + std::to_string(line_no);
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw ParseError(at + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError(at + ": " + e.what());
        }
    }
}

}  // namespace

ConceptVote aggregate_votes(std::span<const double> p_pos) {
    if (p_pos.empty()) throw Error("cannot aggregate zero tweets");
    ConceptVote v;
    std::vector<double> sorted(p_pos.begin(), p_pos.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double p : sorted) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("tweet probability outside [0, 1]");
        sum += p;
        (p >= 0.5 ? v.pos_votes : v.neg_votes) += 1;
    }
    v.mean_p_pos = std::clamp(sum / static_cast<double>(sorted.size()), 0.0, 1.0);
    if (v.pos_votes != v.neg_votes) {
        v.label = v.pos_votes > v.neg_votes ? Polarity::pos : Polarity::neg;
    } else {
        v.label = v.mean_p_pos >= 0.5 ? Polarity::pos : Polarity::neg;
    }
    return v;
}

ProfilePrediction predict_profile(const ModelSet& models, const Profile& profile,
                                  const std::vector<ConceptId>& concepts) {
    if (profile.tweets.empty()) throw Error("user '" + profile.user_id + "' has no tweets");
    ProfilePrediction out;
    out.user_id = profile.user_id;
    for (const auto& c : resolve_concepts(models, concepts)) {
        const Model& m = model_for(models, c);
        std::vector<double> p;
        p.reserve(profile.tweets.size());
        for (const auto& pred : predict_batch(m, profile.tweets)) p.push_back(pred.p_pos);
        out.per_concept.emplace(c, aggregate_votes(p));
    }
    return out;
}

std::vector<ProfilePrediction> predict_corpus(const ModelSet& models, const std::vector<Profile>& profiles,
                                              const std::vector<ConceptId>& concepts, unsigned threads,
                                              const ProgressFn& progress) {
    const auto wanted = resolve_concepts(models, concepts);
    for (const auto& c : wanted) model_for(models, c);

    std::vector<ProfilePrediction> out(profiles.size());
    std::atomic<std::size_t> done{0};
    std::mutex progress_mu;
    parallel_for(profiles.size(), threads, [&](std::size_t i) {
        try {
            out[i] = predict_profile(models, profiles[i], wanted);
        } catch (const std::exception& e) {
            throw Error("user '" + profiles[i].user_id + "': " + e.what());
        }
        const std::size_t n = ++done;
        if (progress && (n % 100 == 0 || n == profiles.size())) {
            std::lock_guard lock(progress_mu);
            progress(n, profiles.size());
        }
    });
    return out;
}

std::vector<TweetScores> score_tweets(const ModelSet& models, const std::vector<Profile>& profiles,
                                      unsigned threads) {
    std::vector<TweetScores> out(profiles.size());
    parallel_for(profiles.size(), threads, [&](std::size_t i) {
        out[i].user_id = profiles[i].user_id;
        for (const auto& [c, m] : models) {
            auto& p = out[i].p_pos[c];
            for (const auto& pred : predict_batch(m, profiles[i].tweets)) p.push_back(pred.p_pos);
        }
    });
    return out;
}

std::vector<ProfilePrediction> aggregate(const std::vector<TweetScores>& scores) {
    std::vector<ProfilePrediction> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
        ProfilePrediction pp;
        pp.user_id = s.user_id;
        for (const auto& [c, p] : s.p_pos) {
            try {
                pp.per_concept.emplace(c, aggregate_votes(p));
            } catch (const Error& e) {
                throw Error("user '" + s.user_id + "', concept '" + c.str() + "': " + e.what());
            }
        }
        out.push_back(std::move(pp));
    }
    return out;
}

void save_tweet_scores(const std::filesystem::path& path, const std::vector<TweetScores>& scores) {
    auto out = open_out(path);
    for (const auto& s : scores) {
        json j = {{"user_id", s.user_id}};
        for (const auto& [c, p] : s.p_pos) j[c.str()] = p;
        out << j.dump() << '\n';
    }
}

std::vector<TweetScores> load_tweet_scores(const std::filesystem::path& path) {
    std::vector<TweetScores> out;
    for_each_json_line(path, [&](const json& j) {
        TweetScores s;
        s.user_id = j.at("user_id").get<std::string>();
        for (const auto& [key, value] : j.items()) {
            if (key == "user_id") continue;
            s.p_pos.emplace(ConceptId(key), value.get<std::vector<double>>());
        }
        out.push_back(std::move(s));
    });
    return out;
}

json prediction_to_json(const ProfilePrediction& p) {
    json j = {{"user_id", p.user_id}};
    for (const auto& [c, v] : p.per_concept) {
        j[c.str()] = {{"label", to_string(v.label)},
                      {"pos_votes", v.pos_votes},
                      {"neg_votes", v.neg_votes},
                      {"mean_p_pos", v.mean_p_pos}};
    }
    return j;
}

void save_predictions(const std::filesystem::path& path, const std::vector<ProfilePrediction>& preds) {
    auto out = open_out(path);
    for (const auto& p : preds) out << prediction_to_json(p).dump() << '\n';
}

std::vector<ProfilePrediction> load_predictions(const std::filesystem::path& path) {
    std::vector<ProfilePrediction> out;
    for_each_json_line(path, [&](const json& j) {
        ProfilePrediction p;
        p.user_id = j.at("user_id").get<std::string>();
        for (const auto& [key, value] : j.items()) {
            if (key == "user_id") continue;
            ConceptVote v;
            v.label = parse_polarity(value.at("label").get<std::string>());
            v.pos_votes = value.at("pos_votes").get<std::size_t>();
            v.neg_votes = value.at("neg_votes").get<std::size_t>();
            v.mean_p_pos = value.at("mean_p_pos").get<double>();
            p.per_concept.emplace(ConceptId(key), v);
        }
        out.push_back(std::move(p));
    });
    return out;
}

}  // namespace psychoseed
