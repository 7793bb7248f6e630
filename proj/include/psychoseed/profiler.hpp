#pragma once

#include "psychoseed/classifier.hpp"
#include "psychoseed/corpus.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace psychoseed {

struct ConceptVote {
    Polarity label = Polarity::pos;
    std::size_t pos_votes = 0;
    std::size_t neg_votes = 0;
    double mean_p_pos = 0.5;

    friend bool operator==(const ConceptVote&, const ConceptVote&) = default;
};

struct ProfilePrediction {
    std::string user_id;
    std::map<ConceptId, ConceptVote> per_concept;
};

using ModelSet = std::map<ConceptId, Model>;

/// Majority vote over per-tweet probabilities (p >= 0.5 votes pos). Ties
/// go to pos when the mean probability is >= 0.5, otherwise neg. The mean is
/// summed in ascending order so it does not depend on tweet order.
ConceptVote aggregate_votes(std::span<const double> p_pos);

/// Labels every tweet with each requested model and aggregates per concept.
/// An empty `concepts` list means every model in `models`.
ProfilePrediction predict_profile(const ModelSet& models, const Profile& profile,
                                  const std::vector<ConceptId>& concepts = {});

/// Called with the number of finished profiles, every 100 profiles and at the end.
using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// predict_profile over all profiles; output order matches input order.
std::vector<ProfilePrediction> predict_corpus(const ModelSet& models, const std::vector<Profile>& profiles,
                                              const std::vector<ConceptId>& concepts = {}, unsigned threads = 1,
                                              const ProgressFn& progress = {});

/// Per-tweet probabilities for one concept, as written by `psychoseed predict`.
struct TweetScores {
    std::string user_id;
    std::map<ConceptId, std::vector<double>> p_pos;
};

std::vector<TweetScores> score_tweets(const ModelSet& models, const std::vector<Profile>& profiles,
                                      unsigned threads = 1);
std::vector<ProfilePrediction> aggregate(const std::vector<TweetScores>& scores);

void save_tweet_scores(const std::filesystem::path& path, const std::vector<TweetScores>& scores);
std::vector<TweetScores> load_tweet_scores(const std::filesystem::path& path);

/// One predictions.jsonl line.
nlohmann::json prediction_to_json(const ProfilePrediction& p);
void save_predictions(const std::filesystem::path& path, const std::vector<ProfilePrediction>& preds);
std::vector<ProfilePrediction> load_predictions(const std::filesystem::path& path);

}  // namespace psychoseed
