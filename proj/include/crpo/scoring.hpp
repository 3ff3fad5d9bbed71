#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crpo/curation.hpp"
#include "crpo/metrics.hpp"
#include "crpo/providers.hpp"

namespace crpo {

struct ScoreOptions {
    InjectionWeights weights;
    DsiConfig dsi;
    SurpriseNormalization surprise_norm = SurpriseNormalization::per_token;
    bool per_task_normalization = false;  // default: global min-max per metric
};

struct MinMax {
    double min = 0.0;
    double max = 0.0;
};

// Per-metric normalization statistics, keyed by metric name, or by
// "task\x1fmetric" under per-task normalization.
using NormalizationStats = std::map<std::string, MinMax>;

// Creativity scores of one unique response from the pair dataset. Rejected
// responses are scored too so downstream policy evaluation can look up any
// candidate.
struct ResponseScore {
    std::string id;
    std::string task;
    std::string prompt;
    std::string response;
    bool preferred = false;  // appears as the chosen side of some pair
    CreativityScores scores;
};

struct ScoredDataset {
    std::vector<PreferencePair> pairs;  // scores + weight filled
    std::vector<ResponseScore> responses;
    NormalizationStats norm_stats;
};

// Scores every unique response in the pair dataset: diversity against the
// prompt's preferred set, DSI novelty against the pooled preferred set,
// surprise from the likelihood provider, quality from the reward provider.
// Normalization statistics come from the preferred responses; weights are
// the composite injection weights of each pair's chosen response.
ScoredDataset score_pairs(const std::vector<PreferencePair>& pairs,
                          EmbeddingClient& embeddings,
                          LikelihoodClient& likelihood, RewardClient& reward,
                          const ScoreOptions& opts);

// Scored-pairs JSONL: one metadata header line, then the pair records.
void write_scored_pairs(const ScoredDataset& ds, const ScoreOptions& opts,
                        const json& provider_ids, const std::string& manifest_digest,
                        std::ostream& out);

void write_response_scores(const ScoredDataset& ds, const std::string& manifest_digest,
                           std::ostream& out);
std::vector<ResponseScore> read_response_scores(std::istream& in);

struct ScoredPairsFile {
    json meta;  // header line payload, empty object when absent
    std::vector<PreferencePair> pairs;
};

ScoredPairsFile read_scored_pairs(std::istream& in);

}  // namespace crpo
