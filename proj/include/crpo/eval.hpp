#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crpo/jsonl.hpp"
#include "crpo/metrics.hpp"
#include "crpo/providers.hpp"

namespace crpo {

// k sampled responses to one prompt from one model, with optional
// per-response metrics and equivalence partition.
struct GenerationSet {
    std::string prompt_id;
    std::string prompt;
    std::string model_id;
    std::string task;  // optional grouping label for reports
    std::vector<std::string> generations;
    json decode_params = json::array();     // descriptors aligned with generations
    std::vector<CreativityScores> per_gen_scores;  // empty until scored
    std::vector<int> partition;              // class ids in [1, k], empty until set
    bool novelty_vs_self = false;  // reference corpus fell back to the set itself
};

struct SetAggregates {
    std::optional<double> novelty;
    std::optional<double> diversity;
    std::optional<double> surprise;
    std::optional<double> quality;
};

// Fills per_gen_scores: diversity of each generation against the other k-1,
// novelty against the reference corpus (or the set itself when absent),
// surprise and quality through the providers when given. Returns per-set
// means over the defined values.
SetAggregates score_generation_set(
    GenerationSet& gs,
    const std::optional<std::vector<std::string>>& reference_corpus,
    EmbeddingClient* embeddings, LikelihoodClient* likelihood,
    RewardClient* reward, const DsiConfig& dsi_cfg = {},
    SurpriseNormalization surprise_norm = SurpriseNormalization::per_token);

using EquivalencePredicate =
    std::function<bool(const std::string&, const std::string&)>;

// Exact string match after canonicalization.
EquivalencePredicate exact_match_equivalence();

// Cosine similarity of text embeddings at or above the threshold.
EquivalencePredicate embedding_equivalence(EmbeddingClient& embeddings,
                                           double threshold = 0.9);

// Partitions the generations by the transitive closure of the predicate
// (union-find), writes class ids into gs.partition (first-occurrence
// numbering starting at 1), and returns the class count.
int distinct_k(GenerationSet& gs, const EquivalencePredicate& equivalent);

// Patience-discounted cumulative utility; duplicates of an already-seen
// class contribute nothing but still advance the patience exponent.
double utility_k(const GenerationSet& gs, const std::vector<double>& utilities,
                 double patience);

struct Judgment {
    std::string prompt_id;
    std::string model_a;
    std::string model_b;
    std::string rater_id;
    char winner = 'a';  // 'a' or 'b'
};

struct WinRateRow {
    std::string model_a;
    std::string model_b;
    size_t wins_a = 0;
    size_t wins_b = 0;
    size_t ties = 0;
    // wins_a / (wins_a + wins_b); ties excluded from the denominator
    std::optional<double> win_rate_a;
};

struct ItemOutcome {
    std::string prompt_id;
    std::string model_a;
    std::string model_b;
    char outcome = 't';  // 'a', 'b', or 't' for tie
};

struct WinRateReport {
    std::vector<ItemOutcome> items;
    std::vector<WinRateRow> per_pair;
};

// Majority vote per (prompt, model pair) item; model pairs are canonicalized
// to lexicographic order so mirrored judgments aggregate together.
WinRateReport win_rates(const std::vector<Judgment>& judgments);

std::vector<Judgment> read_judgments_csv(std::istream& in);

// The held-out evaluation decoding grid: four high-randomness sampling
// setups, four samples each.
json decoding_grid_preset();

// JSON-lines parsing of generation sets.
GenerationSet generation_set_from_json(const ordered_json& obj, size_t line_no);
ordered_json generation_set_to_json(const GenerationSet& gs);
std::vector<GenerationSet> read_generation_sets(std::istream& in);

// One fully scored generation set, as serialized by the eval command.
struct ScoredSetRecord {
    GenerationSet set;
    SetAggregates aggregates;
    std::optional<int> distinct;
    std::optional<double> utility;
};

ordered_json scored_set_to_json(const ScoredSetRecord& rec);
ScoredSetRecord scored_set_from_json(const ordered_json& obj, size_t line_no);
std::vector<ScoredSetRecord> read_scored_sets(std::istream& in);

// Per-model per-dimension mean CSV, with per-task breakdown rows under the
// "__all__" global rows, plus plot-ready (model, x, y) dimension pairs.
void write_evaluation_report_csv(const std::vector<ScoredSetRecord>& records,
                                 std::ostream& out,
                                 const std::string& manifest_digest);
json plot_data_json(const std::vector<ScoredSetRecord>& records);

}  // namespace crpo
