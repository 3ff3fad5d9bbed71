#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crpo/corpus.hpp"
#include "crpo/curation.hpp"
#include "crpo/eval.hpp"
#include "crpo/objective.hpp"
#include "crpo/providers.hpp"
#include "crpo/scoring.hpp"

namespace crpo {

// Separator joining task and prompt into one policy/prompt key.
inline constexpr char kKeySep = '\x1f';

std::string make_prompt_key(const std::string& task, const std::string& prompt);

struct ProviderFlags {
    std::string embed_endpoint;
    std::string embed_model = "stub-embedding";
    std::string ll_endpoint;
    std::string ll_model = "stub-likelihood";
    std::string reward_endpoint;
    std::string reward_model = "stub-reward";
    int timeout_ms = 30000;
    size_t max_batch = 32;
    size_t retries = 2;
    std::string bearer_token;
    std::string cache_dir;  // empty: in-memory cache only

    ProviderConfig embedding_config() const;
    ProviderConfig likelihood_config() const;
    ProviderConfig reward_config() const;
    json identifiers() const;
};

struct GlobalOptions {
    std::string out_dir = ".";
    uint64_t seed = 0;
    int threads = 1;
    json resolved_config = json::object();  // embedded in the run manifest
};

struct CurateCliOptions {
    std::string input;
    CurationOptions curation;
    int sft_threshold = 30;
    bool agreement = true;
    std::string rescale = "auto";  // auto | always | never
    bool group_by_language = false;
    bool strict = false;
};

struct ScoreCliOptions {
    std::string input;
    ProviderFlags providers;
    ScoreOptions scoring;
};

struct TrainCliOptions {
    std::string pairs_path;
    std::string sft_path;  // optional; uniform reference when empty
    InjectionWeights weights;
    double learning_rate = 0.05;
    size_t epochs = 100;
    std::optional<size_t> batch_size;
    std::string checkpoint_name = "checkpoint.json";
    std::string log_name = "training_log.csv";
};

struct EvalCliOptions {
    std::string input;
    std::string reference_pairs_path;  // optional novelty reference corpus
    std::string judgments_path;        // optional pairwise-judgment CSV
    ProviderFlags providers;
    bool use_embeddings = false;
    bool use_likelihood = false;
    bool use_reward = false;
    size_t k = 10;
    double patience = 0.8;
    std::string equivalence = "exact";  // exact | embedding
    double equiv_threshold = 0.9;
    DsiConfig dsi;
    SurpriseNormalization surprise_norm = SurpriseNormalization::per_token;
};

struct SweepCliOptions {
    std::string pairs_path;
    std::string response_scores_path;
    std::string sft_path;  // optional
    std::vector<std::string> dimensions = {"diversity", "novelty", "surprise",
                                           "quality"};
    std::vector<double> grid = {0.0, 0.5, 1.0, 1.5, 2.0};
    size_t num_seeds = 3;
    double lambda_base = 0.0;
    double beta = 0.1;
    double learning_rate = 0.05;
    size_t epochs = 100;
    std::optional<size_t> batch_size;
    bool write_checkpoints = true;
};

struct ReportCliOptions {
    std::vector<std::string> inputs;  // scored_generations.jsonl files
};

// Each command is a pure function of (inputs, flags, seed). All return 0 on
// success and throw on failure; the binary maps exceptions to exit code 1.
int run_curate(const GlobalOptions& g, const CurateCliOptions& o, std::ostream& log);
int run_score(const GlobalOptions& g, const ScoreCliOptions& o, std::ostream& log);
int run_train(const GlobalOptions& g, const TrainCliOptions& o, std::ostream& log);
int run_eval(const GlobalOptions& g, const EvalCliOptions& o, std::ostream& log);
int run_sweep(const GlobalOptions& g, const SweepCliOptions& o, std::ostream& log);
int run_report(const GlobalOptions& g, const ReportCliOptions& o, std::ostream& log);

// Shared by train and sweep: candidate tables and weighted examples derived
// from a scored pair set.
struct TrainingTables {
    std::vector<std::string> prompts;                  // composite keys
    std::vector<std::vector<std::string>> candidates;  // response ids
    std::vector<PreferenceExample> examples;
};

TrainingTables build_training_tables(const std::vector<PreferencePair>& pairs,
                                     const InjectionWeights& weights);

// Reference policy from an optional SFT file; SFT rows without a matching
// prompt/candidate are skipped (count reported through `skipped`).
TabularPolicy reference_from_sft(const std::vector<SftExample>& sft,
                                 const TrainingTables& tables, size_t* skipped);

}  // namespace crpo
