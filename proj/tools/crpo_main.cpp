#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "crpo/cli.hpp"
#include "crpo/version.hpp"

namespace {

using crpo::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object())
        throw std::runtime_error("config file " + path + " is not a JSON object");
    return cfg;
}

// Precedence: flag > config file > environment > built-in default.
void resolve_string(const CLI::Option* opt, std::string& value, const json& cfg,
                    const char* cfg_key, const char* env_var = nullptr) {
    if (opt && opt->count() > 0) return;
    if (cfg.contains(cfg_key) && cfg[cfg_key].is_string()) {
        value = cfg[cfg_key].get<std::string>();
        return;
    }
    if (env_var)
        if (const char* e = std::getenv(env_var); e && *e) value = e;
}

template <typename T>
void resolve_number(const CLI::Option* opt, T& value, const json& cfg,
                    const char* cfg_key) {
    if (opt && opt->count() > 0) return;
    if (cfg.contains(cfg_key) && cfg[cfg_key].is_number())
        value = cfg[cfg_key].get<T>();
}

void add_provider_flags(CLI::App* cmd, crpo::ProviderFlags& p,
                        std::map<std::string, CLI::Option*>& opts) {
    opts["embed_endpoint"] =
        cmd->add_option("--embed-endpoint", p.embed_endpoint,
                        "Embedding provider endpoint (http(s) URL or store file)");
    opts["embed_model"] = cmd->add_option("--embed-model", p.embed_model);
    opts["ll_endpoint"] =
        cmd->add_option("--ll-endpoint", p.ll_endpoint,
                        "Likelihood provider endpoint");
    opts["ll_model"] = cmd->add_option("--ll-model", p.ll_model);
    opts["reward_endpoint"] =
        cmd->add_option("--reward-endpoint", p.reward_endpoint,
                        "Reward provider endpoint");
    opts["reward_model"] = cmd->add_option("--reward-model", p.reward_model);
    opts["timeout_ms"] = cmd->add_option("--timeout-ms", p.timeout_ms);
    opts["max_batch"] = cmd->add_option("--max-batch", p.max_batch);
    opts["retries"] = cmd->add_option("--retries", p.retries);
    opts["cache_dir"] = cmd->add_option("--cache-dir", p.cache_dir,
                                        "Persist provider caches in this directory");
}

void resolve_provider_flags(crpo::ProviderFlags& p,
                            const std::map<std::string, CLI::Option*>& opts,
                            const json& cfg) {
    resolve_string(opts.at("embed_endpoint"), p.embed_endpoint, cfg, "embed_endpoint",
                   "CRPO_EMBED_ENDPOINT");
    resolve_string(opts.at("embed_model"), p.embed_model, cfg, "embed_model");
    resolve_string(opts.at("ll_endpoint"), p.ll_endpoint, cfg, "ll_endpoint",
                   "CRPO_LL_ENDPOINT");
    resolve_string(opts.at("ll_model"), p.ll_model, cfg, "ll_model");
    resolve_string(opts.at("reward_endpoint"), p.reward_endpoint, cfg,
                   "reward_endpoint", "CRPO_REWARD_ENDPOINT");
    resolve_string(opts.at("reward_model"), p.reward_model, cfg, "reward_model");
    resolve_number(opts.at("timeout_ms"), p.timeout_ms, cfg, "timeout_ms");
    resolve_number(opts.at("max_batch"), p.max_batch, cfg, "max_batch");
    resolve_number(opts.at("retries"), p.retries, cfg, "retries");
    resolve_string(opts.at("cache_dir"), p.cache_dir, cfg, "cache_dir");
    if (const char* tok = std::getenv("CRPO_BEARER_TOKEN"); tok && *tok)
        p.bearer_token = tok;
}

void add_weight_flags(CLI::App* cmd, crpo::InjectionWeights& w,
                      std::map<std::string, CLI::Option*>& opts) {
    opts["lambda_base"] = cmd->add_option("--lambda-base", w.lambda_base,
                                          "Plain-DPO offset weight");
    opts["lambda_d"] = cmd->add_option("--lambda-d", w.lambda_d, "Diversity weight");
    opts["lambda_n"] = cmd->add_option("--lambda-n", w.lambda_n, "Novelty weight");
    opts["lambda_s"] = cmd->add_option("--lambda-s", w.lambda_s, "Surprise weight");
    opts["lambda_q"] = cmd->add_option("--lambda-q", w.lambda_q, "Quality weight");
    opts["beta"] = cmd->add_option("--beta", w.beta, "DPO temperature");
}

void resolve_weight_flags(crpo::InjectionWeights& w,
                          const std::map<std::string, CLI::Option*>& opts,
                          const json& cfg) {
    resolve_number(opts.at("lambda_base"), w.lambda_base, cfg, "lambda_base");
    resolve_number(opts.at("lambda_d"), w.lambda_d, cfg, "lambda_d");
    resolve_number(opts.at("lambda_n"), w.lambda_n, cfg, "lambda_n");
    resolve_number(opts.at("lambda_s"), w.lambda_s, cfg, "lambda_s");
    resolve_number(opts.at("lambda_q"), w.lambda_q, cfg, "lambda_q");
    resolve_number(opts.at("beta"), w.beta, cfg, "beta");
}

json provider_config_json(const crpo::ProviderFlags& p) {
    json j = p.identifiers();
    j["timeout_ms"] = p.timeout_ms;
    j["max_batch"] = p.max_batch;
    j["retries"] = p.retries;
    j["cache_dir"] = p.cache_dir;
    return j;
}

json weights_config_json(const crpo::InjectionWeights& w) {
    return crpo::weights_to_json(w);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crpo: creativity-preference dataset curation, scoring, training, "
                 "and evaluation"};
    app.set_version_flag("--version", crpo::kArtifactVersion);
    app.require_subcommand(1);

    crpo::GlobalOptions global;
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")
        ->envname("CRPO_CONFIG");
    auto* seed_opt = app.add_option("--seed", global.seed, "Root seed");
    auto* threads_opt =
        app.add_option("--threads", global.threads, "Intra-stage parallelism cap");
    app.add_option("--out-dir", global.out_dir, "Output directory");

    // curate
    crpo::CurateCliOptions curate;
    auto* curate_cmd =
        app.add_subcommand("curate", "Build preference pairs and an SFT set");
    curate_cmd->add_option("--in", curate.input, "Rated-corpus JSONL")->required();
    std::map<std::string, CLI::Option*> curate_opts;
    curate_opts["margin"] =
        curate_cmd->add_option("--margin", curate.curation.margin_min,
                               "Minimum chosen-rejected rating margin");
    curate_opts["min_rating"] =
        curate_cmd->add_option("--min-rating", curate.curation.min_rating,
                               "Minimum rating for either side of a pair");
    curate_opts["cap"] =
        curate_cmd->add_option("--cap", curate.curation.max_pairings_per_response,
                               "Max pairings per response");
    curate_opts["sft_threshold"] = curate_cmd->add_option(
        "--sft-threshold", curate.sft_threshold, "SFT examples need rating > this");
    curate_cmd->add_flag("--agreement,!--no-agreement", curate.agreement,
                         "Keep only full-agreement records");
    curate_cmd->add_option("--rescale", curate.rescale)
        ->check(CLI::IsMember({"auto", "always", "never"}));
    curate_cmd->add_flag("--group-by-language", curate.group_by_language,
                         "Rescale per (task, language) instead of per task");
    curate_cmd->add_flag("--strict", curate.strict,
                         "Fail on the first malformed input line");

    // score
    crpo::ScoreCliOptions score;
    auto* score_cmd = app.add_subcommand("score", "Compute creativity scores and "
                                                  "composite weights for pairs");
    score_cmd->add_option("--in", score.input, "Preference pairs JSONL")->required();
    std::map<std::string, CLI::Option*> score_provider_opts, score_weight_opts;
    add_provider_flags(score_cmd, score.providers, score_provider_opts);
    add_weight_flags(score_cmd, score.scoring.weights, score_weight_opts);
    std::string score_dsi_mode = "paper_literal", score_surprise = "per_token";
    score_cmd->add_option("--dsi-mode", score_dsi_mode)
        ->check(CLI::IsMember({"paper_literal", "pair_mean"}));
    score_cmd->add_option("--surprise-norm", score_surprise)
        ->check(CLI::IsMember({"per_token", "total"}));
    score_cmd->add_flag("--dsi-stopwords", score.scoring.dsi.remove_stopwords,
                        "Drop stopwords before DSI");
    score_cmd->add_flag("--per-task-norm", score.scoring.per_task_normalization,
                        "Normalize per task instead of globally");

    // train
    crpo::TrainCliOptions train;
    auto* train_cmd =
        app.add_subcommand("train", "Gradient-descend a tabular policy on the "
                                    "weighted preference objective");
    train_cmd->add_option("--pairs", train.pairs_path, "Scored pairs JSONL")
        ->required();
    train_cmd->add_option("--sft", train.sft_path,
                          "SFT JSONL for the reference policy (uniform if absent)");
    std::map<std::string, CLI::Option*> train_weight_opts;
    add_weight_flags(train_cmd, train.weights, train_weight_opts);
    std::map<std::string, CLI::Option*> train_opts;
    train_opts["lr"] = train_cmd->add_option("--lr", train.learning_rate);
    train_opts["epochs"] = train_cmd->add_option("--epochs", train.epochs);
    size_t train_batch = 0;
    train_opts["batch_size"] = train_cmd->add_option(
        "--batch-size", train_batch, "Mini-batch size (0 = full batch)");

    // eval
    crpo::EvalCliOptions eval;
    auto* eval_cmd = app.add_subcommand(
        "eval", "Score generation sets and compute distinct_k / utility_k");
    bool print_grid = false;
    eval_cmd->add_flag("--print-decoding-grid", print_grid,
                       "Print the high-randomness decoding grid preset and exit");
    auto* eval_in =
        eval_cmd->add_option("--in", eval.input, "Generation sets JSONL");
    eval_cmd->add_option("--reference-pairs", eval.reference_pairs_path,
                         "Pairs JSONL supplying the novelty reference corpus");
    eval_cmd->add_option("--judgments", eval.judgments_path,
                         "Pairwise human-judgment CSV for win rates");
    std::map<std::string, CLI::Option*> eval_provider_opts;
    add_provider_flags(eval_cmd, eval.providers, eval_provider_opts);
    std::map<std::string, CLI::Option*> eval_opts;
    eval_opts["k"] = eval_cmd->add_option("--k", eval.k,
                                          "Generations per set (0 = use all)");
    eval_opts["patience"] = eval_cmd->add_option("--patience", eval.patience);
    eval_cmd->add_option("--equivalence", eval.equivalence)
        ->check(CLI::IsMember({"exact", "embedding"}));
    eval_cmd->add_option("--equiv-threshold", eval.equiv_threshold);
    std::string eval_dsi_mode = "paper_literal", eval_surprise = "per_token";
    eval_cmd->add_option("--dsi-mode", eval_dsi_mode)
        ->check(CLI::IsMember({"paper_literal", "pair_mean"}));
    eval_cmd->add_option("--surprise-norm", eval_surprise)
        ->check(CLI::IsMember({"per_token", "total"}));

    // sweep
    crpo::SweepCliOptions sweep;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Train across an injection-weight grid and summarize");
    sweep_cmd->add_option("--pairs", sweep.pairs_path, "Scored pairs JSONL")
        ->required();
    sweep_cmd
        ->add_option("--response-scores", sweep.response_scores_path,
                     "Response scores JSONL from the score command")
        ->required();
    sweep_cmd->add_option("--sft", sweep.sft_path);
    sweep_cmd->add_option("--dimensions", sweep.dimensions,
                          "Dimensions to sweep (novelty diversity surprise quality)");
    sweep_cmd->add_option("--grid", sweep.grid, "Injection-weight grid values");
    sweep_cmd->add_option("--seeds", sweep.num_seeds, "Seed runs to average");
    sweep_cmd->add_option("--lambda-base", sweep.lambda_base);
    sweep_cmd->add_option("--beta", sweep.beta);
    sweep_cmd->add_option("--lr", sweep.learning_rate);
    sweep_cmd->add_option("--epochs", sweep.epochs);
    size_t sweep_batch = 0;
    sweep_cmd->add_option("--batch-size", sweep_batch);
    sweep_cmd->add_flag("!--no-checkpoints", sweep.write_checkpoints,
                        "Skip per-run checkpoint files");

    // report
    crpo::ReportCliOptions report;
    auto* report_cmd =
        app.add_subcommand("report", "Merge scored generation files into reports");
    report_cmd->add_option("--in", report.inputs, "Scored generations JSONL files")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = load_config(config_path);
        resolve_number(seed_opt, global.seed, cfg, "seed");
        resolve_number(threads_opt, global.threads, cfg, "threads");

        if (curate_cmd->parsed()) {
            resolve_number(curate_opts.at("margin"), curate.curation.margin_min, cfg,
                           "margin");
            resolve_number(curate_opts.at("min_rating"), curate.curation.min_rating,
                           cfg, "min_rating");
            resolve_number(curate_opts.at("cap"),
                           curate.curation.max_pairings_per_response, cfg, "cap");
            resolve_number(curate_opts.at("sft_threshold"), curate.sft_threshold, cfg,
                           "sft_threshold");
            global.resolved_config = {
                {"command", "curate"},
                {"margin", curate.curation.margin_min},
                {"min_rating", curate.curation.min_rating},
                {"cap", curate.curation.max_pairings_per_response},
                {"sft_threshold", curate.sft_threshold},
                {"agreement", curate.agreement},
                {"rescale", curate.rescale},
                {"group_by_language", curate.group_by_language},
                {"strict", curate.strict}};
            return crpo::run_curate(global, curate, std::cout);
        }
        if (score_cmd->parsed()) {
            resolve_provider_flags(score.providers, score_provider_opts, cfg);
            resolve_weight_flags(score.scoring.weights, score_weight_opts, cfg);
            score.scoring.dsi.denominator = score_dsi_mode == "pair_mean"
                                                ? crpo::DsiDenominator::pair_mean
                                                : crpo::DsiDenominator::paper_literal;
            score.scoring.surprise_norm =
                score_surprise == "total" ? crpo::SurpriseNormalization::total
                                          : crpo::SurpriseNormalization::per_token;
            global.resolved_config = {{"command", "score"},
                                      {"providers", provider_config_json(score.providers)},
                                      {"weights", weights_config_json(score.scoring.weights)},
                                      {"dsi_mode", score_dsi_mode},
                                      {"surprise_norm", score_surprise},
                                      {"per_task_norm", score.scoring.per_task_normalization}};
            return crpo::run_score(global, score, std::cout);
        }
        if (train_cmd->parsed()) {
            resolve_weight_flags(train.weights, train_weight_opts, cfg);
            resolve_number(train_opts.at("lr"), train.learning_rate, cfg, "lr");
            resolve_number(train_opts.at("epochs"), train.epochs, cfg, "epochs");
            resolve_number(train_opts.at("batch_size"), train_batch, cfg, "batch_size");
            if (train_batch > 0) train.batch_size = train_batch;
            global.resolved_config = {{"command", "train"},
                                      {"with_sft", !train.sft_path.empty()},
                                      {"weights", weights_config_json(train.weights)},
                                      {"lr", train.learning_rate},
                                      {"epochs", train.epochs},
                                      {"batch_size", train_batch}};
            return crpo::run_train(global, train, std::cout);
        }
        if (eval_cmd->parsed()) {
            if (print_grid) {
                std::cout << crpo::decoding_grid_preset().dump(2) << "\n";
                return 0;
            }
            if (eval_in->count() == 0 && eval.judgments_path.empty())
                throw std::runtime_error("eval requires --in or --judgments");
            resolve_provider_flags(eval.providers, eval_provider_opts, cfg);
            resolve_number(eval_opts.at("k"), eval.k, cfg, "k");
            resolve_number(eval_opts.at("patience"), eval.patience, cfg, "patience");
            eval.use_embeddings = !eval.providers.embed_endpoint.empty();
            eval.use_likelihood = !eval.providers.ll_endpoint.empty();
            eval.use_reward = !eval.providers.reward_endpoint.empty();
            eval.dsi.denominator = eval_dsi_mode == "pair_mean"
                                       ? crpo::DsiDenominator::pair_mean
                                       : crpo::DsiDenominator::paper_literal;
            eval.surprise_norm = eval_surprise == "total"
                                     ? crpo::SurpriseNormalization::total
                                     : crpo::SurpriseNormalization::per_token;
            global.resolved_config = {{"command", "eval"},
                                      {"with_reference", !eval.reference_pairs_path.empty()},
                                      {"providers", provider_config_json(eval.providers)},
                                      {"k", eval.k},
                                      {"patience", eval.patience},
                                      {"equivalence", eval.equivalence},
                                      {"equiv_threshold", eval.equiv_threshold},
                                      {"dsi_mode", eval_dsi_mode},
                                      {"surprise_norm", eval_surprise}};
            return crpo::run_eval(global, eval, std::cout);
        }
        if (sweep_cmd->parsed()) {
            if (sweep_batch > 0) sweep.batch_size = sweep_batch;
            global.resolved_config = {{"command", "sweep"},
                                      {"with_sft", !sweep.sft_path.empty()},
                                      {"dimensions", sweep.dimensions},
                                      {"grid", sweep.grid},
                                      {"seeds", sweep.num_seeds},
                                      {"lambda_base", sweep.lambda_base},
                                      {"beta", sweep.beta},
                                      {"lr", sweep.learning_rate},
                                      {"epochs", sweep.epochs}};
            return crpo::run_sweep(global, sweep, std::cout);
        }
        if (report_cmd->parsed()) {
            global.resolved_config = {{"command", "report"}, {"inputs", report.inputs.size()}};
            return crpo::run_report(global, report, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
