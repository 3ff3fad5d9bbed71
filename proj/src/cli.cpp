#include "crpo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "crpo/digest.hpp"
#include "crpo/manifest.hpp"
#include "crpo/text.hpp"
#include "crpo/version.hpp"

namespace fs = std::filesystem;

namespace crpo {

std::string make_prompt_key(const std::string& task, const std::string& prompt) {
    std::string key = task;
    key.push_back(kKeySep);
    key += canonical_text(prompt);
    return key;
}

ProviderConfig ProviderFlags::embedding_config() const {
    ProviderConfig cfg;
    cfg.kind = ProviderKind::embedding;
    cfg.endpoint = embed_endpoint;
    cfg.model_id = embed_model;
    cfg.timeout_ms = timeout_ms;
    cfg.max_batch = max_batch;
    cfg.retries = retries;
    cfg.bearer_token = bearer_token;
    return cfg;
}

ProviderConfig ProviderFlags::likelihood_config() const {
    ProviderConfig cfg = embedding_config();
    cfg.kind = ProviderKind::likelihood;
    cfg.endpoint = ll_endpoint;
    cfg.model_id = ll_model;
    return cfg;
}

ProviderConfig ProviderFlags::reward_config() const {
    ProviderConfig cfg = embedding_config();
    cfg.kind = ProviderKind::reward;
    cfg.endpoint = reward_endpoint;
    cfg.model_id = reward_model;
    return cfg;
}

json ProviderFlags::identifiers() const {
    return {{"embedding", {{"endpoint", embed_endpoint}, {"model", embed_model}}},
            {"likelihood", {{"endpoint", ll_endpoint}, {"model", ll_model}}},
            {"reward", {{"endpoint", reward_endpoint}, {"model", reward_model}}}};
}

namespace {

// Inputs are recorded under their basename so the manifest digest depends on
// what was read, not where the run directory happens to live.
void record_input(RunManifest& manifest, const std::string& path) {
    std::string key = fs::path(path).filename().string();
    std::string digest = file_sha256(path);
    int suffix = 2;
    while (manifest.input_digests.count(key) &&
           manifest.input_digests[key] != digest)
        key = fs::path(path).filename().string() + "#" + std::to_string(suffix++);
    manifest.input_digests[key] = digest;
}

std::ofstream open_output(const std::string& dir, const std::string& name,
                          std::vector<std::string>& outputs) {
    fs::create_directories(dir);
    std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    outputs.push_back(name);
    return out;
}

void finish_manifest(RunManifest& manifest, const std::string& dir,
                     const std::string& name) {
    for (const auto& out_name : manifest.output_paths) {
        fs::path out_path = fs::path(dir) / out_name;
        if (!fs::exists(out_path) || fs::file_size(out_path) == 0)
            throw std::runtime_error("output " + out_path.string() +
                                     " was not written");
    }
    manifest.finished_at = now_iso8601();
    fs::create_directories(dir);
    std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << manifest.to_json().dump(2) << "\n";
}

ordered_json meta_line(const std::string& manifest_digest) {
    ordered_json meta;
    meta["_meta"] = {{"artifact_version", kArtifactVersion},
                     {"manifest_digest", manifest_digest}};
    return meta;
}

std::string fmt_num(double v) { return json(v).dump(); }

std::shared_ptr<ProviderCache> make_cache(const ProviderFlags& flags) {
    if (flags.cache_dir.empty()) return std::make_shared<ProviderCache>();
    fs::create_directories(flags.cache_dir);
    return std::make_shared<ProviderCache>(
        (fs::path(flags.cache_dir) / "provider_cache.jsonl").string());
}

json stats_json(const ProviderStats& s) {
    return {{"upstream_requests", s.upstream_requests},
            {"upstream_items", s.upstream_items},
            {"cache_hits", s.cache_hits},
            {"cache_misses", s.cache_misses}};
}

// File-backed provider stores count as run inputs.
void record_store_inputs(RunManifest& manifest, const ProviderFlags& flags,
                         bool embed, bool ll, bool reward) {
    for (const auto& [enabled, endpoint] :
         {std::pair<bool, const std::string&>{embed, flags.embed_endpoint},
          {ll, flags.ll_endpoint},
          {reward, flags.reward_endpoint}}) {
        if (!enabled || endpoint.empty()) continue;
        ProviderConfig probe;
        probe.endpoint = endpoint;
        if (probe.is_file_endpoint()) record_input(manifest, probe.file_path());
    }
}

}  // namespace

int run_curate(const GlobalOptions& g, const CurateCliOptions& o, std::ostream& log) {
    RunManifest manifest;
    manifest.command = "curate";
    manifest.artifact_version = kArtifactVersion;
    manifest.resolved_config = g.resolved_config;
    manifest.seed = g.seed;
    manifest.started_at = now_iso8601();
    record_input(manifest, o.input);

    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + o.input);
    ParseReport report;
    Corpus corpus = parse_rated_records(
        in, o.strict ? ParseStrictness::strict : ParseStrictness::skip_invalid,
        &report);
    if (report.skipped > 0) {
        log << report.skipped << " skipped invalid line(s):\n";
        for (const auto& e : report.errors) log << "  " << e << "\n";
    }

    bool any_unrated = std::any_of(corpus.records.begin(), corpus.records.end(),
                                   [](const RatedResponse& r) { return !r.rating; });
    if (o.rescale == "always" || (o.rescale == "auto" && any_unrated)) {
        RescaleOptions ro;
        ro.group_by_language = o.group_by_language;
        corpus = rescale_ratings(corpus, ro);
        log << "rescaled ratings over " << corpus.size() << " record(s)\n";
    }
    if (o.agreement) {
        size_t before = corpus.size();
        corpus = filter_full_agreement(corpus);
        log << "full-agreement filter kept " << corpus.size() << " of " << before
            << " record(s)\n";
    }

    std::vector<PreferencePair> pairs = build_preference_pairs(corpus, o.curation);
    std::vector<SftExample> sft = build_sft_set(corpus, o.sft_threshold);

    std::string digest = manifest.digest();
    {
        auto out = open_output(g.out_dir, "pairs.jsonl", manifest.output_paths);
        write_jsonl_line(out, meta_line(digest));
        write_pairs(pairs, out);
    }
    {
        auto out = open_output(g.out_dir, "sft.jsonl", manifest.output_paths);
        write_jsonl_line(out, meta_line(digest));
        write_sft(sft, out);
    }
    log << "preference pairs:\n" << dataset_stats(pairs).summary();
    log << "sft examples:\n" << dataset_stats(sft).summary();
    manifest.extra = {{"pairs", dataset_stats(pairs).to_json()},
                      {"sft", dataset_stats(sft).to_json()},
                      {"parse", {{"parsed", report.parsed}, {"skipped", report.skipped}}}};
    finish_manifest(manifest, g.out_dir, "curate_manifest.json");
    return 0;
}

int run_score(const GlobalOptions& g, const ScoreCliOptions& o, std::ostream& log) {
    RunManifest manifest;
    manifest.command = "score";
    manifest.artifact_version = kArtifactVersion;
    manifest.resolved_config = g.resolved_config;
    manifest.seed = g.seed;
    manifest.started_at = now_iso8601();
    record_input(manifest, o.input);
    record_store_inputs(manifest, o.providers, true, true, true);

    o.scoring.weights.validate();
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + o.input);
    std::vector<PreferencePair> pairs = read_pairs(in);

    auto cache = make_cache(o.providers);
    EmbeddingClient embeddings(o.providers.embedding_config(), cache);
    LikelihoodClient likelihood(o.providers.likelihood_config(), cache);
    RewardClient reward(o.providers.reward_config(), cache);

    ScoredDataset ds = score_pairs(pairs, embeddings, likelihood, reward, o.scoring);

    std::string digest = manifest.digest();
    {
        auto out = open_output(g.out_dir, "scored_pairs.jsonl", manifest.output_paths);
        write_scored_pairs(ds, o.scoring, o.providers.identifiers(), digest, out);
    }
    {
        auto out =
            open_output(g.out_dir, "response_scores.jsonl", manifest.output_paths);
        write_response_scores(ds, digest, out);
    }
    manifest.extra = {{"providers",
                       {{"embedding", stats_json(embeddings.stats())},
                        {"likelihood", stats_json(likelihood.stats())},
                        {"reward", stats_json(reward.stats())}}},
                      {"pairs_scored", ds.pairs.size()},
                      {"responses_scored", ds.responses.size()}};
    finish_manifest(manifest, g.out_dir, "score_manifest.json");
    log << "scored " << ds.pairs.size() << " pair(s), " << ds.responses.size()
        << " unique response(s)\n";
    return 0;
}

TrainingTables build_training_tables(const std::vector<PreferencePair>& pairs,
                                     const InjectionWeights& weights) {
    TrainingTables tables;
    std::map<std::string, std::vector<std::string>> cands;
    for (const auto& p : pairs) {
        std::string key = make_prompt_key(p.task, p.prompt);
        auto& list = cands[key];
        for (const std::string& id : {p.chosen_id, p.rejected_id})
            if (std::find(list.begin(), list.end(), id) == list.end())
                list.push_back(id);
    }
    for (auto& [key, list] : cands) {
        std::sort(list.begin(), list.end());
        tables.prompts.push_back(key);
        tables.candidates.push_back(list);
    }
    bool needs_scores = weights.lambda_d > 0.0 || weights.lambda_n > 0.0 ||
                        weights.lambda_s > 0.0 || weights.lambda_q > 0.0;
    for (const auto& p : pairs) {
        PreferenceExample e;
        e.prompt = make_prompt_key(p.task, p.prompt);
        e.chosen = p.chosen_id;
        e.rejected = p.rejected_id;
        if (needs_scores && !p.scores)
            throw std::runtime_error(
                "pair (" + p.chosen_id + ", " + p.rejected_id +
                ") has no creativity scores; run the score command first");
        e.weight = p.scores ? composite_weight(*p.scores, weights)
                            : weights.lambda_base;
        tables.examples.push_back(std::move(e));
    }
    return tables;
}

TabularPolicy reference_from_sft(const std::vector<SftExample>& sft,
                                 const TrainingTables& tables, size_t* skipped) {
    std::map<std::string, size_t> prompt_idx;
    for (size_t i = 0; i < tables.prompts.size(); ++i)
        prompt_idx[tables.prompts[i]] = i;
    std::vector<std::pair<std::string, std::string>> matched;
    size_t dropped = 0;
    for (const auto& e : sft) {
        auto it = prompt_idx.find(make_prompt_key(e.task, e.prompt));
        if (it == prompt_idx.end()) {
            ++dropped;
            continue;
        }
        const auto& cands = tables.candidates[it->second];
        if (std::find(cands.begin(), cands.end(), e.id) != cands.end()) {
            matched.emplace_back(tables.prompts[it->second], e.id);
        } else {
            ++dropped;
        }
    }
    if (skipped) *skipped = dropped;
    return fit_reference_policy(matched, tables.prompts, tables.candidates);
}

namespace {

json checkpoint_json(const TabularPolicy& policy, const TrainResult& result,
                     const InjectionWeights& weights, const GlobalOptions& g,
                     const std::string& manifest_digest,
                     const std::string& config_digest) {
    json obj = policy_to_json(policy);
    obj["artifact_version"] = kArtifactVersion;
    obj["manifest_digest"] = manifest_digest;
    obj["config_digest"] = config_digest;
    obj["weights"] = weights_to_json(weights);
    obj["seed"] = g.seed;
    obj["loss_trajectory"] = result.loss_trajectory;
    return obj;
}

void write_training_log(std::ostream& out, const TrainResult& result,
                        const std::string& manifest_digest) {
    out << "# manifest_digest=" << manifest_digest << "\n";
    out << "epoch,loss,grad_norm\n";
    for (size_t i = 0; i + 1 < result.loss_trajectory.size(); ++i)
        out << i << ',' << fmt_num(result.loss_trajectory[i]) << ','
            << fmt_num(result.grad_norms[i]) << "\n";
    if (!result.loss_trajectory.empty())
        out << (result.loss_trajectory.size() - 1) << ','
            << fmt_num(result.loss_trajectory.back()) << ",\n";
}

}  // namespace

int run_train(const GlobalOptions& g, const TrainCliOptions& o, std::ostream& log) {
    RunManifest manifest;
    manifest.command = "train";
    manifest.artifact_version = kArtifactVersion;
    manifest.resolved_config = g.resolved_config;
    manifest.seed = g.seed;
    manifest.started_at = now_iso8601();
    record_input(manifest, o.pairs_path);
    if (!o.sft_path.empty()) record_input(manifest, o.sft_path);

    o.weights.validate();
    std::ifstream in(o.pairs_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + o.pairs_path);
    ScoredPairsFile scored = read_scored_pairs(in);
    if (scored.pairs.empty()) throw std::runtime_error("no preference pairs to train on");

    TrainingTables tables = build_training_tables(scored.pairs, o.weights);
    TabularPolicy reference;
    if (!o.sft_path.empty()) {
        std::ifstream sft_in(o.sft_path, std::ios::binary);
        if (!sft_in) throw std::runtime_error("cannot read " + o.sft_path);
        size_t skipped = 0;
        reference = reference_from_sft(read_sft(sft_in), tables, &skipped);
        if (skipped > 0)
            log << "skipped " << skipped << " SFT example(s) outside the pair set\n";
    } else {
        reference = fit_reference_policy({}, tables.prompts, tables.candidates);
    }

    TrainConfig cfg;
    cfg.weights = o.weights;
    cfg.learning_rate = o.learning_rate;
    cfg.epochs = o.epochs;
    cfg.seed = derive_seed(g.seed, "train");
    cfg.batch_size = o.batch_size;
    TrainResult result = train_crpo(tables.examples, reference, cfg);

    std::string digest = manifest.digest();
    {
        auto out = open_output(g.out_dir, o.checkpoint_name, manifest.output_paths);
        out << checkpoint_json(result.policy, result, o.weights, g, digest,
                               manifest.config_digest())
                   .dump(2)
            << "\n";
    }
    {
        auto out = open_output(g.out_dir, o.log_name, manifest.output_paths);
        write_training_log(out, result, digest);
    }
    manifest.extra = {{"pairs", tables.examples.size()},
                      {"prompts", tables.prompts.size()},
                      {"final_loss", result.loss_trajectory.back()}};
    finish_manifest(manifest, g.out_dir, "train_manifest.json");
    log << "trained " << tables.prompts.size() << " prompt table(s) for " << o.epochs
        << " epoch(s); final loss " << result.loss_trajectory.back() << "\n";
    return 0;
}

int run_eval(const GlobalOptions& g, const EvalCliOptions& o, std::ostream& log) {
    RunManifest manifest;
    manifest.command = "eval";
    manifest.artifact_version = kArtifactVersion;
    manifest.resolved_config = g.resolved_config;
    manifest.seed = g.seed;
    manifest.started_at = now_iso8601();
    if (!o.input.empty()) record_input(manifest, o.input);
    if (!o.reference_pairs_path.empty())
        record_input(manifest, o.reference_pairs_path);
    if (!o.judgments_path.empty()) record_input(manifest, o.judgments_path);
    record_store_inputs(manifest, o.providers, o.use_embeddings, o.use_likelihood,
                        o.use_reward);

    std::vector<GenerationSet> sets;
    if (!o.input.empty()) {
        std::ifstream in(o.input, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + o.input);
        sets = read_generation_sets(in);
    }

    // novelty reference corpus: preferred responses, keyed by canonical prompt
    std::map<std::string, std::vector<std::string>> reference;
    if (!o.reference_pairs_path.empty()) {
        std::ifstream ref_in(o.reference_pairs_path, std::ios::binary);
        if (!ref_in) throw std::runtime_error("cannot read " + o.reference_pairs_path);
        std::map<std::string, std::map<std::string, std::string>> by_prompt;
        for (const auto& p : read_pairs(ref_in))
            by_prompt[canonical_text(p.prompt)][p.chosen_id] = p.chosen;
        for (auto& [prompt, responses] : by_prompt)
            for (auto& [id, text] : responses) reference[prompt].push_back(text);
    }

    auto cache = make_cache(o.providers);
    std::unique_ptr<EmbeddingClient> embeddings;
    std::unique_ptr<LikelihoodClient> likelihood;
    std::unique_ptr<RewardClient> reward;
    if (o.use_embeddings)
        embeddings =
            std::make_unique<EmbeddingClient>(o.providers.embedding_config(), cache);
    if (o.use_likelihood)
        likelihood =
            std::make_unique<LikelihoodClient>(o.providers.likelihood_config(), cache);
    if (o.use_reward)
        reward = std::make_unique<RewardClient>(o.providers.reward_config(), cache);
    if (o.equivalence == "embedding" && !embeddings)
        throw std::runtime_error(
            "embedding equivalence requires an embedding provider");

    EquivalencePredicate equivalent =
        o.equivalence == "embedding"
            ? embedding_equivalence(*embeddings, o.equiv_threshold)
            : exact_match_equivalence();

    std::vector<ScoredSetRecord> records;
    for (auto& gs : sets) {
        if (o.k > 0 && gs.generations.size() > o.k) {
            gs.generations.resize(o.k);
            if (gs.decode_params.is_array() && gs.decode_params.size() > o.k) {
                json trimmed = json::array();
                for (size_t i = 0; i < o.k; ++i) trimmed.push_back(gs.decode_params[i]);
                gs.decode_params = trimmed;
            }
        }
        ScoredSetRecord rec;
        std::optional<std::vector<std::string>> set_reference;
        auto ref_it = reference.find(canonical_text(gs.prompt));
        if (ref_it != reference.end()) set_reference = ref_it->second;
        rec.aggregates = score_generation_set(
            gs, set_reference, embeddings.get(), likelihood.get(), reward.get(),
            o.dsi, o.surprise_norm);
        rec.distinct = distinct_k(gs, equivalent);
        if (reward) {
            std::vector<double> utilities;
            for (const auto& s : gs.per_gen_scores) utilities.push_back(*s.quality);
            rec.utility = utility_k(gs, utilities, o.patience);
        }
        rec.set = std::move(gs);
        records.push_back(std::move(rec));
    }

    std::string digest = manifest.digest();
    if (!o.input.empty()) {
        {
            auto out = open_output(g.out_dir, "scored_generations.jsonl",
                                   manifest.output_paths);
            write_jsonl_line(out, meta_line(digest));
            for (const auto& rec : records)
                write_jsonl_line(out, scored_set_to_json(rec));
        }
        {
            auto out = open_output(g.out_dir, "eval_report.csv", manifest.output_paths);
            write_evaluation_report_csv(records, out, digest);
        }
        {
            auto out = open_output(g.out_dir, "plot_data.json", manifest.output_paths);
            json plot = plot_data_json(records);
            plot["manifest_digest"] = digest;
            out << plot.dump(2) << "\n";
        }
    }
    if (!o.judgments_path.empty()) {
        std::ifstream jin(o.judgments_path, std::ios::binary);
        if (!jin) throw std::runtime_error("cannot read " + o.judgments_path);
        WinRateReport wr = win_rates(read_judgments_csv(jin));
        auto out = open_output(g.out_dir, "win_rates.csv", manifest.output_paths);
        out << "# manifest_digest=" << digest << "\n";
        out << "model_a,model_b,wins_a,wins_b,ties,win_rate_a\n";
        for (const auto& row : wr.per_pair)
            out << row.model_a << ',' << row.model_b << ',' << row.wins_a << ','
                << row.wins_b << ',' << row.ties << ','
                << (row.win_rate_a ? fmt_num(*row.win_rate_a) : std::string())
                << "\n";
        auto items = open_output(g.out_dir, "win_rate_items.csv",
                                 manifest.output_paths);
        items << "# manifest_digest=" << digest << "\n";
        items << "prompt_id,model_a,model_b,outcome\n";
        for (const auto& item : wr.items)
            items << item.prompt_id << ',' << item.model_a << ',' << item.model_b
                  << ',' << item.outcome << "\n";
    }
    manifest.extra = {{"k", o.k},
                      {"patience", o.patience},
                      {"equivalence", o.equivalence},
                      {"sets", records.size()}};
    if (embeddings) manifest.extra["embedding_stats"] = stats_json(embeddings->stats());
    if (likelihood) manifest.extra["likelihood_stats"] = stats_json(likelihood->stats());
    if (reward) manifest.extra["reward_stats"] = stats_json(reward->stats());
    finish_manifest(manifest, g.out_dir, "eval_manifest.json");
    log << "evaluated " << records.size() << " generation set(s)\n";
    return 0;
}

namespace {

InjectionWeights sweep_weights(const std::string& dimension, double lambda,
                               double lambda_base, double beta) {
    InjectionWeights w;
    w.lambda_base = lambda_base;
    w.beta = beta;
    if (dimension == "diversity" || dimension == "div")
        w.lambda_d = lambda;
    else if (dimension == "novelty" || dimension == "nov")
        w.lambda_n = lambda;
    else if (dimension == "surprise" || dimension == "sur")
        w.lambda_s = lambda;
    else if (dimension == "quality" || dimension == "qua")
        w.lambda_q = lambda;
    else
        throw std::invalid_argument("unknown sweep dimension \"" + dimension + "\"");
    return w;
}

std::optional<double> metric_norm(const CreativityScores& s,
                                  const std::string& dimension) {
    if (dimension == "diversity" || dimension == "div") return s.diversity_norm;
    if (dimension == "novelty" || dimension == "nov") return s.novelty_norm;
    if (dimension == "surprise" || dimension == "sur") return s.surprise_norm;
    return s.quality_norm;
}

// Probability-weighted mean of the targeted normalized metric over all
// prompts under the policy.
double expected_metric(const TabularPolicy& policy,
                       const std::map<std::pair<std::string, std::string>,
                                      CreativityScores>& scores_by_id,
                       const std::string& dimension) {
    double total = 0.0;
    for (size_t p = 0; p < policy.prompts.size(); ++p) {
        std::vector<double> probs = policy.softmax(p);
        double acc = 0.0;
        for (size_t c = 0; c < probs.size(); ++c) {
            auto it = scores_by_id.find({policy.prompts[p], policy.candidates[p][c]});
            double m = 0.5;  // neutral for unscored candidates
            if (it != scores_by_id.end())
                if (auto v = metric_norm(it->second, dimension)) m = *v;
            acc += probs[c] * m;
        }
        total += acc;
    }
    return total / static_cast<double>(policy.prompts.size());
}

std::string lambda_tag(double v) {
    std::string s = fmt_num(v);
    std::replace(s.begin(), s.end(), '.', '_');
    return s;
}

}  // namespace

int run_sweep(const GlobalOptions& g, const SweepCliOptions& o, std::ostream& log) {
    if (o.grid.empty()) throw std::runtime_error("sweep grid is empty");
    if (o.dimensions.empty()) throw std::runtime_error("no sweep dimensions given");
    if (o.num_seeds == 0) throw std::runtime_error("sweep needs at least one seed");

    RunManifest manifest;
    manifest.command = "sweep";
    manifest.artifact_version = kArtifactVersion;
    manifest.resolved_config = g.resolved_config;
    manifest.seed = g.seed;
    manifest.started_at = now_iso8601();
    record_input(manifest, o.pairs_path);
    record_input(manifest, o.response_scores_path);
    if (!o.sft_path.empty()) record_input(manifest, o.sft_path);

    std::ifstream in(o.pairs_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + o.pairs_path);
    ScoredPairsFile scored = read_scored_pairs(in);
    if (scored.pairs.empty()) throw std::runtime_error("no preference pairs to sweep");

    std::ifstream rs_in(o.response_scores_path, std::ios::binary);
    if (!rs_in) throw std::runtime_error("cannot read " + o.response_scores_path);
    std::map<std::pair<std::string, std::string>, CreativityScores> scores_by_id;
    for (const auto& rs : read_response_scores(rs_in))
        scores_by_id[{make_prompt_key(rs.task, rs.prompt), rs.id}] = rs.scores;

    std::vector<SftExample> sft;
    if (!o.sft_path.empty()) {
        std::ifstream sft_in(o.sft_path, std::ios::binary);
        if (!sft_in) throw std::runtime_error("cannot read " + o.sft_path);
        sft = read_sft(sft_in);
    }

    std::string digest = manifest.digest();
    auto summary = open_output(g.out_dir, "sweep_summary.csv", manifest.output_paths);
    summary << "# manifest_digest=" << digest << "\n";
    summary << "dimension,lambda,seed,expected_metric,final_loss\n";

    for (const auto& dimension : o.dimensions) {
        for (double lambda : o.grid) {
            double metric_sum = 0.0;
            for (size_t s = 0; s < o.num_seeds; ++s) {
                InjectionWeights w =
                    sweep_weights(dimension, lambda, o.lambda_base, o.beta);
                TrainingTables tables = build_training_tables(scored.pairs, w);
                size_t skipped = 0;
                TabularPolicy reference =
                    sft.empty()
                        ? fit_reference_policy({}, tables.prompts, tables.candidates)
                        : reference_from_sft(sft, tables, &skipped);
                TrainConfig cfg;
                cfg.weights = w;
                cfg.learning_rate = o.learning_rate;
                cfg.epochs = o.epochs;
                cfg.seed = derive_seed(g.seed + s, "sweep:" + dimension);
                cfg.batch_size = o.batch_size;
                TrainResult result = train_crpo(tables.examples, reference, cfg);
                double metric = expected_metric(result.policy, scores_by_id, dimension);
                metric_sum += metric;
                summary << dimension << ',' << fmt_num(lambda) << ',' << s << ','
                        << fmt_num(metric) << ','
                        << fmt_num(result.loss_trajectory.back()) << "\n";
                if (o.write_checkpoints) {
                    std::string name = "sweep_" + dimension + "_lambda" +
                                       lambda_tag(lambda) + "_seed" +
                                       std::to_string(s) + ".json";
                    auto out = open_output(g.out_dir, name, manifest.output_paths);
                    out << checkpoint_json(result.policy, result, w, g, digest,
                                           manifest.config_digest())
                               .dump(2)
                        << "\n";
                }
            }
            summary << dimension << ',' << fmt_num(lambda) << ",mean,"
                    << fmt_num(metric_sum / static_cast<double>(o.num_seeds)) << ",\n";
        }
    }
    summary.close();
    manifest.extra = {{"dimensions", o.dimensions},
                      {"grid", o.grid},
                      {"seeds", o.num_seeds}};
    finish_manifest(manifest, g.out_dir, "sweep_manifest.json");
    log << "swept " << o.dimensions.size() << " dimension(s) x " << o.grid.size()
        << " lambda value(s) x " << o.num_seeds << " seed(s)\n";
    return 0;
}

int run_report(const GlobalOptions& g, const ReportCliOptions& o, std::ostream& log) {
    if (o.inputs.empty()) throw std::runtime_error("report needs at least one input");
    RunManifest manifest;
    manifest.command = "report";
    manifest.artifact_version = kArtifactVersion;
    manifest.resolved_config = g.resolved_config;
    manifest.seed = g.seed;
    manifest.started_at = now_iso8601();

    std::vector<ScoredSetRecord> records;
    for (const auto& path : o.inputs) {
        record_input(manifest, path);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + path);
        for (auto& rec : read_scored_sets(in)) records.push_back(std::move(rec));
    }

    std::string digest = manifest.digest();
    {
        auto out = open_output(g.out_dir, "eval_report.csv", manifest.output_paths);
        write_evaluation_report_csv(records, out, digest);
    }
    {
        auto out = open_output(g.out_dir, "plot_data.json", manifest.output_paths);
        json plot = plot_data_json(records);
        plot["manifest_digest"] = digest;
        out << plot.dump(2) << "\n";
    }
    manifest.extra = {{"sets", records.size()}};
    finish_manifest(manifest, g.out_dir, "report_manifest.json");
    log << "reported " << records.size() << " scored set(s)\n";
    return 0;
}

}  // namespace crpo
