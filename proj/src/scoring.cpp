#include "crpo/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crpo/text.hpp"

namespace crpo {

namespace {

struct UniqueResponse {
    std::string id;
    std::string text;
    bool preferred = false;
};

struct Group {
    std::string task;
    std::string prompt;
    std::vector<UniqueResponse> responses;  // sorted by id
    std::vector<std::string> preferred_ids;
    std::vector<std::string> preferred_texts;
};

std::vector<Group> group_pairs(const std::vector<PreferencePair>& pairs) {
    std::map<std::pair<std::string, std::string>, std::map<std::string, UniqueResponse>>
        grouped;
    for (const auto& p : pairs) {
        auto& g = grouped[{p.task, canonical_text(p.prompt)}];
        auto& chosen = g[p.chosen_id];
        chosen.id = p.chosen_id;
        chosen.text = p.chosen;
        chosen.preferred = true;
        auto& rejected = g[p.rejected_id];
        rejected.id = p.rejected_id;
        rejected.text = p.rejected;
    }
    std::vector<Group> out;
    for (auto& [key, responses] : grouped) {
        Group g;
        g.task = key.first;
        g.prompt = key.second;
        for (auto& [id, r] : responses) {
            if (r.preferred) {
                g.preferred_ids.push_back(id);
                g.preferred_texts.push_back(r.text);
            }
            g.responses.push_back(std::move(r));
        }
        out.push_back(std::move(g));
    }
    return out;
}

double normalize_one(double v, const MinMax& mm) {
    if (mm.min == mm.max) return 0.5;
    return std::clamp((v - mm.min) / (mm.max - mm.min), 0.0, 1.0);
}

}  // namespace

ScoredDataset score_pairs(const std::vector<PreferencePair>& pairs,
                          EmbeddingClient& embeddings,
                          LikelihoodClient& likelihood, RewardClient& reward,
                          const ScoreOptions& opts) {
    opts.weights.validate();
    ScoredDataset ds;
    ds.pairs = pairs;
    if (pairs.empty()) return ds;

    std::vector<Group> groups = group_pairs(pairs);

    // one deterministic embedding batch for all response texts
    std::vector<std::string> all_texts;
    for (const auto& g : groups)
        for (const auto& r : g.responses) all_texts.push_back(r.text);
    std::vector<EmbeddingVector> text_vecs = embeddings.embed_batch(all_texts);

    // one deterministic embedding batch for the full DSI vocabulary
    std::string vocab_text;
    for (const auto& g : groups)
        for (const auto& r : g.responses) {
            vocab_text += r.text;
            vocab_text.push_back('\n');
        }
    std::vector<std::string> vocab = unique_words(vocab_text, opts.dsi.remove_stopwords);
    WordEmbeddings word_embs;
    if (!vocab.empty()) {
        std::vector<EmbeddingVector> wvecs = embeddings.embed_batch(vocab);
        for (size_t i = 0; i < vocab.size(); ++i)
            word_embs.emplace(vocab[i], std::move(wvecs[i]));
    }

    // raw scores per unique response
    size_t text_cursor = 0;
    for (auto& g : groups) {
        std::map<std::string, EmbeddingVector> group_embs;
        for (const auto& r : g.responses)
            group_embs.emplace(r.id, text_vecs[text_cursor++]);
        for (const auto& r : g.responses) {
            ResponseScore rs;
            rs.id = r.id;
            rs.task = g.task;
            rs.prompt = g.prompt;
            rs.response = r.text;
            rs.preferred = r.preferred;
            rs.scores.diversity = diversity_score(r.id, g.preferred_ids, group_embs);
            rs.scores.novelty =
                novelty_score(r.text, g.preferred_texts, word_embs, opts.dsi);
            rs.scores.surprise = surprise_score(
                likelihood.loglikelihood(g.prompt, r.text), opts.surprise_norm);
            rs.scores.quality = reward.reward(g.prompt, r.text);
            ds.responses.push_back(std::move(rs));
        }
    }

    // normalization statistics from the preferred responses
    struct MetricRef {
        const char* name;
        std::optional<double> CreativityScores::*raw;
        std::optional<double> CreativityScores::*norm;
    };
    const MetricRef metrics[] = {
        {"novelty", &CreativityScores::novelty, &CreativityScores::novelty_norm},
        {"diversity", &CreativityScores::diversity, &CreativityScores::diversity_norm},
        {"surprise", &CreativityScores::surprise, &CreativityScores::surprise_norm},
        {"quality", &CreativityScores::quality, &CreativityScores::quality_norm},
    };
    auto stats_key = [&](const std::string& task, const char* metric) {
        if (!opts.per_task_normalization) return std::string(metric);
        return task + '\x1f' + metric;
    };
    for (const auto& m : metrics) {
        std::map<std::string, std::vector<double>> values;
        for (const auto& rs : ds.responses)
            if (rs.preferred && rs.scores.*(m.raw))
                values[stats_key(rs.task, m.name)].push_back(*(rs.scores.*(m.raw)));
        for (const auto& [key, vals] : values) {
            auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
            ds.norm_stats[key] = {*mn, *mx};
        }
    }

    // apply normalization; absent diversity maps to the neutral 0.5
    for (auto& rs : ds.responses) {
        for (const auto& m : metrics) {
            const auto& raw = rs.scores.*(m.raw);
            auto it = ds.norm_stats.find(stats_key(rs.task, m.name));
            if (!raw) {
                rs.scores.*(m.norm) = 0.5;
            } else if (it == ds.norm_stats.end()) {
                rs.scores.*(m.norm) = 0.5;  // no preferred-side statistics
            } else {
                rs.scores.*(m.norm) = normalize_one(*raw, it->second);
            }
        }
    }

    // pair scores and composite weights from the chosen response
    std::map<std::pair<std::string, std::string>, const ResponseScore*> by_id;
    for (const auto& rs : ds.responses) by_id[{rs.task + '\x1f' + rs.prompt, rs.id}] = &rs;
    for (auto& p : ds.pairs) {
        std::string group_key = p.task + '\x1f' + canonical_text(p.prompt);
        auto it = by_id.find({group_key, p.chosen_id});
        if (it == by_id.end())
            throw std::logic_error("scored response missing for pair chosen id " +
                                   p.chosen_id);
        p.scores = it->second->scores;
        p.weight = composite_weight(*p.scores, opts.weights);
    }
    return ds;
}

void write_scored_pairs(const ScoredDataset& ds, const ScoreOptions& opts,
                        const json& provider_ids, const std::string& manifest_digest,
                        std::ostream& out) {
    json norm = json::object();
    for (const auto& [key, mm] : ds.norm_stats) {
        std::string k = key;
        std::replace(k.begin(), k.end(), '\x1f', '/');
        norm[k] = {{"min", mm.min}, {"max", mm.max}};
    }
    ordered_json meta;
    meta["_meta"] = {
        {"weights", weights_to_json(opts.weights)},
        {"normalization", norm},
        {"dsi_mode", opts.dsi.denominator == DsiDenominator::paper_literal
                         ? "paper_literal" : "pair_mean"},
        {"surprise_normalization",
         opts.surprise_norm == SurpriseNormalization::per_token ? "per_token" : "total"},
        {"per_task_normalization", opts.per_task_normalization},
        {"providers", provider_ids},
        {"manifest_digest", manifest_digest},
    };
    write_jsonl_line(out, meta);
    write_pairs(ds.pairs, out);
}

void write_response_scores(const ScoredDataset& ds, const std::string& manifest_digest,
                           std::ostream& out) {
    ordered_json meta;
    meta["_meta"] = {{"manifest_digest", manifest_digest}};
    write_jsonl_line(out, meta);
    for (const auto& rs : ds.responses) {
        ordered_json obj;
        obj["id"] = rs.id;
        obj["task"] = rs.task;
        obj["prompt"] = rs.prompt;
        obj["response"] = rs.response;
        obj["preferred"] = rs.preferred;
        scores_to_json(rs.scores, obj);
        write_jsonl_line(out, obj);
    }
}

ScoredPairsFile read_scored_pairs(std::istream& in) {
    ScoredPairsFile file;
    file.meta = json::object();
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        ordered_json obj = parse_object_line(line_no, line);
        if (obj.contains("_meta")) {
            file.meta = obj["_meta"];
            return;
        }
        file.pairs.push_back(pair_from_json(obj, line_no));
    });
    return file;
}

std::vector<ResponseScore> read_response_scores(std::istream& in) {
    std::vector<ResponseScore> out;
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        ordered_json obj = parse_object_line(line_no, line);
        if (obj.contains("_meta")) return;
        ResponseScore rs;
        try {
            rs.id = obj.at("id").get<std::string>();
            rs.task = obj.value("task", std::string());
            rs.prompt = obj.at("prompt").get<std::string>();
            rs.response = obj.value("response", std::string());
            rs.preferred = obj.value("preferred", false);
            rs.scores = scores_from_json(obj);
        } catch (const json::exception& e) {
            throw LineError(line_no, std::string("bad response score: ") + e.what());
        }
        out.push_back(std::move(rs));
    });
    return out;
}

}  // namespace crpo
