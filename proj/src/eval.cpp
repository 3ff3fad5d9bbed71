#include "crpo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "crpo/text.hpp"

namespace crpo {

namespace {

std::optional<double> mean_of_defined(const std::vector<CreativityScores>& scores,
                                      std::optional<double> CreativityScores::*field) {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& s : scores)
        if (s.*field) {
            sum += *(s.*field);
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace

SetAggregates score_generation_set(
    GenerationSet& gs,
    const std::optional<std::vector<std::string>>& reference_corpus,
    EmbeddingClient* embeddings, LikelihoodClient* likelihood,
    RewardClient* reward, const DsiConfig& dsi_cfg,
    SurpriseNormalization surprise_norm) {
    if (gs.generations.empty())
        throw std::invalid_argument("generation set \"" + gs.prompt_id +
                                    "\" is empty");
    const size_t k = gs.generations.size();
    gs.per_gen_scores.assign(k, CreativityScores{});
    gs.novelty_vs_self = !reference_corpus.has_value();

    if (embeddings) {
        // response-level embeddings for diversity
        std::vector<EmbeddingVector> vecs;
        try {
            vecs = embeddings->embed_batch(gs.generations);
        } catch (const std::exception& e) {
            throw std::runtime_error("embedding generations for \"" + gs.prompt_id +
                                     "\": " + e.what());
        }
        for (size_t i = 0; i < k; ++i) {
            if (k < 2) break;  // diversity undefined for singleton sets
            double sum = 0.0;
            for (size_t j = 0; j < k; ++j)
                if (j != i) sum += semantic_distance(vecs[i], vecs[j]);
            gs.per_gen_scores[i].diversity = sum / static_cast<double>(k - 1);
        }

        // word embeddings for DSI / novelty
        const std::vector<std::string>& reference =
            reference_corpus ? *reference_corpus : gs.generations;
        std::string pooled;
        for (const auto& t : reference) {
            if (!pooled.empty()) pooled.push_back('\n');
            pooled += t;
        }
        std::string all_text = pooled;
        for (const auto& g : gs.generations) {
            all_text.push_back('\n');
            all_text += g;
        }
        std::vector<std::string> vocab =
            unique_words(all_text, dsi_cfg.remove_stopwords);
        WordEmbeddings word_embs;
        if (!vocab.empty()) {
            std::vector<EmbeddingVector> wvecs = embeddings->embed_batch(vocab);
            for (size_t i = 0; i < vocab.size(); ++i)
                word_embs.emplace(vocab[i], std::move(wvecs[i]));
        }
        for (size_t i = 0; i < k; ++i) {
            try {
                gs.per_gen_scores[i].novelty =
                    novelty_score(gs.generations[i], reference, word_embs, dsi_cfg);
            } catch (const std::exception& e) {
                throw std::runtime_error("novelty of generation " + std::to_string(i) +
                                         " for \"" + gs.prompt_id + "\": " + e.what());
            }
        }
    }

    if (likelihood) {
        for (size_t i = 0; i < k; ++i) {
            try {
                gs.per_gen_scores[i].surprise = surprise_score(
                    likelihood->loglikelihood(gs.prompt, gs.generations[i]),
                    surprise_norm);
            } catch (const std::exception& e) {
                throw std::runtime_error("surprise of generation " + std::to_string(i) +
                                         " for \"" + gs.prompt_id + "\": " + e.what());
            }
        }
    }

    if (reward) {
        for (size_t i = 0; i < k; ++i) {
            try {
                gs.per_gen_scores[i].quality =
                    reward->reward(gs.prompt, gs.generations[i]);
            } catch (const std::exception& e) {
                throw std::runtime_error("quality of generation " + std::to_string(i) +
                                         " for \"" + gs.prompt_id + "\": " + e.what());
            }
        }
    }

    SetAggregates agg;
    agg.novelty = mean_of_defined(gs.per_gen_scores, &CreativityScores::novelty);
    agg.diversity = mean_of_defined(gs.per_gen_scores, &CreativityScores::diversity);
    agg.surprise = mean_of_defined(gs.per_gen_scores, &CreativityScores::surprise);
    agg.quality = mean_of_defined(gs.per_gen_scores, &CreativityScores::quality);
    return agg;
}

EquivalencePredicate exact_match_equivalence() {
    return [](const std::string& a, const std::string& b) {
        return canonical_text(a) == canonical_text(b);
    };
}

EquivalencePredicate embedding_equivalence(EmbeddingClient& embeddings,
                                           double threshold) {
    return [&embeddings, threshold](const std::string& a, const std::string& b) {
        std::vector<EmbeddingVector> vecs = embeddings.embed_batch({a, b});
        return 1.0 - semantic_distance(vecs[0], vecs[1]) >= threshold;
    };
}

namespace {

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    size_t find(size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

int distinct_k(GenerationSet& gs, const EquivalencePredicate& equivalent) {
    const size_t k = gs.generations.size();
    if (k == 0) throw std::invalid_argument("distinct_k: empty generation set");
    UnionFind uf(k);
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j)
            if (uf.find(i) != uf.find(j) &&
                equivalent(gs.generations[i], gs.generations[j]))
                uf.unite(i, j);
    gs.partition.assign(k, 0);
    std::map<size_t, int> class_of_root;
    int next_class = 1;
    for (size_t i = 0; i < k; ++i) {
        size_t root = uf.find(i);
        auto [it, inserted] = class_of_root.emplace(root, next_class);
        if (inserted) ++next_class;
        gs.partition[i] = it->second;
    }
    return next_class - 1;
}

double utility_k(const GenerationSet& gs, const std::vector<double>& utilities,
                 double patience) {
    const size_t k = gs.generations.size();
    if (gs.partition.size() != k)
        throw std::invalid_argument("utility_k: partition not set; run distinct_k");
    if (utilities.size() != k)
        throw std::invalid_argument("utility_k: utilities misaligned with generations");
    if (!(patience > 0.0 && patience < 1.0))
        throw std::invalid_argument("utility_k: patience must lie in (0,1)");
    std::vector<char> seen(k + 1, 0);
    double sum = 0.0;
    double pw = 1.0;  // patience^(i-1), advanced every position
    for (size_t i = 0; i < k; ++i) {
        int cls = gs.partition[i];
        if (!seen[cls]) {
            seen[cls] = 1;
            sum += pw * utilities[i];
        }
        pw *= patience;
    }
    double norm = (1.0 - patience) / (1.0 - std::pow(patience, static_cast<double>(k)));
    return norm * sum;
}

WinRateReport win_rates(const std::vector<Judgment>& judgments) {
    // (prompt, modelA, modelB) -> votes for first-listed model / second
    struct Votes { size_t a = 0, b = 0; };
    std::map<std::tuple<std::string, std::string, std::string>, Votes> items;
    for (const auto& j : judgments) {
        if (j.model_a == j.model_b)
            throw std::invalid_argument("judgment compares a model to itself");
        if (j.winner != 'a' && j.winner != 'b')
            throw std::invalid_argument("judgment winner must be 'a' or 'b'");
        bool sorted = j.model_a < j.model_b;
        const std::string& first = sorted ? j.model_a : j.model_b;
        const std::string& second = sorted ? j.model_b : j.model_a;
        bool first_won = (j.winner == 'a') == sorted;
        Votes& v = items[{j.prompt_id, first, second}];
        if (first_won)
            ++v.a;
        else
            ++v.b;
    }
    WinRateReport report;
    std::map<std::pair<std::string, std::string>, WinRateRow> rows;
    for (const auto& [key, votes] : items) {
        const auto& [prompt_id, first, second] = key;
        char outcome = votes.a > votes.b ? 'a' : votes.b > votes.a ? 'b' : 't';
        report.items.push_back({prompt_id, first, second, outcome});
        WinRateRow& row = rows[{first, second}];
        row.model_a = first;
        row.model_b = second;
        if (outcome == 'a')
            ++row.wins_a;
        else if (outcome == 'b')
            ++row.wins_b;
        else
            ++row.ties;
    }
    for (auto& [key, row] : rows) {
        size_t decided = row.wins_a + row.wins_b;
        if (decided > 0)
            row.win_rate_a = static_cast<double>(row.wins_a) /
                             static_cast<double>(decided);
        report.per_pair.push_back(row);
    }
    return report;
}

std::vector<Judgment> read_judgments_csv(std::istream& in) {
    std::vector<Judgment> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        if (line_no == 1 && !fields.empty() && fields[0] == "prompt_id")
            continue;  // header
        if (fields.size() != 5)
            throw LineError(line_no, "expected 5 comma-separated fields");
        std::string winner = std::string(trim(fields[4]));
        if (winner != "a" && winner != "b")
            throw LineError(line_no, "winner must be \"a\" or \"b\"");
        Judgment j;
        j.prompt_id = std::string(trim(fields[0]));
        j.model_a = std::string(trim(fields[1]));
        j.model_b = std::string(trim(fields[2]));
        j.rater_id = std::string(trim(fields[3]));
        j.winner = winner[0];
        out.push_back(std::move(j));
    }
    return out;
}

json decoding_grid_preset() {
    json setups = json::array({
        {{"temperature", 0.7}, {"top_p", 0.95}},
        {{"temperature", 0.9}, {"top_p", 0.99}},
        {{"temperature", 0.7}, {"top_k", 50}},
        {{"temperature", 0.8}, {"top_p", 0.97}},
    });
    json grid = json::array();
    for (const auto& setup : setups)
        for (int sample = 0; sample < 4; ++sample) grid.push_back(setup);
    return {{"samples_per_setup", 4}, {"setups", setups}, {"grid", grid}};
}

GenerationSet generation_set_from_json(const ordered_json& obj, size_t line_no) {
    GenerationSet gs;
    try {
        gs.prompt_id = obj.at("prompt_id").get<std::string>();
        gs.prompt = obj.at("prompt").get<std::string>();
        gs.model_id = obj.at("model_id").get<std::string>();
        gs.task = obj.value("task", std::string());
        gs.generations = obj.at("generations").get<std::vector<std::string>>();
        if (auto it = obj.find("decode_params"); it != obj.end())
            gs.decode_params = *it;
    } catch (const json::exception& e) {
        throw LineError(line_no, std::string("bad generation set: ") + e.what());
    }
    if (gs.generations.empty())
        throw LineError(line_no, "generation set has no generations");
    return gs;
}

ordered_json generation_set_to_json(const GenerationSet& gs) {
    ordered_json obj;
    obj["prompt_id"] = gs.prompt_id;
    obj["prompt"] = gs.prompt;
    obj["model_id"] = gs.model_id;
    if (!gs.task.empty()) obj["task"] = gs.task;
    obj["generations"] = gs.generations;
    if (!gs.decode_params.empty()) obj["decode_params"] = gs.decode_params;
    if (!gs.per_gen_scores.empty()) {
        ordered_json scores = ordered_json::array();
        for (const auto& s : gs.per_gen_scores) {
            ordered_json row;
            scores_to_json(s, row);
            scores.push_back(row);
        }
        obj["per_gen_scores"] = scores;
        obj["novelty_vs_self"] = gs.novelty_vs_self;
    }
    if (!gs.partition.empty()) obj["partition"] = gs.partition;
    return obj;
}

std::vector<GenerationSet> read_generation_sets(std::istream& in) {
    std::vector<GenerationSet> out;
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        ordered_json obj = parse_object_line(line_no, line);
        if (obj.contains("_meta")) return;
        out.push_back(generation_set_from_json(obj, line_no));
    });
    return out;
}

ordered_json scored_set_to_json(const ScoredSetRecord& rec) {
    ordered_json obj = generation_set_to_json(rec.set);
    ordered_json agg = ordered_json::object();
    if (rec.aggregates.novelty) agg["novelty"] = *rec.aggregates.novelty;
    if (rec.aggregates.diversity) agg["diversity"] = *rec.aggregates.diversity;
    if (rec.aggregates.surprise) agg["surprise"] = *rec.aggregates.surprise;
    if (rec.aggregates.quality) agg["quality"] = *rec.aggregates.quality;
    obj["aggregates"] = agg;
    if (rec.distinct) obj["distinct_k"] = *rec.distinct;
    if (rec.utility) obj["utility_k"] = *rec.utility;
    return obj;
}

ScoredSetRecord scored_set_from_json(const ordered_json& obj, size_t line_no) {
    ScoredSetRecord rec;
    rec.set = generation_set_from_json(obj, line_no);
    if (auto it = obj.find("per_gen_scores"); it != obj.end()) {
        for (const auto& row : *it)
            rec.set.per_gen_scores.push_back(scores_from_json(row));
        rec.set.novelty_vs_self = obj.value("novelty_vs_self", false);
    }
    if (auto it = obj.find("partition"); it != obj.end())
        rec.set.partition = it->get<std::vector<int>>();
    if (auto it = obj.find("aggregates"); it != obj.end()) {
        auto opt = [&](const char* key) -> std::optional<double> {
            auto f = it->find(key);
            if (f == it->end() || f->is_null()) return std::nullopt;
            return f->get<double>();
        };
        rec.aggregates.novelty = opt("novelty");
        rec.aggregates.diversity = opt("diversity");
        rec.aggregates.surprise = opt("surprise");
        rec.aggregates.quality = opt("quality");
    }
    if (auto it = obj.find("distinct_k"); it != obj.end() && !it->is_null())
        rec.distinct = it->get<int>();
    if (auto it = obj.find("utility_k"); it != obj.end() && !it->is_null())
        rec.utility = it->get<double>();
    return rec;
}

std::vector<ScoredSetRecord> read_scored_sets(std::istream& in) {
    std::vector<ScoredSetRecord> out;
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        ordered_json obj = parse_object_line(line_no, line);
        if (obj.contains("_meta")) return;
        out.push_back(scored_set_from_json(obj, line_no));
    });
    return out;
}

namespace {

std::string fmt_num(double v) { return json(v).dump(); }

struct Accum {
    double sum = 0.0;
    size_t n = 0;
    void add(const std::optional<double>& v) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    void add(const std::optional<int>& v) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

struct RowAccum {
    size_t sets = 0;
    size_t generations = 0;
    Accum novelty, diversity, surprise, quality, distinct, utility;
};

std::string cell(const std::optional<double>& v) { return v ? fmt_num(*v) : ""; }

}  // namespace

void write_evaluation_report_csv(const std::vector<ScoredSetRecord>& records,
                                 std::ostream& out,
                                 const std::string& manifest_digest) {
    // (model, task) accumulators; "__all__" is the per-model global row
    std::map<std::pair<std::string, std::string>, RowAccum> rows;
    for (const auto& rec : records) {
        std::string task = rec.set.task.empty() ? "(none)" : rec.set.task;
        for (const std::string& t : {std::string("__all__"), task}) {
            RowAccum& acc = rows[{rec.set.model_id, t}];
            ++acc.sets;
            acc.generations += rec.set.generations.size();
            acc.novelty.add(rec.aggregates.novelty);
            acc.diversity.add(rec.aggregates.diversity);
            acc.surprise.add(rec.aggregates.surprise);
            acc.quality.add(rec.aggregates.quality);
            acc.distinct.add(rec.distinct);
            acc.utility.add(rec.utility);
        }
    }
    if (!manifest_digest.empty())
        out << "# manifest_digest=" << manifest_digest << "\n";
    out << "model,task,sets,generations,novelty,diversity,surprise,quality,"
           "distinct_k,utility_k\n";
    for (const auto& [key, acc] : rows) {
        out << key.first << ',' << key.second << ',' << acc.sets << ','
            << acc.generations << ',' << cell(acc.novelty.mean()) << ','
            << cell(acc.diversity.mean()) << ',' << cell(acc.surprise.mean()) << ','
            << cell(acc.quality.mean()) << ',' << cell(acc.distinct.mean()) << ','
            << cell(acc.utility.mean()) << "\n";
    }
}

json plot_data_json(const std::vector<ScoredSetRecord>& records) {
    std::map<std::string, RowAccum> by_model;
    for (const auto& rec : records) {
        RowAccum& acc = by_model[rec.set.model_id];
        ++acc.sets;
        acc.novelty.add(rec.aggregates.novelty);
        acc.diversity.add(rec.aggregates.diversity);
        acc.surprise.add(rec.aggregates.surprise);
        acc.quality.add(rec.aggregates.quality);
    }
    json points = json::array();
    const char* names[] = {"novelty", "diversity", "surprise", "quality"};
    for (const auto& [model, acc] : by_model) {
        std::optional<double> means[] = {acc.novelty.mean(), acc.diversity.mean(),
                                         acc.surprise.mean(), acc.quality.mean()};
        for (int x = 0; x < 4; ++x)
            for (int y = x + 1; y < 4; ++y) {
                if (!means[x] || !means[y]) continue;
                points.push_back({{"model", model},
                                  {"x_metric", names[x]},
                                  {"y_metric", names[y]},
                                  {"x", *means[x]},
                                  {"y", *means[y]}});
            }
    }
    return {{"points", points}};
}

}  // namespace crpo
