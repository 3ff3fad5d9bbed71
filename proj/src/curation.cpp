#include "crpo/curation.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "crpo/text.hpp"

namespace crpo {

std::vector<PreferencePair> build_preference_pairs(const Corpus& corpus,
                                                   const CurationOptions& opts) {
    std::vector<PreferencePair> out;
    for (const auto& [key, idxs] : corpus.group_index) {
        const auto& [task, prompt] = key;
        // Candidates at or above the rating floor, sorted by id so the
        // result does not depend on input order.
        std::vector<const RatedResponse*> cands;
        for (size_t i : idxs) {
            const RatedResponse& rec = corpus.records[i];
            if (!rec.rating)
                throw std::invalid_argument("record \"" + rec.id +
                                            "\" has no rating; rescale first");
            if (*rec.rating >= opts.min_rating) cands.push_back(&rec);
        }
        std::sort(cands.begin(), cands.end(),
                  [](const RatedResponse* a, const RatedResponse* b) {
                      return a->id < b->id;
                  });

        struct Eligible {
            const RatedResponse* chosen;
            const RatedResponse* rejected;
            int margin;
        };
        std::vector<Eligible> eligible;
        for (const auto* a : cands)
            for (const auto* b : cands) {
                if (a == b || a->id == b->id) continue;
                int margin = *a->rating - *b->rating;
                if (margin >= opts.margin_min) eligible.push_back({a, b, margin});
            }
        std::sort(eligible.begin(), eligible.end(),
                  [](const Eligible& x, const Eligible& y) {
                      if (x.margin != y.margin) return x.margin > y.margin;
                      if (x.chosen->id != y.chosen->id) return x.chosen->id < y.chosen->id;
                      return x.rejected->id < y.rejected->id;
                  });

        std::map<std::string, int> participation;
        for (const auto& e : eligible) {
            int& uc = participation[e.chosen->id];
            int& ur = participation[e.rejected->id];
            if (uc >= opts.max_pairings_per_response ||
                ur >= opts.max_pairings_per_response)
                continue;
            ++uc;
            ++ur;
            PreferencePair p;
            p.task = task;
            p.prompt = prompt;
            p.chosen = e.chosen->response;
            p.rejected = e.rejected->response;
            p.chosen_rating = *e.chosen->rating;
            p.rejected_rating = *e.rejected->rating;
            p.margin = e.margin;
            p.chosen_id = e.chosen->id;
            p.rejected_id = e.rejected->id;
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<SftExample> build_sft_set(const Corpus& corpus, int sft_threshold) {
    std::vector<SftExample> out;
    for (const auto& [key, idxs] : corpus.group_index) {
        for (size_t i : idxs) {
            const RatedResponse& rec = corpus.records[i];
            if (!rec.rating)
                throw std::invalid_argument("record \"" + rec.id +
                                            "\" has no rating; rescale first");
            if (*rec.rating > sft_threshold) {
                SftExample e;
                e.id = rec.id;
                e.task = key.first;
                e.prompt = key.second;
                e.response = rec.response;
                e.rating = *rec.rating;
                out.push_back(std::move(e));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const SftExample& a, const SftExample& b) {
        return std::tie(a.task, a.prompt, a.id) < std::tie(b.task, b.prompt, b.id);
    });
    return out;
}

DatasetStats dataset_stats(const std::vector<PreferencePair>& pairs) {
    DatasetStats st;
    st.total = pairs.size();
    for (const auto& p : pairs) {
        ++st.per_task[p.task];
        ++st.per_prompt[p.prompt];
        ++st.margin_hist[p.margin];
        ++st.chosen_rating_hist[p.chosen_rating];
        ++st.rejected_rating_hist[p.rejected_rating];
    }
    return st;
}

DatasetStats dataset_stats(const std::vector<SftExample>& examples) {
    DatasetStats st;
    st.total = examples.size();
    for (const auto& e : examples) {
        ++st.per_task[e.task];
        ++st.per_prompt[e.prompt];
        ++st.rating_hist[e.rating];
    }
    return st;
}

namespace {

json int_hist_to_json(const std::map<int, size_t>& hist) {
    json obj = json::object();
    for (const auto& [k, v] : hist) obj[std::to_string(k)] = v;
    return obj;
}

json str_hist_to_json(const std::map<std::string, size_t>& hist) {
    json obj = json::object();
    for (const auto& [k, v] : hist) obj[k] = v;
    return obj;
}

}  // namespace

json DatasetStats::to_json() const {
    json obj;
    obj["total"] = total;
    obj["per_task"] = str_hist_to_json(per_task);
    obj["per_prompt"] = str_hist_to_json(per_prompt);
    if (!margin_hist.empty()) obj["margin_hist"] = int_hist_to_json(margin_hist);
    if (!chosen_rating_hist.empty())
        obj["chosen_rating_hist"] = int_hist_to_json(chosen_rating_hist);
    if (!rejected_rating_hist.empty())
        obj["rejected_rating_hist"] = int_hist_to_json(rejected_rating_hist);
    if (!rating_hist.empty()) obj["rating_hist"] = int_hist_to_json(rating_hist);
    return obj;
}

std::string DatasetStats::summary() const {
    std::ostringstream os;
    os << "total: " << total << "\n";
    os << "tasks: " << per_task.size() << ", prompts: " << per_prompt.size() << "\n";
    for (const auto& [task, n] : per_task) os << "  " << task << ": " << n << "\n";
    if (!margin_hist.empty()) {
        os << "margins:";
        for (const auto& [m, n] : margin_hist) os << " " << m << "x" << n;
        os << "\n";
    }
    return os.str();
}

ordered_json pair_to_json(const PreferencePair& p) {
    ordered_json obj;
    obj["task"] = p.task;
    obj["prompt"] = p.prompt;
    obj["chosen"] = p.chosen;
    obj["rejected"] = p.rejected;
    obj["chosen_rating"] = p.chosen_rating;
    obj["rejected_rating"] = p.rejected_rating;
    obj["margin"] = p.margin;
    obj["chosen_id"] = p.chosen_id;
    obj["rejected_id"] = p.rejected_id;
    if (p.scores) scores_to_json(*p.scores, obj);
    if (p.weight) obj["weight"] = *p.weight;
    return obj;
}

PreferencePair pair_from_json(const ordered_json& obj, size_t line_no) {
    PreferencePair p;
    try {
        p.task = obj.value("task", std::string());
        p.prompt = obj.at("prompt").get<std::string>();
        p.chosen = obj.at("chosen").get<std::string>();
        p.rejected = obj.at("rejected").get<std::string>();
        p.chosen_rating = obj.at("chosen_rating").get<int>();
        p.rejected_rating = obj.at("rejected_rating").get<int>();
        p.margin = obj.at("margin").get<int>();
        p.chosen_id = obj.at("chosen_id").get<std::string>();
        p.rejected_id = obj.at("rejected_id").get<std::string>();
    } catch (const json::exception& e) {
        throw LineError(line_no, std::string("bad preference pair: ") + e.what());
    }
    if (obj.contains("novelty") || obj.contains("diversity"))
        p.scores = scores_from_json(obj);
    if (auto it = obj.find("weight"); it != obj.end() && !it->is_null())
        p.weight = it->get<double>();
    return p;
}

ordered_json sft_to_json(const SftExample& e) {
    ordered_json obj;
    obj["id"] = e.id;
    obj["task"] = e.task;
    obj["prompt"] = e.prompt;
    obj["response"] = e.response;
    obj["rating"] = e.rating;
    return obj;
}

SftExample sft_from_json(const ordered_json& obj, size_t line_no) {
    SftExample e;
    try {
        e.id = obj.value("id", std::string());
        e.task = obj.value("task", std::string());
        e.prompt = obj.at("prompt").get<std::string>();
        e.response = obj.at("response").get<std::string>();
        e.rating = obj.at("rating").get<int>();
    } catch (const json::exception& ex) {
        throw LineError(line_no, std::string("bad SFT example: ") + ex.what());
    }
    return e;
}

void write_pairs(const std::vector<PreferencePair>& pairs, std::ostream& out) {
    for (const auto& p : pairs) write_jsonl_line(out, pair_to_json(p));
}

std::vector<PreferencePair> read_pairs(std::istream& in) {
    std::vector<PreferencePair> pairs;
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        ordered_json obj = parse_object_line(line_no, line);
        if (obj.contains("_meta")) return;  // scored-file metadata header
        pairs.push_back(pair_from_json(obj, line_no));
    });
    return pairs;
}

void write_sft(const std::vector<SftExample>& examples, std::ostream& out) {
    for (const auto& e : examples) write_jsonl_line(out, sft_to_json(e));
}

std::vector<SftExample> read_sft(std::istream& in) {
    std::vector<SftExample> examples;
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        ordered_json obj = parse_object_line(line_no, line);
        if (obj.contains("_meta")) return;
        examples.push_back(sft_from_json(obj, line_no));
    });
    return examples;
}

}  // namespace crpo
