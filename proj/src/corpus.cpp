#include "crpo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "crpo/text.hpp"

namespace crpo {

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
        case Split::ood_item: return "ood_item";
        case Split::ood_lang: return "ood_lang";
        case Split::ood_task: return "ood_task";
        case Split::unassigned: return "unassigned";
    }
    return "unassigned";
}

std::optional<Split> split_from_string(std::string_view label) {
    if (label == "train") return Split::train;
    if (label == "dev") return Split::dev;
    if (label == "test") return Split::test;
    if (label == "ood_item") return Split::ood_item;
    if (label == "ood_lang") return Split::ood_lang;
    if (label == "ood_task") return Split::ood_task;
    if (label == "unassigned") return Split::unassigned;
    return std::nullopt;
}

void Corpus::add(RatedResponse rec) {
    auto key = std::make_pair(rec.task, canonical_text(rec.prompt));
    records.push_back(std::move(rec));
    group_index[std::move(key)].push_back(records.size() - 1);
}

void Corpus::rebuild_index() {
    group_index.clear();
    for (size_t i = 0; i < records.size(); ++i)
        group_index[{records[i].task, canonical_text(records[i].prompt)}].push_back(i);
}

namespace {

const char* kKnownKeys[] = {"id",       "task",         "language", "prompt",
                            "response", "rater_scores", "rating",   "split"};

bool is_known_key(const std::string& k) {
    for (const char* known : kKnownKeys)
        if (k == known) return true;
    return false;
}

std::string require_string(const ordered_json& obj, const char* key, size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw LineError(line_no, std::string("missing required field \"") + key + "\"");
    if (!it->is_string())
        throw LineError(line_no, std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
}

RatedResponse record_from_json(const ordered_json& obj, size_t line_no) {
    RatedResponse rec;
    rec.id = require_string(obj, "id", line_no);
    rec.task = require_string(obj, "task", line_no);
    rec.language = require_string(obj, "language", line_no);
    rec.prompt = require_string(obj, "prompt", line_no);
    rec.response = require_string(obj, "response", line_no);
    if (trim(rec.prompt).empty()) throw LineError(line_no, "prompt is empty");
    if (trim(rec.response).empty()) throw LineError(line_no, "response is empty");

    if (auto it = obj.find("rater_scores"); it != obj.end()) {
        if (!it->is_array())
            throw LineError(line_no, "rater_scores must be an array of numbers");
        for (const auto& v : *it) {
            if (!v.is_number())
                throw LineError(line_no, "rater_scores must be an array of numbers");
            rec.rater_scores.push_back(v.get<double>());
        }
    }
    if (auto it = obj.find("rating"); it != obj.end()) {
        if (!it->is_number_integer())
            throw LineError(line_no, "rating must be an integer");
        int r = it->get<int>();
        if (r < 10 || r > 50)
            throw LineError(line_no, "rating " + std::to_string(r) + " outside [10,50]");
        rec.rating = r;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!is_known_key(it.key())) rec.extras[it.key()] = it.value();
    return rec;
}

}  // namespace

Corpus parse_rated_records(std::istream& in, ParseStrictness strictness,
                           ParseReport* report) {
    Corpus corpus;
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    for_each_line(in, [&](size_t line_no, const std::string& line) {
        try {
            ordered_json obj = parse_object_line(line_no, line);
            // Unknown split labels are a hard error regardless of strictness.
            std::optional<Split> split;
            if (auto it = obj.find("split"); it != obj.end()) {
                if (!it->is_string())
                    throw LineError(line_no, "split must be a string");
                auto parsed = split_from_string(it->get<std::string>());
                if (!parsed)
                    throw std::runtime_error("line " + std::to_string(line_no) +
                                             ": unknown split label \"" +
                                             it->get<std::string>() + "\"");
                split = *parsed;
            }
            RatedResponse rec = record_from_json(obj, line_no);
            if (split) rec.split = *split;
            corpus.add(std::move(rec));
            ++rep.parsed;
        } catch (const LineError& e) {
            if (strictness == ParseStrictness::strict) throw;
            ++rep.skipped;
            rep.errors.push_back(e.what());
        }
    });
    return corpus;
}

ordered_json record_to_json(const RatedResponse& rec) {
    ordered_json obj;
    obj["id"] = rec.id;
    obj["task"] = rec.task;
    obj["language"] = rec.language;
    obj["prompt"] = rec.prompt;
    obj["response"] = rec.response;
    obj["rater_scores"] = rec.rater_scores;
    if (rec.rating) obj["rating"] = *rec.rating;
    obj["split"] = to_string(rec.split);
    for (auto it = rec.extras.begin(); it != rec.extras.end(); ++it)
        obj[it.key()] = it.value();
    return obj;
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
    for (const auto& rec : corpus.records) write_jsonl_line(out, record_to_json(rec));
}

std::vector<int> rescale_group(const std::vector<double>& scores,
                               int target_min, int target_max) {
    if (scores.empty()) throw std::invalid_argument("rescale_group: empty group");
    if (target_min >= target_max)
        throw std::invalid_argument("rescale_group: target_min must be < target_max");
    auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
    double mn = *mn_it, mx = *mx_it;
    std::vector<int> out;
    out.reserve(scores.size());
    if (mn == mx) {
        int mid = static_cast<int>(round_half_up((target_min + target_max) / 2.0));
        out.assign(scores.size(), mid);
        return out;
    }
    double span = static_cast<double>(target_max - target_min);
    for (double s : scores) {
        long r = round_half_up(target_min + (s - mn) / (mx - mn) * span);
        out.push_back(static_cast<int>(std::clamp<long>(r, target_min, target_max)));
    }
    return out;
}

Corpus rescale_ratings(const Corpus& corpus, const RescaleOptions& opts) {
    Corpus out;
    out.records = corpus.records;
    // sub-dataset key -> indices of records carrying raw rater scores
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < out.records.size(); ++i) {
        const auto& rec = out.records[i];
        if (!rec.rater_scores.empty()) {
            std::string key = rec.task;
            if (opts.group_by_language) {
                key.push_back('\x1f');
                key += rec.language;
            }
            groups[key].push_back(i);
        } else if (!rec.rating) {
            throw std::invalid_argument("record \"" + rec.id +
                                        "\" has neither rater_scores nor rating");
        }
    }
    for (const auto& [key, idxs] : groups) {
        std::vector<double> aggregated;
        aggregated.reserve(idxs.size());
        for (size_t i : idxs) {
            const auto& s = out.records[i].rater_scores;
            aggregated.push_back(std::accumulate(s.begin(), s.end(), 0.0) /
                                 static_cast<double>(s.size()));
        }
        std::vector<int> ratings =
            rescale_group(aggregated, opts.target_min, opts.target_max);
        for (size_t j = 0; j < idxs.size(); ++j)
            out.records[idxs[j]].rating = ratings[j];
    }
    out.rebuild_index();
    return out;
}

Corpus filter_full_agreement(const Corpus& corpus) {
    Corpus out;
    for (const auto& rec : corpus.records) {
        if (rec.rater_scores.empty())
            throw std::invalid_argument("record \"" + rec.id +
                                        "\" has no rater_scores; cannot check agreement");
        long first = round_half_up(rec.rater_scores.front());
        bool agree = true;
        for (double s : rec.rater_scores)
            if (round_half_up(s) != first) { agree = false; break; }
        if (agree) out.add(rec);
    }
    return out;
}

}  // namespace crpo
