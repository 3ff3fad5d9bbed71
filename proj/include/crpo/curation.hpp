#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crpo/corpus.hpp"
#include "crpo/metrics.hpp"

namespace crpo {

// (prompt, chosen, rejected) with ratings and the rating margin. The chosen
// response's creativity scores and composite weight are filled by the
// scoring stage.
struct PreferencePair {
    std::string task;
    std::string prompt;
    std::string chosen;
    std::string rejected;
    int chosen_rating = 0;
    int rejected_rating = 0;
    int margin = 0;
    std::string chosen_id;
    std::string rejected_id;
    std::optional<CreativityScores> scores;
    std::optional<double> weight;
};

struct SftExample {
    std::string id;
    std::string task;
    std::string prompt;
    std::string response;
    int rating = 0;
};

struct CurationOptions {
    int margin_min = 5;
    int min_rating = 20;
    int max_pairings_per_response = 10;
};

// Emits, per (task, prompt) group, the ordered pairs whose rating margin is
// at least margin_min, both ratings at least min_rating, each response in
// at most max_pairings_per_response pairs. When the cap binds, the largest
// margins win; ties break on (chosen_id, rejected_id). Output order is
// independent of input order.
std::vector<PreferencePair> build_preference_pairs(const Corpus& corpus,
                                                   const CurationOptions& opts = {});

// Records with rating strictly above the threshold, in (task, prompt, id) order.
std::vector<SftExample> build_sft_set(const Corpus& corpus, int sft_threshold = 30);

struct DatasetStats {
    size_t total = 0;
    std::map<std::string, size_t> per_task;
    std::map<std::string, size_t> per_prompt;
    std::map<int, size_t> margin_hist;          // pairs only
    std::map<int, size_t> chosen_rating_hist;   // pairs only
    std::map<int, size_t> rejected_rating_hist; // pairs only
    std::map<int, size_t> rating_hist;          // SFT only

    json to_json() const;
    std::string summary() const;
};

DatasetStats dataset_stats(const std::vector<PreferencePair>& pairs);
DatasetStats dataset_stats(const std::vector<SftExample>& examples);

// JSON-lines serialization of the two dataset formats.
ordered_json pair_to_json(const PreferencePair& p);
PreferencePair pair_from_json(const ordered_json& obj, size_t line_no);
ordered_json sft_to_json(const SftExample& e);
SftExample sft_from_json(const ordered_json& obj, size_t line_no);

void write_pairs(const std::vector<PreferencePair>& pairs, std::ostream& out);
std::vector<PreferencePair> read_pairs(std::istream& in);
void write_sft(const std::vector<SftExample>& examples, std::ostream& out);
std::vector<SftExample> read_sft(std::istream& in);

}  // namespace crpo
