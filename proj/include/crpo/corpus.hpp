#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crpo/jsonl.hpp"

namespace crpo {

enum class Split { train, dev, test, ood_item, ood_lang, ood_task, unassigned };

std::string to_string(Split s);
std::optional<Split> split_from_string(std::string_view label);

// One human response to a creativity prompt with per-rater and aggregated
// ratings. `rating` is absent until supplied in the input or produced by
// rescale_ratings. Unknown input keys are preserved in `extras`.
struct RatedResponse {
    std::string id;
    std::string task;
    std::string language;
    std::string prompt;
    std::string response;
    std::vector<double> rater_scores;
    std::optional<int> rating;
    Split split = Split::unassigned;
    ordered_json extras = ordered_json::object();
};

struct Corpus {
    std::vector<RatedResponse> records;
    // (task, canonical prompt) -> record indices, insertion order per group.
    std::map<std::pair<std::string, std::string>, std::vector<size_t>> group_index;

    void add(RatedResponse rec);
    void rebuild_index();
    size_t size() const { return records.size(); }
};

enum class ParseStrictness { strict, skip_invalid };

struct ParseReport {
    size_t parsed = 0;
    size_t skipped = 0;
    std::vector<std::string> errors;  // one message per skipped line
};

// Reads JSON-lines records. In strict mode the first malformed line throws
// a LineError; in skip_invalid mode malformed lines are counted in the
// report. Unknown split labels throw in both modes.
Corpus parse_rated_records(std::istream& in, ParseStrictness strictness,
                           ParseReport* report = nullptr);

ordered_json record_to_json(const RatedResponse& rec);
void serialize_corpus(const Corpus& corpus, std::ostream& out);

struct RescaleOptions {
    int target_min = 10;
    int target_max = 50;
    bool group_by_language = false;  // sub-dataset key: task, or (task, language)
};

// Min-max rescaling of one group of aggregated scores to integer ratings.
// A degenerate group (all scores equal) maps to the midpoint.
std::vector<int> rescale_group(const std::vector<double>& scores,
                               int target_min = 10, int target_max = 50);

// Applies rescale_group per sub-dataset. Records with rater_scores are
// aggregated by arithmetic mean; records with a rating but no rater_scores
// pass through unchanged (already aggregated upstream).
Corpus rescale_ratings(const Corpus& corpus, const RescaleOptions& opts = {});

// Keeps records whose rater scores all agree after half-up rounding.
Corpus filter_full_agreement(const Corpus& corpus);

}  // namespace crpo
