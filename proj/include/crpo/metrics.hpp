#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace crpo {

// Fixed-length real vector with a cached Euclidean norm.
struct EmbeddingVector {
    std::vector<double> values;
    double norm = 0.0;

    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> v);
    size_t dim() const { return values.size(); }
};

using WordEmbeddings = std::map<std::string, EmbeddingVector>;

// semdis(a, b) = 1 - cosine similarity, in [0, 2].
double semantic_distance(const EmbeddingVector& a, const EmbeddingVector& b);

// Mean semantic distance from `target` to the other members of `preferred`.
// Returns nullopt when the peer set is empty after excluding the target
// (diversity undefined for singleton groups).
std::optional<double> diversity_score(
    const std::string& target, const std::vector<std::string>& preferred,
    const std::map<std::string, EmbeddingVector>& embeddings);

enum class DsiDenominator { paper_literal, pair_mean };

struct DsiConfig {
    DsiDenominator denominator = DsiDenominator::paper_literal;
    bool remove_stopwords = false;
};

// Divergent semantic integration: aggregate pairwise semantic distance over
// the unique words of a text. paper_literal divides the ordered-pair sum by
// the word count; pair_mean averages over unordered pairs. The two satisfy
// paper_literal = (|T| - 1) * pair_mean. Texts with fewer than two unique
// words score 0.
double dsi(std::string_view text, const WordEmbeddings& embeddings,
           const DsiConfig& cfg = {});

// Absolute DSI difference between a response and the pooled concatenation
// of the reference texts.
double novelty_score(std::string_view response,
                     const std::vector<std::string>& reference_texts,
                     const WordEmbeddings& embeddings, const DsiConfig& cfg = {});

enum class SurpriseNormalization { per_token, total };

// Base-2 exponentiated negative log-likelihood. Token log-probabilities are
// natural-log; per_token gives the per-token perplexity, total exponentiates
// the summed negative log-likelihood.
double surprise_score(const std::vector<double>& token_logprobs,
                      SurpriseNormalization normalization =
                          SurpriseNormalization::per_token);

// Reward-model scalar, passed through verbatim.
double quality_score(
    const std::string& prompt, const std::string& response,
    const std::function<double(const std::string&, const std::string&)>& reward_provider);

// Min-max normalization to [0, 1]; a constant list maps everywhere to 0.5.
std::vector<double> normalize_scores(const std::vector<double>& raw);

// Raw and normalized creativity scores of one response. Diversity is absent
// for responses whose prompt has no peer preferred responses.
struct CreativityScores {
    std::optional<double> novelty;
    std::optional<double> diversity;
    std::optional<double> surprise;
    std::optional<double> quality;
    std::optional<double> novelty_norm;
    std::optional<double> diversity_norm;
    std::optional<double> surprise_norm;
    std::optional<double> quality_norm;
};

struct InjectionWeights {
    double lambda_base = 0.0;  // DPO-recovery offset
    double lambda_d = 0.0;
    double lambda_n = 0.0;
    double lambda_s = 0.0;
    double lambda_q = 0.0;
    double beta = 0.1;

    void validate() const;  // throws unless some weight is positive and beta > 0
};

// lambda_base + lambda_d*delta + lambda_n*nu + lambda_s*xi + lambda_q*gamma
// over the normalized scores.
double composite_weight(const CreativityScores& normalized,
                        const InjectionWeights& w);

// Flat JSON form: novelty/diversity/surprise/quality plus *_norm keys;
// absent raw values serialize as null, absent norms are omitted.
void scores_to_json(const CreativityScores& s, nlohmann::ordered_json& obj);
CreativityScores scores_from_json(const nlohmann::ordered_json& obj);

nlohmann::json weights_to_json(const InjectionWeights& w);
InjectionWeights weights_from_json(const nlohmann::json& obj);

}  // namespace crpo
