#include "crpo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crpo/text.hpp"

namespace crpo {

EmbeddingVector::EmbeddingVector(std::vector<double> v) : values(std::move(v)) {
    double acc = 0.0;
    for (double x : values) acc += x * x;
    norm = std::sqrt(acc);
}

double semantic_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("semantic_distance: dimension mismatch (" +
                                    std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()) + ")");
    if (a.norm == 0.0 || b.norm == 0.0)
        throw std::invalid_argument("semantic_distance: zero vector");
    double dot = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    double cos = std::clamp(dot / (a.norm * b.norm), -1.0, 1.0);
    return 1.0 - cos;
}

std::optional<double> diversity_score(
    const std::string& target, const std::vector<std::string>& preferred,
    const std::map<std::string, EmbeddingVector>& embeddings) {
    auto target_it = embeddings.find(target);
    if (target_it == embeddings.end())
        throw std::invalid_argument("diversity_score: no embedding for target \"" +
                                    target + "\"");
    double sum = 0.0;
    size_t peers = 0;
    for (const auto& id : preferred) {
        if (id == target) continue;
        auto it = embeddings.find(id);
        if (it == embeddings.end())
            throw std::invalid_argument("diversity_score: no embedding for peer \"" +
                                        id + "\"");
        sum += semantic_distance(target_it->second, it->second);
        ++peers;
    }
    if (peers == 0) return std::nullopt;
    return sum / static_cast<double>(peers);
}

double dsi(std::string_view text, const WordEmbeddings& embeddings,
           const DsiConfig& cfg) {
    std::vector<std::string> words = unique_words(text, cfg.remove_stopwords);
    size_t n = words.size();
    if (n <= 1) return 0.0;
    std::vector<const EmbeddingVector*> vecs;
    vecs.reserve(n);
    for (const auto& w : words) {
        auto it = embeddings.find(w);
        if (it == embeddings.end())
            throw std::invalid_argument("dsi: no embedding for word \"" + w + "\"");
        vecs.push_back(&it->second);
    }
    double unordered_sum = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            unordered_sum += semantic_distance(*vecs[i], *vecs[j]);
    // pair_mean over unordered pairs; paper_literal = (n - 1) * pair_mean,
    // computed as that exact product so the identity holds bit-for-bit.
    double pair_mean =
        2.0 * unordered_sum / (static_cast<double>(n) * static_cast<double>(n - 1));
    if (cfg.denominator == DsiDenominator::pair_mean) return pair_mean;
    return static_cast<double>(n - 1) * pair_mean;
}

double novelty_score(std::string_view response,
                     const std::vector<std::string>& reference_texts,
                     const WordEmbeddings& embeddings, const DsiConfig& cfg) {
    if (trim(response).empty())
        throw std::invalid_argument("novelty_score: empty response");
    if (reference_texts.empty())
        throw std::invalid_argument("novelty_score: empty reference corpus");
    std::string pooled;
    for (const auto& t : reference_texts) {
        if (!pooled.empty()) pooled.push_back('\n');
        pooled += t;
    }
    return std::fabs(dsi(response, embeddings, cfg) - dsi(pooled, embeddings, cfg));
}

double surprise_score(const std::vector<double>& token_logprobs,
                      SurpriseNormalization normalization) {
    if (token_logprobs.empty())
        throw std::invalid_argument("surprise_score: empty token list");
    const double ln2 = std::log(2.0);
    // Convert each token to base-2 before reducing; this keeps whole-bit
    // token costs exact (a uniform stub over 2^k symbols yields exactly 2^k).
    double bits = 0.0;
    for (double lp : token_logprobs) {
        if (lp > 0.0)
            throw std::invalid_argument("surprise_score: positive log-probability");
        bits += lp / ln2;
    }
    if (normalization == SurpriseNormalization::per_token)
        bits /= static_cast<double>(token_logprobs.size());
    return std::exp2(-bits);
}

double quality_score(
    const std::string& prompt, const std::string& response,
    const std::function<double(const std::string&, const std::string&)>& reward_provider) {
    return reward_provider(prompt, response);
}

std::vector<double> normalize_scores(const std::vector<double>& raw) {
    if (raw.empty()) throw std::invalid_argument("normalize_scores: empty list");
    auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    double mn = *mn_it, mx = *mx_it;
    std::vector<double> out;
    out.reserve(raw.size());
    if (mn == mx) {
        out.assign(raw.size(), 0.5);
        return out;
    }
    for (double s : raw) out.push_back((s - mn) / (mx - mn));
    return out;
}

void InjectionWeights::validate() const {
    auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
    if (!nonneg(lambda_base) || !nonneg(lambda_d) || !nonneg(lambda_n) ||
        !nonneg(lambda_s) || !nonneg(lambda_q))
        throw std::invalid_argument("injection weights must be non-negative");
    if (lambda_base <= 0.0 && lambda_d <= 0.0 && lambda_n <= 0.0 &&
        lambda_s <= 0.0 && lambda_q <= 0.0)
        throw std::invalid_argument("at least one injection weight must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be positive");
}

namespace {

double require_norm(const std::optional<double>& v, double lambda, const char* name) {
    if (lambda == 0.0) return 0.0;
    if (!v)
        throw std::invalid_argument(std::string("composite_weight: normalized ") +
                                    name + " score missing");
    return *v;
}

}  // namespace

double composite_weight(const CreativityScores& normalized,
                        const InjectionWeights& w) {
    return w.lambda_base +
           w.lambda_d * require_norm(normalized.diversity_norm, w.lambda_d, "diversity") +
           w.lambda_n * require_norm(normalized.novelty_norm, w.lambda_n, "novelty") +
           w.lambda_s * require_norm(normalized.surprise_norm, w.lambda_s, "surprise") +
           w.lambda_q * require_norm(normalized.quality_norm, w.lambda_q, "quality");
}

namespace {

void put_opt(nlohmann::ordered_json& obj, const char* key,
             const std::optional<double>& v, bool null_when_absent) {
    if (v)
        obj[key] = *v;
    else if (null_when_absent)
        obj[key] = nullptr;
}

std::optional<double> get_opt(const nlohmann::ordered_json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

}  // namespace

void scores_to_json(const CreativityScores& s, nlohmann::ordered_json& obj) {
    put_opt(obj, "novelty", s.novelty, true);
    put_opt(obj, "diversity", s.diversity, true);
    put_opt(obj, "surprise", s.surprise, true);
    put_opt(obj, "quality", s.quality, true);
    put_opt(obj, "novelty_norm", s.novelty_norm, false);
    put_opt(obj, "diversity_norm", s.diversity_norm, false);
    put_opt(obj, "surprise_norm", s.surprise_norm, false);
    put_opt(obj, "quality_norm", s.quality_norm, false);
}

CreativityScores scores_from_json(const nlohmann::ordered_json& obj) {
    CreativityScores s;
    s.novelty = get_opt(obj, "novelty");
    s.diversity = get_opt(obj, "diversity");
    s.surprise = get_opt(obj, "surprise");
    s.quality = get_opt(obj, "quality");
    s.novelty_norm = get_opt(obj, "novelty_norm");
    s.diversity_norm = get_opt(obj, "diversity_norm");
    s.surprise_norm = get_opt(obj, "surprise_norm");
    s.quality_norm = get_opt(obj, "quality_norm");
    return s;
}

nlohmann::json weights_to_json(const InjectionWeights& w) {
    return {{"lambda_base", w.lambda_base}, {"lambda_d", w.lambda_d},
            {"lambda_n", w.lambda_n},       {"lambda_s", w.lambda_s},
            {"lambda_q", w.lambda_q},       {"beta", w.beta}};
}

InjectionWeights weights_from_json(const nlohmann::json& obj) {
    InjectionWeights w;
    w.lambda_base = obj.value("lambda_base", 0.0);
    w.lambda_d = obj.value("lambda_d", 0.0);
    w.lambda_n = obj.value("lambda_n", 0.0);
    w.lambda_s = obj.value("lambda_s", 0.0);
    w.lambda_q = obj.value("lambda_q", 0.0);
    w.beta = obj.value("beta", 0.1);
    return w;
}

}  // namespace crpo
