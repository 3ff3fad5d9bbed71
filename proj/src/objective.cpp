#include "crpo/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace crpo {

double dpo_logit(const PairLogits& p, double beta) {
    return beta * ((p.policy_chosen_lp - p.ref_chosen_lp) -
                   (p.policy_rejected_lp - p.ref_rejected_lp));
}

double pair_loss(double h, double weight) {
    if (h >= 0.0) return weight * std::log1p(std::exp(-h));
    return weight * (std::log1p(std::exp(h)) - h);
}

double pair_loss_grad(double h, double weight) {
    // sigmoid(-h), overflow-safe
    double s = h >= 0.0 ? std::exp(-h) / (1.0 + std::exp(-h))
                        : 1.0 / (1.0 + std::exp(h));
    return -weight * s;
}

double batch_loss(const std::vector<PairLogits>& pairs, double beta) {
    if (pairs.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double sum = 0.0;
    for (const auto& p : pairs) sum += pair_loss(dpo_logit(p, beta), p.weight);
    return sum / static_cast<double>(pairs.size());
}

size_t TabularPolicy::prompt_index(const std::string& prompt) const {
    for (size_t i = 0; i < prompts.size(); ++i)
        if (prompts[i] == prompt) return i;
    throw std::invalid_argument("policy has no prompt \"" + prompt + "\"");
}

size_t TabularPolicy::candidate_index(size_t prompt_idx,
                                      const std::string& candidate) const {
    const auto& cs = candidates.at(prompt_idx);
    for (size_t i = 0; i < cs.size(); ++i)
        if (cs[i] == candidate) return i;
    throw std::invalid_argument("prompt \"" + prompts.at(prompt_idx) +
                                "\" has no candidate \"" + candidate + "\"");
}

std::vector<double> TabularPolicy::log_softmax(size_t prompt_idx) const {
    const auto& z = logits.at(prompt_idx);
    double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    double lse = mx + std::log(sum);
    std::vector<double> out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
    return out;
}

std::vector<double> TabularPolicy::softmax(size_t prompt_idx) const {
    std::vector<double> out = log_softmax(prompt_idx);
    for (double& v : out) v = std::exp(v);
    return out;
}

void TabularPolicy::validate() const {
    if (prompts.size() != candidates.size() || prompts.size() != logits.size())
        throw std::invalid_argument("policy tables are misaligned");
    for (size_t p = 0; p < prompts.size(); ++p) {
        if (candidates[p].empty())
            throw std::invalid_argument("prompt \"" + prompts[p] + "\" has no candidates");
        if (candidates[p].size() != logits[p].size())
            throw std::invalid_argument("prompt \"" + prompts[p] +
                                        "\" has misaligned logits");
        double mass = 0.0;
        for (double v : softmax(p)) mass += v;
        if (std::fabs(mass - 1.0) > 1e-12)
            throw std::invalid_argument("softmax mass for prompt \"" + prompts[p] +
                                        "\" deviates from 1");
        for (double v : logits[p])
            if (!std::isfinite(v))
                throw std::invalid_argument("non-finite logit for prompt \"" +
                                            prompts[p] + "\"");
    }
}

TabularPolicy fit_reference_policy(
    const std::vector<std::pair<std::string, std::string>>& sft_prompt_response,
    const std::vector<std::string>& prompts,
    const std::vector<std::vector<std::string>>& candidates) {
    if (prompts.size() != candidates.size())
        throw std::invalid_argument("fit_reference_policy: misaligned inputs");
    TabularPolicy policy;
    policy.prompts = prompts;
    policy.candidates = candidates;
    policy.logits.resize(prompts.size());

    std::map<std::string, std::map<std::string, size_t>> counts;
    for (const auto& [prompt, response] : sft_prompt_response)
        ++counts[prompt][response];

    for (size_t p = 0; p < prompts.size(); ++p) {
        auto prompt_counts = counts.find(prompts[p]);
        policy.logits[p].resize(candidates[p].size());
        for (size_t c = 0; c < candidates[p].size(); ++c) {
            size_t n = 0;
            if (prompt_counts != counts.end()) {
                auto it = prompt_counts->second.find(candidates[p][c]);
                if (it != prompt_counts->second.end()) n = it->second;
            }
            policy.logits[p][c] = std::log(static_cast<double>(n) + 1.0);
        }
        if (prompt_counts != counts.end()) {
            // every SFT response must be a known candidate
            for (const auto& [resp, n] : prompt_counts->second) {
                (void)n;
                policy.candidate_index(p, resp);
            }
        }
    }
    return policy;
}

namespace {

struct IndexedExample {
    size_t prompt;
    size_t chosen;
    size_t rejected;
    double weight;
    size_t source;  // original position, for error reporting
};

std::vector<IndexedExample> index_examples(
    const TabularPolicy& policy, const std::vector<PreferenceExample>& examples) {
    std::map<std::string, size_t> prompt_idx;
    for (size_t i = 0; i < policy.prompts.size(); ++i)
        prompt_idx[policy.prompts[i]] = i;
    std::vector<IndexedExample> out;
    out.reserve(examples.size());
    for (size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        auto it = prompt_idx.find(e.prompt);
        if (it == prompt_idx.end())
            throw std::invalid_argument("policy has no prompt \"" + e.prompt + "\"");
        size_t p = it->second;
        if (e.weight < 0.0 || !std::isfinite(e.weight))
            throw std::invalid_argument("pair " + std::to_string(i) +
                                        " has an invalid weight");
        out.push_back({p, policy.candidate_index(p, e.chosen),
                       policy.candidate_index(p, e.rejected), e.weight, i});
    }
    return out;
}

double indexed_loss(const TabularPolicy& policy,
                    const std::vector<std::vector<double>>& ref_logp,
                    const std::vector<IndexedExample>& idx, double beta) {
    double sum = 0.0;
    for (const auto& e : idx) {
        std::vector<double> logp = policy.log_softmax(e.prompt);
        PairLogits pl;
        pl.policy_chosen_lp = logp[e.chosen];
        pl.policy_rejected_lp = logp[e.rejected];
        pl.ref_chosen_lp = ref_logp[e.prompt][e.chosen];
        pl.ref_rejected_lp = ref_logp[e.prompt][e.rejected];
        pl.weight = e.weight;
        sum += pair_loss(dpo_logit(pl, beta), e.weight);
    }
    return sum / static_cast<double>(idx.size());
}

// Accumulates the analytic gradient of the mean weighted loss over `subset`
// into `grad`. d h / d z[p][k] = beta * ([k=chosen] - [k=rejected]); the
// log-softmax terms cancel between chosen and rejected.
void accumulate_gradient(const TabularPolicy& policy,
                         const std::vector<std::vector<double>>& ref_logp,
                         const std::vector<IndexedExample>& subset, double beta,
                         std::vector<std::vector<double>>& grad) {
    double inv_n = 1.0 / static_cast<double>(subset.size());
    for (const auto& e : subset) {
        std::vector<double> logp = policy.log_softmax(e.prompt);
        double h = beta * ((logp[e.chosen] - ref_logp[e.prompt][e.chosen]) -
                           (logp[e.rejected] - ref_logp[e.prompt][e.rejected]));
        double dh = pair_loss_grad(h, e.weight) * inv_n;
        grad[e.prompt][e.chosen] += dh * beta;
        grad[e.prompt][e.rejected] -= dh * beta;
    }
}

}  // namespace

double dataset_loss(const TabularPolicy& policy, const TabularPolicy& reference,
                    const std::vector<PreferenceExample>& examples, double beta) {
    if (examples.empty()) throw std::invalid_argument("dataset_loss: no examples");
    std::vector<std::vector<double>> ref_logp(reference.prompts.size());
    for (size_t p = 0; p < reference.prompts.size(); ++p)
        ref_logp[p] = reference.log_softmax(p);
    return indexed_loss(policy, ref_logp, index_examples(policy, examples), beta);
}

std::vector<std::vector<double>> dataset_gradient(
    const TabularPolicy& policy, const TabularPolicy& reference,
    const std::vector<PreferenceExample>& examples, double beta) {
    if (examples.empty()) throw std::invalid_argument("dataset_gradient: no examples");
    std::vector<std::vector<double>> ref_logp(reference.prompts.size());
    for (size_t p = 0; p < reference.prompts.size(); ++p)
        ref_logp[p] = reference.log_softmax(p);
    std::vector<std::vector<double>> grad(policy.logits.size());
    for (size_t p = 0; p < grad.size(); ++p) grad[p].assign(policy.logits[p].size(), 0.0);
    accumulate_gradient(policy, ref_logp, index_examples(policy, examples), beta, grad);
    return grad;
}

TrainResult train_crpo(const std::vector<PreferenceExample>& examples,
                       const TabularPolicy& reference, const TrainConfig& cfg) {
    if (examples.empty()) throw std::invalid_argument("train_crpo: no examples");
    if (!(cfg.learning_rate > 0.0))
        throw std::invalid_argument("train_crpo: learning_rate must be positive");
    if (cfg.batch_size && *cfg.batch_size == 0)
        throw std::invalid_argument("train_crpo: batch_size must be positive");
    reference.validate();

    TrainResult result;
    result.policy = reference;  // policy starts at the reference
    std::vector<std::vector<double>> ref_logp(reference.prompts.size());
    for (size_t p = 0; p < reference.prompts.size(); ++p)
        ref_logp[p] = reference.log_softmax(p);
    std::vector<IndexedExample> idx = index_examples(result.policy, examples);
    double beta = cfg.weights.beta;

    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> order(idx.size());
    std::iota(order.begin(), order.end(), 0);

    auto check_finite = [&](double loss) {
        if (std::isfinite(loss)) return;
        // identify the first offending pair for the error message
        for (const auto& e : idx) {
            std::vector<double> logp = result.policy.log_softmax(e.prompt);
            double h = beta * ((logp[e.chosen] - ref_logp[e.prompt][e.chosen]) -
                               (logp[e.rejected] - ref_logp[e.prompt][e.rejected]));
            if (!std::isfinite(pair_loss(h, e.weight)))
                throw std::runtime_error("non-finite loss at pair " +
                                         std::to_string(e.source));
        }
        throw std::runtime_error("non-finite loss");
    };

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss = indexed_loss(result.policy, ref_logp, idx, beta);
        check_finite(loss);
        result.loss_trajectory.push_back(loss);

        std::vector<std::vector<double>> grad(result.policy.logits.size());
        for (size_t p = 0; p < grad.size(); ++p)
            grad[p].assign(result.policy.logits[p].size(), 0.0);

        if (!cfg.batch_size || *cfg.batch_size >= idx.size()) {
            accumulate_gradient(result.policy, ref_logp, idx, beta, grad);
            double gn = 0.0;
            for (const auto& row : grad)
                for (double g : row) gn += g * g;
            result.grad_norms.push_back(std::sqrt(gn));
            for (size_t p = 0; p < grad.size(); ++p)
                for (size_t c = 0; c < grad[p].size(); ++c)
                    result.policy.logits[p][c] -= cfg.learning_rate * grad[p][c];
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            double gn_epoch = 0.0;
            for (size_t start = 0; start < order.size(); start += *cfg.batch_size) {
                size_t end = std::min(order.size(), start + *cfg.batch_size);
                std::vector<IndexedExample> batch;
                batch.reserve(end - start);
                for (size_t k = start; k < end; ++k) batch.push_back(idx[order[k]]);
                for (auto& row : grad) std::fill(row.begin(), row.end(), 0.0);
                accumulate_gradient(result.policy, ref_logp, batch, beta, grad);
                double gn = 0.0;
                for (size_t p = 0; p < grad.size(); ++p)
                    for (size_t c = 0; c < grad[p].size(); ++c) {
                        gn += grad[p][c] * grad[p][c];
                        result.policy.logits[p][c] -= cfg.learning_rate * grad[p][c];
                    }
                gn_epoch += std::sqrt(gn);
            }
            result.grad_norms.push_back(gn_epoch);
        }
    }
    double final_loss = indexed_loss(result.policy, ref_logp, idx, beta);
    check_finite(final_loss);
    result.loss_trajectory.push_back(final_loss);
    return result;
}

json policy_to_json(const TabularPolicy& policy) {
    json rows = json::array();
    for (size_t p = 0; p < policy.prompts.size(); ++p)
        rows.push_back({{"prompt", policy.prompts[p]},
                        {"candidates", policy.candidates[p]},
                        {"logits", policy.logits[p]}});
    return {{"prompts", rows}};
}

TabularPolicy policy_from_json(const json& obj) {
    TabularPolicy policy;
    for (const auto& row : obj.at("prompts")) {
        policy.prompts.push_back(row.at("prompt").get<std::string>());
        policy.candidates.push_back(row.at("candidates").get<std::vector<std::string>>());
        policy.logits.push_back(row.at("logits").get<std::vector<double>>());
    }
    policy.validate();
    return policy;
}

}  // namespace crpo
