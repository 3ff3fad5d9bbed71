#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crpo/jsonl.hpp"
#include "crpo/metrics.hpp"

namespace crpo {

// Total natural-log likelihoods of one preference pair under the policy and
// the frozen reference, plus the pair's composite creativity weight.
struct PairLogits {
    double policy_chosen_lp = 0.0;
    double policy_rejected_lp = 0.0;
    double ref_chosen_lp = 0.0;
    double ref_rejected_lp = 0.0;
    double weight = 1.0;
};

// h = beta * [(log p(yw)/pref(yw)) - (log p(yl)/pref(yl))]
double dpo_logit(const PairLogits& p, double beta);

// -weight * ln(sigmoid(h)), evaluated as weight * ln(1 + exp(-h)) with the
// overflow-safe branch for negative h.
double pair_loss(double h, double weight);

// dL/dh = -weight * sigmoid(-h)
double pair_loss_grad(double h, double weight);

// Mean pair loss over the batch; throws on an empty batch.
double batch_loss(const std::vector<PairLogits>& pairs, double beta);

// Per-prompt categorical distribution over a finite candidate set; the
// desk-scale stand-in for a language-model policy.
struct TabularPolicy {
    std::vector<std::string> prompts;
    std::vector<std::vector<std::string>> candidates;  // per prompt
    std::vector<std::vector<double>> logits;           // per prompt

    size_t prompt_index(const std::string& prompt) const;
    size_t candidate_index(size_t prompt_idx, const std::string& candidate) const;
    std::vector<double> log_softmax(size_t prompt_idx) const;
    std::vector<double> softmax(size_t prompt_idx) const;
    void validate() const;
};

// (prompt, chosen id, rejected id, frozen composite weight)
struct PreferenceExample {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    double weight = 1.0;
};

struct TrainConfig {
    InjectionWeights weights;      // beta lives here
    double learning_rate = 0.05;
    size_t epochs = 100;
    uint64_t seed = 0;
    std::optional<size_t> batch_size;  // unset = full batch
};

// Per-prompt smoothed-count fit of the SFT responses: logit = ln(count + 1).
// Prompts with no SFT examples get uniform logits.
TabularPolicy fit_reference_policy(
    const std::vector<std::pair<std::string, std::string>>& sft_prompt_response,
    const std::vector<std::string>& prompts,
    const std::vector<std::vector<std::string>>& candidates);

// Mean weighted DPO loss of the example set under (policy, reference).
double dataset_loss(const TabularPolicy& policy, const TabularPolicy& reference,
                    const std::vector<PreferenceExample>& examples, double beta);

// Analytic gradient of dataset_loss w.r.t. every policy logit.
std::vector<std::vector<double>> dataset_gradient(
    const TabularPolicy& policy, const TabularPolicy& reference,
    const std::vector<PreferenceExample>& examples, double beta);

struct TrainResult {
    TabularPolicy policy;
    std::vector<double> loss_trajectory;  // evaluated before each epoch + final
    std::vector<double> grad_norms;       // one per epoch
};

// Gradient descent on the weighted objective, starting from the reference.
// Full-batch unless cfg.batch_size is set; deterministic given the seed.
TrainResult train_crpo(const std::vector<PreferenceExample>& examples,
                       const TabularPolicy& reference, const TrainConfig& cfg);

json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const json& obj);

}  // namespace crpo
