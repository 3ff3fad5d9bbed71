#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crpo/jsonl.hpp"
#include "crpo/metrics.hpp"

namespace crpo {

enum class ProviderKind { embedding, likelihood, reward };

const char* to_string(ProviderKind kind);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::embedding;
    std::string endpoint;     // http(s)://... or file://path or a bare file path
    std::string model_id;
    int timeout_ms = 30000;
    size_t max_batch = 32;
    size_t retries = 2;
    std::string bearer_token;  // optional Authorization header passthrough

    void validate() const;
    bool is_file_endpoint() const;
    std::string file_path() const;
};

struct ProviderStats {
    uint64_t upstream_requests = 0;  // transport round-trips (HTTP posts or store scans)
    uint64_t upstream_items = 0;     // items fetched upstream
    uint64_t cache_hits = 0;
    uint64_t cache_misses = 0;
};

// Provider failure with retry metadata.
struct ProviderError : std::runtime_error {
    ProviderKind kind;
    size_t attempts;
    std::vector<size_t> failed_indices;  // indices into the requested batch

    ProviderError(ProviderKind k, size_t att, std::vector<size_t> failed,
                  const std::string& what)
        : std::runtime_error(what), kind(k), attempts(att),
          failed_indices(std::move(failed)) {}
};

// Keyed payload cache, in-memory with optional JSONL persistence. Safe for
// concurrent use; writes are serialized.
class ProviderCache {
  public:
    ProviderCache() = default;
    explicit ProviderCache(std::string disk_path);

    std::optional<json> get(const std::string& key) const;
    void put(const std::string& key, const json& payload);
    size_t size() const;

  private:
    mutable std::mutex mu_;
    std::unordered_map<std::string, json> entries_;
    std::string disk_path_;
};

namespace detail {

// Shared transport + caching skeleton for the three client kinds.
class ClientBase {
  public:
    ClientBase(ProviderConfig cfg, std::shared_ptr<ProviderCache> cache);
    virtual ~ClientBase();

    const ProviderConfig& config() const { return cfg_; }
    ProviderStats stats() const;
    std::string cache_key(const std::string& canonical_input) const;

  protected:
    // Fetches payloads for canonical inputs (cache-aware, deduplicated,
    // batched by max_batch). `wire_inputs` must align with `canonical`.
    std::vector<json> fetch(const std::vector<std::string>& canonical,
                            const std::vector<json>& wire_inputs);

    // One upstream round-trip; returns one payload per input or throws.
    std::vector<json> upstream(const std::vector<std::string>& canonical,
                               const std::vector<json>& wire_inputs);

    ProviderConfig cfg_;
    std::shared_ptr<ProviderCache> cache_;
    mutable std::mutex mu_;
    ProviderStats stats_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace detail

class EmbeddingClient : public detail::ClientBase {
  public:
    EmbeddingClient(ProviderConfig cfg,
                    std::shared_ptr<ProviderCache> cache = nullptr);
    // One vector per text, input order preserved; duplicate texts are
    // fetched once. All vectors must agree on dimension and be nonzero.
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
};

class LikelihoodClient : public detail::ClientBase {
  public:
    LikelihoodClient(ProviderConfig cfg,
                     std::shared_ptr<ProviderCache> cache = nullptr);
    // Natural-log probabilities of the response tokens given the prompt.
    std::vector<double> loglikelihood(const std::string& prompt,
                                      const std::string& response);
};

class RewardClient : public detail::ClientBase {
  public:
    RewardClient(ProviderConfig cfg,
                 std::shared_ptr<ProviderCache> cache = nullptr);
    double reward(const std::string& prompt, const std::string& response);
};

}  // namespace crpo
