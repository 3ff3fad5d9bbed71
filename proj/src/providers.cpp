#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "crpo/providers.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "crpo/digest.hpp"
#include "crpo/manifest.hpp"
#include "crpo/text.hpp"

namespace crpo {

const char* to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::embedding: return "embedding";
        case ProviderKind::likelihood: return "likelihood";
        case ProviderKind::reward: return "reward";
    }
    return "unknown";
}

bool ProviderConfig::is_file_endpoint() const {
    return !(endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0);
}

std::string ProviderConfig::file_path() const {
    if (endpoint.rfind("file://", 0) == 0) return endpoint.substr(7);
    return endpoint;
}

void ProviderConfig::validate() const {
    if (endpoint.empty())
        throw std::invalid_argument(std::string(to_string(kind)) +
                                    " provider: endpoint not configured");
    if (max_batch < 1)
        throw std::invalid_argument("provider max_batch must be >= 1");
}

ProviderCache::ProviderCache(std::string disk_path) : disk_path_(std::move(disk_path)) {
    if (disk_path_.empty()) return;
    std::ifstream in(disk_path_);
    if (!in) return;  // fresh cache file, created on first put
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("key"))
            throw std::runtime_error("corrupt cache file " + disk_path_ + " at line " +
                                     std::to_string(line_no));
        entries_[obj["key"].get<std::string>()] = obj["payload"];
    }
}

std::optional<json> ProviderCache::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ProviderCache::put(const std::string& key, const json& payload) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(key, payload);
    if (!inserted || disk_path_.empty()) return;
    std::ofstream out(disk_path_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to cache file " + disk_path_);
    out << json{{"key", key}, {"payload", payload}, {"created_at", now_iso8601()}}
               .dump()
        << '\n';
}

size_t ProviderCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

namespace detail {

struct ClientBase::Impl {
    // file store: digest -> payload, loaded lazily
    bool store_loaded = false;
    std::unordered_map<std::string, json> store;

    // parsed HTTP endpoint
    std::string base_url;
    std::string path;

    void load_store(const ProviderConfig& cfg) {
        if (store_loaded) return;
        std::ifstream in(cfg.file_path());
        if (!in)
            throw std::runtime_error(std::string(to_string(cfg.kind)) +
                                     " provider: cannot open store file " +
                                     cfg.file_path());
        const char* digest_key = cfg.kind == ProviderKind::embedding
                                     ? "text_digest" : "pair_digest";
        const char* payload_key = cfg.kind == ProviderKind::embedding ? "vector"
                                  : cfg.kind == ProviderKind::likelihood ? "logprobs"
                                                                         : "score";
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json obj = json::parse(line, nullptr, false);
            if (obj.is_discarded() || !obj.is_object())
                throw std::runtime_error("store file " + cfg.file_path() +
                                         ": malformed JSON at line " +
                                         std::to_string(line_no));
            if (!obj.contains(payload_key))
                throw std::runtime_error("store file " + cfg.file_path() + " line " +
                                         std::to_string(line_no) + ": missing \"" +
                                         payload_key + "\"");
            std::string digest;
            if (obj.contains(digest_key)) {
                digest = obj[digest_key].get<std::string>();
            } else if (cfg.kind == ProviderKind::embedding && obj.contains("text")) {
                digest = text_digest(obj["text"].get<std::string>());
            } else if (cfg.kind != ProviderKind::embedding &&
                       obj.contains("prompt") && obj.contains("response")) {
                digest = pair_digest(obj["prompt"].get<std::string>(),
                                     obj["response"].get<std::string>());
            } else {
                throw std::runtime_error("store file " + cfg.file_path() + " line " +
                                         std::to_string(line_no) + ": missing \"" +
                                         digest_key + "\"");
            }
            store[digest] = obj[payload_key];
        }
        store_loaded = true;
    }

    void parse_endpoint(const ProviderConfig& cfg) {
        const std::string& url = cfg.endpoint;
        size_t scheme_end = url.find("://");
        size_t slash = url.find('/', scheme_end + 3);
        if (slash == std::string::npos) {
            base_url = url;
            path = "/";
        } else {
            base_url = url.substr(0, slash);
            path = url.substr(slash);
        }
    }
};

ClientBase::ClientBase(ProviderConfig cfg, std::shared_ptr<ProviderCache> cache)
    : cfg_(std::move(cfg)),
      cache_(cache ? std::move(cache) : std::make_shared<ProviderCache>()),
      impl_(std::make_unique<Impl>()) {
    cfg_.validate();
    if (!cfg_.is_file_endpoint()) impl_->parse_endpoint(cfg_);
}

ClientBase::~ClientBase() = default;

ProviderStats ClientBase::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

std::string ClientBase::cache_key(const std::string& canonical_input) const {
    std::string payload = to_string(cfg_.kind);
    payload.push_back('\x1f');
    payload += cfg_.model_id;
    payload.push_back('\x1f');
    payload += canonical_input;
    return sha256_hex(payload);
}

std::vector<json> ClientBase::upstream(const std::vector<std::string>& canonical,
                                       const std::vector<json>& wire_inputs) {
    if (cfg_.is_file_endpoint()) {
        impl_->load_store(cfg_);
        ++stats_.upstream_requests;
        stats_.upstream_items += canonical.size();
        std::vector<json> out;
        std::vector<size_t> missing;
        for (size_t i = 0; i < canonical.size(); ++i) {
            auto it = impl_->store.find(sha256_hex(canonical[i]));
            if (it == impl_->store.end()) {
                missing.push_back(i);
                out.emplace_back(nullptr);
            } else {
                out.push_back(it->second);
            }
        }
        if (!missing.empty()) {
            std::string what = std::string(to_string(cfg_.kind)) +
                               " store is missing entries for indices [";
            for (size_t i = 0; i < missing.size(); ++i)
                what += (i ? "," : "") + std::to_string(missing[i]);
            what += "] of the request";
            throw ProviderError(cfg_.kind, 1, missing, what);
        }
        return out;
    }

    json body = {{"model", cfg_.model_id}, {"inputs", json::array()}};
    for (const auto& in : wire_inputs) body["inputs"].push_back(in);
    size_t attempts = 0;
    std::string last_error;
    std::vector<size_t> failed;
    while (attempts < cfg_.retries + 1) {
        ++attempts;
        ++stats_.upstream_requests;
        stats_.upstream_items += wire_inputs.size();
        httplib::Client client(impl_->base_url);
        client.set_connection_timeout(0, cfg_.timeout_ms * 1000LL);
        client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
        httplib::Headers headers;
        if (!cfg_.bearer_token.empty())
            headers.emplace("Authorization", "Bearer " + cfg_.bearer_token);
        auto res = client.Post(impl_->path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            failed.resize(wire_inputs.size());
            std::iota(failed.begin(), failed.end(), 0);
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            failed.resize(wire_inputs.size());
            std::iota(failed.begin(), failed.end(), 0);
            continue;
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("outputs") ||
            !reply["outputs"].is_array() ||
            reply["outputs"].size() != wire_inputs.size()) {
            last_error = "malformed provider response";
            failed.resize(wire_inputs.size());
            std::iota(failed.begin(), failed.end(), 0);
            continue;
        }
        failed.clear();
        std::vector<json> out;
        for (size_t i = 0; i < reply["outputs"].size(); ++i) {
            if (reply["outputs"][i].is_null()) failed.push_back(i);
            out.push_back(reply["outputs"][i]);
        }
        if (failed.empty()) return out;
        last_error = "provider returned null outputs";
    }
    std::string what = std::string(to_string(cfg_.kind)) + " provider at " +
                       cfg_.endpoint + " failed after " + std::to_string(attempts) +
                       " attempt(s): " + last_error + "; failed indices [";
    for (size_t i = 0; i < failed.size(); ++i)
        what += (i ? "," : "") + std::to_string(failed[i]);
    what += "]";
    throw ProviderError(cfg_.kind, attempts, failed, what);
}

std::vector<json> ClientBase::fetch(const std::vector<std::string>& canonical,
                                    const std::vector<json>& wire_inputs) {
    std::lock_guard lock(mu_);
    std::vector<json> results(canonical.size());
    std::vector<char> resolved(canonical.size(), 0);

    // cache pass
    std::map<std::string, std::vector<size_t>> miss_positions;  // key -> positions
    std::vector<std::string> miss_order;                        // unique keys in order
    for (size_t i = 0; i < canonical.size(); ++i) {
        std::string key = cache_key(canonical[i]);
        if (auto hit = cache_->get(key)) {
            results[i] = std::move(*hit);
            resolved[i] = 1;
            ++stats_.cache_hits;
        } else {
            auto [it, inserted] = miss_positions.try_emplace(key);
            it->second.push_back(i);
            if (inserted) miss_order.push_back(key);
            ++stats_.cache_misses;
        }
    }

    // upstream pass over unique misses, chunked by max_batch
    for (size_t start = 0; start < miss_order.size(); start += cfg_.max_batch) {
        size_t end = std::min(miss_order.size(), start + cfg_.max_batch);
        std::vector<std::string> chunk_canonical;
        std::vector<json> chunk_wire;
        for (size_t k = start; k < end; ++k) {
            size_t first_pos = miss_positions[miss_order[k]].front();
            chunk_canonical.push_back(canonical[first_pos]);
            chunk_wire.push_back(wire_inputs[first_pos]);
        }
        std::vector<json> payloads = upstream(chunk_canonical, chunk_wire);
        for (size_t k = start; k < end; ++k) {
            const json& payload = payloads[k - start];
            cache_->put(miss_order[k], payload);
            for (size_t pos : miss_positions[miss_order[k]]) {
                results[pos] = payload;
                resolved[pos] = 1;
            }
        }
    }
    for (char r : resolved)
        if (!r) throw std::logic_error("provider fetch left unresolved inputs");
    return results;
}

}  // namespace detail

EmbeddingClient::EmbeddingClient(ProviderConfig cfg,
                                 std::shared_ptr<ProviderCache> cache)
    : ClientBase(std::move(cfg), std::move(cache)) {
    if (cfg_.kind != ProviderKind::embedding)
        throw std::invalid_argument("EmbeddingClient requires an embedding config");
}

std::vector<EmbeddingVector> EmbeddingClient::embed_batch(
    const std::vector<std::string>& texts) {
    if (texts.empty())
        throw std::invalid_argument("embed_batch: empty text list");
    std::vector<std::string> canonical;
    std::vector<json> wire;
    canonical.reserve(texts.size());
    for (const auto& t : texts) {
        std::string c = canonical_text(t);
        if (c.empty()) throw std::invalid_argument("embed_batch: empty text");
        wire.emplace_back(c);
        canonical.push_back(std::move(c));
    }
    std::vector<json> payloads = fetch(canonical, wire);
    std::vector<EmbeddingVector> out;
    out.reserve(payloads.size());
    size_t dim = 0;
    for (size_t i = 0; i < payloads.size(); ++i) {
        const json& p = payloads[i];
        if (!p.is_array() || p.empty())
            throw std::runtime_error("embedding provider returned a non-vector for \"" +
                                     texts[i] + "\"");
        EmbeddingVector v(p.get<std::vector<double>>());
        if (dim == 0) dim = v.dim();
        if (v.dim() != dim)
            throw std::runtime_error("embedding dimension mismatch within batch");
        if (v.norm == 0.0)
            throw std::runtime_error("embedding provider returned a zero vector for \"" +
                                     texts[i] + "\"");
        out.push_back(std::move(v));
    }
    return out;
}

LikelihoodClient::LikelihoodClient(ProviderConfig cfg,
                                   std::shared_ptr<ProviderCache> cache)
    : ClientBase(std::move(cfg), std::move(cache)) {
    if (cfg_.kind != ProviderKind::likelihood)
        throw std::invalid_argument("LikelihoodClient requires a likelihood config");
}

std::vector<double> LikelihoodClient::loglikelihood(const std::string& prompt,
                                                    const std::string& response) {
    if (canonical_text(response).empty())
        throw std::invalid_argument("loglikelihood: empty response");
    std::string canonical = canonical_text(prompt);
    canonical.push_back('\x1f');
    canonical += canonical_text(response);
    json wire = {{"prompt", canonical_text(prompt)},
                 {"response", canonical_text(response)}};
    json payload = fetch({canonical}, {wire}).front();
    if (!payload.is_array() || payload.empty())
        throw std::runtime_error("likelihood provider returned no token logprobs");
    std::vector<double> lps = payload.get<std::vector<double>>();
    for (double lp : lps)
        if (lp > 0.0)
            throw std::runtime_error("likelihood provider returned a positive logprob");
    return lps;
}

RewardClient::RewardClient(ProviderConfig cfg, std::shared_ptr<ProviderCache> cache)
    : ClientBase(std::move(cfg), std::move(cache)) {
    if (cfg_.kind != ProviderKind::reward)
        throw std::invalid_argument("RewardClient requires a reward config");
}

double RewardClient::reward(const std::string& prompt, const std::string& response) {
    if (canonical_text(response).empty())
        throw std::invalid_argument("reward: empty response");
    std::string canonical = canonical_text(prompt);
    canonical.push_back('\x1f');
    canonical += canonical_text(response);
    json wire = {{"prompt", canonical_text(prompt)},
                 {"response", canonical_text(response)}};
    json payload = fetch({canonical}, {wire}).front();
    if (!payload.is_number())
        throw std::runtime_error("reward provider returned a non-numeric score");
    return payload.get<double>();
}

}  // namespace crpo
