// Shared test fixtures: deterministic provider stub stores and a small
// rated-corpus generator used by the CLI and acceptance suites.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "crpo/curation.hpp"
#include "crpo/digest.hpp"
#include "crpo/jsonl.hpp"
#include "crpo/text.hpp"

namespace fixture {

namespace fs = std::filesystem;
using crpo::json;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag = "work") {
        static std::atomic<uint64_t> counter{0};
        path = fs::temp_directory_path() /
               ("crpo_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Deterministic pseudo-embedding seeded from the text digest (stable across
// runs and platforms, unlike std::hash).
inline std::vector<double> stub_embedding(const std::string& text, size_t dim = 8) {
    std::string digest = crpo::text_digest(text);
    uint64_t seed = 0;
    for (int i = 0; i < 16; ++i) {
        char c = digest[i];
        seed = (seed << 4) | static_cast<uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    v[0] += 3.0;  // bias away from the origin
    return v;
}

inline std::vector<double> stub_logprobs(const std::string& prompt,
                                         const std::string& response) {
    std::string digest = crpo::pair_digest(prompt, response);
    size_t tokens = std::max<size_t>(1, crpo::unique_words(response).size());
    std::vector<double> lps;
    for (size_t i = 0; i < tokens; ++i) {
        unsigned char c = static_cast<unsigned char>(digest[i % digest.size()]);
        lps.push_back(-0.1 - (c % 32) / 10.0);
    }
    return lps;
}

inline double stub_reward(const std::string& prompt, const std::string& response) {
    std::string digest = crpo::pair_digest(prompt, response);
    unsigned char c = static_cast<unsigned char>(digest[0]);
    unsigned char d = static_cast<unsigned char>(digest[1]);
    return (c % 16) + (d % 10) / 10.0;
}

// Writes the three stub stores covering every (prompt, response) record plus
// all words appearing in any response. Returns the three store paths.
struct StubStores {
    std::string embeddings;
    std::string likelihood;
    std::string reward;
};

inline StubStores write_stub_stores(
    const TempDir& dir,
    const std::vector<std::pair<std::string, std::string>>& prompt_response) {
    StubStores stores;
    stores.embeddings = dir.file("stub_embeddings.jsonl");
    stores.likelihood = dir.file("stub_likelihood.jsonl");
    stores.reward = dir.file("stub_reward.jsonl");

    std::set<std::string> texts;
    std::string pooled;
    for (const auto& [prompt, response] : prompt_response) {
        texts.insert(crpo::canonical_text(response));
        pooled += response;
        pooled.push_back('\n');
    }
    std::ofstream emb(stores.embeddings);
    for (const auto& t : texts)
        emb << json{{"text_digest", crpo::text_digest(t)},
                    {"vector", stub_embedding(t)}}
                   .dump()
            << "\n";
    for (const auto& w : crpo::unique_words(pooled))
        if (!texts.count(w))
            emb << json{{"text_digest", crpo::text_digest(w)},
                        {"vector", stub_embedding(w)}}
                       .dump()
                << "\n";

    std::ofstream ll(stores.likelihood);
    std::ofstream rw(stores.reward);
    std::set<std::string> seen;
    for (const auto& [prompt, response] : prompt_response) {
        std::string key = crpo::pair_digest(prompt, response);
        if (!seen.insert(key).second) continue;
        ll << json{{"pair_digest", key}, {"logprobs", stub_logprobs(prompt, response)}}
                  .dump()
           << "\n";
        rw << json{{"pair_digest", key}, {"score", stub_reward(prompt, response)}}
                  .dump()
           << "\n";
    }
    return stores;
}

// A small rated corpus: `groups` (task, prompt) groups, `per_group` responses
// each, integer rater scores with full agreement for most records and a few
// planted disagreements.
inline std::string write_corpus(const TempDir& dir, size_t groups, size_t per_group,
                                uint64_t seed, const std::string& name = "corpus.jsonl") {
    std::string path = dir.file(name);
    std::ofstream out(path);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> score(1, 9);
    size_t id = 0;
    for (size_t g = 0; g < groups; ++g) {
        std::string task = "task" + std::to_string(g % 2);
        std::string prompt = "Come up with an original idea number " +
                             std::to_string(g) + ".";
        for (size_t r = 0; r < per_group; ++r) {
            int s = score(rng);
            bool disagree = (id % 7 == 3);  // a planted minority disagrees
            json scores = disagree ? json{s, s + 1} : json{s, s};
            json obj = {{"id", "rec" + std::to_string(id)},
                        {"task", task},
                        {"language", "en"},
                        {"prompt", prompt},
                        {"response", "candidate idea " + std::to_string(id) +
                                         " about topic " + std::to_string(rng() % 50)},
                        {"rater_scores", scores}};
            out << obj.dump() << "\n";
            ++id;
        }
    }
    return path;
}

// Every (canonical prompt, response) combination in a corpus file, for stub
// store construction.
inline std::vector<std::pair<std::string, std::string>> corpus_pairs(
    const std::string& corpus_path) {
    std::ifstream in(corpus_path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json obj = json::parse(line);
        out.emplace_back(crpo::canonical_text(obj["prompt"].get<std::string>()),
                         obj["response"].get<std::string>());
    }
    return out;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace fixture
