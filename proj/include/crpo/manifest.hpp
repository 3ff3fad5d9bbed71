#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crpo/jsonl.hpp"

namespace crpo {

// Provenance record for one CLI run. The manifest digest covers the command,
// artifact version, resolved config, input digests, and seed — not the
// timestamps — so identically configured runs stamp identical digests into
// their outputs.
struct RunManifest {
    std::string command;
    std::string artifact_version;
    json resolved_config = json::object();
    std::map<std::string, std::string> input_digests;  // path -> sha256
    std::vector<std::string> output_paths;
    uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    json extra = json::object();  // e.g. provider cache counters

    std::string config_digest() const;
    std::string digest() const;
    json to_json() const;
};

// sha256 of a file's bytes; throws if unreadable.
std::string file_sha256(const std::string& path);

// ISO-8601 UTC wall clock; honors SOURCE_DATE_EPOCH for reproducible runs.
std::string now_iso8601();

}  // namespace crpo
