#pragma once

#include <string>
#include <string_view>

namespace crpo {

// Hex-encoded SHA-256 of the raw bytes.
std::string sha256_hex(std::string_view data);

// Digest of a single canonicalized (trimmed) text. Used as the lookup key
// in file-backed embedding stores.
std::string text_digest(std::string_view text);

// Digest of a (prompt, response) pair, both canonicalized, joined with a
// 0x1f unit separator. Used by likelihood and reward file stores.
std::string pair_digest(std::string_view prompt, std::string_view response);

// Stable 64-bit sub-seed derived from a root seed and a module label.
uint64_t derive_seed(uint64_t root_seed, std::string_view label);

}  // namespace crpo
