#include "crpo/digest.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

#include "crpo/text.hpp"

namespace crpo {

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &md_len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(md_len * 2);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string text_digest(std::string_view text) {
    return sha256_hex(canonical_text(text));
}

std::string pair_digest(std::string_view prompt, std::string_view response) {
    std::string joined = canonical_text(prompt);
    joined.push_back('\x1f');
    joined += canonical_text(response);
    return sha256_hex(joined);
}

uint64_t derive_seed(uint64_t root_seed, std::string_view label) {
    std::string payload = std::to_string(root_seed);
    payload.push_back(':');
    payload += label;
    std::string hx = sha256_hex(payload);
    uint64_t v = 0;
    for (int i = 0; i < 16; ++i) {
        char c = hx[i];
        v = (v << 4) | static_cast<uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return v;
}

}  // namespace crpo
