#include "crpo/manifest.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "crpo/digest.hpp"

namespace crpo {

std::string RunManifest::config_digest() const {
    return sha256_hex(resolved_config.dump());
}

std::string RunManifest::digest() const {
    json core = {{"command", command},
                 {"artifact_version", artifact_version},
                 {"config_digest", config_digest()},
                 {"input_digests", input_digests},
                 {"seed", seed}};
    return sha256_hex(core.dump());
}

json RunManifest::to_json() const {
    return {{"command", command},
            {"artifact_version", artifact_version},
            {"manifest_digest", digest()},
            {"config_digest", config_digest()},
            {"resolved_config", resolved_config},
            {"input_digests", input_digests},
            {"output_paths", output_paths},
            {"seed", seed},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"extra", extra}};
}

std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

std::string now_iso8601() {
    std::time_t t;
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
    else
        t = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace crpo
