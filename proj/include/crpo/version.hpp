#pragma once

namespace crpo {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace crpo
