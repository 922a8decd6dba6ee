#pragma once

#include <cstdint>

// Registry of the `a` tag passed to RngStream::derive(seed, a, b, c) so no
// two consumers ever share a stream for the same (seed, b, c).
namespace survdr::detail {

inline constexpr std::uint64_t kStreamData = 1;       // simulation replicate data
inline constexpr std::uint64_t kStreamTruth = 2;      // truth-oracle chunks
inline constexpr std::uint64_t kStreamBootstrap = 3;  // standalone bootstrap draws
inline constexpr std::uint64_t kStreamSimBoot = 4;    // per-replicate bootstrap draws

}  // namespace survdr::detail
