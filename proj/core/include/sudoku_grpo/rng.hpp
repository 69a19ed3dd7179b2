#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sgrpo {

using Rng = std::mt19937_64;

// Mixes a parent seed with a named sub-stream label and optional indices so
// independent components (data, init, rollout, ...) never share a stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream,
                    std::uint64_t a = 0, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
  return Rng(derive_seed(seed, stream, a, b, c));
}

// Uniform double in [0, 1) using the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection; n > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

}  // namespace sgrpo
