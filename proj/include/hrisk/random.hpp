#pragma once

#include <cstdint>
#include <random>

namespace hrisk {

// All randomness in the toolkit goes through std::mt19937_64, whose output
// sequence is fixed by the C++ standard. The std:: distributions are not
// (their algorithms are implementation-defined), so the samplers below pin
// the transformation from raw 64-bit words to variates.
using Engine = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one engine word.
double uniform01(Engine& rng);

/// Uniform integer in [0, bound) by rejection: draw x until
/// x < 2^64 - (2^64 mod bound), return x mod bound. bound must be > 0.
std::uint64_t uniform_below(Engine& rng, std::uint64_t bound);

/// Standard normal via the Marsaglia polar method. Each call consumes
/// pairs of uniforms until a point lands in the unit disc and returns the
/// first coordinate's variate; the second is discarded so the stream has
/// no hidden state.
double standard_normal(Engine& rng);

/// Gamma(shape, 1) via Marsaglia-Tsang. For shape < 1 a Gamma(shape + 1)
/// draw is taken first, then one extra uniform u scales it by u^(1/shape).
double gamma_variate(Engine& rng, double shape);

} // namespace hrisk
