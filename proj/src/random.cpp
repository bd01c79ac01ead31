#include "hrisk/random.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hrisk {

double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    // 2^64 mod bound, computed without 128-bit arithmetic.
    const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;  // inclusive
    std::uint64_t x = rng();
    while (x > limit) x = rng();
    return x % bound;
}

double standard_normal(Engine& rng) {
    for (;;) {
        const double u = 2.0 * uniform01(rng) - 1.0;
        const double v = 2.0 * uniform01(rng) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

double gamma_variate(Engine& rng, double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape))
        throw std::invalid_argument("gamma_variate: shape must be positive and finite");
    if (shape < 1.0) {
        const double g = gamma_variate(rng, shape + 1.0);
        double u = uniform01(rng);
        while (u == 0.0) u = uniform01(rng);
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01(rng);
        if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace hrisk
