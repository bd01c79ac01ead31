#pragma once

// Shared fixtures and random generators for the test suites.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hrisk/random.hpp"
#include "hrisk/riskmin.hpp"
#include "hrisk/synth.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk::testing {

// x, y under p; z, w under q; class order [w, x, y, z].
inline constexpr const char* kFourLeafText = "x\tp\ny\tp\nz\tq\nw\tq\np\tr\nq\tr\n";

// The synthetic balanced tree: classes 0,1 share a parent, as do 2,3.
inline Taxonomy balanced4() {
    synth::SynthConfig cfg;
    cfg.num_classes = 4;
    cfg.tree_mode = synth::TreeMode::BalancedBinary;
    return synth::gen_taxonomy(cfg);
}

inline Taxonomy flat(int k) {
    synth::SynthConfig cfg;
    cfg.num_classes = k;
    cfg.tree_mode = synth::TreeMode::Flat;
    return synth::gen_taxonomy(cfg);
}

inline Taxonomy random_tree(Engine& rng, int max_k, synth::TreeMode mode) {
    synth::SynthConfig cfg;
    cfg.seed = rng();
    cfg.tree_mode = mode;
    if (mode == synth::TreeMode::BalancedBinary) {
        int levels = 1 + static_cast<int>(uniform_below(rng, 6));  // K = 2 .. 64
        while ((1 << levels) > max_k) --levels;
        cfg.num_classes = 1 << levels;
    } else {
        cfg.num_classes = 2 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_k - 1)));
    }
    return synth::gen_taxonomy(cfg);
}

inline Taxonomy random_tree(Engine& rng, int max_k) {
    const auto mode = static_cast<synth::TreeMode>(uniform_below(rng, 3));
    return random_tree(rng, max_k, mode);
}

/// Dirichlet vector with a random concentration in [0.05, 5).
inline Eigen::VectorXd random_probs(Engine& rng, int k) {
    const double alpha = 0.05 + 4.95 * uniform01(rng);
    return synth::dirichlet(rng, k, alpha);
}

/// Probability vector whose largest entry exceeds 0.5: a random class gets
/// mass in (0.5, 1], the rest is spread by a Dirichlet draw.
inline Eigen::VectorXd confident_probs(Engine& rng, int k) {
    const int top = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(k)));
    double mass = 0.5 + 0.5 * uniform01(rng);
    if (mass <= 0.5 + 1e-9) mass = 0.75;
    const Eigen::VectorXd rest = synth::dirichlet(rng, k - 1, 0.05 + 2.0 * uniform01(rng));
    Eigen::VectorXd p(k);
    for (int j = 0, r = 0; j < k; ++j) p(j) = j == top ? mass : (1.0 - mass) * rest(r++);
    return p;
}

/// Probability vector with entries on a dyadic grid (multiples of 1/32), so
/// exact risk ties are common and every risk sum is computed exactly.
inline Eigen::VectorXd grid_probs(Engine& rng, int k) {
    std::vector<int> units(static_cast<std::size_t>(k), 0);
    for (int u = 0; u < 32; ++u) ++units[uniform_below(rng, static_cast<std::uint64_t>(k))];
    Eigen::VectorXd p(k);
    for (int j = 0; j < k; ++j) p(j) = units[static_cast<std::size_t>(j)] / 32.0;
    return p;
}

/// Permutation matrix P with P(i, perm[i]) = 1.
inline Eigen::MatrixXi permutation_matrix(const std::vector<int>& perm) {
    const auto k = static_cast<Eigen::Index>(perm.size());
    Eigen::MatrixXi p = Eigen::MatrixXi::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1;
    return p;
}

/// Minimizer of f over log T in [log lo, log hi]: a 1024-point grid, then a
/// second 1024-point grid spanning one coarse step either side of the best
/// coarse point. Returns T.
inline double log_grid_minimizer(const std::function<double(double)>& f, double lo, double hi) {
    constexpr int kPoints = 1024;
    auto search = [&](double a, double b) {
        double best_x = a, best_f = f(std::exp(a));
        for (int i = 1; i < kPoints; ++i) {
            const double x = a + (b - a) * i / (kPoints - 1);
            const double v = f(std::exp(x));
            if (v < best_f) best_f = v, best_x = x;
        }
        return best_x;
    };
    const double a = std::log(lo), b = std::log(hi);
    const double step = (b - a) / (kPoints - 1);
    const double coarse = search(a, b);
    return std::exp(search(std::max(a, coarse - step), std::min(b, coarse + step)));
}

} // namespace hrisk::testing
