#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "hrisk/prediction_set.hpp"
#include "hrisk/random.hpp"
#include "hrisk/riskmin.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk::synth {

enum class TruthMode { SelfSampled, Argmax, Corrupted };
enum class TreeMode { Flat, BalancedBinary, RandomAttachment };

struct SynthConfig {
    std::uint64_t seed = 0;
    int num_classes = 4;
    long num_samples = 0;
    double concentration = 1.0;
    TruthMode truth_mode = TruthMode::SelfSampled;
    double corruption = 0.0;  // used by TruthMode::Corrupted
    TreeMode tree_mode = TreeMode::BalancedBinary;

    /// Throws InputError on K < 2, N < 0, non-positive concentration or a
    /// corruption rate outside [0, 1].
    void validate() const;
};

/// Zero-padded leaf name for class c ("c000", "c001", ...), so the sorted
/// class order matches generation order.
std::string leaf_name(int c, int num_classes);

/// Deterministic tree from the config (seeded by cfg.seed).
///
/// RandomAttachment starts from a root with two leaves and adds leaves one
/// at a time: a uniformly random existing node is drawn; if it is internal
/// the new leaf hangs under it, if it is a leaf the edge above that leaf is
/// split by a new internal node that receives both leaves.
Taxonomy gen_taxonomy(const SynthConfig& cfg);

/// N rows of Dirichlet(concentration * 1) likelihoods plus ground truth.
///
/// Stream order per row, all from one std::mt19937_64 seeded with
/// cfg.seed ^ 0x9e3779b97f4a7c15: K Gamma draws (class order), then one
/// uniform u for inverse-CDF truth sampling (self-sampled and corrupted),
/// then for corrupted one uniform coin and, if coin < rho, one
/// uniform_below(K) replacement label.
PredictionSet gen_predictions(const SynthConfig& cfg, const Taxonomy& tax);

/// One Dirichlet(alpha * 1) vector of length k.
Eigen::VectorXd dirichlet(Engine& rng, int k, double alpha);

/// Index j with cdf(j-1) <= u < cdf(j), scanning classes in order.
int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, double u);

/// Conditional risk by a plain double loop, written independently of the
/// riskmin path for cross-checking.
Eigen::VectorXd oracle_risk(const Eigen::Ref<const Eigen::VectorXd>& p, const CostMatrix& cost);

/// LCA height by enumerating both leaves' root paths, intersecting them, and
/// measuring the deepest shared node's height by walking its subtree.
int oracle_lca(const Taxonomy& tax, ClassIndex i, ClassIndex j);

} // namespace hrisk::synth
