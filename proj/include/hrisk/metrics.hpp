#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hrisk/prediction_set.hpp"
#include "hrisk/riskmin.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk {

using Ranking = RankedOutput<double>;

/// Pairwise (cascade) summation: blocks of at most 8 are summed left to
/// right, larger ranges split at the midpoint. The result depends only on
/// the values and their order.
double pairwise_sum(std::span<const double> values);
double pairwise_mean(std::span<const double> values);

/// Fraction of samples whose first-ranked class differs from the truth.
double top1_error(std::span<const Ranking> ranked, std::span<const int> truth);

/// Per-sample mean LCA height between the truth and the first k classes.
Eigen::VectorXd per_sample_distance_at_k(std::span<const Ranking> ranked, std::span<const int> truth,
                                         const CostMatrix& cost, int k);

/// Average hierarchical distance@k over all samples. A correct class inside
/// the top k contributes 0 to that sample's mean.
double distance_at_k(std::span<const Ranking> ranked, std::span<const int> truth, const CostMatrix& cost, int k);

struct MistakeSeverity {
    std::optional<double> mean;  // empty when there are no mistakes
    long n_mistakes = 0;
};

/// Mean top-1 LCA height over misclassified samples only.
MistakeSeverity severity_over_mistakes(std::span<const Ranking> ranked, std::span<const int> truth,
                                       const CostMatrix& cost);

/// Mean top-1 LCA height over all samples (hierarchical distance@1).
double severity_over_all(std::span<const Ranking> ranked, std::span<const int> truth, const CostMatrix& cost);

/// Mistake counts per severity level 1..max_level (default: largest cost).
std::map<int, long> severity_histogram(std::span<const Ranking> ranked, std::span<const int> truth,
                                       const CostMatrix& cost, std::optional<int> max_level = std::nullopt);

/// Averaged mistake severity before and after a model adds `n` extra
/// mistakes of total severity `d_l` to `m` mistakes of total severity `d_h`.
struct MetricFlaw {
    double before = 0;  // d_h / m
    double after = 0;   // (d_h + d_l) / (m + n)
    bool non_increasing = false;
    bool sufficient_condition = false;  // d_h / m >= d_l / n
};

/// Throws InputError on non-positive arguments and std::logic_error if the
/// sufficient condition holds but the average still increases.
MetricFlaw metric_flaw_check(double d_h, long m, double d_l, long n);

struct MetricsReport {
    RankingBasis basis = RankingBasis::LikelihoodDescending;
    long n_samples = 0;
    double top1_error = 0;
    std::map<int, double> distance_at_k;
    std::optional<double> severity_over_mistakes;
    double severity_over_all = 0;
    long n_mistakes = 0;
    std::map<int, long> histogram;

    bool operator==(const MetricsReport&) const = default;
};

inline const std::vector<int> kDefaultKList{1, 5, 20};

/// All metrics in one pass over already-ranked samples. Histogram levels
/// span 1..tax.height().
MetricsReport full_report(std::span<const Ranking> ranked, std::span<const int> truth, const Taxonomy& tax,
                          const CostMatrix& cost, const std::vector<int>& k_list);

/// Ranks `preds` under `basis` and reports. k values must lie in [1, K].
MetricsReport full_report(const PredictionSet& preds, const Taxonomy& tax, RankingBasis basis,
                          const std::vector<int>& k_list = kDefaultKList, unsigned threads = 1);

} // namespace hrisk
