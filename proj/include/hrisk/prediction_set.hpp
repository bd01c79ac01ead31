#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hrisk {

/// N x K likelihoods with ground-truth class indices and the column names.
struct PredictionSet {
    Eigen::MatrixXd probs;
    std::vector<int> truth;
    std::vector<std::string> class_names;

    Eigen::Index num_samples() const noexcept { return probs.rows(); }
    int num_classes() const noexcept { return static_cast<int>(probs.cols()); }

    /// Checks dimensions, unique names, truth range and row stochasticity
    /// (renormalizing rows within tolerance). Throws InputError naming the
    /// first offending row.
    void validate();
};

/// Throws InputError unless `names` equals the cost matrix / taxonomy order.
void require_same_classes(const std::vector<std::string>& got, const std::vector<std::string>& expected);

} // namespace hrisk
