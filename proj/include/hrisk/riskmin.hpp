#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hrisk/errors.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk {

/// Absolute tolerance on a probability vector's sum. Inside it vectors are
/// renormalized silently, outside it they are rejected.
inline constexpr double kProbabilityTolerance = 1e-6;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// K x K matrix of lowest-common-ancestor heights, C(i, j) = lca_height(i, j).
///
/// Entries are integers; risks are accumulated in floating point. The
/// matrix is symmetric with a zero diagonal.
class CostMatrix {
public:
    static CostMatrix from_taxonomy(const Taxonomy& tax) {
        const int k = tax.num_classes();
        Eigen::MatrixXi c = Eigen::MatrixXi::Zero(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) c(i, j) = c(j, i) = tax.lca_height(i, j);
        return CostMatrix(std::move(c), tax.class_names());
    }

    /// Side door for hand-made matrices. Only symmetry, the zero diagonal
    /// and non-negativity are checked.
    static CostMatrix from_matrix(Eigen::MatrixXi entries, std::vector<std::string> class_names = {}) {
        if (entries.rows() != entries.cols() || entries.rows() < 2)
            throw InputError("cost matrix must be square with K >= 2");
        if (entries != entries.transpose()) throw InputError("cost matrix must be symmetric");
        if (entries.diagonal().any()) throw InputError("cost matrix must have a zero diagonal");
        if ((entries.array() < 0).any()) throw InputError("cost matrix entries must be non-negative");
        if (class_names.empty())
            for (Eigen::Index i = 0; i < entries.rows(); ++i) class_names.push_back(std::to_string(i));
        if (static_cast<Eigen::Index>(class_names.size()) != entries.rows())
            throw InputError("cost matrix class-name count mismatch");
        return CostMatrix(std::move(entries), std::move(class_names));
    }

    int num_classes() const noexcept { return static_cast<int>(entries_.rows()); }
    int operator()(int i, int j) const { return entries_(i, j); }
    const Eigen::MatrixXi& entries() const noexcept { return entries_; }
    const std::vector<std::string>& class_names() const noexcept { return names_; }
    int max_cost() const { return entries_.maxCoeff(); }

    /// Multiplies every entry by a positive integer factor.
    CostMatrix scaled(int factor) const {
        if (factor <= 0) throw InputError("cost scale factor must be positive");
        return CostMatrix(entries_ * factor, names_);
    }

private:
    CostMatrix(Eigen::MatrixXi entries, std::vector<std::string> names)
        : entries_(std::move(entries)), names_(std::move(names)) {}

    Eigen::MatrixXi entries_;
    std::vector<std::string> names_;
};

/// Returns `p` validated as a probability vector: finite, non-negative, sum
/// within kProbabilityTolerance of 1 (then divided by its sum). A sum already
/// within rounding of 1 (K ulps) is left alone so stored vectors reload
/// unchanged.
template <typename Derived>
Vector<typename Derived::Scalar> checked_probabilities(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    if (p.size() == 0) throw InputError("empty probability vector");
    Scalar sum = 0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        const Scalar v = p(j);
        if (!std::isfinite(static_cast<double>(v))) throw InputError("non-finite probability at index " + std::to_string(j));
        if (v < 0) throw InputError("negative probability at index " + std::to_string(j));
        sum += v;
    }
    if (std::abs(static_cast<double>(sum) - 1.0) > kProbabilityTolerance)
        throw InputError("probabilities sum to " + std::to_string(static_cast<double>(sum)) + ", not 1");
    Vector<Scalar> out = p;
    const Scalar rounding = static_cast<Scalar>(p.size()) * std::numeric_limits<Scalar>::epsilon();
    if (std::abs(sum - Scalar(1)) > rounding) out /= sum;
    return out;
}

/// Conditional risk R(k) = sum_j C(k, j) p(j) for every class k.
///
/// Accumulated column by column in ascending j, so each R(k) sees the same
/// summation order on every build.
template <typename Derived>
Vector<typename Derived::Scalar> conditional_risk(const Eigen::MatrixBase<Derived>& p, const CostMatrix& cost) {
    using Scalar = typename Derived::Scalar;
    if (p.size() != cost.num_classes())
        throw InputError("probability vector has " + std::to_string(p.size()) + " entries, cost matrix is " +
                         std::to_string(cost.num_classes()) + "x" + std::to_string(cost.num_classes()));
    const Vector<Scalar> q = checked_probabilities(p);
    Vector<Scalar> risk = Vector<Scalar>::Zero(q.size());
    for (Eigen::Index j = 0; j < q.size(); ++j)
        risk.noalias() += cost.entries().col(j).template cast<Scalar>() * q(j);
    return risk;
}

/// First index holding the maximum.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return static_cast<int>(best);
}

/// First index holding the minimum.
template <typename Derived>
int argmin(const Eigen::MatrixBase<Derived>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) < v(best)) best = i;
    return static_cast<int>(best);
}

/// Class with minimal conditional risk, ties to the lowest index.
///
/// With `theorem1_fastpath` set, a vector whose largest entry exceeds 0.5 is
/// answered by its argmax without computing risks: in that regime the
/// argmax has strictly the lowest risk under any tree-derived cost matrix.
template <typename Derived>
int crm_predict(const Eigen::MatrixBase<Derived>& p, const CostMatrix& cost, bool theorem1_fastpath = false) {
    if (theorem1_fastpath) {
        const auto q = checked_probabilities(p);
        if (q.size() != cost.num_classes()) throw InputError("probability vector / cost matrix size mismatch");
        const int top = argmax(q);
        if (q(top) > 0.5) return top;
    }
    return argmin(conditional_risk(p, cost));
}

enum class RankingBasis { LikelihoodDescending, RiskAscending };

inline const char* to_string(RankingBasis b) {
    return b == RankingBasis::LikelihoodDescending ? "likelihood" : "crm";
}

/// A full ordering of the K classes, best first, with the scores that
/// induced it (likelihoods or risks, in class-index order).
template <typename Scalar = double>
struct RankedOutput {
    std::vector<int> order;
    Vector<Scalar> scores;
    RankingBasis basis = RankingBasis::LikelihoodDescending;

    int top() const { return order.front(); }
};

namespace detail {

template <typename Scalar, typename Less>
std::vector<int> stable_order(const Vector<Scalar>& scores, Less less) {
    std::vector<int> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return less(scores(a), scores(b)); });
    return order;
}

} // namespace detail

/// Classes by descending likelihood, ties by ascending class index.
template <typename Derived>
RankedOutput<typename Derived::Scalar> likelihood_rank(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    RankedOutput<Scalar> out;
    out.scores = checked_probabilities(p);
    out.order = detail::stable_order(out.scores, [](Scalar a, Scalar b) { return a > b; });
    out.basis = RankingBasis::LikelihoodDescending;
    return out;
}

/// Classes by ascending conditional risk, ties by ascending class index.
/// Always computes the full risk vector.
template <typename Derived>
RankedOutput<typename Derived::Scalar> crm_rerank(const Eigen::MatrixBase<Derived>& p, const CostMatrix& cost) {
    using Scalar = typename Derived::Scalar;
    RankedOutput<Scalar> out;
    out.scores = conditional_risk(p, cost);
    out.order = detail::stable_order(out.scores, [](Scalar a, Scalar b) { return a < b; });
    out.basis = RankingBasis::RiskAscending;
    return out;
}

template <typename Derived>
RankedOutput<typename Derived::Scalar> rank(const Eigen::MatrixBase<Derived>& p, const CostMatrix& cost,
                                            RankingBasis basis) {
    return basis == RankingBasis::RiskAscending ? crm_rerank(p, cost) : likelihood_rank(p);
}

} // namespace hrisk
