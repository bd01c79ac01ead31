#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hrisk/errors.hpp"
#include "hrisk/metrics.hpp"
#include "hrisk/prediction_set.hpp"
#include "hrisk/riskmin.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk {

/// Floor applied to probabilities before taking logs, in both the fit and
/// the apply paths.
inline constexpr double kProbabilityFloor = 1e-12;

inline constexpr int kDefaultBins = 15;

enum class ConfidenceSource { MaxLikelihood, CrmSelected };

inline const char* to_string(ConfidenceSource s) {
    return s == ConfidenceSource::MaxLikelihood ? "max-likelihood" : "crm-selected";
}

inline RankingBasis basis_for(ConfidenceSource s) {
    return s == ConfidenceSource::MaxLikelihood ? RankingBasis::LikelihoodDescending : RankingBasis::RiskAscending;
}

/// Equal-width reliability bins over (0, 1]. Bin b covers (b/B, (b+1)/B];
/// a confidence of exactly 0 goes to the first bin.
struct CalibrationBins {
    Eigen::VectorXd edges;          // B + 1 boundaries, 0 .. 1
    Eigen::VectorXi counts;         // per bin
    Eigen::VectorXd mean_confidence;
    Eigen::VectorXd accuracy;
    long n_samples = 0;

    int num_bins() const noexcept { return static_cast<int>(counts.size()); }
};

/// Bin index for a confidence in [0, 1] under B equal-width right-closed bins.
int bin_index(double confidence, int num_bins);

/// Bins raw (confidence, correct) pairs.
CalibrationBins bin_confidences(std::span<const double> confidence, std::span<const bool> correct, int num_bins);

/// Bins the probability each sample assigns to its predicted class. The
/// prediction is the first-ranked class; `ranked` must have been produced
/// under the basis matching `source`.
CalibrationBins bin_confidences(const PredictionSet& preds, std::span<const Ranking> ranked, int num_bins,
                                ConfidenceSource source);

/// Bins p(predicted[i]) for each row, judged against the row's truth.
CalibrationBins bin_predictions(const PredictionSet& preds, std::span<const int> predicted, int num_bins);

/// sum_b (n_b / N) |acc_b - conf_b|.
double ece(const CalibrationBins& bins);

/// max over non-empty bins of |acc_b - conf_b|; 0 when every bin is empty.
double mce(const CalibrationBins& bins);

/// Row-wise softmax(log(max(p, floor)) / T). Rows stay in the same order
/// and each row keeps its likelihood ordering.
template <typename Derived>
Matrix<typename Derived::Scalar> apply_temperature(const Eigen::MatrixBase<Derived>& probs, double temperature) {
    using Scalar = typename Derived::Scalar;
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw InputError("temperature must be positive and finite");
    Matrix<Scalar> out(probs.rows(), probs.cols());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        auto row = out.row(i);
        row = probs.row(i).array().max(Scalar(kProbabilityFloor)).log() / Scalar(temperature);
        row.array() = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
    return out;
}

/// Mean negative log-likelihood of the true class after scaling by T.
double temperature_nll(const PredictionSet& preds, double temperature);

struct TemperatureFit {
    double temperature = 1.0;
    double nll = 0;
    bool degenerate = false;  // every row one-hot; T = 1 returned unfitted
};

inline constexpr double kMinTemperature = 1.0 / 64.0;
inline constexpr double kMaxTemperature = 64.0;
inline constexpr double kLogTemperatureTolerance = 1e-4;

/// Golden-section search for the NLL-minimizing T over log T in
/// [log 1/64, log 64], stopping once the bracket is narrower than 1e-4.
/// The returned T never has higher NLL than T = 1.
TemperatureFit fit_temperature(const PredictionSet& val);

struct CalibrationReport {
    ConfidenceSource confidence_source = ConfidenceSource::MaxLikelihood;
    int bins = kDefaultBins;
    double temperature = 1.0;
    bool temperature_degenerate = false;
    double ece_pre = 0, ece_post = 0;
    double mce_pre = 0, mce_post = 0;

    bool operator==(const CalibrationReport&) const = default;
};

/// Fits T on `val`, then reports ECE/MCE on `test` before and after scaling.
/// With `theorem1_fastpath`, CRM selections skip the risk computation for
/// rows whose top likelihood exceeds 0.5 (identical results).
CalibrationReport calibrate(const PredictionSet& val, const PredictionSet& test, const CostMatrix& cost,
                            int num_bins = kDefaultBins, ConfidenceSource source = ConfidenceSource::MaxLikelihood,
                            bool theorem1_fastpath = false, unsigned threads = 1);

/// Predicted class per row under a confidence source.
std::vector<int> predicted_classes(const PredictionSet& preds, const CostMatrix& cost, ConfidenceSource source,
                                   bool theorem1_fastpath = false, unsigned threads = 1);

/// Reliability bins for `preds` under a confidence source.
CalibrationBins reliability(const PredictionSet& preds, const CostMatrix& cost, int num_bins,
                            ConfidenceSource source, bool theorem1_fastpath = false, unsigned threads = 1);

/// ECE after collapsing the label space to the ancestors at `depth`: each
/// row's probabilities are summed within groups, truth is mapped through the
/// same collapsing, and confidence is the largest group probability. A group
/// covering every class has probability exactly 1.
double hierarchical_ece(const PredictionSet& preds, const Taxonomy& tax, int depth, int num_bins = kDefaultBins);

} // namespace hrisk
