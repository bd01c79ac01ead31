#include "hrisk/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "hrisk/batch.hpp"

namespace hrisk {

int bin_index(double confidence, int num_bins) {
    if (!(confidence >= 0.0 && confidence <= 1.0))
        throw InputError("confidence " + std::to_string(confidence) + " outside [0, 1]");
    if (confidence == 0.0) return 0;
    int b = static_cast<int>(std::ceil(confidence * num_bins)) - 1;
    b = std::clamp(b, 0, num_bins - 1);
    // Correct for rounding in confidence * B against the edges b / B.
    const double n = num_bins;
    if (b > 0 && confidence <= b / n) --b;
    else if (b + 1 < num_bins && confidence > (b + 1) / n) ++b;
    return b;
}

CalibrationBins bin_confidences(std::span<const double> confidence, std::span<const bool> correct, int num_bins) {
    if (num_bins < 1) throw InputError("bin count must be at least 1");
    if (confidence.size() != correct.size()) throw InputError("confidence / correctness length mismatch");
    CalibrationBins bins;
    bins.edges.resize(num_bins + 1);
    for (int b = 0; b <= num_bins; ++b) bins.edges(b) = static_cast<double>(b) / num_bins;
    bins.counts = Eigen::VectorXi::Zero(num_bins);
    bins.mean_confidence = Eigen::VectorXd::Zero(num_bins);
    bins.accuracy = Eigen::VectorXd::Zero(num_bins);
    bins.n_samples = static_cast<long>(confidence.size());

    std::vector<std::vector<double>> conf(num_bins), hit(num_bins);
    for (std::size_t i = 0; i < confidence.size(); ++i) {
        const int b = bin_index(confidence[i], num_bins);
        conf[b].push_back(confidence[i]);
        hit[b].push_back(correct[i] ? 1.0 : 0.0);
    }
    for (int b = 0; b < num_bins; ++b) {
        bins.counts(b) = static_cast<int>(conf[b].size());
        bins.mean_confidence(b) = pairwise_mean(conf[b]);
        bins.accuracy(b) = pairwise_mean(hit[b]);
    }
    return bins;
}

CalibrationBins bin_predictions(const PredictionSet& preds, std::span<const int> predicted, int num_bins) {
    if (static_cast<Eigen::Index>(predicted.size()) != preds.num_samples())
        throw InputError("prediction count does not match prediction rows");
    std::vector<double> conf(predicted.size());
    std::unique_ptr<bool[]> hit(new bool[predicted.size()]);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const int top = predicted[i];
        if (top < 0 || top >= preds.num_classes()) throw InputError("predicted class out of range");
        conf[i] = std::clamp(preds.probs(static_cast<Eigen::Index>(i), top), 0.0, 1.0);
        hit[i] = top == preds.truth[i];
    }
    return bin_confidences(conf, std::span<const bool>(hit.get(), predicted.size()), num_bins);
}

CalibrationBins bin_confidences(const PredictionSet& preds, std::span<const Ranking> ranked, int num_bins,
                                ConfidenceSource source) {
    std::vector<int> predicted(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].basis != basis_for(source))
            throw InputError(std::string("rankings do not match confidence source ") + to_string(source));
        predicted[i] = ranked[i].top();
    }
    return bin_predictions(preds, predicted, num_bins);
}

double ece(const CalibrationBins& bins) {
    if (bins.n_samples == 0) return 0.0;
    std::vector<double> terms(static_cast<std::size_t>(bins.num_bins()));
    for (int b = 0; b < bins.num_bins(); ++b)
        terms[b] = static_cast<double>(bins.counts(b)) / static_cast<double>(bins.n_samples) *
                   std::abs(bins.accuracy(b) - bins.mean_confidence(b));
    return pairwise_sum(terms);
}

double mce(const CalibrationBins& bins) {
    double worst = 0.0;
    for (int b = 0; b < bins.num_bins(); ++b)
        if (bins.counts(b) > 0) worst = std::max(worst, std::abs(bins.accuracy(b) - bins.mean_confidence(b)));
    return worst;
}

double temperature_nll(const PredictionSet& preds, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw InputError("temperature must be positive and finite");
    std::vector<double> terms(static_cast<std::size_t>(preds.num_samples()));
    for (Eigen::Index i = 0; i < preds.num_samples(); ++i) {
        const Eigen::ArrayXd z = preds.probs.row(i).array().max(kProbabilityFloor).log().transpose() / temperature;
        const double m = z.maxCoeff();
        const double lse = m + std::log((z - m).exp().sum());
        terms[static_cast<std::size_t>(i)] = lse - z(preds.truth[static_cast<std::size_t>(i)]);
    }
    return pairwise_mean(terms);
}

namespace {

bool all_one_hot(const PredictionSet& preds) {
    for (Eigen::Index i = 0; i < preds.num_samples(); ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < preds.probs.cols(); ++j) {
            const double v = preds.probs(i, j);
            if (v == 1.0) ++ones;
            else if (v != 0.0) return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

} // namespace

TemperatureFit fit_temperature(const PredictionSet& val) {
    if (val.num_samples() == 0) throw InputError("cannot fit a temperature on an empty validation set");
    TemperatureFit fit;
    if (all_one_hot(val)) {
        fit.degenerate = true;
        fit.nll = temperature_nll(val, 1.0);
        return fit;
    }

    auto nll = [&](double log_t) { return temperature_nll(val, std::exp(log_t)); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::log(kMinTemperature), hi = std::log(kMaxTemperature);
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = nll(x1), f2 = nll(x2);
    while (hi - lo > kLogTemperatureTolerance) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = nll(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = nll(x2);
        }
    }
    const double best = 0.5 * (lo + hi);
    fit.temperature = std::exp(best);
    fit.nll = nll(best);
    const double at_one = temperature_nll(val, 1.0);
    if (at_one < fit.nll) {
        fit.temperature = 1.0;
        fit.nll = at_one;
    }
    return fit;
}

std::vector<int> predicted_classes(const PredictionSet& preds, const CostMatrix& cost, ConfidenceSource source,
                                   bool theorem1_fastpath, unsigned threads) {
    if (source == ConfidenceSource::CrmSelected) return batch_predict(preds, cost, theorem1_fastpath, threads);
    require_same_classes(preds.class_names, cost.class_names());
    std::vector<int> out(static_cast<std::size_t>(preds.num_samples()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = argmax(preds.probs.row(static_cast<Eigen::Index>(i)));
    return out;
}

CalibrationBins reliability(const PredictionSet& preds, const CostMatrix& cost, int num_bins,
                            ConfidenceSource source, bool theorem1_fastpath, unsigned threads) {
    return bin_predictions(preds, predicted_classes(preds, cost, source, theorem1_fastpath, threads), num_bins);
}

CalibrationReport calibrate(const PredictionSet& val, const PredictionSet& test, const CostMatrix& cost,
                            int num_bins, ConfidenceSource source, bool theorem1_fastpath, unsigned threads) {
    if (test.num_samples() == 0) throw InputError("test prediction set is empty");
    require_same_classes(val.class_names, test.class_names);
    const TemperatureFit fit = fit_temperature(val);

    CalibrationReport r;
    r.confidence_source = source;
    r.bins = num_bins;
    r.temperature = fit.temperature;
    r.temperature_degenerate = fit.degenerate;

    const CalibrationBins pre = reliability(test, cost, num_bins, source, theorem1_fastpath, threads);
    PredictionSet scaled = test;
    scaled.probs = apply_temperature(test.probs, fit.temperature);
    const CalibrationBins post = reliability(scaled, cost, num_bins, source, theorem1_fastpath, threads);
    r.ece_pre = ece(pre);
    r.mce_pre = mce(pre);
    r.ece_post = ece(post);
    r.mce_post = mce(post);
    return r;
}

double hierarchical_ece(const PredictionSet& preds, const Taxonomy& tax, int depth, int num_bins) {
    require_same_classes(preds.class_names, tax.class_names());
    const Collapsing col = collapse_to_depth(tax, depth);
    const int groups = col.num_groups();
    const auto n = static_cast<std::size_t>(preds.num_samples());

    std::vector<double> conf(n);
    std::unique_ptr<bool[]> correct(new bool[n]);
    Eigen::VectorXd mass(groups);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        mass.setZero();
        for (int c = 0; c < preds.num_classes(); ++c) mass(col.group[static_cast<std::size_t>(c)]) += preds.probs(row, c);
        if (groups == 1) mass(0) = 1.0;
        const int top = argmax(mass);
        conf[i] = std::clamp(mass(top), 0.0, 1.0);
        correct[i] = top == col.group[static_cast<std::size_t>(preds.truth[i])];
    }
    return ece(bin_confidences(conf, std::span<const bool>(correct.get(), n), num_bins));
}

} // namespace hrisk
