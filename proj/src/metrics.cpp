#include "hrisk/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "hrisk/batch.hpp"
#include "hrisk/errors.hpp"

namespace hrisk {

void PredictionSet::validate() {
    const auto k = static_cast<std::size_t>(probs.cols());
    if (class_names.size() != k)
        throw InputError("prediction set declares " + std::to_string(class_names.size()) + " classes but has " +
                         std::to_string(k) + " columns");
    if (static_cast<Eigen::Index>(truth.size()) != probs.rows())
        throw InputError("prediction set has " + std::to_string(probs.rows()) + " rows but " +
                         std::to_string(truth.size()) + " labels");
    std::unordered_set<std::string> seen;
    for (const auto& n : class_names)
        if (!seen.insert(n).second) throw InputError("duplicate class name '" + n + "'");
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int t = truth[static_cast<std::size_t>(i)];
        if (t < 0 || t >= static_cast<int>(k))
            throw InputError("row " + std::to_string(i) + ": truth index " + std::to_string(t) + " out of range");
        try {
            probs.row(i) = checked_probabilities(probs.row(i).transpose()).transpose();
        } catch (const InputError& e) {
            throw InputError("row " + std::to_string(i) + ": " + e.what());
        }
    }
}

void require_same_classes(const std::vector<std::string>& got, const std::vector<std::string>& expected) {
    if (got == expected) return;
    if (got.size() != expected.size())
        throw InputError("class count mismatch: " + std::to_string(got.size()) + " vs " +
                         std::to_string(expected.size()));
    for (std::size_t i = 0; i < got.size(); ++i)
        if (got[i] != expected[i])
            throw InputError("class order mismatch at column " + std::to_string(i) + ": '" + got[i] + "' vs '" +
                             expected[i] + "'");
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double pairwise_mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

namespace {

void check_lengths(std::span<const Ranking> ranked, std::span<const int> truth) {
    if (ranked.size() != truth.size())
        throw InputError("ranking count " + std::to_string(ranked.size()) + " does not match label count " +
                         std::to_string(truth.size()));
}

void check_k(int k, int num_classes) {
    if (k < 1 || k > num_classes)
        throw InputError("k = " + std::to_string(k) + " outside [1, " + std::to_string(num_classes) + "]");
}

double sample_distance(const Ranking& r, int truth, const CostMatrix& cost, int k) {
    if (static_cast<int>(r.order.size()) != cost.num_classes())
        throw InputError("ranking length does not match class count");
    double s = 0;
    for (int i = 0; i < k; ++i) s += cost(r.order[static_cast<std::size_t>(i)], truth);
    return s / k;
}

std::vector<double> top1_severities(std::span<const Ranking> ranked, std::span<const int> truth,
                                    const CostMatrix& cost) {
    check_lengths(ranked, truth);
    std::vector<double> sev(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) sev[i] = cost(ranked[i].top(), truth[i]);
    return sev;
}

} // namespace

double top1_error(std::span<const Ranking> ranked, std::span<const int> truth) {
    check_lengths(ranked, truth);
    if (ranked.empty()) return 0.0;
    long wrong = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) wrong += ranked[i].top() != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(ranked.size());
}

Eigen::VectorXd per_sample_distance_at_k(std::span<const Ranking> ranked, std::span<const int> truth,
                                         const CostMatrix& cost, int k) {
    check_lengths(ranked, truth);
    check_k(k, cost.num_classes());
    Eigen::VectorXd d(static_cast<Eigen::Index>(ranked.size()));
    for (std::size_t i = 0; i < ranked.size(); ++i)
        d(static_cast<Eigen::Index>(i)) = sample_distance(ranked[i], truth[i], cost, k);
    return d;
}

double distance_at_k(std::span<const Ranking> ranked, std::span<const int> truth, const CostMatrix& cost, int k) {
    const Eigen::VectorXd d = per_sample_distance_at_k(ranked, truth, cost, k);
    return pairwise_mean({d.data(), static_cast<std::size_t>(d.size())});
}

MistakeSeverity severity_over_mistakes(std::span<const Ranking> ranked, std::span<const int> truth,
                                       const CostMatrix& cost) {
    const auto sev = top1_severities(ranked, truth, cost);
    std::vector<double> mistakes;
    for (std::size_t i = 0; i < sev.size(); ++i)
        if (ranked[i].top() != truth[i]) mistakes.push_back(sev[i]);
    MistakeSeverity out;
    out.n_mistakes = static_cast<long>(mistakes.size());
    if (!mistakes.empty()) out.mean = pairwise_mean(mistakes);
    return out;
}

double severity_over_all(std::span<const Ranking> ranked, std::span<const int> truth, const CostMatrix& cost) {
    return pairwise_mean(top1_severities(ranked, truth, cost));
}

std::map<int, long> severity_histogram(std::span<const Ranking> ranked, std::span<const int> truth,
                                       const CostMatrix& cost, std::optional<int> max_level) {
    check_lengths(ranked, truth);
    std::map<int, long> hist;
    const int top = max_level.value_or(cost.max_cost());
    for (int level = 1; level <= top; ++level) hist[level] = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].top() != truth[i]) ++hist[cost(ranked[i].top(), truth[i])];
    }
    return hist;
}

MetricFlaw metric_flaw_check(double d_h, long m, double d_l, long n) {
    if (m <= 0 || n <= 0) throw InputError("metric_flaw_check: mistake counts must be positive");
    if (!(d_h > 0) || !(d_l > 0)) throw InputError("metric_flaw_check: severity totals must be positive");
    MetricFlaw f;
    f.before = d_h / static_cast<double>(m);
    f.after = (d_h + d_l) / static_cast<double>(m + n);
    f.non_increasing = f.after <= f.before;
    f.sufficient_condition = f.before >= d_l / static_cast<double>(n);
    if (f.sufficient_condition && !f.non_increasing)
        throw std::logic_error("metric_flaw_check: averaged severity increased although d_h/m >= d_l/n");
    return f;
}

MetricsReport full_report(std::span<const Ranking> ranked, std::span<const int> truth, const Taxonomy& tax,
                          const CostMatrix& cost, const std::vector<int>& k_list) {
    check_lengths(ranked, truth);
    for (int k : k_list) check_k(k, cost.num_classes());

    const std::size_t n = ranked.size();
    MetricsReport r;
    r.basis = n > 0 ? ranked.front().basis : RankingBasis::LikelihoodDescending;
    r.n_samples = static_cast<long>(n);
    for (int level = 1; level <= tax.height(); ++level) r.histogram[level] = 0;

    std::vector<double> top1(n);
    std::vector<double> mistakes;
    std::map<int, std::vector<double>> per_k;
    for (int k : k_list) per_k[k].resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const Ranking& rk = ranked[i];
        if (static_cast<int>(rk.order.size()) != cost.num_classes())
            throw InputError("ranking length does not match class count");
        const int s = cost(rk.top(), truth[i]);
        top1[i] = s;
        if (rk.top() != truth[i]) {
            mistakes.push_back(s);
            ++r.histogram[s];
        }
        for (auto& [k, values] : per_k) values[i] = sample_distance(rk, truth[i], cost, k);
    }

    r.n_mistakes = static_cast<long>(mistakes.size());
    r.top1_error = n > 0 ? static_cast<double>(r.n_mistakes) / static_cast<double>(n) : 0.0;
    r.severity_over_all = pairwise_mean(top1);
    if (!mistakes.empty()) r.severity_over_mistakes = pairwise_mean(mistakes);
    for (const auto& [k, values] : per_k) r.distance_at_k[k] = pairwise_mean(values);
    return r;
}

MetricsReport full_report(const PredictionSet& preds, const Taxonomy& tax, RankingBasis basis,
                          const std::vector<int>& k_list, unsigned threads) {
    const CostMatrix cost = CostMatrix::from_taxonomy(tax);
    const auto ranked = batch_apply(preds, cost, basis, threads);
    MetricsReport r = full_report(ranked, preds.truth, tax, cost, k_list);
    r.basis = basis;
    return r;
}

} // namespace hrisk
