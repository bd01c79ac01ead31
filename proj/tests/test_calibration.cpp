#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hrisk/batch.hpp"
#include "hrisk/calibration.hpp"
#include "hrisk/errors.hpp"
#include "hrisk/synth.hpp"
#include "support.hpp"

using namespace hrisk;
namespace ht = hrisk::testing;

namespace {

CalibrationBins bins_of(std::vector<double> conf, std::vector<char> hit, int b) {
    std::unique_ptr<bool[]> h(new bool[hit.size()]);
    for (std::size_t i = 0; i < hit.size(); ++i) h[i] = hit[i] != 0;
    return bin_confidences(conf, std::span<const bool>(h.get(), hit.size()), b);
}

PredictionSet make_set(const Taxonomy& tax, Eigen::MatrixXd probs, std::vector<int> truth) {
    PredictionSet p;
    p.class_names = tax.class_names();
    p.probs = std::move(probs);
    p.truth = std::move(truth);
    return p;
}

// Independent ECE: per-bin sums with plain loops and explicit edge tests.
double oracle_ece(const std::vector<double>& conf, const std::vector<char>& hit, int b) {
    std::vector<double> sc(b, 0.0), sa(b, 0.0);
    std::vector<long> n(b, 0);
    for (std::size_t i = 0; i < conf.size(); ++i) {
        int k = 0;
        while (k + 1 < b && conf[i] > static_cast<double>(k + 1) / b) ++k;
        sc[k] += conf[i];
        sa[k] += hit[i];
        ++n[k];
    }
    double e = 0;
    for (int k = 0; k < b; ++k)
        if (n[k]) e += std::abs(sa[k] - sc[k]) / static_cast<double>(conf.size());
    return e;
}

} // namespace

TEST_CASE("bin_index") {
    CHECK(bin_index(0.0, 15) == 0);
    CHECK(bin_index(1.0, 15) == 14);
    CHECK(bin_index(0.5, 2) == 0);
    CHECK(bin_index(0.5000001, 2) == 1);
    for (int b = 1; b < 15; ++b) {
        const double edge = static_cast<double>(b) / 15;
        CHECK(bin_index(edge, 15) == b - 1);
        CHECK(bin_index(std::nextafter(edge, 2.0), 15) == b);
    }
    CHECK_THROWS_AS(bin_index(-0.1, 15), InputError);
    CHECK_THROWS_AS(bin_index(1.1, 15), InputError);
    CHECK_THROWS_AS(bin_index(std::nan(""), 15), InputError);
}

TEST_CASE("binning and ECE examples") {
    SUBCASE("two bins") {
        const auto b = bins_of({0.2, 0.4, 0.6, 0.8}, {0, 1, 1, 1}, 2);
        CHECK(b.counts == Eigen::Vector2i(2, 2));
        CHECK(b.mean_confidence(0) == doctest::Approx(0.3));
        CHECK(b.mean_confidence(1) == doctest::Approx(0.7));
        CHECK(b.accuracy(0) == 0.5);
        CHECK(b.accuracy(1) == 1.0);
        CHECK(b.edges == Eigen::Vector3d(0, 0.5, 1));
        // gaps 0.2 and 0.3, equal weight
        CHECK(ece(b) == doctest::Approx(0.25));
        CHECK(mce(b) == doctest::Approx(0.3));
    }
    SUBCASE("gaps of 0.1 and 0.3") {
        // bin 0: conf 0.4, acc 0.5; bin 1: conf 0.7, acc 1.0
        const auto b = bins_of({0.4, 0.4, 0.7, 0.7}, {1, 0, 1, 1}, 2);
        CHECK(ece(b) == doctest::Approx(0.2));
        CHECK(mce(b) == doctest::Approx(0.3));
    }
    SUBCASE("perfect calibration") {
        const auto b = bins_of({1.0, 1.0, 1.0}, {1, 1, 1}, 15);
        CHECK(ece(b) == 0.0);
        CHECK(mce(b) == 0.0);
    }
    SUBCASE("empty input") {
        const auto b = bins_of({}, {}, 15);
        CHECK(b.counts.sum() == 0);
        CHECK(ece(b) == 0.0);
        CHECK(mce(b) == 0.0);
    }
    SUBCASE("invalid") {
        CHECK_THROWS_AS(bins_of({0.5}, {1}, 0), InputError);
        CHECK_THROWS_AS(bins_of({0.5, 0.2}, {1}, 3), InputError);
    }
    SUBCASE("matches oracle and ECE <= MCE on random data") {
        Engine rng(3);
        for (int trial = 0; trial < 300; ++trial) {
            const int b = 1 + static_cast<int>(uniform_below(rng, 30));
            const std::size_t n = 1 + uniform_below(rng, 200);
            std::vector<double> conf(n);
            std::vector<char> hit(n);
            for (std::size_t i = 0; i < n; ++i) {
                conf[i] = trial % 3 == 0 ? static_cast<double>(uniform_below(rng, 2 * b + 1)) / (2 * b) : uniform01(rng);
                hit[i] = uniform01(rng) < conf[i];
            }
            const auto bins = bins_of(conf, hit, b);
            CHECK(bins.counts.sum() == static_cast<int>(n));
            CHECK(ece(bins) == doctest::Approx(oracle_ece(conf, hit, b)).epsilon(1e-12));
            CHECK(ece(bins) <= mce(bins) + 1e-15);
            CHECK(ece(bins) >= 0.0);
            CHECK(mce(bins) <= 1.0);
        }
    }
}

TEST_CASE("apply_temperature") {
    Eigen::MatrixXd p(3, 3);
    p << 0.7, 0.2, 0.1, 0.3, 0.3, 0.4, 1.0, 0.0, 0.0;
    SUBCASE("T = 1 is the identity up to the floor") {
        const Eigen::MatrixXd q = apply_temperature(p, 1.0);
        CHECK((q - p).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("large T flattens") {
        const Eigen::MatrixXd q = apply_temperature(p.topRows(2), 1e6);
        CHECK((q.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-4);
    }
    SUBCASE("closed form") {
        Eigen::MatrixXd two(1, 2);
        two << 0.8, 0.2;
        const Eigen::MatrixXd q = apply_temperature(two, 2.0);
        CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(q(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        const Eigen::MatrixXd s = apply_temperature(two, 0.5);
        CHECK(s(0, 0) == doctest::Approx(16.0 / 17.0).epsilon(1e-12));
    }
    SUBCASE("rows sum to one and keep their order") {
        Engine rng(8);
        for (int trial = 0; trial < 200; ++trial) {
            const Eigen::VectorXd v = ht::random_probs(rng, 6);
            const double t = std::exp(-3.0 + 6.0 * uniform01(rng));
            const Eigen::MatrixXd q = apply_temperature(v.transpose(), t);
            CHECK(std::abs(q.sum() - 1.0) < 1e-12);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    if (v(i) > v(j) && v(i) > kProbabilityFloor) CHECK(q(0, i) >= q(0, j));
        }
    }
    SUBCASE("float scalars") {
        Eigen::MatrixXf f(1, 2);
        f << 0.8f, 0.2f;
        const Eigen::MatrixXf q = apply_temperature(f, 2.0);
        CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    }
    SUBCASE("invalid temperature") {
        CHECK_THROWS_AS(apply_temperature(p, 0.0), InputError);
        CHECK_THROWS_AS(apply_temperature(p, -1.0), InputError);
        CHECK_THROWS_AS(apply_temperature(p, INFINITY), InputError);
    }
}

TEST_CASE("fit_temperature") {
    SUBCASE("agrees with the grid oracle") {
        Engine rng(12);
        for (int trial = 0; trial < 10; ++trial) {
            synth::SynthConfig cfg;
            cfg.seed = rng();
            cfg.num_classes = 2 + static_cast<int>(uniform_below(rng, 10));
            cfg.num_samples = 300;
            cfg.concentration = 0.2 + uniform01(rng);
            cfg.truth_mode = trial % 2 ? synth::TruthMode::Corrupted : synth::TruthMode::SelfSampled;
            cfg.corruption = 0.3;
            const PredictionSet p = synth::gen_predictions(cfg, ht::flat(cfg.num_classes));
            const TemperatureFit fit = fit_temperature(p);
            const double oracle = ht::log_grid_minimizer([&](double t) { return temperature_nll(p, t); },
                                                         kMinTemperature, kMaxTemperature);
            CHECK(std::abs(std::log(fit.temperature) - std::log(oracle)) < 1e-3);
            CHECK(fit.nll <= temperature_nll(p, 1.0));
            CHECK(fit.nll == doctest::Approx(temperature_nll(p, fit.temperature)));
            CHECK_FALSE(fit.degenerate);
        }
    }
    SUBCASE("recovers an applied sharpening") {
        synth::SynthConfig cfg;
        cfg.seed = 4;
        cfg.num_classes = 10;
        cfg.num_samples = 20000;
        cfg.concentration = 0.5;
        PredictionSet p = synth::gen_predictions(cfg, ht::flat(10));
        for (double t0 : {0.5, 2.0}) {
            PredictionSet s = p;
            s.probs = apply_temperature(p.probs, t0);
            const TemperatureFit fit = fit_temperature(s);
            CHECK(fit.temperature == doctest::Approx(1.0 / t0).epsilon(0.05));
        }
    }
    SUBCASE("one-hot rows are degenerate") {
        const Taxonomy t = ht::flat(3);
        Eigen::MatrixXd probs(2, 3);
        probs << 1, 0, 0, 0, 0, 1;
        const TemperatureFit fit = fit_temperature(make_set(t, probs, {0, 1}));
        CHECK(fit.degenerate);
        CHECK(fit.temperature == 1.0);
    }
    SUBCASE("empty validation set") {
        PredictionSet p = make_set(ht::flat(3), Eigen::MatrixXd(0, 3), {});
        CHECK_THROWS_AS(fit_temperature(p), InputError);
    }
}

TEST_CASE("calibrate") {
    synth::SynthConfig cfg;
    cfg.seed = 19;
    cfg.num_classes = 8;
    cfg.num_samples = 4000;
    cfg.concentration = 0.4;
    const Taxonomy tax = synth::gen_taxonomy(cfg);
    const CostMatrix cost = CostMatrix::from_taxonomy(tax);
    PredictionSet val = synth::gen_predictions(cfg, tax);
    cfg.seed = 20;
    PredictionSet test = synth::gen_predictions(cfg, tax);
    val.probs = apply_temperature(val.probs, 0.5);
    test.probs = apply_temperature(test.probs, 0.5);

    for (ConfidenceSource src : {ConfidenceSource::MaxLikelihood, ConfidenceSource::CrmSelected}) {
        const CalibrationReport r = calibrate(val, test, cost, 15, src);
        CHECK(r.confidence_source == src);
        CHECK(r.temperature == doctest::Approx(fit_temperature(val).temperature));
        CHECK(r.ece_pre == doctest::Approx(ece(reliability(test, cost, 15, src))));
        CHECK(r.ece_post < r.ece_pre);
        CHECK(r.ece_pre <= r.mce_pre);
        CHECK(r.ece_post <= r.mce_post);
        CHECK(calibrate(val, test, cost, 15, src, true, 3) == r);

        // Scaling does not change which class is chosen.
        PredictionSet scaled = test;
        scaled.probs = apply_temperature(test.probs, r.temperature);
        if (src == ConfidenceSource::MaxLikelihood) {
            CHECK(predicted_classes(scaled, cost, src) == predicted_classes(test, cost, src));
        }
    }
}

TEST_CASE("confidence sources") {
    SUBCASE("identical on a flat tree") {
        const Taxonomy t = ht::flat(7);
        const CostMatrix c = CostMatrix::from_taxonomy(t);
        synth::SynthConfig cfg;
        cfg.num_classes = 7;
        cfg.num_samples = 1000;
        cfg.concentration = 0.6;
        const PredictionSet p = synth::gen_predictions(cfg, t);
        const auto a = reliability(p, c, 15, ConfidenceSource::MaxLikelihood);
        const auto b = reliability(p, c, 15, ConfidenceSource::CrmSelected);
        CHECK(a.counts == b.counts);
        CHECK(a.mean_confidence == b.mean_confidence);
        CHECK(a.accuracy == b.accuracy);
    }
    SUBCASE("ranking basis must match the source") {
        const Taxonomy t = ht::balanced4();
        const CostMatrix c = CostMatrix::from_taxonomy(t);
        Eigen::MatrixXd probs(1, 4);
        probs << 0.4, 0.1, 0.3, 0.2;
        const PredictionSet p = make_set(t, probs, {0});
        const auto ranked = batch_apply(p, c, RankingBasis::LikelihoodDescending);
        CHECK_NOTHROW(bin_confidences(p, ranked, 15, ConfidenceSource::MaxLikelihood));
        CHECK_THROWS_AS(bin_confidences(p, ranked, 15, ConfidenceSource::CrmSelected), InputError);
    }
    SUBCASE("crm-selected confidence is p of the CRM choice") {
        const Taxonomy t = ht::balanced4();
        const CostMatrix c = CostMatrix::from_taxonomy(t);
        Eigen::MatrixXd probs(1, 4);
        probs << 0.35, 0.05, 0.33, 0.27;
        const PredictionSet p = make_set(t, probs, {2});
        const auto b = reliability(p, c, 10, ConfidenceSource::CrmSelected);
        CHECK(b.counts(3) == 1);
        CHECK(b.mean_confidence(3) == 0.33);
        CHECK(b.accuracy(3) == 1.0);
    }
}

TEST_CASE("hierarchical_ece") {
    Engine rng(23);
    SUBCASE("leaf depth equals plain ECE, depth 0 is zero") {
        for (int trial = 0; trial < 30; ++trial) {
            const Taxonomy t = ht::random_tree(rng, 20);
            synth::SynthConfig cfg;
            cfg.seed = rng();
            cfg.num_classes = t.num_classes();
            cfg.num_samples = 500;
            cfg.concentration = 0.3 + uniform01(rng);
            const PredictionSet p = synth::gen_predictions(cfg, t);
            const double plain = ece(reliability(p, CostMatrix::from_taxonomy(t), 15, ConfidenceSource::MaxLikelihood));
            CHECK(std::abs(hierarchical_ece(p, t, t.max_leaf_depth()) - plain) <= 1e-12);
            CHECK(hierarchical_ece(p, t, 0) == 0.0);
            for (int d = 0; d <= t.max_leaf_depth(); ++d) {
                const double h = hierarchical_ece(p, t, d);
                CHECK(h >= 0.0);
                CHECK(h <= 1.0);
            }
        }
    }
    SUBCASE("worked instance on the balanced tree") {
        const Taxonomy t = ht::balanced4();
        Eigen::MatrixXd probs(2, 4);
        probs << 0.4, 0.3, 0.2, 0.1,   // groups {0,1}: 0.7, {2,3}: 0.3
            0.1, 0.1, 0.5, 0.3;        // groups 0.2, 0.8
        const PredictionSet p = make_set(t, probs, {1, 2});
        // Depth 1: confidences 0.7 and 0.8 both correct, one bin of width 1.
        CHECK(hierarchical_ece(p, t, 1, 1) == doctest::Approx(0.25));
        // Leaf depth: confidences 0.4 (wrong) and 0.5 (right).
        CHECK(hierarchical_ece(p, t, 2, 1) == doctest::Approx(0.05));
        CHECK_THROWS_AS(hierarchical_ece(p, t, 3), InputError);
        CHECK_THROWS_AS(hierarchical_ece(p, t, -1), InputError);
    }
}
