#include "hrisk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hrisk/errors.hpp"

namespace hrisk::synth {

namespace {

constexpr std::uint64_t kPredictionStream = 0x9e3779b97f4a7c15ULL;

std::string padded(const char* prefix, long i, long count) {
    const int width = std::max<int>(3, static_cast<int>(std::to_string(std::max(count - 1, 0L)).size()));
    std::string digits = std::to_string(i);
    if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
    return prefix + digits;
}

} // namespace

void SynthConfig::validate() const {
    if (num_classes < 2) throw InputError("synthetic config: need at least 2 classes");
    if (num_samples < 0) throw InputError("synthetic config: sample count must be non-negative");
    if (!(concentration > 0.0) || !std::isfinite(concentration))
        throw InputError("synthetic config: concentration must be positive");
    if (!(corruption >= 0.0 && corruption <= 1.0))
        throw InputError("synthetic config: corruption rate must lie in [0, 1]");
}

std::string leaf_name(int c, int num_classes) { return padded("c", c, num_classes); }

Taxonomy gen_taxonomy(const SynthConfig& cfg) {
    cfg.validate();
    const int k = cfg.num_classes;
    std::vector<std::pair<std::string, std::string>> edges;

    switch (cfg.tree_mode) {
    case TreeMode::Flat:
        for (int c = 0; c < k; ++c) edges.emplace_back(leaf_name(c, k), "root");
        break;

    case TreeMode::BalancedBinary: {
        if ((k & (k - 1)) != 0) throw InputError("balanced-binary tree needs K to be a power of 2");
        // Level-by-level pairing from the leaves up.
        std::vector<std::string> level;
        for (int c = 0; c < k; ++c) level.push_back(leaf_name(c, k));
        int depth = 0;
        while (level.size() > 1) {
            ++depth;
            std::vector<std::string> up;
            for (std::size_t i = 0; i < level.size(); i += 2) {
                std::string parent = level.size() == 2
                                         ? std::string("root")
                                         : "n" + std::to_string(depth) + "_" + std::to_string(i / 2);
                edges.emplace_back(level[i], parent);
                edges.emplace_back(level[i + 1], parent);
                up.push_back(std::move(parent));
            }
            level = std::move(up);
        }
        break;
    }

    case TreeMode::RandomAttachment: {
        Engine rng(cfg.seed);
        // parent[v] for v > 0; node 0 is the root.
        std::vector<long> parent{-1};
        std::vector<bool> internal{true};
        std::vector<int> leaf_class{-1};
        auto add = [&](long p, bool is_internal, int cls) {
            parent.push_back(p);
            internal.push_back(is_internal);
            leaf_class.push_back(cls);
            return static_cast<long>(parent.size()) - 1;
        };
        add(0, false, 0);
        add(0, false, 1);
        for (int c = 2; c < k; ++c) {
            const auto v = static_cast<long>(uniform_below(rng, parent.size()));
            if (internal[static_cast<std::size_t>(v)]) {
                add(v, false, c);
            } else {
                const long split = add(parent[static_cast<std::size_t>(v)], true, -1);
                parent[static_cast<std::size_t>(v)] = split;
                add(split, false, c);
            }
        }
        long next_internal = 0;
        std::vector<std::string> names(parent.size());
        names[0] = "root";
        for (std::size_t v = 1; v < parent.size(); ++v)
            names[v] = internal[v] ? padded("n", next_internal++, k) : leaf_name(leaf_class[v], k);
        for (std::size_t v = 1; v < parent.size(); ++v)
            edges.emplace_back(names[v], names[static_cast<std::size_t>(parent[v])]);
        break;
    }
    }
    return Taxonomy::from_edges(edges);
}

Eigen::VectorXd dirichlet(Engine& rng, int k, double alpha) {
    Eigen::VectorXd x(k);
    for (;;) {
        for (int j = 0; j < k; ++j) x(j) = gamma_variate(rng, alpha);
        const double s = x.sum();
        // All-zero draws (possible from underflow at tiny alpha) are redrawn.
        if (s > 0.0) return x / s;
    }
}

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& p, double u) {
    double cdf = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        cdf += p(j);
        if (u < cdf) return static_cast<int>(j);
    }
    // u landed in the rounding gap above the final cdf: last class with mass.
    for (Eigen::Index j = p.size() - 1; j > 0; --j)
        if (p(j) > 0.0) return static_cast<int>(j);
    return 0;
}

PredictionSet gen_predictions(const SynthConfig& cfg, const Taxonomy& tax) {
    cfg.validate();
    if (tax.num_classes() != cfg.num_classes)
        throw InputError("synthetic config has K = " + std::to_string(cfg.num_classes) + " but taxonomy has " +
                         std::to_string(tax.num_classes()) + " classes");
    const int k = cfg.num_classes;
    PredictionSet out;
    out.class_names = tax.class_names();
    out.probs.resize(cfg.num_samples, k);
    out.truth.resize(static_cast<std::size_t>(cfg.num_samples));

    Engine rng(cfg.seed ^ kPredictionStream);
    for (long i = 0; i < cfg.num_samples; ++i) {
        const Eigen::VectorXd p = dirichlet(rng, k, cfg.concentration);
        out.probs.row(i) = p.transpose();
        int t = 0;
        switch (cfg.truth_mode) {
        case TruthMode::Argmax:
            t = argmax(p);
            break;
        case TruthMode::SelfSampled:
            t = sample_categorical(p, uniform01(rng));
            break;
        case TruthMode::Corrupted:
            t = sample_categorical(p, uniform01(rng));
            if (uniform01(rng) < cfg.corruption) t = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(k)));
            break;
        }
        out.truth[static_cast<std::size_t>(i)] = t;
    }
    return out;
}

Eigen::VectorXd oracle_risk(const Eigen::Ref<const Eigen::VectorXd>& p, const CostMatrix& cost) {
    const int k = cost.num_classes();
    if (p.size() != k) throw InputError("oracle_risk: dimension mismatch");
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        if (!std::isfinite(p(j)) || p(j) < 0.0) throw InputError("oracle_risk: invalid probability");
        total += p(j);
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) throw InputError("oracle_risk: probabilities do not sum to 1");
    Eigen::VectorXd risk(k);
    for (int m = 0; m < k; ++m) {
        double r = 0.0;
        for (int j = 0; j < k; ++j) r += static_cast<double>(cost(m, j)) * (p(j) / total);
        risk(m) = r;
    }
    return risk;
}

int oracle_lca(const Taxonomy& tax, ClassIndex i, ClassIndex j) {
    auto root_path = [&](ClassIndex c) {
        std::vector<NodeIndex> path{tax.leaf(c)};
        while (tax.node(path.back()).parent) path.push_back(*tax.node(path.back()).parent);
        return path;
    };
    const auto pi = root_path(i);
    const auto pj = root_path(j);
    const std::set<NodeIndex> on_j(pj.begin(), pj.end());
    NodeIndex shared = tax.root();
    for (NodeIndex v : pi)
        if (on_j.count(v)) { shared = v; break; }

    int height = 0;
    std::vector<std::pair<NodeIndex, int>> stack{{shared, 0}};
    while (!stack.empty()) {
        auto [v, d] = stack.back();
        stack.pop_back();
        const auto& kids = tax.children(v);
        if (kids.empty()) height = std::max(height, d);
        for (NodeIndex c : kids) stack.emplace_back(c, d + 1);
    }
    return height;
}

} // namespace hrisk::synth
