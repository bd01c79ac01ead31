#pragma once

#include <vector>

#include "hrisk/parallel.hpp"
#include "hrisk/prediction_set.hpp"
#include "hrisk/riskmin.hpp"

namespace hrisk {

/// Ranks every row of `preds` under `basis`. Output order matches input
/// order regardless of `threads` (0 = hardware concurrency).
inline std::vector<RankedOutput<double>> batch_apply(const PredictionSet& preds, const CostMatrix& cost,
                                                     RankingBasis basis, unsigned threads = 1) {
    require_same_classes(preds.class_names, cost.class_names());
    std::vector<RankedOutput<double>> out(static_cast<std::size_t>(preds.num_samples()));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        out[i] = rank(preds.probs.row(static_cast<Eigen::Index>(i)).transpose(), cost, basis);
    });
    return out;
}

/// Top-1 CRM decision per row (optionally through the max p > 0.5 shortcut).
inline std::vector<int> batch_predict(const PredictionSet& preds, const CostMatrix& cost,
                                      bool theorem1_fastpath = false, unsigned threads = 1) {
    require_same_classes(preds.class_names, cost.class_names());
    std::vector<int> out(static_cast<std::size_t>(preds.num_samples()));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        out[i] = crm_predict(preds.probs.row(static_cast<Eigen::Index>(i)).transpose(), cost, theorem1_fastpath);
    });
    return out;
}

} // namespace hrisk
