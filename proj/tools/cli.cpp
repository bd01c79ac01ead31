#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hrisk/batch.hpp"
#include "hrisk/calibration.hpp"
#include "hrisk/dataio.hpp"
#include "hrisk/errors.hpp"
#include "hrisk/metrics.hpp"
#include "hrisk/riskmin.hpp"
#include "hrisk/synth.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk::cli {

namespace {

enum class Status { Ok = 0, Internal = 1, Input = 2 };

struct RunConfig {
    std::string hierarchy;
    std::string predictions;
    std::string validation;
    std::string test;
    std::string out;
    std::string histogram_csv;
    std::string reliability_csv;
    std::vector<int> k_list;
    int bins = kDefaultBins;
    std::uint64_t seed = 0;
    RankingBasis basis = RankingBasis::LikelihoodDescending;
    ConfidenceSource source = ConfidenceSource::MaxLikelihood;
    unsigned threads = 0;
    bool theorem1_fastpath = false;

    // simulate
    synth::SynthConfig synth;
    long val_samples = 0;
    double sharpen = 1.0;
    std::string out_dir = ".";
};

void emit(const RunConfig& cfg, std::ostream& out, const std::string& artifact) {
    if (cfg.out.empty()) out << artifact;
    else io::write_file(cfg.out, artifact);
}

/// Default k values are clipped to K; explicit ones must lie in [1, K].
std::vector<int> resolve_k_list(const std::vector<int>& requested, int num_classes) {
    if (requested.empty()) {
        std::vector<int> ks;
        for (int k : kDefaultKList)
            if (k <= num_classes) ks.push_back(k);
        return ks;
    }
    for (int k : requested)
        if (k < 1 || k > num_classes)
            throw InputError("--k value " + std::to_string(k) + " outside [1, " + std::to_string(num_classes) + "]");
    std::vector<int> ks = requested;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

MetricsReport evaluate(const PredictionSet& preds, const Taxonomy& tax, RankingBasis basis,
                       const std::vector<int>& k_list, const RunConfig& cfg) {
    const CostMatrix cost = CostMatrix::from_taxonomy(tax);
    const auto ranked = batch_apply(preds, cost, basis, cfg.threads);
    if (cfg.theorem1_fastpath && basis == RankingBasis::RiskAscending) {
        const auto top = batch_predict(preds, cost, true, cfg.threads);
        for (std::size_t i = 0; i < top.size(); ++i)
            if (top[i] != ranked[i].top())
                throw std::logic_error("fast-path top-1 disagrees with full risk ranking at row " + std::to_string(i));
    }
    MetricsReport r = full_report(ranked, preds.truth, tax, cost, k_list);
    r.basis = basis;
    return r;
}

Status cmd_build_costs(const RunConfig& cfg, std::ostream& out) {
    const Taxonomy tax = load_taxonomy(cfg.hierarchy);
    emit(cfg, out, io::format_cost_csv(CostMatrix::from_taxonomy(tax)));
    return Status::Ok;
}

Status cmd_eval(const RunConfig& cfg, std::ostream& out) {
    const Taxonomy tax = load_taxonomy(cfg.hierarchy);
    const PredictionSet preds = io::load_predictions(cfg.predictions, &tax);
    const auto ks = resolve_k_list(cfg.k_list, tax.num_classes());
    const MetricsReport r = evaluate(preds, tax, cfg.basis, ks, cfg);
    if (!cfg.histogram_csv.empty()) io::write_file(cfg.histogram_csv, io::format_histogram_csv(r.histogram));
    emit(cfg, out, io::dump(io::to_json(r)));
    return Status::Ok;
}

Status cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
    const Taxonomy tax = load_taxonomy(cfg.hierarchy);
    const PredictionSet val = io::load_predictions(cfg.validation, &tax);
    const PredictionSet test = io::load_predictions(cfg.test, &tax);
    if (test.num_samples() == 0) throw InputError("test prediction file '" + cfg.test + "' has no rows");
    if (val.num_samples() == 0) throw InputError("validation prediction file '" + cfg.validation + "' has no rows");
    const CostMatrix cost = CostMatrix::from_taxonomy(tax);
    const CalibrationReport r = calibrate(val, test, cost, cfg.bins, cfg.source, cfg.theorem1_fastpath, cfg.threads);
    if (!cfg.reliability_csv.empty()) {
        PredictionSet scaled = test;
        scaled.probs = apply_temperature(test.probs, r.temperature);
        const auto pre = reliability(test, cost, cfg.bins, cfg.source, cfg.theorem1_fastpath, cfg.threads);
        const auto post = reliability(scaled, cost, cfg.bins, cfg.source, cfg.theorem1_fastpath, cfg.threads);
        io::write_file(cfg.reliability_csv + ".pre.csv", io::format_reliability_csv(pre));
        io::write_file(cfg.reliability_csv + ".post.csv", io::format_reliability_csv(post));
    }
    emit(cfg, out, io::dump(io::to_json(r)));
    return Status::Ok;
}

Status cmd_hier_ece(const RunConfig& cfg, std::ostream& out) {
    const Taxonomy tax = load_taxonomy(cfg.hierarchy);
    const PredictionSet preds = io::load_predictions(cfg.predictions, &tax);
    io::Json j;
    j["bins"] = cfg.bins;
    io::Json per_depth = io::Json::object();
    for (int d = 0; d <= tax.max_leaf_depth(); ++d) per_depth[std::to_string(d)] = hierarchical_ece(preds, tax, d, cfg.bins);
    j["ece_by_depth"] = per_depth;
    emit(cfg, out, io::dump(j));
    return Status::Ok;
}

Status cmd_shuffle_eval(const RunConfig& cfg, std::ostream& out) {
    const Taxonomy tax = load_taxonomy(cfg.hierarchy);
    const PredictionSet preds = io::load_predictions(cfg.predictions, &tax);
    const auto ks = resolve_k_list(cfg.k_list, tax.num_classes());
    const ShuffledTaxonomy shuffled = shuffle_leaves(tax, cfg.seed);

    io::Json j;
    j["seed"] = cfg.seed;
    j["permutation"] = shuffled.permutation;
    for (const auto& [label, t] : {std::pair<const char*, const Taxonomy*>{"original", &tax},
                                   std::pair<const char*, const Taxonomy*>{"shuffled", &shuffled.taxonomy}}) {
        io::Json pair;
        for (RankingBasis b : {RankingBasis::LikelihoodDescending, RankingBasis::RiskAscending})
            pair[to_string(b)] = io::to_json(evaluate(preds, *t, b, ks, cfg));
        j[label] = pair;
    }
    emit(cfg, out, io::dump(j));
    return Status::Ok;
}

Status cmd_simulate(const RunConfig& cfg, std::ostream& err) {
    if (cfg.val_samples < 0) throw InputError("--val-samples must be non-negative");
    if (!(cfg.sharpen > 0.0)) throw InputError("--sharpen must be positive");
    synth::SynthConfig sc = cfg.synth;
    sc.validate();
    const Taxonomy tax = synth::gen_taxonomy(sc);
    sc.num_samples = cfg.synth.num_samples + cfg.val_samples;
    PredictionSet all = synth::gen_predictions(sc, tax);
    if (cfg.sharpen != 1.0) all.probs = apply_temperature(all.probs, cfg.sharpen);

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw InputError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    const fs::path dir(cfg.out_dir);

    auto slice = [&](long first, long count) {
        PredictionSet p;
        p.class_names = all.class_names;
        p.probs = all.probs.middleRows(first, count);
        p.truth.assign(all.truth.begin() + first, all.truth.begin() + first + count);
        return p;
    };
    io::write_file((dir / "hierarchy.tsv").string(), format_taxonomy(tax));
    io::save_predictions(slice(0, cfg.synth.num_samples), (dir / "predictions.csv").string());
    if (cfg.val_samples > 0)
        io::save_predictions(slice(cfg.synth.num_samples, cfg.val_samples), (dir / "validation.csv").string());
    err << "wrote " << (dir / "hierarchy.tsv").string() << ", " << (dir / "predictions.csv").string()
        << (cfg.val_samples > 0 ? ", " + (dir / "validation.csv").string() : std::string()) << "\n";
    return Status::Ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hierarchy-aware conditional risk minimization and evaluation", "hrisk"};
    app.require_subcommand(1);
    RunConfig cfg;

    const std::map<std::string, RankingBasis> bases{{"likelihood", RankingBasis::LikelihoodDescending},
                                                    {"crm", RankingBasis::RiskAscending}};
    const std::map<std::string, ConfidenceSource> sources{{"max-likelihood", ConfidenceSource::MaxLikelihood},
                                                          {"crm-selected", ConfidenceSource::CrmSelected}};
    const std::map<std::string, synth::TruthMode> truth_modes{{"self", synth::TruthMode::SelfSampled},
                                                              {"argmax", synth::TruthMode::Argmax},
                                                              {"corrupted", synth::TruthMode::Corrupted}};
    const std::map<std::string, synth::TreeMode> tree_modes{{"flat", synth::TreeMode::Flat},
                                                            {"balanced", synth::TreeMode::BalancedBinary},
                                                            {"random", synth::TreeMode::RandomAttachment}};

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out,-o", cfg.out, "Write the artifact here instead of stdout");
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threads", cfg.threads, "Worker threads (0 = available parallelism)");
        sub->add_flag("--theorem1-fastpath", cfg.theorem1_fastpath,
                      "Answer CRM top-1 by argmax when max p > 0.5 (same results)");
    };

    auto* build = app.add_subcommand("build-costs", "Export the LCA-height cost matrix as CSV");
    build->add_option("--hierarchy", cfg.hierarchy, "Hierarchy file (child<TAB>parent)")->required();
    add_out(build);

    auto* eval = app.add_subcommand("eval", "Rank predictions and report hierarchy-aware metrics");
    eval->add_option("--hierarchy", cfg.hierarchy)->required();
    eval->add_option("--predictions", cfg.predictions)->required();
    eval->add_option("--basis", cfg.basis, "likelihood | crm")
        ->transform(CLI::CheckedTransformer(bases, CLI::ignore_case));
    eval->add_option("--k", cfg.k_list, "Comma-separated k values (default 1,5,20)")->delimiter(',');
    eval->add_option("--histogram-csv", cfg.histogram_csv, "Also write the severity histogram as CSV");
    add_out(eval);
    add_common(eval);

    auto* cal = app.add_subcommand("calibrate", "Fit a temperature on validation data, report ECE/MCE on test data");
    cal->add_option("--hierarchy", cfg.hierarchy)->required();
    cal->add_option("--val", cfg.validation, "Validation predictions")->required();
    cal->add_option("--test", cfg.test, "Test predictions")->required();
    cal->add_option("--bins", cfg.bins, "Equal-width confidence bins")->check(CLI::PositiveNumber);
    cal->add_option("--source", cfg.source, "max-likelihood | crm-selected")
        ->transform(CLI::CheckedTransformer(sources, CLI::ignore_case));
    cal->add_option("--reliability-csv", cfg.reliability_csv,
                    "Prefix for reliability-diagram CSVs (<prefix>.pre.csv, <prefix>.post.csv)");
    add_out(cal);
    add_common(cal);

    auto* hece = app.add_subcommand("hier-ece", "ECE at every depth of the hierarchy");
    hece->add_option("--hierarchy", cfg.hierarchy)->required();
    hece->add_option("--predictions", cfg.predictions)->required();
    hece->add_option("--bins", cfg.bins)->check(CLI::PositiveNumber);
    add_out(hece);

    auto* shuf = app.add_subcommand("shuffle-eval", "Evaluate both rankings on the original and a leaf-shuffled tree");
    shuf->add_option("--hierarchy", cfg.hierarchy)->required();
    shuf->add_option("--predictions", cfg.predictions)->required();
    shuf->add_option("--seed", cfg.seed, "Shuffle seed");
    shuf->add_option("--k", cfg.k_list)->delimiter(',');
    add_out(shuf);
    add_common(shuf);

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic hierarchy and prediction files");
    sim->add_option("--seed", cfg.synth.seed);
    sim->add_option("--classes", cfg.synth.num_classes)->required();
    sim->add_option("--samples", cfg.synth.num_samples)->required();
    sim->add_option("--val-samples", cfg.val_samples, "Extra rows written to validation.csv");
    sim->add_option("--concentration", cfg.synth.concentration, "Dirichlet concentration");
    sim->add_option("--truth", cfg.synth.truth_mode, "self | argmax | corrupted")
        ->transform(CLI::CheckedTransformer(truth_modes, CLI::ignore_case));
    sim->add_option("--rho", cfg.synth.corruption, "Corruption rate for --truth corrupted");
    sim->add_option("--tree", cfg.synth.tree_mode, "flat | balanced | random")
        ->transform(CLI::CheckedTransformer(tree_modes, CLI::ignore_case));
    sim->add_option("--sharpen", cfg.sharpen, "Apply temperature T to the generated likelihoods");
    sim->add_option("--out-dir", cfg.out_dir, "Directory for hierarchy.tsv / predictions.csv / validation.csv");

    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(Status::Input);
    }

    try {
        Status s = Status::Ok;
        if (*build) s = cmd_build_costs(cfg, out);
        else if (*eval) s = cmd_eval(cfg, out);
        else if (*cal) s = cmd_calibrate(cfg, out);
        else if (*hece) s = cmd_hier_ece(cfg, out);
        else if (*shuf) s = cmd_shuffle_eval(cfg, out);
        else if (*sim) s = cmd_simulate(cfg, err);
        return static_cast<int>(s);
    } catch (const InputError& e) {
        err << "hrisk: error: " << e.what() << "\n";
        return static_cast<int>(Status::Input);
    } catch (const std::exception& e) {
        err << "hrisk: internal error: " << e.what() << "\n";
        return static_cast<int>(Status::Internal);
    }
}

} // namespace hrisk::cli
