#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "hrisk/calibration.hpp"
#include "hrisk/metrics.hpp"
#include "hrisk/prediction_set.hpp"
#include "hrisk/riskmin.hpp"
#include "hrisk/taxonomy.hpp"

namespace hrisk::io {

inline constexpr std::string_view kPredictionMagic = "#hier-risk-predictions v1";

/// Shortest decimal string that parses back to exactly `v` (std::to_chars).
std::string format_double(double v);

/// Whole file as bytes; gzip streams (magic 1f 8b) are inflated.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

/// Prediction CSV:
///
///     #hier-risk-predictions v1
///     truth,<class 1>,...,<class K>
///     <label>,<p 1>,...,<p K>
///
/// LF line endings, `.` decimal separator, no quoting (class names may not
/// contain commas). Rows are validated as probability vectors. When `tax`
/// is given the columns are re-mapped by name into its class order and the
/// name sets must match exactly.
PredictionSet parse_predictions(std::string_view text, const std::string& source = {},
                                const Taxonomy* tax = nullptr);
PredictionSet load_predictions(const std::string& path, const Taxonomy* tax = nullptr);
std::string format_predictions(const PredictionSet& preds);
void save_predictions(const PredictionSet& preds, const std::string& path);

/// Cost matrix as CSV with a `class,<names>` header and one named row per class.
std::string format_cost_csv(const CostMatrix& cost);

/// `severity,count` rows in ascending severity.
std::string format_histogram_csv(const std::map<int, long>& histogram);

/// `bin_low,bin_high,count,mean_conf,accuracy` rows.
std::string format_reliability_csv(const CalibrationBins& bins);

using Json = nlohmann::ordered_json;

Json to_json(const MetricsReport& r);
Json to_json(const CalibrationReport& r);

/// Strict readers: missing or unknown fields throw InputError.
MetricsReport metrics_report_from_json(const Json& j);
CalibrationReport calibration_report_from_json(const Json& j);

/// Two-space indented JSON followed by a newline.
std::string dump(const Json& j);

void save_report(const MetricsReport& r, const std::string& path);
void save_report(const CalibrationReport& r, const std::string& path);
MetricsReport load_metrics_report(const std::string& path);
CalibrationReport load_calibration_report(const std::string& path);

} // namespace hrisk::io
