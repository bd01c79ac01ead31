#include "hrisk/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include <zlib.h>

#include "hrisk/errors.hpp"

namespace hrisk::io {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf, end};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string bytes = buf.str();
    if (bytes.size() < 2 || static_cast<unsigned char>(bytes[0]) != 0x1f ||
        static_cast<unsigned char>(bytes[1]) != 0x8b)
        return bytes;

    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) throw InputError("cannot open gzip stream '" + path + "'");
    std::string out;
    char chunk[1 << 16];
    int got;
    while ((got = gzread(gz, chunk, sizeof chunk)) > 0) out.append(chunk, static_cast<std::size_t>(got));
    int err = Z_OK;
    const char* msg = gzerror(gz, &err);
    const bool failed = got < 0 || (err != Z_OK && err != Z_STREAM_END);
    const std::string detail = msg ? msg : "";
    gzclose(gz);
    if (failed) throw InputError("corrupt gzip stream '" + path + "': " + detail);
    return out;
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError("write failed for '" + path + "'");
}

namespace {

struct Field {
    std::string_view text;
    std::size_t column;  // 1-based
};

std::vector<Field> split_csv(std::string_view line) {
    std::vector<Field> fields;
    std::size_t p = 0;
    for (;;) {
        const std::size_t q = line.find(',', p);
        const std::size_t end = q == std::string_view::npos ? line.size() : q;
        fields.push_back({line.substr(p, end - p), p + 1});
        if (q == std::string_view::npos) break;
        p = q + 1;
    }
    return fields;
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        std::size_t end = text_.find('\n', pos_);
        if (end == std::string_view::npos) end = text_.size();
        line = text_.substr(pos_, end - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end + 1;
        ++number_;
        return true;
    }
    std::size_t number() const { return number_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t number_ = 0;
};

double parse_probability(const Field& f, const std::string& source, std::size_t line) {
    double v = 0;
    const char* first = f.text.data();
    const char* last = first + f.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || f.text.empty())
        throw ParseError(source, line, f.column, "malformed number '" + std::string(f.text) + "'");
    if (!std::isfinite(v)) throw ParseError(source, line, f.column, "non-finite value '" + std::string(f.text) + "'");
    return v;
}

} // namespace

PredictionSet parse_predictions(std::string_view text, const std::string& source, const Taxonomy* tax) {
    LineReader reader(text);
    std::string_view line;
    if (!reader.next(line)) throw ParseError(source, 1, 0, "empty prediction file");
    if (line != kPredictionMagic)
        throw ParseError(source, 1, 1, "expected '" + std::string(kPredictionMagic) + "'");
    if (!reader.next(line)) throw ParseError(source, 2, 0, "missing header line");
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0].text != "truth")
        throw ParseError(source, 2, 1, "header must be 'truth,<class 1>,...,<class K>' with K >= 2");

    std::vector<std::string> file_names;
    std::unordered_map<std::string, int> file_index;
    for (std::size_t c = 1; c < header.size(); ++c) {
        std::string name(header[c].text);
        if (name.empty()) throw ParseError(source, 2, header[c].column, "empty class name");
        if (!file_index.emplace(name, static_cast<int>(c - 1)).second)
            throw ParseError(source, 2, header[c].column, "duplicate class name '" + name + "'");
        file_names.push_back(std::move(name));
    }
    const int k = static_cast<int>(file_names.size());

    // column_of[c] = file column holding output class c.
    std::vector<int> column_of(static_cast<std::size_t>(k));
    std::vector<std::string> names = file_names;
    if (tax) {
        if (tax->num_classes() != k)
            throw ParseError(source, 2, 0, "file has K = " + std::to_string(k) + " classes, hierarchy has " +
                                               std::to_string(tax->num_classes()));
        names = tax->class_names();
        for (int c = 0; c < k; ++c) {
            auto it = file_index.find(names[static_cast<std::size_t>(c)]);
            if (it == file_index.end())
                throw ParseError(source, 2, 0, "hierarchy class '" + names[static_cast<std::size_t>(c)] +
                                                   "' missing from prediction header");
            column_of[static_cast<std::size_t>(c)] = it->second;
        }
    } else {
        for (int c = 0; c < k; ++c) column_of[static_cast<std::size_t>(c)] = c;
    }
    std::unordered_map<std::string, int> out_index;
    for (int c = 0; c < k; ++c) out_index.emplace(names[static_cast<std::size_t>(c)], c);

    std::vector<double> values;
    std::vector<int> truth;
    std::vector<double> row(static_cast<std::size_t>(k));
    while (reader.next(line)) {
        const std::size_t ln = reader.number();
        if (line.empty()) {
            // Only a trailing blank line (end of file) is tolerated.
            std::string_view rest;
            if (reader.next(rest)) throw ParseError(source, ln, 0, "blank line inside data");
            break;
        }
        const auto fields = split_csv(line);
        if (static_cast<int>(fields.size()) != k + 1)
            throw ParseError(source, ln, 0, "expected " + std::to_string(k + 1) + " fields, found " +
                                                std::to_string(fields.size()));
        auto t = out_index.find(std::string(fields[0].text));
        if (t == out_index.end())
            throw ParseError(source, ln, 1, "unknown truth label '" + std::string(fields[0].text) + "'");
        for (int j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = parse_probability(fields[static_cast<std::size_t>(j) + 1], source, ln);
        for (int c = 0; c < k; ++c) values.push_back(row[static_cast<std::size_t>(column_of[static_cast<std::size_t>(c)])]);
        truth.push_back(t->second);
    }

    PredictionSet out;
    const auto n = static_cast<Eigen::Index>(truth.size());
    out.probs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), n, k);
    out.truth = std::move(truth);
    out.class_names = std::move(names);
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            out.probs.row(i) = checked_probabilities(out.probs.row(i).transpose()).transpose();
        } catch (const InputError& e) {
            // Data rows start on line 3.
            throw ParseError(source, static_cast<std::size_t>(i) + 3, 0,
                             "row " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

PredictionSet load_predictions(const std::string& path, const Taxonomy* tax) {
    return parse_predictions(read_file(path), path, tax);
}

std::string format_predictions(const PredictionSet& preds) {
    std::string out(kPredictionMagic);
    out += "\ntruth";
    for (const auto& n : preds.class_names) out += "," + n;
    out += "\n";
    for (Eigen::Index i = 0; i < preds.num_samples(); ++i) {
        out += preds.class_names.at(static_cast<std::size_t>(preds.truth.at(static_cast<std::size_t>(i))));
        for (Eigen::Index j = 0; j < preds.probs.cols(); ++j) {
            out += ',';
            out += format_double(preds.probs(i, j));
        }
        out += '\n';
    }
    return out;
}

void save_predictions(const PredictionSet& preds, const std::string& path) {
    write_file(path, format_predictions(preds));
}

std::string format_cost_csv(const CostMatrix& cost) {
    const auto& names = cost.class_names();
    std::string out = "class";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (int i = 0; i < cost.num_classes(); ++i) {
        out += names[static_cast<std::size_t>(i)];
        for (int j = 0; j < cost.num_classes(); ++j) out += "," + std::to_string(cost(i, j));
        out += "\n";
    }
    return out;
}

std::string format_histogram_csv(const std::map<int, long>& histogram) {
    std::string out = "severity,count\n";
    for (const auto& [s, c] : histogram) out += std::to_string(s) + "," + std::to_string(c) + "\n";
    return out;
}

std::string format_reliability_csv(const CalibrationBins& bins) {
    std::string out = "bin_low,bin_high,count,mean_conf,accuracy\n";
    for (int b = 0; b < bins.num_bins(); ++b) {
        out += format_double(bins.edges(b)) + "," + format_double(bins.edges(b + 1)) + "," +
               std::to_string(bins.counts(b)) + "," + format_double(bins.mean_confidence(b)) + "," +
               format_double(bins.accuracy(b)) + "\n";
    }
    return out;
}

Json to_json(const MetricsReport& r) {
    Json j;
    j["basis"] = to_string(r.basis);
    j["n_samples"] = r.n_samples;
    j["top1_error"] = r.top1_error;
    Json dk = Json::object();
    for (const auto& [k, v] : r.distance_at_k) dk[std::to_string(k)] = v;
    j["distance_at_k"] = dk;
    j["severity_over_mistakes"] = r.severity_over_mistakes ? Json(*r.severity_over_mistakes) : Json(nullptr);
    j["severity_over_all"] = r.severity_over_all;
    j["n_mistakes"] = r.n_mistakes;
    Json h = Json::object();
    for (const auto& [s, c] : r.histogram) h[std::to_string(s)] = c;
    j["histogram"] = h;
    return j;
}

Json to_json(const CalibrationReport& r) {
    Json j;
    j["confidence_source"] = to_string(r.confidence_source);
    j["bins"] = r.bins;
    j["temperature"] = r.temperature;
    j["temperature_degenerate"] = r.temperature_degenerate;
    j["ece_pre"] = r.ece_pre;
    j["ece_post"] = r.ece_post;
    j["mce_pre"] = r.mce_pre;
    j["mce_post"] = r.mce_post;
    return j;
}

namespace {

void require_fields(const Json& j, std::initializer_list<const char*> fields, const char* what) {
    if (!j.is_object()) throw InputError(std::string(what) + ": expected a JSON object");
    std::set<std::string> known(fields.begin(), fields.end());
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InputError(std::string(what) + ": unknown field '" + key + "'");
    for (const char* f : fields)
        if (!j.contains(f)) throw InputError(std::string(what) + ": missing field '" + f + "'");
}

int parse_int_key(const std::string& key, const char* what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
    if (ec != std::errc{} || ptr != key.data() + key.size())
        throw InputError(std::string(what) + ": non-integer key '" + key + "'");
    return v;
}

RankingBasis parse_basis(const std::string& s) {
    if (s == "likelihood") return RankingBasis::LikelihoodDescending;
    if (s == "crm") return RankingBasis::RiskAscending;
    throw InputError("unknown ranking basis '" + s + "'");
}

ConfidenceSource parse_source(const std::string& s) {
    if (s == "max-likelihood") return ConfidenceSource::MaxLikelihood;
    if (s == "crm-selected") return ConfidenceSource::CrmSelected;
    throw InputError("unknown confidence source '" + s + "'");
}

template <typename Fn>
auto schema_guard(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

} // namespace

MetricsReport metrics_report_from_json(const Json& j) {
    constexpr const char* what = "metrics report";
    require_fields(j,
                   {"basis", "n_samples", "top1_error", "distance_at_k", "severity_over_mistakes",
                    "severity_over_all", "n_mistakes", "histogram"},
                   what);
    return schema_guard(what, [&] {
        MetricsReport r;
        r.basis = parse_basis(j.at("basis").get<std::string>());
        r.n_samples = j.at("n_samples").get<long>();
        r.top1_error = j.at("top1_error").get<double>();
        for (const auto& [k, v] : j.at("distance_at_k").items()) r.distance_at_k[parse_int_key(k, what)] = v.get<double>();
        if (!j.at("severity_over_mistakes").is_null())
            r.severity_over_mistakes = j.at("severity_over_mistakes").get<double>();
        r.severity_over_all = j.at("severity_over_all").get<double>();
        r.n_mistakes = j.at("n_mistakes").get<long>();
        for (const auto& [s, c] : j.at("histogram").items()) r.histogram[parse_int_key(s, what)] = c.get<long>();
        return r;
    });
}

CalibrationReport calibration_report_from_json(const Json& j) {
    constexpr const char* what = "calibration report";
    require_fields(j,
                   {"confidence_source", "bins", "temperature", "temperature_degenerate", "ece_pre", "ece_post",
                    "mce_pre", "mce_post"},
                   what);
    return schema_guard(what, [&] {
        CalibrationReport r;
        r.confidence_source = parse_source(j.at("confidence_source").get<std::string>());
        r.bins = j.at("bins").get<int>();
        r.temperature = j.at("temperature").get<double>();
        r.temperature_degenerate = j.at("temperature_degenerate").get<bool>();
        r.ece_pre = j.at("ece_pre").get<double>();
        r.ece_post = j.at("ece_post").get<double>();
        r.mce_pre = j.at("mce_pre").get<double>();
        r.mce_post = j.at("mce_post").get<double>();
        return r;
    });
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void save_report(const MetricsReport& r, const std::string& path) { write_file(path, dump(to_json(r))); }
void save_report(const CalibrationReport& r, const std::string& path) { write_file(path, dump(to_json(r))); }

namespace {

Json parse_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("'" + path + "': " + e.what());
    }
}

} // namespace

MetricsReport load_metrics_report(const std::string& path) { return metrics_report_from_json(parse_json_file(path)); }

CalibrationReport load_calibration_report(const std::string& path) {
    return calibration_report_from_json(parse_json_file(path));
}

} // namespace hrisk::io
