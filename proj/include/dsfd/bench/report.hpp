#pragma once

// Report serialization. JSON holds config, records and aggregates; CSV holds
// one line per query record followed by a "# aggregate" block.

#include <dsfd/bench/harness.hpp>
#include <dsfd/errors.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace dsfd::bench {

enum class ReportFormat { json, csv };

inline ReportFormat parse_format(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    throw ConfigError("unknown report format '" + name + "'");
}

inline nlohmann::ordered_json source_json(const StreamSpec& spec) {
    nlohmann::ordered_json j;
    if (const auto* syn = std::get_if<SyntheticSource>(&spec.source)) {
        j["kind"] = "synthetic";
        j["n"] = syn->n;
        j["dim"] = syn->dim;
        j["zeta"] = syn->zeta;
    } else if (const auto* csv = std::get_if<CsvSource>(&spec.source)) {
        j["kind"] = "csv";
        j["path"] = csv->path;
        j["ts_column"] = csv->ts_column ? nlohmann::ordered_json(*csv->ts_column) : nlohmann::ordered_json();
    } else {
        j["kind"] = "adversarial";
        j["dim"] = std::get<AdversarialSource>(spec.source).dim;
    }
    j["poisson_lambda"] =
        spec.poisson_lambda ? nlohmann::ordered_json(*spec.poisson_lambda) : nlohmann::ordered_json();
    return j;
}

inline nlohmann::ordered_json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

inline nlohmann::ordered_json to_json(const Report& r) {
    nlohmann::ordered_json j;
    const auto& c = r.config;
    j["config"] = {
        {"algo", algo_name(c.algo)},
        {"stream", source_json(c.stream)},
        {"window", c.window},
        {"epsilon", c.epsilon},
        {"beta", c.beta},
        {"big_r", optional_json(c.big_r)},
        {"query_every", c.query_every},
        {"seed", c.seed},
        {"compressed_query", c.compressed_query},
        {"normalize", c.normalize},
    };
    j["stream_rows"] = r.stream_rows;
    j["dim"] = r.dim;
    j["norm_ratio"] = r.norm_ratio;
    j["effective_big_r"] = r.big_r;
    j["coverage_incomplete"] = r.coverage_incomplete;
    auto records = nlohmann::ordered_json::array();
    for (const auto& rec : r.records) {
        records.push_back({{"step", rec.step},
                           {"ts", rec.ts},
                           {"abs_error", rec.abs_error},
                           {"window_mass", rec.window_mass},
                           {"relative_error", rec.relative_error},
                           {"sketch_rows", rec.sketch_rows}});
    }
    j["records"] = std::move(records);
    if (r.aggregates) {
        const auto& a = *r.aggregates;
        j["aggregates"] = {{"max_sketch_rows", a.max_sketch_rows},
                           {"avg_relative_error", a.avg_relative_error},
                           {"max_relative_error", a.max_relative_error},
                           {"max_abs_error", a.max_abs_error},
                           {"mean_update_us", optional_json(a.mean_update_us)},
                           {"mean_query_us", optional_json(a.mean_query_us)}};
    } else {
        j["aggregates"] = nullptr;
    }
    return j;
}

namespace detail {

/// Shortest decimal that round-trips.
inline std::string fmt(double v) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace detail

inline std::string to_csv(const Report& r) {
    std::ostringstream out;
    out << "step,ts,abs_error,window_mass,relative_error,sketch_rows\n";
    for (const auto& rec : r.records) {
        out << rec.step << ',' << rec.ts << ',' << detail::fmt(rec.abs_error) << ','
            << detail::fmt(rec.window_mass) << ',' << detail::fmt(rec.relative_error) << ','
            << rec.sketch_rows << '\n';
    }
    out << "# aggregate\n";
    out << "algo," << algo_name(r.config.algo) << '\n';
    out << "coverage_incomplete," << (r.coverage_incomplete ? "true" : "false") << '\n';
    if (r.aggregates) {
        const auto& a = *r.aggregates;
        out << "max_sketch_rows," << a.max_sketch_rows << '\n';
        out << "avg_relative_error," << detail::fmt(a.avg_relative_error) << '\n';
        out << "max_relative_error," << detail::fmt(a.max_relative_error) << '\n';
        out << "max_abs_error," << detail::fmt(a.max_abs_error) << '\n';
        out << "mean_update_us," << detail::fmt(a.mean_update_us) << '\n';
        out << "mean_query_us," << detail::fmt(a.mean_query_us) << '\n';
    }
    return out.str();
}

inline std::string render_report(const Report& r, ReportFormat format) {
    return format == ReportFormat::json ? to_json(r).dump(2) + "\n" : to_csv(r);
}

inline void emit_report(const Report& r, const std::string& path, ReportFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << render_report(r, format);
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace dsfd::bench
