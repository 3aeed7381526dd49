#include "ysm/run_record.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ysm/csv.hpp"

namespace ysm {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf.data(), end};
}

std::string code_version() {
    return YSM_VERSION;
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
    return buf.data();
}

void write_series_csv(std::ostream& out, const RunRecord& record) {
    out << kSeriesHeader << '\n';
    for (const auto& s : record.samples) {
        out << format_double(s.t) << ',' << format_double(s.top1_share) << ',' << format_double(s.top_eps_share)
            << ',' << format_double(s.gini_P) << ',' << format_double(s.gini_p) << ','
            << format_double(s.wealth_residual) << ',' << s.clipped_bias_count << '\n';
    }
}

nlohmann::json run_manifest(const RunRecord& record) {
    nlohmann::json lorenz_files = nlohmann::json::array();
    for (std::size_t k = 0; k < record.lorenz.size(); ++k) {
        lorenz_files.push_back({{"t", record.lorenz[k].t}, {"file", "lorenz/lorenz_" + std::to_string(k) + ".csv"}});
    }
    return {
        {"schema_version", kSchemaVersion},
        {"kind", "run"},
        {"engine", record.engine},
        {"code_version", code_version()},
        {"params", record.params},
        {"seed", record.seed},
        {"stream_id", record.stream_id},
        {"top_epsilon", record.top_epsilon},
        {"series", "series.csv"},
        {"series_columns", std::string(kSeriesHeader)},
        {"lorenz_snapshots", lorenz_files},
        {"steps", record.steps},
        {"transactions", record.transactions},
        {"clipped_bias", record.clipped_bias},
        {"clamped_wealth", record.clamped_wealth},
        {"max_abs_wealth_residual", record.max_abs_wealth_residual},
        {"max_abs_agent_residual", record.max_abs_agent_residual},
        {"warnings", record.warnings},
        {"wall_time_seconds", record.wall_time_seconds},
    };
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path.string() + ": malformed JSON: " + e.what());
    }
}

void write_run(const RunRecord& record, const std::filesystem::path& dir, const nlohmann::json& config) {
    std::filesystem::create_directories(dir);
    std::ostringstream series;
    write_series_csv(series, record);
    write_text_file(dir / "series.csv", series.str());
    for (std::size_t k = 0; k < record.lorenz.size(); ++k) {
        std::ostringstream csv;
        write_lorenz_csv(csv, record.lorenz[k].curve);
        write_text_file(dir / "lorenz" / ("lorenz_" + std::to_string(k) + ".csv"), csv.str());
    }
    auto manifest = run_manifest(record);
    manifest["config"] = config;
    manifest["config_hash"] = config_hash(config);
    write_json_file(dir / "manifest.json", manifest);
}

std::vector<RunSample> read_series_csv(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    const std::vector<std::string> expected = split_csv_line(std::string(kSeriesHeader));
    if (table.header != expected) {
        throw std::runtime_error(path.string() + ":1: unexpected header; expected " + std::string(kSeriesHeader));
    }
    std::vector<RunSample> samples;
    samples.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        RunSample s;
        s.t = table.number(row, 0);
        s.top1_share = table.number(row, 1);
        s.top_eps_share = table.number(row, 2);
        s.gini_P = table.number(row, 3);
        s.gini_p = table.number(row, 4);
        s.wealth_residual = table.number(row, 5);
        s.clipped_bias_count = static_cast<std::uint64_t>(table.number(row, 6));
        samples.push_back(s);
    }
    return samples;
}

} // namespace ysm
