#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ysm/distribution.hpp"

namespace ysm {

inline constexpr int kSchemaVersion = 1;

// Shortest decimal string that parses back to the same double.
[[nodiscard]] std::string format_double(double x);

[[nodiscard]] std::string code_version();

// FNV-1a 64-bit over the compact dump of a JSON value (keys are sorted), as 16 hex digits.
[[nodiscard]] std::string config_hash(const nlohmann::json& config);

// One observation of a run.
//
// For Monte Carlo runs top1_share is the richest agent's share and gini_p is the
// Gini coefficient of everyone but the richest agent. For Fokker-Planck runs
// top1_share is the condensed fraction c and gini_p is the Gini coefficient of
// the classical density. clipped_bias_count is cumulative: clipped WAA biases
// for Monte Carlo, clipped negative densities for Fokker-Planck.
struct RunSample {
    double t = 0.0;
    double top1_share = 0.0;
    double top_eps_share = 0.0;
    double gini_P = 0.0;
    double gini_p = 0.0;
    double wealth_residual = 0.0;
    std::uint64_t clipped_bias_count = 0;
};

struct LorenzSnapshot {
    double t = 0.0;
    LorenzCurve curve;
};

struct RunRecord {
    std::string engine;          // "mc" or "fp"
    nlohmann::json params;       // ModelParams plus engine options
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    double top_epsilon = 0.01;
    std::vector<RunSample> samples;
    std::vector<LorenzSnapshot> lorenz;
    std::vector<std::string> warnings;

    std::uint64_t steps = 0;
    std::uint64_t transactions = 0;
    std::uint64_t clipped_bias = 0;
    std::uint64_t clamped_wealth = 0;
    double max_abs_wealth_residual = 0.0;
    double max_abs_agent_residual = 0.0;
    double wall_time_seconds = 0.0;
};

inline constexpr std::string_view kSeriesHeader =
    "t,top1_share,top_eps_share,gini_P,gini_p,wealth_residual,clipped_bias_count";

void write_series_csv(std::ostream& out, const RunRecord& record);
[[nodiscard]] nlohmann::json run_manifest(const RunRecord& record);

// Writes <dir>/series.csv, <dir>/manifest.json and <dir>/lorenz/lorenz_<k>.csv.
void write_run(const RunRecord& record, const std::filesystem::path& dir, const nlohmann::json& config);

// Parses a series CSV written by write_series_csv. Throws std::runtime_error with
// "<path>:<line>: ..." diagnostics on malformed input.
[[nodiscard]] std::vector<RunSample> read_series_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
[[nodiscard]] nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace ysm
