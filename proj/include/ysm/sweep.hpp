#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ysm/model_params.hpp"
#include "ysm/run_record.hpp"

namespace ysm {

enum class Engine { mc, fp, theory };

[[nodiscard]] std::string to_string(Engine e);
[[nodiscard]] Engine parse_engine(const std::string& s);

// One parameter point of a sweep. Unset fields take the plan defaults.
struct SweepCell {
    double zeta = 0.0;
    nlohmann::json tax = 0.0;    // rate schedule; a bare number is a constant rate
    nlohmann::json sigma = 0.0;
    std::size_t n_agents = 100;
    double total_wealth = 0.0;   // 0 means n_agents (mean wealth 1)
    double dt = 0.01;
    double t_end = 100.0;
    std::string init = "equal";  // equal | exponential | oligarch
    double c0 = 0.01;            // oligarch share for init = oligarch, condensed fraction for fp and theory
    std::size_t record_every = 100;
    double top_epsilon = 0.01;
    std::string taxation = "per-sweep";
    std::string pairing = "matching";
    std::size_t bins = 512;
    double w_max_factor = 50.0;  // w_max in units of W/N
    double width_ratio = 4.0;
    double dt_max = 0.05;
    double record_interval = 1.0;

    [[nodiscard]] ModelParams model_params() const;
    [[nodiscard]] nlohmann::json to_json() const;
    // Fields missing from j are taken from base.
    static SweepCell from_json(const nlohmann::json& j, const SweepCell& base);
};

struct SweepPlan {
    Engine engine = Engine::mc;
    std::uint64_t master_seed = 0;
    std::size_t seeds_per_cell = 1;
    std::size_t workers = 0;          // 0 means hardware concurrency
    double terminal_window = 0.2;     // trailing fraction of each run averaged for terminal statistics
    std::filesystem::path output_dir = "sweep_out";
    std::vector<SweepCell> cells;

    // Problems in the plan, all at once; empty when valid.
    [[nodiscard]] std::vector<std::string> validation_errors() const;
    void validate() const;

    // Schema: {"engine", "master_seed", "seeds_per_cell", "workers", "terminal_window",
    // "output_dir", "defaults": {cell}, "cells": [{cell}...]} or, instead of "cells",
    // "grid": {"zeta": [...], "tau": [...], "n_agents": [...], "dt": [...], "t_end": [...]}
    // expanded as a cartesian product in that key order, the last key varying fastest.
    static SweepPlan from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;
};

struct TerminalStats {
    double top1 = 0.0;
    double gini = 0.0;
    double rate = 0.0; // fitted logistic rate; NaN when the fit is not possible
};

// Averages over samples with t >= t_first + (1 - window) (t_last - t_first).
[[nodiscard]] TerminalStats terminal_stats(const std::vector<RunSample>& samples, double window);

struct JobResult {
    std::size_t cell = 0;
    std::size_t seed_index = 0;
    std::uint64_t stream_id = 0;
    bool ok = false;
    std::string error;
    TerminalStats terminal;
    std::filesystem::path dir;
};

struct CellSummary {
    SweepCell cell;
    std::size_t seeds = 0; // successful jobs
    std::size_t failed = 0;
    double mean_top1 = 0.0;
    double se_top1 = 0.0;
    double mean_gini = 0.0;
    double se_gini = 0.0;
    double mean_rate = 0.0;
    double se_rate = 0.0;
    double c_theory = 0.0;
    double abs_error = 0.0;
};

struct SweepResult {
    std::vector<JobResult> jobs;
    std::vector<CellSummary> cells;
    [[nodiscard]] std::size_t failures() const;
};

// Runs one job: the engine on one cell with RngStream(master_seed, derive_stream_id(cell, seed_index)).
[[nodiscard]] RunRecord run_job(const SweepPlan& plan, std::size_t cell, std::size_t seed_index);

// Executes every (cell, seed) job on up to plan.workers threads, writes
// <output_dir>/cell_<i>/seed_<j>/{series.csv,manifest.json} per job and
// <output_dir>/aggregate.csv. job_order, when given, is a permutation of the
// job indices (cell-major) fixing the order jobs are started in.
[[nodiscard]] SweepResult run_sweep(const SweepPlan& plan,
                                    const std::optional<std::vector<std::size_t>>& job_order = std::nullopt);

inline constexpr const char* kAggregateHeader =
    "zeta,tau,N,seeds,mean_top1,se_top1,mean_gini,c_theory,abs_error,se_gini,mean_rate,se_rate,failed";

void write_aggregate_csv(std::ostream& out, const std::vector<CellSummary>& cells);

} // namespace ysm
