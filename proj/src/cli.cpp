#include "ysm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ysm/csv.hpp"
#include "ysm/fokker_planck.hpp"
#include "ysm/logistic_fit.hpp"
#include "ysm/mc_engine.hpp"
#include "ysm/population.hpp"
#include "ysm/rng.hpp"
#include "ysm/run_record.hpp"
#include "ysm/sweep.hpp"
#include "ysm/theory.hpp"

namespace ysm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A usage or configuration problem: exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flags that land in the run config under a JSON key when given on the command line.
class FlagSet {
public:
    template <class T>
    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto storage = std::make_shared<T>();
        CLI::Option* opt = app->add_option(flag, *storage, help);
        names_[key] = flag.substr(0, flag.find(','));
        commits_.push_back([opt, storage, key](json& j) {
            if (opt->count() > 0) j[key] = *storage;
        });
    }

    // Config file (if any) overlaid with the flags that were given.
    [[nodiscard]] json merged(const std::string& config_path) const {
        json j = json::object();
        if (!config_path.empty()) {
            try {
                j = read_json_file(config_path);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("cannot read config: ") + e.what());
            }
            if (!j.is_object()) throw ConfigError("config " + config_path + " must hold a JSON object");
        }
        for (const auto& commit : commits_) commit(j);
        return j;
    }

    [[nodiscard]] std::string name_of(const std::string& key) const {
        const auto it = names_.find(key);
        return it == names_.end() ? key : key + " (" + it->second + ")";
    }

private:
    std::vector<std::function<void(json&)>> commits_;
    std::map<std::string, std::string> names_;
};

void add_model_flags(CLI::App* app, FlagSet& flags) {
    flags.add<double>(app, "--zeta", "zeta", "WAA strength");
    flags.add<double>(app, "--tau", "tau", "constant tax rate");
    flags.add<double>(app, "--sigma", "sigma", "constant redistribution deviation");
    flags.add<std::size_t>(app, "--agents", "n_agents", "number of agents");
    flags.add<double>(app, "--wealth", "total_wealth", "total wealth (default: number of agents)");
    flags.add<double>(app, "--dt", "dt", "time step");
    flags.add<double>(app, "--t-end", "t_end", "final model time");
    flags.add<double>(app, "--top-eps", "top_epsilon", "top fraction for the top_eps_share column");
    flags.add<double>(app, "--c0", "c0", "initial condensed or oligarch share");
    flags.add<std::string>(app, "--out", "output_dir", "output directory");
}

// Keys of the run config that are not sweep-cell fields.
const std::vector<std::string> kRunKeys = {"seed",           "stream_id",      "output_dir", "init_file",
                                           "lorenz_every",   "snapshot_every", "engine"};

SweepCell cell_from_config(const json& config, const FlagSet& flags, const std::vector<std::string>& required) {
    std::vector<std::string> problems;
    for (const auto& key : required) {
        const bool present = config.contains(key) || (key == "tau" && config.contains("tax"));
        if (!present) problems.push_back("missing required field " + flags.name_of(key));
    }
    json cell_json = json::object();
    for (const auto& [key, value] : config.items()) {
        if (std::find(kRunKeys.begin(), kRunKeys.end(), key) == kRunKeys.end()) cell_json[key] = value;
    }
    SweepCell cell;
    try {
        cell = SweepCell::from_json(cell_json, SweepCell{});
    } catch (const std::exception& e) {
        problems.push_back(e.what());
    }
    if (problems.empty()) {
        SweepPlan plan;
        plan.cells.push_back(cell);
        for (const auto& p : plan.validation_errors()) problems.push_back(p.substr(p.find(": ") + 2));
    }
    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return cell;
}

template <class T>
T config_value(const json& config, const std::string& key, T fallback) {
    if (!config.contains(key)) return fallback;
    try {
        return config.at(key).get<T>();
    } catch (const std::exception& e) {
        throw ConfigError("field " + key + ": " + e.what());
    }
}

void print_warnings(const RunRecord& record, std::ostream& err) {
    for (const auto& w : record.warnings) err << "warning: " << w << '\n';
}

int cmd_simulate(const json& config, const FlagSet& flags, std::ostream& out, std::ostream& err) {
    const SweepCell cell = cell_from_config(config, flags, {"zeta", "tau", "n_agents", "t_end"});
    if (!config.contains("seed")) {
        throw ConfigError("missing required field " + flags.name_of("seed") + "; stochastic runs are never seeded implicitly");
    }
    const auto seed = config_value<std::uint64_t>(config, "seed", 0);
    const auto stream = config_value<std::uint64_t>(config, "stream_id", 0);
    const fs::path dir = config_value<std::string>(config, "output_dir", "run");
    const auto init_file = config_value<std::string>(config, "init_file", "");

    const ModelParams params = cell.model_params();
    RngStream rng(seed, stream);
    Population init = !init_file.empty()           ? Population::from_file(init_file)
                      : cell.init == "exponential" ? Population::exponential(params.n_agents, params.total_wealth, rng)
                      : cell.init == "oligarch"    ? Population::with_oligarch(params.n_agents, params.total_wealth, cell.c0)
                                                   : Population::equal(params.n_agents, params.total_wealth);
    SimulationOptions opts;
    opts.record_every = cell.record_every;
    opts.top_epsilon = cell.top_epsilon;
    opts.lorenz_every = config_value<std::size_t>(config, "lorenz_every", 0);
    opts.step.taxation = parse_taxation_mode(cell.taxation);
    opts.step.pairing = parse_pairing_mode(cell.pairing);

    const auto record = simulate(params, std::move(init), cell.t_end, rng, opts);
    json full = cell.to_json();
    for (const auto& key : kRunKeys) {
        if (config.contains(key)) full[key] = config.at(key);
    }
    full["seed"] = seed;
    full["stream_id"] = stream;
    write_run(record, dir, full);
    print_warnings(record, err);
    const auto& last = record.samples.back();
    out << "wrote " << dir.string() << ": " << record.steps << " steps, t = " << format_double(last.t)
        << ", top1_share = " << format_double(last.top1_share) << ", gini_P = " << format_double(last.gini_P) << '\n';
    return ok;
}

int cmd_fp_solve(const json& config, const FlagSet& flags, std::ostream& out, std::ostream& err) {
    const SweepCell cell = cell_from_config(config, flags, {"zeta", "tau", "t_end"});
    const fs::path dir = config_value<std::string>(config, "output_dir", "fp_run");
    const ModelParams params = cell.model_params();
    const double mean = params.total_wealth / static_cast<double>(params.n_agents);
    auto edges = WealthGrid::stretched_edges(cell.bins, cell.w_max_factor * mean, cell.width_ratio);
    const auto grid = WealthGrid::exponential(std::move(edges), static_cast<double>(params.n_agents),
                                              (1.0 - cell.c0) * params.total_wealth, cell.c0 * params.total_wealth);
    FpOptions opts;
    opts.dt_max = cell.dt_max;
    opts.record_interval = cell.record_interval;
    opts.top_epsilon = cell.top_epsilon;
    opts.snapshot_every = config_value<std::size_t>(config, "snapshot_every", 0);

    const auto result = fp_run(grid, params, cell.t_end, opts);
    json full = cell.to_json();
    full["engine"] = "fp";
    full["snapshot_every"] = opts.snapshot_every;
    write_run(result.record, dir, full);
    for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
        std::ostringstream csv;
        write_grid_csv(csv, result.snapshots[k].grid);
        write_text_file(dir / "grids" / ("grid_" + std::to_string(k) + ".csv"), csv.str());
    }
    std::ostringstream final_csv;
    write_grid_csv(final_csv, result.final_grid);
    write_text_file(dir / "final_grid.csv", final_csv.str());
    print_warnings(result.record, err);
    const auto& last = result.record.samples.back();
    out << "wrote " << dir.string() << ": " << result.record.steps << " steps, t = " << format_double(last.t)
        << ", c = " << format_double(last.top1_share) << ", c_infinity = "
        << format_double(c_infinity(params.zeta, params.tau_infinity)) << '\n';
    return ok;
}

struct TheoryArgs {
    double zeta = 0.0;
    double tau_inf = 0.0;
    double c0 = 0.01;
    double t_end = 200.0;
    double interval = 1.0;
    std::string trajectory;
    bool integrate = false;
};

int cmd_theory(const TheoryArgs& a, std::ostream& out) {
    const LogisticParams lp{a.zeta, a.tau_inf, a.c0};
    try {
        lp.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(a.t_end > 0.0) || !(a.interval > 0.0)) throw ConfigError("--t-end and --interval must be > 0");

    const auto report = stability(a.zeta, a.tau_inf);
    out << "c_infinity " << format_double(c_infinity(a.zeta, a.tau_inf)) << '\n';
    out << "critical " << (report.critical ? "true" : "false") << '\n';
    for (const auto& fp : report.fixed_points) {
        out << "fixed_point " << format_double(fp.c) << " eigenvalue " << format_double(fp.eigenvalue) << ' '
            << to_string(fp.stability) << '\n';
    }
    out << "stable_point " << format_double(report.stable_point) << '\n';

    if (!a.trajectory.empty()) {
        const auto n = static_cast<std::size_t>(std::ceil(a.t_end / a.interval - 1e-9));
        std::vector<double> t(n + 1);
        for (std::size_t k = 0; k <= n; ++k) t[k] = std::min(a.t_end, a.interval * static_cast<double>(k));
        std::vector<double> c(t.size());
        if (a.integrate) {
            c = logistic_integrate(lp, t);
        } else {
            for (std::size_t k = 0; k < t.size(); ++k) c[k] = logistic_closed_form(lp, t[k]);
        }
        std::ostringstream csv;
        csv << "t,c\n";
        for (std::size_t k = 0; k < t.size(); ++k) csv << format_double(t[k]) << ',' << format_double(c[k]) << '\n';
        const fs::path path = a.trajectory;
        write_text_file(path, csv.str());
        const json config = {{"zeta", a.zeta},     {"tau_inf", a.tau_inf},   {"c0", a.c0},
                             {"t_end", a.t_end},   {"interval", a.interval}, {"method", a.integrate ? "integrate" : "closed_form"}};
        json manifest = {{"schema_version", kSchemaVersion},
                         {"kind", "theory"},
                         {"code_version", code_version()},
                         {"params", {{"zeta", a.zeta}, {"tau_infinity", a.tau_inf}}},
                         {"series", path.filename().string()},
                         {"config", config},
                         {"config_hash", config_hash(config)}};
        fs::path manifest_path = path;
        manifest_path.replace_extension(".manifest.json");
        write_json_file(manifest_path, manifest);
        out << "trajectory " << path.string() << '\n';
    }
    return ok;
}

struct SweepArgs {
    std::string plan;
    std::size_t workers = 0;
    std::string out_dir;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    std::uint64_t master_seed = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    SweepPlan plan;
    try {
        plan = SweepPlan::from_json(read_json_file(a.plan));
        if (a.workers_opt->count() > 0) plan.workers = a.workers;
        if (a.seed_opt->count() > 0) plan.master_seed = a.master_seed;
        if (!a.out_dir.empty()) plan.output_dir = a.out_dir;
        plan.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    const auto result = run_sweep(plan);
    write_aggregate_csv(out, result.cells);
    for (const auto& j : result.jobs) {
        if (!j.ok) err << "job cell " << j.cell << " seed " << j.seed_index << " failed: " << j.error << '\n';
    }
    if (result.failures() > 0) {
        err << result.failures() << " of " << result.jobs.size() << " jobs failed\n";
        return runtime_failure;
    }
    return ok;
}

struct AnalyzeArgs {
    std::vector<std::string> paths;
    std::string out_dir;
    double zeta = -1.0;
    double tau_inf = -1.0;
};

struct AnalysisInput {
    fs::path series;
    fs::path out;
    json manifest; // null when there is none
    fs::path base;  // directory the manifest's relative paths refer to
};

json load_manifest(const fs::path& path) {
    json m = read_json_file(path);
    if (!m.is_object() || !m.contains("schema_version")) {
        throw std::runtime_error(path.string() + ": not a manifest (no schema_version)");
    }
    const int version = m.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
        throw std::runtime_error(path.string() + ": schema_version " + std::to_string(version) +
                                 " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }
    return m;
}

AnalysisInput resolve_input(const fs::path& p, const std::string& out_dir, std::size_t index, std::size_t count) {
    AnalysisInput in;
    if (!fs::exists(p)) throw std::runtime_error(p.string() + ": no such file or directory");
    if (fs::is_directory(p)) {
        in.base = p;
        if (fs::exists(p / "manifest.json")) {
            in.manifest = load_manifest(p / "manifest.json");
            in.series = p / in.manifest.value("series", std::string("series.csv"));
        } else {
            in.series = p / "series.csv";
        }
        in.out = p / "analysis";
    } else {
        in.series = p;
        in.base = p.parent_path();
        fs::path sibling = p;
        sibling.replace_extension(".manifest.json");
        if (fs::exists(sibling)) {
            in.manifest = load_manifest(sibling);
        } else if (fs::exists(in.base / "manifest.json")) {
            const auto m = load_manifest(in.base / "manifest.json");
            if (m.value("series", std::string()) == p.filename().string()) in.manifest = m;
        }
        in.out = in.base / (p.stem().string() + "_analysis");
    }
    if (!out_dir.empty()) {
        in.out = count == 1 ? fs::path(out_dir) : fs::path(out_dir) / (std::to_string(index) + "_" + p.filename().string());
    }
    return in;
}

int analyze_one(const AnalysisInput& in, const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
    const auto table = read_csv(in.series);
    std::vector<double> t, c;
    std::ostringstream gini_csv;
    const std::vector<std::string> series_header = split_csv_line(std::string(kSeriesHeader));
    const bool is_series = table.header == series_header;
    if (is_series) {
        const auto samples = read_series_csv(in.series);
        gini_csv << "t,c,gini_P,gini_p,gini_P_decomposed,decomposition_gap\n";
        for (const auto& s : samples) {
            t.push_back(s.t);
            c.push_back(s.top1_share);
            const double composed = gini_with_condensate(s.top1_share, s.gini_p);
            gini_csv << format_double(s.t) << ',' << format_double(s.top1_share) << ',' << format_double(s.gini_P) << ','
                     << format_double(s.gini_p) << ',' << format_double(composed) << ','
                     << format_double(s.gini_P - composed) << '\n';
        }
    } else if (table.header == std::vector<std::string>{"t", "c"}) {
        for (const auto& row : table.rows) {
            t.push_back(table.number(row, 0));
            c.push_back(table.number(row, 1));
        }
    } else {
        throw std::runtime_error(in.series.string() + ":1: unrecognised header; expected \"" +
                                 std::string(kSeriesHeader) + "\" or \"t,c\"");
    }

    double zeta = a.zeta, tau = a.tau_inf;
    if (!in.manifest.is_null() && in.manifest.contains("params")) {
        const auto& p = in.manifest.at("params");
        if (zeta < 0.0 && p.contains("zeta")) zeta = p.at("zeta").get<double>();
        if (tau < 0.0 && p.contains("tau_infinity")) tau = p.at("tau_infinity").get<double>();
    }

    json fit_json = json::object();
    std::string fit_line;
    try {
        const auto fit = fit_logistic(t, c);
        fit_json = {{"c_hat", fit.c_inf},     {"rate_hat", fit.rate},   {"c0_hat", fit.c0},
                    {"rms_residual", fit.rms_residual}, {"flat", fit.flat}, {"converged", fit.converged}};
        fit_line = "c_hat " + format_double(fit.c_inf) + " rate_hat " + format_double(fit.rate) + " rms_residual " +
                   format_double(fit.rms_residual);
        if (zeta >= 0.0 && tau >= 0.0) {
            const double ct = c_infinity(zeta, tau);
            fit_json["c_theory"] = ct;
            fit_json["abs_error"] = std::abs(fit.c_inf - ct);
            fit_json["rate_theory"] = zeta - tau;
            fit_line += " c_theory " + format_double(ct) + " abs_error " + format_double(std::abs(fit.c_inf - ct));
        }
    } catch (const std::invalid_argument& e) {
        fit_json = {{"error", e.what()}};
        fit_line = std::string("fit unavailable: ") + e.what();
    }

    fs::create_directories(in.out);
    if (is_series) write_text_file(in.out / "gini.csv", gini_csv.str());

    if (!in.manifest.is_null() && in.manifest.contains("lorenz_snapshots")) {
        std::ostringstream lorenz_csv;
        lorenz_csv << "t,reach,gini\n";
        for (const auto& snap : in.manifest.at("lorenz_snapshots")) {
            const fs::path file = in.base / snap.at("file").get<std::string>();
            const auto lt = read_csv(file);
            if (lt.header != std::vector<std::string>{"pop_fraction", "wealth_fraction"}) {
                throw std::runtime_error(file.string() + ":1: expected header pop_fraction,wealth_fraction");
            }
            LorenzCurve curve;
            for (const auto& row : lt.rows) curve.points.emplace_back(lt.number(row, 0), lt.number(row, 1));
            lorenz_csv << format_double(snap.at("t").get<double>()) << ',' << format_double(curve.reach()) << ','
                       << format_double(1.0 - 2.0 * lorenz_area(curve)) << '\n';
        }
        write_text_file(in.out / "lorenz_gini.csv", lorenz_csv.str());
    }

    const json config = {{"source", in.series.string()}, {"zeta", zeta}, {"tau_inf", tau}};
    json manifest = {{"schema_version", kSchemaVersion},
                     {"kind", "analysis"},
                     {"code_version", code_version()},
                     {"source_config_hash", in.manifest.is_null() ? json() : in.manifest.value("config_hash", json())},
                     {"fit", fit_json},
                     {"config", config},
                     {"config_hash", config_hash(config)}};
    write_json_file(in.out / "manifest.json", manifest);
    out << in.series.string() << ": " << fit_line << '\n';
    if (in.manifest.is_null()) err << "note: " << in.series.string() << " has no manifest; schema not checked\n";
    return ok;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        const auto in = resolve_input(a.paths[i], a.out_dir, i, a.paths.size());
        analyze_one(in, a, out, err);
    }
    return ok;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Yard-sale model with wealth-attained advantage: Monte Carlo, Fokker-Planck and logistic theory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", code_version());

    auto* sim = app.add_subcommand("simulate", "agent-based Monte Carlo run");
    FlagSet sim_flags;
    std::string sim_config;
    sim->add_option("--config", sim_config, "JSON run config; flags override its values");
    add_model_flags(sim, sim_flags);
    sim_flags.add<std::uint64_t>(sim, "--seed", "seed", "RNG seed (required)");
    sim_flags.add<std::uint64_t>(sim, "--stream", "stream_id", "RNG stream id");
    sim_flags.add<std::string>(sim, "--init", "init", "equal | exponential | oligarch");
    sim_flags.add<std::string>(sim, "--init-file", "init_file", "initial wealths, one per line");
    sim_flags.add<std::size_t>(sim, "--record-every", "record_every", "steps between observations");
    sim_flags.add<std::size_t>(sim, "--lorenz-every", "lorenz_every", "Lorenz snapshot every k observations");
    sim_flags.add<std::string>(sim, "--taxation", "taxation", "per-sweep | per-transaction");
    sim_flags.add<std::string>(sim, "--pairing", "pairing", "matching | sampled");

    auto* fp = app.add_subcommand("fp-solve", "Fokker-Planck solver with an absorbed condensed part");
    FlagSet fp_flags;
    std::string fp_config;
    fp->add_option("--config", fp_config, "JSON run config; flags override its values");
    add_model_flags(fp, fp_flags);
    fp_flags.add<std::size_t>(fp, "--bins", "bins", "number of wealth bins");
    fp_flags.add<double>(fp, "--w-max-factor", "w_max_factor", "w_max in units of W/N (>= 50)");
    fp_flags.add<double>(fp, "--width-ratio", "width_ratio", "last bin width over first bin width");
    fp_flags.add<double>(fp, "--dt-max", "dt_max", "largest solver step");
    fp_flags.add<double>(fp, "--record-interval", "record_interval", "model time between observations");
    fp_flags.add<std::size_t>(fp, "--snapshot-every", "snapshot_every", "grid snapshot every k observations");

    auto* th = app.add_subcommand("theory", "logistic law: c_infinity, stability, trajectories");
    TheoryArgs theory_args;
    th->add_option("--zeta", theory_args.zeta, "WAA strength")->required();
    th->add_option("--tau-inf", theory_args.tau_inf, "tax rate on the wealthiest")->required();
    th->add_option("--c0", theory_args.c0, "initial condensed fraction");
    th->add_option("--t-end", theory_args.t_end, "trajectory length");
    th->add_option("--interval", theory_args.interval, "trajectory sampling interval");
    th->add_option("--trajectory", theory_args.trajectory, "write the trajectory to this CSV (t,c)");
    th->add_flag("--integrate", theory_args.integrate, "use the adaptive integrator instead of the closed form");

    auto* sw = app.add_subcommand("sweep", "parameter sweep from a JSON plan");
    SweepArgs sweep_args;
    sw->add_option("--plan,--config", sweep_args.plan, "JSON sweep plan")->required();
    sweep_args.workers_opt = sw->add_option("--workers", sweep_args.workers, "worker threads");
    sweep_args.seed_opt = sw->add_option("--master-seed", sweep_args.master_seed, "override the plan's master seed");
    sw->add_option("--out", sweep_args.out_dir, "override the plan's output directory");

    auto* an = app.add_subcommand("analyze", "recompute Gini decomposition, Lorenz Gini and logistic fit");
    AnalyzeArgs analyze_args;
    an->add_option("paths", analyze_args.paths, "run directories or series CSV files")->required();
    an->add_option("--out", analyze_args.out_dir, "output directory");
    an->add_option("--zeta", analyze_args.zeta, "zeta for the c_infinity comparison");
    an->add_option("--tau-inf", analyze_args.tau_inf, "tau_infinity for the c_infinity comparison");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return ok;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return ok;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return usage_error;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags.merged(sim_config), sim_flags, out, err);
        if (fp->parsed()) return cmd_fp_solve(fp_flags.merged(fp_config), fp_flags, out, err);
        if (th->parsed()) return cmd_theory(theory_args, out);
        if (sw->parsed()) return cmd_sweep(sweep_args, out, err);
        if (an->parsed()) return cmd_analyze(analyze_args, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return usage_error;
}

} // namespace ysm::cli
