#include "ysm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "ysm/fokker_planck.hpp"
#include "ysm/logistic_fit.hpp"
#include "ysm/mc_engine.hpp"
#include "ysm/population.hpp"
#include "ysm/rng.hpp"
#include "ysm/theory.hpp"

namespace ysm {

std::string to_string(Engine e) {
    switch (e) {
    case Engine::mc: return "mc";
    case Engine::fp: return "fp";
    case Engine::theory: return "theory";
    }
    return "mc";
}

Engine parse_engine(const std::string& s) {
    if (s == "mc") return Engine::mc;
    if (s == "fp") return Engine::fp;
    if (s == "theory") return Engine::theory;
    throw std::invalid_argument("unknown engine \"" + s + "\" (expected mc, fp or theory)");
}

ModelParams SweepCell::model_params() const {
    nlohmann::json j;
    j["zeta"] = zeta;
    j["tax"] = tax;
    j["sigma"] = sigma;
    j["dt"] = dt;
    j["n_agents"] = n_agents;
    j["total_wealth"] = total_wealth > 0.0 ? total_wealth : static_cast<double>(n_agents);
    return ModelParams::from_json(j);
}

nlohmann::json SweepCell::to_json() const {
    return {{"zeta", zeta},
            {"tax", tax},
            {"sigma", sigma},
            {"n_agents", n_agents},
            {"total_wealth", total_wealth},
            {"dt", dt},
            {"t_end", t_end},
            {"init", init},
            {"c0", c0},
            {"record_every", record_every},
            {"top_epsilon", top_epsilon},
            {"taxation", taxation},
            {"pairing", pairing},
            {"bins", bins},
            {"w_max_factor", w_max_factor},
            {"width_ratio", width_ratio},
            {"dt_max", dt_max},
            {"record_interval", record_interval}};
}

SweepCell SweepCell::from_json(const nlohmann::json& j, const SweepCell& base) {
    if (!j.is_object()) throw std::invalid_argument("sweep cell must be a JSON object");
    static const std::vector<std::string> known = {
        "zeta", "tax", "tau", "sigma", "n_agents", "total_wealth", "dt", "t_end", "init", "c0", "record_every",
        "top_epsilon", "taxation", "pairing", "bins", "w_max_factor", "width_ratio", "dt_max", "record_interval"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument("unknown sweep cell field \"" + key + "\"");
        }
    }
    SweepCell c = base;
    c.zeta = j.value("zeta", c.zeta);
    if (j.contains("tau")) c.tax = j.at("tau");
    if (j.contains("tax")) c.tax = j.at("tax");
    if (j.contains("sigma")) c.sigma = j.at("sigma");
    c.n_agents = j.value("n_agents", c.n_agents);
    c.total_wealth = j.value("total_wealth", c.total_wealth);
    c.dt = j.value("dt", c.dt);
    c.t_end = j.value("t_end", c.t_end);
    c.init = j.value("init", c.init);
    c.c0 = j.value("c0", c.c0);
    c.record_every = j.value("record_every", c.record_every);
    c.top_epsilon = j.value("top_epsilon", c.top_epsilon);
    c.taxation = j.value("taxation", c.taxation);
    c.pairing = j.value("pairing", c.pairing);
    c.bins = j.value("bins", c.bins);
    c.w_max_factor = j.value("w_max_factor", c.w_max_factor);
    c.width_ratio = j.value("width_ratio", c.width_ratio);
    c.dt_max = j.value("dt_max", c.dt_max);
    c.record_interval = j.value("record_interval", c.record_interval);
    return c;
}

std::vector<std::string> SweepPlan::validation_errors() const {
    std::vector<std::string> errors;
    if (seeds_per_cell < 1) errors.push_back("seeds_per_cell must be >= 1");
    if (!(terminal_window > 0.0 && terminal_window <= 1.0)) errors.push_back("terminal_window must lie in (0, 1]");
    if (cells.empty()) errors.push_back("plan has no cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const std::string where = "cell " + std::to_string(i) + ": ";
        try {
            for (const auto& e : c.model_params().validation_errors()) errors.push_back(where + e);
        } catch (const std::exception& e) {
            errors.push_back(where + e.what());
        }
        if (!(c.t_end > 0.0)) errors.push_back(where + "t_end must be > 0");
        if (c.init != "equal" && c.init != "exponential" && c.init != "oligarch") {
            errors.push_back(where + "init must be equal, exponential or oligarch");
        }
        if (!(c.c0 >= 0.0 && c.c0 < 1.0)) errors.push_back(where + "c0 must lie in [0, 1)");
        if (c.record_every < 1) errors.push_back(where + "record_every must be >= 1");
        if (!(c.top_epsilon > 0.0 && c.top_epsilon <= 1.0)) errors.push_back(where + "top_epsilon must lie in (0, 1]");
        if (c.taxation != "per-sweep" && c.taxation != "per-transaction") {
            errors.push_back(where + "taxation must be per-sweep or per-transaction");
        }
        if (c.pairing != "matching" && c.pairing != "sampled") errors.push_back(where + "pairing must be matching or sampled");
        if (c.bins < 8) errors.push_back(where + "bins must be >= 8");
        if (!(c.w_max_factor >= 50.0)) errors.push_back(where + "w_max_factor must be >= 50");
        if (!(c.record_interval > 0.0)) errors.push_back(where + "record_interval must be > 0");
        if (!(c.dt_max > 0.0)) errors.push_back(where + "dt_max must be > 0");
    }
    return errors;
}

void SweepPlan::validate() const {
    const auto errors = validation_errors();
    if (errors.empty()) return;
    std::string msg = "invalid sweep plan:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
}

SweepPlan SweepPlan::from_json(const nlohmann::json& j) {
    SweepPlan plan;
    if (!j.is_object()) throw std::invalid_argument("sweep plan must be a JSON object");
    plan.engine = parse_engine(j.value("engine", std::string("mc")));
    plan.master_seed = j.at("master_seed").get<std::uint64_t>();
    plan.seeds_per_cell = j.value("seeds_per_cell", plan.seeds_per_cell);
    plan.workers = j.value("workers", plan.workers);
    plan.terminal_window = j.value("terminal_window", plan.terminal_window);
    plan.output_dir = j.value("output_dir", plan.output_dir.string());

    SweepCell defaults;
    if (j.contains("defaults")) defaults = SweepCell::from_json(j.at("defaults"), defaults);

    if (j.contains("cells") == j.contains("grid")) {
        throw std::invalid_argument("sweep plan needs exactly one of \"cells\" or \"grid\"");
    }
    if (j.contains("cells")) {
        for (const auto& c : j.at("cells")) plan.cells.push_back(SweepCell::from_json(c, defaults));
    } else {
        const auto& grid = j.at("grid");
        static const std::vector<std::string> axes = {"zeta", "tau", "n_agents", "dt", "t_end"};
        for (const auto& [key, value] : grid.items()) {
            if (std::find(axes.begin(), axes.end(), key) == axes.end()) {
                throw std::invalid_argument("unknown grid axis \"" + key + "\"");
            }
            if (!value.is_array() || value.empty()) throw std::invalid_argument("grid axis \"" + key + "\" must be a non-empty array");
        }
        std::vector<nlohmann::json> points{nlohmann::json::object()};
        for (const auto& axis : axes) {
            if (!grid.contains(axis)) continue;
            std::vector<nlohmann::json> next;
            for (const auto& p : points) {
                for (const auto& v : grid.at(axis)) {
                    auto q = p;
                    q[axis] = v;
                    next.push_back(std::move(q));
                }
            }
            points = std::move(next);
        }
        for (const auto& p : points) plan.cells.push_back(SweepCell::from_json(p, defaults));
    }
    return plan;
}

nlohmann::json SweepPlan::to_json() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells) cells_json.push_back(c.to_json());
    return {{"engine", to_string(engine)},       {"master_seed", master_seed},
            {"seeds_per_cell", seeds_per_cell},  {"workers", workers},
            {"terminal_window", terminal_window}, {"output_dir", output_dir.string()},
            {"cells", cells_json}};
}

TerminalStats terminal_stats(const std::vector<RunSample>& samples, double window) {
    TerminalStats out;
    if (samples.empty()) throw std::invalid_argument("terminal_stats: no samples");
    const double t0 = samples.front().t;
    const double t1 = samples.back().t;
    const double cut = t0 + (1.0 - window) * (t1 - t0);
    double top = 0.0, g = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
        if (s.t + 1e-12 * std::max(1.0, std::abs(t1)) < cut) continue;
        top += s.top1_share;
        g += s.gini_P;
        ++n;
    }
    out.top1 = top / static_cast<double>(n);
    out.gini = g / static_cast<double>(n);
    out.rate = std::numeric_limits<double>::quiet_NaN();
    if (samples.size() >= 10) {
        std::vector<double> t, c;
        for (const auto& s : samples) {
            t.push_back(s.t);
            c.push_back(s.top1_share);
        }
        try {
            const auto fit = fit_logistic(t, c);
            out.rate = fit.rate;
        } catch (const std::exception&) {
        }
    }
    return out;
}

std::size_t SweepResult::failures() const {
    return static_cast<std::size_t>(std::count_if(jobs.begin(), jobs.end(), [](const JobResult& j) { return !j.ok; }));
}

namespace {

RunRecord run_theory(const SweepCell& cell, const ModelParams& params) {
    RunRecord record;
    record.engine = "theory";
    record.params = params.to_json();
    record.params["t_end"] = cell.t_end;
    record.params["c0"] = cell.c0;
    record.params["record_interval"] = cell.record_interval;
    const LogisticParams lp{params.zeta, params.tau_infinity, cell.c0};
    const auto n = static_cast<std::size_t>(std::ceil(cell.t_end / cell.record_interval - 1e-9));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = std::min(cell.t_end, cell.record_interval * static_cast<double>(k));
        const double c = logistic_closed_form(lp, t);
        record.samples.push_back({t, c, c, nan, nan, 0.0, 0});
    }
    return record;
}

} // namespace

RunRecord run_job(const SweepPlan& plan, std::size_t cell_index, std::size_t seed_index) {
    const SweepCell& cell = plan.cells.at(cell_index);
    const ModelParams params = cell.model_params();
    params.validate();
    const auto stream = derive_stream_id(cell_index, seed_index);

    switch (plan.engine) {
    case Engine::mc: {
        RngStream rng(plan.master_seed, stream);
        Population init = cell.init == "exponential" ? Population::exponential(params.n_agents, params.total_wealth, rng)
                          : cell.init == "oligarch"  ? Population::with_oligarch(params.n_agents, params.total_wealth, cell.c0)
                                                     : Population::equal(params.n_agents, params.total_wealth);
        SimulationOptions opts;
        opts.record_every = cell.record_every;
        opts.top_epsilon = cell.top_epsilon;
        opts.step.taxation = parse_taxation_mode(cell.taxation);
        opts.step.pairing = parse_pairing_mode(cell.pairing);
        return simulate(params, std::move(init), cell.t_end, rng, opts);
    }
    case Engine::fp: {
        const double mean = params.total_wealth / static_cast<double>(params.n_agents);
        auto edges = WealthGrid::stretched_edges(cell.bins, cell.w_max_factor * mean, cell.width_ratio);
        const auto grid = WealthGrid::exponential(std::move(edges), static_cast<double>(params.n_agents),
                                                  (1.0 - cell.c0) * params.total_wealth, cell.c0 * params.total_wealth);
        FpOptions opts;
        opts.dt_max = cell.dt_max;
        opts.record_interval = cell.record_interval;
        opts.top_epsilon = cell.top_epsilon;
        auto result = fp_run(grid, params, cell.t_end, opts);
        result.record.seed = plan.master_seed;
        result.record.stream_id = stream;
        return result.record;
    }
    case Engine::theory: {
        auto record = run_theory(cell, params);
        record.seed = plan.master_seed;
        record.stream_id = stream;
        return record;
    }
    }
    throw std::logic_error("unreachable engine");
}

void write_aggregate_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
    out << kAggregateHeader << '\n';
    for (const auto& s : cells) {
        const auto params = s.cell.model_params();
        out << format_double(s.cell.zeta) << ',' << format_double(params.tau_infinity) << ',' << s.cell.n_agents << ','
            << s.seeds << ',' << format_double(s.mean_top1) << ',' << format_double(s.se_top1) << ','
            << format_double(s.mean_gini) << ',' << format_double(s.c_theory) << ',' << format_double(s.abs_error)
            << ',' << format_double(s.se_gini) << ',' << format_double(s.mean_rate) << ','
            << format_double(s.se_rate) << ',' << s.failed << '\n';
    }
}

namespace {

void mean_and_se(const std::vector<double>& xs, double& mean, double& se) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (xs.empty()) {
        mean = se = nan;
        return;
    }
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        se = nan;
        return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

} // namespace

SweepResult run_sweep(const SweepPlan& plan, const std::optional<std::vector<std::size_t>>& job_order) {
    plan.validate();
    const std::size_t n_jobs = plan.cells.size() * plan.seeds_per_cell;
    std::vector<std::size_t> order(n_jobs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (job_order) {
        auto sorted = *job_order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != order) throw std::invalid_argument("job_order is not a permutation of the sweep's jobs");
        order = *job_order;
    }

    std::filesystem::create_directories(plan.output_dir);
    write_json_file(plan.output_dir / "plan.json", plan.to_json());

    SweepResult result;
    result.jobs.resize(n_jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= n_jobs) return;
            const std::size_t job = order[slot];
            JobResult& r = result.jobs[job];
            r.cell = job / plan.seeds_per_cell;
            r.seed_index = job % plan.seeds_per_cell;
            r.stream_id = derive_stream_id(r.cell, r.seed_index);
            r.dir = plan.output_dir / ("cell_" + std::to_string(r.cell)) / ("seed_" + std::to_string(r.seed_index));
            try {
                const auto record = run_job(plan, r.cell, r.seed_index);
                nlohmann::json config = plan.cells[r.cell].to_json();
                config["engine"] = to_string(plan.engine);
                config["master_seed"] = plan.master_seed;
                config["seed_index"] = r.seed_index;
                write_run(record, r.dir, config);
                r.terminal = terminal_stats(record.samples, plan.terminal_window);
                r.ok = true;
            } catch (const std::exception& e) {
                r.ok = false;
                r.error = e.what();
                try {
                    std::filesystem::create_directories(r.dir);
                    write_text_file(r.dir / "error.txt", r.error + "\n");
                } catch (const std::exception&) {
                }
            }
        }
    };

    std::size_t workers = plan.workers > 0 ? plan.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_jobs);
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t c = 0; c < plan.cells.size(); ++c) {
        CellSummary s;
        s.cell = plan.cells[c];
        std::vector<double> tops, ginis, rates;
        for (std::size_t k = 0; k < plan.seeds_per_cell; ++k) {
            const auto& j = result.jobs[c * plan.seeds_per_cell + k];
            if (!j.ok) {
                ++s.failed;
                continue;
            }
            tops.push_back(j.terminal.top1);
            ginis.push_back(j.terminal.gini);
            if (std::isfinite(j.terminal.rate)) rates.push_back(j.terminal.rate);
        }
        s.seeds = tops.size();
        mean_and_se(tops, s.mean_top1, s.se_top1);
        mean_and_se(ginis, s.mean_gini, s.se_gini);
        mean_and_se(rates, s.mean_rate, s.se_rate);
        const auto params = s.cell.model_params();
        s.c_theory = c_infinity(params.zeta, params.tau_infinity);
        s.abs_error = std::abs(s.mean_top1 - s.c_theory);
        result.cells.push_back(s);
    }

    std::ostringstream agg;
    write_aggregate_csv(agg, result.cells);
    write_text_file(plan.output_dir / "aggregate.csv", agg.str());
    return result;
}

} // namespace ysm
