#include "ysm/fokker_planck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace ysm {

WealthGrid::WealthGrid(std::vector<double> edges, std::vector<double> densities, double condensed)
    : edges_(std::move(edges)), densities_(std::move(densities)), condensed_(condensed) {
    if (edges_.size() < 3) throw std::invalid_argument("WealthGrid needs at least two bins");
    if (densities_.size() + 1 != edges_.size()) {
        throw std::invalid_argument("WealthGrid: " + std::to_string(edges_.size()) + " edges but " +
                                    std::to_string(densities_.size()) + " densities");
    }
    if (edges_.front() != 0.0) throw std::invalid_argument("WealthGrid: first edge must be 0");
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (!(edges_[k] > edges_[k - 1]) || !std::isfinite(edges_[k])) {
            throw std::invalid_argument("WealthGrid: edges must be finite and strictly increasing");
        }
    }
    for (double d : densities_) {
        if (!std::isfinite(d) || d < 0.0) throw std::invalid_argument("WealthGrid: densities must be finite and >= 0");
    }
    if (!std::isfinite(condensed_) || condensed_ < 0.0) {
        throw std::invalid_argument("WealthGrid: condensed wealth must be finite and >= 0");
    }
}

std::vector<double> WealthGrid::stretched_edges(std::size_t n_bins, double w_max, double width_ratio) {
    if (n_bins < 2) throw std::invalid_argument("stretched_edges: need at least two bins");
    if (!(w_max > 0.0)) throw std::invalid_argument("stretched_edges: w_max must be > 0");
    if (!(width_ratio >= 1.0)) throw std::invalid_argument("stretched_edges: width_ratio must be >= 1");
    std::vector<double> edges(n_bins + 1);
    if (width_ratio == 1.0) {
        for (std::size_t k = 0; k <= n_bins; ++k) edges[k] = w_max * static_cast<double>(k) / static_cast<double>(n_bins);
    } else {
        const double s = std::log(width_ratio) / static_cast<double>(n_bins - 1);
        const double a = w_max / std::expm1(s * static_cast<double>(n_bins));
        for (std::size_t k = 0; k <= n_bins; ++k) edges[k] = a * std::expm1(s * static_cast<double>(k));
    }
    edges.back() = w_max;
    return edges;
}

WealthGrid WealthGrid::exponential(std::vector<double> edges, double n_agents, double classical_wealth,
                                   double condensed_wealth) {
    if (!(n_agents > 0.0) || !(classical_wealth > 0.0)) {
        throw std::invalid_argument("exponential grid: agents and classical wealth must be > 0");
    }
    const std::size_t bins = edges.size() - 1;
    std::vector<double> m(bins), h(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        m[k] = 0.5 * (edges[k] + edges[k + 1]);
        h[k] = edges[k + 1] - edges[k];
    }
    const double target = classical_wealth / n_agents;
    if (!(target > m.front() && target < m.back())) {
        throw std::invalid_argument("exponential grid: mean wealth " + format_double(target) +
                                    " is not resolved by the grid");
    }
    // The centre-weighted mean falls monotonically with the decay rate; bisect on its log.
    auto mean_for = [&](double rate) {
        double cnt = 0.0, wealth = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double c = std::exp(-rate * (m[k] - m.front())) * h[k];
            cnt += c;
            wealth += c * m[k];
        }
        return wealth / cnt;
    };
    double lo = std::log(1e-6 / target), hi = std::log(1e6 / target);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_for(std::exp(mid)) > target) lo = mid;
        else hi = mid;
    }
    const double rate = std::exp(0.5 * (lo + hi));
    std::vector<double> density(bins);
    double cnt = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        density[k] = std::exp(-rate * (m[k] - m.front()));
        cnt += density[k] * h[k];
    }
    for (auto& d : density) d *= n_agents / cnt;
    return WealthGrid(std::move(edges), std::move(density), condensed_wealth);
}

WealthGrid WealthGrid::spike(std::vector<double> edges, double n_agents, double w) {
    if (!(w >= 0.0 && w < edges.back())) throw std::domain_error("spike position outside the grid");
    const auto k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), w) - edges.begin()) - 1;
    std::vector<double> density(edges.size() - 1, 0.0);
    density[k] = n_agents / (edges[k + 1] - edges[k]);
    return WealthGrid(std::move(edges), std::move(density));
}

WealthGrid WealthGrid::from_samples(std::vector<double> edges, std::span<const double> wealths) {
    const std::size_t bins = edges.size() - 1;
    std::vector<double> counts(bins, 0.0);
    double condensed = 0.0;
    const double m0 = 0.5 * (edges[0] + edges[1]);
    for (double x : wealths) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("from_samples: wealths must be finite and >= 0");
        if (x >= edges.back()) {
            counts[0] += 1.0;
            condensed += x - m0;
            continue;
        }
        const auto k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin()) - 1;
        counts[k] += 1.0;
    }
    std::vector<double> density(bins);
    for (std::size_t k = 0; k < bins; ++k) density[k] = counts[k] / (edges[k + 1] - edges[k]);
    return WealthGrid(std::move(edges), std::move(density), condensed);
}

std::vector<double> WealthGrid::centres() const {
    std::vector<double> m(bins());
    for (std::size_t k = 0; k < bins(); ++k) m[k] = centre(k);
    return m;
}

std::vector<double> WealthGrid::counts() const {
    std::vector<double> n(bins());
    for (std::size_t k = 0; k < bins(); ++k) n[k] = densities_[k] * width(k);
    return n;
}

double WealthGrid::n_agents() const {
    double s = 0.0;
    for (std::size_t k = 0; k < bins(); ++k) s += densities_[k] * width(k);
    return s;
}

double WealthGrid::classical_wealth() const {
    double s = 0.0;
    for (std::size_t k = 0; k < bins(); ++k) s += densities_[k] * width(k) * centre(k);
    return s;
}

double WealthGrid::variance() const {
    const double n = n_agents();
    const double mean = classical_wealth() / n;
    double s = 0.0;
    for (std::size_t k = 0; k < bins(); ++k) {
        const double d = centre(k) - mean;
        s += densities_[k] * width(k) * d * d;
    }
    return s / n;
}

WealthDistribution WealthGrid::distribution() const {
    const auto m = centres();
    const auto n = counts();
    return WealthDistribution::from_atoms(m, n, condensed_);
}

void write_grid_csv(std::ostream& out, const WealthGrid& grid) {
    out << "w_center,density\n";
    for (std::size_t k = 0; k < grid.bins(); ++k) {
        out << format_double(grid.centre(k)) << ',' << format_double(grid.densities()[k]) << '\n';
    }
}

double drift_M1(const WealthDistribution& dist, double z, const ModelParams& params) {
    const auto pm = partial_moments(dist, z);
    const double n = dist.n_agents();
    const double w = dist.total_wealth();
    const double t = total_tax_rate(dist, params);
    const double bracket = 2.0 * (n / w) * pm.half_second - 2.0 * z * pm.lorenz - z * z * (n / w) * pm.pareto + z;
    return t / n - z * params.rho(z) - params.zeta * bracket;
}

double diffusion_M2(const WealthDistribution& dist, double z) {
    const auto pm = partial_moments(dist, z);
    return 2.0 * pm.half_second + z * z * pm.pareto;
}

namespace {

void check_on_grid(const WealthGrid& grid, double z) {
    if (!(z >= 0.0 && z <= grid.w_max())) {
        throw std::domain_error("wealth " + format_double(z) + " outside the grid [0, " + format_double(grid.w_max()) +
                                "]");
    }
}

} // namespace

double drift_M1(const WealthGrid& grid, double z, const ModelParams& params) {
    check_on_grid(grid, z);
    return drift_M1(grid.distribution(), z, params);
}

double diffusion_M2(const WealthGrid& grid, double z) {
    check_on_grid(grid, z);
    return diffusion_M2(grid.distribution(), z);
}

FpSolver::FpSolver(ModelParams params, double safety) : params_(std::move(params)), safety_(safety) {
    params_.validate();
    if (!(safety_ > 0.0 && safety_ <= 1.0)) throw std::invalid_argument("FpSolver: safety factor must lie in (0, 1]");
}

void FpSolver::compute_coefficients(const WealthGrid& grid) {
    const std::size_t bins = grid.bins();
    m_.resize(bins);
    n_.resize(bins);
    m1_.resize(bins);
    m2_.resize(bins);
    const auto dens = grid.densities();
    double n_total = 0.0, classical = 0.0, tax = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        m_[k] = grid.centre(k);
        n_[k] = dens[k] * grid.width(k);
        n_total += n_[k];
        classical += n_[k] * m_[k];
        tax += n_[k] * params_.rho(m_[k]) * m_[k];
    }
    const double condensed = grid.condensed();
    const double w_total = classical + condensed;
    tax += params_.tau_infinity * condensed;
    const double zeta = params_.zeta;

    // Prefix sums over bins strictly below k: agents, wealth, squared wealth.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        const double z = m_[k];
        const double above = n_total - s0;
        m2_[k] = (s2 + z * z * above) / n_total;
        const double bracket = s2 / w_total - 2.0 * z * s1 / w_total - z * z * above / w_total + z;
        m1_[k] = tax / n_total - z * params_.rho(z) - zeta * bracket;
        s0 += n_[k];
        s1 += n_[k] * z;
        s2 += n_[k] * z * z;
    }
}

void FpSolver::compute_rates(const WealthGrid& grid) {
    const std::size_t bins = grid.bins();
    up_.assign(bins, 0.0);
    down_.assign(bins, 0.0);
    virtual_centre_ = grid.w_max() + 0.5 * grid.width(bins - 1);

    auto rates = [&](std::size_t k, double m1) {
        const double dp = (k + 1 < bins ? m_[k + 1] : virtual_centre_) - m_[k];
        const double dm = m_[k] - m_[k - 1];
        const double m2 = std::max({m2_[k], m1 * dp, -m1 * dm});
        down_[k] = (m2 - m1 * dp) / (dm * (dp + dm));
        up_[k] = (m2 + m1 * dm) / (dp * (dp + dm));
        const double dmin = std::min(dp, dm);
        double limit = dmin * dmin / m2;
        if (m1 != 0.0) limit = std::min(limit, dmin / std::abs(m1));
        bound_ = std::min(bound_, limit);
    };

    bound_ = std::numeric_limits<double>::infinity();
    // The first bin has no lower neighbour: it can only drift up.
    const double dp0 = m_[1] - m_[0];
    up_[0] = std::max(m1_[0], 0.0) / dp0;
    if (up_[0] > 0.0) bound_ = std::min(bound_, 1.0 / up_[0]);
    double n_total = 0.0;
    for (double c : n_) n_total += c;
    residual_ = n_[0] * (up_[0] * dp0 - m1_[0]);
    const double others = n_total - n_[0];
    const double shift = others > 0.0 ? residual_ / others : 0.0;
    for (std::size_t k = 1; k < bins; ++k) rates(k, m1_[k] - shift);
}

double FpSolver::admissible_dt(const WealthGrid& grid) {
    compute_coefficients(grid);
    compute_rates(grid);
    return safety_ * bound_;
}

FpStepReport FpSolver::step(WealthGrid& grid, double dt) {
    const double admissible = admissible_dt(grid);
    if (!(dt > 0.0)) throw std::invalid_argument("fp step: dt must be > 0");
    if (dt > admissible * (1.0 + 1e-12)) {
        throw StabilityError("fp step: dt = " + format_double(dt) + " exceeds the admissible step " +
                                 format_double(admissible),
                             admissible);
    }
    const std::size_t bins = grid.bins();
    FpStepReport report;
    report.dt = dt;
    report.boundary_residual = residual_;

    std::vector<double> next(n_);
    for (std::size_t k = 0; k < bins; ++k) {
        const double out_up = dt * up_[k] * n_[k];
        const double out_down = dt * down_[k] * n_[k];
        next[k] -= out_up + out_down;
        if (k + 1 < bins) next[k + 1] += out_up;
        else report.outflow_agents = out_up;
        if (k > 0) next[k - 1] += out_down;
    }
    next[0] += report.outflow_agents;
    report.outflow_wealth = report.outflow_agents * (virtual_centre_ - m_[0]);

    double classical = 0.0;
    for (std::size_t k = 0; k < bins; ++k) classical += n_[k] * m_[k];
    const double condensed = grid.condensed();
    const double c = condensed / (classical + condensed);
    const double gain = dt * (-params_.tau_infinity * condensed + params_.zeta * c * classical);
    grid.set_condensed(std::max(0.0, condensed + gain + report.outflow_wealth));

    double largest = 0.0;
    for (double x : next) largest = std::max(largest, x);
    auto dens = grid.mutable_densities();
    for (std::size_t k = 0; k < bins; ++k) {
        if (next[k] < 0.0) {
            if (next[k] < -1e-12 * largest) {
                throw std::runtime_error("fp step: negative density " + format_double(next[k]) + " in bin " +
                                         std::to_string(k) + " (largest count " + format_double(largest) + ")");
            }
            next[k] = 0.0;
            ++report.clipped_cells;
        }
        dens[k] = next[k] / grid.width(k);
    }
    return report;
}

WealthGrid fp_step(const WealthGrid& grid, const ModelParams& params, double dt_solver) {
    FpSolver solver(params);
    WealthGrid next = grid;
    solver.step(next, dt_solver);
    return next;
}

RunSample observe_grid(const WealthGrid& grid, double t, double top_epsilon) {
    const auto dist = grid.distribution();
    RunSample s;
    s.t = t;
    s.top1_share = dist.condensed_fraction();
    // Richest epsilon of the agents, taking fractional bins from the top.
    double remaining = top_epsilon * dist.n_agents();
    double wealth = dist.condensed_wealth();
    const auto pos = dist.positions();
    const auto cnt = dist.counts();
    for (std::size_t i = pos.size(); i-- > 0 && remaining > 0.0;) {
        const double take = std::min(remaining, cnt[i]);
        wealth += take * pos[i];
        remaining -= take;
    }
    s.top_eps_share = wealth / dist.total_wealth();
    s.gini_P = gini(dist);
    s.gini_p = dist.classical_wealth() > 0.0 ? classical_gini(dist) : 0.0;
    return s;
}

FpRunResult fp_run(const WealthGrid& init, const ModelParams& params, double t_end, const FpOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    if (!(t_end > 0.0)) throw std::invalid_argument("fp_run: t_end must be > 0");
    if (!(options.dt_max > 0.0)) throw std::invalid_argument("fp_run: dt_max must be > 0");
    if (!(options.record_interval > 0.0)) throw std::invalid_argument("fp_run: record_interval must be > 0");

    FpSolver solver(params);
    FpRunResult result{RunRecord{}, {}, init};
    WealthGrid& grid = result.final_grid;
    RunRecord& record = result.record;
    record.engine = "fp";
    record.params = params.to_json();
    record.params["t_end"] = t_end;
    record.params["dt_max"] = options.dt_max;
    record.params["record_interval"] = options.record_interval;
    record.params["bins"] = init.bins();
    record.params["w_max"] = init.w_max();
    record.top_epsilon = options.top_epsilon;

    const double n0 = init.n_agents();
    const double w0 = init.total_wealth();
    std::size_t observations = 0;
    double t = 0.0;
    auto observe = [&]() {
        auto s = observe_grid(grid, t, options.top_epsilon);
        s.wealth_residual = (grid.total_wealth() - w0) / w0;
        s.clipped_bias_count = record.clipped_bias;
        record.max_abs_wealth_residual = std::max(record.max_abs_wealth_residual, std::abs(s.wealth_residual));
        record.max_abs_agent_residual =
            std::max(record.max_abs_agent_residual, std::abs(grid.n_agents() - n0) / n0);
        record.samples.push_back(s);
        if (options.snapshot_every > 0 && observations % options.snapshot_every == 0) {
            result.snapshots.push_back({t, grid});
            record.lorenz.push_back({t, lorenz_curve(grid.distribution())});
        }
        ++observations;
    };

    observe();
    std::uint64_t k = 1;
    double outflow = 0.0;
    while (t < t_end) {
        const double next_record = std::min(t_end, options.record_interval * static_cast<double>(k));
        while (t < next_record) {
            double dt = std::min(options.dt_max, solver.admissible_dt(grid));
            if (!(dt > 0.0) || !std::isfinite(dt)) {
                throw std::runtime_error("fp_run: no admissible step at t = " + format_double(t));
            }
            bool lands = false;
            if (t + dt >= next_record) {
                dt = next_record - t;
                lands = true;
            }
            FpStepReport rep;
            try {
                rep = solver.step(grid, dt);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("fp_run aborted at t = " + format_double(t) + ": " + e.what());
            }
            record.clipped_bias += rep.clipped_cells;
            outflow += rep.outflow_wealth;
            ++record.steps;
            t = lands ? next_record : t + dt;
        }
        observe();
        ++k;
    }
    record.params["absorbed_wealth"] = outflow;
    if (record.clipped_bias > 0) {
        record.warnings.push_back("clipped " + std::to_string(record.clipped_bias) + " slightly negative densities");
    }
    record.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace ysm
