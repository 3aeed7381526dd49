#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ysm/distribution.hpp"
#include "ysm/model_params.hpp"
#include "ysm/run_record.hpp"

namespace ysm {

// Piecewise-constant agent density on bins [edges[k], edges[k+1]) plus the
// condensed wealth that has left through the far face at w_max. Each bin's
// agents sit at the bin centre for every moment computed from the grid.
class WealthGrid {
public:
    WealthGrid(std::vector<double> edges, std::vector<double> densities, double condensed = 0.0);

    // Edges e_k = a (exp(k s) - 1), k = 0..n_bins, with e_n = w_max and the last
    // bin width_ratio times wider than the first: uniform near 0, geometric far out.
    static std::vector<double> stretched_edges(std::size_t n_bins, double w_max, double width_ratio = 4.0);

    // Exponential classical density holding n_agents and classical_wealth exactly
    // at bin-centre resolution, plus condensed_wealth in the condensed part.
    static WealthGrid exponential(std::vector<double> edges, double n_agents, double classical_wealth,
                                  double condensed_wealth = 0.0);
    // All agents in the bin containing w.
    static WealthGrid spike(std::vector<double> edges, double n_agents, double w);
    // Histogram of agent wealths; agents at or beyond w_max are counted in the
    // first bin and their wealth above its centre goes to the condensed part.
    static WealthGrid from_samples(std::vector<double> edges, std::span<const double> wealths);

    [[nodiscard]] std::size_t bins() const { return densities_.size(); }
    [[nodiscard]] std::span<const double> edges() const { return edges_; }
    [[nodiscard]] std::span<const double> densities() const { return densities_; }
    [[nodiscard]] std::span<double> mutable_densities() { return densities_; }
    [[nodiscard]] double condensed() const { return condensed_; }
    void set_condensed(double c) { condensed_ = c; }

    [[nodiscard]] double w_max() const { return edges_.back(); }
    [[nodiscard]] double width(std::size_t k) const { return edges_[k + 1] - edges_[k]; }
    [[nodiscard]] double centre(std::size_t k) const { return 0.5 * (edges_[k] + edges_[k + 1]); }
    [[nodiscard]] std::vector<double> centres() const;
    [[nodiscard]] std::vector<double> counts() const;

    [[nodiscard]] double n_agents() const;
    [[nodiscard]] double classical_wealth() const;
    [[nodiscard]] double total_wealth() const { return classical_wealth() + condensed_; }
    [[nodiscard]] double condensed_fraction() const { return condensed_ / total_wealth(); }
    [[nodiscard]] double variance() const;

    [[nodiscard]] WealthDistribution distribution() const;

private:
    std::vector<double> edges_;
    std::vector<double> densities_;
    double condensed_ = 0.0;
};

// w_center,density
void write_grid_csv(std::ostream& out, const WealthGrid& grid);

// Drift T/N - z rho(z) - zeta [2 (N/W) B(z) - 2 z L(z) - z^2 (N/W) A(z) + z]. W
// includes the condensed part, so the -zeta c z loss to the oligarch is included.
[[nodiscard]] double drift_M1(const WealthDistribution& dist, double z, const ModelParams& params);
// Diffusion 2 B(z) + z^2 A(z) = E[min(z, x)^2].
[[nodiscard]] double diffusion_M2(const WealthDistribution& dist, double z);

// Grid overloads. Throw std::domain_error for z outside [0, w_max].
[[nodiscard]] double drift_M1(const WealthGrid& grid, double z, const ModelParams& params);
[[nodiscard]] double diffusion_M2(const WealthGrid& grid, double z);

class StabilityError : public std::runtime_error {
public:
    StabilityError(const std::string& what, double admissible_dt)
        : std::runtime_error(what), admissible_dt_(admissible_dt) {}
    [[nodiscard]] double admissible_dt() const { return admissible_dt_; }

private:
    double admissible_dt_;
};

struct FpStepReport {
    double dt = 0.0;
    double outflow_agents = 0.0; // agents absorbed at w_max and returned to the first bin
    double outflow_wealth = 0.0; // wealth they carried into the condensed part
    std::size_t clipped_cells = 0;
    double boundary_residual = 0.0; // drift the first bin could not realize, spread over the others
};

// Explicit conservative stepper. Agents in bin k hop to the neighbouring centres
// at rates chosen so that the mean and mean-square displacement per unit time
// are M1 and M2 at the centre; the face fluxes are the net hops. The top bin
// hops to a virtual centre beyond w_max: those agents are returned to the first
// bin and the wealth they carried joins the condensed part. The condensed part
// gains zeta c W_classical from transactions and pays tau_inf times its wealth
// into the redistribution pool.
class FpSolver {
public:
    explicit FpSolver(ModelParams params, double safety = 0.4);

    // Largest stable step for the grid's current coefficients.
    [[nodiscard]] double admissible_dt(const WealthGrid& grid);

    // Throws StabilityError if dt exceeds admissible_dt(grid), and
    // std::runtime_error if a density falls below -1e-12 times the largest one.
    FpStepReport step(WealthGrid& grid, double dt);

    [[nodiscard]] const ModelParams& params() const { return params_; }

private:
    void compute_coefficients(const WealthGrid& grid);
    void compute_rates(const WealthGrid& grid);

    ModelParams params_;
    double safety_;
    std::vector<double> m_;     // centres
    std::vector<double> n_;     // agent counts
    std::vector<double> m1_;
    std::vector<double> m2_;
    std::vector<double> up_;    // hop rate to the next centre
    std::vector<double> down_;  // hop rate to the previous centre
    double virtual_centre_ = 0.0;
    double residual_ = 0.0;
    double bound_ = 0.0;
};

// One step; see FpSolver::step.
WealthGrid fp_step(const WealthGrid& grid, const ModelParams& params, double dt_solver);

struct FpOptions {
    double dt_max = 0.05;          // the step is min(dt_max, admissible dt)
    double record_interval = 1.0;  // model time between observations
    double top_epsilon = 0.01;
    std::size_t snapshot_every = 0; // grid and Lorenz snapshot every k observations; 0 disables
};

struct GridSnapshot {
    double t = 0.0;
    WealthGrid grid;
};

struct FpRunResult {
    RunRecord record;
    std::vector<GridSnapshot> snapshots;
    WealthGrid final_grid;
};

// Observables of a grid: top1_share is the condensed fraction, top_eps_share
// the condensed part plus the richest epsilon of the agents.
[[nodiscard]] RunSample observe_grid(const WealthGrid& grid, double t, double top_epsilon);

// Iterates FpSolver::step from t = 0 to t_end. The condensed part is added to
// the params total wealth check, so params.total_wealth must equal the grid's.
[[nodiscard]] FpRunResult fp_run(const WealthGrid& init, const ModelParams& params, double t_end,
                                 const FpOptions& options = {});

} // namespace ysm
