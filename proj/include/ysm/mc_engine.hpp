#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ysm/model_params.hpp"
#include "ysm/population.hpp"
#include "ysm/rng.hpp"
#include "ysm/run_record.hpp"

namespace ysm {

// When the wealth tax is applied within one time step.
//   per_sweep: every agent is taxed once per step on its pre-step wealth, with
//     T_P taken from the pre-step population (explicit reading of the random walk).
//   per_transaction: each transacting agent is taxed right after its
//     transaction on its post-transaction wealth; the proceeds are shared
//     equally by all agents immediately.
enum class TaxationMode { per_sweep, per_transaction };

// How transacting pairs are drawn within one step.
//   perfect_matching: a uniformly random matching; with odd N one uniformly chosen agent sits out.
//   sampled_pairs: N/2 independent uniformly drawn pairs, with replacement across pairs.
enum class PairingMode { perfect_matching, sampled_pairs };

struct StepOptions {
    TaxationMode taxation = TaxationMode::per_sweep;
    PairingMode pairing = PairingMode::perfect_matching;
};

struct StepReport {
    double time = 0.0;
    std::size_t n_transactions = 0;
    std::size_t clipped_bias_count = 0;
    std::size_t clamped_wealth_count = 0;
    double wealth_residual = 0.0; // relative change of total wealth over this step
};

using AgentPair = std::pair<std::size_t, std::size_t>;

// Uniformly random perfect matching of the population. Throws std::domain_error for N < 2.
[[nodiscard]] std::vector<AgentPair> transaction_pairing(const Population& pop, RngStream& rng);

struct WaaBias {
    double value = 0.0; // expected value of eta, after clipping to [-1, 1]
    bool clipped = false;
};

// b = clip(zeta * (N/W) * sqrt(dt) * (z - x), -1, 1)
[[nodiscard]] WaaBias waa_bias(double z, double x, const ModelParams& params);

struct CoinFlip {
    int eta = 1; // +1: the agent with wealth z wins
    bool clipped = false;
};

// Draws eta with P(eta = +1) = (1 + b) / 2.
[[nodiscard]] CoinFlip biased_coin(double z, double x, const ModelParams& params, RngStream& rng);

// Advances a population by one time step dt. Reuses its scratch buffers across steps.
class McStepper {
public:
    explicit McStepper(ModelParams params, StepOptions options = {});

    StepReport step(Population& pop, RngStream& rng);

    [[nodiscard]] const ModelParams& params() const { return params_; }
    [[nodiscard]] const StepOptions& options() const { return options_; }

private:
    void draw_pairs(std::size_t n, RngStream& rng);
    void transact(std::span<double> w, std::size_t a, std::size_t b, RngStream& rng, StepReport& report);
    void step_per_sweep(std::span<double> w, RngStream& rng, StepReport& report);
    void step_per_transaction(std::span<double> w, RngStream& rng, StepReport& report);

    ModelParams params_;
    StepOptions options_;
    bool constant_rho_ = false;
    double rho_constant_ = 0.0;
    double stake_ = 0.0;      // sqrt(dt)
    double bias_slope_ = 0.0; // zeta * N / W * sqrt(dt)
    std::vector<std::size_t> order_;
    std::vector<AgentPair> pairs_;
    std::vector<double> drift_;
    std::vector<double> credited_;
};

// One step of the random walk, in place. Throws std::invalid_argument on invalid
// parameters or a population whose size differs from params.n_agents.
StepReport step(Population& pop, const ModelParams& params, RngStream& rng, const StepOptions& options = {});

// Sets negative wealths to zero and takes the deficit back uniformly from the
// agents with positive wealth. Returns the number of agents clamped.
std::size_t clamp_and_redistribute(std::span<double> wealths);

struct SimulationOptions {
    std::size_t record_every = 100; // steps between observations
    double top_epsilon = 0.01;
    std::size_t lorenz_every = 0;   // Lorenz snapshot every k observations; 0 disables
    StepOptions step;
};

// Called at every observation with an immutable snapshot of the population.
using Observer = std::function<void(const Population& snapshot, const StepReport& last_step)>;

class SimulationAborted : public std::runtime_error {
public:
    SimulationAborted(const std::string& what, Population last_state)
        : std::runtime_error(what), last_state_(std::move(last_state)) {}
    [[nodiscard]] const Population& last_state() const { return last_state_; }

private:
    Population last_state_;
};

// Steps until time >= t_end, observing every options.record_every steps and at the end.
[[nodiscard]] RunRecord simulate(const ModelParams& params, Population init, double t_end, RngStream& rng,
                                 const SimulationOptions& options = {}, std::span<const Observer> observers = {});

// Observables of one population snapshot; clipped_bias_count is left at zero.
[[nodiscard]] RunSample observe_population(const Population& pop, double top_epsilon);

[[nodiscard]] std::string to_string(TaxationMode mode);
[[nodiscard]] std::string to_string(PairingMode mode);
[[nodiscard]] TaxationMode parse_taxation_mode(const std::string& s);
[[nodiscard]] PairingMode parse_pairing_mode(const std::string& s);

} // namespace ysm
