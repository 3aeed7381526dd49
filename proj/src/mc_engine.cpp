#include "ysm/mc_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ysm/distribution.hpp"

namespace ysm {

namespace {

double kahan_total(std::span<const double> xs) {
    double sum = 0.0, carry = 0.0;
    for (double x : xs) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

void shuffle_in_place(std::vector<std::size_t>& order, RngStream& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(order[i - 1], order[j]);
    }
}

} // namespace

std::vector<AgentPair> transaction_pairing(const Population& pop, RngStream& rng) {
    const auto n = pop.size();
    if (n < 2) throw std::domain_error("transaction pairing needs at least two agents");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_in_place(order, rng);
    std::vector<AgentPair> pairs;
    pairs.reserve(n / 2);
    for (std::size_t k = 0; k + 1 < n; k += 2) pairs.emplace_back(order[k], order[k + 1]);
    return pairs;
}

WaaBias waa_bias(double z, double x, const ModelParams& params) {
    const double slope = params.zeta * static_cast<double>(params.n_agents) / params.total_wealth * std::sqrt(params.dt);
    const double b = slope * (z - x);
    if (b > 1.0) return {1.0, true};
    if (b < -1.0) return {-1.0, true};
    return {b, false};
}

CoinFlip biased_coin(double z, double x, const ModelParams& params, RngStream& rng) {
    const auto bias = waa_bias(z, x, params);
    return {rng.uniform() < 0.5 * (1.0 + bias.value) ? 1 : -1, bias.clipped};
}

McStepper::McStepper(ModelParams params, StepOptions options) : params_(std::move(params)), options_(options) {
    params_.validate();
    constant_rho_ = params_.tax.is_constant() && params_.sigma.is_constant();
    rho_constant_ = params_.rho(0.0);
    stake_ = std::sqrt(params_.dt);
    bias_slope_ = params_.zeta * static_cast<double>(params_.n_agents) / params_.total_wealth * stake_;
}

void McStepper::draw_pairs(std::size_t n, RngStream& rng) {
    pairs_.clear();
    if (options_.pairing == PairingMode::perfect_matching) {
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        shuffle_in_place(order_, rng);
        for (std::size_t k = 0; k + 1 < n; k += 2) pairs_.emplace_back(order_[k], order_[k + 1]);
    } else {
        for (std::size_t k = 0; k < n / 2; ++k) {
            const auto a = static_cast<std::size_t>(rng.below(n));
            auto b = static_cast<std::size_t>(rng.below(n - 1));
            if (b >= a) ++b;
            pairs_.emplace_back(a, b);
        }
    }
}

void McStepper::transact(std::span<double> w, std::size_t a, std::size_t b, RngStream& rng, StepReport& report) {
    const double z = w[a];
    const double x = w[b];
    double bias = bias_slope_ * (z - x);
    if (bias > 1.0) {
        bias = 1.0;
        ++report.clipped_bias_count;
    } else if (bias < -1.0) {
        bias = -1.0;
        ++report.clipped_bias_count;
    }
    const double amount = stake_ * std::min(z, x);
    if (rng.uniform() < 0.5 * (1.0 + bias)) {
        w[a] = z + amount;
        w[b] = x - amount;
    } else {
        w[a] = z - amount;
        w[b] = x + amount;
    }
    ++report.n_transactions;
}

void McStepper::step_per_sweep(std::span<double> w, RngStream& rng, StepReport& report) {
    const auto n = w.size();
    const double dt = params_.dt;
    drift_.resize(n);

    // Explicit scheme: T_P and every agent's net tax come from the pre-step wealths.
    double total_tax = 0.0;
    if (constant_rho_) {
        total_tax = rho_constant_ * kahan_total(w);
        const double share = total_tax / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) drift_[i] = -(rho_constant_ * w[i] - share) * dt;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            drift_[i] = params_.rho(w[i]) * w[i];
            total_tax += drift_[i];
        }
        const double share = total_tax / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) drift_[i] = -(drift_[i] - share) * dt;
    }

    draw_pairs(n, rng);
    for (const auto& [a, b] : pairs_) transact(w, a, b, rng, report);
    for (std::size_t i = 0; i < n; ++i) w[i] += drift_[i];
}

void McStepper::step_per_transaction(std::span<double> w, RngStream& rng, StepReport& report) {
    const auto n = w.size();
    const double dt = params_.dt;
    const double inv_n = 1.0 / static_cast<double>(n);
    // Shares of the pool are credited lazily: agent i is owed dividend - credited_[i].
    credited_.assign(n, 0.0);
    double dividend = 0.0;
    auto settle = [&](std::size_t i) {
        w[i] += dividend - credited_[i];
        credited_[i] = dividend;
    };

    draw_pairs(n, rng);
    for (const auto& [a, b] : pairs_) {
        settle(a);
        settle(b);
        transact(w, a, b, rng, report);
        const double tax_a = params_.rho(w[a]) * w[a] * dt;
        const double tax_b = params_.rho(w[b]) * w[b] * dt;
        w[a] -= tax_a;
        w[b] -= tax_b;
        dividend += (tax_a + tax_b) * inv_n;
    }
    for (std::size_t i = 0; i < n; ++i) settle(i);
}

StepReport McStepper::step(Population& pop, RngStream& rng) {
    if (pop.size() != params_.n_agents) {
        throw std::invalid_argument("population has " + std::to_string(pop.size()) + " agents but params.n_agents = " +
                                    std::to_string(params_.n_agents));
    }
    auto w = pop.mutable_wealths();
    StepReport report;
    const double before = kahan_total(w);

    if (options_.taxation == TaxationMode::per_sweep) {
        step_per_sweep(w, rng, report);
    } else {
        step_per_transaction(w, rng, report);
    }
    report.clamped_wealth_count = clamp_and_redistribute(w);

    const double after = kahan_total(w);
    report.wealth_residual = (after - before) / before;
    pop.set_time(pop.time() + params_.dt);
    report.time = pop.time();
    return report;
}

StepReport step(Population& pop, const ModelParams& params, RngStream& rng, const StepOptions& options) {
    McStepper stepper(params, options);
    return stepper.step(pop, rng);
}

std::size_t clamp_and_redistribute(std::span<double> wealths) {
    std::size_t clamped = 0;
    double deficit = 0.0;
    for (auto& x : wealths) {
        if (x < 0.0) {
            deficit -= x;
            x = 0.0;
            ++clamped;
        }
    }
    while (deficit > 0.0) {
        std::size_t holders = 0;
        for (double x : wealths) holders += x > 0.0 ? 1 : 0;
        if (holders == 0) break;
        const double share = deficit / static_cast<double>(holders);
        deficit = 0.0;
        for (auto& x : wealths) {
            if (x <= 0.0) continue;
            if (x >= share) {
                x -= share;
            } else {
                deficit += share - x;
                x = 0.0;
            }
        }
    }
    return clamped;
}

RunSample observe_population(const Population& pop, double top_epsilon) {
    const auto w = pop.wealths();
    std::vector<double> sorted(w.begin(), w.end());
    std::sort(sorted.begin(), sorted.end());
    const double total = kahan_total(sorted);
    const auto n = sorted.size();

    RunSample s;
    s.t = pop.time();
    s.top1_share = sorted.back() / total;
    s.top_eps_share = top_share(w, top_epsilon);
    s.gini_P = gini(WealthDistribution::from_samples(sorted));
    if (n >= 2) {
        const std::span<const double> others(sorted.data(), n - 1);
        const auto split = WealthDistribution::from_samples(others, sorted.back());
        s.gini_p = split.classical_wealth() > 0.0 ? classical_gini(split) : 0.0;
    }
    s.wealth_residual = pop.relative_wealth_residual();
    return s;
}

RunRecord simulate(const ModelParams& params, Population init, double t_end, RngStream& rng,
                   const SimulationOptions& options, std::span<const Observer> observers) {
    const auto started = std::chrono::steady_clock::now();
    params.validate();
    if (!(t_end > init.time())) throw std::invalid_argument("t_end must exceed the initial time");
    if (options.record_every == 0) throw std::invalid_argument("record_every must be >= 1");
    if (init.size() != params.n_agents) {
        throw std::invalid_argument("initial population has " + std::to_string(init.size()) +
                                    " agents but params.n_agents = " + std::to_string(params.n_agents));
    }
    const double rel = std::abs(init.total_wealth() - params.total_wealth) / params.total_wealth;
    if (rel > 1e-9) throw std::invalid_argument("initial population total differs from params.total_wealth");

    McStepper stepper(params, options.step);
    Population pop = std::move(init);
    const double t0 = pop.time();
    const auto n_steps = static_cast<std::uint64_t>(std::ceil((t_end - t0) / params.dt - 1e-9));

    RunRecord record;
    record.engine = "mc";
    record.params = params.to_json();
    record.params["taxation"] = to_string(options.step.taxation);
    record.params["pairing"] = to_string(options.step.pairing);
    record.params["record_every"] = options.record_every;
    record.params["t_end"] = t_end;
    record.seed = rng.seed();
    record.stream_id = rng.stream_id();
    record.top_epsilon = options.top_epsilon;

    StepReport last;
    last.time = t0;
    std::size_t observations = 0;
    auto observe = [&]() {
        Population snapshot = pop;
        auto sample = observe_population(snapshot, options.top_epsilon);
        sample.clipped_bias_count = record.clipped_bias;
        record.max_abs_wealth_residual = std::max(record.max_abs_wealth_residual, std::abs(sample.wealth_residual));
        record.samples.push_back(sample);
        if (options.lorenz_every > 0 && observations % options.lorenz_every == 0) {
            record.lorenz.push_back({snapshot.time(), lorenz_curve(WealthDistribution::from_samples(snapshot.wealths()))});
        }
        ++observations;
        for (const auto& observer : observers) {
            try {
                observer(snapshot, last);
            } catch (const std::exception& e) {
                throw SimulationAborted("observer failed at t = " + format_double(snapshot.time()) + ": " + e.what(),
                                        snapshot);
            }
        }
    };

    observe();
    for (std::uint64_t k = 1; k <= n_steps; ++k) {
        last = stepper.step(pop, rng);
        pop.set_time(t0 + static_cast<double>(k) * params.dt);
        record.transactions += last.n_transactions;
        record.clipped_bias += last.clipped_bias_count;
        record.clamped_wealth += last.clamped_wealth_count;
        if (k % options.record_every == 0 || k == n_steps) observe();
    }
    record.steps = n_steps;

    if (record.transactions > 0 &&
        static_cast<double>(record.clipped_bias) > 1e-3 * static_cast<double>(record.transactions)) {
        record.warnings.push_back("WAA bias clipped in " +
                                  format_double(100.0 * static_cast<double>(record.clipped_bias) /
                                                static_cast<double>(record.transactions)) +
                                  "% of transactions (threshold 0.1%); the continuum drift is not resolved at this dt");
    }
    record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

std::string to_string(TaxationMode mode) {
    return mode == TaxationMode::per_sweep ? "per-sweep" : "per-transaction";
}

std::string to_string(PairingMode mode) {
    return mode == PairingMode::perfect_matching ? "matching" : "sampled";
}

TaxationMode parse_taxation_mode(const std::string& s) {
    if (s == "per-sweep") return TaxationMode::per_sweep;
    if (s == "per-transaction") return TaxationMode::per_transaction;
    throw std::invalid_argument("unknown taxation mode \"" + s + "\" (expected per-sweep or per-transaction)");
}

PairingMode parse_pairing_mode(const std::string& s) {
    if (s == "matching") return PairingMode::perfect_matching;
    if (s == "sampled") return PairingMode::sampled_pairs;
    throw std::invalid_argument("unknown pairing mode \"" + s + "\" (expected matching or sampled)");
}

} // namespace ysm
