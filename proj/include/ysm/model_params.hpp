#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "ysm/rate_schedule.hpp"

namespace ysm {

// Parameters of the yard-sale model with wealth-attained advantage and
// redistribution. Rates are per unit model time.
struct ModelParams {
    double zeta = 0.0;                          // WAA strength
    RateSchedule tax = RateSchedule::constant(0.0);   // tau(z)
    RateSchedule sigma = RateSchedule::constant(0.0); // redistribution deviation sigma(z)
    double dt = 0.01;                           // time step; sqrt(dt) is the stake fraction
    std::size_t n_agents = 0;
    double total_wealth = 0.0;
    double tau_infinity = 0.0;                  // large-wealth limit of tau - sigma
    int schedule_degree_bound = 0;

    // Net taxation rate rho(z) = tau(z) - sigma(z).
    [[nodiscard]] double rho(double z) const { return tax(z) - sigma(z); }

    // Wealth at which tau_infinity is checked against the schedules.
    [[nodiscard]] double probe_wealth() const;
    // rho evaluated at the probe wealth.
    [[nodiscard]] double inferred_tau_infinity() const;

    [[nodiscard]] std::vector<std::string> validation_errors() const;
    // Throws std::invalid_argument listing every problem at once.
    void validate() const;

    [[nodiscard]] nlohmann::json to_json() const;
    static ModelParams from_json(const nlohmann::json& j);

    // Constant tax, no redistribution deviation; tau_infinity = tau.
    static ModelParams constant_tax(double zeta, double tau, std::size_t n_agents, double total_wealth, double dt);
};

} // namespace ysm
