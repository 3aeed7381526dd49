#include "ysm/model_params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ysm {

double ModelParams::probe_wealth() const {
    const double mean = (n_agents > 0 && total_wealth > 0.0) ? total_wealth / static_cast<double>(n_agents) : 1.0;
    return 1e9 * mean;
}

double ModelParams::inferred_tau_infinity() const {
    return rho(probe_wealth());
}

std::vector<std::string> ModelParams::validation_errors() const {
    std::vector<std::string> errors;
    if (!(zeta >= 0.0) || !std::isfinite(zeta)) errors.emplace_back("zeta must be finite and >= 0");
    if (!(dt > 0.0)) {
        errors.emplace_back("dt must be > 0");
    } else if (std::sqrt(dt) > 1.0) {
        errors.emplace_back("dt must satisfy sqrt(dt) <= 1 (the stake cannot exceed the poorer agent's wealth)");
    }
    if (n_agents < 2) errors.emplace_back("n_agents must be >= 2");
    if (!(total_wealth > 0.0) || !std::isfinite(total_wealth)) errors.emplace_back("total_wealth must be finite and > 0");

    for (const auto& e : tax.validation_errors()) errors.push_back("tax schedule: " + e);
    for (const auto& e : sigma.validation_errors()) errors.push_back("sigma schedule: " + e);
    if (tax.growth_degree() > schedule_degree_bound) {
        errors.push_back("tax schedule degree " + std::to_string(tax.growth_degree()) + " exceeds the declared bound " +
                         std::to_string(schedule_degree_bound));
    }
    if (sigma.growth_degree() > schedule_degree_bound) {
        errors.push_back("sigma schedule degree " + std::to_string(sigma.growth_degree()) +
                         " exceeds the declared bound " + std::to_string(schedule_degree_bound));
    }

    if (errors.empty()) {
        const double probe = inferred_tau_infinity();
        const double tol = 1e-8 + 1e-6 * std::abs(tau_infinity);
        if (!std::isfinite(probe) || std::abs(probe - tau_infinity) > tol) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "tau_infinity = " << tau_infinity << " disagrees with tau - sigma = " << probe
                << " at probe wealth " << probe_wealth();
            errors.push_back(msg.str());
        }
    }
    return errors;
}

void ModelParams::validate() const {
    const auto errors = validation_errors();
    if (errors.empty()) return;
    std::string msg = "invalid model parameters:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
}

nlohmann::json ModelParams::to_json() const {
    return {
        {"zeta", zeta},
        {"tax", tax.to_json()},
        {"sigma", sigma.to_json()},
        {"dt", dt},
        {"n_agents", n_agents},
        {"total_wealth", total_wealth},
        {"tau_infinity", tau_infinity},
        {"schedule_degree_bound", schedule_degree_bound},
    };
}

ModelParams ModelParams::from_json(const nlohmann::json& j) {
    ModelParams p;
    p.zeta = j.at("zeta").get<double>();
    p.tax = RateSchedule::from_json(j.at("tax"));
    if (j.contains("sigma")) p.sigma = RateSchedule::from_json(j.at("sigma"));
    p.dt = j.value("dt", p.dt);
    p.n_agents = j.value("n_agents", std::size_t{0});
    p.total_wealth = j.value("total_wealth", 0.0);
    p.schedule_degree_bound = j.value("schedule_degree_bound", 0);
    p.tau_infinity = j.contains("tau_infinity") ? j.at("tau_infinity").get<double>() : p.inferred_tau_infinity();
    return p;
}

ModelParams ModelParams::constant_tax(double zeta, double tau, std::size_t n_agents, double total_wealth, double dt) {
    ModelParams p;
    p.zeta = zeta;
    p.tax = RateSchedule::constant(tau);
    p.dt = dt;
    p.n_agents = n_agents;
    p.total_wealth = total_wealth;
    p.tau_infinity = tau;
    return p;
}

} // namespace ysm
