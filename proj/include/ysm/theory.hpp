#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ysm {

// Logistic law for the condensed fraction: c' = c (-tau_inf + zeta (1 - c)).
struct LogisticParams {
    double zeta = 0.0;
    double tau_inf = 0.0;
    double c0 = 0.0;

    // Throws std::invalid_argument unless zeta >= 0, tau_inf >= 0 and 0 <= c0 <= 1.
    void validate() const;
};

// 0 when zeta <= tau_inf, otherwise 1 - tau_inf / zeta. Returns 0 at zeta = tau_inf = 0.
[[nodiscard]] double c_infinity(double zeta, double tau_inf);

[[nodiscard]] double logistic_rhs(double c, double zeta, double tau_inf);

// Exact solution. When |zeta - tau_inf| < 1e-12 zeta the critical solution
// c0 / (1 + zeta c0 t) is used instead.
[[nodiscard]] double logistic_closed_form(const LogisticParams& p, double t);

[[nodiscard]] bool is_critical(double zeta, double tau_inf);

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t, double achieved_error)
        : std::runtime_error(what), t_(t), achieved_error_(achieved_error) {}
    [[nodiscard]] double time() const { return t_; }
    [[nodiscard]] double achieved_error() const { return achieved_error_; }

private:
    double t_;
    double achieved_error_;
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-14;
    double initial_step = 1e-3;
    double min_step = 1e-12;
    std::size_t max_steps = 1'000'000;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

// Dormand-Prince 5(4) with step-size control, landing exactly on every grid time.
// t_grid must be nondecreasing and start at 0. Throws IntegrationError when the
// step size collapses or the step budget runs out.
[[nodiscard]] std::vector<double> logistic_integrate(const LogisticParams& p, std::span<const double> t_grid,
                                                     const IntegratorOptions& options = {},
                                                     IntegratorStats* stats = nullptr);

enum class Stability { stable, unstable, marginal };

struct FixedPoint {
    double c = 0.0;
    double eigenvalue = 0.0;
    Stability stability = Stability::marginal;
};

struct StabilityReport {
    std::vector<FixedPoint> fixed_points;
    double stable_point = 0.0;
    bool critical = false;
};

// Fixed points 0 (rate zeta - tau_inf) and 1 - tau_inf/zeta when it lies in
// [0, 1] (rate tau_inf - zeta).
[[nodiscard]] StabilityReport stability(double zeta, double tau_inf);

[[nodiscard]] std::string to_string(Stability s);

} // namespace ysm
