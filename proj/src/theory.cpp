#include "ysm/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ysm/run_record.hpp"

namespace ysm {

void LogisticParams::validate() const {
    std::string problems;
    if (!(zeta >= 0.0) || !std::isfinite(zeta)) problems += " zeta must be finite and >= 0;";
    if (!(tau_inf >= 0.0) || !std::isfinite(tau_inf)) problems += " tau_inf must be finite and >= 0;";
    if (!(c0 >= 0.0 && c0 <= 1.0)) problems += " c0 must lie in [0, 1];";
    if (!problems.empty()) {
        problems.pop_back();
        throw std::invalid_argument("invalid logistic parameters:" + problems);
    }
}

double c_infinity(double zeta, double tau_inf) {
    if (zeta <= tau_inf) return 0.0;
    return 1.0 - tau_inf / zeta;
}

double logistic_rhs(double c, double zeta, double tau_inf) {
    return c * (-tau_inf + zeta * (1.0 - c));
}

bool is_critical(double zeta, double tau_inf) {
    return std::abs(zeta - tau_inf) < 1e-12 * zeta || (zeta == 0.0 && tau_inf == 0.0);
}

double logistic_closed_form(const LogisticParams& p, double t) {
    p.validate();
    if (t < 0.0) throw std::invalid_argument("logistic_closed_form: t must be >= 0");
    const double c0 = p.c0;
    if (c0 == 0.0 || t == 0.0) return c0;
    if (is_critical(p.zeta, p.tau_inf)) return c0 / (1.0 + p.zeta * c0 * t);

    const double r = p.zeta - p.tau_inf;
    if (r > 0.0) {
        // Divided through by e^{rt} so that large rt cannot overflow.
        const double decay = std::exp(-r * t);
        return r * c0 / (p.zeta * c0 * (-std::expm1(-r * t)) + r * decay);
    }
    return r * c0 * std::exp(r * t) / (p.zeta * c0 * std::expm1(r * t) + r);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

} // namespace

std::vector<double> logistic_integrate(const LogisticParams& p, std::span<const double> t_grid,
                                       const IntegratorOptions& options, IntegratorStats* stats) {
    p.validate();
    if (t_grid.empty()) return {};
    if (t_grid.front() != 0.0) throw std::invalid_argument("logistic_integrate: t_grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= t_grid[i - 1])) throw std::invalid_argument("logistic_integrate: t_grid must be nondecreasing");
    }

    auto f = [&](double c) { return logistic_rhs(c, p.zeta, p.tau_inf); };
    std::vector<double> out;
    out.reserve(t_grid.size());
    out.push_back(p.c0);

    double t = 0.0;
    double y = p.c0;
    double h = options.initial_step;
    double k1 = f(y);
    IntegratorStats local;
    double last_err = 0.0;

    for (std::size_t gi = 1; gi < t_grid.size(); ++gi) {
        const double target = t_grid[gi];
        while (t < target) {
            if (local.accepted + local.rejected >= options.max_steps) {
                throw IntegrationError("logistic_integrate: step budget exhausted at t = " + format_double(t) +
                                           " (last error estimate " + format_double(last_err) + ")",
                                       t, last_err);
            }
            bool last = false;
            const double h_try = h;
            if (t + h >= target) {
                h = target - t;
                last = true;
            }
            const double k2 = f(y + h * a21 * k1);
            const double k3 = f(y + h * (a31 * k1 + a32 * k2));
            const double k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const double k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const double k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            const double y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const double k7 = f(y_new);
            const double err_abs = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
            const double scale = options.atol + options.rtol * std::max(std::abs(y), std::abs(y_new));
            const double err = err_abs / scale;
            last_err = err_abs;

            if (err <= 1.0) {
                t = last ? target : t + h;
                y = y_new;
                k1 = k7;
                ++local.accepted;
            } else {
                ++local.rejected;
                last = false;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            const double h_next = h * factor;
            h = last ? std::max(h_try, h_next) : h_next;
            if (h < options.min_step && t < target) {
                throw IntegrationError("logistic_integrate: step size underflow at t = " + format_double(t) +
                                           " (achieved error " + format_double(err_abs) + ")",
                                       t, err_abs);
            }
        }
        out.push_back(y);
    }
    if (stats) *stats = local;
    return out;
}

StabilityReport stability(double zeta, double tau_inf) {
    StabilityReport report;
    const double r = zeta - tau_inf;
    report.critical = is_critical(zeta, tau_inf);
    auto classify = [&](double rate) {
        if (report.critical) return Stability::marginal;
        return rate < 0.0 ? Stability::stable : Stability::unstable;
    };
    report.fixed_points.push_back({0.0, report.critical ? 0.0 : r, classify(r)});
    if (zeta > 0.0 && !report.critical) {
        const double c_star = 1.0 - tau_inf / zeta;
        if (c_star >= 0.0 && c_star <= 1.0) report.fixed_points.push_back({c_star, -r, classify(-r)});
    }
    report.stable_point = c_infinity(zeta, tau_inf);
    return report;
}

std::string to_string(Stability s) {
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
    }
    return "marginal";
}

} // namespace ysm
