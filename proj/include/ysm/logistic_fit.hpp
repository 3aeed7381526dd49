#pragma once

#include <cstddef>
#include <span>

namespace ysm {

// Least-squares fit of c(t) = k c0 / (c0 + (k - c0) exp(-r (t - t_first))).
// k estimates c_infinity and r the composite rate zeta - tau_inf.
struct LogisticFit {
    double c_inf = 0.0;
    double rate = 0.0;
    double c0 = 0.0;
    double rms_residual = 0.0;
    bool flat = false;      // constant series: rate 0, c_inf = c0 = its value
    bool converged = false;
    std::size_t iterations = 0;
};

// Needs at least 10 samples with c in [0, 1] and strictly increasing t.
// Throws std::invalid_argument otherwise.
[[nodiscard]] LogisticFit fit_logistic(std::span<const double> t, std::span<const double> c);

// k c0 / (c0 + (k - c0) exp(-r dt)), for dt measured from the first sample.
[[nodiscard]] double logistic_curve(double k, double r, double c0, double dt);

} // namespace ysm
