#include "ysm/logistic_fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ysm {

double logistic_curve(double k, double r, double c0, double dt) {
    if (c0 == 0.0) return 0.0;
    return k * c0 / (c0 + (k - c0) * std::exp(-r * dt));
}

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

// Gaussian elimination with partial pivoting; returns false for a singular system.
bool solve3(Mat3 a, Vec3 b, Vec3& x) {
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

struct Residuals {
    double sse = 0.0;
    bool finite = true;
};

} // namespace

LogisticFit fit_logistic(std::span<const double> t, std::span<const double> c) {
    if (t.size() != c.size()) throw std::invalid_argument("fit_logistic: t and c differ in length");
    const std::size_t n = t.size();
    if (n < 10) throw std::invalid_argument("fit_logistic: need at least 10 samples, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(c[i] >= 0.0 && c[i] <= 1.0)) {
            throw std::invalid_argument("fit_logistic: sample " + std::to_string(i) + " has c outside [0, 1]");
        }
        if (i > 0 && !(t[i] > t[i - 1])) throw std::invalid_argument("fit_logistic: t must be strictly increasing");
    }

    LogisticFit fit;
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, *hi) || *hi == 0.0) {
        const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
        fit.c_inf = mean;
        fit.c0 = mean;
        fit.rate = 0.0;
        fit.flat = true;
        fit.converged = true;
        double sse = 0.0;
        for (double ci : c) sse += (ci - mean) * (ci - mean);
        fit.rms_residual = std::sqrt(sse / static_cast<double>(n));
        return fit;
    }

    std::vector<double> dt(n);
    for (std::size_t i = 0; i < n; ++i) dt[i] = t[i] - t[0];

    // Start: k from the tail mean, c0 from the first sample, r from a regression
    // of log|c / (k - c)|, which is linear in t on both sides of k.
    const std::size_t tail = std::max<std::size_t>(1, n / 5);
    double k = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) k += c[i];
    k = std::clamp(k / static_cast<double>(tail), 1e-12, 1.0);
    double c0 = std::max(c[0], 1e-12);
    const double gap = 1e-3 * (*hi - *lo);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(c[i] > 0.0) || std::abs(k - c[i]) <= gap) continue;
        const double y = std::log(std::abs(c[i] / (k - c[i])));
        sx += dt[i];
        sy += y;
        sxx += dt[i] * dt[i];
        sxy += dt[i] * y;
        m += 1.0;
    }
    double r = 0.0;
    const double denom = m * sxx - sx * sx;
    if (m >= 2.0 && denom > 0.0) r = (m * sxy - sx * sy) / denom;
    if (std::abs(c0 - k) <= gap) c0 = k - gap;

    auto sse_at = [&](double kk, double rr, double cc) {
        Residuals res;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = c[i] - logistic_curve(kk, rr, cc, dt[i]);
            res.sse += e * e;
        }
        res.finite = std::isfinite(res.sse);
        return res;
    };

    double sse = sse_at(k, r, c0).sse;
    double lambda = 1e-3;
    std::size_t it = 0;
    for (; it < 500; ++it) {
        Mat3 jtj{};
        Vec3 jtr{};
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-r * dt[i]);
            const double d = c0 + (k - c0) * e;
            const double model = k * c0 / d;
            const double d2 = d * d;
            const Vec3 g{c0 * c0 * (1.0 - e) / d2, k * c0 * (k - c0) * dt[i] * e / d2, k * k * e / d2};
            const double resid = c[i] - model;
            for (int a = 0; a < 3; ++a) {
                jtr[a] += g[a] * resid;
                for (int b = 0; b < 3; ++b) jtj[a][b] += g[a] * g[b];
            }
        }
        bool improved = false;
        for (int tries = 0; tries < 30 && !improved; ++tries) {
            Mat3 a = jtj;
            for (int d = 0; d < 3; ++d) a[d][d] += lambda * std::max(jtj[d][d], 1e-300);
            Vec3 step{};
            if (!solve3(a, jtr, step)) {
                lambda *= 10.0;
                continue;
            }
            const double k_new = k + step[0], r_new = r + step[1], c0_new = c0 + step[2];
            if (!(k_new > 0.0) || !(c0_new > 0.0)) {
                lambda *= 10.0;
                continue;
            }
            const auto trial = sse_at(k_new, r_new, c0_new);
            if (trial.finite && trial.sse <= sse) {
                const double gain = sse - trial.sse;
                k = k_new;
                r = r_new;
                c0 = c0_new;
                sse = trial.sse;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                const double step_norm = std::abs(step[0]) / k + std::abs(step[1]) / std::max(std::abs(r), 1e-12) +
                                         std::abs(step[2]) / c0;
                if (gain <= 1e-30 + 1e-15 * sse || step_norm < 1e-14) fit.converged = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) {
            fit.converged = true; // no descent direction left at this precision
            break;
        }
        if (fit.converged) break;
    }

    fit.c_inf = k;
    fit.rate = r;
    fit.c0 = c0;
    fit.iterations = it;
    fit.rms_residual = std::sqrt(sse / static_cast<double>(n));
    return fit;
}

} // namespace ysm
