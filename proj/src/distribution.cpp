#include "ysm/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "ysm/model_params.hpp"
#include "ysm/run_record.hpp"

namespace ysm {

WealthDistribution WealthDistribution::from_samples(std::span<const double> wealths, double condensed_wealth) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(wealths.size());
    for (double w : wealths) atoms.emplace_back(w, 1.0);
    WealthDistribution d;
    d.build(std::move(atoms), condensed_wealth);
    return d;
}

WealthDistribution WealthDistribution::from_atoms(std::span<const double> positions, std::span<const double> counts,
                                                  double condensed_wealth) {
    if (positions.size() != counts.size()) throw std::invalid_argument("atom positions and counts differ in length");
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) atoms.emplace_back(positions[i], counts[i]);
    WealthDistribution d;
    d.build(std::move(atoms), condensed_wealth);
    return d;
}

void WealthDistribution::build(std::vector<std::pair<double, double>> atoms, double condensed_wealth) {
    if (atoms.empty()) throw std::domain_error("wealth distribution has no agents");
    if (!(condensed_wealth >= 0.0)) throw std::domain_error("condensed wealth must be >= 0");
    for (const auto& [x, n] : atoms) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::domain_error("atom wealth must be finite and >= 0");
        if (!(n >= 0.0) || !std::isfinite(n)) throw std::domain_error("atom count must be finite and >= 0");
    }
    std::stable_sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    const auto m = atoms.size();
    positions_.resize(m);
    counts_.resize(m);
    cum_count_.assign(m + 1, 0.0);
    cum_wealth_.assign(m + 1, 0.0);
    cum_half_sq_.assign(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto [x, n] = atoms[i];
        positions_[i] = x;
        counts_[i] = n;
        cum_count_[i + 1] = cum_count_[i] + n;
        cum_wealth_[i + 1] = cum_wealth_[i] + n * x;
        cum_half_sq_[i + 1] = cum_half_sq_[i] + n * x * x * 0.5;
    }
    n_agents_ = cum_count_[m];
    classical_wealth_ = cum_wealth_[m];
    condensed_wealth_ = condensed_wealth;
    if (!(n_agents_ > 0.0)) throw std::domain_error("wealth distribution has no agents");
    if (!(total_wealth() > 0.0)) throw std::domain_error("wealth distribution has zero total wealth");
}

std::size_t WealthDistribution::lower_index(double w) const {
    return static_cast<std::size_t>(std::lower_bound(positions_.begin(), positions_.end(), w) - positions_.begin());
}

PartialMoments partial_moments(const WealthDistribution& dist, double w) {
    if (!(w >= 0.0)) throw std::domain_error("partial moments need w >= 0");
    const auto i = dist.lower_index(w);
    const double n = dist.n_agents();
    return {
        (n - dist.count_below(i)) / n,
        dist.wealth_below(i) / dist.total_wealth(),
        dist.half_square_below(i) / n,
    };
}

double total_tax_rate(const WealthDistribution& dist, const ModelParams& params) {
    const auto xs = dist.positions();
    const auto ns = dist.counts();
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) total += ns[i] * params.rho(xs[i]) * xs[i];
    return total + params.tau_infinity * dist.condensed_wealth();
}

LorenzCurve lorenz_curve(const WealthDistribution& dist) {
    const auto xs = dist.positions();
    const auto ns = dist.counts();
    const double n = dist.n_agents();
    const double w = dist.total_wealth();
    LorenzCurve curve;
    curve.points.reserve(xs.size() + 1);
    curve.points.emplace_back(0.0, 0.0);
    double agents = 0.0, wealth = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        agents += ns[i];
        wealth += ns[i] * xs[i];
        curve.points.emplace_back(agents / n, wealth / w);
    }
    // Pin the end point against rounding in the running sums.
    curve.points.back().first = 1.0;
    curve.points.back().second = dist.classical_wealth() / w;
    return curve;
}

double lorenz_area(const LorenzCurve& curve) {
    double area = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto [p0, y0] = curve.points[k - 1];
        const auto [p1, y1] = curve.points[k];
        area += (p1 - p0) * (y0 + y1) * 0.5;
    }
    return area;
}

double gini(const WealthDistribution& dist) {
    return 1.0 - 2.0 * lorenz_area(lorenz_curve(dist));
}

double classical_gini(const WealthDistribution& dist) {
    const double share = dist.classical_wealth() / dist.total_wealth();
    if (!(share > 0.0)) throw std::domain_error("classical part holds no wealth; its Gini coefficient is undefined");
    return 1.0 - 2.0 * lorenz_area(lorenz_curve(dist)) / share;
}

double gini_with_condensate(double c, double classical) {
    if (!(c >= 0.0 && c <= 1.0)) throw std::domain_error("condensed fraction must lie in [0, 1]");
    return c + (1.0 - c) * classical;
}

double gini_without_condensate(double c, double full) {
    if (!(c >= 0.0 && c < 1.0)) throw std::domain_error("condensed fraction must lie in [0, 1); the classical part is empty at c = 1");
    return (full - c) / (1.0 - c);
}

void write_lorenz_csv(std::ostream& out, const LorenzCurve& curve) {
    out << "pop_fraction,wealth_fraction\n";
    for (const auto& [p, y] : curve.points) out << format_double(p) << ',' << format_double(y) << '\n';
}

nlohmann::json lorenz_to_json(const LorenzCurve& curve) {
    nlohmann::json pop = nlohmann::json::array();
    nlohmann::json wealth = nlohmann::json::array();
    for (const auto& [p, y] : curve.points) {
        pop.push_back(p);
        wealth.push_back(y);
    }
    return {{"pop_fraction", pop}, {"wealth_fraction", wealth}};
}

} // namespace ysm
