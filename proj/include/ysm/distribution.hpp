#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ysm {

struct ModelParams;

// A wealth distribution made of a classical part and a condensed part.
//
// The classical part is a set of weighted atoms (wealth, agent count): one atom
// per agent for Monte Carlo samples, one atom per bin centre for a grid. The
// condensed part holds wealth but no agents; it stands for the oligarch, the
// limit of a vanishing number of agents holding a finite share of the wealth.
//
// Immutable after construction; atoms are kept sorted with prefix sums so that
// partial moments cost O(log n).
class WealthDistribution {
public:
    // One agent per sample. condensed_wealth is the absolute wealth of the condensed part.
    static WealthDistribution from_samples(std::span<const double> wealths, double condensed_wealth = 0.0);
    static WealthDistribution from_atoms(std::span<const double> positions, std::span<const double> counts,
                                         double condensed_wealth = 0.0);

    [[nodiscard]] double n_agents() const { return n_agents_; }
    [[nodiscard]] double total_wealth() const { return classical_wealth_ + condensed_wealth_; }
    [[nodiscard]] double classical_wealth() const { return classical_wealth_; }
    [[nodiscard]] double condensed_wealth() const { return condensed_wealth_; }
    [[nodiscard]] double condensed_fraction() const { return condensed_wealth_ / total_wealth(); }

    [[nodiscard]] std::span<const double> positions() const { return positions_; }
    [[nodiscard]] std::span<const double> counts() const { return counts_; }
    [[nodiscard]] std::size_t atom_count() const { return positions_.size(); }

    // Index of the first atom with position >= w.
    [[nodiscard]] std::size_t lower_index(double w) const;
    // Sums over atoms [0, i): agent count, wealth, and sum of count * x^2 / 2.
    [[nodiscard]] double count_below(std::size_t i) const { return cum_count_[i]; }
    [[nodiscard]] double wealth_below(std::size_t i) const { return cum_wealth_[i]; }
    [[nodiscard]] double half_square_below(std::size_t i) const { return cum_half_sq_[i]; }

private:
    WealthDistribution() = default;
    void build(std::vector<std::pair<double, double>> atoms, double condensed_wealth);

    std::vector<double> positions_;
    std::vector<double> counts_;
    std::vector<double> cum_count_;
    std::vector<double> cum_wealth_;
    std::vector<double> cum_half_sq_;
    double n_agents_ = 0.0;
    double classical_wealth_ = 0.0;
    double condensed_wealth_ = 0.0;
};

// A = fraction of agents with wealth >= w (Pareto potential)
// L = fraction of total wealth held by classical agents with wealth < w (Lorenz potential)
// B = (1/N) * sum over agents with wealth < w of x^2 / 2
// Ties at w belong to A only, so 2B(z) + z^2 A(z) = E[min(z, x)^2] holds exactly.
struct PartialMoments {
    double pareto = 0.0;
    double lorenz = 0.0;
    double half_second = 0.0;
};

[[nodiscard]] PartialMoments partial_moments(const WealthDistribution& dist, double w);

// Total tax collected per unit time, T = sum over agents of rho(x) x plus
// tau_infinity times the condensed wealth.
[[nodiscard]] double total_tax_rate(const WealthDistribution& dist, const ModelParams& params);

struct LorenzCurve {
    std::vector<std::pair<double, double>> points; // (population fraction, wealth fraction)
    [[nodiscard]] double reach() const { return points.empty() ? 0.0 : points.back().second; }
};

// Classical agents sorted by wealth; ends at (1, 1 - c).
[[nodiscard]] LorenzCurve lorenz_curve(const WealthDistribution& dist);

// Trapezoid area under the curve.
[[nodiscard]] double lorenz_area(const LorenzCurve& curve);

// Gini coefficient of the whole system, condensed part included: 1 - 2 * area.
[[nodiscard]] double gini(const WealthDistribution& dist);
// Gini coefficient of the classical part alone.
[[nodiscard]] double classical_gini(const WealthDistribution& dist);

// G_P = c + (1 - c) G_p, from the Lorenz region areas.
[[nodiscard]] double gini_with_condensate(double c, double classical);
// Inverse: G_p = (G_P - c) / (1 - c). Throws std::domain_error at c = 1.
[[nodiscard]] double gini_without_condensate(double c, double full);

void write_lorenz_csv(std::ostream& out, const LorenzCurve& curve);
[[nodiscard]] nlohmann::json lorenz_to_json(const LorenzCurve& curve);

} // namespace ysm
