#include "ysm/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ysm/rng.hpp"

namespace ysm {

namespace {

double kahan_sum(std::span<const double> xs) {
    double sum = 0.0, carry = 0.0;
    for (double x : xs) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

} // namespace

Population::Population(std::vector<double> wealths, double time) : wealths_(std::move(wealths)), time_(time) {
    if (wealths_.empty()) throw std::invalid_argument("population must contain at least one agent");
    for (std::size_t i = 0; i < wealths_.size(); ++i) {
        if (!(wealths_[i] >= 0.0) || !std::isfinite(wealths_[i])) {
            throw std::invalid_argument("agent " + std::to_string(i) + " has invalid wealth " +
                                        std::to_string(wealths_[i]));
        }
    }
    total_initial_ = kahan_sum(wealths_);
}

Population Population::equal(std::size_t n, double total_wealth) {
    if (n == 0) throw std::invalid_argument("population must contain at least one agent");
    return Population(std::vector<double>(n, total_wealth / static_cast<double>(n)));
}

Population Population::exponential(std::size_t n, double total_wealth, RngStream& rng) {
    if (n == 0) throw std::invalid_argument("population must contain at least one agent");
    std::vector<double> w(n);
    for (auto& x : w) x = rng.exponential(1.0);
    const double scale = total_wealth / kahan_sum(w);
    for (auto& x : w) x *= scale;
    return Population(std::move(w));
}

Population Population::with_oligarch(std::size_t n, double total_wealth, double share) {
    if (n < 2) throw std::invalid_argument("an oligarch population needs at least two agents");
    if (!(share >= 0.0 && share <= 1.0)) throw std::invalid_argument("oligarch share must lie in [0, 1]");
    std::vector<double> w(n, (1.0 - share) * total_wealth / static_cast<double>(n - 1));
    w[0] = share * total_wealth;
    return Population(std::move(w));
}

Population Population::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open population file " + path.string());
    std::vector<double> w;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            std::size_t used = 0;
            w.push_back(std::stod(line.substr(first), &used));
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": not a number: " + line);
        }
    }
    return Population(std::move(w));
}

double Population::total_wealth() const {
    return kahan_sum(wealths_);
}

double Population::relative_wealth_residual() const {
    return (total_wealth() - total_initial_) / total_initial_;
}

double top_share(std::span<const double> wealths, double epsilon) {
    if (wealths.empty()) throw std::domain_error("top_share of an empty population");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::domain_error("top_share epsilon must lie in (0, 1]");
    const auto n = wealths.size();
    auto k = static_cast<std::size_t>(std::ceil(epsilon * static_cast<double>(n) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<double> sorted(wealths.begin(), wealths.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                     std::greater<>());
    const double top = kahan_sum(std::span<const double>(sorted.data(), k));
    return top / kahan_sum(wealths);
}

double top_agent_share(std::span<const double> wealths) {
    if (wealths.empty()) throw std::domain_error("top_share of an empty population");
    return *std::max_element(wealths.begin(), wealths.end()) / kahan_sum(wealths);
}

} // namespace ysm
