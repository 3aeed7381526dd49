#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace ysm {

class RngStream;

// The discrete agent state: one nonnegative wealth per agent plus the model
// time. The agent count and the initial total are fixed for the lifetime of a run.
class Population {
public:
    // Throws std::invalid_argument on an empty vector or a negative / non-finite wealth.
    explicit Population(std::vector<double> wealths, double time = 0.0);

    static Population equal(std::size_t n, double total_wealth);
    // Exponential wealths, rescaled so the total is exactly total_wealth.
    static Population exponential(std::size_t n, double total_wealth, RngStream& rng);
    // One agent holds `share` of the total; the rest split the remainder equally.
    static Population with_oligarch(std::size_t n, double total_wealth, double share);
    // Plain text, one wealth per line; blank lines and lines starting with '#' are skipped.
    static Population from_file(const std::filesystem::path& path);

    [[nodiscard]] std::span<const double> wealths() const { return wealths_; }
    [[nodiscard]] std::span<double> mutable_wealths() { return wealths_; }
    [[nodiscard]] std::size_t size() const { return wealths_.size(); }
    [[nodiscard]] double time() const { return time_; }
    void set_time(double t) { time_ = t; }
    [[nodiscard]] double total_wealth_initial() const { return total_initial_; }
    [[nodiscard]] double total_wealth() const;
    // (current total - initial total) / initial total
    [[nodiscard]] double relative_wealth_residual() const;

private:
    std::vector<double> wealths_;
    double time_ = 0.0;
    double total_initial_ = 0.0;
};

// Fraction of total wealth held by the richest ceil(epsilon * N) agents, 0 < epsilon <= 1.
[[nodiscard]] double top_share(std::span<const double> wealths, double epsilon);
// Fraction of total wealth held by the single richest agent.
[[nodiscard]] double top_agent_share(std::span<const double> wealths);

} // namespace ysm
