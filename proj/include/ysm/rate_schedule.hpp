#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ysm {

// A wealth-dependent rate z -> r(z) per unit time, used for the tax rate tau(z)
// and the redistribution deviation sigma(z).
//
// JSON forms:
//   0.1                                                     constant
//   {"kind": "constant", "value": 0.1}
//   {"kind": "piecewise", "breakpoints": [5], "values": [0.1, 0.2]}
//   {"kind": "saturating", "at_zero": 0.0, "at_infinity": 0.1, "scale": 10}
//   {"kind": "polynomial", "coefficients": [c0, c1, ...]}
class RateSchedule {
public:
    struct Constant {
        double value = 0.0;
    };
    // values[k] applies on [breakpoints[k-1], breakpoints[k]).
    struct Piecewise {
        std::vector<double> breakpoints;
        std::vector<double> values;
    };
    // at_zero + (at_infinity - at_zero) * z / (z + scale)
    struct Saturating {
        double at_zero = 0.0;
        double at_infinity = 0.0;
        double scale = 1.0;
    };
    struct Polynomial {
        std::vector<double> coefficients;
    };

    RateSchedule() = default;

    static RateSchedule constant(double value);
    static RateSchedule piecewise(std::vector<double> breakpoints, std::vector<double> values);
    static RateSchedule saturating(double at_zero, double at_infinity, double scale);
    static RateSchedule polynomial(std::vector<double> coefficients);

    [[nodiscard]] double operator()(double z) const;

    [[nodiscard]] bool is_constant() const;
    // Polynomial growth degree; 0 for bounded schedules.
    [[nodiscard]] int growth_degree() const;
    [[nodiscard]] std::vector<std::string> validation_errors() const;

    [[nodiscard]] nlohmann::json to_json() const;
    static RateSchedule from_json(const nlohmann::json& j);

private:
    std::variant<Constant, Piecewise, Saturating, Polynomial> form_{Constant{}};
};

} // namespace ysm
