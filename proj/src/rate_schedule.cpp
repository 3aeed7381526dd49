#include "ysm/rate_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ysm {

namespace {
template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;
} // namespace

RateSchedule RateSchedule::constant(double value) {
    RateSchedule s;
    s.form_ = Constant{value};
    return s;
}

RateSchedule RateSchedule::piecewise(std::vector<double> breakpoints, std::vector<double> values) {
    RateSchedule s;
    s.form_ = Piecewise{std::move(breakpoints), std::move(values)};
    return s;
}

RateSchedule RateSchedule::saturating(double at_zero, double at_infinity, double scale) {
    RateSchedule s;
    s.form_ = Saturating{at_zero, at_infinity, scale};
    return s;
}

RateSchedule RateSchedule::polynomial(std::vector<double> coefficients) {
    RateSchedule s;
    s.form_ = Polynomial{std::move(coefficients)};
    return s;
}

double RateSchedule::operator()(double z) const {
    return std::visit(
        overloaded{
            [](const Constant& c) { return c.value; },
            [z](const Piecewise& p) {
                const auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), z);
                return p.values[static_cast<std::size_t>(it - p.breakpoints.begin())];
            },
            [z](const Saturating& s) {
                return s.at_zero + (s.at_infinity - s.at_zero) * z / (z + s.scale);
            },
            [z](const Polynomial& p) {
                double acc = 0.0;
                for (auto it = p.coefficients.rbegin(); it != p.coefficients.rend(); ++it) {
                    acc = acc * z + *it;
                }
                return acc;
            },
        },
        form_);
}

bool RateSchedule::is_constant() const {
    return std::holds_alternative<Constant>(form_);
}

int RateSchedule::growth_degree() const {
    if (const auto* p = std::get_if<Polynomial>(&form_)) {
        for (std::size_t k = p->coefficients.size(); k > 0; --k) {
            if (p->coefficients[k - 1] != 0.0) return static_cast<int>(k - 1);
        }
    }
    return 0;
}

std::vector<std::string> RateSchedule::validation_errors() const {
    std::vector<std::string> errors;
    std::visit(overloaded{
                   [&](const Constant& c) {
                       if (!std::isfinite(c.value)) errors.emplace_back("constant rate is not finite");
                   },
                   [&](const Piecewise& p) {
                       if (p.values.size() != p.breakpoints.size() + 1) {
                           errors.emplace_back("piecewise schedule needs one more value than breakpoints");
                       }
                       if (!std::is_sorted(p.breakpoints.begin(), p.breakpoints.end()) ||
                           std::adjacent_find(p.breakpoints.begin(), p.breakpoints.end()) != p.breakpoints.end()) {
                           errors.emplace_back("piecewise breakpoints must be strictly increasing");
                       }
                   },
                   [&](const Saturating& s) {
                       if (!(s.scale > 0.0)) errors.emplace_back("saturating schedule scale must be > 0");
                   },
                   [&](const Polynomial& p) {
                       if (p.coefficients.empty()) errors.emplace_back("polynomial schedule has no coefficients");
                   },
               },
               form_);
    return errors;
}

nlohmann::json RateSchedule::to_json() const {
    return std::visit(
        overloaded{
            [](const Constant& c) { return nlohmann::json{{"kind", "constant"}, {"value", c.value}}; },
            [](const Piecewise& p) {
                return nlohmann::json{{"kind", "piecewise"}, {"breakpoints", p.breakpoints}, {"values", p.values}};
            },
            [](const Saturating& s) {
                return nlohmann::json{{"kind", "saturating"},
                                      {"at_zero", s.at_zero},
                                      {"at_infinity", s.at_infinity},
                                      {"scale", s.scale}};
            },
            [](const Polynomial& p) { return nlohmann::json{{"kind", "polynomial"}, {"coefficients", p.coefficients}}; },
        },
        form_);
}

RateSchedule RateSchedule::from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    if (!j.is_object() || !j.contains("kind")) {
        throw std::invalid_argument("rate schedule must be a number or an object with a \"kind\" field");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") return constant(j.at("value").get<double>());
    if (kind == "piecewise") {
        return piecewise(j.at("breakpoints").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
    }
    if (kind == "saturating") {
        return saturating(j.at("at_zero").get<double>(), j.at("at_infinity").get<double>(), j.at("scale").get<double>());
    }
    if (kind == "polynomial") return polynomial(j.at("coefficients").get<std::vector<double>>());
    throw std::invalid_argument("unknown rate schedule kind \"" + kind + "\"");
}

} // namespace ysm
