#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wate {

enum class Family { ATE, ATT, ATC, ATO, ATEN, ATB };

/// Which weighted average treatment effect to target.
///
/// ATB carries its beta parameters (nu1, nu2), both >= 1; every other family
/// forbids them. Use the factory functions, which enforce that rule.
class EstimandSpec {
public:
    static EstimandSpec of(Family family);
    static EstimandSpec atb(double nu1, double nu2);

    /// Accepts "ATE", "att", "ATB(3,4)", "ATB:3,4".
    static EstimandSpec parse(std::string_view text);

    Family family() const noexcept { return family_; }
    std::optional<double> nu1() const noexcept { return nu1_; }
    std::optional<double> nu2() const noexcept { return nu2_; }

    /// "ATE", "ATO", "ATB(3,4)".
    std::string label() const;

    /// Set when an ATB parameter lies in [1, 2), where derivatives of the
    /// weight function are unbounded near the edges.
    std::optional<std::string> warning() const;

    bool operator==(const EstimandSpec&) const = default;

private:
    EstimandSpec(Family f, std::optional<double> a, std::optional<double> b) : family_(f), nu1_(a), nu2_(b) {}

    Family family_;
    std::optional<double> nu1_;
    std::optional<double> nu2_;
};

std::string_view family_name(Family f);

/// Maps beta parameters to the named family they reproduce:
/// (1,1)->ATE, (2,1)->ATT, (1,2)->ATC, (2,2)->ATO, otherwise ATB(nu1,nu2).
EstimandSpec atb_reduction_check(double nu1, double nu2);

/// ATE, ATT, ATC, ATO, ATEN.
std::vector<EstimandSpec> default_estimands();

}  // namespace wate
