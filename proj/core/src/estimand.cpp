#include "wate/estimand.hpp"

#include "wate/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace wate {

namespace {

std::string format_nu(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

double parse_nu(const std::string& s, std::string_view whole) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw ConfigError("cannot parse ATB parameter '" + s + "' in '" + std::string(whole) + "'");
    return v;
}

}  // namespace

std::string_view family_name(Family f) {
    switch (f) {
        case Family::ATE: return "ATE";
        case Family::ATT: return "ATT";
        case Family::ATC: return "ATC";
        case Family::ATO: return "ATO";
        case Family::ATEN: return "ATEN";
        case Family::ATB: return "ATB";
    }
    return "?";
}

EstimandSpec EstimandSpec::of(Family family) {
    if (family == Family::ATB) throw ConfigError("ATB requires nu1 and nu2; use EstimandSpec::atb");
    return EstimandSpec(family, std::nullopt, std::nullopt);
}

EstimandSpec EstimandSpec::atb(double nu1, double nu2) {
    if (!(nu1 >= 1.0) || !(nu2 >= 1.0))
        throw ConfigError("ATB parameters must be >= 1 (got nu1=" + format_nu(nu1) + ", nu2=" + format_nu(nu2) + ")");
    return EstimandSpec(Family::ATB, nu1, nu2);
}

EstimandSpec EstimandSpec::parse(std::string_view text) {
    const std::string s = upper(text);
    for (Family f : {Family::ATE, Family::ATT, Family::ATC, Family::ATO, Family::ATEN}) {
        if (s == family_name(f)) return of(f);
    }
    if (s.rfind("ATB", 0) == 0) {
        std::string rest = s.substr(3);
        if (!rest.empty() && (rest.front() == '(' || rest.front() == ':')) {
            if (rest.front() == '(') {
                if (rest.back() != ')') throw ConfigError("malformed estimand '" + std::string(text) + "'");
                rest = rest.substr(1, rest.size() - 2);
            } else {
                rest = rest.substr(1);
            }
            const auto comma = rest.find(',');
            if (comma == std::string::npos)
                throw ConfigError("ATB needs two parameters, e.g. ATB(3,4); got '" + std::string(text) + "'");
            return atb(parse_nu(rest.substr(0, comma), text), parse_nu(rest.substr(comma + 1), text));
        }
        throw ConfigError("ATB needs two parameters, e.g. ATB(3,4); got '" + std::string(text) + "'");
    }
    throw ConfigError("unknown estimand '" + std::string(text) + "'; valid choices: ATE, ATT, ATC, ATO, ATEN, ATB(nu1,nu2)");
}

std::string EstimandSpec::label() const {
    if (family_ != Family::ATB) return std::string(family_name(family_));
    return "ATB(" + format_nu(*nu1_) + "," + format_nu(*nu2_) + ")";
}

std::optional<std::string> EstimandSpec::warning() const {
    if (family_ != Family::ATB) return std::nullopt;
    if (*nu1_ < 2.0 || *nu2_ < 2.0)
        return label() + ": a beta parameter below 2 makes the weight derivatives unbounded near 0 or 1";
    return std::nullopt;
}

EstimandSpec atb_reduction_check(double nu1, double nu2) {
    const auto spec = EstimandSpec::atb(nu1, nu2);  // validates nu >= 1
    if (nu1 == 1.0 && nu2 == 1.0) return EstimandSpec::of(Family::ATE);
    if (nu1 == 2.0 && nu2 == 1.0) return EstimandSpec::of(Family::ATT);
    if (nu1 == 1.0 && nu2 == 2.0) return EstimandSpec::of(Family::ATC);
    if (nu1 == 2.0 && nu2 == 2.0) return EstimandSpec::of(Family::ATO);
    return spec;
}

std::vector<EstimandSpec> default_estimands() {
    return {EstimandSpec::of(Family::ATE), EstimandSpec::of(Family::ATT), EstimandSpec::of(Family::ATC),
            EstimandSpec::of(Family::ATO), EstimandSpec::of(Family::ATEN)};
}

}  // namespace wate
