#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hflow {

enum class Errc {
    invalid_point,
    non_unique_geodesic,
    comparison_undefined,
    undefined_angle,
    unsupported,
    empty_input,
    mismatched_base,
    negative_scale,
    prox_failure,
    domain_error,
    no_convergence,
    mixed_base,
    invalid_config,
    unknown_suite,
};

inline std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::invalid_point: return "invalid-point";
    case Errc::non_unique_geodesic: return "non-unique-geodesic";
    case Errc::comparison_undefined: return "comparison-undefined";
    case Errc::undefined_angle: return "undefined-angle";
    case Errc::unsupported: return "unsupported";
    case Errc::empty_input: return "empty-input";
    case Errc::mismatched_base: return "mismatched-base";
    case Errc::negative_scale: return "negative-scale";
    case Errc::prox_failure: return "prox-failure";
    case Errc::domain_error: return "domain-error";
    case Errc::no_convergence: return "no-convergence";
    case Errc::mixed_base: return "mixed-base";
    case Errc::invalid_config: return "invalid-config";
    case Errc::unknown_suite: return "unknown-suite";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace hflow
