#pragma once

#include <cmath>
#include <stdexcept>

namespace twtt {

// Affine local-clock model: tau = alpha * t + phi, with t the shared global
// time. alpha is the oscillator skew (close to 1), phi the offset in seconds.
struct ClockParams {
    double alpha = 1.0;
    double phi = 0.0;

    ClockParams() = default;

    // max_skew_deviation is a plausibility guard against configuration typos,
    // not a physical limit; widen it for exotic experiments.
    ClockParams(double alpha_, double phi_, double max_skew_deviation = 1e-3)
        : alpha(alpha_), phi(phi_) {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("ClockParams: alpha must be positive and finite");
        if (!(std::fabs(alpha - 1.0) < max_skew_deviation))
            throw std::invalid_argument("ClockParams: |alpha - 1| exceeds plausibility bound");
        if (!std::isfinite(phi))
            throw std::invalid_argument("ClockParams: phi must be finite");
    }
};

// tau = alpha * t + phi
inline double local_from_global(const ClockParams& clk, double t_global) {
    return clk.alpha * t_global + clk.phi;
}

// t = (tau - phi) / alpha
inline double global_from_local(const ClockParams& clk, double tau_local) {
    return (tau_local - clk.phi) / clk.alpha;
}

// Ground-truth alpha_b / alpha_a, used as the reference for skew recovery.
inline double true_relative_skew(const ClockParams& a, const ClockParams& b) {
    return b.alpha / a.alpha;
}

}  // namespace twtt
