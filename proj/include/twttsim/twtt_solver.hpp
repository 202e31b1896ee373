#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace twtt {

// One two-way exchange: A transmits at tau_a_tx (A-local), B receives at
// tau_b_rx and replies at tau_b_tx (B-local), A receives at tau_a_rx.
struct TwttMeasurement {
    double tau_a_tx = 0.0;
    double tau_b_rx = 0.0;
    double tau_b_tx = 0.0;
    double tau_a_rx = 0.0;
    int index = 0;

    // Degenerate-but-causal exchanges (zero turnaround, zero distance) pass.
    void validate() const {
        if (tau_b_tx < tau_b_rx)
            throw std::invalid_argument("TwttMeasurement: reply must follow reception");
        if (tau_a_rx < tau_a_tx)
            throw std::invalid_argument("TwttMeasurement: causality violated at node A");
    }
};

struct TwttSolution {
    int index = 0;
    double skew_ratio = 1.0;       // alpha_b / alpha_a
    double tof_s = 0.0;            // in A's clock domain
    double offset_s = 0.0;         // corrected clock offset
    double initial_offset_s = 0.0; // equal-skew estimate, kept as a diagnostic
    bool negative_tof_warning = false;
};

class InconsistentMeasurementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ((tau_b_rx + tau_b_tx) - (tau_a_rx + tau_a_tx)) / 2. Exact only for equal
// skews.
double initial_offset(const TwttMeasurement& m);

// Relative skew alpha_b/alpha_a from two successive measurements:
// 2 * (dT'_{n+1} - dT'_n) / (tau_a_tx_{n+1} - tau_a_tx_n + tau_a_rx_{n+1} -
// tau_a_rx_n) + 1. The difference quotient subtracts near-equal sums, so it is
// evaluated in compensated (double-double) arithmetic. Throws on a near-zero
// denominator.
double skew_ratio(const TwttMeasurement& m_n, const TwttMeasurement& m_n1);

// (tau_a_rx - tau_a_tx)/2 - skew * (tau_b_tx - tau_b_rx)/2. Values below
// -negative_tolerance_s throw InconsistentMeasurementError; small negatives
// within the tolerance pass through so noise statistics stay unbiased.
double tof(const TwttMeasurement& m, double skew, double negative_tolerance_s = 0.0);

// (tau_b_rx + tau_b_tx)/2 - (tau_a_tx + skew * (tau_a_rx - tau_a_tx)/2),
// the corrected offset referenced to the measurement's start epoch.
double offset(const TwttMeasurement& m, double skew);

struct SolveOptions {
    unsigned skew_smoothing_window = 1;   // sliding mean over pairwise ratios; 1 = none
    double negative_tof_tolerance_s = 0.0;
};

// Pairs consecutive measurements for the skew ratio and solves ToF/offset per
// pair (applied to the later measurement). Requires at least 2 measurements.
std::vector<TwttSolution> solve_sequence(std::span<const TwttMeasurement> ms,
                                         const SolveOptions& opts = {});

}  // namespace twtt
