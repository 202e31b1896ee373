#include "twttsim/twtt_solver.hpp"

#include <cmath>

namespace twtt {

namespace {

// Minimal double-double arithmetic (~106-bit significand). The skew-ratio
// difference quotient subtracts near-equal sums of large timestamps, which
// plain doubles cannot afford at sub-nanosecond scales.
struct dd {
    double hi = 0.0;
    double lo = 0.0;
};

dd two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

dd quick_renorm(double hi, double lo) {
    const double s = hi + lo;
    return {s, lo - (s - hi)};
}

dd dd_add(dd a, dd b) {
    dd s = two_sum(a.hi, b.hi);
    return quick_renorm(s.hi, s.lo + a.lo + b.lo);
}

dd dd_add(dd a, double b) { return dd_add(a, dd{b, 0.0}); }

dd dd_neg(dd a) { return {-a.hi, -a.lo}; }

dd dd_sub(dd a, dd b) { return dd_add(a, dd_neg(b)); }

dd two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

dd dd_mul(dd a, dd b) {
    dd p = two_prod(a.hi, b.hi);
    return quick_renorm(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

dd dd_mul(dd a, double b) { return dd_mul(a, dd{b, 0.0}); }

dd dd_div(dd a, dd b) {
    const double q1 = a.hi / b.hi;
    dd r = dd_sub(a, dd_mul(b, q1));
    const double q2 = r.hi / b.hi;
    r = dd_sub(r, dd_mul(b, q2));
    const double q3 = r.hi / b.hi;
    return quick_renorm(q1, q2 + q3);
}

// dT' = ((tau_b_rx + tau_b_tx) - (tau_a_rx + tau_a_tx)) / 2
dd initial_offset_dd(const TwttMeasurement& m) {
    const dd b_sum = two_sum(m.tau_b_rx, m.tau_b_tx);
    const dd a_sum = two_sum(m.tau_a_rx, m.tau_a_tx);
    return dd_mul(dd_sub(b_sum, a_sum), 0.5);
}

}  // namespace

double initial_offset(const TwttMeasurement& m) {
    m.validate();
    return initial_offset_dd(m).hi;
}

double skew_ratio(const TwttMeasurement& m_n, const TwttMeasurement& m_n1) {
    m_n.validate();
    m_n1.validate();
    if (m_n1.index != m_n.index + 1)
        throw std::invalid_argument("skew_ratio: measurements must be successive");

    const dd numerator = dd_mul(dd_sub(initial_offset_dd(m_n1), initial_offset_dd(m_n)), 2.0);
    const dd denominator = dd_add(two_sum(m_n1.tau_a_tx, -m_n.tau_a_tx),
                                  two_sum(m_n1.tau_a_rx, -m_n.tau_a_rx));
    if (std::fabs(denominator.hi) < 1e-9)
        throw InconsistentMeasurementError(
            "skew_ratio: measurements taken at (nearly) identical A-times");
    return dd_add(dd_div(numerator, denominator), 1.0).hi;
}

double tof(const TwttMeasurement& m, double skew, double negative_tolerance_s) {
    m.validate();
    if (!(skew > 0.0)) throw std::invalid_argument("tof: skew must be positive");
    const dd a_leg = dd_mul(two_sum(m.tau_a_rx, -m.tau_a_tx), 0.5);
    const dd b_leg = dd_mul(dd_mul(two_sum(m.tau_b_tx, -m.tau_b_rx), 0.5), skew);
    const double value = dd_sub(a_leg, b_leg).hi;
    if (value < -negative_tolerance_s)
        throw InconsistentMeasurementError("tof: negative beyond tolerance");
    return value;
}

double offset(const TwttMeasurement& m, double skew) {
    m.validate();
    if (!(skew > 0.0)) throw std::invalid_argument("offset: skew must be positive");
    const dd b_mid = dd_mul(two_sum(m.tau_b_rx, m.tau_b_tx), 0.5);
    const dd a_half = dd_mul(dd_mul(two_sum(m.tau_a_rx, -m.tau_a_tx), 0.5), skew);
    return dd_sub(b_mid, dd_add(a_half, m.tau_a_tx)).hi;
}

std::vector<TwttSolution> solve_sequence(std::span<const TwttMeasurement> ms,
                                         const SolveOptions& opts) {
    if (ms.size() < 2)
        throw std::invalid_argument("solve_sequence: need at least two measurements");
    if (opts.skew_smoothing_window < 1)
        throw std::invalid_argument("solve_sequence: smoothing window must be >= 1");

    const std::size_t pairs = ms.size() - 1;
    std::vector<double> ratios(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        try {
            ratios[i] = skew_ratio(ms[i], ms[i + 1]);
        } catch (const std::exception& e) {
            throw InconsistentMeasurementError("pair " + std::to_string(i) + ": " + e.what());
        }
    }

    std::vector<TwttSolution> out(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        // Trailing sliding mean over the pairwise ratios.
        const std::size_t begin = (i + 1 >= opts.skew_smoothing_window)
                                      ? i + 1 - opts.skew_smoothing_window
                                      : 0;
        double skew = 0.0;
        for (std::size_t j = begin; j <= i; ++j) skew += ratios[j];
        skew /= static_cast<double>(i - begin + 1);

        const TwttMeasurement& m = ms[i + 1];
        TwttSolution& sol = out[i];
        sol.index = m.index;
        sol.skew_ratio = skew;
        sol.initial_offset_s = initial_offset(m);
        try {
            sol.tof_s = tof(m, skew, opts.negative_tof_tolerance_s);
        } catch (const InconsistentMeasurementError& e) {
            throw InconsistentMeasurementError("pair " + std::to_string(i) + ": " + e.what());
        }
        sol.negative_tof_warning = sol.tof_s < 0.0;
        sol.offset_s = offset(m, skew);
    }
    return out;
}

}  // namespace twtt
