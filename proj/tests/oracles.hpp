#pragma once

// Independent reference implementations the tests check production code
// against. Everything here is deliberately brute-force or closed-form and
// shares no code with the library paths it validates.

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "twttsim/clock_model.hpp"
#include "twttsim/fft.hpp"
#include "twttsim/iq_buffer.hpp"
#include "twttsim/twtt_solver.hpp"
#include "twttsim/waveform.hpp"

namespace oracle {

using twtt::cplx;

// Closed-form chirp sample at an arbitrary (fractional, possibly out-of-range)
// sample position. Zero outside [0, length).
inline cplx chirp_at(const twtt::ChirpParams& p, double pos_samples) {
    if (pos_samples < 0.0 || pos_samples >= static_cast<double>(p.length)) return {0.0, 0.0};
    const double t = pos_samples / p.sample_rate_hz;
    const double rate = p.bandwidth_hz * p.sample_rate_hz / (2.0 * static_cast<double>(p.length));
    const double phase = 2.0 * std::numbers::pi * (rate * t - p.bandwidth_hz / 2.0) * t;
    return std::polar(1.0, phase);
}

// O(N^2) full cross-correlation, lags -(Nref-1) .. (Nrec-1).
inline std::vector<cplx> direct_correlation(const std::vector<cplx>& ref,
                                            const std::vector<cplx>& rec) {
    const long nr = static_cast<long>(ref.size());
    const long nn = static_cast<long>(rec.size());
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(nn + nr - 1));
    for (long lag = -(nr - 1); lag <= nn - 1; ++lag) {
        cplx acc{0.0, 0.0};
        for (long m = 0; m < nr; ++m) {
            const long k = m + lag;
            if (k >= 0 && k < nn) acc += std::conj(ref[m]) * rec[k];
        }
        out.push_back(acc);
    }
    return out;
}

// Band-limited reconstruction of a sampled buffer on a dense grid
// (zero-padded FFT, factor `over`), then linear interpolation between the
// dense samples. Apples-to-apples reference for interpolating the same
// discrete data the production resampler sees. pad_factor pushes the periodic
// images far enough out that their 1/x tails stay below the comparison level.
class OversampledReference {
public:
    OversampledReference(const std::vector<cplx>& x, std::size_t over = 256,
                         std::size_t pad_factor = 16)
        : over_(over) {
        n_ = twtt::next_pow2(x.size() * pad_factor);
        std::vector<cplx> spec(n_, cplx{0.0, 0.0});
        std::copy(x.begin(), x.end(), spec.begin());
        twtt::fft_in_place(spec, false);
        const std::size_t m = n_ * over;
        dense_.assign(m, cplx{0.0, 0.0});
        // Split the spectrum at the Nyquist bin; its energy goes half to each
        // side so the dense signal stays the band-limited interpolant.
        for (std::size_t k = 0; k < n_ / 2; ++k) dense_[k] = spec[k];
        dense_[n_ / 2] = spec[n_ / 2] * 0.5;
        dense_[m - n_ / 2] = spec[n_ / 2] * 0.5;
        for (std::size_t k = n_ / 2 + 1; k < n_; ++k) dense_[m - (n_ - k)] = spec[k];
        twtt::fft_in_place(dense_, true);
        const double scale = static_cast<double>(over);
        for (auto& v : dense_) v *= scale;
    }

    cplx at(double pos_samples) const {
        const double dense_pos = pos_samples * static_cast<double>(over_);
        if (dense_pos < 0.0 || dense_pos >= static_cast<double>(dense_.size() - 1))
            return {0.0, 0.0};
        const auto i = static_cast<std::size_t>(dense_pos);
        const double f = dense_pos - static_cast<double>(i);
        return dense_[i] * (1.0 - f) + dense_[i + 1] * f;
    }

private:
    std::size_t over_;
    std::size_t n_ = 0;
    std::vector<cplx> dense_;
};

// Forward simulation of one TWTT measurement from the linear clock model:
// exact timestamps, no estimation noise.
struct AnalyticExchange {
    twtt::TwttMeasurement measurement;
    double t1_global;  // A's emission instant
};

inline AnalyticExchange analytic_measurement(const twtt::ClockParams& a,
                                             const twtt::ClockParams& b, double tof_s,
                                             double t1_global, double turnaround_b_local_s,
                                             int index = 0) {
    AnalyticExchange ex;
    ex.t1_global = t1_global;
    twtt::TwttMeasurement& m = ex.measurement;
    m.index = index;
    m.tau_a_tx = local_from_global(a, t1_global);
    const double t2 = t1_global + tof_s;
    m.tau_b_rx = local_from_global(b, t2);
    m.tau_b_tx = m.tau_b_rx + turnaround_b_local_s;
    const double t3 = global_from_local(b, m.tau_b_tx);
    const double t4 = t3 + tof_s;
    m.tau_a_rx = local_from_global(a, t4);
    return ex;
}

// Closed-form residual of the printed ToF formula against alpha_a * ToF:
// ((alpha_a^2 - alpha_b^2) / (2 alpha_a)) * (tau_b_tx - tau_b_rx) / alpha_b.
inline double expected_tof_residual(const twtt::ClockParams& a, const twtt::ClockParams& b,
                                    double turnaround_b_local_s) {
    return (a.alpha * a.alpha - b.alpha * b.alpha) / (2.0 * a.alpha) * turnaround_b_local_s /
           b.alpha;
}

// The printed corrected-offset formula evaluates the pairwise clock offset at
// the measurement's start epoch: (alpha_b - alpha_a) * t1 + (phi_b - phi_a).
inline double expected_offset(const twtt::ClockParams& a, const twtt::ClockParams& b,
                              double t1_global) {
    return (b.alpha - a.alpha) * t1_global + (b.phi - a.phi);
}

// Brute-force RSSI trigger scan mirroring the documented window definition:
// trailing mean of |x|^2 over `window` samples (zeros before the head),
// first index whose mean reaches the threshold.
inline std::optional<std::size_t> rssi_scan(const std::vector<cplx>& stream, unsigned window,
                                            double threshold) {
    for (std::size_t k = 0; k < stream.size(); ++k) {
        const std::size_t begin = (k + 1 >= window) ? k + 1 - window : 0;
        double acc = 0.0;
        for (std::size_t j = begin; j <= k; ++j) acc += std::norm(stream[j]);
        if (acc / static_cast<double>(window) >= threshold) return k;
    }
    return std::nullopt;
}

}  // namespace oracle
