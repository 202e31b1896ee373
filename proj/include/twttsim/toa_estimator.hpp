#pragma once

#include <optional>
#include <vector>

#include "twttsim/iq_buffer.hpp"
#include "twttsim/waveform.hpp"

namespace twtt {

// Full cross-correlation of a reference against a received buffer.
// lags runs -(Nref-1) .. (Nrec-1); values[k] = sum_m conj(ref[m]) rec[m+lag].
struct CorrelationResult {
    std::vector<long> lags;
    std::vector<double> magnitude;
    std::vector<cplx> values;
    double reference_energy = 0.0;

    std::size_t size() const { return lags.size(); }
    std::size_t index_of_lag(long lag) const;  // throws if out of range
};

// FFT-based, zero-padded to the next power of two; numerically equivalent to
// direct summation.
CorrelationResult correlate(const IqBuffer& reference, const IqBuffer& received);

// Argmax of |correlation|; smallest lag wins ties. Empty when the peak falls
// below threshold_ratio * reference_energy (the theoretical clean peak).
std::optional<long> detect_peak(const CorrelationResult& corr, double threshold_ratio);

struct SincFitResult {
    double lag = 0.0;        // coarse_lag + delta
    double delta = 0.0;      // sub-sample offset, clamped to [-0.5, 0.5]
    double amplitude = 0.0;  // fitted peak magnitude
    double width = 0.0;      // fitted sinc width, cycles/sample
    bool converged = false;
    int iterations = 0;
    double residual_rms = 0.0;
};

// Fits a * |sinc(W (k - delta))| to the correlation magnitude over
// [coarse_lag - K, coarse_lag + K] with damped Gauss-Newton. width_init of 0
// falls back to a half-power estimate from the data; callers that know the
// chirp should pass bandwidth/sample_rate.
SincFitResult interpolate_peak_sinc_nls(const CorrelationResult& corr, long coarse_lag,
                                        int window_halfwidth, double width_init = 0.0);

struct ToaEstimate {
    double lag_samples = 0.0;        // sub-sample lag of the chirp within the buffer
    double toa_local_seconds = 0.0;  // buffer start + lag / fs, receiver clock
    double peak_magnitude = 0.0;
    double snr_estimate_db = 0.0;
};

// Matched-filter ToA of the chirp inside a received buffer. Empty result means
// no detection.
std::optional<ToaEstimate> estimate_toa(const IqBuffer& received, double buffer_start_local_s,
                                        const ChirpParams& chirp, double threshold_ratio = 0.5,
                                        int window_halfwidth = 3);

}  // namespace twtt
