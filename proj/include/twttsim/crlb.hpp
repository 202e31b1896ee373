#pragma once

#include "twttsim/waveform.hpp"

namespace twtt {

enum class SnrConvention {
    per_sample,        // snr_db is per received sample; Es/N0 = length * 10^(snr/10)
    post_integration,  // snr_db already includes the correlation gain
};

struct CrlbConfig {
    ChirpParams chirp;
    double snr_db = 30.0;
    SnrConvention convention = SnrConvention::per_sample;
};

// Gabor RMS bandwidth of the discrete chirp spectrum,
// beta^2 = integral f^2 |S(f)|^2 df / integral |S(f)|^2 df, in Hz.
double rms_bandwidth(const ChirpParams& chirp);

// ToA bound sigma = 1 / (2 pi beta sqrt(2 Es/N0)) with the ideal flat-spectrum
// beta = bandwidth / sqrt(12), so the bound scales purely with waveform energy
// across chirp lengths. rms_bandwidth() quantifies how far the real spectrum
// sits from that ideal.
double toa_crlb_std(const CrlbConfig& cfg);

// Bound on a two-way ToF estimate built from two independent ToA estimates,
// each entering with weight 1/2: sigma_toa / sqrt(2).
double tof_crlb_std(const CrlbConfig& cfg);

}  // namespace twtt
