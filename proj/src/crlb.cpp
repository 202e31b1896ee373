#include "twttsim/crlb.hpp"

#include <cmath>
#include <numbers>

#include "twttsim/fft.hpp"

namespace twtt {

double rms_bandwidth(const ChirpParams& chirp) {
    const IqBuffer wave = generate_chirp(chirp);
    // Dense zero-padded FFT approximates the DTFT integrals over one period.
    const std::size_t m = next_pow2(std::max<std::size_t>(16 * chirp.length, 8192));
    std::vector<cplx> spec(m, cplx{0.0, 0.0});
    std::copy(wave.samples.begin(), wave.samples.end(), spec.begin());
    fft_in_place(spec, false);

    const double fs = chirp.sample_rate_hz;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double f = (k < m / 2 ? static_cast<double>(k)
                                    : static_cast<double>(k) - static_cast<double>(m)) *
                         fs / static_cast<double>(m);
        const double p = std::norm(spec[k]);
        num += f * f * p;
        den += p;
    }
    return std::sqrt(num / den);
}

namespace {

double es_n0_linear(const CrlbConfig& cfg) {
    const double snr = std::pow(10.0, cfg.snr_db / 10.0);
    return cfg.convention == SnrConvention::per_sample
               ? static_cast<double>(cfg.chirp.length) * snr
               : snr;
}

}  // namespace

double toa_crlb_std(const CrlbConfig& cfg) {
    const double beta = cfg.chirp.bandwidth_hz / std::sqrt(12.0);
    return 1.0 / (2.0 * std::numbers::pi * beta * std::sqrt(2.0 * es_n0_linear(cfg)));
}

double tof_crlb_std(const CrlbConfig& cfg) {
    return toa_crlb_std(cfg) / std::sqrt(2.0);
}

}  // namespace twtt
