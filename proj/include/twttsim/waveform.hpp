#pragma once

#include <cstdint>
#include <stdexcept>

#include "twttsim/iq_buffer.hpp"

namespace twtt {

// Linear up-chirp parameters. The waveform sweeps -bandwidth/2 .. +bandwidth/2
// over length/sample_rate seconds.
struct ChirpParams {
    double bandwidth_hz = 36e6;
    double sample_rate_hz = 61.44e6;
    std::size_t length = 512;

    ChirpParams() = default;
    ChirpParams(double bc, double fs, std::size_t lc)
        : bandwidth_hz(bc), sample_rate_hz(fs), length(lc) {
        if (!(bandwidth_hz > 0.0) || !(bandwidth_hz < sample_rate_hz))
            throw std::invalid_argument("ChirpParams: need 0 < bandwidth < sample_rate");
        if (length < 2)
            throw std::invalid_argument("ChirpParams: length must be >= 2");
    }

    double duration_s() const { return static_cast<double>(length) / sample_rate_hz; }
    double sweep_rate_hz_per_s() const { return bandwidth_hz / duration_s(); }
};

IqBuffer generate_chirp(const ChirpParams& p);

struct SymbolConfig {
    unsigned samples_per_symbol = 8;
};

// DQPSK payload: 8 status bits, 64-bit TX timestamp in rf_clk ticks, and a
// 128-bit RX timestamp as 64-bit integer ticks plus a 64-bit binary tick
// fraction (units of 2^-64 tick).
struct TimestampFrame {
    std::uint8_t status = 0;
    std::uint64_t tx_ticks = 0;
    std::uint64_t rx_ticks = 0;
    std::uint64_t rx_tick_frac = 0;

    bool operator==(const TimestampFrame&) const = default;
};

inline constexpr std::size_t kFramePayloadBits = 8 + 64 + 128;
inline constexpr std::size_t kFrameSymbols = kFramePayloadBits / 2;  // + 1 reference symbol

// Number of baseband samples a modulated frame occupies.
inline std::size_t frame_sample_count(const SymbolConfig& cfg) {
    return (kFrameSymbols + 1) * cfg.samples_per_symbol;
}

IqBuffer encode_frame(const TimestampFrame& f, const SymbolConfig& cfg, double sample_rate);
TimestampFrame decode_frame(const IqBuffer& buf, const SymbolConfig& cfg);

// chirp || gap zeros || payload. Sample rates must match.
IqBuffer assemble_twtt_waveform(const IqBuffer& chirp, const IqBuffer& frame_payload,
                                std::size_t gap_samples);

}  // namespace twtt
