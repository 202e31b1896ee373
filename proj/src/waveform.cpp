#include "twttsim/waveform.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace twtt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gray-mapped quadrant increments: dibit -> multiples of pi/2.
// 00 -> 0, 01 -> pi/2, 11 -> pi, 10 -> 3pi/2.
constexpr std::array<unsigned, 4> kDibitToQuadrant = {0, 1, 3, 2};
constexpr std::array<unsigned, 4> kQuadrantToDibit = {0, 1, 3, 2};

// MSB-first field order: status, tx, rx integer, rx fraction.
std::array<std::uint8_t, kFramePayloadBits> frame_bits(const TimestampFrame& f) {
    std::array<std::uint8_t, kFramePayloadBits> bits{};
    std::size_t pos = 0;
    auto push = [&](std::uint64_t value, unsigned width) {
        for (unsigned i = 0; i < width; ++i)
            bits[pos++] = static_cast<std::uint8_t>((value >> (width - 1 - i)) & 1u);
    };
    push(f.status, 8);
    push(f.tx_ticks, 64);
    push(f.rx_ticks, 64);
    push(f.rx_tick_frac, 64);
    return bits;
}

TimestampFrame frame_from_bits(const std::array<std::uint8_t, kFramePayloadBits>& bits) {
    std::size_t pos = 0;
    auto pull = [&](unsigned width) {
        std::uint64_t value = 0;
        for (unsigned i = 0; i < width; ++i) value = (value << 1) | bits[pos++];
        return value;
    };
    TimestampFrame f;
    f.status = static_cast<std::uint8_t>(pull(8));
    f.tx_ticks = pull(64);
    f.rx_ticks = pull(64);
    f.rx_tick_frac = pull(64);
    return f;
}

}  // namespace

IqBuffer generate_chirp(const ChirpParams& p) {
    // Re-validate: params may arrive via aggregate init.
    ChirpParams checked(p.bandwidth_hz, p.sample_rate_hz, p.length);
    IqBuffer buf;
    buf.sample_rate = p.sample_rate_hz;
    buf.samples.resize(p.length);
    const double fs = p.sample_rate_hz;
    const double rate = p.bandwidth_hz * fs / (2.0 * static_cast<double>(p.length));
    for (std::size_t n = 0; n < p.length; ++n) {
        const double t = static_cast<double>(n) / fs;
        const double phase = kTwoPi * (rate * t - p.bandwidth_hz / 2.0) * t;
        buf.samples[n] = std::polar(1.0, phase);
    }
    return buf;
}

IqBuffer encode_frame(const TimestampFrame& f, const SymbolConfig& cfg, double sample_rate) {
    if (cfg.samples_per_symbol == 0)
        throw std::invalid_argument("encode_frame: samples_per_symbol must be positive");
    const auto bits = frame_bits(f);
    IqBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.reserve(frame_sample_count(cfg));
    unsigned quadrant = 0;  // reference symbol at phase 0
    auto emit_symbol = [&](unsigned q) {
        const cplx sym = std::polar(1.0, q * (std::numbers::pi / 2.0));
        for (unsigned s = 0; s < cfg.samples_per_symbol; ++s) buf.samples.push_back(sym);
    };
    emit_symbol(quadrant);
    for (std::size_t k = 0; k < kFrameSymbols; ++k) {
        const unsigned dibit = static_cast<unsigned>((bits[2 * k] << 1) | bits[2 * k + 1]);
        quadrant = (quadrant + kDibitToQuadrant[dibit]) % 4;
        emit_symbol(quadrant);
    }
    return buf;
}

TimestampFrame decode_frame(const IqBuffer& buf, const SymbolConfig& cfg) {
    if (cfg.samples_per_symbol == 0)
        throw std::invalid_argument("decode_frame: samples_per_symbol must be positive");
    const std::size_t needed = frame_sample_count(cfg);
    if (buf.size() < needed)
        throw std::invalid_argument("decode_frame: buffer shorter than one frame");

    const unsigned sps = cfg.samples_per_symbol;
    std::array<cplx, kFrameSymbols + 1> symbols{};
    for (std::size_t k = 0; k <= kFrameSymbols; ++k) {
        cplx acc = 0.0;
        for (unsigned s = 0; s < sps; ++s) acc += buf.samples[k * sps + s];
        symbols[k] = acc;
    }

    std::array<std::uint8_t, kFramePayloadBits> bits{};
    for (std::size_t k = 0; k < kFrameSymbols; ++k) {
        const cplx diff = symbols[k + 1] * std::conj(symbols[k]);
        const double angle = std::arg(diff);  // [-pi, pi]
        const int q = ((static_cast<int>(std::lround(angle / (std::numbers::pi / 2.0))) % 4) + 4) % 4;
        const unsigned dibit = kQuadrantToDibit[static_cast<unsigned>(q)];
        bits[2 * k] = static_cast<std::uint8_t>((dibit >> 1) & 1u);
        bits[2 * k + 1] = static_cast<std::uint8_t>(dibit & 1u);
    }
    return frame_from_bits(bits);
}

IqBuffer assemble_twtt_waveform(const IqBuffer& chirp, const IqBuffer& frame_payload,
                                std::size_t gap_samples) {
    if (!frame_payload.empty() && chirp.sample_rate != frame_payload.sample_rate)
        throw std::invalid_argument("assemble_twtt_waveform: sample-rate mismatch");
    IqBuffer out;
    out.sample_rate = chirp.sample_rate;
    out.samples.reserve(chirp.size() + gap_samples + frame_payload.size());
    out.samples.insert(out.samples.end(), chirp.samples.begin(), chirp.samples.end());
    out.samples.insert(out.samples.end(), gap_samples, cplx{0.0, 0.0});
    out.samples.insert(out.samples.end(), frame_payload.samples.begin(),
                       frame_payload.samples.end());
    return out;
}

}  // namespace twtt
