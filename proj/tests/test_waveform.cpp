#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "twttsim/waveform.hpp"

using namespace twtt;

namespace {

const ChirpParams kPaperChirp{38e6, 61.44e6, 512};

}  // namespace

TEST_CASE("chirp starts at phase zero and has unit magnitude") {
    const IqBuffer buf = generate_chirp(kPaperChirp);
    REQUIRE(buf.size() == 512);
    CHECK(buf.samples[0].real() == doctest::Approx(1.0));
    CHECK(buf.samples[0].imag() == doctest::Approx(0.0));
    for (const auto& s : buf.samples) CHECK(std::fabs(std::abs(s) - 1.0) < 1e-12);
}

TEST_CASE("chirp duration and sweep rate match the reference configuration") {
    CHECK(kPaperChirp.duration_s() == doctest::Approx(8.33e-6).epsilon(1e-2));
    CHECK(kPaperChirp.sweep_rate_hz_per_s() == doctest::Approx(4.56e12).epsilon(1e-2));
}

TEST_CASE("instantaneous frequency sweeps -B/2 to +B/2") {
    const ChirpParams p{38e6, 61.44e6, 512};
    const IqBuffer buf = generate_chirp(p);
    // Discrete instantaneous frequency from adjacent-sample phase differences.
    auto inst_freq = [&](std::size_t n) {
        const double dphi = std::arg(buf.samples[n + 1] * std::conj(buf.samples[n]));
        return dphi * p.sample_rate_hz / (2.0 * std::numbers::pi);
    };
    const double bin = p.sample_rate_hz / static_cast<double>(p.length);
    CHECK(std::fabs(inst_freq(p.length / 2)) < bin);              // ~0 Hz mid-sweep
    CHECK(inst_freq(0) == doctest::Approx(-p.bandwidth_hz / 2).epsilon(0.02));
    CHECK(inst_freq(p.length - 2) == doctest::Approx(p.bandwidth_hz / 2).epsilon(0.02));
}

TEST_CASE("chirp samples equal the closed form at integer positions") {
    const IqBuffer buf = generate_chirp(kPaperChirp);
    for (std::size_t n = 0; n < buf.size(); n += 17) {
        const cplx ref = oracle::chirp_at(kPaperChirp, static_cast<double>(n));
        CHECK(std::abs(buf.samples[n] - ref) < 1e-12);
    }
}

TEST_CASE("chirp autocorrelation peaks at lag zero with magnitude l_c") {
    const IqBuffer buf = generate_chirp(ChirpParams{38e6, 61.44e6, 256});
    const auto corr = oracle::direct_correlation(buf.samples, buf.samples);
    const std::size_t zero_lag = buf.size() - 1;
    CHECK(std::abs(corr[zero_lag]) == doctest::Approx(256.0).epsilon(1e-12));
    for (std::size_t i = 0; i < corr.size(); ++i)
        if (i != zero_lag) CHECK(std::abs(corr[i]) < std::abs(corr[zero_lag]));
}

TEST_CASE("chirp parameter validation") {
    CHECK_THROWS_AS(ChirpParams(70e6, 61.44e6, 512), std::invalid_argument);
    CHECK_THROWS_AS(ChirpParams(0.0, 61.44e6, 512), std::invalid_argument);
    CHECK_THROWS_AS(ChirpParams(38e6, 61.44e6, 1), std::invalid_argument);
}

TEST_CASE("all-zero frame encodes as constant differential increments") {
    const SymbolConfig cfg{8};
    const IqBuffer buf = encode_frame(TimestampFrame{}, cfg, 61.44e6);
    REQUIRE(buf.size() == (kFrameSymbols + 1) * 8);
    // Dibit 00 maps to increment 0: every symbol equals the reference.
    for (const auto& s : buf.samples) CHECK(std::abs(s - cplx{1.0, 0.0}) < 1e-12);
}

TEST_CASE("frame codec round-trips random frames bit-exactly") {
    std::mt19937_64 gen(123);
    const SymbolConfig cfg{8};
    for (int i = 0; i < 1000; ++i) {
        TimestampFrame f;
        f.status = static_cast<std::uint8_t>(gen());
        f.tx_ticks = gen();
        f.rx_ticks = gen();
        f.rx_tick_frac = gen();
        const TimestampFrame back = decode_frame(encode_frame(f, cfg, 61.44e6), cfg);
        REQUIRE(back == f);
    }
}

TEST_CASE("decode is invariant to a constant phase rotation") {
    std::mt19937_64 gen(321);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    const SymbolConfig cfg{4};
    for (int i = 0; i < 100; ++i) {
        TimestampFrame f;
        f.status = static_cast<std::uint8_t>(gen());
        f.tx_ticks = gen();
        f.rx_ticks = gen();
        f.rx_tick_frac = gen();
        IqBuffer buf = encode_frame(f, cfg, 61.44e6);
        const cplx rot = std::polar(1.0, angle(gen));
        for (auto& s : buf.samples) s *= rot;
        REQUIRE(decode_frame(buf, cfg) == f);
    }
}

TEST_CASE("decode rejects short buffers") {
    const SymbolConfig cfg{8};
    IqBuffer buf = encode_frame(TimestampFrame{}, cfg, 61.44e6);
    buf.samples.resize(buf.size() - 1);
    CHECK_THROWS_AS(decode_frame(buf, cfg), std::invalid_argument);
}

TEST_CASE("assemble_twtt_waveform concatenates chirp, gap, payload") {
    const IqBuffer chirp = generate_chirp(ChirpParams{38e6, 61.44e6, 512});
    const IqBuffer none{{}, 61.44e6};
    CHECK(assemble_twtt_waveform(chirp, none, 0).size() == 512);

    IqBuffer payload;
    payload.sample_rate = 61.44e6;
    payload.samples.assign(800, cplx{0.5, 0.5});
    const IqBuffer out = assemble_twtt_waveform(chirp, payload, 64);
    REQUIRE(out.size() == 1376);
    for (std::size_t i = 512; i < 576; ++i) CHECK(out.samples[i] == cplx{0.0, 0.0});
    CHECK(out.samples[576] == payload.samples[0]);

    IqBuffer wrong_rate = payload;
    wrong_rate.sample_rate = 1e6;
    CHECK_THROWS_AS(assemble_twtt_waveform(chirp, wrong_rate, 0), std::invalid_argument);
}

TEST_CASE("assembled waveform duration sits in the tens of microseconds") {
    const SymbolConfig cfg{8};
    const IqBuffer chirp = generate_chirp(kPaperChirp);
    const IqBuffer payload = encode_frame(TimestampFrame{}, cfg, kPaperChirp.sample_rate_hz);
    const IqBuffer out = assemble_twtt_waveform(chirp, payload, 64);
    const double duration_us = out.duration_s() * 1e6;
    CHECK(duration_us > 15.0);
    CHECK(duration_us < 30.0);
}
