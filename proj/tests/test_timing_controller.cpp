#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "twttsim/timing_controller.hpp"
#include "twttsim/waveform.hpp"

using namespace twtt;

namespace {

constexpr double kFrf = 122.88e6;

IqBuffer burst_stream(std::mt19937_64& gen, std::size_t len, std::size_t burst_at,
                      std::size_t burst_len, double noise_amp) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    IqBuffer s;
    s.sample_rate = kFrf / 2;
    s.samples.resize(len);
    for (auto& v : s.samples) v = {noise_amp * u(gen), noise_amp * u(gen)};
    for (std::size_t i = burst_at; i < std::min(len, burst_at + burst_len); ++i)
        s.samples[i] = std::polar(1.0, u(gen) * 3.14159);
    return s;
}

}  // namespace

TEST_CASE("ticks map to seconds") {
    CHECK(ticks_to_local_seconds({0, 0}, kFrf) == 0.0);
    CHECK(ticks_to_local_seconds({122880000, 0}, kFrf) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ticks_to_local_seconds({0, 1ull << 63}, kFrf) ==
          doctest::Approx(0.5 / kFrf).epsilon(1e-15));
}

TEST_CASE("ticks_from_sample_lag carries fractional samples exactly") {
    const Ticks t = ticks_from_sample_lag(1000, 2.25);  // 4.5 ticks
    CHECK(t.count == 1004);
    CHECK(t.frac == (1ull << 63));

    const Ticks neg = ticks_from_sample_lag(1000, -1.75);  // -3.5 ticks
    CHECK(neg.count == 996);
    CHECK(neg.frac == (1ull << 63));

    const Ticks whole = ticks_from_sample_lag(1000, -0.5);  // -1 tick exactly
    CHECK(whole.count == 999);
    CHECK(whole.frac == 0);
}

TEST_CASE("TX gating: waveform appears exactly at the scheduled tick") {
    TimingController ctrl(kFrf);
    IqBuffer wave;
    wave.sample_rate = kFrf / 2;
    wave.samples = {{1.0, 0.0}, {0.5, -0.5}, {0.0, 1.0}};
    const auto sched = ctrl.schedule_tx(wave, 1000);
    const IqBuffer out = sched.emit(0, 520);
    for (std::size_t i = 0; i < 500; ++i) CHECK(out.samples[i] == cplx{0.0, 0.0});
    CHECK(out.samples[500] == wave.samples[0]);  // sample tick 1000
    CHECK(out.samples[501] == wave.samples[1]);
    CHECK(out.samples[502] == wave.samples[2]);
    CHECK(out.samples[503] == cplx{0.0, 0.0});
}

TEST_CASE("TX gating: boundary schedule at the current counter is accepted") {
    TimingController ctrl(kFrf);
    ctrl.advance_to(2000);
    IqBuffer wave;
    wave.sample_rate = kFrf / 2;
    wave.samples = {{1.0, 0.0}};
    CHECK_NOTHROW(ctrl.schedule_tx(wave, 2000));
    CHECK((ctrl.read_register("status") & kStatusTxScheduled) != 0);
    CHECK_THROWS_AS(ctrl.schedule_tx(wave, 1998), LateScheduleError);
    CHECK((ctrl.read_register("status") & kStatusTxLate) != 0);
}

TEST_CASE("TX gating: two schedules separated by a known tick delta") {
    TimingController ctrl(kFrf);
    IqBuffer wave;
    wave.sample_rate = kFrf / 2;
    wave.samples = {{1.0, 0.0}, {1.0, 0.0}};
    const std::uint64_t delta = 4096;
    const auto tx1 = ctrl.schedule_tx(wave, 10000);
    const auto tx2 = ctrl.schedule_tx(wave, 10000 + delta);
    const IqBuffer s1 = tx1.emit(0, 8000);
    const IqBuffer s2 = tx2.emit(0, 8000);
    // Event-log inspection: first nonzero sample index of each stream.
    auto first_nonzero = [](const IqBuffer& s) {
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.samples[i] != cplx{0.0, 0.0}) return i;
        return s.size();
    };
    CHECK(2 * (first_nonzero(s2) - first_nonzero(s1)) == delta);
}

TEST_CASE("RX timestamp mode starts the capture at rx_start") {
    TimingController ctrl(kFrf);
    IqBuffer stream;
    stream.sample_rate = kFrf / 2;
    stream.samples.assign(64, cplx{0.25, 0.0});
    RxTriggerConfig cfg;
    cfg.mode = RxTriggerMode::timestamp;
    cfg.rx_start_tick = 2000;
    cfg.capture_length = 8;
    const auto rec = ctrl.run_rx(stream, 1936, cfg);
    REQUIRE(rec.has_value());
    CHECK(rec->ts_start.count == 2000);
    CHECK(rec->samples.size() == 8);
    CHECK((ctrl.read_register("status") & kStatusRxTriggered) != 0);
}

TEST_CASE("RX rssi mode triggers at the documented window condition") {
    TimingController ctrl(kFrf);
    // Zeros, then a unit-power burst at sample 100 (tick 5000 + 200).
    IqBuffer stream;
    stream.sample_rate = kFrf / 2;
    stream.samples.assign(256, cplx{0.0, 0.0});
    for (std::size_t i = 100; i < 200; ++i) stream.samples[i] = {1.0, 0.0};
    RxTriggerConfig cfg;
    cfg.mode = RxTriggerMode::rssi;
    cfg.rssi_threshold = 0.25;
    cfg.rssi_window = 4;
    cfg.capture_length = 32;
    const auto rec = ctrl.run_rx(stream, 5000, cfg);
    REQUIRE(rec.has_value());
    // Trailing 4-sample mean reaches 0.25 at the first burst sample
    // (1 + 0 + 0 + 0) / 4.
    CHECK(rec->ts_start.count == 5000 + 2 * 100);
    // Captured samples are the unmodified input slice.
    for (std::size_t i = 0; i < rec->samples.size(); ++i)
        CHECK(rec->samples.samples[i] == stream.samples[100 + i]);
}

TEST_CASE("RX rssi mode: all-zero stream reports no trigger") {
    TimingController ctrl(kFrf);
    IqBuffer stream;
    stream.sample_rate = kFrf / 2;
    stream.samples.assign(128, cplx{0.0, 0.0});
    RxTriggerConfig cfg;
    cfg.mode = RxTriggerMode::rssi;
    cfg.rssi_threshold = 0.25;
    cfg.rssi_window = 4;
    cfg.capture_length = 16;
    CHECK_FALSE(ctrl.run_rx(stream, 0, cfg).has_value());
    CHECK((ctrl.read_register("status") & kStatusRxNoTrigger) != 0);
}

TEST_CASE("RX rssi trigger matches the brute-force scan oracle on random streams") {
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<std::size_t> burst_pos(10, 600);
    std::uniform_real_distribution<double> thresh(0.05, 0.6);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t at = burst_pos(gen);
        IqBuffer stream = burst_stream(gen, 1024, at, 300, 0.05);
        RxTriggerConfig cfg;
        cfg.mode = RxTriggerMode::rssi;
        cfg.rssi_threshold = thresh(gen);
        cfg.rssi_window = 1 + static_cast<unsigned>(gen() % 8);
        cfg.capture_length = 64;
        TimingController ctrl(kFrf);
        const auto expect = oracle::rssi_scan(stream.samples, cfg.rssi_window, cfg.rssi_threshold);
        if (expect && *expect + cfg.capture_length > stream.size()) {
            CHECK_THROWS(ctrl.run_rx(stream, 4096, cfg));
            continue;
        }
        const auto rec = ctrl.run_rx(stream, 4096, cfg);
        if (!expect) {
            CHECK_FALSE(rec.has_value());
            continue;
        }
        REQUIRE(rec.has_value());
        CHECK(rec->ts_start.count == 4096 + 2 * *expect);
        for (std::size_t i = 0; i < cfg.capture_length; ++i)
            CHECK(rec->samples.samples[i] == stream.samples[*expect + i]);
    }
}

TEST_CASE("register mirror round-trips the trigger configuration") {
    TimingController ctrl(kFrf);
    ctrl.write_register("rx_mode", 1);
    ctrl.write_register("rssi_threshold", static_cast<std::uint64_t>(0.25 * 0x1p32));
    ctrl.write_register("rssi_window", 4);
    ctrl.write_register("capture_length", 512);
    const RxTriggerConfig cfg = ctrl.trigger_config_from_registers();
    CHECK(cfg.mode == RxTriggerMode::rssi);
    CHECK(cfg.rssi_threshold == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(cfg.rssi_window == 4);
    CHECK(cfg.capture_length == 512);
    CHECK_THROWS_AS(ctrl.write_register("bogus", 1), std::invalid_argument);
    CHECK_THROWS_AS(ctrl.read_register("bogus"), std::invalid_argument);
}

TEST_CASE("capture overrun is reported distinctly from no-trigger") {
    TimingController ctrl(kFrf);
    IqBuffer stream;
    stream.sample_rate = kFrf / 2;
    stream.samples.assign(64, cplx{0.0, 0.0});
    for (std::size_t i = 60; i < 64; ++i) stream.samples[i] = {1.0, 0.0};
    RxTriggerConfig cfg;
    cfg.mode = RxTriggerMode::rssi;
    cfg.rssi_threshold = 0.25;
    cfg.rssi_window = 4;
    cfg.capture_length = 32;
    CHECK_THROWS_AS(ctrl.run_rx(stream, 0, cfg), std::runtime_error);
}
