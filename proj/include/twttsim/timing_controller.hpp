#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "twttsim/iq_buffer.hpp"

namespace twtt {

// rf_clk tick count with an optional binary fraction (units of 2^-64 tick).
// Baseband samples advance one per two rf_clk ticks (f_rf_clk = 2 * f_s), so
// sample k of a stream starting at tick t0 sits at tick t0 + 2k.
struct Ticks {
    std::uint64_t count = 0;
    std::uint64_t frac = 0;

    bool operator==(const Ticks&) const = default;
};

inline double ticks_to_local_seconds(const Ticks& t, double f_rf_clk_hz) {
    return (static_cast<double>(t.count) +
            static_cast<double>(t.frac) * 0x1p-64) / f_rf_clk_hz;
}

// base_tick plus a (possibly fractional, possibly negative) sample lag,
// carried exactly into the 64.64 fixed-point tick format.
Ticks ticks_from_sample_lag(std::uint64_t base_tick, double lag_samples);

enum class RxTriggerMode { timestamp, rssi };

struct RxTriggerConfig {
    RxTriggerMode mode = RxTriggerMode::rssi;
    std::uint64_t rx_start_tick = 0;   // timestamp mode
    double rssi_threshold = 0.1;       // linear power
    unsigned rssi_window = 4;          // samples; trailing window ending at the candidate
    std::size_t capture_length = 0;    // samples
};

struct CaptureRecord {
    Ticks ts_start;     // tick of the first accepted sample
    IqBuffer samples;   // exactly capture_length samples, unmodified input slice
};

class LateScheduleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A gated transmission: the output stream is zero for every sample tick before
// start_tick and carries the waveform verbatim from start_tick on.
class ScheduledTx {
public:
    ScheduledTx(IqBuffer waveform, std::uint64_t start_tick)
        : waveform_(std::move(waveform)), start_tick_(start_tick) {}

    std::uint64_t start_tick() const { return start_tick_; }
    const IqBuffer& waveform() const { return waveform_; }

    // Renders the emitted stream over a sample-aligned window.
    IqBuffer emit(std::uint64_t window_start_tick, std::size_t n_samples) const;

private:
    IqBuffer waveform_;
    std::uint64_t start_tick_;
};

// Status register bits.
inline constexpr std::uint64_t kStatusTxScheduled = 1u << 0;
inline constexpr std::uint64_t kStatusTxLate = 1u << 1;
inline constexpr std::uint64_t kStatusRxTriggered = 1u << 2;
inline constexpr std::uint64_t kStatusRxNoTrigger = 1u << 3;

// Behavioral model of the PL timing controller: a free-running rf_clk tick
// counter, timestamp-gated TX, and RX capture triggered by timestamp or RSSI.
// Configuration mirrors the PS register interface: named 64-bit registers,
// with rssi_threshold held as Q32.32 fixed point.
class TimingController {
public:
    explicit TimingController(double f_rf_clk_hz);

    double f_rf_clk() const { return f_rf_clk_hz_; }
    std::uint64_t counter_now() const { return now_; }
    void advance_to(std::uint64_t tick);

    // Rejects start times already in the past (LateScheduleError) and sets the
    // corresponding status bit.
    ScheduledTx schedule_tx(IqBuffer waveform, std::uint64_t tx_start_tick);

    // Scans a sample stream (sample k at tick stream_start_tick + 2k).
    // timestamp mode: capture begins at the first sample tick >= rx_start.
    // rssi mode: capture begins at the first sample whose trailing
    // rssi_window-sample mean power reaches the threshold; samples before the
    // stream head count as zero. Returns empty on no trigger; throws if the
    // trigger leaves fewer than capture_length samples.
    std::optional<CaptureRecord> run_rx(const IqBuffer& stream, std::uint64_t stream_start_tick,
                                        const RxTriggerConfig& cfg);

    // PS register mirror.
    void write_register(std::string_view name, std::uint64_t value);
    std::uint64_t read_register(std::string_view name) const;
    RxTriggerConfig trigger_config_from_registers() const;

private:
    double f_rf_clk_hz_;
    std::uint64_t now_ = 0;
    std::map<std::string, std::uint64_t, std::less<>> registers_;
};

}  // namespace twtt
