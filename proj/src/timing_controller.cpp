#include "twttsim/timing_controller.hpp"

#include <cmath>

namespace twtt {

Ticks ticks_from_sample_lag(std::uint64_t base_tick, double lag_samples) {
    const double delta_ticks = 2.0 * lag_samples;
    const double int_part = std::floor(delta_ticks);
    double frac = delta_ticks - int_part;  // [0, 1)
    const auto offset = static_cast<std::int64_t>(int_part);
    const auto base = static_cast<std::int64_t>(base_tick);
    if (offset < 0 && base + offset < 0)
        throw std::invalid_argument("ticks_from_sample_lag: lag reaches before tick zero");
    Ticks t;
    t.count = static_cast<std::uint64_t>(base + offset);
    double scaled = frac * 0x1p64;
    if (scaled >= 0x1p64) {  // rounded up to a full tick
        t.count += 1;
        scaled = 0.0;
    }
    t.frac = static_cast<std::uint64_t>(scaled);
    return t;
}

IqBuffer ScheduledTx::emit(std::uint64_t window_start_tick, std::size_t n_samples) const {
    if (window_start_tick % 2 != 0)
        throw std::invalid_argument("ScheduledTx::emit: window must start on a sample tick");
    // Gate opens at the first sample tick >= start_tick.
    const std::uint64_t first_emit = start_tick_ + (start_tick_ % 2);
    IqBuffer out;
    out.sample_rate = waveform_.sample_rate;
    out.samples.assign(n_samples, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::uint64_t tick = window_start_tick + 2 * i;
        if (tick < first_emit) continue;
        const std::uint64_t idx = (tick - first_emit) / 2;
        if (idx >= waveform_.size()) break;
        out.samples[i] = waveform_.samples[idx];
    }
    return out;
}

TimingController::TimingController(double f_rf_clk_hz) : f_rf_clk_hz_(f_rf_clk_hz) {
    if (!(f_rf_clk_hz > 0.0))
        throw std::invalid_argument("TimingController: f_rf_clk must be positive");
    registers_ = {
        {"tx_start", 0},      {"rx_start", 0},       {"rx_mode", 1},
        {"rssi_threshold", 0}, {"rssi_window", 4},    {"capture_length", 0},
        {"status", 0},
    };
}

void TimingController::advance_to(std::uint64_t tick) {
    if (tick < now_)
        throw std::invalid_argument("TimingController::advance_to: counter is monotonic");
    now_ = tick;
}

ScheduledTx TimingController::schedule_tx(IqBuffer waveform, std::uint64_t tx_start_tick) {
    registers_["tx_start"] = tx_start_tick;
    if (tx_start_tick < now_) {
        registers_["status"] |= kStatusTxLate;
        throw LateScheduleError("schedule_tx: start tick already passed");
    }
    registers_["status"] |= kStatusTxScheduled;
    return ScheduledTx(std::move(waveform), tx_start_tick);
}

std::optional<CaptureRecord> TimingController::run_rx(const IqBuffer& stream,
                                                      std::uint64_t stream_start_tick,
                                                      const RxTriggerConfig& cfg) {
    if (stream_start_tick % 2 != 0)
        throw std::invalid_argument("run_rx: stream must start on a sample tick");
    if (cfg.capture_length == 0) throw std::invalid_argument("run_rx: capture_length must be > 0");
    if (cfg.rssi_window < 1) throw std::invalid_argument("run_rx: rssi_window must be >= 1");

    const std::size_t n = stream.size();
    std::optional<std::size_t> trigger;

    if (cfg.mode == RxTriggerMode::timestamp) {
        if (cfg.rx_start_tick <= stream_start_tick) {
            trigger = 0;
        } else {
            const std::uint64_t delta = cfg.rx_start_tick - stream_start_tick;
            const std::uint64_t k = (delta + 1) / 2;  // first sample tick >= rx_start
            if (k < n) trigger = static_cast<std::size_t>(k);
        }
    } else {
        // Trailing mean of |x|^2 over rssi_window samples ending at the
        // candidate; samples before the stream head count as zero.
        const double w = static_cast<double>(cfg.rssi_window);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t begin = (k + 1 >= cfg.rssi_window) ? k + 1 - cfg.rssi_window : 0;
            double acc = 0.0;
            for (std::size_t j = begin; j <= k; ++j) acc += std::norm(stream.samples[j]);
            if (acc / w >= cfg.rssi_threshold) {
                trigger = k;
                break;
            }
        }
    }

    if (!trigger) {
        registers_["status"] |= kStatusRxNoTrigger;
        return std::nullopt;
    }
    if (*trigger + cfg.capture_length > n)
        throw std::runtime_error("run_rx: capture would overrun the stream");

    CaptureRecord rec;
    rec.ts_start.count = stream_start_tick + 2 * static_cast<std::uint64_t>(*trigger);
    rec.samples.sample_rate = stream.sample_rate;
    rec.samples.samples.assign(stream.samples.begin() + static_cast<std::ptrdiff_t>(*trigger),
                               stream.samples.begin() +
                                   static_cast<std::ptrdiff_t>(*trigger + cfg.capture_length));
    registers_["status"] |= kStatusRxTriggered;
    const std::uint64_t advance = rec.ts_start.count + 2 * (cfg.capture_length - 1);
    if (advance > now_) now_ = advance;
    return rec;
}

void TimingController::write_register(std::string_view name, std::uint64_t value) {
    auto it = registers_.find(name);
    if (it == registers_.end())
        throw std::invalid_argument("write_register: unknown register " + std::string(name));
    it->second = value;
}

std::uint64_t TimingController::read_register(std::string_view name) const {
    auto it = registers_.find(name);
    if (it == registers_.end())
        throw std::invalid_argument("read_register: unknown register " + std::string(name));
    return it->second;
}

RxTriggerConfig TimingController::trigger_config_from_registers() const {
    RxTriggerConfig cfg;
    cfg.mode = read_register("rx_mode") == 0 ? RxTriggerMode::timestamp : RxTriggerMode::rssi;
    cfg.rx_start_tick = read_register("rx_start");
    cfg.rssi_threshold = static_cast<double>(read_register("rssi_threshold")) * 0x1p-32;
    cfg.rssi_window = static_cast<unsigned>(read_register("rssi_window"));
    cfg.capture_length = static_cast<std::size_t>(read_register("capture_length"));
    return cfg;
}

}  // namespace twtt
