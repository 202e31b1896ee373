#include "twttsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "twttsim/crlb.hpp"
#include "twttsim/toa_estimator.hpp"

namespace twtt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b + 0x9E3779B97F4A7C15ull));
}

std::uint64_t even_floor(double tick) {
    auto t = static_cast<std::uint64_t>(std::floor(tick));
    return t - (t % 2);
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct NodeState {
    TimingController controller;
    explicit NodeState(double f_rf) : controller(f_rf) {}
};

// One direction of the exchange: gated TX on one node, windowed capture +
// matched-filter ToA on the other.
struct LegResult {
    CaptureRecord capture;
    ToaEstimate toa;
};

LegResult run_leg(const ScenarioConfig& cfg, const ScheduledTx& sched,
                  const ClockParams& clk_tx, const ClockParams& clk_rx,
                  const LinkParams& link, NodeState& rx_node, std::size_t capture_length,
                  std::uint64_t noise_seed, const char* stage) {
    const double f_rf = cfg.f_rf_clk();
    const double tau_tx = static_cast<double>(sched.start_tick()) / f_rf;
    const double t_emit = global_from_local(clk_tx, tau_tx);
    const double tau_rx_true = local_from_global(clk_rx, t_emit + link.tof_s());

    const std::uint64_t arrival_tick = even_floor(tau_rx_true * f_rf);
    const std::uint64_t pre_ticks = 2 * static_cast<std::uint64_t>(cfg.pre_trigger_samples);
    if (arrival_tick < pre_ticks)
        throw ExchangeError(stage, "listen window would start before tick zero");
    const std::uint64_t window_start = arrival_tick - pre_ticks;
    const std::size_t stream_len = cfg.pre_trigger_samples + capture_length + 64;

    IqBuffer stream = sample_received(sched.waveform(), t_emit, clk_tx, clk_rx, link,
                                      static_cast<double>(window_start) / f_rf, stream_len);
    stream = add_awgn(stream, link.snr_db, noise_seed);

    // Trigger configuration arrives through the PS register mirror.
    auto& ctrl = rx_node.controller;
    ctrl.write_register("rx_mode", 1);  // rssi
    ctrl.write_register("rssi_threshold",
                        static_cast<std::uint64_t>(cfg.rssi_threshold * 0x1p32));
    ctrl.write_register("rssi_window", cfg.rssi_window);
    ctrl.write_register("capture_length", capture_length);
    if (window_start > ctrl.counter_now()) ctrl.advance_to(window_start);

    std::optional<CaptureRecord> capture;
    try {
        capture = ctrl.run_rx(stream, window_start, ctrl.trigger_config_from_registers());
    } catch (const std::exception& e) {
        throw ExchangeError(stage, e.what());
    }
    if (!capture) throw ExchangeError(stage, "no trigger");

    std::optional<ToaEstimate> toa;
    try {
        toa = estimate_toa(capture->samples,
                           ticks_to_local_seconds(capture->ts_start, f_rf), cfg.chirp,
                           cfg.detect_threshold, cfg.nls_window_halfwidth);
    } catch (const std::exception& e) {
        throw ExchangeError(stage, e.what());
    }
    if (!toa) throw ExchangeError(stage, "no detection");
    return {std::move(*capture), *toa};
}

struct MeasurementRecord {
    TwttMeasurement measurement;
    TimestampFrame sent_frame;
    TimestampFrame decoded_frame;
};

MeasurementRecord run_measurement(const ScenarioConfig& cfg, int index,
                                  std::uint64_t a_tx_tick, NodeState& node_a,
                                  NodeState& node_b, const IqBuffer& chirp_wave,
                                  std::uint64_t seed_fwd, std::uint64_t seed_rev) {
    const double f_rf = cfg.f_rf_clk();
    const std::size_t frame_len = frame_sample_count(cfg.symbols);
    const std::size_t capture_b = cfg.chirp.length + cfg.capture_margin;
    const std::size_t capture_a =
        cfg.chirp.length + cfg.gap_samples + frame_len + cfg.capture_margin;

    // A -> B: chirp only, gated at a_tx_tick.
    ScheduledTx sched_a = [&] {
        try {
            return node_a.controller.schedule_tx(chirp_wave, a_tx_tick);
        } catch (const std::exception& e) {
            throw ExchangeError("tx_control A", e.what());
        }
    }();
    const double tau_a_tx = static_cast<double>(a_tx_tick) / f_rf;

    LegResult leg_b = run_leg(cfg, sched_a, cfg.clock_a, cfg.clock_b, cfg.link, node_b,
                              capture_b, seed_fwd, "rx B");
    const Ticks tau_b_rx_ticks =
        ticks_from_sample_lag(leg_b.capture.ts_start.count, leg_b.toa.lag_samples);

    // B's reply: chirp + DQPSK timestamps, gated turnaround_ticks after the
    // trigger timestamp.
    const std::uint64_t b_tx_tick = leg_b.capture.ts_start.count + cfg.turnaround_ticks;
    TimestampFrame frame;
    frame.status = cfg.status_byte;
    frame.tx_ticks = b_tx_tick;
    frame.rx_ticks = tau_b_rx_ticks.count;
    frame.rx_tick_frac = tau_b_rx_ticks.frac;
    const IqBuffer payload = encode_frame(frame, cfg.symbols, cfg.chirp.sample_rate_hz);
    const IqBuffer reply = assemble_twtt_waveform(chirp_wave, payload, cfg.gap_samples);

    ScheduledTx sched_b = [&] {
        try {
            return node_b.controller.schedule_tx(reply, b_tx_tick);
        } catch (const std::exception& e) {
            throw ExchangeError("tx_control B", e.what());
        }
    }();

    // B -> A: the CFO and phase difference flip sign with direction.
    LinkParams reverse = cfg.link;
    reverse.cfo_hz = -cfg.link.cfo_hz;
    reverse.phase_err_rad = -cfg.link.phase_err_rad;
    LegResult leg_a = run_leg(cfg, sched_b, cfg.clock_b, cfg.clock_a, reverse, node_a,
                              capture_a, seed_rev, "rx A");

    // Recover B's timestamps from the decoded frame; the chirp lag anchors the
    // payload position inside the capture.
    const auto chirp_offset = static_cast<long>(std::lround(leg_a.toa.lag_samples));
    const long payload_offset =
        chirp_offset + static_cast<long>(cfg.chirp.length + cfg.gap_samples);
    if (payload_offset < 0 ||
        static_cast<std::size_t>(payload_offset) + frame_len > leg_a.capture.samples.size())
        throw ExchangeError("frame A", "payload window outside capture");
    IqBuffer payload_rx;
    payload_rx.sample_rate = cfg.chirp.sample_rate_hz;
    payload_rx.samples.assign(
        leg_a.capture.samples.samples.begin() + payload_offset,
        leg_a.capture.samples.samples.begin() + payload_offset +
            static_cast<std::ptrdiff_t>(frame_len));
    TimestampFrame decoded;
    try {
        decoded = decode_frame(payload_rx, cfg.symbols);
    } catch (const std::exception& e) {
        throw ExchangeError("frame A", e.what());
    }
    if (decoded.status != cfg.status_byte)
        throw ExchangeError("frame A", "status-bit mismatch");

    MeasurementRecord rec;
    rec.sent_frame = frame;
    rec.decoded_frame = decoded;
    rec.measurement.index = index;
    rec.measurement.tau_a_tx = tau_a_tx;
    rec.measurement.tau_b_rx =
        ticks_to_local_seconds({decoded.rx_ticks, decoded.rx_tick_frac}, f_rf);
    rec.measurement.tau_b_tx = static_cast<double>(decoded.tx_ticks) / f_rf;
    rec.measurement.tau_a_rx = leg_a.toa.toa_local_seconds;
    return rec;
}

}  // namespace

void ScenarioConfig::validate() const {
    ChirpParams check(chirp.bandwidth_hz, chirp.sample_rate_hz, chirp.length);
    (void)check;
    if (first_tx_tick % 2 || turnaround_ticks % 2 || meas_spacing_ticks % 2 ||
        trial_spacing_ticks % 2)
        throw std::invalid_argument("ScenarioConfig: tick values must be sample-aligned (even)");
    if (n_trials < 1) throw std::invalid_argument("ScenarioConfig: n_trials must be >= 1");
    if (symbols.samples_per_symbol == 0)
        throw std::invalid_argument("ScenarioConfig: samples_per_symbol must be positive");
    if (!(rssi_threshold > 0.0))
        throw std::invalid_argument("ScenarioConfig: rssi_threshold must be positive");
    if (rssi_window < 1) throw std::invalid_argument("ScenarioConfig: rssi_window must be >= 1");
    if (!(detect_threshold > 0.0) || !(detect_threshold <= 1.0))
        throw std::invalid_argument("ScenarioConfig: detect_threshold must be in (0, 1]");
    if (link.distance_m < 0.0)
        throw std::invalid_argument("ScenarioConfig: distance must be non-negative");
    const std::size_t capture_b = chirp.length + capture_margin;
    if (turnaround_ticks < 2 * capture_b)
        throw std::invalid_argument(
            "ScenarioConfig: turnaround_ticks must clear B's capture window");
    const std::size_t frame_len = frame_sample_count(symbols);
    const std::size_t capture_a = chirp.length + gap_samples + frame_len + capture_margin;
    if (meas_spacing_ticks < 2 * (capture_a + pre_trigger_samples) + turnaround_ticks)
        throw std::invalid_argument(
            "ScenarioConfig: meas_spacing_ticks too small for one exchange");
}

ExchangeRecord run_exchange(const ScenarioConfig& cfg, std::uint64_t trial_seed,
                            std::uint64_t timeline_offset_ticks) {
    cfg.validate();
    if (timeline_offset_ticks % 2)
        throw std::invalid_argument("run_exchange: timeline offset must be even");

    const IqBuffer chirp_wave = generate_chirp(cfg.chirp);
    NodeState node_a(cfg.f_rf_clk());
    NodeState node_b(cfg.f_rf_clk());

    const std::uint64_t first_tick = cfg.first_tx_tick + timeline_offset_ticks;
    MeasurementRecord m0 =
        run_measurement(cfg, 0, first_tick, node_a, node_b, chirp_wave,
                        mix_seed(trial_seed, 1), mix_seed(trial_seed, 2));
    MeasurementRecord m1 =
        run_measurement(cfg, 1, first_tick + cfg.meas_spacing_ticks, node_a, node_b,
                        chirp_wave, mix_seed(trial_seed, 3), mix_seed(trial_seed, 4));

    ExchangeRecord rec;
    rec.first = m0.measurement;
    rec.second = m1.measurement;
    rec.sent_frame_first = m0.sent_frame;
    rec.sent_frame_second = m1.sent_frame;
    rec.decoded_frame_first = m0.decoded_frame;
    rec.decoded_frame_second = m1.decoded_frame;
    rec.true_tof_a_domain_s = cfg.clock_a.alpha * cfg.link.tof_s();
    rec.true_skew_ratio = true_relative_skew(cfg.clock_a, cfg.clock_b);
    rec.true_offset_s = cfg.clock_b.phi - cfg.clock_a.phi;
    return rec;
}

TwttSolution solve_exchange(const ExchangeRecord& rec, double negative_tof_tolerance_s) {
    const TwttMeasurement ms[2] = {rec.first, rec.second};
    SolveOptions opts;
    opts.negative_tof_tolerance_s = negative_tof_tolerance_s;
    return solve_sequence(ms, opts).front();
}

std::vector<SweepResult> monte_carlo_sweep(const ScenarioConfig& base,
                                           std::span<const double> bandwidths_hz,
                                           std::span<const std::size_t> lengths,
                                           int n_threads) {
    if (bandwidths_hz.empty() || lengths.empty())
        throw std::invalid_argument("monte_carlo_sweep: empty sweep axes");
    if (n_threads < 1) n_threads = 1;

    std::vector<SweepResult> results;
    results.reserve(bandwidths_hz.size() * lengths.size());

    for (const std::size_t length : lengths) {
        for (const double bw : bandwidths_hz) {
            ScenarioConfig cfg = base;
            cfg.chirp = ChirpParams(bw, base.chirp.sample_rate_hz, length);
            cfg.validate();

            const std::uint64_t cell_key =
                mix_seed(std::bit_cast<std::uint64_t>(bw), static_cast<std::uint64_t>(length));
            const int trials = cfg.n_trials;
            std::vector<double> tof_estimates(static_cast<std::size_t>(trials));
            std::vector<std::uint8_t> accepted(static_cast<std::size_t>(trials), 0);

            // 3 sigma of the ToA noise (bound padded 2x for estimator
            // inefficiency): below this, negative ToF estimates are
            // legitimate noise, not protocol faults.
            double neg_tol = 0.0;
            if (cfg.link.snr_db) {
                CrlbConfig bound{cfg.chirp, *cfg.link.snr_db, SnrConvention::per_sample};
                neg_tol = 3.0 * 2.0 * toa_crlb_std(bound);
            }

            auto run_trial = [&](int t) {
                const std::uint64_t trial_seed =
                    mix_seed(cfg.rng_seed, mix_seed(cell_key, static_cast<std::uint64_t>(t)));
                const std::uint64_t offset =
                    static_cast<std::uint64_t>(t) * cfg.trial_spacing();
                try {
                    const ExchangeRecord rec = run_exchange(cfg, trial_seed, offset);
                    const TwttSolution sol = solve_exchange(rec, neg_tol);
                    tof_estimates[static_cast<std::size_t>(t)] = sol.tof_s;
                    accepted[static_cast<std::size_t>(t)] = 1;
                } catch (const std::exception&) {
                    accepted[static_cast<std::size_t>(t)] = 0;
                }
            };

            if (n_threads == 1) {
                for (int t = 0; t < trials; ++t) run_trial(t);
            } else {
                std::atomic<int> next{0};
                auto worker = [&] {
                    for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1))
                        run_trial(t);
                };
                std::vector<std::thread> pool;
                for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }

            SweepResult cell;
            cell.bandwidth_hz = bw;
            cell.length = length;
            double sum = 0.0;
            int n = 0;
            for (int t = 0; t < trials; ++t)
                if (accepted[static_cast<std::size_t>(t)]) {
                    sum += tof_estimates[static_cast<std::size_t>(t)];
                    ++n;
                }
            cell.n = n;
            cell.rejected = trials - n;
            if (n > 0) cell.mean_tof_s = sum / n;
            if (n > 1) {
                double ss = 0.0;
                for (int t = 0; t < trials; ++t)
                    if (accepted[static_cast<std::size_t>(t)]) {
                        const double d = tof_estimates[static_cast<std::size_t>(t)] - cell.mean_tof_s;
                        ss += d * d;
                    }
                cell.sigma_tof_s = std::sqrt(ss / (n - 1));
            }
            cell.sigma_tof_cm = cell.sigma_tof_s * cfg.link.c0_m_per_s * 100.0;
            if (cfg.link.snr_db) {
                CrlbConfig bound{cfg.chirp, *cfg.link.snr_db, SnrConvention::per_sample};
                cell.crlb_std_s = tof_crlb_std(bound);
            }
            results.push_back(cell);
        }
    }
    return results;
}

std::vector<SweepResult> crlb_curve(const ScenarioConfig& base,
                                    std::span<const double> bandwidths_hz,
                                    std::span<const std::size_t> lengths) {
    if (bandwidths_hz.empty() || lengths.empty())
        throw std::invalid_argument("crlb_curve: empty axes");
    if (!base.link.snr_db)
        throw std::invalid_argument("crlb_curve: a finite SNR is required");
    std::vector<SweepResult> results;
    for (const std::size_t length : lengths) {
        for (const double bw : bandwidths_hz) {
            const ChirpParams chirp(bw, base.chirp.sample_rate_hz, length);
            CrlbConfig bound{chirp, *base.link.snr_db, SnrConvention::per_sample};
            SweepResult row;
            row.bandwidth_hz = bw;
            row.length = length;
            row.crlb_std_s = tof_crlb_std(bound);
            row.sigma_tof_s = row.crlb_std_s;
            row.sigma_tof_cm = row.crlb_std_s * base.link.c0_m_per_s * 100.0;
            row.n = 0;
            results.push_back(row);
        }
    }
    return results;
}

std::vector<std::string> emit_results(std::span<const SweepResult> results,
                                      const std::string& out_dir, const std::string& csv_name) {
    if (results.empty()) throw std::invalid_argument("emit_results: no results");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    const fs::path csv_path = fs::path(out_dir) / csv_name;
    {
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw std::runtime_error("emit_results: cannot open " + csv_path.string());
        csv << "bandwidth_hz,length,sigma_tof_s,sigma_cm,crlb_s,n\n";
        for (const auto& r : results) {
            csv << format_double(r.bandwidth_hz) << ',' << r.length << ','
                << format_double(r.sigma_tof_s) << ',' << format_double(r.sigma_tof_cm) << ','
                << format_double(r.crlb_std_s) << ',' << r.n << '\n';
        }
        if (!csv) throw std::runtime_error("emit_results: write failed for " + csv_path.string());
    }
    written.push_back(csv_path.string());

    std::vector<std::size_t> lengths;
    for (const auto& r : results)
        if (std::find(lengths.begin(), lengths.end(), r.length) == lengths.end())
            lengths.push_back(r.length);
    for (const std::size_t length : lengths) {
        const fs::path dat_path =
            fs::path(out_dir) / ("ch_ll_" + std::to_string(length) + "_bw.dat");
        std::ofstream dat(dat_path, std::ios::binary);
        if (!dat) throw std::runtime_error("emit_results: cannot open " + dat_path.string());
        dat << "value sigma_cm\n";
        for (const auto& r : results)
            if (r.length == length)
                dat << format_double(r.bandwidth_hz) << ' ' << format_double(r.sigma_tof_cm)
                    << '\n';
        if (!dat) throw std::runtime_error("emit_results: write failed for " + dat_path.string());
        written.push_back(dat_path.string());
    }
    return written;
}

ScenarioConfig scenario_from_config(const ConfigMap& cfg) {
    ScenarioConfig sc;
    sc.clock_a = ClockParams(config_double(cfg, "clock_a.alpha", sc.clock_a.alpha),
                             config_double(cfg, "clock_a.phi", sc.clock_a.phi));
    sc.clock_b = ClockParams(config_double(cfg, "clock_b.alpha", sc.clock_b.alpha),
                             config_double(cfg, "clock_b.phi", sc.clock_b.phi));
    sc.link.distance_m = config_double(cfg, "link.distance_m", sc.link.distance_m);
    sc.link.carrier_hz = config_double(cfg, "link.carrier_hz", sc.link.carrier_hz);
    sc.link.cfo_hz = config_double(cfg, "link.cfo_hz", sc.link.cfo_hz);
    sc.link.phase_err_rad = config_double(cfg, "link.phase_err_rad", sc.link.phase_err_rad);
    sc.link.c0_m_per_s = config_double(cfg, "link.c0_m_per_s", sc.link.c0_m_per_s);
    const std::string snr = config_string(cfg, "link.snr_db",
                                          sc.link.snr_db ? format_double(*sc.link.snr_db) : "none");
    if (snr == "none" || snr == "noiseless")
        sc.link.snr_db.reset();
    else
        sc.link.snr_db = config_double(cfg, "link.snr_db", 30.0);

    sc.chirp = ChirpParams(config_double(cfg, "chirp.bandwidth_hz", sc.chirp.bandwidth_hz),
                           config_double(cfg, "chirp.sample_rate_hz", sc.chirp.sample_rate_hz),
                           config_u64(cfg, "chirp.length", sc.chirp.length));
    sc.symbols.samples_per_symbol = static_cast<unsigned>(
        config_u64(cfg, "frame.samples_per_symbol", sc.symbols.samples_per_symbol));
    sc.gap_samples = config_u64(cfg, "frame.gap_samples", sc.gap_samples);
    sc.status_byte =
        static_cast<std::uint8_t>(config_u64(cfg, "frame.status_byte", sc.status_byte));

    sc.rssi_threshold = config_double(cfg, "trigger.rssi_threshold", sc.rssi_threshold);
    sc.rssi_window =
        static_cast<unsigned>(config_u64(cfg, "trigger.rssi_window", sc.rssi_window));

    sc.first_tx_tick = config_u64(cfg, "timing.first_tx_tick", sc.first_tx_tick);
    sc.turnaround_ticks = config_u64(cfg, "timing.turnaround_ticks", sc.turnaround_ticks);
    sc.meas_spacing_ticks = config_u64(cfg, "timing.meas_spacing_ticks", sc.meas_spacing_ticks);
    sc.trial_spacing_ticks =
        config_u64(cfg, "timing.trial_spacing_ticks", sc.trial_spacing_ticks);

    sc.pre_trigger_samples = config_u64(cfg, "harness.pre_trigger_samples", sc.pre_trigger_samples);
    sc.capture_margin = config_u64(cfg, "harness.capture_margin", sc.capture_margin);
    sc.detect_threshold = config_double(cfg, "harness.detect_threshold", sc.detect_threshold);
    sc.nls_window_halfwidth = static_cast<int>(
        config_u64(cfg, "harness.nls_window_halfwidth",
                   static_cast<std::uint64_t>(sc.nls_window_halfwidth)));

    sc.n_trials = static_cast<int>(config_u64(cfg, "mc.n_trials",
                                              static_cast<std::uint64_t>(sc.n_trials)));
    sc.rng_seed = config_u64(cfg, "mc.rng_seed", sc.rng_seed);
    sc.validate();
    return sc;
}

}  // namespace twtt
