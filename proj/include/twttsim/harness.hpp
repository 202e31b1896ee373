#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "twttsim/channel_sim.hpp"
#include "twttsim/clock_model.hpp"
#include "twttsim/config.hpp"
#include "twttsim/timing_controller.hpp"
#include "twttsim/twtt_solver.hpp"
#include "twttsim/waveform.hpp"

namespace twtt {

// Everything needed to run a two-node exchange. Ticks are rf_clk ticks at
// f_rf_clk = 2 * chirp.sample_rate_hz; sample-aligned values must be even.
struct ScenarioConfig {
    ClockParams clock_a{1.0 + 2e-7, 0.0};
    ClockParams clock_b{1.0 - 3e-7, 5e-6};
    LinkParams link{.distance_m = 1.8, .snr_db = 30.0};
    ChirpParams chirp{36e6, 61.44e6, 512};
    SymbolConfig symbols{8};

    double rssi_threshold = 0.1;
    unsigned rssi_window = 4;

    std::uint64_t first_tx_tick = 1u << 17;
    std::uint64_t turnaround_ticks = 1u << 14;      // B's reply delay after its trigger
    std::uint64_t meas_spacing_ticks = 1u << 20;    // between the two measurements of a trial
    std::uint64_t trial_spacing_ticks = 0;          // 0 = 2 * meas_spacing_ticks

    std::size_t gap_samples = 64;
    std::size_t pre_trigger_samples = 256;
    std::size_t capture_margin = 128;
    std::uint8_t status_byte = 0xA5;

    double detect_threshold = 0.5;
    int nls_window_halfwidth = 3;

    int n_trials = 1000;
    std::uint64_t rng_seed = 1;

    double f_rf_clk() const { return 2.0 * chirp.sample_rate_hz; }
    std::uint64_t trial_spacing() const {
        return trial_spacing_ticks ? trial_spacing_ticks : 2 * meas_spacing_ticks;
    }
    void validate() const;
};

// Per-stage failure of one exchange; the stage string names where it happened.
class ExchangeError : public std::runtime_error {
public:
    ExchangeError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// One full TWTT trial: two successive measurements plus the ground truth and
// wire-level records the oracles compare against. Node-side estimates never
// see the global timeline; the truth fields are bench-side bookkeeping.
struct ExchangeRecord {
    TwttMeasurement first;
    TwttMeasurement second;

    TimestampFrame sent_frame_first;      // as encoded by B
    TimestampFrame sent_frame_second;
    TimestampFrame decoded_frame_first;   // as decoded at A
    TimestampFrame decoded_frame_second;

    double true_tof_a_domain_s = 0.0;  // alpha_a * ToF
    double true_skew_ratio = 1.0;
    double true_offset_s = 0.0;        // phi_b - phi_a
};

ExchangeRecord run_exchange(const ScenarioConfig& cfg, std::uint64_t trial_seed,
                            std::uint64_t timeline_offset_ticks = 0);

// Eq.-chain solution for one exchange record (skew from the pair, ToF/offset
// on the second measurement).
TwttSolution solve_exchange(const ExchangeRecord& rec, double negative_tof_tolerance_s = 0.0);

struct SweepResult {
    double bandwidth_hz = 0.0;
    std::size_t length = 0;
    double sigma_tof_s = 0.0;
    double sigma_tof_cm = 0.0;   // sigma * c0, in cm
    double mean_tof_s = 0.0;
    double crlb_std_s = 0.0;     // two-way ToF bound at the configured SNR
    int n = 0;                   // accepted trials
    int rejected = 0;
};

// Monte Carlo over bandwidth x length cells; deterministic for a given config
// and seed regardless of n_threads. Cells with > 10% rejected trials are
// reported via SweepResult counts (callers decide how hard to fail).
std::vector<SweepResult> monte_carlo_sweep(const ScenarioConfig& base,
                                           std::span<const double> bandwidths_hz,
                                           std::span<const std::size_t> lengths,
                                           int n_threads = 1);

// CRLB-only rows in the same table shape (n = 0), for overlay plotting.
std::vector<SweepResult> crlb_curve(const ScenarioConfig& base,
                                    std::span<const double> bandwidths_hz,
                                    std::span<const std::size_t> lengths);

// Writes <out_dir>/results.csv plus one whitespace-separated
// <out_dir>/ch_ll_<length>_bw.dat per length (columns "value sigma_cm").
// Numbers use shortest round-trip formatting; returns the paths written.
std::vector<std::string> emit_results(std::span<const SweepResult> results,
                                      const std::string& out_dir,
                                      const std::string& csv_name = "results.csv");

// Scenario construction from the flat config format (missing keys keep
// defaults).
ScenarioConfig scenario_from_config(const ConfigMap& cfg);

}  // namespace twtt
