// twttsim - two-node TWTT ranging/synchronization simulation lab.
//
// Subcommands:
//   run       one full exchange, prints the solved skew/ToF/offset
//   sweep     Monte Carlo over bandwidth x length, writes CSV + .dat tables
//   crlb      bound tables in the same formats
//   waveform  dump the assembled TWTT baseband waveform for inspection
//
// Exit codes: 0 success, 1 configuration error, 2 runtime rejection threshold
// exceeded.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twttsim/crlb.hpp"
#include "twttsim/harness.hpp"
#include "twttsim/iq_buffer.hpp"
#include "twttsim/toa_estimator.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    double bandwidth_hz = 0.0;
    std::uint64_t length = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double snr_db = 0.0;
    bool snr_set = false;
    bool noiseless = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "flat key=value config file");
    cmd->add_option("--bandwidth", opt.bandwidth_hz, "chirp bandwidth override, Hz");
    cmd->add_option("--length", opt.length, "chirp length override, samples");
    cmd->add_option("--trials", opt.trials, "Monte Carlo trials per cell");
    cmd->add_option("--seed", opt.seed, "master RNG seed")->each([&](const std::string&) {
        opt.seed_set = true;
    });
    cmd->add_option("--snr-db", opt.snr_db, "per-sample SNR, dB")->each([&](const std::string&) {
        opt.snr_set = true;
    });
    cmd->add_flag("--noiseless", opt.noiseless, "disable channel noise");
}

twtt::ScenarioConfig build_scenario(const CommonOptions& opt) {
    twtt::ConfigMap cfg;
    if (!opt.config_path.empty()) cfg = twtt::load_config_file(opt.config_path);
    twtt::ScenarioConfig sc = twtt::scenario_from_config(cfg);
    if (opt.bandwidth_hz > 0.0)
        sc.chirp = twtt::ChirpParams(opt.bandwidth_hz, sc.chirp.sample_rate_hz, sc.chirp.length);
    if (opt.length > 0)
        sc.chirp = twtt::ChirpParams(sc.chirp.bandwidth_hz, sc.chirp.sample_rate_hz, opt.length);
    if (opt.trials > 0) sc.n_trials = opt.trials;
    if (opt.seed_set) sc.rng_seed = opt.seed;
    if (opt.snr_set) sc.link.snr_db = opt.snr_db;
    if (opt.noiseless) sc.link.snr_db.reset();
    sc.validate();
    return sc;
}

std::vector<std::size_t> to_lengths(const std::vector<double>& values) {
    std::vector<std::size_t> out;
    for (double v : values) out.push_back(static_cast<std::size_t>(v));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-way time transfer ranging and synchronization simulator"};
    app.require_subcommand(1);

    CommonOptions run_opt, sweep_opt, crlb_opt, wave_opt;
    std::string sweep_out = "results";
    std::string crlb_out = "crlb";
    std::string wave_out = "twtt_waveform.dat";
    std::string wave_bin;
    std::vector<double> sweep_bw, crlb_bw;
    std::vector<double> sweep_len, crlb_len;
    int threads = 1;

    CLI::App* run_cmd = app.add_subcommand("run", "run one exchange and print the solution");
    add_common(run_cmd, run_opt);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo bandwidth/length sweep");
    add_common(sweep_cmd, sweep_opt);
    sweep_cmd->add_option("--out", sweep_out, "output directory");
    sweep_cmd->add_option("--bandwidths", sweep_bw, "bandwidth list, Hz")->delimiter(',');
    sweep_cmd->add_option("--lengths", sweep_len, "chirp length list")->delimiter(',');
    sweep_cmd->add_option("--threads", threads, "worker threads (results are thread-invariant)");

    CLI::App* crlb_cmd = app.add_subcommand("crlb", "emit CRLB bound tables");
    add_common(crlb_cmd, crlb_opt);
    crlb_cmd->add_option("--out", crlb_out, "output directory");
    crlb_cmd->add_option("--bandwidths", crlb_bw, "bandwidth list, Hz")->delimiter(',');
    crlb_cmd->add_option("--lengths", crlb_len, "chirp length list")->delimiter(',');

    CLI::App* wave_cmd =
        app.add_subcommand("waveform", "dump the assembled TWTT baseband waveform");
    add_common(wave_cmd, wave_opt);
    wave_cmd->add_option("--out", wave_out, "output .dat path (t re im)");
    wave_cmd->add_option("--bin", wave_bin, "optional interleaved float32 output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const twtt::ScenarioConfig sc = build_scenario(run_opt);
            twtt::ExchangeRecord rec;
            try {
                rec = twtt::run_exchange(sc, sc.rng_seed);
            } catch (const twtt::ExchangeError& e) {
                std::fprintf(stderr, "exchange failed: %s\n", e.what());
                return 2;
            }
            double neg_tol = 0.0;
            if (sc.link.snr_db) {
                twtt::CrlbConfig bound{sc.chirp, *sc.link.snr_db,
                                       twtt::SnrConvention::per_sample};
                neg_tol = 6.0 * twtt::toa_crlb_std(bound);
            }
            const twtt::TwttSolution sol = twtt::solve_exchange(rec, neg_tol);
            std::printf("skew_ratio      %.15g\n", sol.skew_ratio);
            std::printf("tof_s           %.15g\n", sol.tof_s);
            std::printf("distance_m      %.9g\n", sol.tof_s * sc.link.c0_m_per_s);
            std::printf("offset_s        %.15g\n", sol.offset_s);
            std::printf("initial_offset  %.15g\n", sol.initial_offset_s);
            std::printf("true_tof_s      %.15g\n", rec.true_tof_a_domain_s);
            std::printf("true_offset_s   %.15g\n", rec.true_offset_s);
            return 0;
        }

        if (sweep_cmd->parsed()) {
            const twtt::ScenarioConfig sc = build_scenario(sweep_opt);
            std::vector<double> bws = sweep_bw;
            if (bws.empty()) bws = {10e6, 20e6, 30e6, 40e6};
            std::vector<std::size_t> lens =
                sweep_len.empty() ? std::vector<std::size_t>{256, 512, 768, 1024, 1280}
                                  : to_lengths(sweep_len);
            const auto results = twtt::monte_carlo_sweep(sc, bws, lens, threads);
            const auto written = twtt::emit_results(results, sweep_out);
            for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
            bool flagged = false;
            for (const auto& cell : results) {
                std::printf("B=%.3g MHz l=%zu sigma=%.6g cm (crlb %.6g cm, n=%d, rejected=%d)\n",
                            cell.bandwidth_hz / 1e6, cell.length, cell.sigma_tof_cm,
                            cell.crlb_std_s * sc.link.c0_m_per_s * 100.0, cell.n, cell.rejected);
                if (cell.rejected * 10 > sc.n_trials) flagged = true;
            }
            if (flagged) {
                std::fprintf(stderr, "rejection threshold exceeded in at least one cell\n");
                return 2;
            }
            return 0;
        }

        if (crlb_cmd->parsed()) {
            twtt::ScenarioConfig sc = build_scenario(crlb_opt);
            if (!sc.link.snr_db) sc.link.snr_db = 30.0;
            std::vector<double> bws = crlb_bw;
            if (bws.empty())
                for (int mhz = 5; mhz <= 55; mhz += 5) bws.push_back(mhz * 1e6);
            std::vector<std::size_t> lens = crlb_len.empty()
                                                ? std::vector<std::size_t>{256, 1280}
                                                : to_lengths(crlb_len);
            const auto rows = twtt::crlb_curve(sc, bws, lens);
            const auto written = twtt::emit_results(rows, crlb_out, "crlb.csv");
            for (const auto& path : written) std::printf("wrote %s\n", path.c_str());
            return 0;
        }

        if (wave_cmd->parsed()) {
            const twtt::ScenarioConfig sc = build_scenario(wave_opt);
            const twtt::IqBuffer chirp = twtt::generate_chirp(sc.chirp);
            twtt::TimestampFrame frame;
            frame.status = sc.status_byte;
            frame.tx_ticks = sc.first_tx_tick + sc.turnaround_ticks;
            frame.rx_ticks = sc.first_tx_tick;
            frame.rx_tick_frac = 0x8000000000000000ull;
            const twtt::IqBuffer payload =
                twtt::encode_frame(frame, sc.symbols, sc.chirp.sample_rate_hz);
            const twtt::IqBuffer wave =
                twtt::assemble_twtt_waveform(chirp, payload, sc.gap_samples);
            twtt::save_dat(wave, wave_out);
            std::printf("wrote %s (%zu samples, %.3g us)\n", wave_out.c_str(), wave.size(),
                        wave.duration_s() * 1e6);
            if (!wave_bin.empty()) {
                twtt::save_iq_f32(wave, wave_bin);
                std::printf("wrote %s\n", wave_bin.c_str());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
