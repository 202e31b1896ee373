#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twttsim/channel_sim.hpp"
#include "twttsim/clock_model.hpp"
#include "twttsim/crlb.hpp"
#include "twttsim/harness.hpp"
#include "twttsim/iq_buffer.hpp"
#include "twttsim/toa_estimator.hpp"
#include "twttsim/twtt_solver.hpp"
#include "twttsim/waveform.hpp"

namespace py = pybind11;
using namespace twtt;

namespace {

py::array_t<std::complex<double>> to_numpy(const IqBuffer& buf) {
    py::array_t<std::complex<double>> arr(static_cast<py::ssize_t>(buf.size()));
    std::copy(buf.samples.begin(), buf.samples.end(), arr.mutable_data());
    return arr;
}

IqBuffer from_numpy(const py::array_t<std::complex<double>, py::array::c_style |
                                                                py::array::forcecast>& arr,
                    double sample_rate) {
    IqBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.assign(arr.data(), arr.data() + arr.size());
    return buf;
}

}  // namespace

PYBIND11_MODULE(_twttsim, m) {
    m.doc() = "Two-way time transfer ranging/synchronization simulation lab";

    py::class_<ClockParams>(m, "ClockParams")
        .def(py::init<>())
        .def(py::init<double, double, double>(), py::arg("alpha"), py::arg("phi"),
             py::arg("max_skew_deviation") = 1e-3)
        .def_readonly("alpha", &ClockParams::alpha)
        .def_readonly("phi", &ClockParams::phi);
    m.def("local_from_global", &local_from_global, py::arg("clock"), py::arg("t_global"));
    m.def("global_from_local", &global_from_local, py::arg("clock"), py::arg("tau_local"));
    m.def("true_relative_skew", &true_relative_skew, py::arg("a"), py::arg("b"));

    py::class_<ChirpParams>(m, "ChirpParams")
        .def(py::init<double, double, std::size_t>(), py::arg("bandwidth_hz"),
             py::arg("sample_rate_hz"), py::arg("length"))
        .def_readonly("bandwidth_hz", &ChirpParams::bandwidth_hz)
        .def_readonly("sample_rate_hz", &ChirpParams::sample_rate_hz)
        .def_readonly("length", &ChirpParams::length)
        .def_property_readonly("duration_s", &ChirpParams::duration_s)
        .def_property_readonly("sweep_rate_hz_per_s", &ChirpParams::sweep_rate_hz_per_s);

    m.def(
        "generate_chirp",
        [](const ChirpParams& p) { return to_numpy(generate_chirp(p)); },
        py::arg("params"));

    py::class_<TimestampFrame>(m, "TimestampFrame")
        .def(py::init([](std::uint8_t status, std::uint64_t tx_ticks, std::uint64_t rx_ticks,
                         std::uint64_t rx_tick_frac) {
                 TimestampFrame f;
                 f.status = status;
                 f.tx_ticks = tx_ticks;
                 f.rx_ticks = rx_ticks;
                 f.rx_tick_frac = rx_tick_frac;
                 return f;
             }),
             py::arg("status") = 0, py::arg("tx_ticks") = 0, py::arg("rx_ticks") = 0,
             py::arg("rx_tick_frac") = 0)
        .def_readwrite("status", &TimestampFrame::status)
        .def_readwrite("tx_ticks", &TimestampFrame::tx_ticks)
        .def_readwrite("rx_ticks", &TimestampFrame::rx_ticks)
        .def_readwrite("rx_tick_frac", &TimestampFrame::rx_tick_frac)
        .def("__eq__", [](const TimestampFrame& a, const TimestampFrame& b) { return a == b; });

    m.def(
        "encode_frame",
        [](const TimestampFrame& f, unsigned sps, double fs) {
            return to_numpy(encode_frame(f, SymbolConfig{sps}, fs));
        },
        py::arg("frame"), py::arg("samples_per_symbol") = 8, py::arg("sample_rate") = 61.44e6);
    m.def(
        "decode_frame",
        [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
               arr,
           unsigned sps, double fs) {
            return decode_frame(from_numpy(arr, fs), SymbolConfig{sps});
        },
        py::arg("samples"), py::arg("samples_per_symbol") = 8, py::arg("sample_rate") = 61.44e6);

    py::class_<LinkParams>(m, "LinkParams")
        .def(py::init<>())
        .def_readwrite("distance_m", &LinkParams::distance_m)
        .def_readwrite("carrier_hz", &LinkParams::carrier_hz)
        .def_readwrite("cfo_hz", &LinkParams::cfo_hz)
        .def_readwrite("phase_err_rad", &LinkParams::phase_err_rad)
        .def_readwrite("snr_db", &LinkParams::snr_db)
        .def_readwrite("c0_m_per_s", &LinkParams::c0_m_per_s)
        .def_property_readonly("tof_s", &LinkParams::tof_s);

    m.def(
        "fractional_delay",
        [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
               arr,
           double delay, double fs) { return to_numpy(fractional_delay(from_numpy(arr, fs), delay)); },
        py::arg("samples"), py::arg("delay_samples"), py::arg("sample_rate") = 61.44e6);
    m.def(
        "add_awgn",
        [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
               arr,
           std::optional<double> snr_db, std::uint64_t seed, double fs) {
            return to_numpy(add_awgn(from_numpy(arr, fs), snr_db, seed));
        },
        py::arg("samples"), py::arg("snr_db"), py::arg("seed"), py::arg("sample_rate") = 61.44e6);

    m.def(
        "estimate_toa",
        [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>&
               arr,
           double buffer_start_local_s, const ChirpParams& chirp, double threshold, int window)
            -> std::optional<std::tuple<double, double, double>> {
            const auto est = estimate_toa(from_numpy(arr, chirp.sample_rate_hz),
                                          buffer_start_local_s, chirp, threshold, window);
            if (!est) return std::nullopt;
            return std::make_tuple(est->lag_samples, est->toa_local_seconds,
                                   est->peak_magnitude);
        },
        py::arg("samples"), py::arg("buffer_start_local_s"), py::arg("chirp"),
        py::arg("threshold_ratio") = 0.5, py::arg("window_halfwidth") = 3);

    py::class_<TwttMeasurement>(m, "TwttMeasurement")
        .def(py::init([](double a_tx, double b_rx, double b_tx, double a_rx, int index) {
                 TwttMeasurement mm;
                 mm.tau_a_tx = a_tx;
                 mm.tau_b_rx = b_rx;
                 mm.tau_b_tx = b_tx;
                 mm.tau_a_rx = a_rx;
                 mm.index = index;
                 return mm;
             }),
             py::arg("tau_a_tx"), py::arg("tau_b_rx"), py::arg("tau_b_tx"), py::arg("tau_a_rx"),
             py::arg("index") = 0)
        .def_readwrite("tau_a_tx", &TwttMeasurement::tau_a_tx)
        .def_readwrite("tau_b_rx", &TwttMeasurement::tau_b_rx)
        .def_readwrite("tau_b_tx", &TwttMeasurement::tau_b_tx)
        .def_readwrite("tau_a_rx", &TwttMeasurement::tau_a_rx)
        .def_readwrite("index", &TwttMeasurement::index);

    m.def("initial_offset", &initial_offset, py::arg("measurement"));
    m.def("skew_ratio", &skew_ratio, py::arg("m_n"), py::arg("m_n1"));
    m.def("tof", &tof, py::arg("measurement"), py::arg("skew"),
          py::arg("negative_tolerance_s") = 0.0);
    m.def("offset", &offset, py::arg("measurement"), py::arg("skew"));

    py::class_<TwttSolution>(m, "TwttSolution")
        .def_readonly("index", &TwttSolution::index)
        .def_readonly("skew_ratio", &TwttSolution::skew_ratio)
        .def_readonly("tof_s", &TwttSolution::tof_s)
        .def_readonly("offset_s", &TwttSolution::offset_s)
        .def_readonly("initial_offset_s", &TwttSolution::initial_offset_s)
        .def_readonly("negative_tof_warning", &TwttSolution::negative_tof_warning);

    py::enum_<SnrConvention>(m, "SnrConvention")
        .value("per_sample", SnrConvention::per_sample)
        .value("post_integration", SnrConvention::post_integration);
    m.def(
        "rms_bandwidth", [](const ChirpParams& p) { return rms_bandwidth(p); },
        py::arg("chirp"));
    m.def(
        "toa_crlb_std",
        [](const ChirpParams& chirp, double snr_db, SnrConvention conv) {
            return toa_crlb_std(CrlbConfig{chirp, snr_db, conv});
        },
        py::arg("chirp"), py::arg("snr_db"), py::arg("convention") = SnrConvention::per_sample);
    m.def(
        "tof_crlb_std",
        [](const ChirpParams& chirp, double snr_db, SnrConvention conv) {
            return tof_crlb_std(CrlbConfig{chirp, snr_db, conv});
        },
        py::arg("chirp"), py::arg("snr_db"), py::arg("convention") = SnrConvention::per_sample);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("clock_a", &ScenarioConfig::clock_a)
        .def_readwrite("clock_b", &ScenarioConfig::clock_b)
        .def_readwrite("link", &ScenarioConfig::link)
        .def_readwrite("chirp", &ScenarioConfig::chirp)
        .def_readwrite("rssi_threshold", &ScenarioConfig::rssi_threshold)
        .def_readwrite("rssi_window", &ScenarioConfig::rssi_window)
        .def_readwrite("turnaround_ticks", &ScenarioConfig::turnaround_ticks)
        .def_readwrite("n_trials", &ScenarioConfig::n_trials)
        .def_readwrite("rng_seed", &ScenarioConfig::rng_seed)
        .def("validate", &ScenarioConfig::validate);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("bandwidth_hz", &SweepResult::bandwidth_hz)
        .def_readonly("length", &SweepResult::length)
        .def_readonly("sigma_tof_s", &SweepResult::sigma_tof_s)
        .def_readonly("sigma_tof_cm", &SweepResult::sigma_tof_cm)
        .def_readonly("mean_tof_s", &SweepResult::mean_tof_s)
        .def_readonly("crlb_std_s", &SweepResult::crlb_std_s)
        .def_readonly("n", &SweepResult::n)
        .def_readonly("rejected", &SweepResult::rejected)
        .def("__repr__", [](const SweepResult& r) {
            return "SweepResult(bandwidth_hz=" + std::to_string(r.bandwidth_hz) +
                   ", length=" + std::to_string(r.length) +
                   ", sigma_tof_cm=" + std::to_string(r.sigma_tof_cm) + ", n=" +
                   std::to_string(r.n) + ")";
        });

    m.def(
        "run_exchange_solution",
        [](const ScenarioConfig& cfg, std::uint64_t trial_seed) {
            const ExchangeRecord rec = run_exchange(cfg, trial_seed);
            double neg_tol = 0.0;
            if (cfg.link.snr_db) {
                CrlbConfig bound{cfg.chirp, *cfg.link.snr_db, SnrConvention::per_sample};
                neg_tol = 6.0 * toa_crlb_std(bound);
            }
            return solve_exchange(rec, neg_tol);
        },
        py::arg("config"), py::arg("trial_seed") = 1,
        "Run one full two-way exchange and solve it");

    m.def(
        "monte_carlo_sweep",
        [](const ScenarioConfig& base, const std::vector<double>& bandwidths,
           const std::vector<std::size_t>& lengths, int n_threads) {
            return monte_carlo_sweep(base, bandwidths, lengths, n_threads);
        },
        py::arg("config"), py::arg("bandwidths_hz"), py::arg("lengths"),
        py::arg("n_threads") = 1);

    m.def(
        "emit_results",
        [](const std::vector<SweepResult>& results, const std::string& out_dir) {
            return emit_results(results, out_dir);
        },
        py::arg("results"), py::arg("out_dir"));

#ifdef VERSION_INFO
#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "0.1.0";
#endif
}
