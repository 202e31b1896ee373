#include "twttsim/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace twtt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Modified Bessel I0 by series; converges quickly for the beta range used here.
double bessel_i0(double x) {
    const double q = x * x / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

}  // namespace

SincInterpolator::SincInterpolator(int taps, double kaiser_beta)
    : taps_(taps), beta_(kaiser_beta), half_width_(taps / 2.0) {
    if (taps < 4 || taps % 2 != 0)
        throw std::invalid_argument("SincInterpolator: taps must be even and >= 4");
    // Tabulate the Kaiser window over [0, half_width]; it is smooth enough for
    // linear interpolation at this resolution (error ~1e-9 of full scale).
    const std::size_t n = 1u << 15;
    window_table_.resize(n + 2);
    const double inv_i0 = 1.0 / bessel_i0(beta_);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = half_width_ * static_cast<double>(i) / static_cast<double>(n);
        const double r = t / half_width_;
        window_table_[i] = bessel_i0(beta_ * std::sqrt(std::max(0.0, 1.0 - r * r))) * inv_i0;
    }
    window_table_[n + 1] = 0.0;
    table_scale_ = static_cast<double>(n) / half_width_;
}

double SincInterpolator::window_at(double t) const {
    const double u = std::fabs(t) * table_scale_;
    const auto i = static_cast<std::size_t>(u);
    if (i + 1 >= window_table_.size()) return 0.0;
    const double f = u - static_cast<double>(i);
    return window_table_[i] + f * (window_table_[i + 1] - window_table_[i]);
}

cplx SincInterpolator::eval(std::span<const cplx> x, double pos) const {
    const auto len = static_cast<long>(x.size());
    if (len == 0) return {0.0, 0.0};
    if (pos <= -half_width_ || pos >= static_cast<double>(len - 1) + half_width_)
        return {0.0, 0.0};

    const double nearest = std::round(pos);
    if (std::fabs(pos - nearest) < 1e-9) {
        const auto idx = static_cast<long>(nearest);
        return (idx >= 0 && idx < len) ? x[static_cast<std::size_t>(idx)] : cplx{0.0, 0.0};
    }

    const auto n0 = static_cast<long>(std::floor(pos));
    const double frac = pos - static_cast<double>(n0);
    // sin(pi*(frac+m)) = (-1)^m sin(pi*frac): one sin() for the whole kernel.
    const double sin_pf = std::sin(std::numbers::pi * frac);
    const long half = taps_ / 2;
    const long j_begin = n0 - half + 1;
    const long j_end = n0 + half;  // inclusive

    cplx acc{0.0, 0.0};
    double sign = ((n0 - j_begin) % 2 == 0) ? 1.0 : -1.0;
    for (long j = j_begin; j <= j_end; ++j) {
        const double t = pos - static_cast<double>(j);
        if (j >= 0 && j < len) {
            const double kernel = sign * sin_pf / (std::numbers::pi * t) * window_at(t);
            acc += x[static_cast<std::size_t>(j)] * kernel;
        }
        sign = -sign;
    }
    return acc;
}

const SincInterpolator& default_interpolator() {
    static const SincInterpolator interp;
    return interp;
}

IqBuffer fractional_delay(const IqBuffer& buf, double delay_samples) {
    return fractional_delay(buf, delay_samples, default_interpolator());
}

IqBuffer fractional_delay(const IqBuffer& buf, double delay_samples,
                          const SincInterpolator& interp) {
    if (!(std::fabs(delay_samples) < static_cast<double>(buf.size())))
        throw std::invalid_argument("fractional_delay: |delay| must be below the buffer length");
    IqBuffer out;
    out.sample_rate = buf.sample_rate;
    out.samples.resize(buf.size());
    for (std::size_t n = 0; n < buf.size(); ++n)
        out.samples[n] = interp.eval(buf.samples, static_cast<double>(n) - delay_samples);
    return out;
}

IqBuffer add_awgn(const IqBuffer& buf, std::optional<double> snr_db, std::uint64_t seed) {
    if (buf.empty()) throw std::invalid_argument("add_awgn: empty buffer");
    IqBuffer out = buf;
    if (!snr_db) return out;

    // Reference power: mean over the occupied portion, so leading/trailing
    // silence does not dilute the SNR definition.
    double peak = 0.0;
    for (const auto& v : out.samples) peak = std::max(peak, std::norm(v));
    if (peak == 0.0) return out;
    double power = 0.0;
    std::size_t occupied = 0;
    for (const auto& v : out.samples) {
        const double p = std::norm(v);
        if (p > 1e-3 * peak) {
            power += p;
            ++occupied;
        }
    }
    power /= static_cast<double>(occupied);

    const double noise_var = power * std::pow(10.0, -(*snr_db) / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);  // per real component

    // Explicit Box-Muller on 53-bit uniforms keeps the stream bit-reproducible
    // across standard libraries.
    std::mt19937_64 gen(seed);
    auto uniform = [&gen]() { return static_cast<double>(gen() >> 11) * 0x1p-53; };
    for (auto& v : out.samples) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        v += cplx{sigma * r * std::cos(kTwoPi * u2), sigma * r * std::sin(kTwoPi * u2)};
    }
    return out;
}

IqBuffer sample_received(const IqBuffer& tx, double tx_start_global_s,
                         const ClockParams& clk_tx, const ClockParams& clk_rx,
                         const LinkParams& link, double rx_window_start_local_s,
                         std::size_t count, const SincInterpolator& interp) {
    if (tx.empty()) throw std::invalid_argument("sample_received: empty transmit buffer");
    if (link.distance_m < 0.0)
        throw std::invalid_argument("sample_received: negative distance");
    const double fs = tx.sample_rate;
    const double tof = link.tof_s();

    // Receiver sample m sits at local time tau_rx = start + m/fs. Mapping it
    // through both clocks and the ToF gives an affine transmit-buffer
    // position: pos(m) = pos0 + m * alpha_tx/alpha_rx.
    const double rate = clk_tx.alpha / clk_rx.alpha;
    const double t0_global = global_from_local(clk_rx, rx_window_start_local_s);
    const double tau_tx_origin = local_from_global(clk_tx, tx_start_global_s);
    const double pos0 = (local_from_global(clk_tx, t0_global - tof) - tau_tx_origin) * fs;

    // Constant carrier-phase factor of the received-signal model; the missing
    // imaginary unit in the source expression is treated as a typo, so this is
    // a pure phase.
    const double tof_rx_domain = clk_rx.alpha * tof;
    const double carrier_angle = std::remainder(
        -kTwoPi * link.carrier_hz *
            ((clk_tx.alpha / clk_rx.alpha) * (clk_rx.phi + tof_rx_domain) - clk_tx.phi),
        kTwoPi);
    const cplx static_rotation = std::polar(1.0, carrier_angle + link.phase_err_rad);

    IqBuffer out;
    out.sample_rate = fs;
    out.samples.resize(count);
    for (std::size_t m = 0; m < count; ++m) {
        const double pos = pos0 + static_cast<double>(m) * rate;
        const cplx val = interp.eval(tx.samples, pos);
        if (val == cplx{0.0, 0.0}) continue;
        const double tau_rx = rx_window_start_local_s + static_cast<double>(m) / fs;
        const double cfo_angle = std::remainder(kTwoPi * link.cfo_hz * tau_rx, kTwoPi);
        out.samples[m] = val * static_rotation * std::polar(1.0, cfo_angle);
    }
    return out;
}

PropagateResult propagate(const IqBuffer& tx, double tx_start_global_s,
                          const ClockParams& clk_tx, const ClockParams& clk_rx,
                          const LinkParams& link, std::uint64_t noise_seed,
                          double max_rate_deviation) {
    if (tx.empty()) throw std::invalid_argument("propagate: empty transmit buffer");
    const double rate = clk_tx.alpha / clk_rx.alpha;
    if (!(std::fabs(rate - 1.0) <= max_rate_deviation))
        throw std::invalid_argument("propagate: skew ratio outside resampler design range");

    const SincInterpolator& interp = default_interpolator();
    const double fs = tx.sample_rate;
    const double delay_samples = clk_rx.alpha * link.tof_s() * fs;
    const auto n_out = static_cast<std::size_t>(
        std::ceil(static_cast<double>(tx.size()) / rate + delay_samples)) +
        static_cast<std::size_t>(interp.taps());

    const double rx_start_local = local_from_global(clk_rx, tx_start_global_s);
    IqBuffer samples = sample_received(tx, tx_start_global_s, clk_tx, clk_rx, link,
                                       rx_start_local, n_out, interp);
    samples = add_awgn(samples, link.snr_db, noise_seed);
    return {std::move(samples), tx_start_global_s + link.tof_s()};
}

}  // namespace twtt
