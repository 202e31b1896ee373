#include "twttsim/toa_estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "twttsim/fft.hpp"

namespace twtt {

namespace {

// Normalized sinc and its derivative, stable through u = 0.
double sinc(double u) {
    const double x = std::numbers::pi * u;
    if (std::fabs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

double dsinc(double u) {
    if (std::fabs(u) < 1e-4) {
        const double p2 = std::numbers::pi * std::numbers::pi;
        return -p2 * u / 3.0 + p2 * p2 * u * u * u / 30.0;
    }
    return (std::cos(std::numbers::pi * u) - sinc(u)) / u;
}

// Solves a symmetric 3x3 system by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

}  // namespace

std::size_t CorrelationResult::index_of_lag(long lag) const {
    if (lags.empty() || lag < lags.front() || lag > lags.back())
        throw std::out_of_range("CorrelationResult: lag outside correlation support");
    return static_cast<std::size_t>(lag - lags.front());
}

CorrelationResult correlate(const IqBuffer& reference, const IqBuffer& received) {
    if (reference.empty() || received.empty())
        throw std::invalid_argument("correlate: empty input");
    if (reference.size() > received.size())
        throw std::invalid_argument("correlate: reference longer than received buffer");

    const std::size_t nr = reference.size();
    const std::size_t nn = received.size();
    const std::size_t m = next_pow2(nn + nr - 1);

    std::vector<cplx> rec_f(m, cplx{0.0, 0.0});
    std::copy(received.samples.begin(), received.samples.end(), rec_f.begin());
    fft_in_place(rec_f, false);

    std::vector<cplx> ref_f(m, cplx{0.0, 0.0});
    std::copy(reference.samples.begin(), reference.samples.end(), ref_f.begin());
    fft_in_place(ref_f, false);

    for (std::size_t k = 0; k < m; ++k) rec_f[k] *= std::conj(ref_f[k]);
    fft_in_place(rec_f, true);

    CorrelationResult out;
    const long first_lag = -static_cast<long>(nr) + 1;
    const long last_lag = static_cast<long>(nn) - 1;
    const auto count = static_cast<std::size_t>(last_lag - first_lag + 1);
    out.lags.resize(count);
    out.values.resize(count);
    out.magnitude.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const long lag = first_lag + static_cast<long>(i);
        const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag)
                                         : m - static_cast<std::size_t>(-lag);
        out.lags[i] = lag;
        out.values[i] = rec_f[idx];
        out.magnitude[i] = std::abs(rec_f[idx]);
    }
    for (const auto& v : reference.samples) out.reference_energy += std::norm(v);
    return out;
}

std::optional<long> detect_peak(const CorrelationResult& corr, double threshold_ratio) {
    if (corr.size() == 0) throw std::invalid_argument("detect_peak: empty correlation");
    if (!(threshold_ratio > 0.0) || !(threshold_ratio <= 1.0))
        throw std::invalid_argument("detect_peak: threshold_ratio must be in (0, 1]");
    std::size_t best = 0;
    for (std::size_t i = 1; i < corr.size(); ++i)
        if (corr.magnitude[i] > corr.magnitude[best]) best = i;  // ties keep the smaller lag
    if (corr.magnitude[best] < threshold_ratio * corr.reference_energy) return std::nullopt;
    return corr.lags[best];
}

SincFitResult interpolate_peak_sinc_nls(const CorrelationResult& corr, long coarse_lag,
                                        int window_halfwidth, double width_init) {
    if (window_halfwidth < 1)
        throw std::invalid_argument("interpolate_peak_sinc_nls: window_halfwidth must be >= 1");
    const std::size_t center = corr.index_of_lag(coarse_lag);
    const auto k = static_cast<std::size_t>(window_halfwidth);
    if (center < k || center + k >= corr.size())
        throw std::invalid_argument("interpolate_peak_sinc_nls: window exceeds correlation support");

    const int n = 2 * window_halfwidth + 1;
    std::vector<double> x(n), y(n);
    double y_max = 0.0, y_min = std::numeric_limits<double>::max();
    for (int i = 0; i < n; ++i) {
        x[i] = static_cast<double>(i - window_halfwidth);
        y[i] = corr.magnitude[center - k + static_cast<std::size_t>(i)];
        y_max = std::max(y_max, y[i]);
        y_min = std::min(y_min, y[i]);
    }
    if (!(y_max > 0.0) || (y_max - y_min) < 1e-12 * y_max)
        throw std::runtime_error("interpolate_peak_sinc_nls: degenerate flat window");
    for (auto& v : y) v /= y_max;

    // Initial iterate: unit amplitude, parabolic vertex for delta, caller's
    // width hint (or a crude half-power width from the data).
    double a = y[window_halfwidth];
    const double yl = y[window_halfwidth - 1], yc = y[window_halfwidth],
                 yr = y[window_halfwidth + 1];
    const double denom = yl - 2.0 * yc + yr;
    double delta = (std::fabs(denom) > 1e-12) ? 0.5 * (yl - yr) / denom : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    double w = width_init;
    if (!(w > 0.0)) {
        int half_count = 0;
        for (int i = 0; i < n; ++i)
            if (y[i] >= 0.5 * yc) ++half_count;
        w = 1.2 / std::max(1, half_count);  // |sinc| half-power full width ~ 1.2/W
    }
    w = std::clamp(w, 0.02, 1.2);

    // Mainlobe-weighted least squares: the chirp's sidelobes deviate from the
    // sinc model (Fresnel ripple), so sidelobe samples get little say.
    std::vector<double> wgt(n);
    for (int i = 0; i < n; ++i) wgt[i] = y[i] * y[i] + 1e-4;

    auto cost_of = [&](double aa, double dd, double ww) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = aa * std::fabs(sinc(ww * (x[i] - dd))) - y[i];
            c += wgt[i] * r * r;
        }
        return c;
    };

    SincFitResult fit;
    double lambda = 1e-3;
    double cost = cost_of(a, delta, w);
    constexpr int kMaxIterations = 100;
    constexpr double kGradTol = 1e-10;
    int iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (int i = 0; i < n; ++i) {
            const double u = w * (x[i] - delta);
            const double s = sinc(u);
            const double sgn = (s > 0.0) ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
            const double r = a * std::fabs(s) - y[i];
            const std::array<double, 3> j = {
                std::fabs(s),
                a * sgn * dsinc(u) * (-w),
                a * sgn * dsinc(u) * (x[i] - delta),
            };
            for (int p = 0; p < 3; ++p) {
                jtr[p] += wgt[i] * j[p] * r;
                for (int q = 0; q < 3; ++q) jtj[p][q] += wgt[i] * j[p] * j[q];
            }
        }

        const double grad_norm = std::sqrt(jtr[0] * jtr[0] + jtr[1] * jtr[1] + jtr[2] * jtr[2]);
        if (grad_norm < kGradTol) {
            fit.converged = true;
            break;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            auto damped = jtj;
            for (int p = 0; p < 3; ++p) damped[p][p] += lambda * std::max(jtj[p][p], 1e-12);
            std::array<double, 3> h{};
            std::array<double, 3> rhs = {-jtr[0], -jtr[1], -jtr[2]};
            if (!solve3(damped, rhs, h)) {
                lambda *= 4.0;
                continue;
            }
            const double a_new = a + h[0];
            const double d_new = std::clamp(delta + h[1], -1.5, 1.5);
            const double w_new = std::clamp(w + h[2], 0.02, 1.2);
            const double c_new = cost_of(a_new, d_new, w_new);
            if (c_new < cost) {
                a = a_new;
                delta = d_new;
                w = w_new;
                cost = c_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
            } else {
                lambda *= 4.0;
            }
        }
        if (!stepped) break;  // stalled; report the best iterate
    }

    fit.iterations = iter;
    fit.delta = std::clamp(delta, -0.5, 0.5);
    fit.lag = static_cast<double>(coarse_lag) + fit.delta;
    fit.amplitude = a * y_max;
    fit.width = w;
    fit.residual_rms = std::sqrt(cost / n) * y_max;
    return fit;
}

std::optional<ToaEstimate> estimate_toa(const IqBuffer& received, double buffer_start_local_s,
                                        const ChirpParams& chirp, double threshold_ratio,
                                        int window_halfwidth) {
    const IqBuffer reference = generate_chirp(chirp);
    if (received.size() < reference.size())
        throw std::invalid_argument("estimate_toa: buffer shorter than the chirp");
    const CorrelationResult corr = correlate(reference, received);
    const auto peak = detect_peak(corr, threshold_ratio);
    if (!peak) return std::nullopt;

    const std::size_t center = corr.index_of_lag(*peak);
    const auto k = static_cast<std::size_t>(window_halfwidth);
    if (center < k || center + k >= corr.size()) return std::nullopt;  // peak at the buffer edge

    const double width_init = chirp.bandwidth_hz / chirp.sample_rate_hz;
    const SincFitResult fit =
        interpolate_peak_sinc_nls(corr, *peak, window_halfwidth, width_init);

    ToaEstimate est;
    est.lag_samples = fit.lag;
    est.toa_local_seconds = buffer_start_local_s + fit.lag / chirp.sample_rate_hz;
    est.peak_magnitude = corr.magnitude[center];

    // Effective post-correlation floor (chirp sidelobes included), diagnostic
    // only.
    double floor_power = 0.0;
    std::size_t floor_count = 0;
    const long exclusion = static_cast<long>(chirp.length);
    for (std::size_t i = 0; i < corr.size(); ++i) {
        if (std::labs(corr.lags[i] - *peak) > exclusion) {
            floor_power += corr.magnitude[i] * corr.magnitude[i];
            ++floor_count;
        }
    }
    if (floor_count > 0 && floor_power > 0.0) {
        floor_power /= static_cast<double>(floor_count);
        est.snr_estimate_db =
            10.0 * std::log10(est.peak_magnitude * est.peak_magnitude / floor_power /
                              static_cast<double>(chirp.length));
    } else {
        est.snr_estimate_db = std::numeric_limits<double>::infinity();
    }
    return est;
}

}  // namespace twtt
