#include <cmath>

#include "doctest.h"
#include "twttsim/crlb.hpp"

using namespace twtt;

TEST_CASE("rms_bandwidth approaches B/sqrt(12) for high time-bandwidth products") {
    const ChirpParams p{38e6, 61.44e6, 1280};
    const double flat = 38e6 / std::sqrt(12.0);
    CHECK(rms_bandwidth(p) == doctest::Approx(flat).epsilon(0.05));
}

TEST_CASE("rms_bandwidth scales roughly linearly with bandwidth") {
    const ChirpParams p1{15e6, 61.44e6, 1024};
    const ChirpParams p2{30e6, 61.44e6, 1024};
    const double ratio = rms_bandwidth(p2) / rms_bandwidth(p1);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("rms_bandwidth converges to the flat-spectrum value as length grows") {
    const double flat = 20e6 / std::sqrt(12.0);
    const double err_short =
        std::fabs(rms_bandwidth(ChirpParams{20e6, 61.44e6, 128}) - flat) / flat;
    const double err_long =
        std::fabs(rms_bandwidth(ChirpParams{20e6, 61.44e6, 4096}) - flat) / flat;
    CHECK(err_long < err_short);
    CHECK(err_long < 0.01);
}

TEST_CASE("toa_crlb_std decreases in bandwidth and length") {
    const CrlbConfig base{ChirpParams{20e6, 61.44e6, 512}, 30.0, SnrConvention::per_sample};
    CrlbConfig wider = base;
    wider.chirp = ChirpParams{30e6, 61.44e6, 512};
    CrlbConfig longer = base;
    longer.chirp = ChirpParams{20e6, 61.44e6, 1024};
    CHECK(toa_crlb_std(wider) < toa_crlb_std(base));
    CHECK(toa_crlb_std(longer) < toa_crlb_std(base));
}

TEST_CASE("toa_crlb_std ratio across lengths is exactly sqrt(5)") {
    const CrlbConfig short_cfg{ChirpParams{30e6, 61.44e6, 256}, 30.0,
                               SnrConvention::per_sample};
    const CrlbConfig long_cfg{ChirpParams{30e6, 61.44e6, 1280}, 30.0,
                              SnrConvention::per_sample};
    const double ratio = toa_crlb_std(short_cfg) / toa_crlb_std(long_cfg);
    CHECK(std::fabs(ratio - std::sqrt(5.0)) < 1e-6);
}

TEST_CASE("toa_crlb_std at the reference operating point is centimeter-scale") {
    const CrlbConfig cfg{ChirpParams{36e6, 61.44e6, 512}, 30.0, SnrConvention::per_sample};
    const double sigma_cm = toa_crlb_std(cfg) * 299792458.0 * 100.0;
    CHECK(sigma_cm > 1.0 / 3.0);
    CHECK(sigma_cm < 3.0);
}

TEST_CASE("snr conventions differ by the correlation gain") {
    const ChirpParams p{36e6, 61.44e6, 512};
    const CrlbConfig per_sample{p, 30.0, SnrConvention::per_sample};
    const CrlbConfig post{p, 30.0, SnrConvention::post_integration};
    const double ratio = toa_crlb_std(post) / toa_crlb_std(per_sample);
    CHECK(ratio == doctest::Approx(std::sqrt(512.0)).epsilon(1e-12));
}

TEST_CASE("tof bound is the toa bound over sqrt(2)") {
    const CrlbConfig cfg{ChirpParams{36e6, 61.44e6, 512}, 30.0, SnrConvention::per_sample};
    CHECK(tof_crlb_std(cfg) == doctest::Approx(toa_crlb_std(cfg) / std::sqrt(2.0)));
}
