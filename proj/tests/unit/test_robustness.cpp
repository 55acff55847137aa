#include <cmath>

#include <doctest.h>

#include "maserlab/robustness.hpp"

using namespace maserlab;

namespace {

Spectrum make(std::vector<double> amps) {
    Spectrum s;
    s.resolution = 0.1;
    for (std::size_t k = 0; k < amps.size(); ++k) s.freqs.push_back(0.1 * k);
    s.amps = std::move(amps);
    return s;
}

}  // namespace

TEST_CASE("sample-and-hold noise: bounds, holding and channels") {
    NoiseSpec spec{NoiseKind::field, 0.5, 0.05, 9};
    SampleHoldNoise field(spec, 5e-3);
    CHECK(field.steps_per_hold() == 10);
    FeedbackNoise prev = field();
    for (int i = 1; i < 1000; ++i) {
        const auto s = field();
        CHECK(std::abs(s.field_x) <= 0.5);
        CHECK(std::abs(s.field_y) <= 0.5);
        CHECK(s.gain == 0.0);
        if (i % 10 != 0) {
            CHECK(s.field_x == prev.field_x);
            CHECK(s.field_y == prev.field_y);
        } else {
            CHECK(s.field_x != prev.field_x);
        }
        prev = s;
    }
    SampleHoldNoise gain({NoiseKind::gain, 2.0, 0.0, 9}, 5e-3);
    for (int i = 0; i < 100; ++i) {
        const auto s = gain();
        CHECK(s.field_x == 0.0);
        CHECK(s.field_y == 0.0);
        CHECK(std::abs(s.gain) <= 2.0);
    }
    SampleHoldNoise a(spec, 5e-3);
    SampleHoldNoise b(spec, 5e-3);
    for (int i = 0; i < 50; ++i) CHECK(a().field_y == b().field_y);
    CHECK_THROWS_AS(SampleHoldNoise({NoiseKind::field, 1.0, 1e-3, 1}, 5e-3), InvalidArgument);
    CHECK_THROWS_AS(SampleHoldNoise({NoiseKind::field, -1.0, 0.0, 1}, 5e-3), InvalidArgument);
}

TEST_CASE("noisy feedback terms") {
    const auto t = noisy_feedback(2.0, {0.1, -0.2, 0.3}, {0.01, 0.02, 0.5});
    CHECK(t.x == doctest::Approx(2.5 * 0.1 + 0.01));
    CHECK(t.y == doctest::Approx(2.5 * -0.2 + 0.02));
}

TEST_CASE("r_metric properties") {
    const auto a = make({9.0, 0.0, 1.0, 3.0, 0.5, 0.0});
    CHECK(r_metric(a, a) == 1.0);
    auto scaled = a;
    for (auto& v : scaled.amps) v *= 7.0;
    CHECK(r_metric(a, scaled) == doctest::Approx(1.0).epsilon(1e-15));
    // DC is ignored.
    auto dc = a;
    dc.amps[0] = 0.0;
    CHECK(r_metric(a, dc) == 1.0);
    CHECK(r_metric(a, make({0.0, 1.0, 0.0, 0.0, 0.0, 0.0})) == 0.0);
    // Hand-computed trapezoid overlap (end bins weighted 1/2).
    const auto b = make({0.0, 1.0, 1.0, 1.0, 1.0, 1.0});
    const double cross = 0.5 * 0.0 + 1.0 + 3.0 + 0.5 + 0.5 * 0.0;
    const double aa = 0.0 + 1.0 + 9.0 + 0.25 + 0.0;
    const double bb = 0.5 + 1.0 + 1.0 + 1.0 + 0.5;
    CHECK(r_metric(a, b) == doctest::Approx(cross / std::sqrt(aa * bb)));
    CHECK_THROWS_AS((void)r_metric(a, make({1.0, 2.0})), InvalidArgument);
    auto shifted = a;
    shifted.resolution = 0.2;
    CHECK_THROWS_AS((void)r_metric(a, shifted), InvalidArgument);
}

TEST_CASE("robustness curve: exact unity at zero noise, bounded, thread-independent") {
    const auto p = PhysicalParams{}.with_alpha_ratio(4.0);
    const double c = hz_to_rad(8.85);
    auto cfg = IntegrationConfig::rotating(c);
    cfg.nodes = 11;
    RobustnessOptions opts;
    opts.n_runs = 3;
    opts.transient = 50.0;
    opts.spectrum_length = kMinSpectrumLength;
    const std::vector<double> etas{0.0, 1.0, 30.0};
    const auto one = robustness_curve(p, Uniform{c, 1.0 / p.t2}, cfg, NoiseKind::field, etas, opts);
    opts.threads = 3;
    const auto three = robustness_curve(p, Uniform{c, 1.0 / p.t2}, cfg, NoiseKind::field, etas, opts);
    REQUIRE(one.points.size() == 3);
    CHECK(one.points[0].r_mean == 1.0);
    CHECK(one.points[0].r_std == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(one.points[i].r_mean == three.points[i].r_mean);
        CHECK(one.points[i].n_ok == 3);
        for (double r : one.points[i].r_values) {
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
    }
    CHECK(one.points[2].r_mean < one.points[1].r_mean);
    CHECK_THROWS_AS((void)robustness_curve(p, Uniform{c, 1.0 / p.t2}, cfg, NoiseKind::field, {1.0, 0.0}, opts),
                    InvalidArgument);
}
