#include <cmath>

#include <doctest.h>

#include "maserlab/integrator.hpp"
#include "maserlab/stability.hpp"

using namespace maserlab;

namespace {

double uniform_threshold(const PhysicalParams& p, double eps) {
    const double x = eps * p.t2 / 2.0;
    return p.critical_alpha() * x / std::atan(x);
}

}  // namespace

TEST_CASE("no-signal threshold: closed form and contour route") {
    const PhysicalParams p;
    for (double et : {0.5, 1.0, 2.0, 4.0, 6.0}) {
        const double eps = et / p.t2;
        CHECK(uniform_no_signal_threshold(p, eps) == doctest::Approx(uniform_threshold(p, eps)).epsilon(1e-13));
        const auto th = no_signal_threshold(p, Uniform{hz_to_rad(8.85), eps});
        REQUIRE(th);
        CHECK(th->alpha == doctest::Approx(uniform_threshold(p, eps)).epsilon(1e-6));
        CHECK(th->omega_onset == doctest::Approx(hz_to_rad(8.85)).epsilon(1e-6));
    }
    const auto single = no_signal_threshold(p, FrequencyDistribution::single(10.0));
    REQUIRE(single);
    CHECK(single->alpha == doctest::Approx(p.critical_alpha()).epsilon(1e-8));
}

TEST_CASE("characteristic function has the phase root at beta = 0") {
    const auto p = PhysicalParams{}.with_alpha_ratio(4.0);
    const FrequencyDistribution d = Uniform{hz_to_rad(8.85), 1.0 / p.t2};
    const auto sol = solve_limit_cycle(p, d);
    REQUIRE(sol);
    const auto d0 = characteristic(cdouble(0.0, 0.0), p, d, *sol);
    const auto d1 = characteristic(cdouble(1.0 / p.t2, 0.0), p, d, *sol);
    CHECK(std::abs(d0) / std::abs(d1) < 1e-10);
}

TEST_CASE("rotating-frame Jacobian matches finite differences") {
    const auto p = PhysicalParams{}.with_alpha_ratio(4.0);
    const FrequencyDistribution dist = Uniform{hz_to_rad(8.85), 3.0 / p.t2};
    const auto ens = discretize(dist, 7);
    const auto sol = solve_limit_cycle(p, QuadratureRule{ens.freqs, ens.weights}, dist.symmetry_center(), dist.mean());
    REQUIRE(sol);
    const auto J = rotating_frame_jacobian(p, ens, *sol);
    const std::size_t m = ens.size();
    REQUIRE(J.rows() == static_cast<Eigen::Index>(3 * m));

    SpinEnsembleState x(m);
    const auto prof = profile(*sol, p, ens.freqs);
    for (std::size_t i = 0; i < m; ++i) {
        x.px[i] = prof[i].pt.real();
        x.py[i] = prof[i].pt.imag();
        x.pz[i] = prof[i].pz;
    }
    // The profile is a fixed point in the frame rotating at omega_s.
    const auto f0 = derivative(x, p, ens, std::nullopt, sol->omega_s);
    for (std::size_t i = 0; i < m; ++i) {
        CHECK(std::abs(f0.px[i]) < 1e-12);
        CHECK(std::abs(f0.py[i]) < 1e-12);
        CHECK(std::abs(f0.pz[i]) < 1e-12);
    }
    // State ordering: (px[0..M), py[0..M), pz[0..M)).
    auto at = [m](SpinEnsembleState& s, std::size_t k) -> double& {
        return k < m ? s.px[k] : k < 2 * m ? s.py[k - m] : s.pz[k - 2 * m];
    };
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t col = 0; col < 3 * m; ++col) {
        auto xp = x;
        auto xm = x;
        at(xp, col) += h;
        at(xm, col) -= h;
        auto fp = derivative(xp, p, ens, std::nullopt, sol->omega_s);
        auto fm = derivative(xm, p, ens, std::nullopt, sol->omega_s);
        for (std::size_t row = 0; row < 3 * m; ++row) {
            const double fd = (at(fp, row) - at(fm, row)) / (2 * h);
            worst = std::max(worst, std::abs(fd - J(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col))));
        }
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("both routes agree on stable and unstable limit cycles") {
    const double c = hz_to_rad(8.85);
    {
        const auto p = PhysicalParams{}.with_alpha_ratio(4.0);
        const FrequencyDistribution d = Uniform{c, 1.0 / p.t2};
        const auto v = limit_cycle_stable(p, d, *solve_limit_cycle(p, d));
        CHECK(v.stable);
        CHECK(v.agreement);
        CHECK(v.leading_beta.real() < 0.0);
        CHECK(v.zero_mode_residual < 1e-6);
        REQUIRE(v.jacobian_zero_mode);
        CHECK(std::abs(*v.jacobian_zero_mode) * p.t2 < 1e-6);
    }
    {
        // Chaotic point: the limit cycle exists but is unstable.
        const auto p = PhysicalParams{}.with_alpha_ratio(4.0);
        const FrequencyDistribution d = Uniform{c, 5.0 / p.t2};
        const auto v = limit_cycle_stable(p, d, *solve_limit_cycle(p, d));
        CHECK_FALSE(v.stable);
        CHECK(v.agreement);
        CHECK(v.leading_beta.real() > 0.0);
        CHECK(v.unstable_root_count.value() >= 1);
    }
}

TEST_CASE("single-frequency limit cycle is stable") {
    const auto p = PhysicalParams{}.with_alpha_ratio(2.0);
    const auto d = FrequencyDistribution::single(30.0);
    StabilityOptions opts;
    opts.method = StabilityMethod::jacobian;
    const auto v = limit_cycle_stable(p, d, *solve_limit_cycle(p, d), opts);
    CHECK(v.stable);
    CHECK(v.method == StabilityMethod::jacobian);
}
