#include <cmath>

#include <doctest.h>

#include "maserlab/distribution.hpp"
#include "maserlab/ensemble.hpp"

using namespace maserlab;

namespace {

double rule_moment(const FrequencyDistribution& d, int k) {
    return integration_rule(d).integrate([k](double w) { return std::pow(w, k); });
}

}  // namespace

TEST_CASE("uniform distribution") {
    const FrequencyDistribution d = Uniform{10.0, 2.0};
    CHECK(density(d, 10.5) == doctest::Approx(0.5));
    CHECK(density(d, 11.5) == 0.0);
    CHECK(d.support().first == doctest::Approx(9.0));
    CHECK(d.support().second == doctest::Approx(11.0));
    CHECK(d.mean() == doctest::Approx(10.0));
    CHECK(d.symmetry_center().value() == doctest::Approx(10.0));
    CHECK(rule_moment(d, 0) == doctest::Approx(1.0).epsilon(1e-14));
    // variance eps^2 / 12
    CHECK(rule_moment(d, 2) - 100.0 == doctest::Approx(4.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("root distribution: support, mass and mean") {
    const double c = 5.0;
    const double eps = 0.9;
    const FrequencyDistribution d = Root{c, eps};
    CHECK(d.support().first == doctest::Approx(c - 2.0 * eps / 3.0));
    CHECK(d.support().second == doctest::Approx(c + eps / 3.0));
    CHECK(rule_moment(d, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // Piecewise integration of the three branches gives mean c - 2 eps / 9.
    CHECK(rule_moment(d, 1) == doctest::Approx(c - 2.0 * eps / 9.0).epsilon(1e-12));
    CHECK(d.mean() == doctest::Approx(c - 2.0 * eps / 9.0).epsilon(1e-12));
    CHECK_FALSE(d.symmetry_center().has_value());
    CHECK(density(d, c - 1e-12) == doctest::Approx(density(d, c + 1e-12)).epsilon(1e-5));
    CHECK(density(d, c - 0.5 * eps) == doctest::Approx(1.5 / eps * std::sqrt(0.5)));
}

TEST_CASE("dirac comb validation") {
    CHECK_NOTHROW(FrequencyDistribution(DiracComb{{1.0, 2.0}, {0.25, 0.75}}));
    CHECK_THROWS_AS(FrequencyDistribution(DiracComb{{1.0, 2.0}, {0.5, 0.6}}), InvalidArgument);
    CHECK_THROWS_AS(FrequencyDistribution(DiracComb{{1.0}, {0.5, 0.5}}), InvalidArgument);
    CHECK_THROWS_AS(FrequencyDistribution(DiracComb{{1.0, 2.0}, {1.5, -0.5}}), InvalidArgument);
    const auto s = FrequencyDistribution::single(3.0);
    CHECK(s.is_discrete());
    CHECK(s.mean() == 3.0);
    CHECK(density(s, 3.0) == 0.0);
}

TEST_CASE("tabulated density is piecewise linear and zero outside") {
    const FrequencyDistribution d = Tabulated{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}};
    CHECK(density(d, 0.5) == doctest::Approx(0.5));
    CHECK(density(d, 1.5) == doctest::Approx(0.5));
    CHECK(density(d, -0.1) == 0.0);
    CHECK(density(d, 2.1) == 0.0);
    CHECK(d.mean() == doctest::Approx(1.0));
    CHECK_THROWS_AS(FrequencyDistribution(Tabulated{{0.0, 1.0}, {-1.0, 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(FrequencyDistribution(Tabulated{{1.0, 0.0}, {1.0, 1.0}}), InvalidArgument);
}

TEST_CASE("discretize: trapezoid weights on a uniform grid") {
    const double eps = 2.0;
    const FrequencyDistribution d = Uniform{0.0, eps};
    for (int m : {3, 11, 81}) {
        const auto ens = discretize(d, m);
        REQUIRE(ens.size() == static_cast<std::size_t>(m));
        double sum = 0.0;
        for (double w : ens.weights) sum += w;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(ens.freqs.front() == doctest::Approx(-1.0));
        CHECK(ens.freqs.back() == doctest::Approx(1.0));
        CHECK(ens.weights.front() == doctest::Approx(0.5 * ens.weights[1]));
        // Exact discrete variance: sum over the trapezoid nodes.
        const double h = eps / (m - 1);
        double num = 0.0;
        double den = 0.0;
        for (int k = 0; k < m; ++k) {
            const double x = -1.0 + k * h;
            const double w = (k == 0 || k == m - 1) ? 0.5 : 1.0;
            num += w * x * x;
            den += w;
        }
        double var = 0.0;
        for (std::size_t k = 0; k < ens.size(); ++k) var += ens.weights[k] * ens.freqs[k] * ens.freqs[k];
        CHECK(var == doctest::Approx(num / den).epsilon(1e-13));
    }
    // O(h^2) approach to eps^2 / 12
    auto err = [&](int m) {
        const auto ens = discretize(d, m);
        double var = 0.0;
        for (std::size_t k = 0; k < ens.size(); ++k) var += ens.weights[k] * ens.freqs[k] * ens.freqs[k];
        return std::abs(var - eps * eps / 12.0);
    };
    CHECK(err(81) / err(161) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("discretize passes a dirac comb through") {
    const FrequencyDistribution d = DiracComb{{1.0, 2.0, 4.0}, {0.2, 0.3, 0.5}};
    const auto ens = discretize(d, 81);
    CHECK(ens.size() == 3);
    CHECK(ens.weights[2] == 0.5);
}
