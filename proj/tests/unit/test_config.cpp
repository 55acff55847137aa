#include <doctest.h>

#include "maserlab/config.hpp"

using namespace maserlab;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("empty config gives the reference defaults") {
    const auto c = parse_config("{}");
    const PhysicalParams ref;
    CHECK(c.params.t1 == ref.t1);
    CHECK(c.params.t2 == ref.t2);
    CHECK(c.params.p0 == ref.p0);
    CHECK(c.params.alpha == doctest::Approx(4.0 / (ref.t2 * ref.p0)));
    CHECK(c.distribution.kind == "uniform");
    CHECK(c.width() == doctest::Approx(1.0 / ref.t2));
    CHECK(c.analysis.integration.seed == c.seed);
    CHECK(c.sweep.alpha_ratios.size() == 17);
    CHECK(c.sweep.eps_t2.front() == doctest::Approx(0.1));
}

TEST_CASE("schema violations name the JSON path") {
    CHECK(error_of(R"({"params":{"t2_s":-1}})").find("$.params.t2_s") == 0);
    CHECK(error_of(R"({"params":{"t2":13}})").find("$.params.t2") != std::string::npos);
    CHECK(error_of(R"({"bogus":1})").find("$.bogus") != std::string::npos);
    CHECK_FALSE(error_of(R"({"distribution":{"width_per_t2":1,"width_hz":0.01}})").empty());
    CHECK_FALSE(error_of(R"({"params":{"alpha_ratio":2,"alpha_rad_s":0.5}})").empty());
    CHECK_FALSE(error_of(R"({"integration":{"nodes":1}})").empty());
    CHECK_FALSE(error_of(R"({"integration":{"frame":"spinning"}})").empty());
    CHECK_FALSE(error_of(R"({"analysis":{"spectrum_length":1024}})").empty());
    CHECK_FALSE(error_of(R"({"robustness":{"etas":[1,0.5]}})").empty());
    CHECK_FALSE(error_of(R"({"seed":-3})").empty());
    CHECK_FALSE(error_of("[1,2]").empty());
    CHECK_FALSE(error_of("{\"params\": ").empty());
}

TEST_CASE("width conventions") {
    const auto per_t2 = parse_config(R"({"distribution":{"kind":"uniform","width_per_t2":2}})");
    CHECK(per_t2.width() == doctest::Approx(2.0 / per_t2.params.t2));
    const auto hz = parse_config(R"({"distribution":{"kind":"uniform","width_hz":0.05}})");
    CHECK(hz.width() == doctest::Approx(hz_to_rad(0.05)));
    const auto d = hz.distribution_model();
    CHECK(d.support().second - d.support().first == doctest::Approx(hz_to_rad(0.05)));
    CHECK(d.mean() == doctest::Approx(hz_to_rad(kDefaultCenterHz)));
}

TEST_CASE("rotating frame defaults to the distribution center") {
    const auto c = parse_config(R"({"distribution":{"center_hz":5},"integration":{"frame":"rotating"}})");
    REQUIRE(c.integration.rotating_frame.has_value());
    CHECK(*c.integration.rotating_frame == doctest::Approx(hz_to_rad(5.0)));
    CHECK(c.analysis.integration.rotating_frame == c.integration.rotating_frame);
}

TEST_CASE("config hash tracks semantic fields only") {
    const auto base = parse_config("{}");
    CHECK(base.hash().size() == 16);
    CHECK(parse_config("{}").hash() == base.hash());
    CHECK(parse_config(R"({"output_dir":"elsewhere"})").hash() == base.hash());
    CHECK(parse_config(R"({"params":{"alpha_ratio":4}})").hash() == base.hash());
    CHECK(parse_config(R"({"seed":2})").hash() != base.hash());
    CHECK(parse_config(R"({"params":{"alpha_ratio":4.5}})").hash() != base.hash());
    CHECK(parse_config(R"({"integration":{"nodes":82}})").hash() != base.hash());
    CHECK(parse_config(R"({"analysis":{"transient_s":301}})").hash() != base.hash());
    const auto canon = base.canonical();
    CHECK_FALSE(canon.contains("output_dir"));
    CHECK(canon.at("params").at("alpha_rad_s").get<double>() == base.params.alpha);
}
