#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "maserlab/analysis.hpp"
#include "maserlab/robustness.hpp"
#include "maserlab/sweep.hpp"

namespace maserlab {

/// Schema violation; the message starts with the JSON path ($.params.t2_s: ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

struct DistributionSpec {
    std::string kind = "uniform";  // uniform | root | single | dirac_comb | tabulated
    double center_hz = kDefaultCenterHz;
    double width_per_t2 = 1.0;     // eps * T2; width_hz is converted on parse
    std::vector<double> freqs_hz;  // dirac_comb
    std::vector<double> weights;   // dirac_comb
    std::vector<double> grid_hz;   // tabulated
    std::vector<double> density;   // tabulated, per Hz

    [[nodiscard]] FrequencyDistribution build(const PhysicalParams& params) const;
};

struct RobustnessSettings {
    NoiseKind kind = NoiseKind::field;
    std::vector<double> etas{0.0, 1.0, 3.0, 10.0, 30.0};
    int runs = 50;
    double hold_dt = 0.0;
};

struct SweepSettings {
    std::vector<double> alpha_ratios;  // default: 17 points over [0.5, 8]
    std::vector<double> eps_t2;        // default: 17 points over [0.1, 8]
    std::string dist_kind = "uniform";
    bool fast_profile = true;          // rotating frame, dt = 5 ms
};

struct RunConfig {
    PhysicalParams params;  // alpha from alpha_ratio unless alpha_rad_s given
    double alpha_ratio = 4.0;
    DistributionSpec distribution;
    IntegrationConfig integration;
    AnalysisConfig analysis;  // its integration member is kept in sync with `integration`
    RobustnessSettings robustness;
    SweepSettings sweep;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = ".";

    [[nodiscard]] FrequencyDistribution distribution_model() const { return distribution.build(params); }
    [[nodiscard]] double width() const { return distribution.width_per_t2 / params.t2; }

    /// Canonical, fully defaulted JSON of every semantic field (output_dir excluded).
    [[nodiscard]] nlohmann::json canonical() const;
    /// 16 hex digits (FNV-1a 64 of canonical().dump()).
    [[nodiscard]] std::string hash() const;
};

/// Strict parse: unknown keys and invalid values raise ConfigError.
[[nodiscard]] RunConfig parse_config(const std::string& text);
[[nodiscard]] RunConfig parse_config(const nlohmann::json& j);
inline RunConfig parse_config(const char* text) { return parse_config(std::string(text)); }

}  // namespace maserlab
