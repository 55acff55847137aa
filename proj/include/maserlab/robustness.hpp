#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "maserlab/analysis.hpp"
#include "maserlab/parallel.hpp"

namespace maserlab {

enum class NoiseKind { field, gain };

[[nodiscard]] std::string to_string(NoiseKind kind);
[[nodiscard]] std::optional<NoiseKind> noise_kind_from_string(const std::string& name);

/// Bounded uniform noise in [-eta, eta] on the feedback channel, redrawn
/// every hold_dt and held constant in between.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::field;
    double eta = 0.0;     // rad/s
    double hold_dt = 0.0; // s; 0 means one integration step
    std::uint64_t seed = 1;

    void validate(double dt) const;
};

/// Sample-and-hold generator usable as a NoiseSampler (one call per step).
/// Field noise draws l and g from independent streams.
class SampleHoldNoise {
public:
    SampleHoldNoise(const NoiseSpec& spec, double dt);

    FeedbackNoise operator()();

    [[nodiscard]] long long steps_per_hold() const { return steps_per_hold_; }

private:
    NoiseSpec spec_;
    long long steps_per_hold_;
    long long counter_ = 0;
    std::mt19937_64 stream_l_;
    std::mt19937_64 stream_g_;
    FeedbackNoise held_;
};

struct FeedbackTerms {
    double x = 0.0;  // replaces alpha * avg_x
    double y = 0.0;  // replaces alpha * avg_y
};

[[nodiscard]] FeedbackTerms noisy_feedback(double alpha, const AveragePolarization& avg, const FeedbackNoise& sample);

/// Normalized spectral overlap of two amplitude spectra on the same grid,
/// integrated with the trapezoidal rule over the band above DC.
[[nodiscard]] double r_metric(const Spectrum& reference, const Spectrum& noisy);

struct RobustnessOptions {
    int n_runs = 50;
    double transient = 300.0;  // s
    std::size_t spectrum_length = kDefaultSpectrumLength;
    double hold_dt = 0.0;      // s; 0 means one integration step
    std::uint64_t seed = 1;    // noise seeds derive from this; the initial state uses cfg.seed
    int threads = 1;
};

struct RobustnessResult {
    double eta = 0.0;
    double r_mean = 0.0;
    double r_std = 0.0;
    int n_runs = 0;
    int n_ok = 0;
    std::vector<double> r_values;  // per successful run
    std::vector<std::string> warnings;
};

struct RobustnessCurve {
    NoiseKind kind = NoiseKind::field;
    std::vector<RobustnessResult> points;
    /// Largest eta on the grid with r_mean > 1/e.
    std::optional<double> extent;
    /// First downward crossing of 1/e, linearly interpolated between grid points.
    std::optional<double> crossing;
};

[[nodiscard]] Spectrum run_spectrum(const PhysicalParams& params, const DiscretizedEnsemble& ens,
                                    const IntegrationConfig& cfg, const RobustnessOptions& opts,
                                    const std::optional<NoiseSpec>& noise);

[[nodiscard]] RobustnessCurve robustness_curve(const PhysicalParams& params, const FrequencyDistribution& dist,
                                               const IntegrationConfig& cfg, NoiseKind kind,
                                               const std::vector<double>& etas, const RobustnessOptions& opts = {});

}  // namespace maserlab
