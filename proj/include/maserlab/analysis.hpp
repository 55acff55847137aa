#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maserlab/integrator.hpp"

namespace maserlab {

/// Raised when a trajectory is too short for the requested analysis.
class InsufficientData : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Poincare sections

enum class CrossingDirection { upward, downward };

/// Intersections of the mean polarization with the plane avg_y = 0.
struct PoincareSection {
    std::vector<std::array<double, 2>> points;  // (avg_x, avg_z)
    std::vector<double> times;
    CrossingDirection direction = CrossingDirection::upward;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Crossings are bracketed on the samples and located on a local degree-7
/// interpolant (eight samples around the bracket). Requires >= 10 crossings.
[[nodiscard]] PoincareSection poincare(const Trajectory& traj, CrossingDirection direction = CrossingDirection::upward);

struct SectionShape {
    double cluster_radius = 0.0;   // max distance from the centroid
    double curve_length = 0.0;     // perimeter of the angle-ordered polygon
    double max_neighbor_gap = 0.0; // largest nearest-neighbour distance
    double hull_perimeter = 0.0;
    /// curve_length / hull_perimeter: close to one for a smooth closed
    /// curve, large when points scatter across several strands.
    double zigzag = 0.0;
};

[[nodiscard]] SectionShape section_shape(const PoincareSection& section);

// ---------------------------------------------------------------------------
// Spectra

struct Spectrum {
    std::vector<double> freqs;  // Hz, 0 .. Nyquist
    std::vector<double> amps;   // single-sided amplitude
    double resolution = 0.0;    // Hz
    bool dc_excluded = false;

    [[nodiscard]] std::size_t size() const { return freqs.size(); }
};

inline constexpr std::size_t kMinSpectrumLength = std::size_t{1} << 14;
inline constexpr std::size_t kDefaultSpectrumLength = std::size_t{1} << 16;

/// Rectangular-window single-sided amplitude spectrum: a cosine of amplitude
/// A centred on a bin shows up as A in that bin.
[[nodiscard]] Spectrum spectrum(std::span<const double> series, double sample_dt, bool exclude_dc = false);

/// Spectrum of avg_x over the last `length` samples of a uniformly sampled trajectory.
[[nodiscard]] Spectrum spectrum(const Trajectory& traj, std::size_t length = kDefaultSpectrumLength,
                                bool exclude_dc = false);

struct SpectralPeak {
    double freq = 0.0;  // Hz
    double amp = 0.0;
};

/// Local maxima above `relative_floor` times the largest non-DC amplitude,
/// strongest first.
[[nodiscard]] std::vector<SpectralPeak> find_peaks(const Spectrum& spec, double relative_floor = 0.05,
                                                   std::size_t max_peaks = 32);

// ---------------------------------------------------------------------------
// Lyapunov exponent

/// Linearized right-hand side applied to a tangent vector.
[[nodiscard]] SpinEnsembleState jacobian_vector(const SpinEnsembleState& state, const SpinEnsembleState& tangent,
                                                const PhysicalParams& params, const DiscretizedEnsemble& ens,
                                                const FeedbackNoise& noise = {});

struct LyapunovOptions {
    double tau = 1.0;          // s between renormalizations
    int k = 2000;              // renormalizations accumulated
    double transient = 200.0;  // s discarded before accumulating
    int blocks = 20;           // for the standard error
};

struct LyapunovResult {
    double lambda = 0.0;     // 1/s
    double std_error = 0.0;  // block-averaged standard error
    int k_steps = 0;
    double tau = 0.0;
    std::vector<double> history;  // running estimate after each renormalization
    int retries = 0;
};

/// Largest exponent from a single tangent vector renormalized every tau.
[[nodiscard]] LyapunovResult lyapunov(const PhysicalParams& params, const DiscretizedEnsemble& ens,
                                      const IntegrationConfig& cfg, const LyapunovOptions& opts = {});

[[nodiscard]] LyapunovResult lyapunov(const PhysicalParams& params, const FrequencyDistribution& dist,
                                      const IntegrationConfig& cfg, const LyapunovOptions& opts = {});

/// Accumulates ln|v| samples into a result (mean, block error, history).
[[nodiscard]] LyapunovResult summarize_lyapunov(std::span<const double> log_growth, double tau, int blocks);

// ---------------------------------------------------------------------------
// Classification

enum class Phase { no_signal, limit_cycle, quasi_periodic, chaos };

[[nodiscard]] std::string to_string(Phase phase);
[[nodiscard]] std::optional<Phase> phase_from_string(const std::string& name);

inline constexpr const char* kClassifierVersion = "maserlab-classifier/1";

struct ClassifierThresholds {
    double no_signal_amplitude = 1e-4;
    double lambda_chaos = 0.005;   // 1/s
    double sigma_factor = 3.0;
    double cluster_fraction = 1e-3;  // cluster radius relative to amplitude
    double zigzag_limit = 2.0;       // section statistic above this is "scattered"
};

struct PhaseEvidence {
    double amplitude = 0.0;  // max |avg P_T| over the window
    double lambda = 0.0;
    double lambda_error = 0.0;
    std::size_t peak_count = 0;
    double peak_hz = 0.0;
    std::size_t section_points = 0;
    double cluster_radius = 0.0;
    double section_statistic = 0.0;  // SectionShape::zigzag
    bool unclassified = false;
    std::string note;
};

struct PhaseLabel {
    Phase kind = Phase::no_signal;
    std::optional<double> omega_s;  // rad/s, limit cycles only
    PhaseEvidence evidence;
    std::string rules = kClassifierVersion;
};

/// Decision tree: no signal, then chaos by the Lyapunov exponent, then a
/// single section cluster for a limit cycle, otherwise quasi-periodic.
/// `section` may be empty when the window had too few crossings.
[[nodiscard]] PhaseLabel classify(const Trajectory& window, const LyapunovResult& lyap, const Spectrum& spec,
                                  const std::optional<PoincareSection>& section,
                                  const ClassifierThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// One-shot pipeline used by the sweep and the command line

struct AnalysisConfig {
    IntegrationConfig integration;
    double transient = 300.0;  // s discarded before any analysis
    LyapunovOptions lyapunov;  // transient = tangent alignment time, capped at `transient`
    std::size_t spectrum_length = kDefaultSpectrumLength;
    ClassifierThresholds thresholds;
};

struct PointAnalysis {
    Trajectory window;
    Spectrum spectrum;
    std::optional<PoincareSection> section;
    LyapunovResult lyapunov;
    PhaseLabel label;
};

/// Simulates once with a tangent vector attached: after `transient`, the
/// exponent accumulates for k * tau seconds while samples are recorded;
/// spectrum and section use the last `spectrum_length` samples.
[[nodiscard]] PointAnalysis analyze_point(const PhysicalParams& params, const FrequencyDistribution& dist,
                                          const AnalysisConfig& cfg);

}  // namespace maserlab
