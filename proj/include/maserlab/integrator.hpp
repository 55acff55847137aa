#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "maserlab/ensemble.hpp"

namespace maserlab {

/// Thrown when the state stops being finite.
class IntegrationBlowUp : public Error {
public:
    using Error::Error;
};

/// Additive perturbation of the feedback channel for one integration step.
/// The transverse feedback terms become (alpha + gain) * avg + field.
struct FeedbackNoise {
    double field_x = 0.0;
    double field_y = 0.0;
    double gain = 0.0;
};

/// Called once per integration step; the sample is held over all RK stages.
using NoiseSampler = std::function<FeedbackNoise()>;

/// Equilibrium with every spin tilted by the same transverse seed.
struct EquilibriumTilt {
    double magnitude = 0.01 * kDefaultP0;
    std::optional<double> phase;  // rad; drawn from the seed when absent
};

struct IntegrationConfig {
    double dt = 5e-4;         // s
    double t_end = 800.0;     // s
    int record_every = 10;    // sample_dt = dt * record_every
    int nodes = kDefaultNodes;
    std::optional<double> rotating_frame;  // rad/s; lab frame when empty
    std::variant<EquilibriumTilt, SpinEnsembleState> initial = EquilibriumTilt{};
    std::uint64_t seed = 1;
    double checkpoint_every = 0.0;  // s; 0 disables full-state checkpoints

    void validate() const;
    [[nodiscard]] double sample_dt() const { return dt * record_every; }

    /// Defaults, but integrated in the frame rotating at omega_r with step dt
    /// and recorded every 5 ms. Residual rates there are small, so dt can be
    /// ten times the lab-frame default.
    [[nodiscard]] static IntegrationConfig rotating(double omega_r, double dt = 5e-3);
};

struct Trajectory {
    std::vector<double> times;
    std::vector<AveragePolarization> avg;
    double sample_dt = 0.0;
    std::vector<SpinEnsembleState> checkpoints;
    SpinEnsembleState final_state;
    std::optional<double> rotating_frame;  // frame used for integration; samples are lab frame

    [[nodiscard]] std::size_t size() const { return times.size(); }
    /// Samples with t >= t_start.
    [[nodiscard]] Trajectory window(double t_start) const;
    [[nodiscard]] std::vector<double> px() const;
    [[nodiscard]] std::vector<double> py() const;
    [[nodiscard]] std::vector<double> pz() const;
    [[nodiscard]] double max_transverse() const;
};

/// Right-hand side of the discretized Bloch equations with mean-field feedback.
/// `frame_offset` shifts every Larmor frequency (rotating frame at that rate).
[[nodiscard]] SpinEnsembleState derivative(const SpinEnsembleState& state, const PhysicalParams& params,
                                           const DiscretizedEnsemble& ens,
                                           const std::optional<FeedbackNoise>& noise = std::nullopt,
                                           double frame_offset = 0.0);

/// Fixed-step classical RK4 stepper. Holds scratch buffers, so one instance
/// per thread.
class BlochIntegrator {
public:
    BlochIntegrator(const PhysicalParams& params, const DiscretizedEnsemble& ens, double dt,
                    double frame_offset = 0.0);

    /// Advances `state` by one step of dt. Throws IntegrationBlowUp on non-finite output.
    void step(SpinEnsembleState& state, const FeedbackNoise& noise = {});

    /// Advances `state` and a tangent vector of the linearized flow together.
    void step_with_tangent(SpinEnsembleState& state, SpinEnsembleState& tangent,
                           const FeedbackNoise& noise = {});

    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] const DiscretizedEnsemble& ensemble() const { return ens_; }
    [[nodiscard]] const PhysicalParams& params() const { return params_; }

private:
    PhysicalParams params_;
    DiscretizedEnsemble ens_;
    std::vector<double> omega_;  // frame-shifted frequencies
    double dt_;
    double frame_offset_;
    SpinEnsembleState k_[4];
    SpinEnsembleState stage_;
    SpinEnsembleState tk_[4];
    SpinEnsembleState tstage_;
};

/// Initial state described by `cfg.initial`.
[[nodiscard]] SpinEnsembleState initial_state(const DiscretizedEnsemble& ens, const PhysicalParams& params,
                                              const IntegrationConfig& cfg);

[[nodiscard]] Trajectory simulate(const PhysicalParams& params, const DiscretizedEnsemble& ens,
                                  const IntegrationConfig& cfg, const NoiseSampler& noise = {});

[[nodiscard]] Trajectory simulate(const PhysicalParams& params, const FrequencyDistribution& dist,
                                  const IntegrationConfig& cfg, const NoiseSampler& noise = {});

/// `t,Px,Py,Pz` rows, full double precision.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Little-endian: uint64 M, then px[M], py[M], pz[M] as float64.
void write_checkpoint(std::ostream& os, const SpinEnsembleState& state);
[[nodiscard]] SpinEnsembleState read_checkpoint(std::istream& is);

}  // namespace maserlab
