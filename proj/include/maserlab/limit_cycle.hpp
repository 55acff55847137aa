#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maserlab/distribution.hpp"
#include "maserlab/params.hpp"
#include "maserlab/quadrature.hpp"

namespace maserlab {

/// Raised when the self-consistency root finder fails to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Uniformly rotating steady state of the feedback-coupled ensemble.
///
/// In the frame rotating at `omega_s` the transverse mean field is the real
/// number sqrt(amp2); the per-frequency steady state follows from `profile`.
struct LimitCycleSolution {
    double omega_s = 0.0;  // rad/s
    double amp2 = 0.0;     // |avg P_T|^2
    /// Dimensionless residuals of the frequency and amplitude conditions.
    std::array<double, 2> residuals{0.0, 0.0};
    int iterations = 0;
    bool pinned = false;  // omega_s fixed by mirror symmetry
    std::vector<std::string> warnings;

    [[nodiscard]] double amplitude() const;
};

struct LimitCycleOptions {
    int nodes_per_branch = 200;
    double tolerance = 1e-13;
    int max_iterations = 60;
};

/// Per-frequency Lorentzian weight {[1 + (omega - omega_s)^2 T2^2]/T1 + alpha^2 T2 amp2}^-1, in s.
[[nodiscard]] double lorentz_weight(double omega, double omega_s, double amp2, const PhysicalParams& params);

/// Residuals (frequency, amplitude) of the self-consistency conditions,
/// both scaled by alpha P0 T2 / T1 so that they are dimensionless and O(1).
[[nodiscard]] std::array<double, 2> self_consistency_residuals(const PhysicalParams& params,
                                                               const QuadratureRule& rule, double omega_s,
                                                               double amp2);

/// Solves for (omega_s, amp2 > 0). Returns nullopt when no positive-amplitude
/// root exists (the no-signal region); throws ConvergenceError otherwise.
[[nodiscard]] std::optional<LimitCycleSolution> solve_limit_cycle(const PhysicalParams& params,
                                                                  const FrequencyDistribution& dist,
                                                                  const LimitCycleOptions& opts = {});

/// Same, over an explicit quadrature rule with an optional symmetry center
/// and an initial frequency guess.
[[nodiscard]] std::optional<LimitCycleSolution> solve_limit_cycle(const PhysicalParams& params,
                                                                  const QuadratureRule& rule,
                                                                  std::optional<double> symmetry_center,
                                                                  double omega_guess,
                                                                  const LimitCycleOptions& opts = {});

struct ProfilePoint {
    double omega = 0.0;
    std::complex<double> pt;  // rotating-frame transverse polarization
    double pz = 0.0;
};

/// Steady state at one frequency, with the mean field gauged real positive.
[[nodiscard]] ProfilePoint profile_at(const LimitCycleSolution& sol, const PhysicalParams& params, double omega);

[[nodiscard]] std::vector<ProfilePoint> profile(const LimitCycleSolution& sol, const PhysicalParams& params,
                                                std::span<const double> omegas);

}  // namespace maserlab
