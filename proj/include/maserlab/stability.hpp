#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "maserlab/ensemble.hpp"
#include "maserlab/limit_cycle.hpp"

namespace maserlab {

using cdouble = std::complex<double>;

enum class StabilityMethod { characteristic, jacobian, both };

[[nodiscard]] std::string to_string(StabilityMethod m);

struct StabilityOptions {
    StabilityMethod method = StabilityMethod::both;
    int nodes_per_branch = 200;  // characteristic-function quadrature
    int jacobian_nodes = kDefaultNodes;
    /// Contour offset, in units of 1/T2.
    double contour_offset = 1e-4;
    /// Eigenvalues with |lambda| below this (units of 1/T2) count as the phase mode.
    double zero_mode_radius = 1e-6;
};

struct StabilityVerdict {
    bool stable = false;
    /// Growth rate with the largest real part, phase mode excluded (1/s).
    cdouble leading_beta{0.0, 0.0};
    StabilityMethod method = StabilityMethod::both;
    /// |D(0)| / |D(1/T2)|; vanishes for an exact limit cycle.
    double zero_mode_residual = 0.0;

    std::optional<int> unstable_root_count;     // characteristic route
    std::optional<bool> characteristic_stable;
    std::optional<bool> jacobian_stable;
    std::optional<cdouble> jacobian_zero_mode;  // eigenvalue removed as the phase mode
    bool agreement = true;
    std::string diagnostics;
};

/// Linearization matrix for one frequency, rows/columns ordered
/// (dPz, dPT, dPT*) in the frame rotating at omega_s.
[[nodiscard]] Eigen::Matrix3cd m_matrix(cdouble beta, double omega, double omega_s, cdouble mean_pt,
                                        const PhysicalParams& params);

/// D(beta) = (1 - A)(1 - E) - B C, where A, B, C, E are the four
/// ensemble-averaged response integrals; zeros of D are growth rates.
[[nodiscard]] cdouble characteristic(cdouble beta, const PhysicalParams& params, const QuadratureRule& rule,
                                     const LimitCycleSolution& sol);

[[nodiscard]] cdouble characteristic(cdouble beta, const PhysicalParams& params, const FrequencyDistribution& dist,
                                     const LimitCycleSolution& sol, int nodes_per_branch = 200);

/// Number of zeros of D with Re beta > offset, by the argument principle
/// along Re beta = offset closed through the right half-plane.
[[nodiscard]] int count_unstable_roots(const PhysicalParams& params, const QuadratureRule& rule,
                                       const LimitCycleSolution& sol, double offset);

/// Dense 3M x 3M Jacobian of the rotating-frame equations at a fixed point.
[[nodiscard]] Eigen::MatrixXd rotating_frame_jacobian(const PhysicalParams& params, const DiscretizedEnsemble& ens,
                                                      const LimitCycleSolution& sol);

[[nodiscard]] StabilityVerdict limit_cycle_stable(const PhysicalParams& params, const FrequencyDistribution& dist,
                                                  const LimitCycleSolution& sol, const StabilityOptions& opts = {});

struct NoSignalThreshold {
    double alpha = 0.0;        // rad/s
    double omega_onset = 0.0;  // rad/s, frequency of the first unstable mode
};

/// Smallest alpha destabilizing the no-signal fixed point.
[[nodiscard]] std::optional<NoSignalThreshold> no_signal_threshold(const PhysicalParams& params,
                                                                   const FrequencyDistribution& dist,
                                                                   int nodes_per_branch = 200);

/// Closed form for the flat distribution: eps / (2 P0 arctan(eps T2 / 2)).
[[nodiscard]] double uniform_no_signal_threshold(const PhysicalParams& params, double width);

}  // namespace maserlab
