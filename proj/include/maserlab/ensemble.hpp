#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "maserlab/distribution.hpp"
#include "maserlab/params.hpp"

namespace maserlab {

inline constexpr int kDefaultNodes = 81;

/// Quadrature grid {omega_nu, w_nu} standing in for the continuous ensemble.
struct DiscretizedEnsemble {
    std::vector<double> freqs;    // rad/s, strictly increasing
    std::vector<double> weights;  // sum to 1

    [[nodiscard]] std::size_t size() const { return freqs.size(); }

    /// The ensemble viewed as a point-mass distribution.
    [[nodiscard]] FrequencyDistribution as_distribution() const;
};

/// Uniformly spaced nodes across the support with trapezoidal weights
/// rho(omega_nu) d omega (half weight at both ends), renormalized to sum 1.
/// A DiracComb is passed through unchanged and `m` is ignored.
[[nodiscard]] DiscretizedEnsemble discretize(const FrequencyDistribution& dist, int m = kDefaultNodes);

/// Per-frequency polarization vectors, stored as three parallel arrays.
struct SpinEnsembleState {
    std::vector<double> px;
    std::vector<double> py;
    std::vector<double> pz;
    double t = 0.0;

    SpinEnsembleState() = default;
    explicit SpinEnsembleState(std::size_t m) : px(m, 0.0), py(m, 0.0), pz(m, 0.0) {}

    [[nodiscard]] std::size_t size() const { return px.size(); }
};

struct AveragePolarization {
    double px = 0.0;
    double py = 0.0;
    double pz = 0.0;

    [[nodiscard]] std::complex<double> transverse() const { return {px, py}; }
};

[[nodiscard]] AveragePolarization average_polarization(const SpinEnsembleState& state,
                                                       const DiscretizedEnsemble& ens);

/// Every spin at (0, 0, P0), t = 0.
[[nodiscard]] SpinEnsembleState equilibrium_state(const DiscretizedEnsemble& ens, const PhysicalParams& params);

}  // namespace maserlab
