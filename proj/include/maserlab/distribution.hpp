#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "maserlab/params.hpp"
#include "maserlab/quadrature.hpp"

namespace maserlab {

/// Discrete set of Larmor frequencies with weights summing to one.
struct DiracComb {
    std::vector<double> freqs;    // rad/s
    std::vector<double> weights;  // dimensionless
};

/// Flat density 1/width on [center - width/2, center + width/2].
struct Uniform {
    double center = 0.0;  // rad/s
    double width = 0.0;   // rad/s
};

/// Density of a cylindrical cell at the center of a Helmholtz pair.
/// Support is [center - 2 width/3, center + width/3].
struct Root {
    double center = 0.0;
    double width = 0.0;
};

/// Piecewise-linear density on a sorted grid, zero outside.
struct Tabulated {
    std::vector<double> grid;     // rad/s, strictly increasing
    std::vector<double> density;  // 1/(rad/s), non-negative
};

/// Larmor frequency distribution rho(omega). Always valid once constructed.
class FrequencyDistribution {
public:
    using Variant = std::variant<DiracComb, Uniform, Root, Tabulated>;

    FrequencyDistribution(DiracComb d);
    FrequencyDistribution(Uniform d);
    FrequencyDistribution(Root d);
    FrequencyDistribution(Tabulated d);

    static FrequencyDistribution single(double omega0);

    [[nodiscard]] const Variant& variant() const { return v_; }
    [[nodiscard]] bool is_discrete() const { return std::holds_alternative<DiracComb>(v_); }
    [[nodiscard]] std::string kind() const;

    /// Closed interval containing all probability mass.
    [[nodiscard]] std::pair<double, double> support() const;
    [[nodiscard]] double mean() const;

    /// Center of mirror symmetry, if the distribution has one.
    [[nodiscard]] std::optional<double> symmetry_center() const;

private:
    Variant v_;
};

/// rho(omega); zero outside the support. Point masses of a DiracComb are
/// not representable as a density and evaluate to zero.
[[nodiscard]] double density(const FrequencyDistribution& dist, double omega);

/// Quadrature rule integrating f(omega) rho(omega) d omega. Continuous
/// densities use composite Gauss-Legendre split at every kink; square-root
/// edges of the root distribution are removed by substitution.
[[nodiscard]] QuadratureRule integration_rule(const FrequencyDistribution& dist,
                                              int nodes_per_branch = 200);

}  // namespace maserlab
