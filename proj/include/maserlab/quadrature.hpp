#pragma once

#include <cstddef>
#include <vector>

namespace maserlab {

/// Nodes and weights of a one-dimensional rule; weights already include any
/// density factor, so integral ~= sum w_k f(x_k).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return nodes.size(); }

    template <class F>
    [[nodiscard]] auto integrate(F&& f) const {
        using R = decltype(f(0.0));
        R acc{};
        for (std::size_t k = 0; k < nodes.size(); ++k) acc += weights[k] * f(nodes[k]);
        return acc;
    }
};

/// n-point Gauss-Legendre rule on [-1, 1].
[[nodiscard]] QuadratureRule gauss_legendre(int n);

/// Composite rule on [a, b]: `panels` equal panels of `order` points each.
[[nodiscard]] QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order);

}  // namespace maserlab
