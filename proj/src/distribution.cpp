#include "maserlab/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maserlab {

namespace {

constexpr double kNormTol = 1e-10;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double trapezoid_mass(const Tabulated& t) {
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < t.grid.size(); ++i)
        mass += 0.5 * (t.density[i] + t.density[i + 1]) * (t.grid[i + 1] - t.grid[i]);
    return mass;
}

void check(DiracComb& d) {
    if (d.freqs.empty() || d.freqs.size() != d.weights.size())
        throw InvalidArgument("DiracComb: freqs and weights must be nonempty and equal length");
    std::vector<std::size_t> order(d.freqs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return d.freqs[a] < d.freqs[b]; });
    DiracComb sorted;
    for (auto i : order) {
        if (!std::isfinite(d.freqs[i])) throw InvalidArgument("DiracComb: non-finite frequency");
        if (!(d.weights[i] >= 0.0)) throw InvalidArgument("DiracComb: weights must be >= 0");
        sorted.freqs.push_back(d.freqs[i]);
        sorted.weights.push_back(d.weights[i]);
    }
    for (std::size_t i = 1; i < sorted.freqs.size(); ++i)
        if (sorted.freqs[i] == sorted.freqs[i - 1])
            throw InvalidArgument("DiracComb: duplicate frequency");
    const double total = std::accumulate(sorted.weights.begin(), sorted.weights.end(), 0.0);
    if (std::abs(total - 1.0) > kNormTol) throw InvalidArgument("DiracComb: weights must sum to 1");
    d = std::move(sorted);
}

void check_width(double center, double width, const char* what) {
    if (!std::isfinite(center)) throw InvalidArgument(std::string(what) + ": non-finite center");
    if (!(width > 0.0) || !std::isfinite(width))
        throw InvalidArgument(std::string(what) + ": width must be > 0");
}

void check(Tabulated& t) {
    if (t.grid.size() < 2 || t.grid.size() != t.density.size())
        throw InvalidArgument("Tabulated: need >= 2 grid points and matching density");
    for (std::size_t i = 1; i < t.grid.size(); ++i)
        if (!(t.grid[i] > t.grid[i - 1])) throw InvalidArgument("Tabulated: grid must be strictly increasing");
    for (double v : t.density)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("Tabulated: density must be finite and >= 0");
    if (std::abs(trapezoid_mass(t) - 1.0) > kNormTol)
        throw InvalidArgument("Tabulated: density must integrate to 1");
}

bool mirrored(const std::vector<double>& x, const std::vector<double>& w, double tol) {
    const std::size_t n = x.size();
    const double c = 0.5 * (x.front() + x.back());
    const double scale = std::max(1.0, std::abs(c));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = n - 1 - i;
        if (std::abs((x[i] - c) + (x[j] - c)) > tol * scale) return false;
        if (std::abs(w[i] - w[j]) > tol * std::max(1.0, std::abs(w[i]))) return false;
    }
    return true;
}

double root_density(const Root& r, double omega) {
    const double eps = r.width;
    const double d = omega - r.center;
    const double plateau = 1.5 / eps;
    if (d < -2.0 * eps / 3.0 || d > eps / 3.0) return 0.0;
    if (d < -eps / 3.0) return plateau * std::sqrt(std::max(0.0, (3.0 * d + 2.0 * eps) / eps));
    if (d < 0.0) return plateau;
    return plateau * std::max(0.0, 1.0 - std::sqrt(3.0 * d / eps));
}

}  // namespace

FrequencyDistribution::FrequencyDistribution(DiracComb d) : v_(std::move(d)) {
    check(std::get<DiracComb>(v_));
}

FrequencyDistribution::FrequencyDistribution(Uniform d) : v_(d) { check_width(d.center, d.width, "Uniform"); }

FrequencyDistribution::FrequencyDistribution(Root d) : v_(d) { check_width(d.center, d.width, "Root"); }

FrequencyDistribution::FrequencyDistribution(Tabulated d) : v_(std::move(d)) {
    check(std::get<Tabulated>(v_));
}

FrequencyDistribution FrequencyDistribution::single(double omega0) {
    return FrequencyDistribution(DiracComb{{omega0}, {1.0}});
}

std::string FrequencyDistribution::kind() const {
    return std::visit(overloaded{[](const DiracComb&) { return std::string("dirac-comb"); },
                                 [](const Uniform&) { return std::string("uniform"); },
                                 [](const Root&) { return std::string("root"); },
                                 [](const Tabulated&) { return std::string("tabulated"); }},
                      v_);
}

std::pair<double, double> FrequencyDistribution::support() const {
    return std::visit(
        overloaded{[](const DiracComb& d) { return std::pair{d.freqs.front(), d.freqs.back()}; },
                   [](const Uniform& u) {
                       return std::pair{u.center - 0.5 * u.width, u.center + 0.5 * u.width};
                   },
                   [](const Root& r) {
                       return std::pair{r.center - 2.0 * r.width / 3.0, r.center + r.width / 3.0};
                   },
                   [](const Tabulated& t) { return std::pair{t.grid.front(), t.grid.back()}; }},
        v_);
}

double FrequencyDistribution::mean() const {
    return std::visit(overloaded{[](const DiracComb& d) {
                                     double m = 0.0;
                                     for (std::size_t i = 0; i < d.freqs.size(); ++i)
                                         m += d.freqs[i] * d.weights[i];
                                     return m;
                                 },
                                 [](const Uniform& u) { return u.center; },
                                 [this](const auto&) {
                                     return integration_rule(*this).integrate([](double w) { return w; });
                                 }},
                      v_);
}

std::optional<double> FrequencyDistribution::symmetry_center() const {
    return std::visit(
        overloaded{[](const DiracComb& d) -> std::optional<double> {
                       if (mirrored(d.freqs, d.weights, 1e-13))
                           return 0.5 * (d.freqs.front() + d.freqs.back());
                       return std::nullopt;
                   },
                   [](const Uniform& u) -> std::optional<double> { return u.center; },
                   [](const Root&) -> std::optional<double> { return std::nullopt; },
                   [](const Tabulated& t) -> std::optional<double> {
                       if (mirrored(t.grid, t.density, 1e-13)) return 0.5 * (t.grid.front() + t.grid.back());
                       return std::nullopt;
                   }},
        v_);
}

double density(const FrequencyDistribution& dist, double omega) {
    return std::visit(
        overloaded{[](const DiracComb&) { return 0.0; },
                   [omega](const Uniform& u) {
                       const double half = 0.5 * u.width;
                       return std::abs(omega - u.center) <= half ? 1.0 / u.width : 0.0;
                   },
                   [omega](const Root& r) { return root_density(r, omega); },
                   [omega](const Tabulated& t) {
                       if (omega < t.grid.front() || omega > t.grid.back()) return 0.0;
                       auto it = std::upper_bound(t.grid.begin(), t.grid.end(), omega);
                       if (it == t.grid.end()) return t.density.back();
                       const auto i = static_cast<std::size_t>(it - t.grid.begin()) - 1;
                       const double f = (omega - t.grid[i]) / (t.grid[i + 1] - t.grid[i]);
                       return (1.0 - f) * t.density[i] + f * t.density[i + 1];
                   }},
        dist.variant());
}

QuadratureRule integration_rule(const FrequencyDistribution& dist, int nodes_per_branch) {
    constexpr int kOrder = 20;
    const int panels = std::max(1, nodes_per_branch / kOrder);
    auto append = [](QuadratureRule& out, const QuadratureRule& part) {
        out.nodes.insert(out.nodes.end(), part.nodes.begin(), part.nodes.end());
        out.weights.insert(out.weights.end(), part.weights.begin(), part.weights.end());
    };
    return std::visit(
        overloaded{
            [](const DiracComb& d) { return QuadratureRule{d.freqs, d.weights}; },
            [&](const Uniform& u) {
                auto rule = composite_gauss_legendre(u.center - 0.5 * u.width, u.center + 0.5 * u.width,
                                                     panels, kOrder);
                for (double& w : rule.weights) w /= u.width;
                return rule;
            },
            [&](const Root& r) {
                const double eps = r.width;
                const double lo = r.center - 2.0 * eps / 3.0;
                QuadratureRule rule;
                // omega = lo + (eps/3) u^2 makes the rising square-root edge polynomial.
                QuadratureRule rise = composite_gauss_legendre(0.0, 1.0, panels, kOrder);
                for (std::size_t k = 0; k < rise.size(); ++k) {
                    const double u = rise.nodes[k];
                    rise.nodes[k] = lo + eps / 3.0 * u * u;
                    rise.weights[k] *= u * u;
                }
                append(rule, rise);
                QuadratureRule flat =
                    composite_gauss_legendre(r.center - eps / 3.0, r.center, panels, kOrder);
                for (double& w : flat.weights) w *= 1.5 / eps;
                append(rule, flat);
                // omega = center + (eps/3) u^2 for the falling edge.
                QuadratureRule fall = composite_gauss_legendre(0.0, 1.0, panels, kOrder);
                for (std::size_t k = 0; k < fall.size(); ++k) {
                    const double u = fall.nodes[k];
                    fall.nodes[k] = r.center + eps / 3.0 * u * u;
                    fall.weights[k] *= (1.0 - u) * u;
                }
                append(rule, fall);
                return rule;
            },
            [&](const Tabulated& t) {
                const int intervals = static_cast<int>(t.grid.size()) - 1;
                const int order = std::clamp(nodes_per_branch / intervals, 4, kOrder);
                const QuadratureRule base = gauss_legendre(order);
                QuadratureRule rule;
                for (int i = 0; i < intervals; ++i) {
                    const double a = t.grid[i];
                    const double b = t.grid[i + 1];
                    for (int k = 0; k < order; ++k) {
                        const double f = 0.5 * (base.nodes[k] + 1.0);
                        rule.nodes.push_back(a + f * (b - a));
                        const double rho = (1.0 - f) * t.density[i] + f * t.density[i + 1];
                        rule.weights.push_back(0.5 * (b - a) * base.weights[k] * rho);
                    }
                }
                return rule;
            }},
        dist.variant());
}

}  // namespace maserlab
