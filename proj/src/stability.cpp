#include "maserlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include "bloch_kernels.hpp"

namespace maserlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// D(beta) (beta + 1/T2) / beta: removes the phase-mode zero at the origin
/// without changing the winding number around the right half-plane.
cdouble deflated(cdouble beta, const PhysicalParams& p, const QuadratureRule& rule, const LimitCycleSolution& sol) {
    return characteristic(beta, p, rule, sol) * (beta + 1.0 / p.t2) / beta;
}

struct ContourSample {
    double theta;
    cdouble value;
};

/// Newton iteration on D with a complex central-difference derivative.
std::optional<cdouble> refine_root(cdouble beta, const PhysicalParams& p, const QuadratureRule& rule,
                                   const LimitCycleSolution& sol) {
    const double scale = 1.0 / p.t2;
    for (int it = 0; it < 60; ++it) {
        const cdouble f = characteristic(beta, p, rule, sol);
        const double h = 1e-6 * scale;
        const cdouble df =
            (characteristic(beta + h, p, rule, sol) - characteristic(beta - h, p, rule, sol)) / (2.0 * h);
        if (std::abs(df) == 0.0) return std::nullopt;
        const cdouble step = f / df;
        beta -= step;
        if (!std::isfinite(beta.real()) || !std::isfinite(beta.imag())) return std::nullopt;
        if (std::abs(step) < 1e-12 * scale) return beta;
    }
    return std::nullopt;
}

double support_width(const QuadratureRule& rule) {
    const auto [lo, hi] = std::minmax_element(rule.nodes.begin(), rule.nodes.end());
    return *hi - *lo;
}

LimitCycleSolution discrete_limit_cycle(const PhysicalParams& p, const DiscretizedEnsemble& ens,
                                        const FrequencyDistribution& dist) {
    const QuadratureRule rule{ens.freqs, ens.weights};
    auto sol = solve_limit_cycle(p, rule, dist.symmetry_center(), dist.mean());
    if (!sol) throw ConvergenceError("discretized ensemble has no limit cycle at these parameters");
    return *sol;
}

}  // namespace

std::string to_string(StabilityMethod m) {
    switch (m) {
        case StabilityMethod::characteristic: return "characteristic";
        case StabilityMethod::jacobian: return "jacobian";
        case StabilityMethod::both: return "both";
    }
    return "unknown";
}

Eigen::Matrix3cd m_matrix(cdouble beta, double omega, double omega_s, cdouble mean_pt, const PhysicalParams& p) {
    const double d = omega - omega_s;
    const cdouble i(0.0, 1.0);
    Eigen::Matrix3cd m;
    m << beta + 1.0 / p.t1, p.alpha * std::conj(mean_pt) / 2.0, p.alpha * mean_pt / 2.0,
        -p.alpha * mean_pt, beta + 1.0 / p.t2 + i * d, 0.0,
        -p.alpha * std::conj(mean_pt), 0.0, beta + 1.0 / p.t2 - i * d;
    return m;
}

cdouble characteristic(cdouble beta, const PhysicalParams& p, const QuadratureRule& rule,
                       const LimitCycleSolution& sol) {
    const cdouble mean_pt(sol.amplitude(), 0.0);
    cdouble a{}, b{}, c{}, e{};
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const ProfilePoint pp = profile_at(sol, p, rule.nodes[k]);
        const Eigen::Matrix3cd inv = m_matrix(beta, rule.nodes[k], sol.omega_s, mean_pt, p).inverse();
        const double w = rule.weights[k];
        const cdouble pt = pp.pt;
        const cdouble ptc = std::conj(pp.pt);
        a += w * (inv(1, 1) * pp.pz - inv(1, 0) * ptc / 2.0);
        b += w * (inv(1, 2) * pp.pz - inv(1, 0) * pt / 2.0);
        c += w * (inv(2, 1) * pp.pz - inv(2, 0) * ptc / 2.0);
        e += w * (inv(2, 2) * pp.pz - inv(2, 0) * pt / 2.0);
    }
    a *= p.alpha;
    b *= p.alpha;
    c *= p.alpha;
    e *= p.alpha;
    return (1.0 - a) * (1.0 - e) - b * c;
}

cdouble characteristic(cdouble beta, const PhysicalParams& params, const FrequencyDistribution& dist,
                       const LimitCycleSolution& sol, int nodes_per_branch) {
    return characteristic(beta, params, integration_rule(dist, nodes_per_branch), sol);
}

int count_unstable_roots(const PhysicalParams& p, const QuadratureRule& rule, const LimitCycleSolution& sol,
                         double offset) {
    // beta = offset + i c tan(theta), traversed downward (counterclockwise
    // around the half-plane to the right of the line).
    const double c = 1.0 / p.t2 + p.alpha + support_width(rule);
    const double edge = std::numbers::pi / 2 - 1e-7;
    auto eval = [&](double theta) { return deflated(cdouble(offset, c * std::tan(theta)), p, rule, sol); };

    constexpr int kInitial = 1024;
    constexpr double kMaxTurn = 0.4;
    double total = 0.0;
    ContourSample prev{edge, eval(edge)};
    if (std::abs(prev.value - 1.0) > 0.5)
        throw ConvergenceError("characteristic function has not reached its asymptote on the contour");
    for (int i = 1; i <= kInitial; ++i) {
        const double theta = edge - 2.0 * edge * i / kInitial;
        ContourSample next{theta, eval(theta)};
        // Bisect until each sub-step turns by less than kMaxTurn.
        std::vector<ContourSample> stack{next};
        while (!stack.empty()) {
            const ContourSample target = stack.back();
            const double turn = std::arg(target.value / prev.value);
            if (std::abs(turn) <= kMaxTurn || std::abs(target.theta - prev.theta) < 1e-13) {
                if (std::abs(target.theta - prev.theta) < 1e-13 && std::abs(turn) > kMaxTurn)
                    throw ConvergenceError("contour passes through a zero of the characteristic function");
                total += turn;
                prev = target;
                stack.pop_back();
            } else {
                const double mid = 0.5 * (prev.theta + target.theta);
                stack.push_back({mid, eval(mid)});
            }
        }
    }
    const double winding = total / (2.0 * std::numbers::pi);
    const double rounded = std::round(winding);
    if (std::abs(winding - rounded) > 0.05)
        throw ConvergenceError(fmt::format("non-integer winding number {:.4f}", winding));
    return static_cast<int>(rounded);
}

Eigen::MatrixXd rotating_frame_jacobian(const PhysicalParams& p, const DiscretizedEnsemble& ens,
                                        const LimitCycleSolution& sol) {
    const std::size_t m = ens.size();
    std::vector<double> omega(m), px(m), py(m), pz(m);
    for (std::size_t i = 0; i < m; ++i) {
        const ProfilePoint pp = profile_at(sol, p, ens.freqs[i]);
        omega[i] = ens.freqs[i] - sol.omega_s;
        px[i] = pp.pt.real();
        py[i] = pp.pt.imag();
        pz[i] = pp.pz;
    }
    const auto fb = detail::feedback(px.data(), py.data(), ens.weights.data(), m, p.alpha, FeedbackNoise{});
    const std::size_t n = 3 * m;
    Eigen::MatrixXd jac(n, n);
    std::vector<double> u(n, 0.0), du(n);
    for (std::size_t col = 0; col < n; ++col) {
        u[col] = 1.0;
        detail::tangent_rates(omega.data(), ens.weights.data(), m, p.t1, p.t2, fb, px.data(), py.data(), pz.data(),
                              u.data(), u.data() + m, u.data() + 2 * m, du.data(), du.data() + m,
                              du.data() + 2 * m);
        for (std::size_t row = 0; row < n; ++row) jac(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = du[row];
        u[col] = 0.0;
    }
    return jac;
}

StabilityVerdict limit_cycle_stable(const PhysicalParams& p, const FrequencyDistribution& dist,
                                    const LimitCycleSolution& sol, const StabilityOptions& opts) {
    StabilityVerdict v;
    v.method = opts.method;
    const QuadratureRule rule = integration_rule(dist, opts.nodes_per_branch);
    const double rate = 1.0 / p.t2;
    v.zero_mode_residual =
        std::abs(characteristic(cdouble(0.0, 0.0), p, rule, sol)) / std::abs(characteristic(cdouble(rate, 0.0), p, rule, sol));
    v.leading_beta = cdouble(kNaN, kNaN);

    if (opts.method != StabilityMethod::jacobian) {
        const int count = count_unstable_roots(p, rule, sol, opts.contour_offset * rate);
        v.unstable_root_count = count;
        v.characteristic_stable = (count == 0);
    }

    if (opts.method != StabilityMethod::characteristic) {
        const DiscretizedEnsemble ens = discretize(dist, opts.jacobian_nodes);
        const LimitCycleSolution dsol = discrete_limit_cycle(p, ens, dist);
        const Eigen::MatrixXd jac = rotating_frame_jacobian(p, ens, dsol);
        Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, false);
        if (solver.info() != Eigen::Success) throw ConvergenceError("Jacobian eigensolver failed");
        std::vector<cdouble> eig(solver.eigenvalues().begin(), solver.eigenvalues().end());
        const auto nearest =
            std::min_element(eig.begin(), eig.end(), [](cdouble a, cdouble b) { return std::abs(a) < std::abs(b); });
        v.jacobian_zero_mode = *nearest;
        if (std::abs(*nearest) < opts.zero_mode_radius * rate) {
            eig.erase(nearest);
        } else {
            v.diagnostics += fmt::format("phase mode missing: smallest |eigenvalue| = {:.3g} 1/s; ",
                                         std::abs(*nearest));
        }
        const auto lead =
            std::max_element(eig.begin(), eig.end(), [](cdouble a, cdouble b) { return a.real() < b.real(); });
        v.leading_beta = *lead;
        v.jacobian_stable = lead->real() < 0.0;
    }

    if (opts.method == StabilityMethod::characteristic) {
        // Seed Newton from the minima of |D| along a line just right of the axis.
        double best = -std::numeric_limits<double>::infinity();
        const double c = rate + p.alpha + support_width(rule);
        constexpr int kSeeds = 400;
        std::vector<double> mags(kSeeds);
        std::vector<cdouble> betas(kSeeds);
        for (int i = 0; i < kSeeds; ++i) {
            const double theta = -1.5 + 3.0 * i / (kSeeds - 1);
            betas[i] = cdouble(0.1 * rate, c * std::tan(theta));
            mags[i] = std::abs(deflated(betas[i], p, rule, sol));
        }
        for (int i = 1; i + 1 < kSeeds; ++i) {
            if (mags[i] <= mags[i - 1] && mags[i] <= mags[i + 1]) {
                const auto root = refine_root(betas[i], p, rule, sol);
                if (root && std::abs(*root) > opts.zero_mode_radius * rate && root->real() > best) {
                    best = root->real();
                    v.leading_beta = *root;
                }
            }
        }
        v.stable = *v.characteristic_stable;
    } else if (opts.method == StabilityMethod::jacobian) {
        v.stable = *v.jacobian_stable;
    } else {
        v.agreement = (*v.characteristic_stable == *v.jacobian_stable);
        v.stable = *v.jacobian_stable;
        if (!v.agreement)
            v.diagnostics += fmt::format(
                "methods disagree: characteristic counts {} unstable root(s), Jacobian leading eigenvalue "
                "{:.6g}{:+.6g}i 1/s; ",
                *v.unstable_root_count, v.leading_beta.real(), v.leading_beta.imag());
    }
    return v;
}

std::optional<NoSignalThreshold> no_signal_threshold(const PhysicalParams& p, const FrequencyDistribution& dist,
                                                     int nodes_per_branch) {
    const QuadratureRule rule = integration_rule(dist, nodes_per_branch);
    // Response of the uncoupled ensemble at beta = 0 in the frame rotating at w:
    // I(w) = sum rho / (1/T2 + i (omega - w)).
    auto response = [&](double w) {
        return rule.integrate([&](double omega) { return 1.0 / cdouble(1.0 / p.t2, omega - w); });
    };
    const auto [lo, hi] = dist.support();
    std::vector<double> roots;
    if (hi - lo <= 0.0) {
        roots.push_back(lo);
    } else {
        constexpr int kScan = 2000;
        const double pad = 1e-9 * (hi - lo);
        double prev_w = lo - pad;
        double prev = response(prev_w).imag();
        for (int i = 1; i <= kScan; ++i) {
            const double w = lo - pad + (hi - lo + 2 * pad) * i / kScan;
            const double cur = response(w).imag();
            if (cur == 0.0) {
                roots.push_back(w);
            } else if ((cur > 0.0) != (prev > 0.0) && prev != 0.0) {
                double a = prev_w, b = w, fa = prev;
                for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
                    const double mid = 0.5 * (a + b);
                    const double fm = response(mid).imag();
                    if ((fm > 0.0) == (fa > 0.0)) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push_back(0.5 * (a + b));
            }
            prev_w = w;
            prev = cur;
        }
    }
    std::optional<NoSignalThreshold> best;
    for (double w : roots) {
        const double re = response(w).real();
        if (!(re > 0.0)) continue;
        const double alpha = 1.0 / (p.p0 * re);
        if (!best || alpha < best->alpha) best = NoSignalThreshold{alpha, w};
    }
    return best;
}

double uniform_no_signal_threshold(const PhysicalParams& p, double width) {
    if (width <= 0.0) return p.critical_alpha();
    return width / (2.0 * p.p0 * std::atan(width * p.t2 / 2.0));
}

}  // namespace maserlab
