#include "maserlab/limit_cycle.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace maserlab {

namespace {

struct Integrals {
    double l = 0.0;        // sum w L
    double l_det = 0.0;    // sum w L (omega - omega_s) T2
    double l2 = 0.0;       // sum w L^2
};

Integrals integrals(const PhysicalParams& p, const QuadratureRule& rule, double omega_s, double amp2) {
    Integrals out;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double l = lorentz_weight(rule.nodes[k], omega_s, amp2, p);
        const double w = rule.weights[k];
        out.l += w * l;
        out.l_det += w * l * (rule.nodes[k] - omega_s) * p.t2;
        out.l2 += w * l * l;
    }
    return out;
}

/// Largest amp2 for which the amplitude residual can still be >= 0.
double amp2_ceiling(const PhysicalParams& p) { return 2.0 * p.p0 / (p.alpha * p.t1); }

/// Bisection root of the frequency condition at fixed amp2 over [lo, hi].
double solve_frequency(const PhysicalParams& p, const QuadratureRule& rule, double amp2, double lo, double hi) {
    double flo = self_consistency_residuals(p, rule, lo, amp2)[0];
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = self_consistency_residuals(p, rule, mid, amp2)[0];
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Safeguarded Newton on the amplitude condition at fixed omega_s.
double solve_amplitude(const PhysicalParams& p, const QuadratureRule& rule, double omega_s, double tol,
                       int& iterations) {
    const double k = p.alpha * p.p0 * p.t2 / p.t1;
    double lo = 0.0;
    double hi = amp2_ceiling(p);
    double s = 0.5 * hi;
    for (iterations = 1; iterations <= 200; ++iterations) {
        const Integrals in = integrals(p, rule, omega_s, s);
        const double g = k * in.l - 1.0;
        if (std::abs(g) < tol) return s;
        if (g > 0.0) lo = s; else hi = s;
        const double dg = -k * p.alpha * p.alpha * p.t2 * in.l2;
        double next = s - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-17) return next;
        s = next;
    }
    return s;
}

void scan_for_extra_roots(const PhysicalParams& p, const QuadratureRule& rule, LimitCycleSolution& sol) {
    const auto [lo_it, hi_it] = std::minmax_element(rule.nodes.begin(), rule.nodes.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi <= lo) return;
    constexpr int kScan = 400;
    int sign_changes = 0;
    double prev = self_consistency_residuals(p, rule, lo, sol.amp2)[0];
    for (int i = 1; i <= kScan; ++i) {
        const double w = lo + (hi - lo) * i / kScan;
        const double r = self_consistency_residuals(p, rule, w, sol.amp2)[0];
        if ((r > 0.0) != (prev > 0.0) && r != 0.0) ++sign_changes;
        if (r != 0.0) prev = r;
    }
    if (sign_changes > 1)
        sol.warnings.push_back(fmt::format(
            "frequency condition changes sign {} times across the support; reported root is the one reached "
            "from the initial guess",
            sign_changes));
}

}  // namespace

double LimitCycleSolution::amplitude() const { return std::sqrt(std::max(0.0, amp2)); }

double lorentz_weight(double omega, double omega_s, double amp2, const PhysicalParams& p) {
    const double d = (omega - omega_s) * p.t2;
    return 1.0 / ((1.0 + d * d) / p.t1 + p.alpha * p.alpha * p.t2 * amp2);
}

std::array<double, 2> self_consistency_residuals(const PhysicalParams& p, const QuadratureRule& rule,
                                                 double omega_s, double amp2) {
    const double k = p.alpha * p.p0 * p.t2 / p.t1;
    const Integrals in = integrals(p, rule, omega_s, amp2);
    return {k * in.l_det, k * in.l - 1.0};
}

std::optional<LimitCycleSolution> solve_limit_cycle(const PhysicalParams& params, const FrequencyDistribution& dist,
                                                    const LimitCycleOptions& opts) {
    return solve_limit_cycle(params, integration_rule(dist, opts.nodes_per_branch), dist.symmetry_center(),
                             dist.mean(), opts);
}

std::optional<LimitCycleSolution> solve_limit_cycle(const PhysicalParams& params, const QuadratureRule& rule,
                                                    std::optional<double> symmetry_center, double omega_guess,
                                                    const LimitCycleOptions& opts) {
    params.validate();
    if (!(params.alpha > 0.0)) throw InvalidArgument("solve_limit_cycle: alpha must be > 0");
    // With alpha <= alpha_c the amplitude residual is negative for every amp2 > 0.
    const double single = (params.alpha * params.p0 * params.t2 - 1.0) /
                          (params.alpha * params.alpha * params.t1 * params.t2);
    if (!(single > 0.0)) return std::nullopt;

    LimitCycleSolution sol;
    if (symmetry_center) {
        sol.omega_s = *symmetry_center;
        sol.pinned = true;
        if (self_consistency_residuals(params, rule, sol.omega_s, 0.0)[1] <= 0.0) return std::nullopt;
        sol.amp2 = solve_amplitude(params, rule, sol.omega_s, opts.tolerance, sol.iterations);
        sol.residuals = self_consistency_residuals(params, rule, sol.omega_s, sol.amp2);
        if (std::abs(sol.residuals[1]) > 1e3 * opts.tolerance)
            throw ConvergenceError(
                fmt::format("limit cycle: amplitude residual {:.3g} did not converge", sol.residuals[1]));
        return sol;
    }

    // Damped Newton on (omega_s T2, amp2) with a central-difference Jacobian.
    const double t2 = params.t2;
    double x0 = omega_guess * t2;
    double x1 = single;
    auto residual = [&](double a, double b) { return self_consistency_residuals(params, rule, a / t2, b); };
    auto norm = [](const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); };
    std::array<double, 2> r = residual(x0, x1);
    bool converged = false;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        if (norm(r) < opts.tolerance) {
            converged = true;
            break;
        }
        const double h0 = 1e-6;
        const double h1 = 1e-6 * std::max(x1, 1e-8);
        const auto r0p = residual(x0 + h0, x1);
        const auto r0m = residual(x0 - h0, x1);
        const auto r1p = residual(x0, x1 + h1);
        const auto r1m = residual(x0, std::max(0.0, x1 - h1));
        const double j00 = (r0p[0] - r0m[0]) / (2 * h0);
        const double j10 = (r0p[1] - r0m[1]) / (2 * h0);
        const double j01 = (r1p[0] - r1m[0]) / (x1 + h1 - std::max(0.0, x1 - h1));
        const double j11 = (r1p[1] - r1m[1]) / (x1 + h1 - std::max(0.0, x1 - h1));
        const double det = j00 * j11 - j01 * j10;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
        const double d0 = -(j11 * r[0] - j01 * r[1]) / det;
        const double d1 = -(-j10 * r[0] + j00 * r[1]) / det;
        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, lambda *= 0.5) {
            const double n0 = x0 + lambda * d0;
            const double n1 = x1 + lambda * d1;
            if (!(n1 > 0.0)) continue;
            const auto rn = residual(n0, n1);
            if (norm(rn) < (1.0 - 1e-4 * lambda) * norm(r)) {
                x0 = n0;
                x1 = n1;
                r = rn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    if (converged) {
        sol.omega_s = x0 / t2;
        sol.amp2 = x1;
        sol.iterations = it;
    } else {
        // Nested bisection: frequency condition inside, amplitude outside.
        const auto [lo_it, hi_it] = std::minmax_element(rule.nodes.begin(), rule.nodes.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        auto reduced = [&](double s) {
            const double w = solve_frequency(params, rule, s, lo, hi);
            return std::pair{w, self_consistency_residuals(params, rule, w, s)[1]};
        };
        if (reduced(0.0).second <= 0.0) return std::nullopt;
        double a = 0.0;
        double b = amp2_ceiling(params);
        for (int i = 0; i < 200 && b - a > 1e-16; ++i) {
            const double mid = 0.5 * (a + b);
            if (reduced(mid).second > 0.0) a = mid; else b = mid;
        }
        sol.amp2 = 0.5 * (a + b);
        sol.omega_s = reduced(sol.amp2).first;
        sol.iterations = opts.max_iterations + 200;
        sol.warnings.push_back("Newton iteration did not converge; used nested bisection");
    }
    sol.residuals = self_consistency_residuals(params, rule, sol.omega_s, sol.amp2);
    if (!(sol.amp2 > 0.0)) return std::nullopt;
    if (norm(sol.residuals) > 1e3 * opts.tolerance)
        throw ConvergenceError(fmt::format("limit cycle: residuals ({:.3g}, {:.3g}) after {} iterations",
                                           sol.residuals[0], sol.residuals[1], sol.iterations));
    scan_for_extra_roots(params, rule, sol);
    return sol;
}

ProfilePoint profile_at(const LimitCycleSolution& sol, const PhysicalParams& p, double omega) {
    const double d = omega - sol.omega_s;
    const double l = lorentz_weight(omega, sol.omega_s, sol.amp2, p);
    ProfilePoint pt;
    pt.omega = omega;
    pt.pz = p.p0 * (1.0 + d * d * p.t2 * p.t2) * l / p.t1;
    pt.pt = p.alpha * pt.pz * sol.amplitude() / std::complex<double>(1.0 / p.t2, d);
    return pt;
}

std::vector<ProfilePoint> profile(const LimitCycleSolution& sol, const PhysicalParams& params,
                                  std::span<const double> omegas) {
    std::vector<ProfilePoint> out;
    out.reserve(omegas.size());
    for (double w : omegas) out.push_back(profile_at(sol, params, w));
    return out;
}

}  // namespace maserlab
