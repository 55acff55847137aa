#pragma once

// Inner loops shared by the integrator, the tangent propagation and the
// stability Jacobian. Arrays are structure-of-arrays of length m.

#include <cstddef>

#include "maserlab/integrator.hpp"

namespace maserlab::detail {

struct Feedback {
    double fx;      // effective feedback on the x channel: (alpha + gain) avg_x + field_x
    double fy;
    double gain;    // alpha + gain noise
};

inline Feedback feedback(const double* __restrict px, const double* __restrict py, const double* __restrict w, std::size_t m, double alpha,
                         const FeedbackNoise& noise) {
    double ax = 0.0;
    double ay = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        ax += w[i] * px[i];
        ay += w[i] * py[i];
    }
    const double g = alpha + noise.gain;
    return {g * ax + noise.field_x, g * ay + noise.field_y, g};
}

inline void bloch_rates(const double* __restrict omega, std::size_t m, double t1, double t2, double p0,
                        const Feedback& fb, const double* __restrict px, const double* __restrict py,
                        const double* __restrict pz, double* __restrict dx, double* __restrict dy,
                        double* __restrict dz) {
    const double r1 = 1.0 / t1;
    const double r2 = 1.0 / t2;
    for (std::size_t i = 0; i < m; ++i) {
        dx[i] = omega[i] * py[i] + fb.fx * pz[i] - r2 * px[i];
        dy[i] = -omega[i] * px[i] + fb.fy * pz[i] - r2 * py[i];
        dz[i] = -(fb.fx * px[i] + fb.fy * py[i]) - r1 * (pz[i] - p0);
    }
}

/// Directional derivative of bloch_rates at (px, py, pz) along (u, v, s).
/// The perturbation of the mean field enters through gain * sum w (u, v).
inline void tangent_rates(const double* __restrict omega, const double* __restrict w, std::size_t m, double t1,
                          double t2, const Feedback& fb, const double* __restrict px, const double* __restrict py,
                          const double* __restrict pz, const double* __restrict u, const double* __restrict v,
                          const double* __restrict s, double* __restrict du, double* __restrict dv,
                          double* __restrict ds) {
    double dax = 0.0;
    double day = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        dax += w[i] * u[i];
        day += w[i] * v[i];
    }
    const double dfx = fb.gain * dax;
    const double dfy = fb.gain * day;
    const double r1 = 1.0 / t1;
    const double r2 = 1.0 / t2;
    for (std::size_t i = 0; i < m; ++i) {
        du[i] = omega[i] * v[i] + dfx * pz[i] + fb.fx * s[i] - r2 * u[i];
        dv[i] = -omega[i] * u[i] + dfy * pz[i] + fb.fy * s[i] - r2 * v[i];
        ds[i] = -(dfx * px[i] + fb.fx * u[i] + dfy * py[i] + fb.fy * v[i]) - r1 * s[i];
    }
}

}  // namespace maserlab::detail
