#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace maserlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when inputs violate a documented invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double hz_to_rad(double hz) { return kTwoPi * hz; }
inline double rad_to_hz(double rad_s) { return rad_s / kTwoPi; }

// Reference operating point of the 129Xe comagnetometer cell.
inline constexpr double kDefaultP0 = 0.392097;
inline constexpr double kDefaultT1 = 13.0699;  // s
inline constexpr double kDefaultT2 = 13.65;    // s
inline constexpr double kDefaultCenterHz = 8.85;

/// Relaxation times, pumped equilibrium polarization and feedback gain.
struct PhysicalParams {
    double t1 = kDefaultT1;
    double t2 = kDefaultT2;
    double p0 = kDefaultP0;
    double alpha = 0.0;  // rad/s

    /// Single-frequency maser threshold 1/(T2 P0).
    [[nodiscard]] double critical_alpha() const { return 1.0 / (t2 * p0); }

    [[nodiscard]] PhysicalParams with_alpha_ratio(double ratio) const {
        PhysicalParams p = *this;
        p.alpha = ratio * critical_alpha();
        return p;
    }

    void validate() const {
        if (!(t1 > 0.0)) throw InvalidArgument("t1 must be > 0");
        if (!(t2 > 0.0)) throw InvalidArgument("t2 must be > 0");
        if (!(p0 > 0.0 && p0 <= 1.0)) throw InvalidArgument("p0 must lie in (0, 1]");
        if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
    }
};

}  // namespace maserlab
