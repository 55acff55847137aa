#pragma once

#include <json.hpp>

#include "maserlab/analysis.hpp"
#include "maserlab/limit_cycle.hpp"
#include "maserlab/stability.hpp"

namespace maserlab {

[[nodiscard]] nlohmann::json to_json(const PhaseLabel& label);
[[nodiscard]] PhaseLabel label_from_json(const nlohmann::json& j);

/// Summary without the running history.
[[nodiscard]] nlohmann::json to_json(const LyapunovResult& result);

/// omega_s_hz, amp, amp2, residuals, iterations, pinned, warnings.
[[nodiscard]] nlohmann::json to_json(const LimitCycleSolution& sol);

/// stable, leading_beta_re, leading_beta_im, method, zero_mode_residual, plus
/// per-route details.
[[nodiscard]] nlohmann::json to_json(const StabilityVerdict& verdict);

}  // namespace maserlab
