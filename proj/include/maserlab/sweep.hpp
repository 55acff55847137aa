#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "maserlab/analysis.hpp"

namespace maserlab {

enum class SweepDistKind { uniform, root, dirac_comb };

[[nodiscard]] std::string to_string(SweepDistKind kind);
[[nodiscard]] std::optional<SweepDistKind> sweep_dist_kind_from_string(const std::string& name);

struct SweepGrid {
    std::vector<double> alpha_ratios;  // alpha / alpha_c, ascending
    std::vector<double> eps_t2;        // width * T2, ascending
    SweepDistKind dist_kind = SweepDistKind::uniform;
    int comb_lines = 5;  // dirac_comb: equal-weight lines spread over the width

    void validate() const;
    [[nodiscard]] std::size_t size() const { return alpha_ratios.size() * eps_t2.size(); }

    /// n points from lo to hi inclusive on each axis.
    [[nodiscard]] static SweepGrid linear(double alpha_lo, double alpha_hi, int n_alpha, double eps_lo,
                                          double eps_hi, int n_eps, SweepDistKind kind = SweepDistKind::uniform);
};

/// Distribution of one grid column centred on center_omega.
[[nodiscard]] FrequencyDistribution sweep_distribution(const SweepGrid& grid, double eps_t2,
                                                       const PhysicalParams& params, double center_omega);

struct AnalyticOverlay {
    double alpha_threshold_ratio = 0.0;  // no-signal threshold / alpha_c
    bool above_threshold = false;
    bool lc_converged = false;
    std::optional<double> lc_omega_s;  // rad/s
    std::optional<double> lc_amp;
    std::optional<bool> lc_stable;     // characteristic-equation verdict
};

struct SweepCell {
    int i = 0;  // alpha index
    int j = 0;  // eps index
    double alpha_ratio = 0.0;
    double eps_t2 = 0.0;
    std::optional<PhaseLabel> label;
    std::optional<double> omega_s;  // rad/s, limit-cycle cells
    double lambda = 0.0;
    double lambda_error = 0.0;
    AnalyticOverlay analytic;
    double runtime = 0.0;  // s
    std::string error;     // set when the cell failed

    [[nodiscard]] bool ok() const { return label.has_value(); }
};

/// JSON-lines persistence of cells.
[[nodiscard]] std::string cell_to_json(const SweepCell& cell);
[[nodiscard]] SweepCell cell_from_json(const std::string& line);

/// Cells found in a JSONL file; a truncated final line is ignored.
[[nodiscard]] std::vector<SweepCell> load_cells(const std::filesystem::path& path);

struct SweepOptions {
    AnalysisConfig analysis;
    /// Integrate each cell in the frame rotating at the distribution mean
    /// with analysis.integration.dt (see IntegrationConfig::rotating).
    bool rotating_frame = true;
    double center_hz = kDefaultCenterHz;
    std::uint64_t seed = 1;
    int threads = 1;
    bool analytic = true;
    std::optional<std::filesystem::path> cells_path;  // JSONL sink, appended
    bool resume = true;
    std::function<void(const SweepCell&)> on_cell;    // progress callback
};

/// Default analysis settings for sweeps: rotating frame, dt = 5 ms.
[[nodiscard]] SweepOptions default_sweep_options();

/// Runs every cell not already present in the sink; returns all cells of
/// the grid ordered by (i, j).
[[nodiscard]] std::vector<SweepCell> run_sweep(const SweepGrid& grid, const PhysicalParams& params,
                                               const SweepOptions& opts);

/// Computes one cell (no persistence).
[[nodiscard]] SweepCell compute_cell(const SweepGrid& grid, int i, int j, const PhysicalParams& params,
                                     const SweepOptions& opts);

struct BoundaryPoint {
    double alpha_ratio = 0.0;
    double eps_t2 = 0.0;
};

struct Boundary {
    std::string name;  // "NoSignal|LimitCycle", "analytic:no_signal", ...
    std::vector<std::vector<BoundaryPoint>> polylines;
    bool uncertain = false;  // touches a failed or missing cell
};

/// Marching squares on each pair of labels, plus the analytic no-signal
/// curve and the limit-cycle stability change sampled on the eps grid.
[[nodiscard]] std::vector<Boundary> extract_boundaries(const SweepGrid& grid, const std::vector<SweepCell>& cells,
                                                       const PhysicalParams& params, double center_omega,
                                                       bool analytic = true);

void write_boundaries_csv(std::ostream& os, const std::vector<Boundary>& boundaries);

/// Label-coloured raster (limit cycles shaded by omega_s) with boundaries.
void write_diagram_svg(std::ostream& os, const SweepGrid& grid, const std::vector<SweepCell>& cells,
                       const std::vector<Boundary>& boundaries);

}  // namespace maserlab
