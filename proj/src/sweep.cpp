#include "maserlab/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>

#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "maserlab/json_io.hpp"
#include "maserlab/parallel.hpp"
#include "maserlab/stability.hpp"

namespace maserlab {

using nlohmann::json;

std::string to_string(SweepDistKind kind) {
    switch (kind) {
        case SweepDistKind::uniform: return "uniform";
        case SweepDistKind::root: return "root";
        case SweepDistKind::dirac_comb: return "dirac_comb";
    }
    return "?";
}

std::optional<SweepDistKind> sweep_dist_kind_from_string(const std::string& name) {
    for (auto k : {SweepDistKind::uniform, SweepDistKind::root, SweepDistKind::dirac_comb})
        if (to_string(k) == name) return k;
    return std::nullopt;
}

void SweepGrid::validate() const {
    auto check = [](const std::vector<double>& v, const char* name, bool positive) {
        if (v.empty()) throw InvalidArgument(fmt::format("grid: {} is empty", name));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]) || (positive ? !(v[i] > 0.0) : !(v[i] >= 0.0)))
                throw InvalidArgument(fmt::format("grid: {}[{}] = {} out of range", name, i, v[i]));
            if (i > 0 && !(v[i] > v[i - 1]))
                throw InvalidArgument(fmt::format("grid: {} must be strictly ascending", name));
        }
    };
    check(alpha_ratios, "alpha_ratios", false);
    check(eps_t2, "eps_t2", true);
    if (comb_lines < 1) throw InvalidArgument("grid: comb_lines must be >= 1");
}

SweepGrid SweepGrid::linear(double alpha_lo, double alpha_hi, int n_alpha, double eps_lo, double eps_hi, int n_eps,
                            SweepDistKind kind) {
    auto axis = [](double lo, double hi, int n) {
        if (n < 1) throw InvalidArgument("grid: axis needs at least one point");
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
        return v;
    };
    SweepGrid g;
    g.alpha_ratios = axis(alpha_lo, alpha_hi, n_alpha);
    g.eps_t2 = axis(eps_lo, eps_hi, n_eps);
    g.dist_kind = kind;
    g.validate();
    return g;
}

FrequencyDistribution sweep_distribution(const SweepGrid& grid, double eps_t2, const PhysicalParams& params,
                                         double center_omega) {
    const double width = eps_t2 / params.t2;
    switch (grid.dist_kind) {
        case SweepDistKind::uniform: return Uniform{center_omega, width};
        case SweepDistKind::root: return Root{center_omega, width};
        case SweepDistKind::dirac_comb: {
            const int n = grid.comb_lines;
            if (n == 1) return FrequencyDistribution::single(center_omega);
            DiracComb comb;
            for (int k = 0; k < n; ++k) {
                comb.freqs.push_back(center_omega - 0.5 * width + width * k / (n - 1));
                comb.weights.push_back(1.0 / n);
            }
            return comb;
        }
    }
    throw InvalidArgument("grid: unknown distribution kind");
}

// ---------------------------------------------------------------------------
// Persistence

std::string cell_to_json(const SweepCell& c) {
    const auto& a = c.analytic;
    auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    json j{{"i", c.i},
           {"j", c.j},
           {"alpha_ratio", c.alpha_ratio},
           {"eps_t2", c.eps_t2},
           {"label", c.label ? to_json(*c.label) : json(nullptr)},
           {"omega_s", opt(c.omega_s)},
           {"lambda", c.lambda},
           {"lambda_error", c.lambda_error},
           {"analytic",
            {{"alpha_threshold_ratio", a.alpha_threshold_ratio},
             {"above_threshold", a.above_threshold},
             {"lc_converged", a.lc_converged},
             {"lc_omega_s", opt(a.lc_omega_s)},
             {"lc_amp", opt(a.lc_amp)},
             {"lc_stable", opt(a.lc_stable)}}},
           {"runtime", c.runtime},
           {"error", c.error}};
    return j.dump();
}

SweepCell cell_from_json(const std::string& line) {
    const json j = json::parse(line);
    SweepCell c;
    c.i = j.at("i").get<int>();
    c.j = j.at("j").get<int>();
    c.alpha_ratio = j.at("alpha_ratio").get<double>();
    c.eps_t2 = j.at("eps_t2").get<double>();
    if (!j.at("label").is_null()) c.label = label_from_json(j.at("label"));
    if (!j.at("omega_s").is_null()) c.omega_s = j.at("omega_s").get<double>();
    c.lambda = j.value("lambda", 0.0);
    c.lambda_error = j.value("lambda_error", 0.0);
    if (j.contains("analytic")) {
        const auto& v = j.at("analytic");
        auto& a = c.analytic;
        a.alpha_threshold_ratio = v.value("alpha_threshold_ratio", 0.0);
        a.above_threshold = v.value("above_threshold", false);
        a.lc_converged = v.value("lc_converged", false);
        if (v.contains("lc_omega_s") && !v.at("lc_omega_s").is_null()) a.lc_omega_s = v.at("lc_omega_s").get<double>();
        if (v.contains("lc_amp") && !v.at("lc_amp").is_null()) a.lc_amp = v.at("lc_amp").get<double>();
        if (v.contains("lc_stable") && !v.at("lc_stable").is_null()) a.lc_stable = v.at("lc_stable").get<bool>();
    }
    c.runtime = j.value("runtime", 0.0);
    c.error = j.value("error", std::string{});
    return c;
}

std::vector<SweepCell> load_cells(const std::filesystem::path& path) {
    std::vector<SweepCell> cells;
    std::ifstream in(path);
    if (!in) return cells;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            cells.push_back(cell_from_json(line));
        } catch (const json::exception&) {
            // An interrupted write leaves a partial last line; it is recomputed.
        }
    }
    return cells;
}

namespace {

class CellSink {
public:
    CellSink(const std::filesystem::path& path, bool append) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        file_ = std::fopen(path.c_str(), append ? "a" : "w");
        if (!file_) throw Error(fmt::format("sweep: cannot open {}", path.string()));
    }
    CellSink(const CellSink&) = delete;
    CellSink& operator=(const CellSink&) = delete;
    ~CellSink() {
        if (file_) std::fclose(file_);
    }

    void write(const SweepCell& cell) {
        const std::string line = cell_to_json(cell) + "\n";
        std::lock_guard lock(mutex_);
        if (std::fputs(line.c_str(), file_) < 0 || std::fflush(file_) != 0)
            throw Error("sweep: failed to append to the cells file");
        ::fsync(::fileno(file_));
    }

private:
    std::FILE* file_ = nullptr;
    std::mutex mutex_;
};

bool same_value(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

std::optional<bool> lc_verdict(const PhysicalParams& params, const FrequencyDistribution& dist,
                               std::optional<LimitCycleSolution>* solution = nullptr) {
    std::optional<LimitCycleSolution> sol;
    try {
        sol = solve_limit_cycle(params, dist);
    } catch (const ConvergenceError&) {
        return std::nullopt;
    }
    if (solution) *solution = sol;
    if (!sol || !(sol->amp2 > 0.0)) return std::nullopt;
    StabilityOptions so;
    so.method = StabilityMethod::characteristic;
    return limit_cycle_stable(params, dist, *sol, so).stable;
}

double threshold_ratio(const SweepGrid& grid, const PhysicalParams& params, const FrequencyDistribution& dist,
                       double eps_t2) {
    if (grid.dist_kind == SweepDistKind::uniform)
        return uniform_no_signal_threshold(params, eps_t2 / params.t2) / params.critical_alpha();
    const auto th = no_signal_threshold(params, dist);
    return th ? th->alpha / params.critical_alpha() : INFINITY;
}

}  // namespace

SweepOptions default_sweep_options() {
    SweepOptions o;
    o.analysis.integration = IntegrationConfig::rotating(hz_to_rad(kDefaultCenterHz));
    return o;
}

SweepCell compute_cell(const SweepGrid& grid, int i, int j, const PhysicalParams& base, const SweepOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepCell cell;
    cell.i = i;
    cell.j = j;
    cell.alpha_ratio = grid.alpha_ratios.at(static_cast<std::size_t>(i));
    cell.eps_t2 = grid.eps_t2.at(static_cast<std::size_t>(j));
    const PhysicalParams params = base.with_alpha_ratio(cell.alpha_ratio);
    const double center = hz_to_rad(opts.center_hz);
    try {
        const auto dist = sweep_distribution(grid, cell.eps_t2, params, center);
        AnalysisConfig cfg = opts.analysis;
        if (opts.rotating_frame) cfg.integration.rotating_frame = dist.mean();
        cfg.integration.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
        const auto result = analyze_point(params, dist, cfg);
        cell.label = result.label;
        cell.omega_s = result.label.omega_s;
        cell.lambda = result.lyapunov.lambda;
        cell.lambda_error = result.lyapunov.std_error;

        if (opts.analytic) {
            auto& a = cell.analytic;
            a.alpha_threshold_ratio = threshold_ratio(grid, params, dist, cell.eps_t2);
            a.above_threshold = cell.alpha_ratio > a.alpha_threshold_ratio;
            std::optional<LimitCycleSolution> sol;
            a.lc_stable = lc_verdict(params, dist, &sol);
            if (sol && sol->amp2 > 0.0) {
                a.lc_converged = true;
                a.lc_omega_s = sol->omega_s;
                a.lc_amp = sol->amplitude();
            }
        }
    } catch (const Error& e) {
        cell.label.reset();
        cell.error = e.what();
    }
    cell.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return cell;
}

std::vector<SweepCell> run_sweep(const SweepGrid& grid, const PhysicalParams& params, const SweepOptions& opts) {
    grid.validate();
    params.validate();
    const std::size_t na = grid.alpha_ratios.size();
    const std::size_t ne = grid.eps_t2.size();
    std::vector<std::optional<SweepCell>> slots(na * ne);

    std::unique_ptr<CellSink> sink;
    if (opts.cells_path) {
        if (opts.resume) {
            for (auto& c : load_cells(*opts.cells_path)) {
                if (c.i < 0 || c.j < 0 || static_cast<std::size_t>(c.i) >= na || static_cast<std::size_t>(c.j) >= ne)
                    continue;
                if (!same_value(c.alpha_ratio, grid.alpha_ratios[c.i]) || !same_value(c.eps_t2, grid.eps_t2[c.j]))
                    continue;
                slots[c.i * ne + c.j] = std::move(c);
            }
        }
        sink = std::make_unique<CellSink>(*opts.cells_path, opts.resume);
    }

    std::vector<std::size_t> pending;
    for (std::size_t k = 0; k < slots.size(); ++k)
        if (!slots[k]) pending.push_back(k);

    std::mutex done_mutex;
    parallel_for(pending.size(), opts.threads, [&](std::size_t n) {
        const std::size_t k = pending[n];
        SweepCell cell = compute_cell(grid, static_cast<int>(k / ne), static_cast<int>(k % ne), params, opts);
        if (sink) sink->write(cell);
        std::lock_guard lock(done_mutex);
        slots[k] = cell;
        if (opts.on_cell) opts.on_cell(cell);
    });

    std::vector<SweepCell> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

// ---------------------------------------------------------------------------
// Boundaries

namespace {

using Segment = std::array<BoundaryPoint, 2>;

std::vector<std::vector<BoundaryPoint>> chain(const std::vector<Segment>& segments) {
    auto key = [](const BoundaryPoint& p) {
        return std::make_pair(std::llround(p.alpha_ratio * 1e9), std::llround(p.eps_t2 * 1e9));
    };
    std::multimap<std::pair<long long, long long>, std::size_t> at;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        at.emplace(key(segments[s][0]), s);
        at.emplace(key(segments[s][1]), s);
    }
    std::vector<bool> used(segments.size(), false);
    auto take_next = [&](const BoundaryPoint& end) -> std::optional<BoundaryPoint> {
        auto [lo, hi] = at.equal_range(key(end));
        for (auto it = lo; it != hi; ++it) {
            const std::size_t s = it->second;
            if (used[s]) continue;
            used[s] = true;
            return key(segments[s][0]) == key(end) ? segments[s][1] : segments[s][0];
        }
        return std::nullopt;
    };
    std::vector<std::vector<BoundaryPoint>> lines;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        used[s] = true;
        std::vector<BoundaryPoint> line{segments[s][0], segments[s][1]};
        while (auto p = take_next(line.back())) line.push_back(*p);
        while (auto p = take_next(line.front())) line.insert(line.begin(), *p);
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace

std::vector<Boundary> extract_boundaries(const SweepGrid& grid, const std::vector<SweepCell>& cells,
                                         const PhysicalParams& base, double center_omega, bool analytic) {
    grid.validate();
    const std::size_t na = grid.alpha_ratios.size();
    const std::size_t ne = grid.eps_t2.size();
    std::vector<std::optional<Phase>> label(na * ne);
    for (const auto& c : cells) {
        if (c.i < 0 || c.j < 0 || static_cast<std::size_t>(c.i) >= na || static_cast<std::size_t>(c.j) >= ne) continue;
        if (c.label) label[c.i * ne + c.j] = c.label->kind;
    }
    auto node = [&](std::size_t i, std::size_t j) {
        return BoundaryPoint{grid.alpha_ratios[i], grid.eps_t2[j]};
    };
    auto mid = [](const BoundaryPoint& a, const BoundaryPoint& b) {
        return BoundaryPoint{0.5 * (a.alpha_ratio + b.alpha_ratio), 0.5 * (a.eps_t2 + b.eps_t2)};
    };

    std::vector<Boundary> out;
    const std::array<Phase, 4> phases{Phase::no_signal, Phase::limit_cycle, Phase::quasi_periodic, Phase::chaos};
    for (std::size_t pa = 0; pa < phases.size(); ++pa) {
        for (std::size_t pb = pa + 1; pb < phases.size(); ++pb) {
            const Phase A = phases[pa];
            const Phase B = phases[pb];
            std::vector<Segment> segments;
            bool uncertain = false;
            for (std::size_t i = 0; i + 1 < na; ++i) {
                for (std::size_t j = 0; j + 1 < ne; ++j) {
                    // Corners counter-clockwise: (i,j), (i,j+1), (i+1,j+1), (i+1,j).
                    const std::array<std::pair<std::size_t, std::size_t>, 4> corner{
                        {{i, j}, {i, j + 1}, {i + 1, j + 1}, {i + 1, j}}};
                    std::array<int, 4> v{};
                    bool has_a = false;
                    bool has_b = false;
                    bool usable = true;
                    bool hole = false;
                    for (int c = 0; c < 4; ++c) {
                        const auto& l = label[corner[c].first * ne + corner[c].second];
                        if (!l) {
                            hole = true;
                            usable = false;
                        } else if (*l == A) {
                            v[c] = 1;
                            has_a = true;
                        } else if (*l == B) {
                            v[c] = -1;
                            has_b = true;
                        } else {
                            usable = false;
                        }
                    }
                    if (hole && (has_a || has_b)) uncertain = true;
                    if (!usable || !has_a || !has_b) continue;
                    std::vector<BoundaryPoint> crossings;
                    for (int c = 0; c < 4; ++c) {
                        const int d = (c + 1) % 4;
                        if (v[c] != v[d])
                            crossings.push_back(mid(node(corner[c].first, corner[c].second),
                                                    node(corner[d].first, corner[d].second)));
                    }
                    if (crossings.size() == 2) {
                        segments.push_back({crossings[0], crossings[1]});
                    } else if (crossings.size() == 4) {
                        // Saddle: the centre takes the label of corner 0; pair so
                        // that corner 0's region stays connected through the middle.
                        const bool joined = v[0] + v[1] + v[2] + v[3] >= 0 ? v[0] > 0 : v[0] < 0;
                        if (joined) {
                            segments.push_back({crossings[0], crossings[3]});
                            segments.push_back({crossings[1], crossings[2]});
                        } else {
                            segments.push_back({crossings[0], crossings[1]});
                            segments.push_back({crossings[2], crossings[3]});
                        }
                    }
                }
            }
            if (segments.empty()) continue;
            out.push_back({to_string(A) + "|" + to_string(B), chain(segments), uncertain});
        }
    }

    if (!analytic) return out;

    Boundary ns{"analytic:no_signal", {{}}, false};
    for (double e : grid.eps_t2) {
        const PhysicalParams p = base.with_alpha_ratio(1.0);
        const auto dist = sweep_distribution(grid, e, p, center_omega);
        double r = INFINITY;
        try {
            r = threshold_ratio(grid, p, dist, e);
        } catch (const Error&) {
            ns.uncertain = true;
        }
        if (std::isfinite(r)) ns.polylines.front().push_back({r, e});
    }
    if (!ns.polylines.front().empty()) out.push_back(std::move(ns));

    // Limit-cycle stability changes: bracket on the alpha grid, then bisect.
    std::vector<std::optional<bool>> stable(na * ne);
    for (const auto& c : cells)
        if (c.label && c.i >= 0 && c.j >= 0 && static_cast<std::size_t>(c.i) < na && static_cast<std::size_t>(c.j) < ne)
            stable[c.i * ne + c.j] = c.analytic.lc_stable;
    std::vector<std::vector<BoundaryPoint>> per_column(ne);
    for (std::size_t j = 0; j < ne; ++j) {
        for (std::size_t i = 0; i + 1 < na; ++i) {
            const auto& s0 = stable[i * ne + j];
            const auto& s1 = stable[(i + 1) * ne + j];
            if (!s0 || !s1 || *s0 == *s1) continue;
            double lo = grid.alpha_ratios[i];
            double hi = grid.alpha_ratios[i + 1];
            const bool lo_state = *s0;
            for (int it = 0; it < 8; ++it) {
                const double m = 0.5 * (lo + hi);
                const PhysicalParams p = base.with_alpha_ratio(m);
                const auto v = lc_verdict(p, sweep_distribution(grid, grid.eps_t2[j], p, center_omega));
                if (v && *v == lo_state)
                    lo = m;
                else
                    hi = m;
            }
            per_column[j].push_back({0.5 * (lo + hi), grid.eps_t2[j]});
        }
    }
    Boundary lc{"analytic:lc_stability", {}, false};
    for (std::size_t k = 0;; ++k) {
        std::vector<BoundaryPoint> line;
        for (std::size_t j = 0; j < ne; ++j)
            if (k < per_column[j].size()) line.push_back(per_column[j][k]);
        if (line.empty()) break;
        lc.polylines.push_back(std::move(line));
    }
    if (!lc.polylines.empty()) out.push_back(std::move(lc));
    return out;
}

void write_boundaries_csv(std::ostream& os, const std::vector<Boundary>& boundaries) {
    os << "boundary,polyline,alpha_ratio,eps_t2,uncertain\n";
    for (const auto& b : boundaries)
        for (std::size_t k = 0; k < b.polylines.size(); ++k)
            for (const auto& p : b.polylines[k])
                os << fmt::format("{},{},{:.10g},{:.10g},{}\n", b.name, k, p.alpha_ratio, p.eps_t2,
                                  b.uncertain ? 1 : 0);
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string phase_colour(Phase p) {
    switch (p) {
        case Phase::no_signal: return "#d9d9d9";
        case Phase::limit_cycle: return "#3b6fb6";
        case Phase::quasi_periodic: return "#f2a541";
        case Phase::chaos: return "#c0392b";
    }
    return "#ffffff";
}

std::string shade(const std::string& hex, double t) {
    // t in [0, 1]: 0 keeps the colour, 1 blends halfway to white.
    auto channel = [&](int k) { return std::stoi(hex.substr(1 + 2 * k, 2), nullptr, 16); };
    std::string out = "#";
    for (int k = 0; k < 3; ++k) {
        const int c = channel(k);
        out += fmt::format("{:02x}", static_cast<int>(std::lround(c + 0.5 * t * (255 - c))));
    }
    return out;
}

std::vector<double> cell_edges(const std::vector<double>& v) {
    std::vector<double> e(v.size() + 1);
    if (v.size() == 1) {
        e[0] = v[0] - 0.5;
        e[1] = v[0] + 0.5;
        return e;
    }
    for (std::size_t k = 1; k < v.size(); ++k) e[k] = 0.5 * (v[k - 1] + v[k]);
    e.front() = v.front() - (e[1] - v.front());
    e.back() = v.back() + (v.back() - e[v.size() - 1]);
    return e;
}

}  // namespace

void write_diagram_svg(std::ostream& os, const SweepGrid& grid, const std::vector<SweepCell>& cells,
                       const std::vector<Boundary>& boundaries) {
    const double W = 520.0;
    const double H = 520.0;
    const double left = 70.0;
    const double top = 30.0;
    const double legend = 170.0;
    const auto xe = cell_edges(grid.eps_t2);
    const auto ye = cell_edges(grid.alpha_ratios);
    const double x0 = xe.front();
    const double x1 = xe.back();
    const double y0 = ye.front();
    const double y1 = ye.back();
    auto X = [&](double e) { return left + (e - x0) / (x1 - x0) * W; };
    auto Y = [&](double a) { return top + H - (a - y0) / (y1 - y0) * H; };

    double wmin = INFINITY;
    double wmax = -INFINITY;
    for (const auto& c : cells)
        if (c.omega_s) {
            wmin = std::min(wmin, *c.omega_s);
            wmax = std::max(wmax, *c.omega_s);
        }

    os << fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        left + W + legend, top + H + 60);
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& c : cells) {
        if (c.i < 0 || c.j < 0 || static_cast<std::size_t>(c.i) >= grid.alpha_ratios.size() ||
            static_cast<std::size_t>(c.j) >= grid.eps_t2.size())
            continue;
        std::string fill = "#ffffff";
        if (c.label) {
            fill = phase_colour(c.label->kind);
            if (c.label->kind == Phase::limit_cycle && c.omega_s && wmax > wmin)
                fill = shade(fill, (wmax - *c.omega_s) / (wmax - wmin));
        }
        const double xa = X(xe[c.j]);
        const double xb = X(xe[c.j + 1]);
        const double ya = Y(ye[c.i + 1]);
        const double yb = Y(ye[c.i]);
        os << fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", xa, ya,
                          xb - xa, yb - ya, fill);
        if (!c.label)
            os << fmt::format("<path d=\"M{:.2f},{:.2f}L{:.2f},{:.2f}M{:.2f},{:.2f}L{:.2f},{:.2f}\" stroke=\"#555\"/>\n",
                              xa, ya, xb, yb, xa, yb, xb, ya);
    }
    for (const auto& b : boundaries) {
        const bool analytic_curve = b.name.rfind("analytic:", 0) == 0;
        const std::string style = analytic_curve ? "stroke=\"#000\" stroke-width=\"2\" stroke-dasharray=\"6,4\""
                                                 : "stroke=\"#000\" stroke-width=\"1.2\"";
        for (const auto& line : b.polylines) {
            if (line.empty()) continue;
            std::string pts;
            for (const auto& p : line) {
                if (p.alpha_ratio < y0 || p.alpha_ratio > y1) continue;
                pts += fmt::format("{:.2f},{:.2f} ", X(p.eps_t2), Y(p.alpha_ratio));
            }
            if (!pts.empty())
                os << fmt::format("<polyline points=\"{}\" fill=\"none\" {}/>\n", pts, style);
        }
    }
    os << fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#000\"/>\n",
                      left, top, W, H);
    for (double e : grid.eps_t2)
        os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"9\">{:.3g}</text>\n", X(e),
                          top + H + 14, e);
    for (double a : grid.alpha_ratios)
        os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"9\">{:.3g}</text>\n",
                          left - 4, Y(a) + 3, a);
    os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">eps T2</text>\n", left + W / 2,
                      top + H + 36);
    os << fmt::format("<text x=\"16\" y=\"{:.2f}\" transform=\"rotate(-90 16 {:.2f})\" text-anchor=\"middle\">"
                      "alpha / alpha_c</text>\n",
                      top + H / 2, top + H / 2);
    double ly = top + 10;
    for (Phase p : {Phase::no_signal, Phase::limit_cycle, Phase::quasi_periodic, Phase::chaos}) {
        os << fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"14\" height=\"14\" fill=\"{}\"/>\n", left + W + 16,
                          ly, phase_colour(p));
        os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", left + W + 36, ly + 11, to_string(p));
        ly += 22;
    }
    os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">dashed: analytic</text>\n", left + W + 16,
                      ly + 11);
    os << "</svg>\n";
}

}  // namespace maserlab
