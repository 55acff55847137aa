#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "maserlab/config.hpp"
#include "maserlab/json_io.hpp"
#include "maserlab/robustness.hpp"
#include "maserlab/stability.hpp"
#include "maserlab/sweep.hpp"

#ifndef MASERLAB_VERSION
#define MASERLAB_VERSION "0.0.0"
#endif

namespace maserlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad command-line input detected after CLI11 parsing (exit 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<double> alpha_ratio;
    std::optional<double> eps_t2;
    std::optional<int> nodes;
    std::optional<double> t_end;
    std::optional<double> transient;
    std::optional<int> lyapunov_k;
    bool fast = false;
};

struct Specific {
    std::string input;
    std::string method = "both";
    std::string direction = "up";
    bool svg = false;
    std::optional<std::string> kind;
    std::vector<double> etas;
    std::optional<int> runs;
    std::optional<double> hold_dt;
    std::optional<std::string> grid;
    std::optional<std::string> dist_kind;
    bool no_resume = false;
};

struct Context {
    std::string command;
    RunConfig cfg;
    int threads = 1;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;

    [[nodiscard]] json metadata() const {
        return {{"version", MASERLAB_VERSION},
                {"command", command},
                {"seed", cfg.seed},
                {"config_hash", cfg.hash()},
                {"classifier", kClassifierVersion}};
    }

    [[nodiscard]] std::string header_line() const {
        return fmt::format("maserlab version={} command={} seed={} config_hash={}", MASERLAB_VERSION, command,
                           cfg.seed, cfg.hash());
    }

    [[nodiscard]] fs::path path(const std::string& name) const {
        fs::create_directories(cfg.output_dir);
        return cfg.output_dir / name;
    }
};

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error(fmt::format("cannot write {}", p.string()));
    return os;
}

void finish_out(std::ofstream& os, const fs::path& p) {
    os.flush();
    if (!os) throw Error(fmt::format("write failed: {}", p.string()));
}

void write_json_file(const Context& ctx, const fs::path& p, json body) {
    body["metadata"] = ctx.metadata();
    auto os = open_out(p);
    os << body.dump(2) << '\n';
    finish_out(os, p);
}

template <class Fn>
void write_csv_file(const Context& ctx, const fs::path& p, Fn&& rows) {
    auto os = open_out(p);
    os << "# " << ctx.header_line() << '\n';
    rows(os);
    finish_out(os, p);
}

// ---------------------------------------------------------------------------
// Configuration assembly: file, then flags on top, then one strict parse.

json load_document(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file {}", path));
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("$: invalid JSON in {} ({})", path, e.what()));
    }
}

json& section(json& doc, const char* key) {
    if (!doc.is_object()) throw ConfigError("$: expected an object");
    auto& s = doc[key];
    if (s.is_null()) s = json::object();
    if (!s.is_object()) throw ConfigError(fmt::format("$.{}: expected an object", key));
    return s;
}

std::vector<double> parse_axis(const std::string& text, const std::string& name) {
    // lo:hi:n
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw UsageError(fmt::format("--grid: {} axis must be lo:hi:n, got '{}'", name, text));
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    try {
        std::size_t used = 0;
        lo = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument("");
        hi = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("");
        n = std::stoi(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
        throw UsageError(fmt::format("--grid: cannot parse '{}'", text));
    }
    if (n < 1) throw UsageError("--grid: each axis needs at least one point");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
    return v;
}

RunConfig assemble(const Common& c, const Specific& s) {
    json doc = load_document(c.config_path);
    if (c.alpha_ratio) {
        auto& p = section(doc, "params");
        p.erase("alpha_rad_s");
        p["alpha_ratio"] = *c.alpha_ratio;
    }
    if (c.eps_t2) {
        auto& d = section(doc, "distribution");
        d.erase("width_hz");
        d["width_per_t2"] = *c.eps_t2;
    }
    if (c.nodes) section(doc, "integration")["nodes"] = *c.nodes;
    if (c.t_end) section(doc, "integration")["t_end_s"] = *c.t_end;
    if (c.fast) {
        auto& i = section(doc, "integration");
        i["frame"] = "rotating";
        i["dt_s"] = 5e-3;
        i["record_every"] = 1;
    }
    if (c.transient) section(doc, "analysis")["transient_s"] = *c.transient;
    if (c.lyapunov_k) section(doc, "analysis")["lyapunov_k"] = *c.lyapunov_k;
    if (s.kind) section(doc, "robustness")["kind"] = *s.kind;
    if (!s.etas.empty()) section(doc, "robustness")["etas"] = s.etas;
    if (s.runs) section(doc, "robustness")["runs"] = *s.runs;
    if (s.hold_dt) section(doc, "robustness")["hold_dt_s"] = *s.hold_dt;
    if (s.grid) {
        const auto comma = s.grid->find(',');
        if (comma == std::string::npos) throw UsageError("--grid: expected alpha_lo:alpha_hi:n,eps_lo:eps_hi:n");
        auto& w = section(doc, "sweep");
        w["alpha_ratios"] = parse_axis(s.grid->substr(0, comma), "alpha");
        w["eps_t2"] = parse_axis(s.grid->substr(comma + 1), "eps");
    }
    if (s.dist_kind) section(doc, "sweep")["dist_kind"] = *s.dist_kind;
    if (c.seed) doc["seed"] = *c.seed;
    if (c.out_dir) doc["output_dir"] = *c.out_dir;
    return parse_config(doc);
}

int resolve_thread_count(const std::optional<int>& flag) {
    if (flag) return resolve_threads(*flag);
    if (const char* env = std::getenv("MASERLAB_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 0 || v > 4096)
            throw UsageError(fmt::format("MASERLAB_THREADS must be a non-negative integer, got '{}'", env));
        return resolve_threads(static_cast<int>(v));
    }
    return resolve_threads(0);
}

// ---------------------------------------------------------------------------
// Shared pieces

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(fmt::format("cannot read {}", path));
    Trajectory traj;
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "t,Px,Py,Pz") throw Error(fmt::format("{}:{}: expected header t,Px,Py,Pz", path, lineno));
            header = true;
            continue;
        }
        double v[4];
        std::stringstream ss(line);
        std::string cell;
        int k = 0;
        for (; k < 4 && std::getline(ss, cell, ','); ++k) {
            char* end = nullptr;
            v[k] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') k = 5;
        }
        if (k != 4 || std::getline(ss, cell, ','))
            throw Error(fmt::format("{}:{}: expected four numeric columns", path, lineno));
        traj.times.push_back(v[0]);
        traj.avg.push_back({v[1], v[2], v[3]});
    }
    if (!header) throw Error(fmt::format("{}: no t,Px,Py,Pz header", path));
    if (traj.size() >= 2) traj.sample_dt = traj.times[1] - traj.times[0];
    return traj;
}

/// Post-transient window of spectrum_length samples.
Trajectory analysis_window(const RunConfig& cfg) {
    IntegrationConfig run = cfg.integration;
    run.t_end = cfg.analysis.transient + static_cast<double>(cfg.analysis.spectrum_length) * run.sample_dt();
    run.checkpoint_every = 0.0;
    return simulate(cfg.params, cfg.distribution_model(), run).window(cfg.analysis.transient);
}

Trajectory input_or_simulated(const Context& ctx, const std::string& input) {
    return input.empty() ? analysis_window(ctx.cfg) : read_trajectory_csv(input);
}

std::string svg_comment(const Context& ctx) { return fmt::format("<!-- {} -->\n", ctx.header_line()); }

struct Plot {
    double x0, x1, y0, y1;
    static constexpr double w = 640, h = 400, m = 50;

    [[nodiscard]] double px(double x) const { return m + (x - x0) / (x1 - x0) * (w - 2 * m); }
    [[nodiscard]] double py(double y) const { return h - m - (y - y0) / (y1 - y0) * (h - 2 * m); }

    void open(std::ostream& os, const std::string& xlabel, const std::string& ylabel) const {
        os << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
                          "font-family=\"sans-serif\" font-size=\"11\">\n",
                          w, h);
        os << fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", m, m,
                          w - 2 * m, h - 2 * m);
        os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", w / 2, h - 12, xlabel);
        os << fmt::format("<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">{}</text>\n",
                          h / 2, h / 2, ylabel);
        os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", m, h - m + 14, x0);
        os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n", w - m, h - m + 14, x1);
        os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n", m - 4, h - m, y0);
        os << fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n", m - 4, m + 4, y1);
    }
};

void write_spectrum_svg(std::ostream& os, const Context& ctx, const Spectrum& spec) {
    const auto peaks = find_peaks(spec, 0.05, 8);
    double lo = 0.0;
    double hi = spec.freqs.back();
    if (!peaks.empty()) {
        auto [mn, mx] = std::minmax_element(peaks.begin(), peaks.end(),
                                            [](const auto& a, const auto& b) { return a.freq < b.freq; });
        const double pad = std::max(0.5, 0.5 * (mx->freq - mn->freq));
        lo = std::max(0.0, mn->freq - pad);
        hi = std::min(spec.freqs.back(), mx->freq + pad);
    }
    double top = 0.0;
    for (std::size_t k = 0; k < spec.size(); ++k)
        if (spec.freqs[k] >= lo && spec.freqs[k] <= hi) top = std::max(top, spec.amps[k]);
    const Plot plot{lo, hi, 0.0, top > 0.0 ? 1.05 * top : 1.0};
    os << svg_comment(ctx);
    plot.open(os, "f (Hz)", "amplitude");
    os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < spec.size(); ++k)
        if (spec.freqs[k] >= lo && spec.freqs[k] <= hi)
            os << fmt::format("{:.2f},{:.2f} ", plot.px(spec.freqs[k]), plot.py(spec.amps[k]));
    os << "\"/>\n</svg>\n";
}

void write_section_svg(std::ostream& os, const Context& ctx, const PoincareSection& sec) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& p : sec.points) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    const double sx = std::max(1e-12, 0.05 * (x1 - x0));
    const double sy = std::max(1e-12, 0.05 * (y1 - y0));
    const Plot plot{x0 - sx, x1 + sx, y0 - sy, y1 + sy};
    os << svg_comment(ctx);
    plot.open(os, "Px", "Pz");
    for (const auto& p : sec.points)
        os << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.5\" fill=\"#9c1f4e\"/>\n", plot.px(p[0]),
                          plot.py(p[1]));
    os << "</svg>\n";
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spec) {
    os << "f_hz,amp\n";
    for (std::size_t k = 0; k < spec.size(); ++k) os << fmt::format("{:.17g},{:.17g}\n", spec.freqs[k], spec.amps[k]);
}

void write_section_csv(std::ostream& os, const PoincareSection& sec) {
    os << "Px,Pz\n";
    for (const auto& p : sec.points) os << fmt::format("{:.17g},{:.17g}\n", p[0], p[1]);
}

json peaks_json(const Spectrum& spec) {
    json arr = json::array();
    for (const auto& p : find_peaks(spec, 0.05, 8)) arr.push_back({{"f_hz", p.freq}, {"amp", p.amp}});
    return arr;
}

// ---------------------------------------------------------------------------
// Subcommands

int run_simulate(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Trajectory traj = simulate(cfg.params, cfg.distribution_model(), cfg.integration);
    const auto p = ctx.path("trajectory.csv");
    write_csv_file(ctx, p, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    *ctx.out << fmt::format("wrote {} ({} samples)\n", p.string(), traj.size());
    if (!traj.checkpoints.empty()) {
        json index = json::array();
        for (std::size_t k = 0; k < traj.checkpoints.size(); ++k) {
            const auto cp = ctx.path(fmt::format("checkpoint_{:04d}.bin", k));
            auto os = open_out(cp);
            write_checkpoint(os, traj.checkpoints[k]);
            finish_out(os, cp);
            index.push_back({{"file", cp.filename().string()}, {"t", traj.checkpoints[k].t}});
        }
        const auto ip = ctx.path("checkpoints.json");
        write_json_file(ctx, ip, {{"checkpoints", index}});
        *ctx.out << fmt::format("wrote {} checkpoints, index {}\n", traj.checkpoints.size(), ip.string());
    }
    return kExitOk;
}

std::optional<LimitCycleSolution> solve_or_report(const Context& ctx) {
    auto sol = solve_limit_cycle(ctx.cfg.params, ctx.cfg.distribution_model());
    if (!sol)
        *ctx.err << fmt::format("no limit cycle: alpha/alpha_c = {:.6g} is below the no-signal threshold\n",
                                ctx.cfg.alpha_ratio);
    return sol;
}

int run_limit_cycle(const Context& ctx) {
    const auto sol = solve_or_report(ctx);
    if (!sol) return kExitDomain;
    const auto dist = ctx.cfg.distribution_model();
    const auto ens = discretize(dist, ctx.cfg.integration.nodes);
    const auto prof = profile(*sol, ctx.cfg.params, ens.freqs);
    const auto pp = ctx.path("limit_cycle_profile.csv");
    write_csv_file(ctx, pp, [&](std::ostream& os) {
        os << "f_hz,pt_re,pt_im,pz\n";
        for (const auto& q : prof)
            os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", rad_to_hz(q.omega), q.pt.real(), q.pt.imag(),
                              q.pz);
    });
    json j = to_json(*sol);
    j["profile_csv_path"] = pp.string();
    const auto jp = ctx.path("limit_cycle.json");
    write_json_file(ctx, jp, j);
    *ctx.out << fmt::format("omega_s/2pi = {:.9f} Hz, |avg P_T| = {:.6g}; wrote {}\n", rad_to_hz(sol->omega_s),
                            sol->amplitude(), jp.string());
    return kExitOk;
}

int run_stability(const Context& ctx, const std::string& method) {
    StabilityOptions opts;
    if (method == "characteristic")
        opts.method = StabilityMethod::characteristic;
    else if (method == "jacobian")
        opts.method = StabilityMethod::jacobian;
    opts.jacobian_nodes = ctx.cfg.integration.nodes;
    const auto sol = solve_or_report(ctx);
    if (!sol) return kExitDomain;
    const auto verdict = limit_cycle_stable(ctx.cfg.params, ctx.cfg.distribution_model(), *sol, opts);
    const auto jp = ctx.path("stability.json");
    json j = to_json(verdict);
    write_json_file(ctx, jp, j);
    *ctx.out << j.dump() << '\n';
    return kExitOk;
}

int run_spectrum(const Context& ctx, const Specific& s) {
    const Trajectory traj = input_or_simulated(ctx, s.input);
    const std::size_t len = std::min(ctx.cfg.analysis.spectrum_length, traj.size());
    const Spectrum spec = spectrum(traj, len, true);
    const auto p = ctx.path("spectrum.csv");
    write_csv_file(ctx, p, [&](std::ostream& os) { write_spectrum_csv(os, spec); });
    if (s.svg) {
        const auto sp = ctx.path("spectrum.svg");
        auto os = open_out(sp);
        write_spectrum_svg(os, ctx, spec);
        finish_out(os, sp);
    }
    const auto peaks = find_peaks(spec, 0.05, 8);
    *ctx.out << fmt::format("{} bins at {:.6g} Hz resolution; wrote {}\n", spec.size(), spec.resolution, p.string());
    for (const auto& pk : peaks) *ctx.out << fmt::format("  peak {:.6f} Hz  amp {:.6g}\n", pk.freq, pk.amp);
    return kExitOk;
}

int run_poincare(const Context& ctx, const Specific& s) {
    const Trajectory traj = input_or_simulated(ctx, s.input);
    const auto dir = s.direction == "down" ? CrossingDirection::downward : CrossingDirection::upward;
    const PoincareSection sec = poincare(traj, dir);
    const auto p = ctx.path("section.csv");
    write_csv_file(ctx, p, [&](std::ostream& os) { write_section_csv(os, sec); });
    if (s.svg) {
        const auto sp = ctx.path("section.svg");
        auto os = open_out(sp);
        write_section_svg(os, ctx, sec);
        finish_out(os, sp);
    }
    const auto shape = section_shape(sec);
    *ctx.out << fmt::format("{} crossings, cluster radius {:.3g}, section statistic {:.3g}; wrote {}\n", sec.size(),
                            shape.cluster_radius, shape.zigzag, p.string());
    return kExitOk;
}

int run_lyapunov(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto res = lyapunov(cfg.params, cfg.distribution_model(), cfg.integration, cfg.analysis.lyapunov);
    const auto hp = ctx.path("lyapunov_history.csv");
    write_csv_file(ctx, hp, [&](std::ostream& os) {
        os << "k,t,lambda\n";
        for (std::size_t k = 0; k < res.history.size(); ++k)
            os << fmt::format("{},{:.17g},{:.17g}\n", k + 1, static_cast<double>(k + 1) * res.tau, res.history[k]);
    });
    json j = to_json(res);
    j["history_csv_path"] = hp.string();
    const auto jp = ctx.path("lyapunov.json");
    write_json_file(ctx, jp, j);
    *ctx.out << fmt::format("Lambda = {:.6g} +- {:.2g} 1/s over {} x {} s; wrote {}\n", res.lambda, res.std_error,
                            res.k_steps, res.tau, jp.string());
    return kExitOk;
}

int run_classify(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto res = analyze_point(cfg.params, cfg.distribution_model(), cfg.analysis);
    json j{{"label", to_json(res.label)},
           {"lyapunov", to_json(res.lyapunov)},
           {"peaks", peaks_json(res.spectrum)},
           {"alpha_ratio", cfg.alpha_ratio},
           {"eps_t2", cfg.distribution.width_per_t2}};
    if (res.section) {
        const auto shape = section_shape(*res.section);
        j["section"] = {{"points", res.section->size()},
                        {"cluster_radius", shape.cluster_radius},
                        {"curve_length", shape.curve_length},
                        {"hull_perimeter", shape.hull_perimeter},
                        {"statistic", shape.zigzag}};
    }
    const auto jp = ctx.path("label.json");
    write_json_file(ctx, jp, j);
    const auto& e = res.label.evidence;
    *ctx.out << fmt::format("{}{}  Lambda = {:.4g} +- {:.2g}; wrote {}\n", to_string(res.label.kind),
                            e.unclassified ? " (unclassified: " + e.note + ")" : "", e.lambda, e.lambda_error,
                            jp.string());
    return kExitOk;
}

int run_robustness(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& r = cfg.robustness;
    RobustnessOptions opts;
    opts.n_runs = r.runs;
    opts.transient = cfg.analysis.transient;
    opts.spectrum_length = cfg.analysis.spectrum_length;
    opts.hold_dt = r.hold_dt;
    opts.seed = cfg.seed;
    opts.threads = ctx.threads;
    const auto curve = robustness_curve(cfg.params, cfg.distribution_model(), cfg.integration, r.kind, r.etas, opts);
    const auto p = ctx.path(fmt::format("robustness_{}.csv", to_string(r.kind)));
    write_csv_file(ctx, p, [&](std::ostream& os) {
        os << "eta,r_mean,r_std,n_ok\n";
        for (const auto& q : curve.points)
            os << fmt::format("{:.17g},{:.17g},{:.17g},{}\n", q.eta, q.r_mean, q.r_std, q.n_ok);
    });
    for (const auto& q : curve.points)
        for (const auto& w : q.warnings) *ctx.err << fmt::format("warning: eta={}: {}\n", q.eta, w);
    auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : std::string("none"); };
    *ctx.out << fmt::format("{} noise: 1/e crossing at eta = {}, extent {}; wrote {}\n", to_string(r.kind),
                            show(curve.crossing), show(curve.extent), p.string());
    return kExitOk;
}

int run_sweep_cmd(const Context& ctx, bool resume) {
    const auto& cfg = ctx.cfg;
    SweepGrid grid{cfg.sweep.alpha_ratios, cfg.sweep.eps_t2, *sweep_dist_kind_from_string(cfg.sweep.dist_kind), 5};
    grid.validate();

    SweepOptions opts;
    opts.analysis = cfg.analysis;
    if (cfg.sweep.fast_profile) {
        auto ic = IntegrationConfig::rotating(hz_to_rad(cfg.distribution.center_hz));
        ic.nodes = cfg.integration.nodes;
        ic.initial = cfg.integration.initial;
        opts.analysis.integration = ic;
    }
    opts.rotating_frame = cfg.sweep.fast_profile || cfg.integration.rotating_frame.has_value();
    opts.center_hz = cfg.distribution.center_hz;
    opts.seed = cfg.seed;
    opts.threads = ctx.threads;
    opts.resume = resume;

    const auto cells_path = ctx.path("cells.jsonl");
    const json meta = ctx.metadata();
    bool fresh = !resume || !fs::exists(cells_path) || fs::file_size(cells_path) == 0;
    if (!fresh) {
        std::ifstream in(cells_path);
        std::string first;
        std::getline(in, first);
        const json head = json::parse(first, nullptr, false);
        if (head.is_discarded() || !head.contains("metadata"))
            throw Error(fmt::format("{} has no metadata line; rerun with --no-resume", cells_path.string()));
        if (head["metadata"].value("config_hash", "") != cfg.hash())
            throw Error(fmt::format("{} was written with config {} (now {}); rerun with --no-resume",
                                    cells_path.string(), head["metadata"].value("config_hash", "?"), cfg.hash()));
    } else {
        auto os = open_out(cells_path);
        os << json{{"metadata", meta}}.dump() << '\n';
        finish_out(os, cells_path);
        opts.resume = true;  // append after the metadata line
    }
    opts.cells_path = cells_path;
    std::ostream& out = *ctx.out;
    const std::size_t total = grid.size();
    std::size_t done = 0;
    opts.on_cell = [&](const SweepCell& c) {
        ++done;
        out << fmt::format("[{}/{}] alpha/alpha_c={:.4g} eps*T2={:.4g} {}\n", done, total, c.alpha_ratio, c.eps_t2,
                           c.ok() ? to_string(c.label->kind) : "failed: " + c.error);
        out.flush();
    };
    const auto cells = run_sweep(grid, cfg.params, opts);
    const auto bounds = extract_boundaries(grid, cells, cfg.params, hz_to_rad(cfg.distribution.center_hz));

    const auto bp = ctx.path("boundaries.csv");
    write_csv_file(ctx, bp, [&](std::ostream& os) { write_boundaries_csv(os, bounds); });
    const auto dp = ctx.path("diagram.svg");
    {
        auto os = open_out(dp);
        os << svg_comment(ctx);
        write_diagram_svg(os, grid, cells, bounds);
        finish_out(os, dp);
    }
    const auto failed = std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok(); });
    out << fmt::format("{} cells ({} failed); wrote {}, {}, {}\n", cells.size(), failed, cells_path.string(),
                       bp.string(), dp.string());
    return failed ? kExitDomain : kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feedback-driven nonlinear spin ensemble toolkit", "maserlab"};
    app.set_version_flag("--version", MASERLAB_VERSION);
    app.require_subcommand(1);

    Common c;
    Specific s;
    std::optional<int> threads;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("-o,--out,--output-dir", c.out_dir, "Output directory");
        sub->add_option("--seed", c.seed, "Base seed");
        sub->add_option("--threads", threads, "Worker threads (0: all cores; default $MASERLAB_THREADS)")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--alpha-ratio", c.alpha_ratio, "Feedback gain alpha / alpha_c")
            ->check(CLI::NonNegativeNumber);
        sub->add_option("--eps-t2", c.eps_t2, "Distribution width eps * T2")->check(CLI::PositiveNumber);
        sub->add_option("--nodes", c.nodes, "Ensemble nodes M")->check(CLI::Range(2, 100000));
    };
    auto add_run = [&](CLI::App* sub) {
        sub->add_option("--transient", c.transient, "Transient discarded before analysis (s)")
            ->check(CLI::NonNegativeNumber);
        sub->add_flag("--fast", c.fast, "Integrate in the rotating frame with dt = 5 ms");
    };

    auto* sim = app.add_subcommand("simulate", "Integrate the ensemble; writes trajectory.csv");
    add_common(sim);
    sim->add_option("--t-end", c.t_end, "Integration time (s)")->check(CLI::PositiveNumber);
    sim->add_flag("--fast", c.fast, "Integrate in the rotating frame with dt = 5 ms");

    auto* lc = app.add_subcommand("limit-cycle", "Solve the self-consistent limit cycle; writes limit_cycle.json");
    add_common(lc);

    auto* st = app.add_subcommand("stability", "Linear stability of the limit cycle; writes stability.json");
    add_common(st);
    st->add_option("--method", s.method, "characteristic, jacobian or both")
        ->check(CLI::IsMember({"characteristic", "jacobian", "both"}));

    auto* sp = app.add_subcommand("spectrum", "Single-sided amplitude spectrum of avg Px; writes spectrum.csv");
    add_common(sp);
    add_run(sp);
    sp->add_option("-i,--input", s.input, "Trajectory CSV instead of a fresh simulation")->check(CLI::ExistingFile);
    sp->add_flag("--svg", s.svg, "Also write spectrum.svg");

    auto* pc = app.add_subcommand("poincare", "Section at avg Py = 0; writes section.csv");
    add_common(pc);
    add_run(pc);
    pc->add_option("-i,--input", s.input, "Trajectory CSV instead of a fresh simulation")->check(CLI::ExistingFile);
    pc->add_option("--direction", s.direction, "Crossing direction")->check(CLI::IsMember({"up", "down"}));
    pc->add_flag("--svg", s.svg, "Also write section.svg");

    auto* ly = app.add_subcommand("lyapunov", "Largest Lyapunov exponent; writes lyapunov.json");
    add_common(ly);
    ly->add_flag("--fast", c.fast, "Integrate in the rotating frame with dt = 5 ms");
    ly->add_option("-k,--renormalizations", c.lyapunov_k, "Renormalizations K")->check(CLI::PositiveNumber);

    auto* cl = app.add_subcommand("classify", "Phase label with evidence; writes label.json");
    add_common(cl);
    add_run(cl);
    cl->add_option("-k,--renormalizations", c.lyapunov_k, "Renormalizations K")->check(CLI::PositiveNumber);

    auto* rb = app.add_subcommand("robustness", "Spectral overlap under feedback noise; writes robustness_<kind>.csv");
    add_common(rb);
    add_run(rb);
    rb->add_option("--kind", s.kind, "Noise channel")->check(CLI::IsMember({"field", "gain"}));
    rb->add_option("--etas", s.etas, "Noise amplitudes (rad/s), ascending")->expected(1, -1);
    rb->add_option("--runs", s.runs, "Runs per amplitude")->check(CLI::PositiveNumber);
    rb->add_option("--hold-dt", s.hold_dt, "Noise hold interval (s)")->check(CLI::NonNegativeNumber);

    auto* sw = app.add_subcommand("sweep", "Phase diagram over (eps*T2, alpha/alpha_c); writes cells.jsonl, "
                                           "boundaries.csv, diagram.svg");
    add_common(sw);
    sw->add_option("--transient", c.transient, "Transient discarded before analysis (s)")
        ->check(CLI::NonNegativeNumber);
    sw->add_option("--grid", s.grid, "alpha_lo:alpha_hi:n,eps_lo:eps_hi:n");
    sw->add_option("--dist-kind", s.dist_kind, "uniform, root or dirac_comb")
        ->check(CLI::IsMember({"uniform", "root", "dirac_comb"}));
    sw->add_option("-k,--renormalizations", c.lyapunov_k, "Renormalizations K")->check(CLI::PositiveNumber);
    sw->add_flag("--no-resume", s.no_resume, "Recompute every cell");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << MASERLAB_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.out = &out;
    ctx.err = &err;
    c.threads = threads;
    try {
        ctx.threads = resolve_thread_count(c.threads);
        ctx.cfg = assemble(c, s);
        const auto& cmd = ctx.command;
        if (cmd == "simulate") return run_simulate(ctx);
        if (cmd == "limit-cycle") return run_limit_cycle(ctx);
        if (cmd == "stability") return run_stability(ctx, s.method);
        if (cmd == "spectrum") return run_spectrum(ctx, s);
        if (cmd == "poincare") return run_poincare(ctx, s);
        if (cmd == "lyapunov") return run_lyapunov(ctx);
        if (cmd == "classify") return run_classify(ctx);
        if (cmd == "robustness") return run_robustness(ctx);
        if (cmd == "sweep") return run_sweep_cmd(ctx, !s.no_resume);
        err << "error: unhandled subcommand " << cmd << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
}

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, out, err);
}

}  // namespace maserlab::cli
