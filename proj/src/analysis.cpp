#include "maserlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <random>

#include <fftw3.h>
#include <fmt/format.h>

#include "bloch_kernels.hpp"

namespace maserlab {

// ---------------------------------------------------------------------------
// Poincare

namespace {

constexpr int kStencil = 8;

/// Barycentric Lagrange interpolation on nodes 0..7.
struct LocalInterpolant {
    std::array<double, kStencil> f{};

    [[nodiscard]] double operator()(double x) const {
        static constexpr std::array<double, kStencil> w{1, -7, 21, -35, 35, -21, 7, -1};
        double num = 0.0;
        double den = 0.0;
        for (int j = 0; j < kStencil; ++j) {
            const double d = x - j;
            if (d == 0.0) return f[j];
            const double c = w[j] / d;
            num += c * f[j];
            den += c;
        }
        return num / den;
    }
};

void check_uniform(const Trajectory& traj, const char* what) {
    if (traj.size() < 2) throw InsufficientData(fmt::format("{}: trajectory has fewer than two samples", what));
    const double h = traj.times[1] - traj.times[0];
    if (!(h > 0.0)) throw InvalidArgument(fmt::format("{}: sample times must increase", what));
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double d = traj.times[i] - traj.times[i - 1];
        if (std::abs(d - h) > 1e-6 * h) throw InvalidArgument(fmt::format("{}: non-uniform sampling", what));
    }
}

}  // namespace

PoincareSection poincare(const Trajectory& traj, CrossingDirection direction) {
    check_uniform(traj, "poincare");
    const std::size_t n = traj.size();
    if (n < static_cast<std::size_t>(kStencil))
        throw InsufficientData("poincare: trajectory too short for the crossing interpolant");
    const double h = traj.times[1] - traj.times[0];
    const double sign = direction == CrossingDirection::upward ? 1.0 : -1.0;

    PoincareSection out;
    out.direction = direction;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = sign * traj.avg[i].py;
        const double b = sign * traj.avg[i + 1].py;
        if (!(a < 0.0 && b >= 0.0)) continue;

        const std::size_t j0 = std::min(i >= 3 ? i - 3 : 0, n - kStencil);
        LocalInterpolant px;
        LocalInterpolant py;
        LocalInterpolant pz;
        for (int j = 0; j < kStencil; ++j) {
            px.f[j] = traj.avg[j0 + j].px;
            py.f[j] = traj.avg[j0 + j].py;
            pz.f[j] = traj.avg[j0 + j].pz;
        }
        double lo = static_cast<double>(i - j0);
        double hi = lo + 1.0;
        double flo = sign * py(lo);
        double fhi = sign * py(hi);
        double x = hi;
        if (flo < 0.0 && fhi > 0.0) {
            // Illinois false position, then bisection safeguards.
            int side = 0;
            for (int it = 0; it < 100; ++it) {
                x = (lo * fhi - hi * flo) / (fhi - flo);
                if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
                const double fx = sign * py(x);
                if (fx == 0.0 || hi - lo < 1e-15) break;
                if (fx < 0.0) {
                    lo = x;
                    flo = fx;
                    if (side == -1) fhi *= 0.5;
                    side = -1;
                } else {
                    hi = x;
                    fhi = fx;
                    if (side == 1) flo *= 0.5;
                    side = 1;
                }
                if (std::abs(fx) < 1e-15) break;
            }
        }
        out.points.push_back({px(x), pz(x)});
        out.times.push_back(traj.times[j0] + x * h);
    }
    if (out.size() < 10)
        throw InsufficientData(fmt::format("poincare: only {} crossings (need at least 10)", out.size()));
    return out;
}

SectionShape section_shape(const PoincareSection& section) {
    SectionShape s;
    const auto& p = section.points;
    const std::size_t n = p.size();
    if (n == 0) return s;
    double cx = 0.0;
    double cz = 0.0;
    for (const auto& q : p) {
        cx += q[0];
        cz += q[1];
    }
    cx /= static_cast<double>(n);
    cz /= static_cast<double>(n);
    for (const auto& q : p) s.cluster_radius = std::max(s.cluster_radius, std::hypot(q[0] - cx, q[1] - cz));
    if (n < 3) return s;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> angle(n);
    for (std::size_t i = 0; i < n; ++i) angle[i] = std::atan2(p[i][1] - cz, p[i][0] - cx);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return angle[a] < angle[b]; });
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = p[order[k]];
        const auto& b = p[order[(k + 1) % n]];
        s.curve_length += std::hypot(a[0] - b[0], a[1] - b[1]);
    }

    // Nearest neighbours with an x-sorted sweep.
    std::vector<std::size_t> byx(n);
    std::iota(byx.begin(), byx.end(), 0);
    std::sort(byx.begin(), byx.end(), [&](std::size_t a, std::size_t b) { return p[a][0] < p[b][0]; });
    for (std::size_t k = 0; k < n; ++k) {
        const auto& a = p[byx[k]];
        double best = INFINITY;
        for (std::size_t j = k + 1; j < n && p[byx[j]][0] - a[0] < best; ++j)
            best = std::min(best, std::hypot(p[byx[j]][0] - a[0], p[byx[j]][1] - a[1]));
        for (std::size_t j = k; j-- > 0 && a[0] - p[byx[j]][0] < best;)
            best = std::min(best, std::hypot(p[byx[j]][0] - a[0], p[byx[j]][1] - a[1]));
        s.max_neighbor_gap = std::max(s.max_neighbor_gap, best);
    }

    // Monotone-chain convex hull.
    std::vector<std::array<double, 2>> pts(p.begin(), p.end());
    std::sort(pts.begin(), pts.end());
    auto cross = [](const auto& o, const auto& a, const auto& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<std::array<double, 2>> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = 0; i + 1 < k; ++i)
        s.hull_perimeter += std::hypot(hull[i + 1][0] - hull[i][0], hull[i + 1][1] - hull[i][1]);
    s.zigzag = s.hull_perimeter > 0.0 ? s.curve_length / s.hull_perimeter : 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// Spectrum

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Spectrum spectrum(std::span<const double> series, double sample_dt, bool exclude_dc) {
    const std::size_t n = series.size();
    if (n < kMinSpectrumLength)
        throw InsufficientData(fmt::format("spectrum: need at least {} samples, got {}", kMinSpectrumLength, n));
    if (!(sample_dt > 0.0)) throw InvalidArgument("spectrum: sample_dt must be > 0");

    const std::size_t bins = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(bins);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    std::copy(series.begin(), series.end(), in);
    fftw_execute(plan);

    Spectrum s;
    s.resolution = 1.0 / (static_cast<double>(n) * sample_dt);
    s.freqs.resize(bins);
    s.amps.resize(bins);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < bins; ++k) {
        s.freqs[k] = static_cast<double>(k) * s.resolution;
        const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
        s.amps[k] = (unpaired ? 1.0 : 2.0) * scale * std::hypot(out[k][0], out[k][1]);
    }
    if (exclude_dc) s.amps[0] = 0.0;
    s.dc_excluded = exclude_dc;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

Spectrum spectrum(const Trajectory& traj, std::size_t length, bool exclude_dc) {
    check_uniform(traj, "spectrum");
    if (traj.size() < length)
        throw InsufficientData(
            fmt::format("spectrum: window has {} samples, {} requested", traj.size(), length));
    std::vector<double> x(length);
    const std::size_t first = traj.size() - length;
    for (std::size_t i = 0; i < length; ++i) x[i] = traj.avg[first + i].px;
    return spectrum(x, traj.times[1] - traj.times[0], exclude_dc);
}

std::vector<SpectralPeak> find_peaks(const Spectrum& spec, double relative_floor, std::size_t max_peaks) {
    std::vector<SpectralPeak> peaks;
    const std::size_t n = spec.size();
    if (n < 3) return peaks;
    const double top = *std::max_element(spec.amps.begin() + 1, spec.amps.end());
    if (!(top > 0.0)) return peaks;
    const double floor = relative_floor * top;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double a = spec.amps[k];
        if (a < floor || a < spec.amps[k - 1] || a <= spec.amps[k + 1]) continue;
        // Parabolic refinement on the three bins around the maximum.
        const double l = spec.amps[k - 1];
        const double r = spec.amps[k + 1];
        const double den = l - 2.0 * a + r;
        const double shift = den != 0.0 ? std::clamp(0.5 * (l - r) / den, -0.5, 0.5) : 0.0;
        peaks.push_back({spec.freqs[k] + shift * spec.resolution, a});
    }
    std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.amp > b.amp; });
    if (peaks.size() > max_peaks) peaks.resize(max_peaks);
    return peaks;
}

// ---------------------------------------------------------------------------
// Lyapunov

SpinEnsembleState jacobian_vector(const SpinEnsembleState& state, const SpinEnsembleState& tangent,
                                  const PhysicalParams& params, const DiscretizedEnsemble& ens,
                                  const FeedbackNoise& noise) {
    const std::size_t m = ens.size();
    if (state.size() != m || tangent.size() != m || tangent.py.size() != m || tangent.pz.size() != m)
        throw InvalidArgument("jacobian_vector: dimensions do not match the ensemble");
    const auto fb =
        detail::feedback(state.px.data(), state.py.data(), ens.weights.data(), m, params.alpha, noise);
    SpinEnsembleState out(m);
    out.t = state.t;
    detail::tangent_rates(ens.freqs.data(), ens.weights.data(), m, params.t1, params.t2, fb, state.px.data(),
                          state.py.data(), state.pz.data(), tangent.px.data(), tangent.py.data(),
                          tangent.pz.data(), out.px.data(), out.py.data(), out.pz.data());
    return out;
}

LyapunovResult summarize_lyapunov(std::span<const double> log_growth, double tau, int blocks) {
    LyapunovResult r;
    r.tau = tau;
    r.k_steps = static_cast<int>(log_growth.size());
    if (log_growth.empty()) return r;
    r.history.reserve(log_growth.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < log_growth.size(); ++i) {
        acc += log_growth[i];
        r.history.push_back(acc / (static_cast<double>(i + 1) * tau));
    }
    r.lambda = r.history.back();

    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(blocks, 1)), log_growth.size());
    const std::size_t len = log_growth.size() / b;
    if (b < 2) {
        r.std_error = INFINITY;
        return r;
    }
    std::vector<double> means(b);
    for (std::size_t j = 0; j < b; ++j) {
        const auto first = log_growth.begin() + static_cast<std::ptrdiff_t>(j * len);
        means[j] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(len), 0.0) /
                   (static_cast<double>(len) * tau);
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(b - 1);
    r.std_error = std::sqrt(var / static_cast<double>(b));
    return r;
}

namespace {

double norm(const SpinEnsembleState& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v.px[i] * v.px[i] + v.py[i] * v.py[i] + v.pz[i] * v.pz[i];
    return std::sqrt(s);
}

void scale(SpinEnsembleState& v, double c) {
    for (auto* arr : {&v.px, &v.py, &v.pz})
        for (double& x : *arr) x *= c;
}

SpinEnsembleState random_unit_tangent(std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    SpinEnsembleState v(m);
    for (auto* arr : {&v.px, &v.py, &v.pz})
        for (double& x : *arr) x = normal(rng);
    scale(v, 1.0 / norm(v));
    return v;
}

/// Rotates the transverse components of every spin by angle phi.
void rotate(SpinEnsembleState& s, double phi) {
    const double c = std::cos(phi);
    const double sn = std::sin(phi);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = s.px[i];
        const double y = s.py[i];
        s.px[i] = c * x - sn * y;
        s.py[i] = sn * x + c * y;
    }
}

/// Tangent growth over one interval was not representable.
struct TangentRangeError {};

class TangentRun {
public:
    TangentRun(const PhysicalParams& params, const DiscretizedEnsemble& ens, const IntegrationConfig& cfg)
        : ens_(ens),
          cfg_(cfg),
          offset_(cfg.rotating_frame.value_or(0.0)),
          integrator_(params, ens, cfg.dt, offset_),
          state_(initial_state(ens, params, cfg)),
          tangent_(random_unit_tangent(ens.size(), cfg.seed)) {
        if (cfg.rotating_frame) rotate(state_, offset_ * state_.t);
        t0_ = state_.t;
    }

    [[nodiscard]] long long step_index() const { return n_; }
    [[nodiscard]] double time() const { return t0_ + static_cast<double>(n_) * cfg_.dt; }

    void advance(bool with_tangent) {
        if (with_tangent)
            integrator_.step_with_tangent(state_, tangent_);
        else
            integrator_.step(state_);
        ++n_;
        state_.t = time();
    }

    /// ln|v| since the last call; renormalizes v.
    double renormalize() {
        const double r = norm(tangent_);
        if (!std::isfinite(r) || r < 1e-280 || r > 1e280) throw TangentRangeError{};
        scale(tangent_, 1.0 / r);
        return std::log(r);
    }

    [[nodiscard]] AveragePolarization sample() const {
        AveragePolarization a = average_polarization(state_, ens_);
        if (cfg_.rotating_frame) {
            const std::complex<double> lab = std::polar(1.0, -offset_ * time()) * a.transverse();
            a.px = lab.real();
            a.py = lab.imag();
        }
        return a;
    }

    [[nodiscard]] SpinEnsembleState lab_state() const {
        SpinEnsembleState s = state_;
        if (cfg_.rotating_frame) {
            const std::complex<double> r = std::polar(1.0, -offset_ * time());
            for (std::size_t i = 0; i < s.size(); ++i) {
                const std::complex<double> p = r * std::complex<double>(s.px[i], s.py[i]);
                s.px[i] = p.real();
                s.py[i] = p.imag();
            }
        }
        return s;
    }

private:
    const DiscretizedEnsemble& ens_;
    IntegrationConfig cfg_;
    double offset_;
    BlochIntegrator integrator_;
    SpinEnsembleState state_;
    SpinEnsembleState tangent_;
    double t0_ = 0.0;
    long long n_ = 0;
};

long long steps_for(double seconds, double dt) { return std::llround(seconds / dt); }

LyapunovResult lyapunov_once(const PhysicalParams& params, const DiscretizedEnsemble& ens,
                             const IntegrationConfig& cfg, const LyapunovOptions& opts) {
    const long long per_tau = steps_for(opts.tau, cfg.dt);
    if (per_tau < 1) throw InvalidArgument("lyapunov: tau shorter than dt");
    const double tau = static_cast<double>(per_tau) * cfg.dt;
    const long long transient_intervals = std::llround(opts.transient / tau);

    TangentRun run(params, ens, cfg);
    for (long long i = 0; i < transient_intervals; ++i) {
        for (long long s = 0; s < per_tau; ++s) run.advance(true);
        (void)run.renormalize();
    }
    std::vector<double> growth;
    growth.reserve(static_cast<std::size_t>(opts.k));
    for (int i = 0; i < opts.k; ++i) {
        for (long long s = 0; s < per_tau; ++s) run.advance(true);
        growth.push_back(run.renormalize());
    }
    return summarize_lyapunov(growth, tau, opts.blocks);
}

}  // namespace

LyapunovResult lyapunov(const PhysicalParams& params, const DiscretizedEnsemble& ens, const IntegrationConfig& cfg,
                        const LyapunovOptions& opts) {
    cfg.validate();
    params.validate();
    if (!(opts.tau > 0.0)) throw InvalidArgument("lyapunov: tau must be > 0");
    if (opts.k < 1) throw InvalidArgument("lyapunov: k must be >= 1");
    if (opts.transient < 0.0) throw InvalidArgument("lyapunov: transient must be >= 0");
    try {
        return lyapunov_once(params, ens, cfg, opts);
    } catch (const TangentRangeError&) {
    } catch (const IntegrationBlowUp&) {
    }
    LyapunovOptions retry = opts;
    retry.tau = 0.5 * opts.tau;
    retry.k = 2 * opts.k;
    try {
        auto r = lyapunov_once(params, ens, cfg, retry);
        r.retries = 1;
        return r;
    } catch (const TangentRangeError&) {
        throw Error("lyapunov: tangent vector left the representable range even after halving tau");
    }
}

LyapunovResult lyapunov(const PhysicalParams& params, const FrequencyDistribution& dist, const IntegrationConfig& cfg,
                        const LyapunovOptions& opts) {
    return lyapunov(params, discretize(dist, cfg.nodes), cfg, opts);
}

// ---------------------------------------------------------------------------
// Classification

std::string to_string(Phase phase) {
    switch (phase) {
        case Phase::no_signal: return "NoSignal";
        case Phase::limit_cycle: return "LimitCycle";
        case Phase::quasi_periodic: return "QuasiPeriodic";
        case Phase::chaos: return "Chaos";
    }
    return "?";
}

std::optional<Phase> phase_from_string(const std::string& name) {
    for (Phase p : {Phase::no_signal, Phase::limit_cycle, Phase::quasi_periodic, Phase::chaos})
        if (to_string(p) == name) return p;
    return std::nullopt;
}

PhaseLabel classify(const Trajectory& window, const LyapunovResult& lyap, const Spectrum& spec,
                    const std::optional<PoincareSection>& section, const ClassifierThresholds& thr) {
    PhaseLabel label;
    auto& ev = label.evidence;
    ev.amplitude = window.max_transverse();
    ev.lambda = lyap.lambda;
    ev.lambda_error = lyap.std_error;
    const auto peaks = find_peaks(spec);
    ev.peak_count = peaks.size();
    if (!peaks.empty()) ev.peak_hz = peaks.front().freq;
    SectionShape shape;
    if (section) {
        shape = section_shape(*section);
        ev.section_points = section->size();
        ev.cluster_radius = shape.cluster_radius;
        ev.section_statistic = shape.zigzag;
    }
    const bool clustered = section && shape.cluster_radius < thr.cluster_fraction * ev.amplitude;
    const bool scattered = section && !clustered && shape.zigzag > thr.zigzag_limit;

    if (ev.amplitude < thr.no_signal_amplitude) {
        label.kind = Phase::no_signal;
        return label;
    }
    if (lyap.lambda > thr.lambda_chaos && lyap.lambda > thr.sigma_factor * lyap.std_error) {
        label.kind = Phase::chaos;
        if (clustered) {
            ev.unclassified = true;
            ev.note = "positive exponent but the section is a single cluster";
        }
        return label;
    }
    if (clustered) {
        label.kind = Phase::limit_cycle;
        label.omega_s = kTwoPi * ev.peak_hz;
        if (std::abs(lyap.lambda) > thr.lambda_chaos) {
            ev.unclassified = true;
            ev.note = "single section cluster but the exponent is not near zero";
        }
        return label;
    }
    label.kind = Phase::quasi_periodic;
    if (!section) {
        ev.unclassified = true;
        ev.note = "too few section crossings";
    } else if (scattered) {
        ev.unclassified = true;
        ev.note = "exponent below the chaos threshold but the section is not a closed curve";
    } else if (lyap.lambda < -thr.lambda_chaos) {
        ev.unclassified = true;
        ev.note = "negative exponent with a nonzero signal (still decaying?)";
    }
    return label;
}

// ---------------------------------------------------------------------------
// Pipeline

PointAnalysis analyze_point(const PhysicalParams& params, const FrequencyDistribution& dist,
                            const AnalysisConfig& cfg) {
    const auto& ic = cfg.integration;
    ic.validate();
    params.validate();
    if (cfg.transient < 0.0) throw InvalidArgument("analysis: transient must be >= 0");
    const auto& lo = cfg.lyapunov;
    if (!(lo.tau > 0.0) || lo.k < 1) throw InvalidArgument("analysis: invalid Lyapunov options");
    if (cfg.spectrum_length < kMinSpectrumLength)
        throw InvalidArgument(fmt::format("analysis: spectrum_length must be >= {}", kMinSpectrumLength));

    const auto ens = discretize(dist, ic.nodes);
    const long long per_tau = std::max(1LL, steps_for(lo.tau, ic.dt));
    const double tau = static_cast<double>(per_tau) * ic.dt;
    const long long n_transient = steps_for(cfg.transient, ic.dt);
    const long long n_align = std::min(n_transient, steps_for(lo.transient, ic.dt) / per_tau * per_tau);
    const long long n_lyap = per_tau * lo.k;
    const long long n_spec = static_cast<long long>(cfg.spectrum_length - 1) * ic.record_every;
    const long long n_window = std::max(n_lyap, n_spec);

    PointAnalysis out;
    out.window.sample_dt = ic.sample_dt();
    out.window.rotating_frame = ic.rotating_frame;
    const auto n_samples = static_cast<std::size_t>(n_window / ic.record_every + 1);
    out.window.times.reserve(n_samples);
    out.window.avg.reserve(n_samples);

    TangentRun run(params, ens, ic);
    const long long align_start = n_transient - n_align;
    std::vector<double> growth;
    growth.reserve(static_cast<std::size_t>(lo.k));
    for (long long n = 0; n < n_transient; ++n) {
        const bool tangent = n >= align_start;
        run.advance(tangent);
        if (tangent && (n + 1 - align_start) % per_tau == 0) (void)run.renormalize();
    }
    try {
        for (long long n = 0; n <= n_window; ++n) {
            if (n % ic.record_every == 0) {
                const auto a = run.sample();
                if (!std::isfinite(a.px) || !std::isfinite(a.py) || !std::isfinite(a.pz))
                    throw IntegrationBlowUp(fmt::format("integration blew up at t = {:.6g} s", run.time()));
                out.window.times.push_back(run.time());
                out.window.avg.push_back(a);
            }
            if (n == n_window) break;
            const bool tangent = n < n_lyap;
            run.advance(tangent);
            if (tangent && (n + 1) % per_tau == 0) growth.push_back(run.renormalize());
        }
    } catch (const TangentRangeError&) {
        throw Error("analysis: tangent vector left the representable range; reduce tau");
    }
    out.window.final_state = run.lab_state();

    out.lyapunov = summarize_lyapunov(growth, tau, lo.blocks);
    out.spectrum = spectrum(out.window, cfg.spectrum_length);
    const Trajectory tail = out.window.window(out.window.times[out.window.size() - cfg.spectrum_length]);
    try {
        out.section = poincare(tail);
    } catch (const InsufficientData&) {
        out.section.reset();
    }
    out.label = classify(tail, out.lyapunov, out.spectrum, out.section, cfg.thresholds);
    return out;
}

}  // namespace maserlab
