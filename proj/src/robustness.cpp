#include "maserlab/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>


namespace maserlab {

std::string to_string(NoiseKind kind) { return kind == NoiseKind::field ? "field" : "gain"; }

std::optional<NoiseKind> noise_kind_from_string(const std::string& name) {
    if (name == "field") return NoiseKind::field;
    if (name == "gain") return NoiseKind::gain;
    return std::nullopt;
}

void NoiseSpec::validate(double dt) const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("noise: eta must be finite and >= 0");
    if (hold_dt != 0.0 && !(hold_dt >= dt * (1.0 - 1e-12)))
        throw InvalidArgument(fmt::format("noise: hold_dt ({}) must be >= the integration step ({})", hold_dt, dt));
}

SampleHoldNoise::SampleHoldNoise(const NoiseSpec& spec, double dt)
    : spec_(spec),
      steps_per_hold_(spec.hold_dt > 0.0 ? std::max(1LL, std::llround(spec.hold_dt / dt)) : 1),
      stream_l_(derive_seed(spec.seed, 0, 1)),
      stream_g_(derive_seed(spec.seed, 0, 2)) {
    spec.validate(dt);
}

FeedbackNoise SampleHoldNoise::operator()() {
    if (counter_++ % steps_per_hold_ == 0) {
        std::uniform_real_distribution<double> u(-spec_.eta, spec_.eta);
        if (spec_.eta == 0.0) {
            held_ = {};
        } else if (spec_.kind == NoiseKind::field) {
            held_ = {u(stream_l_), u(stream_g_), 0.0};
        } else {
            held_ = {0.0, 0.0, u(stream_l_)};
        }
    }
    return held_;
}

FeedbackTerms noisy_feedback(double alpha, const AveragePolarization& avg, const FeedbackNoise& sample) {
    const double g = alpha + sample.gain;
    return {g * avg.px + sample.field_x, g * avg.py + sample.field_y};
}

double r_metric(const Spectrum& reference, const Spectrum& noisy) {
    const std::size_t n = reference.size();
    if (n != noisy.size() || reference.resolution != noisy.resolution)
        throw InvalidArgument("r_metric: spectra are on different frequency grids");
    if (n < 3) throw InvalidArgument("r_metric: spectrum too short");
    double cross = 0.0;
    double a2 = 0.0;
    double b2 = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double w = (k == 1 || k == n - 1) ? 0.5 : 1.0;
        const double a = std::abs(reference.amps[k]);
        const double b = std::abs(noisy.amps[k]);
        cross += w * a * b;
        a2 += w * a * a;
        b2 += w * b * b;
    }
    if (a2 == 0.0 || b2 == 0.0) return 0.0;
    // Cauchy-Schwarz holds exactly; clamp the last-ulp excess.
    return std::min(1.0, cross / std::sqrt(a2 * b2));
}

Spectrum run_spectrum(const PhysicalParams& params, const DiscretizedEnsemble& ens, const IntegrationConfig& cfg,
                      const RobustnessOptions& opts, const std::optional<NoiseSpec>& noise) {
    IntegrationConfig run = cfg;
    run.t_end = opts.transient + static_cast<double>(opts.spectrum_length) * cfg.sample_dt();
    run.checkpoint_every = 0.0;
    NoiseSampler sampler;
    if (noise && noise->eta > 0.0) sampler = SampleHoldNoise(*noise, cfg.dt);
    const Trajectory traj = simulate(params, ens, run, sampler);
    return spectrum(traj, opts.spectrum_length, true);
}

RobustnessCurve robustness_curve(const PhysicalParams& params, const FrequencyDistribution& dist,
                                 const IntegrationConfig& cfg, NoiseKind kind, const std::vector<double>& etas,
                                 const RobustnessOptions& opts) {
    cfg.validate();
    if (opts.n_runs < 1) throw InvalidArgument("robustness: n_runs must be >= 1");
    if (etas.empty()) throw InvalidArgument("robustness: empty eta grid");
    if (!std::is_sorted(etas.begin(), etas.end())) throw InvalidArgument("robustness: eta grid must be ascending");
    for (double eta : etas) NoiseSpec{kind, eta, opts.hold_dt, 0}.validate(cfg.dt);

    const auto ens = discretize(dist, cfg.nodes);
    const Spectrum base = run_spectrum(params, ens, cfg, opts, std::nullopt);

    const std::size_t runs = static_cast<std::size_t>(opts.n_runs);
    std::vector<double> r(etas.size() * runs, 0.0);
    std::vector<std::string> failure(etas.size() * runs);
    parallel_for(r.size(), opts.threads, [&](std::size_t job) {
        const std::size_t i = job / runs;
        const std::size_t j = job % runs;
        if (etas[i] == 0.0) {
            r[job] = r_metric(base, base);
            return;
        }
        const NoiseSpec spec{kind, etas[i], opts.hold_dt, derive_seed(opts.seed, i, j)};
        try {
            r[job] = r_metric(base, run_spectrum(params, ens, cfg, opts, spec));
        } catch (const IntegrationBlowUp& e) {
            failure[job] = e.what();
        }
    });

    RobustnessCurve curve;
    curve.kind = kind;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        RobustnessResult res;
        res.eta = etas[i];
        res.n_runs = opts.n_runs;
        std::vector<double> ok;
        for (std::size_t j = 0; j < runs; ++j) {
            const std::size_t job = i * runs + j;
            if (failure[job].empty())
                ok.push_back(r[job]);
            else
                res.warnings.push_back(fmt::format("run {} excluded: {}", j, failure[job]));
        }
        res.n_ok = static_cast<int>(ok.size());
        res.r_values = ok;
        if (!ok.empty()) {
            res.r_mean = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
            double var = 0.0;
            for (double v : ok) var += (v - res.r_mean) * (v - res.r_mean);
            res.r_std = ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
        } else {
            res.r_mean = NAN;
        }
        curve.points.push_back(std::move(res));
    }

    const double threshold = std::exp(-1.0);
    for (const auto& p : curve.points)
        if (p.r_mean > threshold && (!curve.extent || p.eta > *curve.extent)) curve.extent = p.eta;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        if (!(p.r_mean <= threshold)) continue;
        if (i == 0) {
            curve.crossing = p.eta;
        } else {
            const auto& q = curve.points[i - 1];
            const double f = (q.r_mean - threshold) / (q.r_mean - p.r_mean);
            curve.crossing = q.eta + f * (p.eta - q.eta);
        }
        break;
    }
    return curve;
}

}  // namespace maserlab
