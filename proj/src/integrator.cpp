#include "maserlab/integrator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "bloch_kernels.hpp"

namespace maserlab {

void IntegrationConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("integration: dt must be > 0");
    if (!(t_end > dt)) throw InvalidArgument("integration: t_end must exceed dt");
    if (record_every < 1) throw InvalidArgument("integration: record_every must be >= 1");
    if (nodes < 2) throw InvalidArgument("integration: nodes must be >= 2");
    if (checkpoint_every < 0.0) throw InvalidArgument("integration: checkpoint_every must be >= 0");
    if (const auto* tilt = std::get_if<EquilibriumTilt>(&initial)) {
        if (!(tilt->magnitude >= 0.0)) throw InvalidArgument("integration: tilt magnitude must be >= 0");
    }
}

IntegrationConfig IntegrationConfig::rotating(double omega_r, double dt) {
    IntegrationConfig c;
    c.rotating_frame = omega_r;
    c.dt = dt;
    c.record_every = std::max(1, static_cast<int>(std::lround(5e-3 / dt)));
    return c;
}

Trajectory Trajectory::window(double t_start) const {
    Trajectory out;
    out.sample_dt = sample_dt;
    out.rotating_frame = rotating_frame;
    out.final_state = final_state;
    const auto first = std::lower_bound(times.begin(), times.end(), t_start - 1e-9 * sample_dt);
    const auto offset = first - times.begin();
    out.times.assign(first, times.end());
    out.avg.assign(avg.begin() + offset, avg.end());
    for (const auto& c : checkpoints)
        if (c.t >= t_start) out.checkpoints.push_back(c);
    return out;
}

std::vector<double> Trajectory::px() const {
    std::vector<double> v(avg.size());
    std::transform(avg.begin(), avg.end(), v.begin(), [](const auto& a) { return a.px; });
    return v;
}

std::vector<double> Trajectory::py() const {
    std::vector<double> v(avg.size());
    std::transform(avg.begin(), avg.end(), v.begin(), [](const auto& a) { return a.py; });
    return v;
}

std::vector<double> Trajectory::pz() const {
    std::vector<double> v(avg.size());
    std::transform(avg.begin(), avg.end(), v.begin(), [](const auto& a) { return a.pz; });
    return v;
}

double Trajectory::max_transverse() const {
    double m = 0.0;
    for (const auto& a : avg) m = std::max(m, std::hypot(a.px, a.py));
    return m;
}

SpinEnsembleState derivative(const SpinEnsembleState& state, const PhysicalParams& params,
                             const DiscretizedEnsemble& ens, const std::optional<FeedbackNoise>& noise,
                             double frame_offset) {
    const std::size_t m = ens.size();
    if (state.size() != m || state.py.size() != m || state.pz.size() != m)
        throw InvalidArgument("derivative: state length does not match ensemble");
    std::vector<double> omega(ens.freqs);
    for (double& w : omega) w -= frame_offset;
    const auto fb = detail::feedback(state.px.data(), state.py.data(), ens.weights.data(), m, params.alpha,
                                     noise.value_or(FeedbackNoise{}));
    SpinEnsembleState rate(m);
    rate.t = state.t;
    detail::bloch_rates(omega.data(), m, params.t1, params.t2, params.p0, fb, state.px.data(), state.py.data(),
                        state.pz.data(), rate.px.data(), rate.py.data(), rate.pz.data());
    return rate;
}

BlochIntegrator::BlochIntegrator(const PhysicalParams& params, const DiscretizedEnsemble& ens, double dt,
                                 double frame_offset)
    : params_(params), ens_(ens), omega_(ens.freqs), dt_(dt), frame_offset_(frame_offset) {
    params_.validate();
    if (!(dt > 0.0)) throw InvalidArgument("BlochIntegrator: dt must be > 0");
    for (double& w : omega_) w -= frame_offset_;
    const std::size_t m = ens_.size();
    for (auto& k : k_) k = SpinEnsembleState(m);
    for (auto& k : tk_) k = SpinEnsembleState(m);
    stage_ = SpinEnsembleState(m);
    tstage_ = SpinEnsembleState(m);
}

namespace {

void axpy(const std::vector<double>& x, const std::vector<double>& k, double h, std::vector<double>& out) {
    const double* __restrict xp = x.data();
    const double* __restrict kp = k.data();
    double* __restrict op = out.data();
    const std::size_t m = x.size();
    for (std::size_t i = 0; i < m; ++i) op[i] = xp[i] + h * kp[i];
}

void axpy_state(const SpinEnsembleState& x, const SpinEnsembleState& k, double h, SpinEnsembleState& out) {
    axpy(x.px, k.px, h, out.px);
    axpy(x.py, k.py, h, out.py);
    axpy(x.pz, k.pz, h, out.pz);
}

void rk4_update(std::vector<double>& x, const std::vector<double>& k1, const std::vector<double>& k2,
                const std::vector<double>& k3, const std::vector<double>& k4, double c) {
    double* __restrict xp = x.data();
    const double* __restrict a = k1.data();
    const double* __restrict b = k2.data();
    const double* __restrict d = k3.data();
    const double* __restrict e = k4.data();
    const std::size_t m = x.size();
    for (std::size_t i = 0; i < m; ++i) xp[i] += c * (a[i] + 2.0 * b[i] + 2.0 * d[i] + e[i]);
}

void combine(SpinEnsembleState& x, const SpinEnsembleState (&k)[4], double dt) {
    const double c = dt / 6.0;
    rk4_update(x.px, k[0].px, k[1].px, k[2].px, k[3].px, c);
    rk4_update(x.py, k[0].py, k[1].py, k[2].py, k[3].py, c);
    rk4_update(x.pz, k[0].pz, k[1].pz, k[2].pz, k[3].pz, c);
}

bool all_finite(const SpinEnsembleState& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += s.px[i] + s.py[i] + s.pz[i];
    return std::isfinite(acc);
}

}  // namespace

void BlochIntegrator::step(SpinEnsembleState& state, const FeedbackNoise& noise) {
    const std::size_t m = ens_.size();
    const double* w = ens_.weights.data();
    auto eval = [&](const SpinEnsembleState& x, SpinEnsembleState& k) {
        const auto fb = detail::feedback(x.px.data(), x.py.data(), w, m, params_.alpha, noise);
        detail::bloch_rates(omega_.data(), m, params_.t1, params_.t2, params_.p0, fb, x.px.data(), x.py.data(),
                            x.pz.data(), k.px.data(), k.py.data(), k.pz.data());
    };
    eval(state, k_[0]);
    axpy_state(state, k_[0], 0.5 * dt_, stage_);
    eval(stage_, k_[1]);
    axpy_state(state, k_[1], 0.5 * dt_, stage_);
    eval(stage_, k_[2]);
    axpy_state(state, k_[2], dt_, stage_);
    eval(stage_, k_[3]);
    combine(state, k_, dt_);
    state.t += dt_;
    if (!all_finite(state))
        throw IntegrationBlowUp(fmt::format("integration blew up at t = {:.6g} s", state.t));
}

void BlochIntegrator::step_with_tangent(SpinEnsembleState& state, SpinEnsembleState& tangent,
                                        const FeedbackNoise& noise) {
    const std::size_t m = ens_.size();
    if (tangent.size() != m) throw InvalidArgument("step_with_tangent: tangent length mismatch");
    const double* w = ens_.weights.data();
    auto eval = [&](const SpinEnsembleState& x, const SpinEnsembleState& v, SpinEnsembleState& k,
                    SpinEnsembleState& tk) {
        const auto fb = detail::feedback(x.px.data(), x.py.data(), w, m, params_.alpha, noise);
        detail::bloch_rates(omega_.data(), m, params_.t1, params_.t2, params_.p0, fb, x.px.data(), x.py.data(),
                            x.pz.data(), k.px.data(), k.py.data(), k.pz.data());
        detail::tangent_rates(omega_.data(), w, m, params_.t1, params_.t2, fb, x.px.data(), x.py.data(),
                              x.pz.data(), v.px.data(), v.py.data(), v.pz.data(), tk.px.data(), tk.py.data(),
                              tk.pz.data());
    };
    eval(state, tangent, k_[0], tk_[0]);
    axpy_state(state, k_[0], 0.5 * dt_, stage_);
    axpy_state(tangent, tk_[0], 0.5 * dt_, tstage_);
    eval(stage_, tstage_, k_[1], tk_[1]);
    axpy_state(state, k_[1], 0.5 * dt_, stage_);
    axpy_state(tangent, tk_[1], 0.5 * dt_, tstage_);
    eval(stage_, tstage_, k_[2], tk_[2]);
    axpy_state(state, k_[2], dt_, stage_);
    axpy_state(tangent, tk_[2], dt_, tstage_);
    eval(stage_, tstage_, k_[3], tk_[3]);
    combine(state, k_, dt_);
    combine(tangent, tk_, dt_);
    state.t += dt_;
    tangent.t = state.t;
    if (!all_finite(state) || !all_finite(tangent))
        throw IntegrationBlowUp(fmt::format("tangent integration blew up at t = {:.6g} s", state.t));
}

SpinEnsembleState initial_state(const DiscretizedEnsemble& ens, const PhysicalParams& params,
                                const IntegrationConfig& cfg) {
    if (const auto* explicit_state = std::get_if<SpinEnsembleState>(&cfg.initial)) {
        if (explicit_state->size() != ens.size())
            throw InvalidArgument("initial state length does not match ensemble");
        return *explicit_state;
    }
    const auto& tilt = std::get<EquilibriumTilt>(cfg.initial);
    if (tilt.magnitude > params.p0) throw InvalidArgument("tilt magnitude exceeds P0");
    double phase = 0.0;
    if (tilt.phase) {
        phase = *tilt.phase;
    } else {
        std::mt19937_64 rng(cfg.seed);
        phase = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
    }
    SpinEnsembleState s(ens.size());
    const double pz = std::sqrt(params.p0 * params.p0 - tilt.magnitude * tilt.magnitude);
    std::fill(s.px.begin(), s.px.end(), tilt.magnitude * std::cos(phase));
    std::fill(s.py.begin(), s.py.end(), tilt.magnitude * std::sin(phase));
    std::fill(s.pz.begin(), s.pz.end(), pz);
    return s;
}

Trajectory simulate(const PhysicalParams& params, const DiscretizedEnsemble& ens, const IntegrationConfig& cfg,
                    const NoiseSampler& noise) {
    cfg.validate();
    params.validate();
    const double offset = cfg.rotating_frame.value_or(0.0);
    BlochIntegrator integrator(params, ens, cfg.dt, offset);
    SpinEnsembleState state = initial_state(ens, params, cfg);
    if (cfg.rotating_frame) {
        // Lab and rotating frames coincide at t = 0 only; rotate a later start.
        const std::complex<double> r = std::polar(1.0, offset * state.t);
        for (std::size_t i = 0; i < state.size(); ++i) {
            const std::complex<double> p = r * std::complex<double>(state.px[i], state.py[i]);
            state.px[i] = p.real();
            state.py[i] = p.imag();
        }
    }

    const auto steps = static_cast<long long>(std::llround(cfg.t_end / cfg.dt));
    const double t0 = state.t;
    const long long checkpoint_stride =
        cfg.checkpoint_every > 0.0 ? std::max(1LL, std::llround(cfg.checkpoint_every / cfg.dt)) : 0;

    Trajectory traj;
    traj.sample_dt = cfg.sample_dt();
    traj.rotating_frame = cfg.rotating_frame;
    traj.times.reserve(static_cast<std::size_t>(steps / cfg.record_every + 1));
    traj.avg.reserve(traj.times.capacity());

    auto record = [&](long long n) {
        const double t = t0 + static_cast<double>(n) * cfg.dt;
        AveragePolarization a = average_polarization(state, ens);
        if (!std::isfinite(a.px) || !std::isfinite(a.py) || !std::isfinite(a.pz))
            throw IntegrationBlowUp(fmt::format("integration blew up at t = {:.6g} s", t));
        if (cfg.rotating_frame) {
            const std::complex<double> lab = std::polar(1.0, -offset * t) * a.transverse();
            a.px = lab.real();
            a.py = lab.imag();
        }
        traj.times.push_back(t);
        traj.avg.push_back(a);
    };

    // Stored states are lab frame, like the samples.
    auto lab_state = [&](SpinEnsembleState s) {
        if (!cfg.rotating_frame) return s;
        const std::complex<double> r = std::polar(1.0, -offset * s.t);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::complex<double> p = r * std::complex<double>(s.px[i], s.py[i]);
            s.px[i] = p.real();
            s.py[i] = p.imag();
        }
        return s;
    };

    record(0);
    FeedbackNoise sample;
    for (long long n = 1; n <= steps; ++n) {
        if (noise) {
            sample = noise();
            if (cfg.rotating_frame) {
                const double t = t0 + static_cast<double>(n - 1) * cfg.dt;
                const std::complex<double> f =
                    std::polar(1.0, offset * t) * std::complex<double>(sample.field_x, sample.field_y);
                sample.field_x = f.real();
                sample.field_y = f.imag();
            }
        }
        integrator.step(state, sample);
        state.t = t0 + static_cast<double>(n) * cfg.dt;
        if (n % cfg.record_every == 0) record(n);
        if (checkpoint_stride > 0 && n % checkpoint_stride == 0) traj.checkpoints.push_back(lab_state(state));
    }
    traj.final_state = lab_state(std::move(state));
    return traj;
}

Trajectory simulate(const PhysicalParams& params, const FrequencyDistribution& dist, const IntegrationConfig& cfg,
                    const NoiseSampler& noise) {
    return simulate(params, discretize(dist, cfg.nodes), cfg, noise);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,Px,Py,Pz\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& a = traj.avg[i];
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", traj.times[i], a.px, a.py, a.pz);
    }
}

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(sizeof(T) == 8);
    auto bits = std::bit_cast<std::uint64_t>(value);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    os.write(buf, 8);
}

template <class T>
T get_le(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw Error("checkpoint: truncated input");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& os, const SpinEnsembleState& state) {
    put_le<std::uint64_t>(os, state.size());
    for (const auto* arr : {&state.px, &state.py, &state.pz})
        for (double v : *arr) put_le<double>(os, v);
}

SpinEnsembleState read_checkpoint(std::istream& is) {
    const auto m = get_le<std::uint64_t>(is);
    if (m == 0 || m > (1ULL << 28)) throw Error("checkpoint: implausible node count");
    SpinEnsembleState s(static_cast<std::size_t>(m));
    for (auto* arr : {&s.px, &s.py, &s.pz})
        for (double& v : *arr) v = get_le<double>(is);
    return s;
}

}  // namespace maserlab
