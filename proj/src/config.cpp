#include "maserlab/config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace maserlab {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(fmt::format("{}{}: {}", path_, key.empty() ? "" : "." + key, what));
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key, double fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        return x;
    }

    double positive(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x > 0.0)) fail(key, fmt::format("must be > 0 (got {})", x));
        return x;
    }

    double non_negative(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x >= 0.0)) fail(key, fmt::format("must be >= 0 (got {})", x));
        return x;
    }

    long long integer(const std::string& key, long long fallback, long long min) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        const auto x = v.get<long long>();
        if (x < min) fail(key, fmt::format("must be >= {} (got {})", min, x));
        return x;
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
        return j_.at(key).get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback, const std::set<std::string>& allowed) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        if (!j_.at(key).is_string()) fail(key, "expected a string");
        auto s = j_.at(key).get<std::string>();
        if (!allowed.empty() && !allowed.count(s)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            fail(key, fmt::format("'{}' is not one of {}", s, list));
        }
        return s;
    }

    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(fmt::format("{}[{}]", key, i), "expected a number");
            out.push_back(v[i].get<double>());
            if (!std::isfinite(out.back())) fail(fmt::format("{}[{}]", key, i), "must be finite");
        }
        return out;
    }

    /// Either a list of values or {"from", "to", "count"}.
    std::vector<double> axis(const std::string& key, const std::vector<double>& fallback) {
        if (j_.contains(key) && j_.at(key).is_object()) {
            seen_.insert(key);
            Section s(j_.at(key), path_ + "." + key);
            const double lo = s.number("from", 0.0);
            const double hi = s.number("to", 0.0);
            const auto n = s.integer("count", 2, 1);
            s.finish();
            std::vector<double> v(static_cast<std::size_t>(n));
            for (long long k = 0; k < n; ++k) v[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (n - 1);
            return v;
        }
        return numbers(key, fallback);
    }

    std::optional<Section> child(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return Section(j_.at(key), path_ + "." + key);
    }

    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) fail(k, "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) v[k] = lo + (hi - lo) * k / (n - 1);
    return v;
}

}  // namespace

FrequencyDistribution DistributionSpec::build(const PhysicalParams& params) const {
    const double center = hz_to_rad(center_hz);
    const double width = width_per_t2 / params.t2;
    if (kind == "uniform") return Uniform{center, width};
    if (kind == "root") return Root{center, width};
    if (kind == "single") return FrequencyDistribution::single(center);
    if (kind == "dirac_comb") {
        DiracComb d;
        for (double f : freqs_hz) d.freqs.push_back(hz_to_rad(f));
        d.weights = weights;
        return d;
    }
    if (kind == "tabulated") {
        Tabulated t;
        for (double f : grid_hz) t.grid.push_back(hz_to_rad(f));
        for (double p : density) t.density.push_back(p / kTwoPi);
        return t;
    }
    throw ConfigError(fmt::format("$.distribution.kind: unknown kind '{}'", kind));
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("$: invalid JSON ({})", e.what()));
    }
    return parse_config(j);
}

RunConfig parse_config(const json& root) {
    RunConfig c;
    Section top(root, "$");

    if (auto s = top.child("params")) {
        c.params.t1 = s->positive("t1_s", kDefaultT1);
        c.params.t2 = s->positive("t2_s", kDefaultT2);
        c.params.p0 = s->positive("p0", kDefaultP0);
        if (c.params.p0 > 1.0) s->fail("p0", "must be <= 1");
        if (s->has("alpha_ratio") && s->has("alpha_rad_s")) s->fail("", "give alpha_ratio or alpha_rad_s, not both");
        if (s->has("alpha_rad_s")) {
            c.params.alpha = s->non_negative("alpha_rad_s", 0.0);
            c.alpha_ratio = c.params.alpha / c.params.critical_alpha();
        } else {
            c.alpha_ratio = s->non_negative("alpha_ratio", 4.0);
        }
        s->finish();
    }
    c.params = c.params.with_alpha_ratio(c.alpha_ratio);

    if (auto s = top.child("distribution")) {
        auto& d = c.distribution;
        d.kind = s->string("kind", "uniform", {"uniform", "root", "single", "dirac_comb", "tabulated"});
        d.center_hz = s->positive("center_hz", kDefaultCenterHz);
        const bool continuous_width = d.kind == "uniform" || d.kind == "root";
        const bool per_t2 = s->has("width_per_t2");
        const bool in_hz = s->has("width_hz");
        if (continuous_width) {
            if (per_t2 == in_hz && s->has("kind"))
                s->fail("", "exactly one of width_per_t2 and width_hz is required");
            if (in_hz)
                d.width_per_t2 = hz_to_rad(s->positive("width_hz", 1.0)) * c.params.t2;
            else
                d.width_per_t2 = s->positive("width_per_t2", 1.0);
        } else if (per_t2 || in_hz) {
            s->fail(per_t2 ? "width_per_t2" : "width_hz", fmt::format("not used by kind '{}'", d.kind));
        }
        if (d.kind == "dirac_comb") {
            d.freqs_hz = s->numbers("freqs_hz", {});
            d.weights = s->numbers("weights", {});
            if (d.freqs_hz.empty()) s->fail("freqs_hz", "required for dirac_comb");
            if (d.weights.size() != d.freqs_hz.size()) s->fail("weights", "must match freqs_hz in length");
        }
        if (d.kind == "tabulated") {
            d.grid_hz = s->numbers("grid_hz", {});
            d.density = s->numbers("density", {});
            if (d.grid_hz.size() < 2) s->fail("grid_hz", "needs at least two points");
            if (d.density.size() != d.grid_hz.size()) s->fail("density", "must match grid_hz in length");
        }
        s->finish();
    }
    try {
        (void)c.distribution.build(c.params);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(fmt::format("$.distribution: {}", e.what()));
    }

    auto& ic = c.integration;
    if (auto s = top.child("integration")) {
        ic.dt = s->positive("dt_s", ic.dt);
        ic.t_end = s->positive("t_end_s", ic.t_end);
        ic.record_every = static_cast<int>(s->integer("record_every", ic.record_every, 1));
        ic.nodes = static_cast<int>(s->integer("nodes", ic.nodes, 2));
        const auto frame = s->string("frame", "lab", {"lab", "rotating"});
        if (frame == "rotating")
            ic.rotating_frame = hz_to_rad(s->positive("frame_hz", c.distribution.center_hz));
        else if (s->has("frame_hz"))
            s->fail("frame_hz", "only valid with frame = rotating");
        EquilibriumTilt tilt;
        tilt.magnitude = s->non_negative("tilt", tilt.magnitude);
        if (tilt.magnitude > c.params.p0) s->fail("tilt", "must not exceed p0");
        if (s->has("tilt_phase_rad")) tilt.phase = s->number("tilt_phase_rad", 0.0);
        ic.initial = tilt;
        ic.checkpoint_every = s->non_negative("checkpoint_every_s", 0.0);
        s->finish();
    }
    if (!(ic.t_end > ic.dt)) throw ConfigError("$.integration.t_end_s: must exceed dt_s");

    auto& ac = c.analysis;
    if (auto s = top.child("analysis")) {
        ac.transient = s->non_negative("transient_s", ac.transient);
        ac.lyapunov.tau = s->positive("lyapunov_tau_s", ac.lyapunov.tau);
        ac.lyapunov.k = static_cast<int>(s->integer("lyapunov_k", ac.lyapunov.k, 1));
        ac.lyapunov.transient = s->non_negative("lyapunov_transient_s", ac.lyapunov.transient);
        ac.lyapunov.blocks = static_cast<int>(s->integer("lyapunov_blocks", ac.lyapunov.blocks, 2));
        ac.spectrum_length = static_cast<std::size_t>(
            s->integer("spectrum_length", static_cast<long long>(ac.spectrum_length),
                       static_cast<long long>(kMinSpectrumLength)));
        ac.thresholds.no_signal_amplitude = s->positive("no_signal_amplitude", ac.thresholds.no_signal_amplitude);
        ac.thresholds.lambda_chaos = s->positive("lambda_chaos", ac.thresholds.lambda_chaos);
        ac.thresholds.sigma_factor = s->positive("sigma_factor", ac.thresholds.sigma_factor);
        ac.thresholds.cluster_fraction = s->positive("cluster_fraction", ac.thresholds.cluster_fraction);
        s->finish();
    }

    if (auto s = top.child("robustness")) {
        auto& r = c.robustness;
        r.kind = *noise_kind_from_string(s->string("kind", "field", {"field", "gain"}));
        r.etas = s->axis("etas", r.etas);
        for (std::size_t i = 0; i < r.etas.size(); ++i)
            if (!(r.etas[i] >= 0.0) || (i > 0 && !(r.etas[i] > r.etas[i - 1])))
                s->fail("etas", "must be >= 0 and strictly ascending");
        if (r.etas.empty()) s->fail("etas", "must not be empty");
        r.runs = static_cast<int>(s->integer("runs", r.runs, 1));
        r.hold_dt = s->non_negative("hold_dt_s", r.hold_dt);
        if (r.hold_dt > 0.0 && r.hold_dt < ic.dt) s->fail("hold_dt_s", "must be >= integration.dt_s");
        s->finish();
    }

    c.sweep.alpha_ratios = linspace(0.5, 8.0, 17);
    c.sweep.eps_t2 = linspace(0.1, 8.0, 17);
    if (auto s = top.child("sweep")) {
        auto& w = c.sweep;
        w.alpha_ratios = s->axis("alpha_ratios", w.alpha_ratios);
        w.eps_t2 = s->axis("eps_t2", w.eps_t2);
        w.dist_kind = s->string("dist_kind", "uniform", {"uniform", "root", "dirac_comb"});
        w.fast_profile = s->boolean("fast_profile", true);
        SweepGrid g{w.alpha_ratios, w.eps_t2, *sweep_dist_kind_from_string(w.dist_kind), 5};
        try {
            g.validate();
        } catch (const Error& e) {
            s->fail("", e.what());
        }
        s->finish();
    }

    c.seed = top.seed("seed", 1);
    c.output_dir = top.string("output_dir", ".", {});
    top.finish();

    ic.seed = c.seed;
    ac.integration = ic;
    return c;
}

json RunConfig::canonical() const {
    const auto& ic = integration;
    const auto& tilt = std::get<EquilibriumTilt>(ic.initial);
    const auto& d = distribution;
    const auto& ac = analysis;
    return {
        {"params", {{"t1_s", params.t1}, {"t2_s", params.t2}, {"p0", params.p0}, {"alpha_rad_s", params.alpha}}},
        {"distribution",
         {{"kind", d.kind},
          {"center_hz", d.center_hz},
          {"width_per_t2", d.width_per_t2},
          {"freqs_hz", d.freqs_hz},
          {"weights", d.weights},
          {"grid_hz", d.grid_hz},
          {"density", d.density}}},
        {"integration",
         {{"dt_s", ic.dt},
          {"t_end_s", ic.t_end},
          {"record_every", ic.record_every},
          {"nodes", ic.nodes},
          {"frame_rad_s", ic.rotating_frame ? json(*ic.rotating_frame) : json(nullptr)},
          {"tilt", tilt.magnitude},
          {"tilt_phase_rad", tilt.phase ? json(*tilt.phase) : json(nullptr)},
          {"checkpoint_every_s", ic.checkpoint_every}}},
        {"analysis",
         {{"transient_s", ac.transient},
          {"lyapunov_tau_s", ac.lyapunov.tau},
          {"lyapunov_k", ac.lyapunov.k},
          {"lyapunov_transient_s", ac.lyapunov.transient},
          {"lyapunov_blocks", ac.lyapunov.blocks},
          {"spectrum_length", ac.spectrum_length},
          {"no_signal_amplitude", ac.thresholds.no_signal_amplitude},
          {"lambda_chaos", ac.thresholds.lambda_chaos},
          {"sigma_factor", ac.thresholds.sigma_factor},
          {"cluster_fraction", ac.thresholds.cluster_fraction},
          {"rules", kClassifierVersion}}},
        {"robustness",
         {{"kind", to_string(robustness.kind)},
          {"etas", robustness.etas},
          {"runs", robustness.runs},
          {"hold_dt_s", robustness.hold_dt}}},
        {"sweep",
         {{"alpha_ratios", sweep.alpha_ratios},
          {"eps_t2", sweep.eps_t2},
          {"dist_kind", sweep.dist_kind},
          {"fast_profile", sweep.fast_profile}}},
        {"seed", seed}};
}

std::string RunConfig::hash() const {
    const std::string s = canonical().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace maserlab
