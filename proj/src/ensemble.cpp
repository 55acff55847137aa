#include "maserlab/ensemble.hpp"

#include <numeric>

namespace maserlab {

FrequencyDistribution DiscretizedEnsemble::as_distribution() const {
    // Drop zero-weight nodes (e.g. the vanishing endpoints of the root density).
    DiracComb comb;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (weights[i] > 0.0) {
            comb.freqs.push_back(freqs[i]);
            comb.weights.push_back(weights[i]);
        }
    }
    const double total = std::accumulate(comb.weights.begin(), comb.weights.end(), 0.0);
    for (double& w : comb.weights) w /= total;
    return FrequencyDistribution(std::move(comb));
}

DiscretizedEnsemble discretize(const FrequencyDistribution& dist, int m) {
    if (const auto* comb = std::get_if<DiracComb>(&dist.variant())) return {comb->freqs, comb->weights};
    if (m < 2) throw InvalidArgument("discretize: m must be >= 2 for continuous distributions");

    const auto [lo, hi] = dist.support();
    const double step = (hi - lo) / (m - 1);
    DiscretizedEnsemble ens;
    ens.freqs.resize(m);
    ens.weights.resize(m);
    for (int i = 0; i < m; ++i) {
        ens.freqs[i] = (i == m - 1) ? hi : lo + i * step;
        // Evaluate the closed support at the end nodes so roundoff cannot drop them.
        const double probe = (i == 0) ? lo : (i == m - 1 ? hi : ens.freqs[i]);
        double w = density(dist, probe) * step;
        if (i == 0 || i == m - 1) w *= 0.5;
        ens.weights[i] = w;
    }
    const double total = std::accumulate(ens.weights.begin(), ens.weights.end(), 0.0);
    if (!(total > 0.0)) throw InvalidArgument("discretize: density has no mass on the node grid");
    for (double& w : ens.weights) w /= total;
    return ens;
}

AveragePolarization average_polarization(const SpinEnsembleState& state, const DiscretizedEnsemble& ens) {
    const std::size_t m = ens.size();
    if (state.px.size() != m || state.py.size() != m || state.pz.size() != m)
        throw InvalidArgument("average_polarization: state length does not match ensemble");
    AveragePolarization avg;
    for (std::size_t i = 0; i < m; ++i) {
        avg.px += ens.weights[i] * state.px[i];
        avg.py += ens.weights[i] * state.py[i];
        avg.pz += ens.weights[i] * state.pz[i];
    }
    return avg;
}

SpinEnsembleState equilibrium_state(const DiscretizedEnsemble& ens, const PhysicalParams& params) {
    SpinEnsembleState s(ens.size());
    std::fill(s.pz.begin(), s.pz.end(), params.p0);
    return s;
}

}  // namespace maserlab
