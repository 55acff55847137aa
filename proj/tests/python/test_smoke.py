import math

import numpy as np
import pytest

import maserlab as ml


def reference(ratio=4.0):
    return ml.PhysicalParams().with_alpha_ratio(ratio)


def test_params_defaults():
    p = ml.PhysicalParams()
    assert p.critical_alpha() == pytest.approx(1.0 / (p.t2 * p.p0))
    with pytest.raises(ValueError):
        ml.PhysicalParams(t2=-1.0)


def test_uniform_threshold_closed_form():
    p = ml.PhysicalParams()
    width = 2.0 / p.t2
    alpha = ml.uniform_no_signal_threshold(p, width)
    x = width * p.t2 / 2.0
    assert alpha / p.critical_alpha() == pytest.approx(x / math.atan(x), rel=1e-12)
    dist = ml.FrequencyDistribution.uniform(ml.hz_to_rad(8.85), width)
    found, onset = ml.no_signal_threshold(p, dist)
    assert found == pytest.approx(alpha, rel=1e-6)
    assert onset == pytest.approx(dist.mean(), rel=1e-9)


def test_limit_cycle_and_stability():
    p = reference()
    dist = ml.FrequencyDistribution.uniform(ml.hz_to_rad(8.85), 1.0 / p.t2)
    sol = ml.solve_limit_cycle(p, dist)
    assert sol is not None
    assert sol.omega_s == pytest.approx(dist.mean(), rel=1e-12)
    assert max(abs(r) for r in sol.residuals) < 1e-10
    verdict = ml.limit_cycle_stable(p, dist, sol)
    assert verdict["stable"] is True
    below = ml.PhysicalParams().with_alpha_ratio(0.5)
    assert ml.solve_limit_cycle(below, dist) is None


def test_simulate_and_spectrum():
    p = ml.PhysicalParams()
    omega = ml.hz_to_rad(8.85)
    cfg = ml.IntegrationConfig.rotating(omega)
    cfg.t_end = 100.0
    cfg.nodes = 9
    traj = ml.simulate(p, ml.FrequencyDistribution.uniform(omega, 1.0 / p.t2), cfg)
    assert len(traj) == len(traj.px) == 20001
    assert np.all(np.isfinite(traj.pz))
    n, dt = 1 << 14, 0.005
    f0 = 164 / (n * dt)
    freqs, amps = ml.spectrum(np.cos(2 * np.pi * f0 * np.arange(n) * dt), dt)
    assert freqs[np.argmax(amps)] == pytest.approx(f0)
    assert amps.max() == pytest.approx(1.0, rel=1e-6)


def test_config_errors_and_hash():
    canon, digest = ml.parse_config("{}")
    assert len(digest) == 16
    assert canon["params"]["t2_s"] == pytest.approx(13.65)
    with pytest.raises(ValueError, match=r"\$\.params\.t2_s"):
        ml.parse_config('{"params": {"t2_s": -1}}')


@pytest.mark.skipif(ml.run_cli is None, reason="built without the command-line tool")
def test_cli_usage_exit_code(tmp_path):
    code, _, _ = ml.run_cli(["no-such-command"])
    assert code == 2
    code, out, _ = ml.run_cli(["stability", "--alpha-ratio", "4", "-o", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "stability.json").exists()
