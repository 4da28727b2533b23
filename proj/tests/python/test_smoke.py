import json
import math

import numpy as np
import pytest

import kinpot

TINY = {
    "potential": {"modes": [{"k": [1], "a": -0.5}], "shift": 0.5},
    "grid": {"d_x": 1, "d_v": 2, "nx": 4, "nv": 8, "v_max": 6.0},
    "kernel": {"n_angle": 8},
    "T": 0.02,
    "dt": 0.01,
    "substep": 0.0025,
    "initial_data": {"family": "small-smooth", "amplitude": 0.01},
}


def test_canonical_config_fills_defaults_and_hash_is_stable():
    c = kinpot.canonical_config(TINY)
    assert c["beta"] >= 4
    assert c["grid"]["nv"] == 8
    assert kinpot.config_hash(c) == kinpot.config_hash(json.dumps(TINY))
    assert len(kinpot.config_hash(TINY)) == 16


def test_invalid_config_raises_with_message():
    bad = dict(TINY, kernel={"gamma": 1.5})
    with pytest.raises(kinpot.ConfigError, match=r"\[0, 1\]"):
        kinpot.canonical_config(bad)
    with pytest.raises(ValueError):
        kinpot.run(dict(TINY, beta=3))


def test_potential_and_backtrace_conserve_energy():
    phi = kinpot.Potential(1, [([1], -1.0, 0.0)], shift=1.0)
    assert phi([0.0]) == pytest.approx(0.0, abs=1e-15)
    assert phi([0.5]) == pytest.approx(2.0)
    assert phi.degenerate_directions(3) == [1, 2]
    tr = kinpot.backtrace(phi, 2, 1.0, [0.3, 0.0], [0.5, -0.2], substep=5e-4)
    assert tr["X"].shape == (len(tr["times"]), 2)
    assert tr["times"][0] == 1.0 and tr["times"][-1] == 0.0
    assert tr["h_drift"] < 1e-5


def test_free_flow_jacobian():
    zero = kinpot.Potential(1, [])
    s, det = kinpot.flow_jacobian_det(zero, 3, 1.5, [0.1, 0.2, 0.3], [1.0, 0.0, -1.0], substep=1e-2)
    assert np.max(np.abs(det - (s - 1.5) ** 3)) < 1e-10


def test_collision_operator_equilibrium_and_constant_frequency():
    op = kinpot.CollisionOperator(d_v=2, nv=16, gamma=0.0, n_angle=16)
    nu = op.nu
    assert (nu.max() - nu.min()) / nu.max() < 1e-12
    gain, loss = op.collision(op.mu, op.mu, maxwellian_extension=True)
    assert np.max(np.abs(gain - loss)) < 1e-12 * np.max(nu * op.mu)
    f = np.sin(op.v_nodes[:, 0]) * np.sqrt(op.mu)
    assert op.apply_K(f).shape == f.shape
    with pytest.raises(ValueError):
        op.apply_K(np.zeros(3))


def test_run_returns_records_summary_and_picard():
    res = kinpot.run(TINY)
    cols = res["records"]["columns"]
    data = res["records"]["data"]
    assert cols[0] == "t"
    assert data.shape[1] == len(cols)
    assert data[-1, 0] == pytest.approx(0.02)
    mass = data[:, cols.index("mass_drift")]
    assert np.all(np.abs(mass) < 1e-12)
    assert res["picard"]["converged"]
    assert math.isfinite(res["summary"]["nu0"])


def test_run_is_deterministic():
    cfg = dict(TINY, seed=5, initial_data={"family": "small-smooth", "amplitude": 0.01, "noise": 0.1})
    a = kinpot.run(cfg)["records"]["data"]
    b = kinpot.run(cfg)["records"]["data"]
    assert np.array_equal(a, b)


def test_run_to_directory_writes_manifest(tmp_path):
    m = kinpot.run_to_directory(TINY, tmp_path / "out")
    assert m["status"] == "ok"
    assert (tmp_path / "out" / "diagnostics.csv").exists()
    assert "summary.json" in m["files"]


def test_verify_bounds_small():
    res = kinpot.verify_bounds(TINY, pairs=50, slices=10)
    names = [r["name"] for r in res]
    assert "kernel_symmetry" in names
    assert all(r["sample_size"] > 0 for r in res)
