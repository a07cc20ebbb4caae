import math

import numpy as np
import pytest

import ultraheat as uh

S4 = {
    "radius": 2,
    "children": [
        {"radius": 1, "leaves": ["a", "b"]},
        {"radius": 1, "leaves": ["c", "d"]},
    ],
}


def s2_kernel():
    space = uh.Space.from_spec({"radius": 1, "leaves": ["0", "1"]})
    return uh.Kernel.from_matrix(space, np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_space_basics():
    s = uh.Space.from_spec(S4)
    assert len(s) == 4
    assert s.diam == 2.0
    assert s.levels == [1.0, 2.0]
    assert s.distance(s.index("a"), s.index("c")) == 2.0


def test_not_ultrametric():
    d = np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float)
    with pytest.raises(uh.UltraheatError, match="NotUltrametric"):
        uh.Space.from_distances(d)


def test_s2_heat_kernel_closed_form():
    p = uh.heat_kernel(s2_kernel(), 0.3)
    assert p[0, 1] == pytest.approx((1 - math.exp(-1.2)) / 2, rel=1e-13)
    assert np.allclose(p, p.T)


def test_truncated_kernel_block_zeros():
    k = uh.Kernel.power(uh.Space.from_spec(S4), 3.0)
    q = uh.heat_kernel(k, 5.0, rho=1.0)
    assert q[0, 2] == 0.0 and q[1, 3] == 0.0


def test_s2_constants():
    k = s2_kernel()
    times = list(np.geomspace(1e-3, 1.0, 16))
    assert uh.due_constant(k, 1, 1, 1, times)["constant"] == pytest.approx((1 + math.exp(-4)) / 2, abs=1e-9)
    assert uh.wue_constant(k, 1, 1, 1, times)["constant"] == pytest.approx(1 - math.exp(-4), abs=1e-9)


def test_certificate_passes():
    cert = uh.certificate(uh.Kernel.power(uh.Space.from_spec(S4), 3.0), 1.0, 2.0, 2.0)
    assert cert["status"] == "pass"
    assert cert["constants"]["C_wUE_derived"] >= cert["constants"]["C_wUE_measured"]


def test_fast_diagonal_matches_dense():
    s = uh.Space.from_spec(S4)
    dense = np.diag(uh.heat_kernel(uh.Kernel.power(s, 2.0, scaling="mass"), 0.7))
    assert np.allclose(uh.fast_diagonal(s, 2.0, 0.7), dense, rtol=1e-12)


def test_run_checks_report():
    cfg = {
        "space": S4,
        "kernel": {"kind": "power", "exponent": 3},
        "exponents": {"alpha": 1, "beta": 1, "R0": 2},
        "checks": ["semigroup", "vanishing", "tail"],
    }
    rep = uh.run_checks(cfg)
    assert rep["summary"]["fail"] == 0
    assert {c["name"] for c in rep["checks"]} >= {"semigroup_symmetry", "vanishing_exact", "tail_bound"}
    bad = dict(cfg, time_grid={"min": 0})
    with pytest.raises(uh.UltraheatError, match="time grid min must be > 0"):
        uh.run_checks(bad)
