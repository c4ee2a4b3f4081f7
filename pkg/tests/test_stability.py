import math

import numpy as np
import pytest
import scipy.sparse as sp

from acstab.errors import ConfigurationError
from acstab.fields import ACParams, ModeIndex, eval_mode, laplacian_matrix, make_grid
from acstab.schemes import BE, CN, DIRK2, MODCN
from acstab.stability import (
    bifurcation_epsilon_sq,
    enumerate_bifurcations,
    stability_threshold,
    uniqueness_coefficient,
)


def test_thresholds_exact():
    assert stability_threshold(BE, 0.1).dt_max == 0.1**2
    assert stability_threshold(CN, 0.1).dt_max == 2.0 * 0.1**2
    assert stability_threshold(MODCN, 0.1).dt_max == math.inf
    assert stability_threshold(DIRK2, 0.1).dt_max == 0.1**2 / 0.25
    tags = {k.label: stability_threshold(k, 1.0).formula for k in (BE, CN, MODCN, DIRK2)}
    assert tags == {
        "be": "EPS2",
        "cn": "TWO_EPS2",
        "modcn": "INF",
        "dirk2": "EPS2_OVER_MAX_AII",
    }


def test_threshold_validation():
    with pytest.raises(ConfigurationError):
        stability_threshold(BE, 0.0)


def test_uniqueness_zero_exactly_at_threshold():
    for kind, stage_a in ((BE, None), (CN, None), (DIRK2, 0.25)):
        eps = 0.1
        dt_max = stability_threshold(kind, eps).dt_max
        val = uniqueness_coefficient(kind, 0.0, ACParams(eps, dt_max), stage_a=stage_a)
        assert val == 0.0


def test_uniqueness_sign_tracks_dt():
    eps = 0.2
    for kind, stage_a in ((BE, None), (CN, None), (DIRK2, 0.25)):
        dt_max = stability_threshold(kind, eps).dt_max
        assert uniqueness_coefficient(kind, 0.0, ACParams(eps, 0.5 * dt_max), stage_a=stage_a) > 0
        assert uniqueness_coefficient(kind, 0.0, ACParams(eps, 2.0 * dt_max), stage_a=stage_a) < 0


def test_modcn_uniqueness_always_positive():
    rng = np.random.default_rng(19)
    p = ACParams(0.1, 0.7)
    assert uniqueness_coefficient(MODCN, 1.0, p, r=1.0) == pytest.approx(
        1.0 / p.dt + 6.0 / (4.0 * p.eps2), rel=1e-14
    )
    for _ in range(200):
        c, r = rng.uniform(-4, 4, 2)
        dt = rng.uniform(1e-3, 1e3)
        assert uniqueness_coefficient(MODCN, c, ACParams(0.1, dt), r=r) > 0


def test_uniqueness_requires_extras():
    p = ACParams(0.1, 0.01)
    with pytest.raises(ConfigurationError):
        uniqueness_coefficient(DIRK2, 0.0, p)  # stage_a missing
    with pytest.raises(ConfigurationError):
        uniqueness_coefficient(MODCN, 0.0, p)  # r missing


def test_dirk_stage_a_one_reduces_to_be():
    rng = np.random.default_rng(23)
    for _ in range(50):
        c = rng.uniform(-2, 2)
        p = ACParams(rng.uniform(0.05, 0.5), rng.uniform(1e-3, 1.0))
        assert uniqueness_coefficient(DIRK2, c, p, stage_a=1.0) == uniqueness_coefficient(
            BE, c, p
        )


def test_bifurcation_values():
    k1 = ModeIndex((1.0,))
    assert bifurcation_epsilon_sq(BE, 0.0, 1.0, k1) == pytest.approx(
        1.0 / (1.0 + math.pi**2), rel=1e-14
    )
    assert bifurcation_epsilon_sq(CN, 0.0, 1.0, k1) == pytest.approx(
        1.0 / (2.0 + math.pi**2), rel=1e-14
    )
    # vanishing / negative numerator -> no bifurcation
    assert bifurcation_epsilon_sq(BE, 1.0 / math.sqrt(3.0), 1.0, k1) is None
    assert bifurcation_epsilon_sq(BE, 0.6, 1.0, k1) is None
    assert bifurcation_epsilon_sq(MODCN, 0.0, 1.0, k1) is None
    # 2D zero mode, CN: (1-0)/(2/0.5 + 0) = 0.25
    assert bifurcation_epsilon_sq(CN, 0.0, 0.5, ModeIndex((0.0, 0.0))) == 0.25
    # DIRK stage uses 1/(dt*a)
    got = bifurcation_epsilon_sq(DIRK2, 0.0, 0.5, k1, stage_a=0.25)
    assert got == pytest.approx(1.0 / (8.0 + math.pi**2), rel=1e-14)


def test_bifurcation_monotonicity():
    dt = 0.8
    prev = math.inf
    for kk in (0.0, 0.5, 1.0, 1.5, 2.0):
        cur = bifurcation_epsilon_sq(BE, 0.1, dt, ModeIndex((kk,)))
        assert cur < prev
        prev = cur
    small = bifurcation_epsilon_sq(CN, 0.1, 0.1, ModeIndex((1.0,)))
    large = bifurcation_epsilon_sq(CN, 0.1, 1.0, ModeIndex((1.0,)))
    assert large > small


def test_enumerate_ordering_example():
    pts = enumerate_bifurcations(BE, 0.0, 10.0, eps_min=0.05, max_k=2, dim=1)
    assert [bp.mode.k for bp in pts] == [(0.0,), (0.5,), (1.0,), (1.5,), (2.0,)]
    eps_sqs = [bp.eps_sq for bp in pts]
    assert eps_sqs == sorted(eps_sqs, reverse=True)
    assert all(bp.eps_sq >= 0.05**2 for bp in pts)
    assert pts[0].eps_sq == pytest.approx(10.0, rel=1e-14)
    assert pts[2].eps_sq == pytest.approx(1.0 / (0.1 + math.pi**2), rel=1e-14)


def test_enumerate_empty_cases():
    assert enumerate_bifurcations(BE, 0.6, 1.0, eps_min=1e-3) == []
    assert enumerate_bifurcations(MODCN, 0.0, 1.0, eps_min=1e-3) == []


def test_enumerate_eigenfunctions_and_notes():
    pts = enumerate_bifurcations(CN, 0.0, 10.0, eps_min=0.05, max_k=1, dim=1)
    by_k = {bp.mode.k: bp for bp in pts}
    assert by_k[(1.0,)].eigenfunction == "cos(1*pi*x1)"
    assert by_k[(0.5,)].eigenfunction == "sin(0.5*pi*x1)"
    assert by_k[(0.5,)].note != ""  # index convention flagged for this scheme
    assert by_k[(1.0,)].note == ""
    be_pts = enumerate_bifurcations(BE, 0.0, 10.0, eps_min=0.05, max_k=1, dim=1)
    assert all(bp.note == "" for bp in be_pts)


def test_enumerate_2d_modes():
    pts = enumerate_bifurcations(CN, 0.0, 0.5, eps_min=0.05, max_k=1, dim=2)
    ks = [bp.mode.k for bp in pts]
    assert (0.0, 0.0) in ks and (1.0, 1.0) in ks
    assert pts[0].mode.k == (0.0, 0.0) and pts[0].eps_sq == 0.25
    two_d = next(bp for bp in pts if bp.mode.k == (1.0, 1.0))
    assert two_d.eps_sq == pytest.approx(1.0 / (4.0 + 2 * math.pi**2), rel=1e-14)
    assert two_d.eigenfunction == "cos(1*pi*x1)*cos(1*pi*x2)"


def test_discrete_operator_singular_at_bifurcation():
    # assemble the linearized step operator at a bifurcating eps; the mode is
    # a near-null vector whose Rayleigh residual shrinks ~4x per h-halving
    c, dt = 0.2, 0.5
    mode = ModeIndex((1.0,))
    eps_sq = bifurcation_epsilon_sq(BE, c, dt, mode)

    def rayleigh(n):
        g = make_grid(1, n)
        m = g.num_nodes
        A = (
            sp.identity(m) / dt
            - laplacian_matrix(g)
            + sp.identity(m) * ((3 * c**2 - 1) / eps_sq)
        )
        v = eval_mode(mode, g).values
        return np.max(np.abs(A @ v)) / np.max(np.abs(v))

    coarse, fine = rayleigh(33), rayleigh(65)
    assert coarse < 1e-1
    assert 3.5 <= coarse / fine <= 4.5
