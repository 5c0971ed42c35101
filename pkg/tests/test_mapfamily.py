"""The map family: evaluation, inversion, jets, regularity."""

import math

import pytest

from implab import (
    ComplexPoint,
    DEFAULT_MAP,
    PolyMap2,
    characteristic_directions,
    check_regularity,
    eval_F,
    eval_F_inverse,
    eval_H,
    iterate,
)
from implab.errors import ConfigError, DegenerateInput, OutsideInvertibleRegion
from implab.mapfamily import director, map_hash, quadratic_part


def test_eval_F_default_map_literal():
    # hand expansion: x' = x + x^2 (1 + x + y + x^2 + y^2),
    #                 y' = y (1 + 2x + y^3)
    p = ComplexPoint(-0.1, 0.001)
    q = eval_F(DEFAULT_MAP, 0.0, p)
    x = -0.1
    y = 0.001
    a = 1 + x + y + x * x + y * y
    b = 1 + 2 * x + y ** 3
    assert q.x == pytest.approx(x + x * x * a, abs=1e-15)
    assert q.y == pytest.approx(y * b, abs=1e-18)


def test_eval_F_eps_enters_through_gate_term():
    p = ComplexPoint(-0.1, 0.001)
    q0 = eval_F(DEFAULT_MAP, 0.0, p)
    q1 = eval_F(DEFAULT_MAP, 0.05, p)
    # the eps^2 shift acts on the first component only (eps2 extras are
    # zero for the default family)
    assert abs(q1.x - q0.x) == pytest.approx(0.05 ** 2 * abs(1 + (-0.1)
               + 0.001 + 0.01 + 1e-6), rel=1e-12)
    assert q1.y == q0.y


def test_fixed_point_at_origin_only_when_eps_zero():
    o = ComplexPoint(0j, 0j)
    assert eval_F(DEFAULT_MAP, 0.0, o) == o
    moved = eval_F(DEFAULT_MAP, 0.1, o)
    assert moved.x != 0


def test_eval_F_inverse_roundtrip():
    p = ComplexPoint(-0.1, 0.001 + 0.002j)
    for eps in (0.0, 0.01, 0.02 + 0.0001j):
        q = eval_F(DEFAULT_MAP, eps, p)
        r = eval_F_inverse(DEFAULT_MAP, eps, q, tol=1e-14)
        assert abs(r.x - p.x) < 1e-12
        assert abs(r.y - p.y) < 1e-12


def test_eval_F_inverse_rejects_far_points():
    with pytest.raises(OutsideInvertibleRegion):
        eval_F_inverse(DEFAULT_MAP, 0.0, ComplexPoint(40.0, 0j))


def test_eval_H_undoes_reflected_forward_step():
    # H o sigma o F = sigma pointwise, sigma(x, y) = (-x, y)
    p = ComplexPoint(-0.07, 2e-3 + 1e-3j)
    fp = eval_F(DEFAULT_MAP, 0.02, p)
    back = eval_H(DEFAULT_MAP, 0.02, ComplexPoint(-fp.x, fp.y))
    assert abs(back.x + p.x) < 1e-13
    assert abs(back.y - p.y) < 1e-13


def test_iterate_trace_and_escape():
    r = iterate(DEFAULT_MAP, 0.0, ComplexPoint(10.0, 0j), 5, escape_radius=5.0)
    assert r.escaped_at == 0
    r = iterate(DEFAULT_MAP, 0.0, ComplexPoint(-0.1, 0j), 4, trace=True)
    assert len(r.trace) == 5
    assert r.trace[0].x == -0.1
    assert not r.escaped
    # kernel path and traced path agree
    rk = iterate(DEFAULT_MAP, 0.0, ComplexPoint(-0.1, 0j), 4)
    assert abs(rk.final.x - r.final.x) < 1e-15


def test_iterate_escape_matches_scalar_norm():
    p = ComplexPoint(0.4, 0.3)
    r = iterate(DEFAULT_MAP, 0.0, p, 200, escape_radius=2.0)
    assert r.escaped
    before = iterate(DEFAULT_MAP, 0.0, p, r.escaped_at - 1)
    assert before.final.norm() <= 2.0
    assert r.final.norm() > 2.0


def test_polymap_validation():
    with pytest.raises(ConfigError):
        PolyMap2(rho=1.0)
    with pytest.raises(ConfigError):
        PolyMap2(alpha_extra=((0, 0, 1.0),))   # constant term forbidden
    with pytest.raises(ConfigError):
        PolyMap2(beta_extra=((1, 0, "x"),))


def test_map_hash_distinguishes_parameters():
    assert map_hash(DEFAULT_MAP) != map_hash(PolyMap2(rho=3.0))
    assert map_hash(DEFAULT_MAP) == map_hash(PolyMap2())


def test_quadratic_jet_directions():
    pq = quadratic_part(DEFAULT_MAP)
    dirs = characteristic_directions(pq)
    # [1:0] with director (rho - 1), and the degenerate vertical [0:1]
    by_b = {abs(d.b) < 1e-12: d for d in dirs}
    horizontal = by_b[True]
    assert not horizontal.degenerate
    assert director(pq, 0j) == pytest.approx(DEFAULT_MAP.rho - 1)
    vertical = [d for d in dirs if abs(d.a) < 1e-12]
    assert len(vertical) == 1 and vertical[0].degenerate


def test_characteristic_directions_rejects_zero_jet():
    from implab.mapfamily import HomogeneousPair
    with pytest.raises(DegenerateInput):
        characteristic_directions(HomogeneousPair((0, 0, 0), (0, 0, 0)))


def test_regularity_default_family():
    ok, deg = check_regularity(DEFAULT_MAP, 0.0)
    assert ok and deg == 4
    ok, deg = check_regularity(DEFAULT_MAP, 0.3)
    assert ok and deg == 4


def test_regularity_detects_shared_top_zero():
    # strip the extras so both top forms become multiples of x-powers
    # times y-powers sharing a projective zero
    thin = PolyMap2(q=0.0, r=1.0, rho=2.0, alpha_extra=(), beta_extra=())
    ok, _ = check_regularity(thin, 0.0)
    assert not ok
