"""Phase-coupled ladders and empirical Lavaurs maps."""

import math

import pytest

from implab.errors import (
    ConfigError,
    DomainViolation,
    ImageNotInRepellingBasin,
    OrbitEscaped,
    SectorViolation,
)
from implab.fatou import phi_iota, psi_o_line
from implab.lavaurs import (
    estimates_to_csv,
    lavaurs_1d,
    lavaurs_2d_estimate,
    make_alpha_sequence,
    semiconjugacy_residual,
)
from implab.mapfamily import ComplexPoint

# psi_out(alpha + phi_in(-1/10)) for the default map at alpha = -25,
# pinned as a regression target (the composition below recomputes it)
LAVAURS_25 = 0.06668408899753574

LADDER = (200, 400, 800, 1600)


def test_alpha_sequence_coupling_is_exact():
    seq = make_alpha_sequence(-25 + 3j, (200, 400))
    assert seq.n_list == (200, 400)
    for eps, n in seq.entries:
        # n - pi/eps = alpha by construction
        assert n - math.pi / eps == pytest.approx(-25 + 3j, abs=1e-12)
        assert eps.real > 0


def test_alpha_sequence_rejects_bad_ladders():
    with pytest.raises(ConfigError, match="empty"):
        make_alpha_sequence(-25, ())
    with pytest.raises(ConfigError, match="strictly increasing"):
        make_alpha_sequence(-25, (200, 200, 400))
    with pytest.raises(DomainViolation, match="need n >"):
        make_alpha_sequence(-1010, (200, 400))


def test_alpha_sequence_sector_guard():
    # a large imaginary phase tilts every eps out of the sector, and the
    # message names the offending rungs
    with pytest.raises(SectorViolation, match=r"\[0, 1, 2, 3\]"):
        make_alpha_sequence(-25 + 20j, LADDER)
    # just inside: Im alpha below pi * c_eps passes
    make_alpha_sequence(-25 + 3j, LADDER)


def test_lavaurs_1d_frozen_value(default_map):
    got = lavaurs_1d(default_map, -25, -0.1)
    assert got == pytest.approx(LAVAURS_25, abs=1e-9)
    # ... and it is literally the advertised composition
    inner = phi_iota(default_map, ComplexPoint(-0.1, 0j), tol=1e-10).value
    assert got == pytest.approx(psi_o_line(default_map, -25 + inner,
                                           tol=1e-10), abs=1e-12)


def test_transit_images_converge_to_line_value(default_map, regions):
    est = lavaurs_2d_estimate(default_map, regions, -25,
                              ComplexPoint(-0.1, 0j), LADDER)
    assert est.cauchy_gap is not None and est.cauchy_gap < 1e-2
    assert [row.n for row in est.rows] == list(LADDER)
    assert all(row.escaped_at is None for row in est.rows)
    assert abs(est.estimate.x - LAVAURS_25) < 1e-3
    assert abs(est.estimate.y) == 0.0
    assert len(est.values) == 4


def test_escaping_start_is_strict_by_default(default_map, regions):
    # to the right of the gate the forward orbit blows up on every rung
    p = ComplexPoint(0.5, 0j)
    with pytest.raises(OrbitEscaped):
        lavaurs_2d_estimate(default_map, regions, -25, p, (200, 400))
    est = lavaurs_2d_estimate(default_map, regions, -25, p, (200, 400),
                              strict=False)
    assert all(row.escaped_at is not None for row in est.rows)
    assert est.cauchy_gap is None


def test_semiconjugacy_residual_small(default_map, regions):
    r = semiconjugacy_residual(default_map, regions, -25,
                               ComplexPoint(-0.1, 0j), LADDER)
    assert r < 1e-2


def test_semiconjugacy_guard_outside_cone(default_map, regions):
    # this phase parks the transit image short of the outgoing cone
    with pytest.raises(ImageNotInRepellingBasin):
        semiconjugacy_residual(default_map, regions, -14,
                               ComplexPoint(-0.1, 0j), (200, 400))


def test_estimates_csv_layout(default_map, regions):
    est = lavaurs_2d_estimate(default_map, regions, -25,
                              ComplexPoint(-0.1, 0j), (200, 400))
    lines = estimates_to_csv([est], residuals=[0.0074]).strip().split("\n")
    assert lines[0].startswith("alpha_re,alpha_im,nu,eps_re,eps_im,n,")
    assert len(lines) == 3
    first, last = lines[1].split(","), lines[2].split(",")
    assert len(first) == 16
    # gap and residual sit on the last rung only
    assert first[-2] == "" and first[-1] == ""
    assert float(last[-1]) == 0.0074
    assert float(last[-2]) == pytest.approx(est.cauchy_gap)
