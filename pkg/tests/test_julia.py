"""Slice rasters, membership certificates, and the discontinuity scene."""

import json
import math

import numpy as np
import pytest

from implab.errors import (
    ConfigError,
    GridMismatch,
    InconclusiveScene,
    NotRegular,
)
from implab.fatou import phi_iota
from implab.julia import (
    DiscontinuityReport,
    GridSpec,
    MembershipParams,
    Raster,
    boundary_slice,
    discontinuity_report,
    escape_classify,
    escape_radius_bound,
    hausdorff_grid,
    lavaurs_membership,
    render_K_slice,
    report_summary,
    witnesses_to_csv,
    write_ppm,
)
from implab.lavaurs import make_alpha_sequence
from implab.mapfamily import ComplexPoint, PolyMap2

WINDOW = dict(origin=ComplexPoint(-1.6 - 1.2j, 0j),
              e1=ComplexPoint(2.4, 0j), e2=ComplexPoint(2.4j, 0j))


def _grid(n, max_iter=300):
    return GridSpec(nx=n, ny=n, escape_radius=8.0, max_iter=max_iter, **WINDOW)


@pytest.fixture(scope="module")
def slice96(default_map):
    return render_K_slice(default_map, 0.0, _grid(96), threads=2)


@pytest.fixture(scope="module")
def base257(default_map):
    # reference eps = 0 raster for the near-boundary certificates
    return render_K_slice(default_map, 0.0, _grid(257, 2000), threads=8)


def test_gridspec_validation():
    with pytest.raises(ConfigError, match="2 pixels"):
        GridSpec(nx=1, ny=8, escape_radius=8.0, max_iter=10, **WINDOW)
    with pytest.raises(ConfigError, match="radius"):
        GridSpec(nx=8, ny=8, escape_radius=0.0, max_iter=10, **WINDOW)
    with pytest.raises(ConfigError, match="max_iter"):
        GridSpec(nx=8, ny=8, escape_radius=8.0, max_iter=0, **WINDOW)


def test_gridspec_geometry():
    g = _grid(96)
    assert g.pitch == (2.4 / 96, 2.4 / 96)
    for ix, iy in ((0, 0), (17, 80), (95, 95)):
        assert g.locate(complex(g.pixel_center(ix, iy).x)) == (ix, iy)
    assert g.locate(5.0 + 0j) is None
    xs, ys = g.centers()
    assert xs.shape == (96, 96) and ys.shape == (96, 96)
    assert xs[3, 7] == complex(g.pixel_center(7, 3).x)
    assert np.all(ys == 0)


def test_grid_hash_tracks_parameters():
    assert _grid(96).grid_hash == _grid(96).grid_hash
    assert _grid(96).grid_hash != _grid(97).grid_hash
    assert _grid(96, 300).grid_hash != _grid(96, 301).grid_hash


def test_render_is_thread_invariant_and_pinned(default_map, slice96):
    again = render_K_slice(default_map, 0.0, _grid(96), threads=8)
    assert np.array_equal(slice96.cells, again.cells)
    assert int(slice96.bounded.sum()) == 4396
    assert slice96.meta["bounded"] == 4396
    assert slice96.meta["kind"] == "escape"
    assert slice96.meta["grid"] == _grid(96).grid_hash


def test_boundary_slice_counts_and_frame_rule(slice96):
    b = boundary_slice(slice96)
    assert b.meta["kind"] == "boundary"
    assert int(b.cells.sum()) == 276
    assert set(np.unique(b.cells)) <= {0, 1}
    # boundary pixels are bounded pixels
    assert np.all(slice96.bounded[b.cells != 0])
    # a fully bounded raster has no escaped neighbors anywhere, frame
    # included, so its inner boundary is empty
    full = Raster(_grid(4), np.full((4, 4), -1, dtype=np.int32),
                  {"kind": "escape"})
    assert int(boundary_slice(full).cells.sum()) == 0


def test_hausdorff_directed_distances(slice96):
    assert hausdorff_grid(slice96, slice96) == (0.0, 0.0)
    with pytest.raises(GridMismatch):
        hausdorff_grid(slice96,
                       Raster(_grid(97), np.zeros((97, 97), np.int32), {}))
    shape = slice96.cells.shape
    a = np.zeros(shape, dtype=bool)
    b = np.zeros(shape, dtype=bool)
    a[10, 10] = True
    b[13, 14] = True
    px, py = slice96.grid.pitch
    want = math.hypot(4 * px, 3 * py)
    got = hausdorff_grid(slice96, slice96, mask_a=a, mask_b=b)
    assert got[0] == pytest.approx(want) and got[1] == pytest.approx(want)
    empty = np.zeros(shape, dtype=bool)
    assert hausdorff_grid(slice96, slice96, mask_a=empty, mask_b=b) == \
        (0.0, math.inf)


def test_escape_radius_bound_pinned(default_map):
    v = escape_radius_bound(default_map)
    assert 4.0 < v < 6.0
    assert v == pytest.approx(4.907463073730469, rel=1e-12)


def test_escape_classify(default_map):
    g = _grid(96)
    assert escape_classify(default_map, 0.0, ComplexPoint(6.0, 0j), g) == 1
    assert escape_classify(default_map, 0.0, ComplexPoint(-0.05, 0j), g) is None
    thin = PolyMap2(alpha_extra=(), beta_extra=())
    with pytest.raises(NotRegular):
        escape_classify(thin, 0.0, ComplexPoint(6.0, 0j), g)


def test_write_ppm_bytes_and_sidecar(tmp_path):
    g = GridSpec(nx=2, ny=2, escape_radius=8.0, max_iter=10, **WINDOW)
    cells = np.array([[-1, 0], [3, -1]], dtype=np.int32)
    r = Raster(g, cells, {"kind": "escape", "bounded": 2})
    bnd = np.array([[True, False], [False, False]])
    path = tmp_path / "tiny.ppm"
    write_ppm(path, r, boundary=bnd)
    data = path.read_bytes()
    assert data.startswith(b"P6\n2 2\n255\n")
    pixels = data[len(b"P6\n2 2\n255\n"):]
    assert pixels == bytes((255, 0, 0,      # bounded, overridden red
                            255, 255, 255,  # escaped white
                            255, 255, 255,  # escaped white
                            0, 0, 0))       # bounded black
    sidecar = (tmp_path / "tiny.ppm.json").read_text(encoding="ascii")
    assert sidecar.endswith("\n")
    assert json.loads(sidecar) == {"kind": "escape", "bounded": 2}
    assert sidecar == json.dumps({"bounded": 2, "kind": "escape"},
                                 sort_keys=True) + "\n"


def test_membership_params_validation():
    with pytest.raises(ConfigError, match="empty"):
        MembershipParams((), 8.0, 100)
    with pytest.raises(ConfigError, match="cover"):
        MembershipParams((200, 400), 8.0, 300)
    with pytest.raises(ConfigError, match="radius"):
        MembershipParams((200,), 0.0, 300)


def test_membership_in_k(default_map, regions):
    params = MembershipParams((200, 400, 800, 1600), 8.0, 2000)
    r = lavaurs_membership(default_map, regions, -25 + 3j,
                           ComplexPoint(-0.1, 1e-4), 3, params)
    assert r.outcome == "InK" and r.order == 3
    assert len(r.stages) == 3
    for st in r.stages:
        assert st.gap is not None and st.gap <= params.gap_tol
        assert all(t is None for t in st.transit_escapes)
        assert st.f0_fate == -1


def test_membership_not_in_k_by_image_fate(default_map, regions):
    params = MembershipParams((200, 400, 800, 1600), 8.0, 2000)
    r = lavaurs_membership(default_map, regions, -25,
                           ComplexPoint(-0.1, 1e-4), 3, params)
    assert r.outcome == "NotInK" and r.order == 1
    assert r.stages[0].f0_fate == 16
    assert len(r.stages[0].images) == 4


def test_membership_not_in_k_at_order_zero(default_map, regions):
    params = MembershipParams((200, 400), 8.0, 500)
    r = lavaurs_membership(default_map, regions, -25,
                           ComplexPoint(0.5, 0j), 3, params)
    assert r.outcome == "NotInK" and r.order == 0 and r.stages == ()
    with pytest.raises(ConfigError, match="nonnegative"):
        lavaurs_membership(default_map, regions, -25,
                           ComplexPoint(0.5, 0j), -1, params)


def test_membership_not_in_k_long_crawl(default_map, regions):
    # a huge |alpha| pushes the image deep toward the gate; the escape
    # only shows up after a long bounded crawl, well past the ladder
    params = MembershipParams((1200, 1600, 2000, 2400), 8.0, 3000)
    r = lavaurs_membership(default_map, regions, -1010,
                           ComplexPoint(-0.1, 1e-4), 3, params)
    assert r.outcome == "NotInK" and r.order == 1
    assert r.stages[0].f0_fate == 1430


def test_membership_certificate_near_boundary(default_map, regions, base257):
    # with a gap tolerance below the achievable Cauchy gap the stage
    # cannot trust its image; the image sits within two reference
    # pixels of the eps = 0 boundary, which upgrades the verdict
    bnd = boundary_slice(base257)
    params = MembershipParams((1200, 1600, 2000, 2400), 8.0, 3000,
                              boundary=bnd, gap_tol=1e-6)
    r = lavaurs_membership(default_map, regions, -1010,
                           ComplexPoint(-0.1, 1e-4), 3, params)
    assert r.outcome == "InJ1Certificate" and r.order == 1
    assert r.boundary_distance == pytest.approx(0.009338521400778, rel=1e-9)
    assert r.boundary_distance <= 2 * max(base257.grid.pitch)


def test_membership_undetermined_far_from_boundary(default_map, regions,
                                                   base257):
    # same distrusted-gap route, but the image lands well inside the
    # filled set; also exercises passing the escape raster itself as
    # the reference instead of its boundary
    params = MembershipParams((200, 400, 800, 1600), 8.0, 2000,
                              boundary=base257, gap_tol=1e-6)
    r = lavaurs_membership(default_map, regions, -12 + 3j,
                           ComplexPoint(-0.1, 1e-4), 3, params)
    assert r.outcome == "Undetermined" and r.order == 1
    assert r.boundary_distance == pytest.approx(0.168352588737618, rel=1e-9)


def test_discontinuity_scene_reduced_grid(default_map, regions):
    alpha = 5.0 - phi_iota(default_map, ComplexPoint(-0.0975, 0j),
                           tol=1e-9).value
    seq = make_alpha_sequence(alpha, (50, 100, 200, 400), regions)
    rep = discontinuity_report(default_map, regions, alpha, seq,
                               _grid(129, 2000), threads=8)
    assert isinstance(rep, DiscontinuityReport)
    assert int(rep.candidates.sum()) == 1
    assert len(rep.witnesses) == 1
    w = rep.witnesses[0]
    assert (w.ix, w.iy) == (81, 64)
    assert complex(w.point.x) == pytest.approx(-0.083720930232558, rel=1e-12)
    assert w.eps_steps == (46, 95, 194, 394)
    assert w.certificate_order == 1
    # the witness is one pixel outside every rung's bounded set
    assert rep.witness_jump == pytest.approx(_grid(129).pitch[0])
    assert rep.consistency_ok and rep.semicontinuity_ok
    assert all(d_from_base > 0.25 for _, d_from_base in rep.jumps)

    csv = witnesses_to_csv(rep)
    lines = csv.strip().split("\n")
    assert lines[0] == ("ix,iy,x_re,x_im,y_re,y_im,order,escape_step_n50,"
                        "escape_step_n100,escape_step_n200,escape_step_n400")
    assert len(lines) == 2
    assert lines[1].startswith("81,64,")

    digest = report_summary(rep)
    assert "witness pixels: 1" in digest
    assert "upper semicontinuity (2 px): True" in digest

    with pytest.raises(ConfigError, match="alpha disagrees"):
        discontinuity_report(default_map, regions, alpha + 1, seq,
                             _grid(129, 2000))


def test_discontinuity_needs_candidate_pixels(default_map, regions):
    # an even grid at this resolution puts every pixel row off the real
    # axis, outside the thin candidate cone
    alpha = 5.0 - phi_iota(default_map, ComplexPoint(-0.0975, 0j),
                           tol=1e-9).value
    seq = make_alpha_sequence(alpha, (50, 100, 200, 400), regions)
    with pytest.raises(InconclusiveScene, match="candidate"):
        discontinuity_report(default_map, regions, alpha, seq,
                             _grid(128, 2000), threads=8)
