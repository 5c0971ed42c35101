"""Filled-slice rasters and the discontinuity scene.

Rasters classify a rectangular slice of C^2 pixel by pixel: each cell
holds the first iterate at which the orbit leaves the escape ball, or
-1 when it never does within the budget.  On top of that sit the
Lavaurs membership certificates and the discontinuity report, which
compares the unperturbed bounded set against the intersection of the
perturbed ones along an alpha-ladder and extracts witness pixels that
are bounded at eps = 0 yet escape for every tested rung.

All rasters are deterministic: pixels are independent, so the threaded
renderer partitions rows without changing a single cell, and metadata
carries only content hashes, never timestamps.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import distance_transform_edt

from . import _kernels
from .errors import (
    ConfigError,
    DegenerateInput,
    GridMismatch,
    InconclusiveScene,
    NotRegular,
)
from .lavaurs import AlphaSequence, lavaurs_2d_estimate
from .mapfamily import ComplexPoint, PolyMap2, check_regularity, map_hash, packed


def _ckey(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}+{z.imag!r}j"


@dataclass(frozen=True)
class GridSpec:
    """A pixel grid spanning origin + s e1 + t e2, s, t in [0, 1).

    Pixel centers sit at s = (ix + 0.5)/nx, t = (iy + 0.5)/ny; the
    escape ball and iteration budget are part of the grid so that two
    rasters are comparable exactly when their grid hashes agree.  The
    escape_radius must exceed the family's escape bound (see
    escape_radius_bound) for the Escaped verdicts to be sound.
    """

    origin: ComplexPoint
    e1: ComplexPoint
    e2: ComplexPoint
    nx: int
    ny: int
    escape_radius: float
    max_iter: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ConfigError("grid needs at least 2 pixels per axis")
        if not self.escape_radius > 0:
            raise ConfigError("escape radius must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")

    @property
    def pitch(self):
        """(pitch_x, pitch_y): physical pixel size along e1 and e2."""
        return (self.e1.norm() / self.nx, self.e2.norm() / self.ny)

    @property
    def grid_hash(self) -> str:
        s = "|".join([
            _ckey(self.origin.x), _ckey(self.origin.y),
            _ckey(self.e1.x), _ckey(self.e1.y),
            _ckey(self.e2.x), _ckey(self.e2.y),
            str(self.nx), str(self.ny),
            repr(float(self.escape_radius)), str(self.max_iter),
        ])
        return hashlib.sha256(s.encode("ascii")).hexdigest()[:16]

    def pixel_center(self, ix: int, iy: int) -> ComplexPoint:
        s = (ix + 0.5) / self.nx
        t = (iy + 0.5) / self.ny
        return ComplexPoint(
            complex(self.origin.x) + s * complex(self.e1.x) + t * complex(self.e2.x),
            complex(self.origin.y) + s * complex(self.e1.y) + t * complex(self.e2.y))

    def locate(self, x: complex):
        """Pixel (ix, iy) whose cell contains the x-plane point, or None.

        Inverts the affine frame in the x coordinate only, so it is
        meaningful for slices whose spanning vectors live in the x
        plane (the y components are ignored).
        """
        a, b = complex(self.e1.x), complex(self.e2.x)
        det = a.real * b.imag - a.imag * b.real
        if abs(det) < 1e-300:
            raise DegenerateInput("grid does not span the x plane")
        d = complex(x) - complex(self.origin.x)
        s = (d.real * b.imag - d.imag * b.real) / det
        t = (a.real * d.imag - a.imag * d.real) / det
        ix, iy = math.floor(s * self.nx), math.floor(t * self.ny)
        if 0 <= ix < self.nx and 0 <= iy < self.ny:
            return ix, iy
        return None

    def centers(self):
        """Complex (ny, nx) arrays of pixel-center x and y coordinates."""
        s = (np.arange(self.nx) + 0.5) / self.nx
        t = (np.arange(self.ny) + 0.5) / self.ny
        xs = (complex(self.origin.x)
              + s[None, :] * complex(self.e1.x)
              + t[:, None] * complex(self.e2.x))
        ys = (complex(self.origin.y)
              + s[None, :] * complex(self.e1.y)
              + t[:, None] * complex(self.e2.y))
        return xs, ys


@dataclass(frozen=True)
class Raster:
    """Pixel classifications on a grid.

    Escape rasters (kind "escape") store -1 for bounded cells and the
    escape step k >= 0 otherwise; binary rasters (kind "boundary")
    store 0/1.
    """

    grid: GridSpec
    cells: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def bounded(self) -> np.ndarray:
        return self.cells < 0

    @property
    def pixel_set(self) -> np.ndarray:
        """The raster's occupied set: bounded cells, or 1-cells if binary."""
        if self.meta.get("kind") == "boundary":
            return self.cells != 0
        return self.cells < 0


def _resolve_threads(threads) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("IMPLAB_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def escape_radius_bound(m: PolyMap2, eps_cap: float = 0.1) -> float:
    """An empirical escape bound: outside it, one step doubles the norm.

    Scans a deterministic angular net on spheres of growing radius
    until |F_eps(p)| >= 2|p| holds at every sample for every |eps| up
    to eps_cap, bisects down to the threshold, spot-checks the doubled
    radii, and returns twice the threshold as the working margin.
    """
    ae, ac, be, bc = packed(m)
    eps_vals = (0j, complex(eps_cap), complex(eps_cap) * 1j)

    def doubles(r: float) -> bool:
        for it in range(5):
            th = (it + 0.5) * math.pi / 10.0
            cx, cy = r * math.cos(th), r * math.sin(th)
            for a in range(16):
                x = cx * complex(math.cos(2 * math.pi * a / 16),
                                 math.sin(2 * math.pi * a / 16))
                for b in range(16):
                    y = cy * complex(math.cos(2 * math.pi * b / 16),
                                     math.sin(2 * math.pi * b / 16))
                    for eps in eps_vals:
                        u, v = _kernels.f_step(ae, ac, be, bc,
                                               m.eps2_alpha, m.eps2_beta,
                                               eps, x, y)
                        if abs(u) * abs(u) + abs(v) * abs(v) < 4 * r * r:
                            return False
        return True

    r = 1.0
    while not doubles(r):
        r *= 2.0
        if r > 2.0 ** 40:
            raise DegenerateInput("no doubling radius found")
    lo, hi = r / 2.0, r
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        if doubles(mid):
            hi = mid
        else:
            lo = mid
    for probe in (2 * hi, 4 * hi):
        if not doubles(probe):
            hi = probe
    return 2.0 * hi


def escape_classify(m: PolyMap2, eps: complex, p: ComplexPoint, grid: GridSpec):
    """Escape step of p under F_eps within the grid's budget, None if bounded."""
    eps = complex(eps)
    regular, _ = check_regularity(m, eps)
    if not regular:
        raise NotRegular("the top-degree forms share a zero; escape "
                         "classification is unreliable for this family")
    ae, ac, be, bc = packed(m)
    k = _kernels.orbit_escape(ae, ac, be, bc, m.eps2_alpha, m.eps2_beta, eps,
                              complex(p.x), complex(p.y), grid.max_iter,
                              float(grid.escape_radius) ** 2)
    return None if k < 0 else int(k)


_ROW_BLOCK = 16


def render_K_slice(m: PolyMap2, eps: complex, grid: GridSpec,
                   threads=None) -> Raster:
    """Rasterize the filled slice of F_eps on the grid.

    Pixels are classified independently, so the row-block partition
    only affects wall time: the cells are bit-identical for any thread
    count.
    """
    eps = complex(eps)
    regular, _ = check_regularity(m, eps)
    if not regular:
        raise NotRegular("the top-degree forms share a zero; the escape "
                         "rasterizer needs a regular family")
    ae, ac, be, bc = packed(m)
    cells = np.empty((grid.ny, grid.nx), dtype=np.int32)
    r2 = float(grid.escape_radius) ** 2
    head = (ae, ac, be, bc, m.eps2_alpha, m.eps2_beta, eps,
            complex(grid.origin.x), complex(grid.origin.y),
            complex(grid.e1.x), complex(grid.e1.y),
            complex(grid.e2.x), complex(grid.e2.y),
            grid.nx, grid.ny)
    spans = [(iy, min(iy + _ROW_BLOCK, grid.ny))
             for iy in range(0, grid.ny, _ROW_BLOCK)]
    n = _resolve_threads(threads)
    if n <= 1 or len(spans) == 1:
        for iy0, iy1 in spans:
            _kernels.raster_block(*head, iy0, iy1, grid.max_iter, r2, cells)
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            futures = [pool.submit(_kernels.raster_block, *head, iy0, iy1,
                                   grid.max_iter, r2, cells)
                       for iy0, iy1 in spans]
            for fut in futures:
                fut.result()
    meta = {
        "kind": "escape",
        "map": map_hash(m),
        "eps": [eps.real, eps.imag],
        "grid": grid.grid_hash,
        "escape_radius": float(grid.escape_radius),
        "max_iter": int(grid.max_iter),
        "bounded": int((cells < 0).sum()),
    }
    return Raster(grid, cells, meta)


def boundary_slice(raster: Raster) -> Raster:
    """Inner boundary raster: bounded pixels with an escaped 4-neighbor.

    Bounded pixels on the raster frame count only through neighbors
    inside the raster, so a bounded set touching the frame is not
    boundary there.  The result is binary (kind "boundary").
    """
    b = raster.bounded
    esc = ~b
    near = np.zeros_like(b)
    near[1:, :] |= esc[:-1, :]
    near[:-1, :] |= esc[1:, :]
    near[:, 1:] |= esc[:, :-1]
    near[:, :-1] |= esc[:, 1:]
    mask = b & near
    meta = dict(raster.meta)
    meta["kind"] = "boundary"
    meta["bounded"] = int(mask.sum())
    return Raster(raster.grid, mask.astype(np.int32), meta)


def hausdorff_grid(a: Raster, b: Raster, mask_a=None, mask_b=None):
    """Directed grid distances (d_ab, d_ba) between two rasters' sets.

    d_ab is the farthest a-pixel's distance to the b set (so the
    symmetric Hausdorff distance is max(d_ab, d_ba)), measured in
    physical units via the grid pitch.  Defaults to each raster's
    pixel_set; pass explicit boolean masks to compare other sets.  A
    directed distance from an empty set is 0, to an empty set is
    infinite.
    """
    if a.grid.grid_hash != b.grid.grid_hash:
        raise GridMismatch("rasters live on different grids")
    ma = a.pixel_set if mask_a is None else np.asarray(mask_a, dtype=bool)
    mb = b.pixel_set if mask_b is None else np.asarray(mask_b, dtype=bool)
    if ma.shape != mb.shape:
        raise GridMismatch("mask shapes disagree")
    px, py = a.grid.pitch
    sampling = (py, px)

    def directed(src, dst):
        if not src.any():
            return 0.0
        if not dst.any():
            return math.inf
        return float(distance_transform_edt(~dst, sampling=sampling)[src].max())

    return directed(ma, mb), directed(mb, ma)


def write_ppm(path, raster: Raster, boundary=None) -> None:
    """Write a binary PPM (bounded black, escaped white, boundary red).

    A JSON sidecar <path>.json carries the raster metadata and grid
    hash; both files are deterministic byte for byte.
    """
    ny, nx = raster.cells.shape
    img = np.full((ny, nx, 3), 255, dtype=np.uint8)
    img[raster.pixel_set] = (0, 0, 0)
    if boundary is not None:
        bmask = boundary.pixel_set if isinstance(boundary, Raster) \
            else np.asarray(boundary, dtype=bool)
        img[bmask] = (255, 0, 0)
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (nx, ny))
        fh.write(img.tobytes())
    with open(str(path) + ".json", "w", encoding="ascii") as fh:
        json.dump(dict(raster.meta), fh, sort_keys=True)
        fh.write("\n")


# --- Lavaurs membership certificates ---


@dataclass(frozen=True)
class MembershipParams:
    """Budget and ladder for empirical Lavaurs membership.

    max_iter must cover the longest rung so a bounded verdict implies
    the transit prefix stayed in the ball; boundary optionally carries
    a reference eps = 0 raster (a rendered slice or its boundary) for
    near-boundary certificates.
    """

    n_list: tuple
    escape_radius: float
    max_iter: int
    boundary: Raster | None = None
    gap_tol: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if not self.n_list:
            raise ConfigError("empty ladder")
        if self.max_iter < max(self.n_list):
            raise ConfigError("max_iter must cover the longest ladder rung")
        if not self.escape_radius > 0:
            raise ConfigError("escape radius must be positive")


@dataclass(frozen=True)
class MembershipStage:
    """One Lavaurs application: transit images and their fates."""

    stage: int
    images: tuple        # per-rung transit images of the stage input
    transit_escapes: tuple   # per-rung escape step during transit, None if not
    gap: float | None
    f0_fate: int | None = None   # escape step of the estimate under F_0


@dataclass(frozen=True)
class MembershipResult:
    outcome: str       # InK | NotInK | InJ1Certificate | Undetermined
    order: int         # Lavaurs applications behind the verdict
    stages: tuple
    boundary_distance: float | None = None


def _f0_fate(m: PolyMap2, p: ComplexPoint, params: MembershipParams) -> int:
    ae, ac, be, bc = packed(m)
    return int(_kernels.orbit_escape(
        ae, ac, be, bc, m.eps2_alpha, m.eps2_beta, 0j,
        complex(p.x), complex(p.y), params.max_iter,
        float(params.escape_radius) ** 2))


def _near_boundary(params: MembershipParams, p: ComplexPoint):
    """(is_near, distance) of p to the reference boundary set."""
    ref = params.boundary
    if ref is None:
        return False, None
    if ref.meta.get("kind") == "boundary":
        mask = ref.cells != 0
    else:
        mask = boundary_slice(ref).cells != 0
    if not mask.any():
        return False, None
    loc = ref.grid.locate(complex(p.x))
    if loc is None:
        return False, None
    px, py = ref.grid.pitch
    dist = distance_transform_edt(~mask, sampling=(py, px))
    ix, iy = loc
    d = float(dist[iy, ix])
    return d <= 2.0 * max(px, py), d


def lavaurs_membership(m: PolyMap2, cfg, alpha: complex, p: ComplexPoint,
                       m_max: int, params: MembershipParams) -> MembershipResult:
    """Certify p against the Lavaurs-enriched filled set, empirically.

    Stage 0 classifies p itself under F_0 (an escape is NotInK at
    order 0, no Lavaurs estimate needed).  Each further stage estimates
    the Lavaurs image of the current point along the ladder:

    * every rung escaping during transit means the image lies outside
      the escape ball at every tested rung, a NotInK certificate;
    * all rungs bounded with a Cauchy gap within gap_tol gives a
      trusted image; if it and the previous rung's image agree that
      the F_0 orbit escapes, that is NotInK at this order, if both
      stay bounded the image feeds the next stage, and surviving all
      m_max stages is InK;
    * disagreeing rungs, or a gap above gap_tol, straddle a
      classification boundary: with a reference raster whose boundary
      passes within two pixels of the image the stage certifies
      InJ1Certificate, otherwise the honest verdict is Undetermined.

    The escape_radius must be a true escape bound for the family (see
    escape_radius_bound); every NotInK verdict leans on it.
    """
    if m_max < 0:
        raise ConfigError("m_max must be nonnegative")
    k0 = _f0_fate(m, p, params)
    if k0 >= 0:
        return MembershipResult("NotInK", 0, ())
    cur = p
    stages = []
    for stage in range(1, m_max + 1):
        est = lavaurs_2d_estimate(m, cfg, alpha, cur, params.n_list,
                                  params.escape_radius, strict=False)
        images = tuple(row.image for row in est.rows)
        transits = tuple(row.escaped_at for row in est.rows)
        rec = MembershipStage(stage, images, transits, est.cauchy_gap)
        if all(t is not None for t in transits):
            stages.append(rec)
            return MembershipResult("NotInK", stage, tuple(stages))
        if any(t is not None for t in transits) or est.cauchy_gap is None \
                or est.cauchy_gap > params.gap_tol:
            stages.append(rec)
            probe = next((img for img, t in zip(reversed(images),
                                                reversed(transits))
                          if t is None), None)
            if probe is not None:
                near, d = _near_boundary(params, probe)
                if near:
                    return MembershipResult("InJ1Certificate", stage,
                                            tuple(stages), d)
                return MembershipResult("Undetermined", stage,
                                        tuple(stages), d)
            return MembershipResult("Undetermined", stage, tuple(stages))
        fate = _f0_fate(m, est.estimate, params)
        fate_prev = _f0_fate(m, images[-2], params) if len(images) >= 2 else fate
        rec = MembershipStage(stage, images, transits, est.cauchy_gap, fate)
        stages.append(rec)
        if fate >= 0 and fate_prev >= 0:
            return MembershipResult("NotInK", stage, tuple(stages))
        if fate < 0 and fate_prev < 0:
            cur = est.estimate
            continue
        near, d = _near_boundary(params, est.estimate)
        if near:
            return MembershipResult("InJ1Certificate", stage, tuple(stages), d)
        return MembershipResult("Undetermined", stage, tuple(stages), d)
    return MembershipResult("InK", m_max, tuple(stages))


# --- the discontinuity scene ---


@dataclass(frozen=True)
class WitnessRow:
    """A pixel bounded at eps = 0, certified NotInK, escaping every rung."""

    ix: int
    iy: int
    point: ComplexPoint
    eps_steps: tuple     # per-rung escape step of the pixel's orbit
    certificate_order: int


@dataclass(frozen=True)
class DiscontinuityReport:
    alpha: complex
    seq: AlphaSequence
    base: Raster
    per_eps: tuple
    proxy: np.ndarray        # pixels bounded at every tested rung
    candidates: np.ndarray   # cone patch searched for witnesses
    witnesses: tuple
    jumps: tuple             # per-rung (d(K_eps -> K_0), d(K_0 -> K_eps))
    witness_jump: float      # best witness distance to a rung's bounded set
    consistency_ok: bool     # no NotInK-certified pixel in the proxy
    semicontinuity_ok: bool  # proxy inside the 2-pixel fattening of the base


def discontinuity_report(m: PolyMap2, cfg, alpha: complex, seq: AlphaSequence,
                         grid: GridSpec, threads=None,
                         band=(-0.12, -0.08), m_max: int = 2) -> DiscontinuityReport:
    """Render the base and ladder slices and extract discontinuity data.

    The candidate patch is the part of the widened incoming cone whose
    real part lies in band.  Candidates bounded at eps = 0 and escaping
    at every rung are run through lavaurs_membership; those certified
    NotInK become witnesses, each with its per-rung escape steps.  The
    report also measures directed Hausdorff jumps between the bounded
    sets, a witness-based lower bound for the jump, the consistency of
    the certificates with the limsup proxy, and one-sided
    semicontinuity (every always-bounded pixel within two pixels of
    the base set).  Scenes without candidates or without witnesses
    raise InconclusiveScene rather than report weak evidence.
    """
    if complex(alpha) != complex(seq.alpha):
        raise ConfigError("alpha disagrees with the supplied sequence")
    base = render_K_slice(m, 0.0, grid, threads)
    per = tuple(render_K_slice(m, eps, grid, threads) for eps in seq.eps_list)

    bounded0 = base.bounded
    proxy = np.logical_and.reduce([r.bounded for r in per])
    esc_all = np.logical_and.reduce([~r.bounded for r in per])

    xs, ys = grid.centers()
    rex, imx = xs.real, xs.imag
    cand = ((rex >= band[0]) & (rex <= band[1])
            & (imx <= -cfg.gamma_prime * rex) & (-imx <= -cfg.gamma_prime * rex)
            & (np.abs(xs) <= cfg.R) & (np.abs(ys) <= cfg.s * np.abs(xs)))
    if not cand.any():
        raise InconclusiveScene("no grid pixel falls in the candidate cone "
                                "patch; refine the grid or widen the band")

    mparams = MembershipParams(seq.n_list, grid.escape_radius, grid.max_iter,
                               boundary=base)
    wmask = cand & bounded0 & esc_all
    certified = np.zeros_like(wmask)
    wit = []
    for iy, ix in zip(*np.nonzero(wmask)):
        point = ComplexPoint(xs[iy, ix], ys[iy, ix])
        verdict = lavaurs_membership(m, cfg, seq.alpha, point, m_max, mparams)
        if verdict.outcome != "NotInK":
            continue
        certified[iy, ix] = True
        wit.append(WitnessRow(int(ix), int(iy), point,
                              tuple(int(r.cells[iy, ix]) for r in per),
                              verdict.order))
    if not wit:
        raise InconclusiveScene("no candidate pixel is bounded at eps = 0, "
                                "escaping at every rung, and certified NotInK")

    consistency_ok = not bool((certified & proxy).any())
    jumps = tuple(hausdorff_grid(r, base) for r in per)
    px, py = grid.pitch
    wjump = 0.0
    for r in per:
        if not r.bounded.any():
            wjump = math.inf
            continue
        dist = distance_transform_edt(~r.bounded, sampling=(py, px))
        for w in wit:
            wjump = max(wjump, float(dist[w.iy, w.ix]))
    dpix = distance_transform_edt(~bounded0)
    semicontinuity_ok = bool(np.all(dpix[proxy] <= 2.0 + 1e-9))
    return DiscontinuityReport(seq.alpha, seq, base, per, proxy, cand,
                               tuple(wit), jumps, wjump, consistency_ok,
                               semicontinuity_ok)


def witnesses_to_csv(report: DiscontinuityReport) -> str:
    """One row per witness pixel with its per-rung escape steps."""
    ns = report.seq.n_list
    head = ["ix", "iy", "x_re", "x_im", "y_re", "y_im", "order"]
    head += [f"escape_step_n{n}" for n in ns]
    lines = [",".join(head)]
    for w in report.witnesses:
        x, y = complex(w.point.x), complex(w.point.y)
        row = [str(w.ix), str(w.iy), repr(x.real), repr(x.imag),
               repr(y.real), repr(y.imag), str(w.certificate_order)]
        row += [str(k) for k in w.eps_steps]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def report_summary(report: DiscontinuityReport) -> str:
    """Plain-text digest of a discontinuity report."""
    a = complex(report.alpha)
    lines = [
        f"phase alpha = {a.real!r} {a.imag!r}",
        "ladder: " + " ".join(f"(n={n}, eps={complex(e).real:.6g}"
                              f"{complex(e).imag:+.3g}j)"
                              for e, n in report.seq.entries),
        f"base bounded pixels: {int(report.base.bounded.sum())}",
        f"always-bounded (limsup proxy) pixels: {int(report.proxy.sum())}",
        f"candidate pixels: {int(report.candidates.sum())}",
        f"witness pixels: {len(report.witnesses)}",
        f"witness jump lower bound: {report.witness_jump!r}",
        "per-rung directed distances (to base, from base): "
        + " ".join(f"({d1:.4g}, {d2:.4g})" for d1, d2 in report.jumps),
        f"certified-out vs proxy consistent: {report.consistency_ok}",
        f"upper semicontinuity (2 px): {report.semicontinuity_ok}",
    ]
    return "\n".join(lines) + "\n"
