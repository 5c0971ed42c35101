"""Empirical Lavaurs maps along epsilon ladders of bounded type.

A phase alpha and a ladder n_0 < n_1 < ... are coupled through
eps_nu = pi / (n_nu - alpha), so that n_nu - pi/eps_nu = alpha exactly.
The transit images F_{eps_nu}^{n_nu}(p) then converge, as nu grows, to
the Lavaurs map with phase alpha, which on the invariant line is the
composition psi_out(alpha + phi_in(x)).  The maps here measure that
convergence and the semiconjugacy defect |phi_out(T p) - alpha -
phi_in(p)| directly, without assuming the limit exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .errors import (
    ConfigError,
    DomainViolation,
    ImageNotInRepellingBasin,
    OrbitEscaped,
    SectorViolation,
)
from .fatou import phi_iota, phi_o, psi_o_line
from .mapfamily import ComplexPoint, PolyMap2, iterate, packed
from .regions import DEFAULT_REGIONS, eps_in_sector, in_C0


@dataclass(frozen=True)
class AlphaSequence:
    """A phase alpha with its ladder n_nu and eps_nu = pi/(n_nu - alpha)."""

    alpha: complex
    n_list: tuple
    eps_list: tuple

    @property
    def entries(self):
        return tuple(zip(self.eps_list, self.n_list))


def make_alpha_sequence(alpha: complex, n_list, cfg=None) -> AlphaSequence:
    """Couple a ladder of iterate counts to eps values with phase alpha.

    Each n must exceed |alpha| + 1 so the eps land in the right half
    plane, and every eps must fall in the parameter sector of cfg
    (the default region config when none is given); offending ladder
    indices are reported in SectorViolation.
    """
    alpha = complex(alpha)
    ns = tuple(int(n) for n in n_list)
    if not ns:
        raise ConfigError("empty ladder")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("ladder must be strictly increasing")
    if ns[0] <= abs(alpha) + 1:
        raise DomainViolation(
            f"ladder starts at {ns[0]}, need n > |alpha| + 1 = {abs(alpha) + 1}")
    eps = tuple(math.pi / (n - alpha) for n in ns)
    sector_cfg = DEFAULT_REGIONS if cfg is None else cfg
    bad = [nu for nu, e in enumerate(eps) if not eps_in_sector(sector_cfg, e)]
    if bad:
        raise SectorViolation(bad)
    return AlphaSequence(alpha, ns, eps)


def lavaurs_1d(m: PolyMap2, alpha: complex, x: complex,
               tol: float = 1e-10) -> complex:
    """One-dimensional Lavaurs value psi_out(alpha + phi_in(x)) on y = 0."""
    val = phi_iota(m, ComplexPoint(x, 0j), tol=tol).value
    return psi_o_line(m, complex(alpha) + val, tol=tol)


@dataclass(frozen=True)
class TransitImage:
    """One rung of the ladder: the image F_eps^n(p) and its escape flag."""

    nu: int
    eps: complex
    n: int
    image: ComplexPoint
    escaped_at: int | None = None


@dataclass(frozen=True)
class LavaursEstimate:
    """Transit images along a ladder with the final Cauchy gap."""

    alpha: complex
    p: ComplexPoint
    rows: tuple
    cauchy_gap: float | None
    source: AlphaSequence | None = None

    @property
    def estimate(self) -> ComplexPoint:
        return self.rows[-1].image

    @property
    def values(self):
        return tuple(row.image for row in self.rows)


def lavaurs_2d_estimate(m: PolyMap2, cfg, alpha: complex, p: ComplexPoint,
                        n_list, ball: float = 8.0,
                        strict: bool = True) -> LavaursEstimate:
    """Empirical Lavaurs images F_{eps_nu}^{n_nu}(p) along a ladder.

    Orbits are cut off once they leave the ball of the given radius;
    intermediate rungs that escape are only flagged, but an escape on
    the last rung leaves no estimate and raises OrbitEscaped (pass
    strict=False to get the flagged rows anyway).  The cauchy_gap
    compares the last two rungs (None when either escaped or the
    ladder has one rung).
    """
    seq = make_alpha_sequence(alpha, n_list, cfg)
    ae, ac, be, bc = packed(m)
    r2 = float(ball) * float(ball)
    rows = []
    for nu, (eps, n) in enumerate(zip(seq.eps_list, seq.n_list)):
        x, y, k = _kernels.forward_escape(
            ae, ac, be, bc, m.eps2_alpha, m.eps2_beta, eps,
            complex(p.x), complex(p.y), n, r2)
        rows.append(TransitImage(nu, eps, n, ComplexPoint(x, y),
                                 None if k < 0 else int(k)))
    if strict and rows[-1].escaped_at is not None:
        raise OrbitEscaped(len(rows) - 1)
    gap = None
    if (len(rows) >= 2 and rows[-1].escaped_at is None
            and rows[-2].escaped_at is None):
        a, b = rows[-1].image, rows[-2].image
        gap = math.hypot(abs(a.x - b.x), abs(a.y - b.y))
    return LavaursEstimate(seq.alpha, p, tuple(rows), gap, seq)


def semiconjugacy_residual(m: PolyMap2, cfg, alpha: complex, p: ComplexPoint,
                           n_list, tol: float = 1e-9) -> float:
    """Measure |phi_out(T p) - alpha - phi_in(p)| at the last ladder rung.

    T p is the final transit image F_eps^n(p); it must land in the
    outgoing cone, where phi_out is trustworthy.  An image outside it
    (for instance when the phase puts the exit beyond the cone radius)
    raises ImageNotInRepellingBasin.
    """
    seq = make_alpha_sequence(alpha, n_list, cfg)
    eps, n = seq.entries[-1]
    img = iterate(m, eps, p, n).final
    if not img.is_finite() or not in_C0(cfg, ComplexPoint(-img.x, img.y)):
        raise ImageNotInRepellingBasin(
            f"transit image ({img.x}, {img.y}) is outside the outgoing cone")
    a = phi_iota(m, p, tol=tol).value
    b = phi_o(m, img, tol=tol).value
    return abs(b - (seq.alpha + a))


CSV_HEADER = ("alpha_re,alpha_im,nu,eps_re,eps_im,n,"
              "p_x_re,p_x_im,p_y_re,p_y_im,"
              "image_x_re,image_x_im,image_y_re,image_y_im,"
              "cauchy_gap,residual")


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def estimates_to_csv(estimates, residuals=None) -> str:
    """Serialize ladder estimates (one line per rung) for the CLI.

    When a parallel list of semiconjugacy residuals is given, each
    estimate's residual is written on its last rung, next to the
    Cauchy gap.
    """
    lines = [CSV_HEADER]
    for i, est in enumerate(estimates):
        res = residuals[i] if residuals is not None else None
        last = est.rows[-1].nu
        for row in est.rows:
            tail_gap = est.cauchy_gap if row.nu == last else None
            tail_res = res if row.nu == last else None
            lines.append(",".join([
                _fmt(est.alpha.real), _fmt(est.alpha.imag),
                str(row.nu),
                _fmt(row.eps.real), _fmt(row.eps.imag),
                str(row.n),
                _fmt(complex(est.p.x).real), _fmt(complex(est.p.x).imag),
                _fmt(complex(est.p.y).real), _fmt(complex(est.p.y).imag),
                _fmt(complex(row.image.x).real), _fmt(complex(row.image.x).imag),
                _fmt(complex(row.image.y).real), _fmt(complex(row.image.y).imag),
                _fmt(tail_gap), _fmt(tail_res),
            ]))
    return "\n".join(lines) + "\n"
