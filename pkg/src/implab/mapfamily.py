"""The perturbed polynomial family and its pointwise operations.

The family acting on C^2 is

    F_eps(x, y) = (x + (x^2 + eps^2) * A(x, y),
                   y * B(x, y))

where A = 1 + (q+1)x + ry + extras + e2a*eps^2 and
B = 1 + rho*x + extras + e2b*eps^2, all extras of total order >= 2.
At eps = 0 the origin is a fixed point with identity linear part; the
quadratic jet (x^2, rho*x*y) has the characteristic direction [1:0]
along the invariant line y = 0 with director rho - 1.  For eps != 0
the double fixed point splits into x = +-i*eps on y = 0.

Besides evaluation and (Newton) inversion this module provides the
half-return map H = sigma o F^{-1} o sigma with sigma(x,y) = (-x,y),
characteristic-direction and director computations for quadratic jets,
and a regularity check on the top-degree forms of the components
(no common projective root <=> the map extends to a well-defined
endomorphism degreewise, which the escape-time rasters rely on).
"""

from __future__ import annotations

import functools
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    ConfigError,
    DegenerateDirection,
    DegenerateInput,
    NoConvergence,
    OutsideInvertibleRegion,
)

#: points farther from the origin than this are rejected by the inverse;
#: the Newton seed (second-order inverse expansion) is only trustworthy
#: well inside the region where the family is close to its normal form.
INVERT_RADIUS = 0.5


@dataclass(frozen=True)
class ComplexPoint:
    """A point of C^2."""

    x: complex
    y: complex

    def norm(self) -> float:
        return math.hypot(abs(self.x), abs(self.y))

    def is_finite(self) -> bool:
        return (math.isfinite(self.x.real) and math.isfinite(self.x.imag)
                and math.isfinite(self.y.real) and math.isfinite(self.y.imag))


def _normalized_extras(extras, what: str):
    out = []
    for row in extras:
        if len(row) != 3:
            raise ConfigError(f"{what} rows must be (i, j, coeff), got {row!r}")
        i, j, c = row
        if int(i) != i or int(j) != j or i < 0 or j < 0:
            raise ConfigError(f"{what} exponents must be nonnegative integers")
        if i + j < 2:
            raise ConfigError(f"{what} terms must have total order >= 2")
        out.append((int(i), int(j), complex(c)))
    return tuple(out)


@dataclass(frozen=True)
class PolyMap2:
    """Coefficients of one member family F_eps.

    q, r are the linear coefficients of the first bracket
    (A = 1 + (q+1)x + ry + ...), rho > 1 the vertical multiplier slope,
    and the extras are packed monomial rows (i, j, coeff) of total
    order >= 2.  eps2_alpha / eps2_beta are the O(eps^2) corrections of
    the two brackets.
    """

    q: complex = 0j
    r: complex = 1 + 0j
    rho: float = 2.0
    alpha_extra: tuple = ((2, 0, 1 + 0j), (0, 2, 1 + 0j))
    beta_extra: tuple = ((0, 3, 1 + 0j),)
    eps2_alpha: complex = 0j
    eps2_beta: complex = 0j

    def __post_init__(self):
        if isinstance(self.rho, complex):
            if self.rho.imag != 0:
                raise ConfigError("rho must be real")
            object.__setattr__(self, "rho", self.rho.real)
        rho = float(self.rho)
        if not rho > 1.0:
            raise ConfigError(f"rho must exceed 1, got {rho}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "r", complex(self.r))
        object.__setattr__(self, "eps2_alpha", complex(self.eps2_alpha))
        object.__setattr__(self, "eps2_beta", complex(self.eps2_beta))
        object.__setattr__(self, "alpha_extra",
                           _normalized_extras(self.alpha_extra, "alpha_extra"))
        object.__setattr__(self, "beta_extra",
                           _normalized_extras(self.beta_extra, "beta_extra"))


DEFAULT_MAP = PolyMap2()


@functools.lru_cache(maxsize=128)
def packed(m: PolyMap2):
    """Packed monomial arrays (ae, ac, be, bc) of the two brackets."""
    a_rows = [(0, 0, 1 + 0j), (1, 0, m.q + 1), (0, 1, m.r)] + list(m.alpha_extra)
    b_rows = [(0, 0, 1 + 0j), (1, 0, complex(m.rho))] + list(m.beta_extra)
    ae = np.array([(i, j) for i, j, _ in a_rows], dtype=np.int64)
    ac = np.array([c for *_, c in a_rows], dtype=np.complex128)
    be = np.array([(i, j) for i, j, _ in b_rows], dtype=np.int64)
    bc = np.array([c for *_, c in b_rows], dtype=np.complex128)
    return ae, ac, be, bc


def map_key(m: PolyMap2) -> str:
    """Canonical text form of the coefficients (stable across runs)."""
    parts = [f"q={m.q!r}", f"r={m.r!r}", f"rho={m.rho!r}",
             "ae=" + ";".join(f"{i},{j},{c!r}" for i, j, c in m.alpha_extra),
             "be=" + ";".join(f"{i},{j},{c!r}" for i, j, c in m.beta_extra),
             f"e2a={m.eps2_alpha!r}", f"e2b={m.eps2_beta!r}"]
    return "|".join(parts)


def map_hash(m: PolyMap2) -> str:
    return hashlib.sha256(map_key(m).encode()).hexdigest()[:16]


def eval_F(m: PolyMap2, eps: complex, p: ComplexPoint) -> ComplexPoint:
    """One forward step of F_eps."""
    ae, ac, be, bc = packed(m)
    x, y = _kernels.f_step(ae, ac, be, bc, m.eps2_alpha, m.eps2_beta,
                           complex(eps), complex(p.x), complex(p.y))
    return ComplexPoint(x, y)


def eval_F_inverse(m: PolyMap2, eps: complex, p: ComplexPoint,
                   tol: float = 1e-12,
                   radius: float = INVERT_RADIUS) -> ComplexPoint:
    """The local inverse branch of F_eps near the origin.

    Damped Newton from the second-order inverse expansion
    (x - (x^2+eps^2)(1 + (q-1)x + ry), y(1 - rho x)).  The residual
    test is relative to |x| + |y| of the target, so the returned point
    satisfies ||F_eps(z) - p|| < tol for every admissible p while deep
    orbit tails keep full relative accuracy.
    """
    if p.norm() > radius:
        raise OutsideInvertibleRegion(
            f"|p| = {p.norm():.3g} exceeds the invertible radius {radius}")
    ae, ac, be, bc = packed(m)
    x, y, ok = _kernels.f_inv(ae, ac, be, bc, m.eps2_alpha, m.eps2_beta,
                              complex(eps), complex(p.x), complex(p.y),
                              tol, 80)
    if not ok:
        raise NoConvergence(f"inverse Newton stalled at p = ({p.x}, {p.y})")
    return ComplexPoint(x, y)


def eval_H(m: PolyMap2, eps: complex, p: ComplexPoint,
           tol: float = 1e-12) -> ComplexPoint:
    """Half-return map sigma o F_eps^{-1} o sigma, sigma(x,y) = (-x,y).

    Conjugating the inverse by the gate reflection flips the sign of q
    relative to the forward family, which is what glues the outgoing
    chart of F to the incoming chart of H.
    """
    z = eval_F_inverse(m, eps, ComplexPoint(-p.x, p.y), tol=tol)
    return ComplexPoint(-z.x, z.y)


@dataclass(frozen=True)
class OrbitResult:
    """Outcome of a finite forward iteration."""

    final: ComplexPoint
    escaped_at: int | None = None
    trace: tuple = field(default=None, repr=False)

    @property
    def escaped(self) -> bool:
        return self.escaped_at is not None


def iterate(m: PolyMap2, eps: complex, p: ComplexPoint, n: int,
            escape_radius: float | None = None,
            trace: bool = False) -> OrbitResult:
    """n forward steps with optional escape detection and orbit trace.

    escaped_at is the first k <= n with ||F^k(p)|| > escape_radius
    (k = 0 tests p itself); iteration stops there.
    """
    ae, ac, be, bc = packed(m)
    eps = complex(eps)
    if trace:
        pts = [p]
        cur = p
        for k in range(n + 1):
            if escape_radius is not None and \
                    (not cur.is_finite() or cur.norm() > escape_radius):
                return OrbitResult(cur, escaped_at=k, trace=tuple(pts))
            if k == n:
                break
            cur = eval_F(m, eps, cur)
            pts.append(cur)
        return OrbitResult(cur, trace=tuple(pts))
    if escape_radius is None:
        x, y = _kernels.forward_n(ae, ac, be, bc, m.eps2_alpha, m.eps2_beta,
                                  eps, complex(p.x), complex(p.y), n)
        return OrbitResult(ComplexPoint(x, y))
    x, y, k = _kernels.forward_escape(ae, ac, be, bc, m.eps2_alpha,
                                      m.eps2_beta, eps,
                                      complex(p.x), complex(p.y), n,
                                      float(escape_radius) ** 2)
    return OrbitResult(ComplexPoint(x, y), escaped_at=(k if k >= 0 else None))


# --- quadratic jets: characteristic directions and directors ---


@dataclass(frozen=True)
class HomogeneousPair:
    """A pair (P, Q) of quadratic forms, coefficients (xx, xy, yy)."""

    p: tuple
    q: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(complex(c) for c in self.p))
        object.__setattr__(self, "q", tuple(complex(c) for c in self.q))
        if len(self.p) != 3 or len(self.q) != 3:
            raise ConfigError("quadratic forms need exactly 3 coefficients")


@dataclass(frozen=True)
class CharDirection:
    """A projective direction [a:b] with its degeneracy flag."""

    a: complex
    b: complex
    degenerate: bool


def quadratic_part(m: PolyMap2) -> HomogeneousPair:
    """Quadratic jet of F_0 at the origin: (x^2, rho*x*y)."""
    return HomogeneousPair((1, 0, 0), (0, m.rho, 0))


def _form(coeffs, a, b):
    c0, c1, c2 = coeffs
    return c0 * a * a + c1 * a * b + c2 * b * b


def characteristic_directions(pq: HomogeneousPair, tol: float = 1e-9):
    """All characteristic directions of the jet (P, Q).

    On the affine chart [1:u] these are the roots of
    r(u) = Q(1,u) - u*P(1,u) (companion-matrix eigenvalues); the
    direction [0:1] is characteristic iff P(0,1) = 0.  A direction is
    flagged degenerate when both forms vanish along it.
    """
    p20, p11, p02 = pq.p
    q20, q11, q02 = pq.q
    scale = max(abs(c) for c in pq.p + pq.q)
    if scale == 0:
        raise DegenerateInput("both quadratic forms vanish identically")
    coeffs = np.array([-p02, q02 - p11, q11 - p20, q20], dtype=complex)
    if np.all(np.abs(coeffs) <= tol * scale):
        raise DegenerateInput("Q(1,u) - u P(1,u) vanishes identically; "
                              "every direction is characteristic")
    roots = np.roots(coeffs)
    out = []
    seen: list[complex] = []
    for u in roots:
        if any(abs(u - v) <= tol * (1 + abs(v)) for v in seen):
            continue
        seen.append(u)
        unit = (1 + abs(u)) ** 2
        degenerate = (abs(_form(pq.p, 1, u)) <= tol * scale * unit
                      and abs(_form(pq.q, 1, u)) <= tol * scale * unit)
        out.append(CharDirection(1 + 0j, complex(u), degenerate))
    if abs(p02) <= tol * scale:
        out.append(CharDirection(0j, 1 + 0j,
                                 degenerate=abs(q02) <= tol * scale))
    return out


def director(pq: HomogeneousPair, u0: complex) -> complex:
    """Director of the nondegenerate direction [1:u0]: r'(u0) / P(1,u0)."""
    p20, p11, p02 = pq.p
    q20, q11, q02 = pq.q
    scale = max(abs(c) for c in pq.p + pq.q)
    pu = _form(pq.p, 1, u0)
    if scale == 0 or abs(pu) <= 1e-12 * scale * (1 + abs(u0)) ** 2:
        raise DegenerateDirection(f"P(1, {u0}) vanishes; no director")
    rprime = (q11 - p20) + 2 * (q02 - p11) * u0 - 3 * p02 * u0 * u0
    return rprime / pu


# --- regularity of the top-degree forms ---


def _expand_components(m: PolyMap2, eps: complex):
    """Full monomial expansions of both components of F_eps."""
    e2 = complex(eps) ** 2
    c1: dict[tuple, complex] = {(1, 0): 1 + 0j}
    a_rows = [(0, 0, 1 + 0j), (1, 0, m.q + 1), (0, 1, m.r)] + \
        list(m.alpha_extra) + [(0, 0, m.eps2_alpha * e2)]
    for i, j, c in a_rows:
        c1[(i + 2, j)] = c1.get((i + 2, j), 0j) + c
        if e2 != 0:
            c1[(i, j)] = c1.get((i, j), 0j) + c * e2
    c2: dict[tuple, complex] = {}
    b_rows = [(0, 0, 1 + 0j), (1, 0, complex(m.rho))] + \
        list(m.beta_extra) + [(0, 0, m.eps2_beta * e2)]
    for i, j, c in b_rows:
        c2[(i, j + 1)] = c2.get((i, j + 1), 0j) + c
    return c1, c2


def _top_form(coeffs: dict, tol: float):
    biggest = max(abs(c) for c in coeffs.values())
    deg = max(i + j for (i, j), c in coeffs.items() if abs(c) > tol * biggest)
    return deg, {k: c for k, c in coeffs.items()
                 if k[0] + k[1] == deg and abs(c) > tol * biggest}


def check_regularity(m: PolyMap2, eps: complex, tol: float = 1e-9):
    """Whether the top-degree forms share no projective root.

    Returns (regular, common_degree); common_degree is 0 when the two
    components do not even have equal degree.  The common-root test is
    the Sylvester resultant of the forms restricted to the chart x = 1,
    taken at formal degree d so a shared root at [0:1] shows up as a
    vanishing determinant too.
    """
    c1, c2 = _expand_components(m, eps)
    d1, top1 = _top_form(c1, 1e-12)
    d2, top2 = _top_form(c2, 1e-12)
    if d1 != d2:
        return False, 0
    d = d1
    t1 = np.array([top1.get((d - j, j), 0j) for j in range(d + 1)])
    t2 = np.array([top2.get((d - j, j), 0j) for j in range(d + 1)])
    syl = np.zeros((2 * d, 2 * d), dtype=complex)
    for row in range(d):
        syl[row, row:row + d + 1] = t1[::-1]
        syl[d + row, row:row + d + 1] = t2[::-1]
    res = np.linalg.det(syl)
    scale = (np.max(np.abs(t1)) ** d) * (np.max(np.abs(t2)) ** d)
    return bool(abs(res) > tol * scale), d
