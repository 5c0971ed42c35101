"""Fatou coordinates, their almost-Fatou truncations, and chart utilities.

On the invariant center direction the unperturbed map has an incoming
(attracting) and an outgoing (repelling) Fatou coordinate, built here
as increment series over the orbit,

    phi_in(p)  = w(p) + sum_{n>=0} [w(F(p_n)) - w(p_n) - 1],
    phi_out(p) = w(p) + sum_{n>=0} [w(F^{-1}(p_n)) - w(p_n) + 1],

with the normalized charts w of the gate module.  Both conjugate the
dynamics to the unit translation: phi(F(p)) = phi(p) + 1.

For eps != 0 there is no exact Fatou coordinate, only the almost-Fatou
truncations

    phi_in_{eps,n}(p)  = w_eps_in(F_eps^n(p)) - n,
    phi_out_{eps,n}(p) = w_eps_out(F_eps^{-n}(p)) + n,

which converge to the eps = 0 coordinates when n and eps are coupled
through a bounded-type ladder (n of order pi/(2 eps) for the incoming
branch).  The outgoing coordinate is inverted on the invariant line by
psi_o_line, the restricted repelling parametrization, which transfer
maps are built from.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from . import _charts, _kernels
from .errors import (
    ConfigError,
    DomainViolation,
    NoConvergence,
    NotInBasin,
    NotInRepellingBasin,
    OrbitLeftDomain,
)
from .mapfamily import ComplexPoint, PolyMap2, eval_F, eval_F_inverse, iterate, packed
from .regions import entry_exit_times, in_C0, in_D_eps


def u_eps(eps: complex, x: complex) -> complex:
    """Rescaled gate coordinate log((i eps - x)/(i eps + x)) / (2 i eps)."""
    return _charts.u_gate(eps, x)


def u_eps_inverse(eps: complex, w: complex) -> complex:
    """Inverse gate chart w -> eps tan(eps w) on the vertical strip."""
    return _charts.u_gate_inverse(eps, w)


def w_eps(m: PolyMap2, eps: complex, p: ComplexPoint, mode: str) -> complex:
    """Normalized incoming/outgoing chart of F_eps at p (horizontal only).

    eps = 0 returns the limit chart -1/x - q log(-+x); otherwise
    u_eps - (q/2) log(eps^2 + x^2) +- pi/(2 eps).  The two modes differ
    by exactly pi/eps.
    """
    return _charts.w_chart(m.q, complex(eps), complex(p.x), mode)


@dataclass(frozen=True)
class FatouValue:
    """A coordinate value with its reported truncation tail bound."""

    value: complex
    truncation_error: float
    n_terms: int = 0


@dataclass(frozen=True)
class AlmostFatouParams:
    """Truncation data (eps, n) of an almost-Fatou coordinate."""

    eps: complex
    n: int
    mode: str = "incoming"

    def __post_init__(self):
        eps = complex(self.eps)
        if eps == 0 or eps.real <= 0:
            raise ConfigError("eps must lie in the open right half plane")
        object.__setattr__(self, "eps", eps)
        if self.mode not in ("incoming", "outgoing"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.n < 0:
            raise ConfigError("n must be nonnegative")


def _tail_bound(m: PolyMap2, c_tail: float, y_last: float, n: int,
                depth: float) -> float:
    # harmonic-square tail plus the vertical tail; the vertical factor
    # uses the map's own contraction exponent with a 2x safety margin
    fy = 2.0 / max(m.rho - 1.0, 0.01)
    return c_tail * (4.0 / (n + depth) + fy * y_last * (n + depth))


def phi_iota(m: PolyMap2, p: ComplexPoint, tol: float = 1e-9,
             cfg=None, min_terms: int = 0,
             max_terms: int = 5_000_000) -> FatouValue:
    """Incoming Fatou coordinate of F_0 at p.

    Stops when the measured majorant c((2/(n+m))^2 + |y_n|) of the next
    increment falls below tol, so the functional equation holds within
    2 tol; the reported truncation_error bounds the discarded tail.
    With cfg the domain check is the geometric cone, otherwise leaving
    the attracting region is detected dynamically.
    """
    if cfg is not None and not in_C0(cfg, p):
        raise NotInBasin(f"({p.x}, {p.y}) is outside the incoming cone")
    if p.x == 0:
        raise NotInBasin("the parabolic point has no finite coordinate")
    ae, ac, be, bc = packed(m)
    value, n, _, c_tail, y_last, depth, status = _kernels.phi_in_series(
        ae, ac, be, bc, m.q, complex(p.x), complex(p.y),
        tol, max_terms, min_terms)
    if status == -1:
        raise NotInBasin(f"orbit left the attracting region after {n} steps")
    if status == 1:
        raise NoConvergence(f"series still above tol after {n} terms")
    return FatouValue(value, _tail_bound(m, c_tail, y_last, n, depth), n)


def phi_o(m: PolyMap2, p: ComplexPoint, tol: float = 1e-9,
          cfg=None, min_terms: int = 0,
          max_terms: int = 2_000_000) -> FatouValue:
    """Outgoing Fatou coordinate of F_0 at p (backward-orbit series)."""
    if cfg is not None and not in_C0(cfg, ComplexPoint(-p.x, p.y)):
        raise NotInRepellingBasin(
            f"({p.x}, {p.y}) is outside the outgoing cone")
    if p.x == 0:
        raise NotInRepellingBasin("the parabolic point has no finite coordinate")
    ae, ac, be, bc = packed(m)
    rtol = max(min(1e-12, tol / 10.0), 1e-13)
    value, n, _, c_tail, y_last, depth, status = _kernels.phi_out_series(
        ae, ac, be, bc, m.q, complex(p.x), complex(p.y),
        tol, max_terms, min_terms, rtol)
    if status == -2:
        raise NoConvergence(f"inverse Newton stalled at backward step {n}")
    if status == -1:
        raise NotInRepellingBasin(
            f"backward orbit left the repelling region after {n} steps")
    if status == 1:
        raise NoConvergence(f"series still above tol after {n} terms")
    # each backward step leaves an O(rtol) Newton residual; the chart
    # value accumulates them like a random walk, measured at about
    # 0.5 sqrt(rtol n), so report 4x that on top of the series tail
    newton_err = 2.0 * math.sqrt(rtol * max(n, 1))
    err = _tail_bound(m, c_tail, y_last, n, depth) + newton_err
    return FatouValue(value, err, n)


def _in_union(cfg, eps: complex, p: ComplexPoint, mode: str) -> bool:
    phase = abs(eps) / eps
    if mode == "incoming":
        cone = in_C0(cfg, ComplexPoint(phase * p.x, p.y))
    else:
        cone = in_C0(cfg, ComplexPoint(-phase * p.x, p.y))
    return cone or in_D_eps(cfg, eps, p)


def phi_almost(m: PolyMap2, params: AlmostFatouParams, p: ComplexPoint,
               cfg=None) -> complex:
    """Almost-Fatou coordinate w_eps(F_eps^{+-n}(p)) -+ n.

    With cfg every orbit point is required to stay in the transit
    region C_eps u D_eps (mirrored for the outgoing mode); the first
    violation raises OrbitLeftDomain with its step index.
    """
    return phi_almost_sweep(m, params.eps, params.mode, p, [params.n],
                            cfg=cfg)[params.n]


def phi_almost_sweep(m: PolyMap2, eps: complex, mode: str, p: ComplexPoint,
                     n_list, cfg=None) -> dict:
    """Almost-Fatou values for several n at fixed eps on one orbit pass."""
    eps = complex(eps)
    if eps == 0 or eps.real <= 0:
        raise ConfigError("eps must lie in the open right half plane")
    if mode not in ("incoming", "outgoing"):
        raise ConfigError(f"unknown mode {mode!r}")
    targets = sorted(set(int(n) for n in n_list))
    if targets and targets[0] < 0:
        raise ConfigError("n must be nonnegative")
    ae, ac, be, bc = packed(m)
    out = {}
    cur = p
    step = 0
    if cfg is not None and not _in_union(cfg, eps, cur, mode):
        raise OrbitLeftDomain(0)
    for n in targets:
        while step < n:
            if cfg is None:
                span = n - step
                if mode == "incoming":
                    x, y = _kernels.forward_n(
                        ae, ac, be, bc, m.eps2_alpha, m.eps2_beta, eps,
                        complex(cur.x), complex(cur.y), span)
                    cur = ComplexPoint(x, y)
                else:
                    x, y, bad = _kernels.backward_n(
                        ae, ac, be, bc, m.eps2_alpha, m.eps2_beta, eps,
                        complex(cur.x), complex(cur.y), span, 1e-12)
                    if bad >= 0:
                        raise OrbitLeftDomain(step + bad + 1,
                                              "inverse Newton stalled")
                    cur = ComplexPoint(x, y)
                step = n
            else:
                if mode == "incoming":
                    cur = eval_F(m, eps, cur)
                else:
                    cur = eval_F_inverse(m, eps, cur)
                step += 1
                if not _in_union(cfg, eps, cur, mode):
                    raise OrbitLeftDomain(step)
        if mode == "incoming":
            out[n] = w_eps(m, eps, cur, "incoming") - n
        else:
            out[n] = w_eps(m, eps, cur, "outgoing") + n
    return out


def psi_o_line(m: PolyMap2, z: complex, tol: float = 1e-10) -> complex:
    """Restricted outgoing parametrization on the invariant line.

    Solves phi_out(x, 0) = z - n for n = max(0, ceil(Re z) + 50) deep
    in the repelling chart (bare-chart Newton seed, secant refinement)
    and pushes the solution forward n steps, returning the x with
    phi_out(x, 0) = z; consequently psi_o_line(z+1) = f_0(psi_o_line(z))
    on the line.
    """
    z = complex(z)
    n = max(0, math.ceil(z.real) + 50)
    zt = z - n
    x = -1.0 / zt
    for _ in range(60):
        w = -1.0 / x - m.q * cmath.log(x)
        if abs(w - zt) < 1e-13 * (1 + abs(zt)):
            break
        x = x - (w - zt) / (1.0 / (x * x) - m.q / x)

    def g(xx: complex) -> complex:
        return phi_o(m, ComplexPoint(xx, 0j), tol=tol * 0.1).value - zt

    try:
        x0, x1 = x, x * (1 + 1e-6)
        g0, g1 = g(x0), g(x1)
        for _ in range(16):
            if abs(g1) < tol or abs(g1 - g0) < 1e-300:
                break
            x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
            x0, g0 = x1, g1
            x1, g1 = x2, g(x2)
    except (NotInRepellingBasin, NoConvergence) as exc:
        raise NoConvergence(f"chart solve left the repelling line at z = {z}:"
                            f" {exc}") from exc
    if not (abs(g1) < tol or abs(g0) < tol):
        raise NoConvergence(f"secant residual {abs(g1):.3g} above {tol} "
                            f"at z = {z}")
    xs = x1 if abs(g1) <= abs(g0) else x0
    res = iterate(m, 0.0, ComplexPoint(xs, 0j), n).final
    if not res.is_finite() or abs(res.x) > 1e9:
        raise NoConvergence(f"forward push along the line blew up at z = {z}")
    return complex(res.x)


CONVERGENCE_CSV_HEADER = "eps_re,eps_im,n,point_index,error"


def convergence_rows_to_csv(rows) -> str:
    """Serialize (eps, n, point_index, error) protocol rows."""
    lines = [CONVERGENCE_CSV_HEADER]
    for eps, n, idx, err in rows:
        eps = complex(eps)
        lines.append(f"{eps.real!r},{eps.imag!r},{int(n)},{int(idx)},"
                     f"{float(err)!r}")
    return "\n".join(lines) + "\n"


# --- telescoping products and the vertical-sum diagnostics ---


def telescoping_product(a: float, l0: int, j: int) -> float:
    """P_j = prod_{l=l0}^{j} (1 - a/l) through a log-Gamma ratio.

    Requires a > 1 and l0 > a so every factor sits in (0, 1); then
    P_j ~ c j^{-a} with c = Gamma(l0)/Gamma(l0-a).
    """
    if not a > 1:
        raise DomainViolation("need a > 1")
    if not l0 > a:
        raise DomainViolation("need l0 > a so all factors sit in (0, 1)")
    if j < l0:
        return 1.0
    return math.exp(math.lgamma(j + 1 - a) - math.lgamma(l0 - a)
                    + math.lgamma(l0) - math.lgamma(j + 1))


def estimate_decay_exponent(a: float, l0: int, j: int) -> float:
    """Two-point log-log slope of P_j (converges to -a, intercept-free).

    The naive ratio log P_j / log j carries the offset log c / log j
    from the constant in P_j ~ c j^{-a} and misses -a by more than 0.1
    even at j = 10^5; the slope between j/10 and j does not.
    """
    j0 = max(l0 + 1, j // 10)
    return ((math.log(telescoping_product(a, l0, j))
             - math.log(telescoping_product(a, l0, j0)))
            / (math.log(j) - math.log(j0)))


@dataclass(frozen=True)
class VerticalSums:
    """Vertical orbit sums up to n_bar ~ 3 pi / (5 eps)."""

    eps: complex
    n_entry: int
    n_bar: int
    s1: float
    s2: float


def vertical_sums(m: PolyMap2, cfg, p: ComplexPoint, eps_list):
    """Measure the two telescoping vertical sums along a gate transit.

    s1 = sum_{j<=n_bar} |y(F_eps^j p)| + |y(F_0^j p)| stays bounded
    along the ladder; s2 = sum_{n_p < j <= n_bar} |y(F_eps^j p)| decays.
    """
    rows = []
    for eps in eps_list:
        eps = complex(eps)
        budget = int(6 * math.pi / abs(eps)) + 200
        n_entry, _ = entry_exit_times(m, cfg, eps, p, budget)
        n_bar = math.floor(3 * math.pi / (5 * abs(eps)))
        if n_bar <= n_entry:
            raise DomainViolation("n_bar fell below the gate entry step")
        per = iterate(m, eps, p, n_bar, trace=True).trace
        unp = iterate(m, 0.0, p, n_bar, trace=True).trace
        s1 = math.fsum(abs(per[j].y) + abs(unp[j].y)
                       for j in range(1, n_bar + 1))
        s2 = math.fsum(abs(per[j].y) for j in range(n_entry + 1, n_bar + 1))
        rows.append(VerticalSums(eps, n_entry, n_bar, s1, s2))
    return rows
