"""Petal cones, gate neighborhoods, and the uniform orbit estimates.

The unperturbed incoming region is the cone

    C0(gamma, R, s) = {|Im x| <= -gamma Re x, |x| <= R, |y| <= s|x|}

whose mirror -C0 plays the outgoing role.  For eps in the admissible
sector (Re eps > 0, |Im eps| <= c|eps|^2) the gate neighborhood D_eps
is a vertical substrip of the u_eps chart together with a generous
vertical disc:

    -pi/(2|e|) + K/|e| < Re((eps/|e|) u_eps(x)) < pi/(2|e|) - K/(2|e|),
    |y| < 2 exp(4 pi rho tau) |e|,     e = |eps|,

with K = 2 pi (rho'' - 1) and tau = |tan(-pi/2 + K/2)|.  The perturbed
incoming region is C_eps = (eps/|eps|, 1) . C0 minus the gate strip.

Orbit passage through the gate is quantified against a compact window
with harmonic-depth constants M- <= Re((eps/|e|) u) + pi/(2|e|) <= M+:
entry and exit steps land in explicit brackets scaling like K/|eps|,
horizontal coordinates decay like 1/(j + M), vertical coordinates
contract according to a telescoping product, all of which
verify_orbit_estimates measures and reports.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._charts import u_gate
from .errors import (
    BudgetExceeded,
    ConfigError,
    DomainViolation,
    EpsOutsideSector,
)
from .mapfamily import ComplexPoint, PolyMap2, eval_F, packed


@dataclass(frozen=True)
class RegionConfig:
    """Geometry of the petal cones and the gate strip.

    rho is carried along because the admissibility constraints couple
    the cone aperture to the vertical multiplier of the map the config
    is paired with.
    """

    gamma: float = 0.02
    gamma_prime: float = 0.05
    R: float = 0.1
    s: float = 0.01
    rho_prime: float = 1.5
    rho_dblprime: float = 1.05
    rho: float = 2.0
    c_eps: float = 1.0

    def __post_init__(self):
        g, gp = self.gamma, self.gamma_prime
        if not (0 < g < gp < 1):
            raise ConfigError("need 0 < gamma < gamma_prime < 1")
        if self.R <= 0 or self.s <= 0 or self.c_eps <= 0:
            raise ConfigError("R, s and c_eps must be positive")
        if not (1 < self.rho_dblprime < 1.25):
            raise ConfigError("rho_dblprime must sit in (1, 5/4)")
        if self.rho <= 1:
            raise ConfigError("rho must exceed 1")
        two_k = 2 * self.K
        if abs(two_k / math.tan(two_k)) <= 1 / self.rho_prime:
            raise ConfigError("|2K / tan 2K| must exceed 1/rho_prime")
        if self.K > math.pi / 4:
            raise ConfigError("K = 2 pi (rho_dblprime - 1) must not exceed pi/4")
        cap = self.rho * (1 - gp) / math.sqrt(1 + gp * gp)
        if not (1 < self.rho_prime < cap):
            raise ConfigError(
                f"rho_prime must sit in (1, {cap:.4g}) for this cone")
        if 4 * self.tau * self.s >= 1:
            raise ConfigError("4 tau s must stay below 1")

    @property
    def K(self) -> float:
        return 2 * math.pi * (self.rho_dblprime - 1)

    @property
    def tau(self) -> float:
        return abs(math.tan(-math.pi / 2 + self.K / 2))


DEFAULT_REGIONS = RegionConfig()


def in_C0(cfg, p: ComplexPoint, use_gamma_prime: bool = False) -> bool:
    """Membership in the incoming cone C0 (gamma' variant on request)."""
    g = cfg.gamma_prime if use_gamma_prime else cfg.gamma
    x, y = p.x, p.y
    return (abs(x.imag) <= -g * x.real
            and abs(x) <= cfg.R
            and abs(y) <= cfg.s * abs(x))


def eps_in_sector(cfg, eps: complex) -> bool:
    eps = complex(eps)
    return eps.real > 0 and abs(eps.imag) <= cfg.c_eps * abs(eps) ** 2


def _require_sector(cfg, eps: complex) -> complex:
    eps = complex(eps)
    if eps == 0 or not eps_in_sector(cfg, eps):
        raise EpsOutsideSector(
            f"eps = {eps} violates Re eps > 0, |Im eps| <= c|eps|^2")
    return eps


def in_D_eps(cfg, eps: complex, p: ComplexPoint) -> bool:
    """Membership in the gate neighborhood D_eps."""
    eps = _require_sector(cfg, eps)
    ae = abs(eps)
    t = ((eps / ae) * u_gate(eps, p.x)).real
    lo = -math.pi / (2 * ae) + cfg.K / ae
    hi = math.pi / (2 * ae) - cfg.K / (2 * ae)
    if not (lo < t < hi):
        return False
    return abs(p.y) < 2 * math.exp(4 * math.pi * cfg.rho * cfg.tau) * ae


def in_C_eps(cfg, eps: complex, p: ComplexPoint) -> bool:
    """Membership in the rotated incoming region C_eps = phase.C0 \\ D_eps.

    Degrades to the unperturbed cone at eps = 0.
    """
    eps = complex(eps)
    if eps == 0:
        return in_C0(cfg, p)
    eps = _require_sector(cfg, eps)
    phase = abs(eps) / eps
    if not in_C0(cfg, ComplexPoint(phase * p.x, p.y)):
        return False
    return not in_D_eps(cfg, eps, p)


def _in_transit_union(cfg, eps: complex, p: ComplexPoint) -> bool:
    """p in C_eps union D_eps (the forward-invariant transit region)."""
    phase = abs(eps) / eps
    return (in_C0(cfg, ComplexPoint(phase * p.x, p.y))
            or in_D_eps(cfg, eps, p))


def gate_depth(cfg, eps: complex, x: complex) -> float:
    """Normalized entry coordinate Re((eps/|e|) u_eps(x)) + pi/(2|e|)."""
    eps = _require_sector(cfg, eps)
    ae = abs(eps)
    return ((eps / ae) * u_gate(eps, x)).real + math.pi / (2 * ae)


@dataclass(frozen=True)
class CompactWindow:
    """Sampled compact subset of C0 with its gate-depth constants."""

    points: tuple
    M_minus: int
    M_plus: int
    eps_ref: complex


def make_compact_window(cfg, points, eps_list) -> CompactWindow:
    """Measure M-+ = floor/ceil (with 10% slack) of the gate depth.

    The depth is measured at the smallest |eps| of the ladder and the
    resulting sandwich M- <= depth <= M+ is then verified at every
    tested eps.
    """
    pts = tuple(points)
    if not pts:
        raise DomainViolation("a compact window needs at least one point")
    for p in pts:
        if not in_C0(cfg, p):
            raise DomainViolation(f"window point ({p.x}, {p.y}) is not in C0")
    eps_list = [_require_sector(cfg, e) for e in eps_list]
    if not eps_list:
        raise DomainViolation("need at least one eps to calibrate the window")
    eps_ref = min(eps_list, key=abs)
    depths_ref = [gate_depth(cfg, eps_ref, p.x) for p in pts]
    m_minus = max(1, math.floor(0.9 * min(depths_ref)))
    m_plus = math.ceil(1.1 * max(depths_ref))
    for e in eps_list:
        for p in pts:
            d = gate_depth(cfg, e, p.x)
            if not (m_minus <= d <= m_plus):
                raise DomainViolation(
                    f"gate depth {d:.4g} at eps = {e} escapes [{m_minus}, {m_plus}]")
    return CompactWindow(pts, m_minus, m_plus, eps_ref)


def entry_bracket(cfg, window: CompactWindow, eps: complex):
    """Bracket for the gate entry step n_p of window orbits."""
    ae = abs(complex(eps))
    lo = cfg.K / (cfg.rho_dblprime * ae) - window.M_plus / cfg.rho_dblprime
    hi = cfg.K / ((2 - cfg.rho_dblprime) * ae) \
        - window.M_minus / (2 - cfg.rho_dblprime)
    return lo, hi


def exit_bracket(cfg, window: CompactWindow, eps: complex):
    """Bracket for the exit step n'_p; entry shape with K -> pi - K/2."""
    ae = abs(complex(eps))
    span = math.pi - cfg.K / 2
    lo = span / (cfg.rho_dblprime * ae) - window.M_plus / cfg.rho_dblprime
    hi = span / ((2 - cfg.rho_dblprime) * ae) \
        - window.M_minus / (2 - cfg.rho_dblprime)
    return lo, hi


def entry_exit_times(m: PolyMap2, cfg, eps: complex, p: ComplexPoint,
                     budget: int):
    """First gate-entry step n_p and first exit step from C_eps u D_eps.

    After the exit the orbit is followed until it leaves the ball
    |x| + |y| <= 1 (or the budget runs out) and any re-entry into the
    transit region raises: the exit has to be final.
    """
    eps = _require_sector(cfg, eps)
    if budget < 2 * math.pi / abs(eps):
        raise DomainViolation("budget below one gate transit 2 pi / |eps|")
    if not in_C_eps(cfg, eps, p):
        raise DomainViolation(f"({p.x}, {p.y}) is not in C_eps")
    n_entry = None
    n_exit = None
    cur = p
    for j in range(budget + 1):
        in_gate = in_D_eps(cfg, eps, cur)
        in_union = in_gate or in_C_eps(cfg, eps, cur)
        if n_entry is None:
            if in_gate:
                n_entry = j
            elif not in_union:
                raise DomainViolation(
                    f"orbit left the incoming region at step {j} "
                    "before reaching the gate")
        elif n_exit is None:
            if not in_union:
                n_exit = j
        else:
            if in_union:
                raise DomainViolation(
                    f"orbit re-entered the transit region at step {j}")
            if not cur.is_finite() or abs(cur.x) + abs(cur.y) > 1.0:
                return n_entry, n_exit
        cur = eval_F(m, eps, cur)
    if n_entry is not None and n_exit is not None:
        return n_entry, n_exit
    raise BudgetExceeded(
        f"no gate transit within {budget} steps (entry = {n_entry})")


# --- measured orbit estimates over a compact window ---


@dataclass(frozen=True)
class EstimateRow:
    estimate_id: str
    p_index: int
    eps: complex
    worst_j: int
    margin: float


@dataclass
class EstimateReport:
    """Worst margins of the five orbit estimates over a window.

    Margins are signed distances to the asserted bound (>= 0 passes).
    Fitted constants are reported for inspection; acceptance only uses
    signs and the ordering rho_tilde > 1.
    """

    rows: list = field(default_factory=list)
    fitted: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if any(row.margin < 0 for row in self.rows):
            return False
        if self.fitted.get("rho_tilde", 0.0) <= 1.0:
            return False
        inv = 1.0 / self.fitted.get("rho_prime", 1.5)
        return all(c < inv for c in self.fitted.get("C_eps", {}).values())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["estimate_id", "p_index", "eps_re", "eps_im",
                             "worst_j", "margin"])
            for row in self.rows:
                writer.writerow([row.estimate_id, row.p_index,
                                 repr(row.eps.real), repr(row.eps.imag),
                                 row.worst_j, repr(row.margin)])


def _orbit_arrays(m: PolyMap2, eps: complex, p: ComplexPoint, n: int):
    ae, ac, be, bc = packed(m)
    xs = np.empty(n + 1, dtype=np.complex128)
    ys = np.empty(n + 1, dtype=np.complex128)
    _kernels.forward_orbit(ae, ac, be, bc, m.eps2_alpha, m.eps2_beta,
                           complex(eps), complex(p.x), complex(p.y), xs, ys)
    return xs, ys


def _telescoping(a: float, l0: int, j: int) -> float:
    # prod_{l=l0}^{l0+j-1} (1 - a/l) through a log-Gamma ratio
    return math.exp(math.lgamma(l0 + j - a) - math.lgamma(l0 - a)
                    + math.lgamma(l0) - math.lgamma(l0 + j))


def verify_orbit_estimates(m: PolyMap2, cfg, window: CompactWindow,
                           eps_list) -> EstimateReport:
    """Measure the five uniform orbit estimates over the window.

    (a) horizontal decay |x_j| <= 2/(j + M-) up to the gate entry;
    (b) lower bound (1/rho' - C_eps)/(M+ + j) - C(1+log(M-+j))/(M-+j)^2
        with C fitted on the gate-model deviation and C_eps enclosing;
    (c) vertical contraction against the telescoping product with the
        decay exponent rho_tilde measured on the eps = 0 orbit;
    (d) vertical bound |y_j| <= exp(4 pi rho tau)|eps| during transit;
    (e) monotonicity of |y_j| |x_j|^{-(1+(rho-1)/2)} along eps = 0 orbits.
    """
    if m.rho != cfg.rho:
        raise ConfigError("map rho and region rho disagree")
    eps_list = [_require_sector(cfg, e) for e in eps_list]
    report = EstimateReport()
    mm, mp = window.M_minus, window.M_plus

    orbits = {}
    times = {}
    for ip, p in enumerate(window.points):
        for e in eps_list:
            budget = int(6 * math.pi / abs(e)) + 200
            n_entry, n_exit = entry_exit_times(m, cfg, e, p, budget)
            xs, ys = _orbit_arrays(m, e, p, n_exit)
            orbits[(ip, e)] = (xs, ys)
            times[(ip, e)] = (n_entry, n_exit)

    # (a) horizontal decay up to the gate
    for ip, p in enumerate(window.points):
        for e in eps_list:
            xs, _ = orbits[(ip, e)]
            n_entry, _ = times[(ip, e)]
            margins = [2.0 / (j + mm) - abs(xs[j]) for j in range(n_entry + 1)]
            worst = int(np.argmin(margins))
            report.rows.append(EstimateRow("a", ip, e, worst, margins[worst]))

    # fit C on the deviation from the one-dimensional gate model
    dev_ratio = 0.0
    for ip, p in enumerate(window.points):
        for e in eps_list:
            xs, _ = orbits[(ip, e)]
            n_entry, _ = times[(ip, e)]
            ae = abs(e)
            phase = ae / e
            t0 = ((e / ae) * u_gate(e, xs[0])).real
            for j in range(1, n_entry + 1):
                model = ae * cmath.tan(ae * (t0 + j))
                dev = abs(phase * xs[j] - model)
                shape = (1 + math.log(mm + j)) / (mm + j) ** 2
                dev_ratio = max(dev_ratio, dev / shape)
    c_fit = dev_ratio
    report.fitted["C"] = c_fit
    report.fitted["rho_prime"] = cfg.rho_prime

    # (b) horizontal lower bound with enclosing C_eps
    c_eps_fit = {}
    for e in eps_list:
        v_min = math.inf
        for ip, p in enumerate(window.points):
            xs, _ = orbits[(ip, e)]
            n_entry, _ = times[(ip, e)]
            for j in range(n_entry + 1):
                shape = (1 + math.log(mm + j)) / (mm + j) ** 2
                v_min = min(v_min, (mp + j) * (abs(xs[j]) + c_fit * shape))
        c_eps_fit[e] = max(0.0, 1.0 / cfg.rho_prime - v_min)
    report.fitted["C_eps"] = c_eps_fit
    for ip, p in enumerate(window.points):
        for e in eps_list:
            xs, _ = orbits[(ip, e)]
            n_entry, _ = times[(ip, e)]
            margins = []
            for j in range(n_entry + 1):
                shape = (1 + math.log(mm + j)) / (mm + j) ** 2
                lower = (1.0 / cfg.rho_prime - c_eps_fit[e]) / (mp + j) \
                    - c_fit * shape
                margins.append(abs(xs[j]) - lower)
            worst = int(np.argmin(margins))
            report.rows.append(EstimateRow("b", ip, e, worst, margins[worst]))

    # rho_tilde from the unperturbed vertical decay of the first point
    # with nonzero y (log-log slope over the window 100 <= J <= 10^4)
    rho_tilde = math.nan
    for p in window.points:
        if p.y != 0:
            xs0, ys0 = _orbit_arrays(m, 0.0, p, 10_000)
            js = np.arange(100, 10_001)
            slope = np.polyfit(np.log(js),
                               np.log(np.abs(ys0[js]) / abs(p.y)), 1)[0]
            rho_tilde = -float(slope)
            break
    report.fitted["rho_tilde"] = rho_tilde

    # (c) vertical contraction against the telescoping product
    if not math.isnan(rho_tilde) and rho_tilde < mp:
        c1 = 0.0
        for ip, p in enumerate(window.points):
            if p.y == 0:
                continue
            for e in eps_list:
                _, ys = orbits[(ip, e)]
                n_entry, _ = times[(ip, e)]
                for j in range(1, n_entry + 1):
                    c1 = max(c1, (abs(ys[j]) / abs(p.y))
                             / _telescoping(rho_tilde, mp, j))
        report.fitted["c1"] = c1
        for ip, p in enumerate(window.points):
            if p.y == 0:
                continue
            for e in eps_list:
                _, ys = orbits[(ip, e)]
                n_entry, _ = times[(ip, e)]
                margins = [c1 * _telescoping(rho_tilde, mp, j)
                           - abs(ys[j]) / abs(p.y)
                           for j in range(1, n_entry + 1)]
                worst = int(np.argmin(margins)) + 1
                report.rows.append(
                    EstimateRow("c", ip, e, worst, margins[worst - 1]))

    # (d) vertical bound through the gate
    ybound_unit = math.exp(4 * math.pi * cfg.rho * cfg.tau)
    for ip, p in enumerate(window.points):
        for e in eps_list:
            _, ys = orbits[(ip, e)]
            n_entry, n_exit = times[(ip, e)]
            margins = [ybound_unit * abs(e) - abs(ys[j])
                       for j in range(n_entry + 1, n_exit + 1)]
            worst = int(np.argmin(margins)) + n_entry + 1
            report.rows.append(
                EstimateRow("d", ip, e, worst, margins[worst - n_entry - 1]))

    # (e) Hakim-style monotone quantity on the unperturbed orbit
    alpha_h = (m.rho - 1.0) / 2.0
    for ip, p in enumerate(window.points):
        xs0, ys0 = _orbit_arrays(m, 0.0, p, 1000)
        mu0 = abs(ys0[0]) * abs(xs0[0]) ** (-(alpha_h + 1))
        margins = [mu0 - abs(ys0[j]) * abs(xs0[j]) ** (-(alpha_h + 1))
                   for j in range(1, 1001)]
        worst = int(np.argmin(margins)) + 1
        report.rows.append(
            EstimateRow("e", ip, 0j, worst, margins[worst - 1]))

    return report


def check_invariance(m: PolyMap2, cfg, eps: complex, sample: int = 200,
                     seed: int = 0) -> bool:
    """Sampled forward invariance of the transit region.

    eps = 0: F_0 maps the gamma'-cone into itself.
    eps != 0: F_eps maps C_eps into C_eps union D_eps.
    """
    rng = np.random.default_rng(seed)
    eps = complex(eps)
    if eps != 0:
        eps = _require_sector(cfg, eps)
    use_gp = eps == 0
    g = cfg.gamma_prime if use_gp else cfg.gamma
    phase = 1.0 if eps == 0 else eps / abs(eps)
    checked = 0
    attempts = 0
    while checked < sample:
        attempts += 1
        if attempts > 50 * sample:
            raise BudgetExceeded("rejection sampling starved; region too thin")
        t = cfg.R / math.sqrt(1 + g * g) * rng.uniform(0.01, 1.0)
        x0 = complex(-t, g * t * rng.uniform(-1.0, 1.0))
        y = cfg.s * abs(x0) * rng.uniform(0.0, 1.0) \
            * cmath.exp(2j * math.pi * rng.uniform())
        p = ComplexPoint(phase * x0, y)
        if eps == 0:
            if not in_C0(cfg, p, use_gamma_prime=True):
                continue
            if not in_C0(cfg, eval_F(m, 0.0, p), use_gamma_prime=True):
                return False
        else:
            if not in_C_eps(cfg, eps, p):
                continue
            if not _in_transit_union(cfg, eps, eval_F(m, eps, p)):
                return False
        checked += 1
    return True
