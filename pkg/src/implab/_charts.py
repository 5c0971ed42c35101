"""Gate charts shared by the region predicates and the coordinate module.

For eps != 0 the rescaled gate coordinate is

    u_eps(x) = log((i eps - x) / (i eps + x)) / (2 i eps)

(principal branch), the two-variable analogue of (1/eps) arctan(x/eps).
It straightens the gate flow: u(F_eps(p)) - u(p) ~ 1 through the gate.
Its inverse on the vertical strip |Re((eps/|eps|) w)| < pi/(2|eps|) is
w -> eps tan(eps w).

The eps = 0 limits of the normalized charts are

    incoming  w(x) = -1/x - q log(-x)
    outgoing  w(x) = -1/x - q log(x)

and for eps != 0 the normalized charts are u_eps - (q/2) log(eps^2+x^2)
shifted by +-pi/(2 eps), so that incoming - outgoing = pi/eps exactly.
"""

from __future__ import annotations

import cmath

from .errors import ConfigError, DomainViolation, OutsideStrip, PoleAtGate

_HALF_PI = cmath.pi / 2


def u_gate(eps: complex, x: complex) -> complex:
    if eps == 0:
        raise DomainViolation("the gate chart needs eps != 0")
    num = 1j * eps - x
    den = 1j * eps + x
    if num == 0 or den == 0:
        raise PoleAtGate(f"x = {x} sits on a gate fixed point +-i*eps")
    return cmath.log(num / den) / (2j * eps)


def u_gate_inverse(eps: complex, w: complex) -> complex:
    if eps == 0:
        raise DomainViolation("the gate chart needs eps != 0")
    t = (eps / abs(eps)) * w
    if abs(t.real) >= _HALF_PI / abs(eps):
        raise OutsideStrip(
            f"Re((eps/|eps|) w) = {t.real:.6g} is outside the gate strip")
    return eps * cmath.tan(eps * w)


def w_chart(q: complex, eps: complex, x: complex, mode: str) -> complex:
    if mode not in ("incoming", "outgoing"):
        raise ConfigError(f"mode must be 'incoming' or 'outgoing', got {mode!r}")
    if eps == 0:
        if x == 0:
            raise PoleAtGate("x = 0 is the parabolic point of the eps = 0 chart")
        if mode == "incoming":
            return -1.0 / x - q * cmath.log(-x)
        return -1.0 / x - q * cmath.log(x)
    u = u_gate(eps, x)
    base = u - (q / 2.0) * cmath.log(eps * eps + x * x)
    if mode == "incoming":
        return base + _HALF_PI / eps
    return base - _HALF_PI / eps
