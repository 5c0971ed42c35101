"""Run configuration: flat INI text mapped onto module constructors.

Sections mirror the modules ([map], [regions], [grid], [lavaurs],
[implode], [verify], [run]); every value is parsed into the owning
module's constructor immediately, so an invalid config fails before
any computation starts.  Complex values are written as "re im",
points as "x_re x_im y_re y_im", and monomial tables as one
"i j re im" row per line.  Every section and key has a default, so an
empty string parses to the shipped scenario.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .errors import ConfigError
from .julia import GridSpec
from .mapfamily import ComplexPoint, PolyMap2
from .regions import RegionConfig

DEFAULT_CONFIG = """\
[map]
q = 0 0
r = 1 0
rho = 2.0
alpha_extra =
    2 0 1 0
    0 2 1 0
beta_extra =
    0 3 1 0
eps2_alpha = 0 0
eps2_beta = 0 0

[regions]
gamma = 0.02
gamma_prime = 0.05
R = 0.1
s = 0.01
rho_prime = 1.5
rho_dblprime = 1.05
c_eps = 1.0

[grid]
origin = -1.6 -1.2 0 0
e1 = 2.4 0 0 0
e2 = 0 2.4 0 0
nx = 512
ny = 512
escape_radius = 8.0
max_iter = 2000

[lavaurs]
alpha = -25 0
n_list = 200 400 800 1600
tol = 1e-9
ball = 8.0
m_max = 3

[implode]
base = -0.0975 0 0 0
target = 5 0
n_list = 50 100 200 400
band = -0.12 -0.08
m_max = 2

[verify]
phi_tol = 1e-10
fatou_points = 25
incoming_ladder = 50 100 200 400 800
lavaurs_ladder = 200 400 800 1600
eps_denominators = 100 200 400 800
estimate_points = 20

[run]
threads = 0
seed = 0
out = out
"""

_KEYS = {
    "map": {"q", "r", "rho", "alpha_extra", "beta_extra",
            "eps2_alpha", "eps2_beta"},
    "regions": {"gamma", "gamma_prime", "R", "s", "rho_prime",
                "rho_dblprime", "c_eps"},
    "grid": {"origin", "e1", "e2", "nx", "ny", "escape_radius", "max_iter"},
    "lavaurs": {"alpha", "n_list", "tol", "ball", "m_max"},
    "implode": {"base", "target", "n_list", "band", "m_max"},
    "verify": {"phi_tol", "fatou_points", "incoming_ladder",
               "lavaurs_ladder", "eps_denominators", "estimate_points"},
    "run": {"threads", "seed", "out"},
}


def _fail(section: str, key: str, why: str):
    raise ConfigError(f"[{section}] {key}: {why}")


def _floats(section, key, raw, n=None):
    try:
        vals = [float(tok) for tok in raw.split()]
    except ValueError:
        _fail(section, key, f"expected numbers, got {raw!r}")
    if n is not None and len(vals) != n:
        _fail(section, key, f"expected {n} numbers, got {len(vals)}")
    return vals

def _complex(section, key, raw) -> complex:
    re, im = _floats(section, key, raw, 2)
    return complex(re, im)


def _point(section, key, raw) -> ComplexPoint:
    xr, xi, yr, yi = _floats(section, key, raw, 4)
    return ComplexPoint(complex(xr, xi), complex(yr, yi))


def _ints(section, key, raw):
    try:
        return tuple(int(tok) for tok in raw.split())
    except ValueError:
        _fail(section, key, f"expected integers, got {raw!r}")


def _extras(section, key, raw):
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 4:
            _fail(section, key, f"monomial rows are 'i j re im', got {line!r}")
        try:
            rows.append((int(toks[0]), int(toks[1]),
                         complex(float(toks[2]), float(toks[3]))))
        except ValueError:
            _fail(section, key, f"bad monomial row {line!r}")
    return tuple(rows)


@dataclass(frozen=True)
class LavaursSection:
    alpha: complex
    n_list: tuple
    tol: float
    ball: float
    m_max: int


@dataclass(frozen=True)
class ImplodeSection:
    base: ComplexPoint
    target: complex
    n_list: tuple
    band: tuple
    m_max: int

    def __post_init__(self):
        if len(self.n_list) < 2:
            raise ConfigError("[implode] n_list: ladder too short, need at "
                              "least 2 entries for a Cauchy gap")
        if not self.band[0] < self.band[1]:
            raise ConfigError("[implode] band: expected lo < hi")


@dataclass(frozen=True)
class VerifySection:
    phi_tol: float
    fatou_points: int
    incoming_ladder: tuple
    lavaurs_ladder: tuple
    eps_denominators: tuple
    estimate_points: int


@dataclass(frozen=True)
class RunConfig:
    map: PolyMap2
    regions: RegionConfig
    grid: GridSpec
    lavaurs: LavaursSection
    implode: ImplodeSection
    verify: VerifySection
    threads: int | None
    seed: int
    out: str


def parse_config(text: str) -> RunConfig:
    """Parse INI text over the shipped defaults into a RunConfig.

    Unknown sections or keys are rejected, and every section validates
    through its module constructor, so errors surface here rather than
    mid-run.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(DEFAULT_CONFIG)
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    g = cp["map"]
    pmap = PolyMap2(
        q=_complex("map", "q", g["q"]),
        r=_complex("map", "r", g["r"]),
        rho=float(g["rho"]),
        alpha_extra=_extras("map", "alpha_extra", g["alpha_extra"]),
        beta_extra=_extras("map", "beta_extra", g["beta_extra"]),
        eps2_alpha=_complex("map", "eps2_alpha", g["eps2_alpha"]),
        eps2_beta=_complex("map", "eps2_beta", g["eps2_beta"]),
    )
    g = cp["regions"]
    regions = RegionConfig(
        gamma=float(g["gamma"]),
        gamma_prime=float(g["gamma_prime"]),
        R=float(g["R"]),
        s=float(g["s"]),
        rho_prime=float(g["rho_prime"]),
        rho_dblprime=float(g["rho_dblprime"]),
        rho=pmap.rho,
        c_eps=float(g["c_eps"]),
    )
    g = cp["grid"]
    grid = GridSpec(
        origin=_point("grid", "origin", g["origin"]),
        e1=_point("grid", "e1", g["e1"]),
        e2=_point("grid", "e2", g["e2"]),
        nx=int(g["nx"]),
        ny=int(g["ny"]),
        escape_radius=float(g["escape_radius"]),
        max_iter=int(g["max_iter"]),
    )
    g = cp["lavaurs"]
    lavaurs = LavaursSection(
        alpha=_complex("lavaurs", "alpha", g["alpha"]),
        n_list=_ints("lavaurs", "n_list", g["n_list"]),
        tol=float(g["tol"]),
        ball=float(g["ball"]),
        m_max=int(g["m_max"]),
    )
    g = cp["implode"]
    implode = ImplodeSection(
        base=_point("implode", "base", g["base"]),
        target=_complex("implode", "target", g["target"]),
        n_list=_ints("implode", "n_list", g["n_list"]),
        band=tuple(_floats("implode", "band", g["band"], 2)),
        m_max=int(g["m_max"]),
    )
    g = cp["verify"]
    verify = VerifySection(
        phi_tol=float(g["phi_tol"]),
        fatou_points=int(g["fatou_points"]),
        incoming_ladder=_ints("verify", "incoming_ladder", g["incoming_ladder"]),
        lavaurs_ladder=_ints("verify", "lavaurs_ladder", g["lavaurs_ladder"]),
        eps_denominators=_ints("verify", "eps_denominators",
                               g["eps_denominators"]),
        estimate_points=int(g["estimate_points"]),
    )
    g = cp["run"]
    threads = int(g["threads"]) or None
    return RunConfig(pmap, regions, grid, lavaurs, implode, verify,
                     threads, int(g["seed"]), g["out"])


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
