"""Config parsing and the three CLI subcommands."""

import pytest

from implab.cli import main
from implab.config import load_config, parse_config
from implab.errors import ConfigError
from implab.mapfamily import DEFAULT_MAP, map_hash

SMALL_GRID = """
[grid]
nx = 64
ny = 64
max_iter = 300
"""

SCENE_GRID = """
[grid]
nx = 129
ny = 129
max_iter = 2000
"""


def test_empty_config_is_the_shipped_scenario():
    rc = parse_config("")
    assert map_hash(rc.map) == map_hash(DEFAULT_MAP)
    assert rc.grid.nx == 512 and rc.grid.ny == 512
    assert rc.grid.escape_radius == 8.0
    assert rc.lavaurs.alpha == -25
    assert rc.lavaurs.n_list == (200, 400, 800, 1600)
    assert rc.implode.n_list == (50, 100, 200, 400)
    assert rc.implode.band == (-0.12, -0.08)
    assert rc.verify.incoming_ladder == (50, 100, 200, 400, 800)
    assert rc.threads is None   # 0 means "decide at run time"
    assert rc.seed == 0 and rc.out == "out"


def test_overrides_reach_the_constructors():
    rc = parse_config("""
[map]
rho = 3.5
alpha_extra =
    2 0 1 0
    1 1 0.5 -0.25
[grid]
nx = 65
ny = 33
[lavaurs]
alpha = -12 3
[run]
threads = 4
""")
    assert rc.map.rho == 3.5
    assert rc.map.alpha_extra == ((2, 0, 1 + 0j), (1, 1, 0.5 - 0.25j))
    # untouched keys keep their defaults
    assert rc.map.beta_extra == ((0, 3, 1 + 0j),)
    assert (rc.grid.nx, rc.grid.ny) == (65, 33)
    assert rc.lavaurs.alpha == -12 + 3j
    assert rc.threads == 4
    # the regions config inherits the map's multiplier
    assert rc.regions.rho == 3.5


@pytest.mark.parametrize("snippet,match", [
    ("[mystery]\nx = 1\n", r"unknown section"),
    ("[map]\nwibble = 1\n", r"unknown key"),
    ("[map]\nq = banana\n", r"expected numbers"),
    ("[map]\nq = 1\n", r"expected 2 numbers"),
    ("[map]\nalpha_extra = 2 0 1\n", r"monomial rows"),
    ("[map]\nrho = 1.0\n", r"rho"),
    ("[regions]\ns = 0.05\n", r"s"),
    ("[implode]\nn_list = 50\n", r"ladder too short"),
    ("[implode]\nband = -0.08 -0.12\n", r"lo < hi"),
    ("just not ini [", r"malformed config"),
])
def test_bad_configs_fail_fast(snippet, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(snippet)


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[grid]\nnx = 48\nny = 48\n")
    assert load_config(path).grid.nx == 48
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "absent.ini")


def test_cli_rejects_bad_config(tmp_path, capsys):
    assert main(["render", "--config", str(tmp_path / "nope.ini")]) == 2
    assert "config error" in capsys.readouterr().err
    bad = tmp_path / "bad.ini"
    bad.write_text("[implode]\nn_list = 50\n")
    assert main(["implode", "--config", str(bad)]) == 2


def test_cli_render_writes_deterministic_artifacts(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(SMALL_GRID)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["render", "--config", str(cfg), "--out", str(out1),
                 "--threads", "2"]) == 0
    assert "bounded pixels" in capsys.readouterr().out
    assert main(["render", "--config", str(cfg), "--out", str(out2),
                 "--threads", "7"]) == 0
    ppms = sorted(p.name for p in out1.glob("*.ppm"))
    assert len(ppms) == 2 and any("boundary" in n for n in ppms)
    assert sorted(p.name for p in out2.glob("*.ppm")) == ppms
    for name in ppms:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        assert (out1 / (name + ".json")).exists()

    # a perturbed slice is a different file with different pixels (the
    # gate has to be wide enough to move whole pixels at 64 x 64)
    assert main(["render", "--config", str(cfg), "--out", str(out1),
                 "--eps", "0.0314", "0"]) == 0
    eps_ppms = sorted(p.name for p in out1.glob("*.ppm"))
    assert len(eps_ppms) == 4
    new = [n for n in eps_ppms if n not in ppms and "boundary" not in n]
    old = [n for n in ppms if "boundary" not in n]
    assert (out1 / new[0]).read_bytes() != (out1 / old[0]).read_bytes()


def test_cli_render_refuses_irregular_family(tmp_path, capsys):
    cfg = tmp_path / "thin.ini"
    cfg.write_text(SMALL_GRID + "[map]\nalpha_extra =\nbeta_extra =\n")
    assert main(["render", "--config", str(cfg),
                 "--out", str(tmp_path / "o")]) == 2
    assert "invalid slice" in capsys.readouterr().err


def test_cli_implode_reduced_scene(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(SCENE_GRID)
    out = tmp_path / "scene"
    assert main(["implode", "--config", str(cfg), "--out", str(out),
                 "--threads", "8"]) == 0
    assert "criterion 8 PASS" in capsys.readouterr().out
    wit = (out / "witnesses.csv").read_text()
    assert wit.startswith("ix,iy,")
    assert len(wit.strip().split("\n")) == 2
    summary = (out / "implode_summary.txt").read_text()
    assert "witness pixels: 1" in summary
    names = sorted(p.name for p in out.glob("*.ppm"))
    assert sum(n.startswith("K_base_") for n in names) == 1
    assert sum(n.startswith("K_eps_") for n in names) == 4


def test_cli_implode_inconclusive_grid(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[grid]\nnx = 128\nny = 128\nmax_iter = 2000\n")
    out = tmp_path / "scene"
    assert main(["implode", "--config", str(cfg), "--out", str(out),
                 "--threads", "8"]) == 1
    assert capsys.readouterr().err.startswith("inconclusive:")


def test_cli_verify_full_suite(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "--out", str(out), "--threads", "4"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    marks = [ln for ln in lines if ln.startswith("criterion ")]
    assert len(marks) == 8
    assert all(" PASS " in ln for ln in marks)
    for artifact in ("verify_summary.csv", "almost_fatou_convergence.csv",
                     "lavaurs_estimates.csv", "orbit_estimates.csv"):
        assert (out / artifact).exists()
    summary = (out / "verify_summary.csv").read_text()
    assert summary.startswith("criterion,name,status,details\n")
    assert summary.count(",pass,") == 8
