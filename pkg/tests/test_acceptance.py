"""The acceptance gate: every numbered criterion at its shipped scale.

Each test runs one criterion exactly as `implab verify` / `implab
implode` would (full grids, full ladders, stated tolerances), prints
its one-line verdict, and fails on the criterion's own pass flag, so
this module is the single place that decides whether a build is good.
"""

from implab import suite


def _check(res, budget):
    print(f"criterion {res.criterion} {'PASS' if res.passed else 'FAIL'} "
          f"({res.elapsed:.2f} s): {res.name}: {res.details}")
    assert res.passed, f"criterion {res.criterion}: {res.details}"
    assert res.elapsed < budget, \
        f"criterion {res.criterion} took {res.elapsed:.1f} s (budget {budget})"


def test_criterion_1_functional_equation():
    _check(suite.criterion1_functional_equation(), budget=10)


def test_criterion_2_almost_fatou_convergence():
    _check(suite.criterion2_almost_fatou(), budget=60)


def test_criterion_3_lavaurs_line_values():
    _check(suite.criterion3_lavaurs_1d(), budget=30)


def test_criterion_4_lavaurs_plane_estimates():
    _check(suite.criterion4_lavaurs_2d(), budget=120)


def test_criterion_5_orbit_estimates():
    _check(suite.criterion5_orbit_estimates(), budget=120)


def test_criterion_6_telescoping_products():
    _check(suite.criterion6_telescoping(), budget=5)


def test_criterion_7_gate_entry_exit():
    _check(suite.criterion7_entry_exit(), budget=60)


def test_criterion_8_discontinuity_scene():
    _check(suite.criterion8_discontinuity(threads=8), budget=600)


def test_criterion_9_determinism():
    _check(suite.criterion9_determinism(), budget=60)
