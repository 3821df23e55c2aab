"""Acceptance gate: every check in swarmseek.acceptance at full size.

The hexagon tracking runs are shared across tests through the module-level
cache inside swarmseek.acceptance, so the 20 matched-seed simulations are
executed once even though two tests consume them.
"""

import pytest

from swarmseek import acceptance


def _run(name):
    result = acceptance.CHECKS[name](quick=False)
    assert result.passed, f"{name}: {result.detail}"
    return result


def test_linear_field_estimates_are_exact():
    _run("linear-exactness")


def test_estimate_error_bound_is_sound_with_containment():
    _run("error-bound-soundness")


def test_hexagon_error_bound_constant():
    _run("hexagon-constant")


def test_formation_gradient_matches_finite_differences():
    _run("formation-gradient")


@pytest.mark.slow
def test_hexagon_tracking_reaches_and_keeps_the_cap():
    _run("hexagon-tracking")


@pytest.mark.slow
def test_ablation_gap_separation():
    _run("ablation")


def test_recursive_bound_matches_closed_form():
    _run("bound-consistency")


def test_bounded_error_oracle_distance_bound():
    _run("oracle-distance-bound")


def test_byte_identical_reruns():
    _run("determinism")
