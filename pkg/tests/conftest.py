"""Shared model fixtures and the acceptance-summary reporting hook."""

import numpy as np
import pytest

from skewswitch import (
    InnovationSpec,
    ModelSpec,
    Regime,
    affine,
    constant,
    validate_transition_matrix,
)

GAUSS = InnovationSpec("standard-normal")


def make_spec(matrix, regimes, eps=GAUSS, iota=GAUSS):
    """Assemble a ModelSpec from raw pieces with shared defaults."""
    return ModelSpec(validate_transition_matrix(matrix), tuple(regimes), eps, iota)


def reference_regimes():
    """Contracting regime (slope 0.3) plus near-critical regime (slope 1.1)."""
    return (
        Regime(affine(0.0, 0.3), constant(1.0), constant(0.1)),
        Regime(affine(0.0, 1.1), constant(1.0), constant(0.1)),
    )


@pytest.fixture(scope="session")
def reference_spec():
    """Two-regime benchmark with drift limsups (0.202, 0.986): stable but heavy-tailed."""
    return make_spec([[0.9, 0.1], [0.2, 0.8]], reference_regimes())


@pytest.fixture(scope="session")
def contracting_spec():
    """Single contracting regime: limsup 0.25, light tails."""
    return make_spec(
        [[1.0]], [Regime(affine(0.0, 0.5), constant(1.0), constant(0.1))]
    )


@pytest.fixture(scope="session")
def explosive_spec():
    """Supercritical slope 1.2 in the only regime: limsup 1.44."""
    return make_spec(
        [[1.0]], [Regime(affine(0.0, 1.2), constant(1.0), constant(0.1))]
    )


@pytest.fixture(scope="session")
def iid_spec():
    """m = 0, sigma = 1, A at the positivity floor: the values are iid."""
    return make_spec(
        [[1.0]], [Regime(constant(0.0), constant(1.0), constant(1e-12))]
    )


@pytest.fixture(scope="session")
def rng_factory():
    def factory(seed):
        return np.random.default_rng(seed)

    return factory


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criterion pass/fail lines after the run."""
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
