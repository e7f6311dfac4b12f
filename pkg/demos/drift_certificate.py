"""Certify stability: from drift ratios to explicit (L, beta) constants.

Walks the same three models used throughout the test suite — contracting,
near-critical, and explosive — and shows how the numeric drift machinery
separates them. Run with ``python3 demos/drift_certificate.py``.
"""

import math

import numpy as np

from skewswitch import (
    InnovationSpec,
    ModelSpec,
    NoDriftRegionError,
    Regime,
    affine,
    check_assumption8,
    conditional_v_expectation,
    constant,
    drift_ratio,
    estimate_drift_constants,
    validate_transition_matrix,
)

GAUSS = InnovationSpec("standard-normal")


def single_regime(slope):
    return ModelSpec(
        validate_transition_matrix([[1.0]]),
        (Regime(affine(0.0, slope), constant(1.0), constant(0.1)),),
        GAUSS,
        GAUSS,
    )


def main():
    models = {
        "contracting (slope 0.5)": single_regime(0.5),
        "near-critical (slope sqrt(0.98))": single_regime(math.sqrt(0.98)),
        "explosive (slope 1.2)": single_regime(1.2),
    }

    for label, spec in models.items():
        print(f"\n== {label} ==")

        # The ratio E[V(X_t) | x] / V(x) with V(x) = 1 + x^2 tends to the
        # squared slope as |x| grows; stability needs a limit below 1.
        for x in (2.0, 10.0, 100.0):
            ratio = drift_ratio(spec, 1, x)
            print(f"  drift ratio at x = {x:>5.1f}: {ratio:.4f}")
        print(
            f"  conditional E[1 + X_t^2] from x = 10: "
            f"{conditional_v_expectation(spec, 1, 10.0):.2f} (V(10) = 101)"
        )

        report = check_assumption8(spec)
        print(
            f"  assumption check: {report.verdict} "
            f"(grid limsup {report.max_limsup:.4f}, "
            f"analytic {max(report.analytic_limsup):.4f})"
        )

        try:
            constants = estimate_drift_constants(spec)
        except NoDriftRegionError as exc:
            print(f"  drift constants: none ({exc})")
            continue
        region = np.abs(constants.grid) >= constants.L
        print(
            f"  drift constants: L = {constants.L:g}, beta = {constants.beta:.4f}"
        )
        print(
            "  certificate: margins on |x| >= L range "
            f"[{constants.margins[:, region].min():.4f}, "
            f"{constants.margins[:, region].max():.4f}] (all <= -beta)"
        )


if __name__ == "__main__":
    main()
