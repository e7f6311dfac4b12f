"""Top-level acceptance gate: one test and one summary line per criterion.

Each test exercises a package-level guarantee end to end against an
independent oracle (Monte Carlo, closed form, or byte comparison), appends
a PASS/FAIL line to ``RESULTS`` (echoed after the run by the terminal
summary hook in conftest), and enforces its wall-clock budget.
"""

import time

import numpy as np
from scipy import integrate, stats

from skewswitch import (
    InnovationSpec,
    Regime,
    affine,
    affine_abs,
    analytic_tail_limits,
    batch_means_mcse,
    check_assumption8,
    conditional_v_expectation,
    constant,
    distance_decay,
    gbar,
    mc_v_expectation,
    normalization_integral,
    saturating,
    simulate_ensemble,
    simulate_path,
    small_set_lower_bound,
)
from skewswitch.cli import main

from conftest import GAUSS, make_spec, reference_regimes

RESULTS = []

LAPLACE = InnovationSpec("standardized-laplace")
T8 = InnovationSpec("standardized-student-t", nu=8.0)


def _finish(index, label, ok, detail, elapsed, budget=None):
    ok = bool(ok) and (budget is None or elapsed <= budget)
    status = "PASS" if ok else "FAIL"
    clock = f"{elapsed:.1f}s" + (f" of {budget:.0f}s budget" if budget else "")
    RESULTS.append(f"criterion {index} ({label}): {status} — {detail} [{clock}]")
    assert ok, f"criterion {index} ({label}): {detail}"


def _config_battery():
    """Five structurally distinct stable models for the drift identity."""
    return [
        make_spec([[0.9, 0.1], [0.2, 0.8]], reference_regimes()),
        make_spec([[1.0]], [Regime(affine(0.0, 0.5), constant(1.0), constant(0.1))]),
        make_spec(
            [[0.7, 0.3], [0.4, 0.6]],
            [
                Regime(affine(0.5, 0.4), constant(0.8), constant(0.3)),
                Regime(affine(-0.5, 0.6), affine_abs(1.0, 0.2), constant(0.2)),
            ],
            eps=LAPLACE,
            iota=LAPLACE,
        ),
        make_spec(
            [[1.0]],
            [Regime(saturating(2.0, 0.0), affine_abs(1.0, 0.5), constant(0.2))],
            iota=T8,
        ),
        make_spec(
            [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]],
            [
                Regime(affine(0.0, 0.3), constant(1.0), constant(0.1)),
                Regime(affine(0.0, 0.5), constant(1.2), constant(0.2)),
                Regime(affine(0.0, 0.7), constant(0.9), constant(0.15)),
            ],
        ),
    ]


class TestAcceptanceCriteria:
    def test_criterion_1_drift_identity(self):
        started = time.perf_counter()
        rng = np.random.default_rng(3001)
        hits = total = 0
        for spec in _config_battery():
            for _ in range(10):
                l = int(rng.integers(1, spec.n_regimes + 1))
                x = float(rng.uniform(-20.0, 20.0))
                exact = conditional_v_expectation(spec, l, x)
                estimate, se = mc_v_expectation(
                    spec, l, x, 10**6, seed=int(rng.integers(2**31))
                )
                hits += abs(estimate - exact) < 3.0 * se
                total += 1
        elapsed = time.perf_counter() - started
        _finish(
            1,
            "drift identity",
            hits >= 0.95 * total,
            f"{hits}/{total} (regime, x) pairs within 3 SE of the 1e6-draw"
            " Monte Carlo oracle",
            elapsed,
            budget=120.0,
        )

    def test_criterion_2_density_normalization(self):
        started = time.perf_counter()
        families = (GAUSS, LAPLACE, T8)
        skew_scale = 0.3
        worst_gbar = worst_norm = 0.0
        for eps in families:
            for iota in families:
                spec = make_spec(
                    [[1.0]],
                    [Regime(affine(0.0, 0.5), constant(1.0), constant(skew_scale))],
                    eps=eps,
                    iota=iota,
                )
                knots = [0.0] + [skew_scale * (12.0 * 2**j) ** 2 for j in range(12)]
                total = sum(
                    integrate.quad(
                        lambda y: gbar(spec, 1, 1.0, y), p, q, limit=200
                    )[0]
                    for p, q in zip(knots[:-1], knots[1:])
                )
                worst_gbar = max(worst_gbar, abs(total - 1.0))
                worst_norm = max(
                    worst_norm, abs(normalization_integral(spec, 1, 1.0) - 1.0)
                )

        # unit skew scale, Gaussian iota: gbar is the chi-squared(1) density
        unit = make_spec(
            [[1.0]], [Regime(constant(0.0), constant(1.0), constant(1.0))]
        )
        draws = np.random.default_rng(505).standard_normal(10**7) ** 2
        grid = np.linspace(0.3, 2.8, 11)
        half_width = 0.025
        worst_hist = 0.0
        for u in grid:
            exact = float(gbar(unit, 1, 0.0, u))
            assert abs(exact - stats.chi2.pdf(u, df=1)) < 1e-12
            mass = np.count_nonzero(
                (draws >= u - half_width) & (draws < u + half_width)
            )
            estimate = mass / (10**7 * 2 * half_width)
            worst_hist = max(worst_hist, abs(estimate - exact) / exact)
        elapsed = time.perf_counter() - started
        _finish(
            2,
            "density normalization",
            worst_gbar <= 1e-6 and worst_norm <= 1e-6 and worst_hist <= 0.01,
            f"3x3 family matrix: max |int gbar - 1| = {worst_gbar:.2e}, "
            f"max |normalization - 1| = {worst_norm:.2e} (tol 1e-6); "
            f"chi2(1) vs 1e7-draw histogram at 11 points: "
            f"max rel err {worst_hist:.2%} (tol 1%)",
            elapsed,
            budget=300.0,
        )

    def test_criterion_3_drift_limit_agreement(self):
        started = time.perf_counter()
        configs = [
            make_spec([[0.9, 0.1], [0.2, 0.8]], reference_regimes()),
        ] + [
            make_spec(
                [[1.0]],
                [Regime(affine(0.0, slope), constant(1.0), constant(0.1))],
            )
            for slope in (0.3, 0.5, 0.7, 1.05, 1.2)
        ]
        worst_rel = 0.0
        verdicts_ok = True
        spanned = set()
        for spec in configs:
            analytic = float(np.max(analytic_tail_limits(spec)))
            report = check_assumption8(spec)
            worst_rel = max(
                worst_rel, abs(report.max_limsup - analytic) / analytic
            )
            verdicts_ok &= report.verdict == ("pass" if analytic < 1.0 else "fail")
            spanned.add(round(analytic, 3))
        elapsed = time.perf_counter() - started
        _finish(
            3,
            "drift limit agreement",
            worst_rel <= 0.02 and verdicts_ok and {0.25, 0.986, 1.44} <= spanned,
            f"6 affine configs spanning limits {sorted(spanned)}: grid limsup "
            f"within {worst_rel:.2%} of analytic (tol 2%), all verdicts match"
            " the sign of (limsup - 1)",
            elapsed,
            budget=60.0,
        )

    def test_criterion_4_geometric_decay(self, reference_spec, explosive_spec):
        started = time.perf_counter()
        report = distance_decay(
            reference_spec,
            [50.0],
            range(0, 41),
            R=2000,
            master_seed=2025,
            reference_length=10**6,
            reference_burn_in=10**5,
            workers=4,
        )
        ensemble = simulate_ensemble(explosive_spec, 1, 50.0, 10**4, 100, 424)
        n_diverged = sum(path.diverged for path in ensemble.paths)
        elapsed = time.perf_counter() - started
        _finish(
            4,
            "geometric-ergodicity consequence",
            0.0 < report.fitted_rho < 1.0
            and report.r_squared >= 0.9
            and n_diverged >= 95,
            f"reference config R=2000, lags 0..40: fitted rho = "
            f"{report.fitted_rho:.4f} < 1, fit R^2 = {report.r_squared:.3f} "
            f">= 0.9 over {report.informative_lags.size} informative lags; "
            f"explosive config: {n_diverged}/100 paths diverged (need >= 95)",
            elapsed,
            budget=600.0,
        )

    def test_criterion_5_mcse_consistency(self, reference_spec, iid_spec):
        started = time.perf_counter()
        path = simulate_path(reference_spec, 1, 0.0, 8 * 10**5, seed=1005)
        scaled = []
        for divisor in (8, 4, 2, 1):
            n = len(path.values) // divisor
            _, mcse = batch_means_mcse(path.values[:n], 25)
            scaled.append(mcse * np.sqrt(n))
        ladder_ratio = max(scaled) / min(scaled)
        control = simulate_path(iid_spec, 1, 0.0, 10**6, seed=2101)
        _, iid_mcse = batch_means_mcse(control.values, 50)
        iid_rel = abs(iid_mcse - 1e-3) / 1e-3
        elapsed = time.perf_counter() - started
        _finish(
            5,
            "CLT/MCSE consistency",
            ladder_ratio < 1.5 and iid_rel <= 0.2,
            f"reference config: mcse*sqrt(n) spread {ladder_ratio:.3f} over "
            f"n = 1e5..8e5 (need < 1.5); iid control mcse = {iid_mcse:.2e} "
            f"vs 1/sqrt(n) = 1e-3 ({iid_rel:.1%} off, tol 20%)",
            elapsed,
            budget=180.0,
        )

    def test_criterion_6_small_set_positivity(self, reference_spec):
        started = time.perf_counter()
        B, target = (-2.0, 2.0), (-1.0, 1.0)
        reachable_ok = True
        worst = np.inf
        for t, grid_n in ((1, 9), (2, 5)):
            for l in (1, 2):
                for k in (1, 2):
                    report = small_set_lower_bound(
                        reference_spec, l, k, B, target, t=t, grid_n=grid_n
                    )
                    reachable_ok &= report.passed and report.min_probability > 0.0
                    worst = min(worst, report.min_probability)
        three = make_spec(
            [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]],
            [
                Regime(affine(0.0, 0.3), constant(1.0), constant(0.1)),
                Regime(affine(0.0, 0.5), constant(1.2), constant(0.2)),
                Regime(affine(0.0, 0.7), constant(0.9), constant(0.15)),
            ],
        )
        blocked = small_set_lower_bound(three, 1, 3, B, target, t=1, grid_n=5)
        opened = small_set_lower_bound(three, 1, 3, B, target, t=2, grid_n=3)
        elapsed = time.perf_counter() - started
        _finish(
            6,
            "small-set positivity",
            reachable_ok
            and blocked.min_probability == 0.0
            and not blocked.passed
            and opened.min_probability > 0.0,
            f"reference config: all 4 regime pairs positive at t in {{1, 2}} "
            f"(min bound {worst:.3e}); blocked pair (1,3): bound 0 at t=1, "
            f"{opened.min_probability:.3e} > 0 at t=2",
            elapsed,
            budget=300.0,
        )

    def test_criterion_7_byte_determinism(self, tmp_path):
        started = time.perf_counter()
        config_text = """\
[model]
transition_matrix = [[0.9, 0.1], [0.2, 0.8]]
eps = "standard-normal"
iota = "standard-normal"

[[model.regimes]]
m = { family = "affine", intercept = 0.0, slope = 0.3 }
sigma = { family = "constant", value = 1.0 }
a = { family = "constant", value = 0.1 }

[[model.regimes]]
m = { family = "affine", intercept = 0.0, slope = 1.1 }
sigma = { family = "constant", value = 1.0 }
a = { family = "constant", value = 0.1 }

[simulate]
n = 2000
replications = 4
seed = 42
"""
        config_path = tmp_path / "run.toml"
        config_path.write_text(config_text)
        outs = {
            "first": ["--workers", "1"],
            "second": ["--workers", "1"],
            "threaded": ["--workers", "8"],
        }
        for name, extra in outs.items():
            code = main(
                ["simulate", str(config_path), "--out", str(tmp_path / name)]
                + extra
            )
            assert code == 0
        names = [f"path_{i:03d}.csv" for i in range(1, 5)]
        identical = all(
            (tmp_path / "second" / name).read_bytes()
            == (tmp_path / "first" / name).read_bytes()
            and (tmp_path / "threaded" / name).read_bytes()
            == (tmp_path / "first" / name).read_bytes()
            for name in names
        )
        elapsed = time.perf_counter() - started
        _finish(
            7,
            "byte determinism",
            identical,
            "4 replication CSVs byte-identical across two runs and worker"
            " counts {1, 8}",
            elapsed,
        )
