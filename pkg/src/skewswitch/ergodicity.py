"""Drift-condition certification and empirical geometric-ergodicity probes.

With V(z) = 1 + x^2 as the Lyapunov function, the one-step conditional
expectation E[V(Z_t) | Z_{t-1} = (e_l, x)] has the closed form

    1 + sum_k a_lk * (m_k(x)^2 + sigma_k(x)^2 + kappa*A_k(x)^2
                      + 2*m_k(x)*A_k(x)),

which this module evaluates analytically, re-derives by Monte Carlo as an
independent oracle, and turns into certified drift constants (L, beta)
with E[V | l, x] <= (1 - beta) V(x) on a grid beyond radius L.

The geometric-ergodicity consequence is probed empirically three ways:
Kolmogorov distance between lagged marginals and a long stationary
reference run (fit to C * rho^t), geometric decay of autocovariances, and
root-n scaling of batch-means Monte Carlo standard errors.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DegeneratePathError,
    InsufficientReplicationsError,
    NoDriftRegionError,
    TooFewBatchesError,
)
from .markov import SeedLike, _as_seed_sequence, seed_record, stationary_distribution
from .model import (
    ModelSpec,
    check_assumption8,
    default_magnitudes,
    eval_regime,
    weighted_drift_sum,
)
from .simulate import Path, simulate_path, streams_from_seed, _generate


def conditional_v_expectation(spec: ModelSpec, l: int, x: float) -> float:
    """Analytic E[1 + X_t^2 | Q_{t-1} = l, X_{t-1} = x].

    Expanding E[(m + sigma*eps + A*iota^2)^2] with E eps = 0, E eps^2 = 1,
    E iota^2 = 1, E iota^4 = kappa and independence of eps and iota gives
    m^2 + sigma^2 + kappa*A^2 + 2*m*A per regime, averaged over the
    transition row of ``l``. Shares its arithmetic path with
    ``model.drift_ratio`` so the two agree to rounding.
    """
    return 1.0 + weighted_drift_sum(spec, l, float(x))


def mc_v_expectation(
    spec: ModelSpec, l: int, x: float, nsamples: int, seed: SeedLike
) -> Tuple[float, float]:
    """Monte Carlo oracle for ``conditional_v_expectation``.

    Draws the next regime from row ``l``, applies one step of the recursion
    from ``x``, and averages 1 + X_t^2. Returns (estimate, standard error).

    Parameters
    ----------
    nsamples : int
        Number of independent one-step draws; at least 10_000 so the
        standard error is itself reliable.
    """
    if nsamples < 10_000:
        raise ValueError("nsamples must be at least 10_000")
    rng = np.random.default_rng(_as_seed_sequence(seed))
    cumulative = np.cumsum(spec.tm.matrix[l - 1])
    cumulative[-1] = 1.0
    regimes = np.searchsorted(cumulative, rng.random(nsamples), side="right")
    eps = spec.eps.sample(rng, nsamples)
    iota = spec.iota.sample(rng, nsamples)
    x_next = np.empty(nsamples)
    for k in range(spec.n_regimes):
        mask = regimes == k
        if not mask.any():
            continue
        m, sigma, a = eval_regime(spec, k + 1, float(x))
        x_next[mask] = m + sigma * eps[mask] + a * iota[mask] ** 2
    v = 1.0 + x_next**2
    estimate = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(nsamples))
    return estimate, se


@dataclass(frozen=True)
class DriftConstants:
    """Certified drift region: E[V | l, x] <= (1 - beta) V(x) for |x| >= L.

    ``margins`` holds (E[V | l, x] - V(x)) / V(x) for every regime l (rows)
    and grid point x (columns); the certification is that every margin at
    |x| >= L is <= -beta, so in particular the bound holds strictly beyond
    the radius L.
    """

    L: float
    beta: float
    grid: np.ndarray
    margins: np.ndarray
    slack: float

    def to_dict(self) -> dict:
        return {
            "L": float(self.L),
            "beta": float(self.beta),
            "slack": float(self.slack),
            "grid": [float(v) for v in self.grid],
            "margins": [[float(v) for v in row] for row in self.margins],
        }


def _drift_margins(spec: ModelSpec, grid: np.ndarray) -> np.ndarray:
    margins = np.empty((spec.n_regimes, grid.size))
    for l in range(1, spec.n_regimes + 1):
        for j, x in enumerate(grid):
            v = 1.0 + x * x
            margins[l - 1, j] = (conditional_v_expectation(spec, l, x) - v) / v
    return margins


def estimate_drift_constants(
    spec: ModelSpec, grid: Optional[np.ndarray] = None, slack: float = 0.05
) -> DriftConstants:
    """Find the smallest grid radius L with a uniformly negative drift margin.

    Requires a pass verdict from ``check_assumption8`` (otherwise raises
    NoDriftRegionError). Scans the grid magnitudes in increasing order for
    the smallest L such that (E[V | l, x] - V(x)) / V(x) < 0 for every
    regime l at every grid point with |x| >= L, then reports

        beta = (1 - slack) * min over that region of the negated margin,

    the largest margin achievable after the safety slack. The slack guards
    against grid points sitting exactly on the inequality boundary.

    Raises
    ------
    NoDriftRegionError
        If Assumption 8 fails on the grid, or no radius achieves a
        uniformly negative margin.
    """
    if grid is None:
        mags = default_magnitudes()
        grid = np.concatenate([-mags[::-1], mags])
    else:
        grid = np.asarray(grid, dtype=np.float64)
    if not 0.0 < slack < 1.0:
        raise ValueError("slack must be in (0, 1)")
    magnitudes = np.unique(np.abs(grid[grid != 0.0]))
    report = check_assumption8(spec, magnitudes=magnitudes)
    if not report.passed:
        raise NoDriftRegionError(
            f"drift condition fails: limsup estimate {report.max_limsup:.6g} "
            "is not below 1"
        )
    margins = _drift_margins(spec, grid)
    worst = margins.max(axis=0)
    for L in magnitudes:
        region = np.abs(grid) >= L
        if region.any() and worst[region].max() < 0.0:
            beta = (1.0 - slack) * float(-worst[region].max())
            return DriftConstants(float(L), beta, grid, margins, slack)
    raise NoDriftRegionError(
        "no grid radius achieves a uniformly negative drift margin"
    )


def kolmogorov_distance(sample, sorted_reference: np.ndarray) -> float:
    """Exact two-sample Kolmogorov distance against a pre-sorted reference.

    The supremum of |F1 - F2| over the line is attained adjacent to a jump
    of either empirical CDF; because both CDFs are monotone it suffices to
    compare them at each sample point from the left and from the right.
    """
    s = np.sort(np.asarray(sample, dtype=np.float64))
    n1 = s.size
    n2 = sorted_reference.size
    f1_right = np.arange(1, n1 + 1) / n1
    f1_left = np.arange(0, n1) / n1
    f2_right = np.searchsorted(sorted_reference, s, side="right") / n2
    f2_left = np.searchsorted(sorted_reference, s, side="left") / n2
    d = max(
        float(np.abs(f1_right - f2_right).max()),
        float(np.abs(f1_left - f2_left).max()),
    )
    return min(d, 1.0)


@dataclass(frozen=True)
class ConvergenceReport:
    """Empirical geometric-decay summary for lagged marginals.

    ``fitted_rho`` and its companions are None when no lag rose above the
    Monte Carlo noise floor and the start was already indistinguishable
    from stationarity (``note`` says so).
    """

    lags: np.ndarray
    distances: np.ndarray
    noise_floor: float
    informative_lags: np.ndarray
    fitted_log_C: Optional[float]
    fitted_rho: Optional[float]
    r_squared: Optional[float]
    autocov_rate: float
    autocov_r_squared: float
    mcse_table: Tuple[Tuple[int, float], ...]
    reference_length: int
    reference_burn_in: int
    reference_half_distance: float
    seed: dict
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "lags": [int(t) for t in self.lags],
            "distances": [float(d) for d in self.distances],
            "noise_floor": float(self.noise_floor),
            "informative_lags": [int(t) for t in self.informative_lags],
            "fitted_log_C": None if self.fitted_log_C is None else float(self.fitted_log_C),
            "fitted_rho": None if self.fitted_rho is None else float(self.fitted_rho),
            "r_squared": None if self.r_squared is None else float(self.r_squared),
            "autocov_rate": float(self.autocov_rate),
            "autocov_r_squared": float(self.autocov_r_squared),
            "mcse_table": [[int(n), float(m)] for n, m in self.mcse_table],
            "reference_length": self.reference_length,
            "reference_burn_in": self.reference_burn_in,
            "reference_half_distance": float(self.reference_half_distance),
            "seed": self.seed,
            "note": self.note,
        }


def _fit_log_decay(lags: np.ndarray, values: np.ndarray) -> Tuple[float, float, float]:
    """Least-squares fit of log(values) = intercept + lag * log(rate)."""
    y = np.log(values)
    slope, intercept = np.polyfit(lags, y, 1)
    predicted = intercept + slope * lags
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot < 1e-300 else 1.0 - ss_res / ss_tot
    rate = min(math.exp(slope), 1.0)
    return intercept, rate, r_squared


def _stationary_values(path: Path, burn_in: int) -> np.ndarray:
    return path.values[burn_in:]


def distance_decay(
    spec: ModelSpec,
    x0_list: Sequence[float],
    lags: Sequence[int],
    R: int,
    master_seed: SeedLike,
    reference_length: int = 10**6,
    reference_burn_in: int = 10**5,
    workers: int = 1,
) -> ConvergenceReport:
    """Measure how fast lagged marginals approach the stationary law.

    For each lag t the empirical distribution of X at lag t — pooled over
    ``R`` replications from each starting value in ``x0_list``, with the
    starting regime drawn from the stationary chain distribution — is
    compared to a single long reference run by Kolmogorov distance. A
    least-squares line through log(distance) on the lags above the noise
    floor 2/sqrt(pooled R) yields the geometric rate estimate.

    The reference run's stationarity is sanity-checked by the Kolmogorov
    distance between its two halves against a floor widened by the
    estimated autocorrelation time; disagreement raises ArithmeticError.
    The same reference feeds the autocovariance-decay rate and the
    batch-means MCSE table included in the report.

    Raises
    ------
    NoDriftRegionError
        If the drift condition fails for ``spec`` (the decay fit assumes a
        stable model).
    InsufficientReplicationsError
        If the noise floor is so high that even a maximally distant start
        could not register an informative lag.
    """
    report = check_assumption8(spec)
    if not report.passed:
        raise NoDriftRegionError(
            "distance decay requires a pass verdict on the drift condition"
        )
    lags = np.asarray(sorted(int(t) for t in lags), dtype=np.int64)
    if lags.size == 0 or lags[0] < 0:
        raise ValueError("lags must be nonnegative integers")
    if R < 2:
        raise ValueError("R must be at least 2")
    x0_list = [float(x) for x in x0_list]
    if not x0_list:
        raise ValueError("x0_list must be nonempty")

    root = _as_seed_sequence(master_seed)
    n_reps = R * len(x0_list)
    children = root.spawn(2 + n_reps)

    reference = simulate_path(
        spec, init_regime=1, init_x=0.0,
        n=reference_burn_in + reference_length, seed=children[0],
    )
    if reference.diverged:
        raise ArithmeticError("reference run diverged; model is not stable")
    stationary = _stationary_values(reference, reference_burn_in)
    sorted_reference = np.sort(stationary)
    half = stationary.size // 2
    half_distance = kolmogorov_distance(
        stationary[:half], np.sort(stationary[half:])
    )
    _, half_mcse = batch_means_mcse(stationary, n_batches=25)
    gamma0 = float(stationary.var())
    tau = max(1.0, stationary.size * half_mcse**2 / gamma0) if gamma0 > 0 else 1.0
    half_floor = 2.0 * math.sqrt(2.0 * tau / half)
    if half_distance > half_floor:
        raise ArithmeticError(
            f"reference halves disagree (Kolmogorov {half_distance:.4g} > "
            f"floor {half_floor:.4g}); reference run is not stationary"
        )

    pi = stationary_distribution(spec.tm).probabilities
    cum_pi = np.cumsum(pi)
    cum_pi[-1] = 1.0
    init_rng = np.random.default_rng(children[1])
    init_regimes = (
        np.searchsorted(cum_pi, init_rng.random(n_reps), side="right") + 1
    )
    n_steps = int(lags[-1]) + 1

    def run_replication(idx: int) -> np.ndarray:
        x0 = x0_list[idx // R]
        streams = streams_from_seed(children[2 + idx])
        regimes, values, _, _, diverged = _generate(
            spec, int(init_regimes[idx]), x0, n_steps, streams
        )
        if diverged:
            raise ArithmeticError("replication diverged under a stable model")
        return values[lags]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_replication, range(n_reps)))
    else:
        rows = [run_replication(i) for i in range(n_reps)]
    samples = np.vstack(rows)

    distances = np.array(
        [kolmogorov_distance(samples[:, j], sorted_reference) for j in range(lags.size)]
    )
    noise_floor = 2.0 / math.sqrt(n_reps)
    informative = lags[distances > noise_floor]

    max_lag = min(50, stationary.size // 100)
    auto = autocov_decay(stationary, max_lag)
    table = []
    for divisor in (8, 4, 2, 1):
        n = stationary.size // divisor
        if n // 25 >= 1:
            _, mcse = batch_means_mcse(stationary[:n], n_batches=25)
            table.append((n, mcse))

    common = dict(
        lags=lags,
        distances=distances,
        noise_floor=noise_floor,
        informative_lags=informative,
        autocov_rate=auto.rate,
        autocov_r_squared=auto.r_squared,
        mcse_table=tuple(table),
        reference_length=reference_length,
        reference_burn_in=reference_burn_in,
        reference_half_distance=half_distance,
        seed=seed_record(root),
    )
    if informative.size == 0:
        if noise_floor >= 0.5:
            raise InsufficientReplicationsError(
                f"noise floor {noise_floor:.3g} swamps every achievable distance; "
                "increase R"
            )
        return ConvergenceReport(
            fitted_log_C=None,
            fitted_rho=None,
            r_squared=None,
            note="already-stationary: every lag distance is below the noise floor",
            **common,
        )
    mask = distances > noise_floor
    if mask.sum() == 1:
        raise InsufficientReplicationsError(
            "only one lag rose above the noise floor; cannot fit a decay rate"
        )
    log_c, rho, r_squared = _fit_log_decay(lags[mask], distances[mask])
    return ConvergenceReport(
        fitted_log_C=log_c, fitted_rho=rho, r_squared=r_squared, **common
    )


@dataclass(frozen=True)
class AutocovReport:
    """Geometric fit |autocov(t)| ~ c * rate^t over the informative lags.

    ``informative`` is False (and the fit fields are NaN) when no lag's
    autocovariance exceeded the noise floor 2*gamma_0/sqrt(n), as happens
    for serially independent data.
    """

    rate: float
    r_squared: float
    informative: bool
    lags: np.ndarray
    autocovariances: np.ndarray
    noise_floor: float

    def to_dict(self) -> dict:
        return {
            "rate": float(self.rate),
            "r_squared": float(self.r_squared),
            "informative": self.informative,
            "lags": [int(t) for t in self.lags],
            "autocovariances": [float(g) for g in self.autocovariances],
            "noise_floor": float(self.noise_floor),
        }


def autocov_decay(path: Union[Path, np.ndarray], max_lag: int) -> AutocovReport:
    """Fit a geometric decay rate to the autocovariance sequence.

    Accepts a simulated Path (its values) or a plain array assumed to be a
    stationary section. Lags whose |autocovariance| falls below the noise
    floor 2*gamma_0/sqrt(n) carry no signal; the fit uses the initial run
    of lags above the floor.

    Raises
    ------
    DegeneratePathError
        If the sample variance is (numerically) zero.
    ValueError
        If the section is shorter than 100 * max_lag.
    """
    values = np.asarray(path.values if isinstance(path, Path) else path, dtype=np.float64)
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    n = values.size
    if n < 100 * max_lag:
        raise ValueError("path section must be at least 100 * max_lag long")
    centered = values - values.mean()
    gamma = np.array(
        [float(centered[: n - t] @ centered[t:]) / n for t in range(max_lag + 1)]
    )
    gamma0 = gamma[0]
    if gamma0 <= 1e-300 or gamma0 <= 1e-14 * float(np.mean(values**2)):
        raise DegeneratePathError("sample variance is numerically zero")
    floor = 2.0 * gamma0 / math.sqrt(n)
    lags = np.arange(1, max_lag + 1)
    above = np.abs(gamma[1:]) > floor
    run_end = int(np.argmin(above)) if not above.all() else max_lag
    if run_end < 2:
        return AutocovReport(
            math.nan, math.nan, False, lags, gamma[1:], floor
        )
    fit_lags = lags[:run_end]
    _, rate, r_squared = _fit_log_decay(fit_lags, np.abs(gamma[1 : run_end + 1]))
    return AutocovReport(rate, r_squared, True, lags, gamma[1:], floor)


def batch_means_mcse(
    path: Union[Path, np.ndarray], n_batches: int, burn_in: int = 0
) -> Tuple[float, float]:
    """Sample mean and batch-means Monte Carlo standard error.

    Splits the post-burn-in values into ``n_batches`` equal batches
    (discarding the remainder), and estimates the MCSE of the overall mean
    as std(batch means, ddof=1) / sqrt(n_batches).

    Raises
    ------
    TooFewBatchesError
        If fewer than 20 batches are requested or the path cannot fill
        them with at least one point each.
    """
    values = np.asarray(path.values if isinstance(path, Path) else path, dtype=np.float64)
    if burn_in < 0 or burn_in >= values.size:
        raise ValueError("burn_in must be in [0, len(path))")
    values = values[burn_in:]
    if n_batches < 20:
        raise TooFewBatchesError(
            f"need at least 20 batches, got {n_batches}"
        )
    batch_size = values.size // n_batches
    if batch_size < 1:
        raise TooFewBatchesError(
            f"{values.size} values cannot fill {n_batches} batches"
        )
    used = values[: batch_size * n_batches].reshape(n_batches, batch_size)
    batch_means = used.mean(axis=1)
    mean = float(used.mean())
    mcse = float(batch_means.std(ddof=1) / math.sqrt(n_batches))
    return mean, mcse
