"""Trajectory simulation for the regime-switching skew process.

One master seed is split into three independent substreams (regime draws,
eps draws, iota draws) via ``numpy.random.SeedSequence.spawn``, so the
independence of the hidden chain from both innovation sequences holds by
construction rather than by trust in a single stream's internals.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
from typing import IO, Optional

import numpy as np
from numpy.random import Generator, PCG64

from .errors import InvalidInitError, NonFiniteValueError
from .markov import SeedLike, _as_seed_sequence, _iterate_chain, seed_record
from .model import A_FLOOR, SIGMA_FLOOR, ModelSpec

DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class Path:
    """One simulated trajectory of (regime, value) pairs.

    ``regimes[i]`` and ``values[i]`` describe time i+1; element 0 is the
    initial state, so a path of length n contains n-1 transitions. When a
    value exceeds the divergence threshold the path is truncated at that
    point and ``diverged`` is set instead of raising.
    """

    regimes: np.ndarray
    values: np.ndarray
    init_regime: int
    init_x: float
    seed: dict
    diverged: bool = False

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Ensemble:
    """Independent replications with seeds derived from one master seed."""

    paths: tuple
    master_seed: dict

    def __len__(self) -> int:
        return len(self.paths)

    def values_at(self, index: int) -> np.ndarray:
        """Cross-replication slice of values[index] (non-diverged paths only)."""
        return np.array(
            [p.values[index] for p in self.paths if not p.diverged and len(p) > index]
        )


@dataclass
class StreamBundle:
    """Three decorrelated generators: regime transitions, eps, iota."""

    regimes: Generator
    eps: Generator
    iota: Generator


def streams_from_seed(seed: SeedLike) -> StreamBundle:
    """Split one seed into the three simulation substreams."""
    ss = _as_seed_sequence(seed)
    regime_ss, eps_ss, iota_ss = ss.spawn(3)
    return StreamBundle(
        Generator(PCG64(regime_ss)),
        Generator(PCG64(eps_ss)),
        Generator(PCG64(iota_ss)),
    )


def step(spec: ModelSpec, prev_regime: int, prev_x: float, streams: StreamBundle):
    """Advance one step: draw the next regime, then the two innovations.

    Returns the pair (regime, x). The generators in ``streams`` advance in
    place; regime draws never touch the innovation streams and vice versa.

    Raises
    ------
    NonFiniteValueError
        If the new value overflows to inf or nan (callers flag the path as
        diverged instead of propagating).
    """
    n_regimes = spec.n_regimes
    if not 1 <= prev_regime <= n_regimes:
        raise InvalidInitError(f"regime {prev_regime} outside 1..{n_regimes}")
    if n_regimes == 1:
        regime = 1
    else:
        row = spec.tm.matrix[prev_regime - 1]
        cumulative = np.cumsum(row)
        cumulative[-1] = 1.0
        u = streams.regimes.random()
        regime = min(int(np.searchsorted(cumulative, u, side="right")), n_regimes - 1) + 1
    eps = float(spec.eps.sample(streams.eps))
    iota = float(spec.iota.sample(streams.iota))
    reg = spec.regimes[regime - 1]
    m = reg.m.scalar_fn()(prev_x)
    sigma = max(reg.sigma.scalar_fn()(prev_x), SIGMA_FLOOR)
    a = max(reg.a.scalar_fn()(prev_x), A_FLOOR)
    x = m + sigma * eps + a * iota * iota
    if not math.isfinite(x):
        raise NonFiniteValueError(f"value overflowed at regime {regime}")
    return regime, x


def _generate(spec: ModelSpec, init_regime: int, init_x: float, n: int, streams: StreamBundle):
    """Run the recursion with pre-drawn innovation arrays.

    Returns (regimes, values, eps, iota, diverged); regimes/values are
    truncated at the first value beyond the divergence threshold.
    """
    n_steps = n - 1
    if spec.n_regimes == 1:
        labels = np.ones(n, dtype=np.int64)
    else:
        uniforms = streams.regimes.random(n_steps) if n_steps else np.empty(0)
        labels = _iterate_chain(spec.tm.matrix, init_regime - 1, uniforms)
    eps = np.asarray(spec.eps.sample(streams.eps, n_steps), dtype=np.float64)
    iota = np.asarray(spec.iota.sample(streams.iota, n_steps), dtype=np.float64)

    m_fns = [reg.m.scalar_fn() for reg in spec.regimes]
    s_fns = [reg.sigma.scalar_fn() for reg in spec.regimes]
    a_fns = [reg.a.scalar_fn() for reg in spec.regimes]
    # Python-float lists keep the sequential loop free of array-scalar boxing.
    step_regimes = labels[1:].tolist()
    eps_list = eps.tolist()
    iota_list = iota.tolist()

    x = float(init_x)
    values = [x]
    diverged = False
    isfinite = math.isfinite
    threshold = DIVERGENCE_THRESHOLD
    for t in range(n_steps):
        k = step_regimes[t] - 1
        io = iota_list[t]
        x = m_fns[k](x) + max(s_fns[k](x), SIGMA_FLOOR) * eps_list[t] + max(
            a_fns[k](x), A_FLOOR
        ) * io * io
        if not isfinite(x):
            diverged = True
            break
        values.append(x)
        if abs(x) > threshold:
            diverged = True
            break
    length = len(values)
    return labels[:length], np.asarray(values, dtype=np.float64), eps, iota, diverged


def simulate_path(
    spec: ModelSpec, init_regime: int, init_x: float, n: int, seed: SeedLike
) -> Path:
    """Simulate a path of length ``n`` (initial state plus n-1 transitions).

    Deterministic bit-for-bit given all arguments. Divergence (|x| above
    1e12, or float overflow) truncates the path and sets the flag so failing
    configurations can still be inspected.

    Parameters
    ----------
    spec : ModelSpec
    init_regime : int
        Regime at time 1, 1-based.
    init_x : float
        Value at time 1. The stationary law of X has no closed form, so no
        canonical choice is made here; diagnostics burn in explicitly.
    n : int
        Total path length, >= 1.
    seed : int or numpy.random.SeedSequence
    """
    if not 1 <= init_regime <= spec.n_regimes:
        raise InvalidInitError(f"init regime {init_regime} outside 1..{spec.n_regimes}")
    if n < 1:
        raise ValueError("n must be >= 1")
    ss = _as_seed_sequence(seed)
    record = seed_record(ss)
    streams = streams_from_seed(ss)
    regimes, values, _, _, diverged = _generate(spec, init_regime, init_x, n, streams)
    return Path(regimes, values, init_regime, float(init_x), record, diverged)


def simulate_ensemble(
    spec: ModelSpec,
    init_regime: int,
    init_x: float,
    n: int,
    replications: int,
    master_seed: SeedLike,
    workers: int = 1,
) -> Ensemble:
    """Simulate ``replications`` independent paths from one master seed.

    Replication r runs with the r-th spawned child seed, so the ensemble is
    reproducible from the master seed alone and identical for any worker
    count (each path's randomness is self-contained; scheduling cannot
    reorder it).
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    ss = _as_seed_sequence(master_seed)
    record = seed_record(ss)
    children = ss.spawn(replications)

    def run(child):
        return simulate_path(spec, init_regime, init_x, n, child)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            paths = tuple(pool.map(run, children))
    else:
        paths = tuple(run(child) for child in children)
    return Ensemble(paths, record)


def write_path_csv(path: Path, stream: IO[str]) -> None:
    """Write a path as CSV rows (t, regime, x) with a header row."""
    stream.write("t,regime,x\n")
    regimes = path.regimes.tolist()
    values = path.values.tolist()
    for t, (k, x) in enumerate(zip(regimes, values), start=1):
        stream.write(f"{t},{k},{x!r}\n")
