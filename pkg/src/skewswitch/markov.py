"""Hidden regime chain: validation, structure checks, stationary law, sampling.

The regime process is a first-order Markov chain on {1, ..., K} with a
row-stochastic transition matrix. Regime labels are 1-based everywhere in the
public API and in serialized output; arrays are converted to 0-based indices
only inside numerical kernels.
"""

from collections import deque
from dataclasses import dataclass
import math
from typing import Sequence, Union

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    InvalidInitError,
    NegativeEntryError,
    NonStochasticRowError,
    PeriodicChainError,
    ReducibleChainError,
)

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10

SeedLike = Union[int, SeedSequence]


def _as_seed_sequence(seed: SeedLike) -> SeedSequence:
    return seed if isinstance(seed, SeedSequence) else SeedSequence(seed)


def seed_record(seed: SeedLike) -> dict:
    """JSON-friendly record of a seed: entropy plus spawn key."""
    ss = _as_seed_sequence(seed)
    return {"entropy": ss.entropy, "spawn_key": list(ss.spawn_key)}


@dataclass(frozen=True)
class TransitionMatrix:
    """Validated K x K row-stochastic matrix of the hidden chain.

    Construct via :func:`validate_transition_matrix`; direct construction
    skips validation and is intended for internal use.
    """

    matrix: np.ndarray

    @property
    def size(self) -> int:
        """Number of regimes K."""
        return self.matrix.shape[0]

    def row(self, i: int) -> np.ndarray:
        """Transition probabilities out of regime ``i`` (1-based)."""
        return self.matrix[i - 1]


@dataclass(frozen=True)
class StationaryDistribution:
    """Length-K probability vector pi with pi^T A = pi^T."""

    probabilities: np.ndarray
    residual: float  # max |pi^T A - pi^T| achieved by the solve


@dataclass(frozen=True)
class RegimeSequence:
    """Simulated regime labels (1-based) plus the seed that produced them."""

    states: np.ndarray
    seed: dict


def validate_transition_matrix(raw) -> TransitionMatrix:
    """Validate a raw square matrix as a transition matrix.

    Rows must sum to 1 within 1e-12 and all entries must be nonnegative.
    The matrix is never renormalized: a row-sum violation is reported as an
    error so configuration bugs are not silently hidden.

    Parameters
    ----------
    raw : array_like
        Square K x K matrix of transition probabilities.

    Returns
    -------
    TransitionMatrix

    Raises
    ------
    NonStochasticRowError
        If a row sum deviates from 1 by more than 1e-12.
    NegativeEntryError
        If any entry is negative.
    ValueError
        If the input is not a square 2-d matrix with K >= 1.
    """
    mat = np.asarray(raw, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {mat.shape}")
    if mat.shape[0] < 1:
        raise ValueError("transition matrix must have K >= 1")
    neg = np.argwhere(mat < 0.0)
    if neg.size:
        i, j = neg[0]
        raise NegativeEntryError(int(i), int(j), float(mat[i, j]))
    sums = mat.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        i = int(bad[0])
        raise NonStochasticRowError(i, float(sums[i]))
    mat = mat.copy()
    mat.setflags(write=False)
    return TransitionMatrix(mat)


def is_irreducible(tm: TransitionMatrix) -> bool:
    """True iff the directed graph with edge i -> j when a_ij > 0 is strongly connected."""
    graph = csr_matrix(tm.matrix > 0.0)
    n_comp, _ = connected_components(graph, directed=True, connection="strong")
    return n_comp == 1


def period(tm: TransitionMatrix) -> int:
    """Period of an irreducible chain: gcd of directed cycle lengths.

    Computed via BFS level classes: period = gcd over all edges (u, v) of
    level(u) + 1 - level(v). The chain is aperiodic iff the result is 1.

    Raises
    ------
    ReducibleChainError
        If the chain is not irreducible.
    """
    if not is_irreducible(tm):
        raise ReducibleChainError("period is defined only for irreducible chains")
    mat = tm.matrix
    n = tm.size
    adjacency = [np.flatnonzero(mat[i] > 0.0) for i in range(n)]
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    queue = deque([0])
    g = 0
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(int(v))
            g = math.gcd(g, abs(int(level[u]) + 1 - int(level[v])))
    return g if g > 0 else 1


def stationary_distribution(tm: TransitionMatrix) -> StationaryDistribution:
    """Unique stationary distribution of an irreducible, aperiodic chain.

    Solves the balance equations pi^T A = pi^T, sum(pi) = 1 as an
    overdetermined linear system via least squares.

    Raises
    ------
    ReducibleChainError
        If the chain is reducible (no unique stationary law).
    PeriodicChainError
        If the chain has period > 1.
    """
    if not is_irreducible(tm):
        raise ReducibleChainError("stationary distribution requires irreducibility")
    p = period(tm)
    if p != 1:
        raise PeriodicChainError(p)
    n = tm.size
    system = np.vstack([tm.matrix.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ tm.matrix - pi)))
    if residual > STATIONARY_TOL:
        raise ArithmeticError(
            f"stationary solve residual {residual:.3e} exceeds {STATIONARY_TOL:.0e}"
        )
    pi.setflags(write=False)
    return StationaryDistribution(pi, residual)


def sample_chain(tm: TransitionMatrix, init: int, n: int, seed: SeedLike) -> RegimeSequence:
    """Sample a regime path of length ``n`` started at regime ``init``.

    Bit-for-bit deterministic given (tm, init, n, seed). Each step consumes
    one uniform variate and maps it through the cumulative row of the current
    regime (inverse-CDF sampling).

    Parameters
    ----------
    tm : TransitionMatrix
    init : int
        Starting regime, 1-based.
    n : int
        Path length (the initial regime counts as the first element).
    seed : int or numpy.random.SeedSequence

    Raises
    ------
    InvalidInitError
        If ``init`` is outside {1..K}.
    """
    n_regimes = tm.size
    if not 1 <= init <= n_regimes:
        raise InvalidInitError(f"init regime {init} outside 1..{n_regimes}")
    if n < 1:
        raise ValueError("n must be >= 1")
    ss = _as_seed_sequence(seed)
    record = seed_record(ss)
    if n_regimes == 1:
        return RegimeSequence(np.ones(n, dtype=np.int64), record)
    if n == 1:
        return RegimeSequence(np.array([init], dtype=np.int64), record)
    rng = Generator(PCG64(ss))
    uniforms = rng.random(n - 1)
    states = _iterate_chain(tm.matrix, init - 1, uniforms)
    return RegimeSequence(states, record)


def _iterate_chain(matrix: np.ndarray, start: int, uniforms: np.ndarray) -> np.ndarray:
    """Drive the chain with pre-drawn uniforms; returns 1-based labels."""
    n_regimes = matrix.shape[0]
    cumulative = np.cumsum(matrix, axis=1)
    cumulative[:, -1] = 1.0  # guard against row sums a hair below 1
    # Precompute, for every current state, the next state induced by each
    # uniform; the time loop then reduces to a list lookup per step.
    nxt = [
        np.minimum(
            np.searchsorted(cumulative[i], uniforms, side="right"), n_regimes - 1
        ).tolist()
        for i in range(n_regimes)
    ]
    out = [start + 1]
    state = start
    append = out.append
    for t in range(len(uniforms)):
        state = nxt[state][t]
        append(state + 1)
    return np.asarray(out, dtype=np.int64)


def regime_frequencies(seq: RegimeSequence, n_regimes: int) -> np.ndarray:
    """Empirical frequency of each regime label in a sampled sequence."""
    counts = np.bincount(seq.states, minlength=n_regimes + 1)[1:]
    return counts / len(seq.states)
