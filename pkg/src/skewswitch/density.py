"""Exact regime-conditional transition densities and small-set probes.

Conditional on the active regime k and the previous value x, one step adds
an independent location-scale draw m + sigma*eps and a scaled squared draw
A*iota^2. Their densities are

    fbar(y) = f((y - m) / sigma) / sigma
    gbar(y) = [g(sqrt(y/A)) + g(-sqrt(y/A))] / (2 * sqrt(A * y)),  y > 0

and the one-step transition density is the convolution
integral_0^inf fbar(u - v) gbar(v) dv. The gbar denominator is the
change-of-variables normalization that makes gbar integrate to 1 (the
density of A*W scales as density_W(y/A)/A).

The convolution integrand has an inverse-square-root singularity at v = 0;
substituting v = A z^2 over the whole domain removes it exactly:

    p(u) = integral_0^inf fbar(u - A z^2) * (g(z) + g(-z)) dz,

which is the smooth form every quadrature below uses.
"""

from dataclasses import dataclass, replace
import math
from typing import Optional, Tuple
import warnings

import numpy as np
from scipy import integrate

from .errors import DegenerateTargetWarning, QuadratureNonConvergenceError
from .model import ModelSpec, eval_regime


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and truncation controls for the adaptive quadratures.

    Infinite domains are truncated where a tail bound (sup of the bounded
    factor times remaining innovation mass) drops below ``atol``; the cut
    starts at ``tail_start`` innovation standard deviations and doubles
    until the bound is met.
    """

    rtol: float = 1e-8
    atol: float = 1e-12
    max_subdivisions: int = 200
    tail_start: float = 12.0

    def __post_init__(self):
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("quadrature tolerances must be positive")

    def relaxed(self, factor: float) -> "QuadratureSpec":
        """Loosened copy for outer integrals whose integrands are themselves quadratures."""
        return replace(self, rtol=self.rtol * factor, atol=self.atol * factor)


DEFAULT_QUAD = QuadratureSpec()


def _quad(fn, lo: float, hi: float, quad: QuadratureSpec) -> float:
    result = integrate.quad(
        fn,
        lo,
        hi,
        epsabs=quad.atol,
        epsrel=quad.rtol,
        limit=quad.max_subdivisions,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > 10.0 * max(quad.atol, quad.rtol * abs(value)):
        raise QuadratureNonConvergenceError(value, abserr, str(result[3]))
    return value


def _tail_cut(sf, envelope: float, quad: QuadratureSpec) -> float:
    """Smallest doubling of tail_start where envelope * 2 * sf(z) < atol."""
    z = quad.tail_start
    while envelope * 2.0 * sf(z) > quad.atol and z < 1e9:
        z *= 2.0
    return z


def _ridge_breakpoints(edges, m, sigma, a, z_max, width):
    """z-values where a z^2 enters or leaves the band |edge - m - a z^2| <= width*sigma.

    The eps factor of the convolution integrand is non-negligible only on
    that band; when the band sits far from z = 0 the integrand is a narrow
    ridge that an adaptive rule starting from the full domain can step over
    without noticing, so these crossings become mandatory subdivisions.
    """
    points = []
    for edge in edges:
        if not math.isfinite(edge):
            continue
        for offset in (-width * sigma, width * sigma):
            arg = (edge - m + offset) / a
            if arg > 0.0:
                z = math.sqrt(arg)
                if 0.0 < z < z_max:
                    points.append(z)
    return points


def _piecewise_quad(fn, breakpoints, lo: float, hi: float, quad: QuadratureSpec) -> float:
    knots = sorted({lo, hi, *(p for p in breakpoints if lo < p < hi)})
    return sum(_quad(fn, p, q, quad) for p, q in zip(knots[:-1], knots[1:]))


def fbar(spec: ModelSpec, k: int, x: float, y):
    """Density of m_k(x) + sigma_k(x) * eps at ``y`` (vectorized over y)."""
    m, sigma, _ = eval_regime(spec, k, x)
    return spec.eps.pdf((np.asarray(y, dtype=np.float64) - m) / sigma) / sigma


def gbar(spec: ModelSpec, k: int, x: float, y):
    """Density of A_k(x) * iota^2 at ``y``: zero for y <= 0 (vectorized over y)."""
    _, _, a = eval_regime(spec, k, x)
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros(y.shape if y.ndim else ())
    positive = y > 0.0
    if np.any(positive):
        yp = y[positive] if y.ndim else y
        root = np.sqrt(yp / a)
        val = (spec.iota.pdf(root) + spec.iota.pdf(-root)) / (2.0 * np.sqrt(a * yp))
        if y.ndim:
            out[positive] = val
        else:
            out = val
    return out if y.ndim else float(out)


def transition_density(
    spec: ModelSpec, k: int, x: float, u: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """One-step conditional density of X_t at ``u`` given X_{t-1}=x and regime k.

    Computed as the convolution of fbar and gbar by adaptive quadrature in
    the singularity-free z = sqrt(v/A) variable. The infinite domain is cut
    where the iota tail can no longer contribute more than atol against the
    sup of fbar.

    Raises
    ------
    QuadratureNonConvergenceError
        If the integrator reports failure with a large error bound.
    """
    m, sigma, a = eval_regime(spec, k, x)
    f = spec.eps.scalar_pdf()
    g = spec.iota.scalar_pdf()
    iota_cdf = spec.iota.scalar_cdf()
    envelope = f(0.0) / sigma
    z_max = _tail_cut(lambda z: 1.0 - iota_cdf(z), envelope, quad)

    def integrand(z: float) -> float:
        return f((u - a * z * z - m) / sigma) / sigma * (g(z) + g(-z))

    ridge = _ridge_breakpoints([u], m, sigma, a, z_max, quad.tail_start)
    return max(_piecewise_quad(integrand, ridge, 0.0, z_max, quad), 0.0)


def transition_cdf(
    spec: ModelSpec, k: int, x: float, u: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """One-step conditional CDF at ``u``: P(X_t <= u | X_{t-1}=x, regime k)."""
    return interval_probability(spec, k, x, (-math.inf, u), quad)


def interval_probability(
    spec: ModelSpec,
    k: int,
    x: float,
    interval: Tuple[float, float],
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """P(X_t in [lo, hi] | X_{t-1}=x, regime k) via one smooth quadrature.

    Integrates the eps CDF increment against the iota density, which avoids
    nesting a density quadrature inside a probability quadrature.
    """
    lo, hi = interval
    if hi <= lo:
        return 0.0
    m, sigma, a = eval_regime(spec, k, x)
    eps_cdf = spec.eps.scalar_cdf()
    g = spec.iota.scalar_pdf()
    iota_cdf = spec.iota.scalar_cdf()
    z_max = _tail_cut(lambda z: 1.0 - iota_cdf(z), 1.0, quad)

    def integrand(z: float) -> float:
        shift = a * z * z + m
        upper = eps_cdf((hi - shift) / sigma) if math.isfinite(hi) else 1.0
        lower = eps_cdf((lo - shift) / sigma) if math.isfinite(lo) else 0.0
        return (g(z) + g(-z)) * (upper - lower)

    ridge = _ridge_breakpoints([lo, hi], m, sigma, a, z_max, quad.tail_start)
    value = _piecewise_quad(integrand, ridge, 0.0, z_max, quad)
    return min(max(value, 0.0), 1.0)


def _support_window(spec: ModelSpec, k: int, x: float, quad: QuadratureSpec):
    """Interval holding all but ~atol of the one-step mass from (k, x)."""
    m, sigma, a = eval_regime(spec, k, x)
    eps_cdf = spec.eps.scalar_cdf()
    iota_cdf = spec.iota.scalar_cdf()
    e_cut = _tail_cut(lambda z: 1.0 - eps_cdf(z), 1.0, quad)
    z_cut = _tail_cut(lambda z: 1.0 - iota_cdf(z), 1.0, quad)
    return m - sigma * e_cut, m + sigma * e_cut + a * z_cut * z_cut


def normalization_integral(
    spec: ModelSpec, k: int, x: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """Integral of the one-step transition density over the real line.

    An independent consistency check: integrates ``transition_density``
    itself (not the CDF machinery) over a window holding all but ~atol of
    the mass, so a broken kernel cannot certify itself.

    The density's right tail is the image of the iota tail under
    u = m + A z^2; for heavy-tailed iota it decays polynomially over a
    window thousands of scales wide, which a single adaptive pass can miss
    entirely while reporting convergence. The integral is therefore summed
    over pieces split at the doubling points of that image, so every piece
    spans one scale of the tail.
    """
    lo, hi = _support_window(spec, k, x, quad)
    m, _, a = eval_regime(spec, k, x)
    outer = quad.relaxed(100.0)

    def integrand(u: float) -> float:
        return transition_density(spec, k, x, u, quad)

    pieces = [lo]
    z = quad.tail_start
    while True:
        knot = m + a * z * z
        if knot >= hi:
            break
        if knot > pieces[-1]:
            pieces.append(knot)
        z *= 2.0
    pieces.append(hi)
    return sum(
        _quad(integrand, p, q, outer) for p, q in zip(pieces[:-1], pieces[1:])
    )


def two_step_density(
    spec: ModelSpec,
    l: int,
    k: int,
    x: float,
    u: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Two-step conditional density of X_3 at ``u`` given X_1=x, Q_1=l, Q_3=k.

    Sums over the middle regime j with weights a_lj * a_jk, integrating the
    product of one-step densities over the intermediate value, and divides
    by the two-step regime probability so the result is a proper density.

    Raises
    ------
    ValueError
        If regime ``k`` is unreachable from ``l`` in two steps.
    """
    matrix = spec.tm.matrix
    weights = matrix[l - 1] * matrix[:, k - 1]
    total_weight = float(weights.sum())
    if total_weight <= 0.0:
        raise ValueError(f"regime {k} unreachable from {l} in two steps")
    inner = quad
    outer = quad.relaxed(100.0)
    total = 0.0
    for j in range(1, spec.n_regimes + 1):
        w = weights[j - 1]
        if w <= 0.0:
            continue
        lo, hi = _support_window(spec, j, x, outer)

        def integrand(y: float, j=j) -> float:
            return transition_density(spec, j, x, y, inner) * transition_density(
                spec, k, y, u, inner
            )

        total += w * _quad(integrand, lo, hi, outer)
    return total / total_weight


@dataclass(frozen=True)
class SmallSetReport:
    """Grid infimum of the t-step probability of reaching {regime k} x A2.

    ``passed`` records whether the numeric minimum over the compact grid is
    strictly positive; a zero with t=1 and a_lk=0 is the expected chain
    obstruction, not a numerical failure.
    """

    min_probability: float
    passed: bool
    grid: np.ndarray
    probabilities: np.ndarray
    t: int
    from_regime: int
    to_regime: int
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "min_probability": float(self.min_probability),
            "passed": self.passed,
            "grid": [float(v) for v in self.grid],
            "probabilities": [float(v) for v in self.probabilities],
            "t": self.t,
            "from_regime": self.from_regime,
            "to_regime": self.to_regime,
            "note": self.note,
        }


def small_set_lower_bound(
    spec: ModelSpec,
    l: int,
    k: int,
    B: Tuple[float, float],
    A2: Tuple[float, float],
    t: int = 1,
    grid_n: int = 9,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> SmallSetReport:
    """Minimum over x in B of the t-step probability of {regime k} x A2.

    Starting from (regime l, x), evaluates P((Q_{1+t}, X_{1+t}) in
    {k} x A2) on ``grid_n`` evenly spaced points of the compact interval B
    and reports the minimum with a positivity flag. Supports t in {1, 2}
    with exact kernels; higher t would nest quadratures exponentially and
    is covered instead by chain irreducibility.

    A zero-length target interval warns (DegenerateTargetWarning) and
    returns 0 with a fail flag.
    """
    if t not in (1, 2):
        raise ValueError("exact kernels support t in {1, 2} only")
    b_lo, b_hi = B
    if not b_hi > b_lo:
        raise ValueError("B must have positive length")
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    a2_lo, a2_hi = A2
    xs = np.linspace(b_lo, b_hi, grid_n)
    if not a2_hi > a2_lo:
        warnings.warn(
            "target interval has zero length; probability is trivially 0",
            DegenerateTargetWarning,
        )
        zeros = np.zeros(grid_n)
        return SmallSetReport(0.0, False, xs, zeros, t, l, k, note="degenerate-target")

    matrix = spec.tm.matrix
    if t == 1:
        a_lk = matrix[l - 1, k - 1]
        if a_lk > 0.0:
            probs = np.array(
                [a_lk * interval_probability(spec, k, x, A2, quad) for x in xs]
            )
        else:
            probs = np.zeros(grid_n)
    else:
        weights = matrix[l - 1] * matrix[:, k - 1]
        inner = quad
        outer = quad.relaxed(100.0)
        probs = np.empty(grid_n)
        for idx, x in enumerate(xs):
            total = 0.0
            for j in range(1, spec.n_regimes + 1):
                w = weights[j - 1]
                if w <= 0.0:
                    continue
                lo, hi = _support_window(spec, j, x, outer)

                def integrand(y: float, j=j) -> float:
                    return transition_density(spec, j, x, y, inner) * interval_probability(
                        spec, k, y, A2, inner
                    )

                total += w * _quad(integrand, lo, hi, outer)
            probs[idx] = total
    min_prob = float(probs.min())
    return SmallSetReport(min_prob, min_prob > 0.0, xs, probs, t, l, k)
