"""Renewal-process quantities driven by a hypoexponential waiting time.

The probability of n jumps up to time t has transform ghat(u) fhat(u)^n; its
generating function evaluated at mu in [-1, 1],

    lam_mu(t) = sum_n p_n(t) mu^n,   lamhat_mu(u) = (1/u)(1 - fhat)/(1 - mu fhat),

drives both the classical even/odd-difference propagators (mu = -1) and the
qubit map eigenvalues.  Two independent backends are provided: exact rational
inversion, and a truncated series evaluated by uniformization of the stage
chain with a rigorous Poisson tail bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.stats import poisson

from .poly_laplace import (
    DEFAULT_TOL,
    ExpPolyFunction,
    Polynomial,
    RationalLaplace,
    Tolerances,
    invert_laplace,
)
from .waiting_time import HypoExpWTD

__all__ = [
    "JumpCountLaw",
    "GeneratingFunction",
    "ExtremumPoint",
    "SeriesTruncationError",
    "jump_probability",
    "even_odd_difference",
    "generating_function",
    "series_backend",
    "find_extrema",
]

#: Truncation index for jump-count series (tail controlled by the Poisson
#: count of the fastest stage).
N_MAX_JUMPS = 512


class SeriesTruncationError(RuntimeError):
    """Raised when the Poisson tail bound cannot be met within the jump cap."""


def jump_probability(w: HypoExpWTD, n: int) -> ExpPolyFunction:
    """Probability p_n(t) of exactly n completed waiting times up to t."""
    if n < 0:
        raise ValueError("jump count must be >= 0")
    if n == 0:
        return w.survival()
    f = w.laplace_pdf()
    num = w.one_minus_laplace_over_u()
    den = f.den
    scale = f.num.coeffs[0]  # product of the stage rates
    for _ in range(n):
        num = num * scale
        den = den * f.den
    roots = tuple((p, m * (n + 1)) for p, m in f.den_roots)
    return invert_laplace(RationalLaplace(num, den, den_roots=roots))


@dataclass
class JumpCountLaw:
    """Lazy cache of the jump-count probabilities of one waiting time.

    The closed-form coefficients of p_n grow like binom(2n, n) times the
    rate-ratio power for well-separated stage rates and cancel in evaluation,
    so double precision supports roughly n <= 15 there; equal-rate (Erlang)
    stages have a single pole and stay exact to much higher n.  Beyond that
    regime use series_backend, which is uniformly stable in n and t.
    """

    wtd: HypoExpWTD
    n_max: int = 64
    _cache: dict[int, ExpPolyFunction] = field(default_factory=dict, repr=False)

    def probability(self, n: int) -> ExpPolyFunction:
        if n > self.n_max:
            raise ValueError(f"jump count {n} above configured cap {self.n_max}")
        if n not in self._cache:
            self._cache[n] = jump_probability(self.wtd, n)
        return self._cache[n]

    def total_mass(self, t: float, n_terms: int) -> float:
        return sum(self.probability(n)(t) for n in range(n_terms))


@dataclass(frozen=True)
class GeneratingFunction:
    """lam_mu(t) = E[mu^{N(t)}] together with its analytic time derivative."""

    mu: float
    value: ExpPolyFunction
    derivative: ExpPolyFunction

    def __call__(self, t):
        return self.value(t)


@lru_cache(maxsize=512)
def generating_function(w: HypoExpWTD, mu: float) -> GeneratingFunction:
    """Rational-inversion backend for lam_mu.

    mu = 1 short-circuits to the constant 1 (the transform degenerates to
    1/u); mu = 0 reuses the exactly known stage poles of the survival
    probability.
    """
    mu = float(mu)
    if not -1.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [-1, 1]")
    if mu == 1.0:
        value = ExpPolyFunction.constant(1.0)
        return GeneratingFunction(mu, value, ExpPolyFunction.zero())
    f = w.laplace_pdf()
    num = w.one_minus_laplace_over_u()
    den = f.den - Polynomial([mu * f.num.coeffs[0]])
    roots = f.den_roots if mu == 0.0 else None
    value = invert_laplace(RationalLaplace(num, den, den_roots=roots))
    return GeneratingFunction(mu, value, value.differentiate())


def even_odd_difference(w: HypoExpWTD) -> ExpPolyFunction:
    """q(t): probability of an even minus an odd number of jumps up to t."""
    return generating_function(w, -1.0).value


def series_backend(
    w: HypoExpWTD, mu: float, t: float, tol: float = 1e-10
) -> float:
    """Truncated-series evaluation of lam_mu(t), independent of inversion.

    Uniformizes the stage chain at the fastest stage rate: conditioned on K
    events of a Poisson clock of that rate, the number of completed stages is
    a K-step inhomogeneous Bernoulli walk.  Truncating the Poisson sum leaves
    an error below its tail mass because |mu^{N(t)}| <= 1.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if not -1.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [-1, 1]")
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0 or mu == 1.0:
        return 1.0
    m = w.n_stages
    lam_max = max(w.rates)
    cap = N_MAX_JUMPS * m
    k_max = int(poisson.isf(tol / 2.0, lam_max * t)) + 1
    if k_max > cap:
        raise SeriesTruncationError(
            f"need {k_max} uniformization steps, cap is {cap}"
        )
    advance = np.array([w.rates[i % m] / lam_max for i in range(k_max + 1)])
    weights = poisson.pmf(np.arange(k_max + 1), lam_max * t)
    mu_of_stage = np.power(mu, np.arange(k_max + 1) // m).astype(float)
    v = np.zeros(k_max + 1)
    v[0] = 1.0
    total = weights[0] * v[0]  # K=0: still in stage 0
    for k in range(1, k_max + 1):
        moved = v[: k] * advance[: k]
        v[: k] -= moved
        v[1 : k + 1] += moved
        total += weights[k] * float(np.dot(v[: k + 1], mu_of_stage[: k + 1]))
    return float(total)


@dataclass(frozen=True)
class ExtremumPoint:
    """Critical point of f reported against the modulus |f|.

    kind is ``max``/``min`` for stationary points of f classified by whether
    |f| peaks or dips there, and ``zero-crossing`` where f changes sign.
    """

    t: float
    value: float
    kind: str

    @property
    def magnitude(self) -> float:
        return abs(self.value)


def _grid_step(f: ExpPolyFunction, T: float) -> float:
    scales = []
    for p in f.poles:
        if abs(p.imag) > 1e-12:
            scales.append(np.pi / abs(p.imag))
        if abs(p.real) > 1e-12:
            scales.append(1.0 / abs(p.real))
    if not scales:
        return T / 100.0
    return min(min(scales) / 20.0, T / 100.0)


def find_extrema(
    f: ExpPolyFunction,
    window: tuple[float, float],
    tol: Tolerances = DEFAULT_TOL,
) -> list[ExtremumPoint]:
    """Interior critical points of f in the window, ordered by time.

    Sign changes of f' are bracketed on a grid finer than any pole period and
    refined by bisection; zeros of f are located the same way.  Stationary
    values below ``stationary_value_floor`` (times the window scale of |f|)
    count as zero-touching minima.
    """
    t0, T = window
    if T <= t0:
        raise ValueError("window must have positive length")
    df = f.differentiate()
    if df.is_zero():
        return []
    step = _grid_step(f, T - t0)
    n = max(int(np.ceil((T - t0) / step)), 16)
    grid = np.linspace(t0, T, n + 1)
    fv = f(grid)
    dv = df(grid)
    scale = float(np.max(np.abs(fv))) or 1.0
    points: list[ExtremumPoint] = []
    d2 = df.differentiate()
    for a, b in _sign_change_brackets(grid, dv, df.envelope(grid)):
        t_star = brentq(lambda x: df(float(x)), a, b, xtol=1e-14, rtol=8.9e-16)
        if not (t0 < t_star < T):
            continue
        val = f(float(t_star))
        if abs(val) < tol.stationary_value_floor * scale:
            kind = "min"  # zero-touching: keeps measure sums well defined
        else:
            curv = d2(float(t_star))
            if curv == 0.0:
                h = step / 8.0
                curv = f(min(t_star + h, T)) - 2.0 * val + f(max(t_star - h, t0))
            kind = "max" if val * curv < 0 else "min"
        points.append(ExtremumPoint(float(t_star), float(val), kind))
    for a, b in _sign_change_brackets(grid, fv, f.envelope(grid)):
        t_zero = brentq(lambda x: f(float(x)), a, b, xtol=1e-14, rtol=8.9e-16)
        if t0 < t_zero < T:
            points.append(ExtremumPoint(float(t_zero), 0.0, "zero-crossing"))
    points.sort(key=lambda p: p.t)
    return points


def _sign_change_brackets(grid, values, envelopes) -> list[tuple[float, float]]:
    """Brackets of genuine sign changes of a sampled smooth function.

    Values below 1e-12 of the local term-magnitude envelope are rounding
    noise (e.g. a flat double zero at the window edge) and carry no sign;
    brackets run between consecutive decisive samples of opposite sign.
    """
    sgn = np.where(
        values > 1e-12 * envelopes, 1, np.where(values < -1e-12 * envelopes, -1, 0)
    )
    idx = np.flatnonzero(sgn != 0)
    out = []
    for i, j in zip(idx[:-1], idx[1:]):
        if sgn[i] * sgn[j] < 0:
            out.append((float(grid[i]), float(grid[j])))
    return out
