"""Non-Markovianity diagnostics for renewal-driven Pauli-channel dynamics.

Witnesses and measures implemented here:

* trace-distance trajectories and their growth intervals (information
  backflow), with the measure given by the total rise of the distance over
  all growth intervals, maximized over antipodal pure-state pairs;
* complete-positivity of the intermediate maps via the sign of the smallest
  Pauli-conjugation weight (divisibility criterion), including the fixed-lag
  scan, the unnormalized divergence-prone measure, and the arctangent
  variant normalized by the extension of the violation region;
* time-local master-equation rates in two algebraically equivalent forms:
  an overcomplete set (dephasing + excitation-exchange pair + an opposite
  sigma_x/sigma_y pair) whose signs are not divisibility indicators, and the
  canonical three-rate form whose signs are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize

from .poly_laplace import ExpPolyFunction
from .renewal import find_extrema, generating_function
from .qubit import (
    SIGMA,
    ChannelDynamics,
    ChoiVector,
    PauliChannel,
    QubitState,
    choi_vector,
    dynamics,
)
from .waiting_time import HypoExpWTD

__all__ = [
    "DistinguishabilityTrace",
    "TCLCoefficients",
    "MeasureResult",
    "PairSearchConfig",
    "DivisibilityScan",
    "trace_distance",
    "distinguishability_trace",
    "blp_measure_dephasing",
    "blp_measure_numeric",
    "divisibility_scan",
    "hou_measure",
    "rhp_divisibility_measure",
    "tcl_coefficients",
    "tcl_equivalence_check",
]


def trace_distance(r1: QubitState, r2: QubitState) -> float:
    """Half the trace norm of the difference of two density matrices."""
    evals = np.linalg.eigvalsh(r1.matrix() - r2.matrix())
    return 0.5 * float(np.sum(np.abs(evals)))


@dataclass(frozen=True)
class DistinguishabilityTrace:
    times: np.ndarray
    distances: np.ndarray
    sigma: np.ndarray
    growth_intervals: tuple[tuple[float, float], ...]

    @property
    def has_growth(self) -> bool:
        return len(self.growth_intervals) > 0


@dataclass(frozen=True)
class MeasureResult:
    value: float
    contributions: tuple[tuple[tuple[float, float], float], ...]
    method: str
    direction: tuple[float, float, float] | None = None
    tail_bound: float = 0.0
    note: str = ""

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def _auto_window(derivs: list[ExpPolyFunction], tol: float = 1e-12) -> float:
    """Horizon beyond which the remaining total variation is below tol."""
    slowest = 1.0
    for d in derivs:
        for p in d.poles:
            if p.real < -1e-12:
                slowest = max(slowest, 1.0 / -p.real)
    T = 10.0 * slowest
    for _ in range(60):
        tail = sum(d.tail_envelope_integral(T) for d in derivs)
        if tail < tol:
            return T
        T *= 1.5
    raise RuntimeError("tail bound did not converge; non-decaying component?")


def _positive_variation(
    f: ExpPolyFunction, window: tuple[float, float]
) -> tuple[float, list[tuple[tuple[float, float], float]]]:
    """Total rise of |f| over the window, with the contributing intervals.

    |f| is monotone between consecutive critical points of f (stationaries
    and sign changes), so the rise telescopes over runs of increasing steps.
    """
    t0, t1 = window
    crit = [t0] + [p.t for p in find_extrema(f, window)] + [t1]
    vals = [abs(f(t)) for t in crit]
    contributions = []
    run_start = None
    run_gain = 0.0
    for i in range(len(crit) - 1):
        gain = vals[i + 1] - vals[i]
        if gain > 0.0:
            if run_start is None:
                run_start = crit[i]
                run_gain = 0.0
            run_gain += gain
        else:
            if run_start is not None:
                contributions.append(((run_start, crit[i]), run_gain))
                run_start = None
    if run_start is not None:
        contributions.append(((run_start, crit[-1]), run_gain))
    return sum(c for _, c in contributions), contributions


def blp_measure_dephasing(w: HypoExpWTD, mu: float = -1.0) -> MeasureResult:
    """Exact trace-distance measure for a pure-dephasing map.

    The optimal pair is an opposite equatorial one, for which the distance is
    |lam_mu(t)| (mu = -1 for the phase flip, mu = 1 - 2 nu for the mixture
    with the identity).  The measure is the sum over growth intervals of the
    rise of |lam_mu|, truncated once the tail envelope drops below 1e-12.
    """
    gen = generating_function(w, mu)
    if gen.derivative.is_zero():
        return MeasureResult(0.0, (), "blp-analytic")
    T = _auto_window([gen.derivative])
    value, contributions = _positive_variation(gen.value, (0.0, T))
    tail = gen.derivative.tail_envelope_integral(T)
    return MeasureResult(
        value, tuple(contributions), "blp-analytic", tail_bound=tail
    )


def distinguishability_trace(
    ch: PauliChannel,
    w: HypoExpWTD,
    r1: QubitState,
    r2: QubitState,
    window: tuple[float, float],
    n_points: int = 2000,
) -> DistinguishabilityTrace:
    """Trace distance D(t), its derivative, and the growth intervals.

    D(t) = sqrt(sum_i lam_i(t)^2 dr_i^2)/2 with dr the initial Bloch
    difference; the derivative sign is that of sum_i lam_i lam_i' dr_i^2, and
    interval endpoints are refined by root bracketing on that expression.
    """
    dr = r1.bloch - r2.bloch
    if float(np.linalg.norm(dr)) < 1e-12:
        raise ValueError("state pair is degenerate")
    weights = dr**2
    dyn = dynamics(ch, w)
    intervals = _growth_intervals(dyn, weights, window)
    times = np.linspace(window[0], window[1], n_points)
    lam = dyn.lambdas(times)
    dlam = dyn.lambda_dots(times)
    S = np.einsum("i,it->t", weights, lam**2)
    N = np.einsum("i,it->t", weights, lam * dlam)
    D = 0.5 * np.sqrt(S)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = np.where(S > 0, N / (2.0 * np.sqrt(S)), 0.0)
    return DistinguishabilityTrace(times, D, sigma, tuple(intervals))


def _growth_intervals(
    dyn: ChannelDynamics,
    weights: np.ndarray,
    window: tuple[float, float],
) -> list[tuple[float, float]]:
    """Maximal intervals where sum_i w_i lam_i lam_i' > 0."""
    t0, t1 = window
    steps = [
        _osc_step(g.value) for g, wt in zip(dyn.generators, weights) if wt > 0
    ]
    step = min([s for s in steps if s is not None] + [(t1 - t0) / 200.0])
    grid = np.linspace(t0, t1, max(int(np.ceil((t1 - t0) / step)), 200) + 1)
    lam = dyn.lambdas(grid)
    dlam = dyn.lambda_dots(grid)
    N = np.einsum("i,it->t", weights, lam * dlam)
    # Rounding floor relative to the local term magnitudes, so that genuine
    # sign structure deep in the exponential tail is still resolved while a
    # monotone case produces no phantom intervals.  Points whose envelope is
    # itself rounding-level (a flat start, or far past every decay scale)
    # carry no sign information at all.
    env = np.einsum("i,it->t", weights, np.abs(lam) * np.abs(dlam))
    env_floor = 1e-15 * float(env.max() or 1.0)
    eps = 1e-12

    def n_of(t: float) -> float:
        ls = [g.value(t) for g in dyn.generators]
        ds = [g.derivative(t) for g in dyn.generators]
        return float(sum(wt * l * d for wt, l, d in zip(weights, ls, ds)))

    def decisive_sign(num: float, envelope: float) -> int:
        if envelope <= env_floor or abs(num) <= eps * envelope:
            return 0
        return 1 if num > 0 else -1

    def sign_of(t: float) -> int:
        ls = [g.value(t) for g in dyn.generators]
        ds = [g.derivative(t) for g in dyn.generators]
        num = sum(wt * l * d for wt, l, d in zip(weights, ls, ds))
        envelope = sum(wt * abs(l) * abs(d) for wt, l, d in zip(weights, ls, ds))
        return decisive_sign(float(num), float(envelope))

    sgn = np.array([decisive_sign(n, e) for n, e in zip(N, env)])
    idx = np.flatnonzero(sgn != 0)
    boundaries = []
    for i, j in zip(idx[:-1], idx[1:]):
        if sgn[i] * sgn[j] < 0:
            boundaries.append(float(brentq(n_of, grid[i], grid[j], xtol=1e-13)))
    marks = [t0] + boundaries + [t1]
    min_width = 1e-9 * (t1 - t0)
    intervals = []
    for a, b in zip(marks[:-1], marks[1:]):
        if b - a <= min_width:
            continue
        if sign_of(0.5 * (a + b)) > 0:
            if intervals and abs(intervals[-1][1] - a) < 1e-12:
                intervals[-1] = (intervals[-1][0], b)
            else:
                intervals.append((a, b))
    return intervals


def _osc_step(f: ExpPolyFunction) -> float | None:
    scales = []
    for p in f.poles:
        if abs(p.imag) > 1e-12:
            scales.append(np.pi / abs(p.imag))
        if abs(p.real) > 1e-12:
            scales.append(1.0 / abs(p.real))
    return min(scales) / 20.0 if scales else None


@dataclass(frozen=True)
class PairSearchConfig:
    n_directions: int = 64
    window: tuple[float, float] | None = None
    refine: bool = True
    refine_maxiter: int = 120
    top_k: int = 4


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * k / n)
    theta = np.pi * (1.0 + 5.0**0.5) * k
    return np.column_stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
    )


def blp_measure_numeric(
    ch: PauliChannel,
    w: HypoExpWTD,
    cfg: PairSearchConfig = PairSearchConfig(),
) -> MeasureResult:
    """Trace-distance measure maximized over antipodal pure-state pairs.

    The pair +/-n gives D(t) = sqrt(sum_i lam_i(t)^2 n_i^2); interior pairs
    are dominated, so the search runs over Bloch directions: the three axes
    exactly, a Fibonacci grid, and local refinement of the best direction.
    """
    dyn = dynamics(ch, w)
    if cfg.window is not None:
        window = cfg.window
        tail = 0.0
    else:
        T = _auto_window([g.derivative for g in dyn.generators])
        window = (0.0, T)
        tail = sum(g.derivative.tail_envelope_integral(T) for g in dyn.generators)

    def measure_of(direction: np.ndarray) -> tuple[float, list]:
        weights = direction**2 / float(direction @ direction)
        intervals = _growth_intervals(dyn, weights, window)
        contribs = []
        for a, b in intervals:
            da = _pair_distance(dyn, weights, a)
            db = _pair_distance(dyn, weights, b)
            contribs.append(((a, b), db - da))
        return sum(c for _, c in contribs), contribs

    candidates = list(np.eye(3)) + list(_fibonacci_sphere(cfg.n_directions))
    scored = []
    for d in candidates:
        val, contribs = measure_of(np.asarray(d))
        scored.append((val, tuple(d), contribs))
    scored.sort(key=lambda x: -x[0])
    best_val, best_dir, best_contribs = scored[0]
    note = ""
    if cfg.refine and best_val > 0.0:
        theta0 = math.acos(max(-1.0, min(1.0, best_dir[2])))
        phi0 = math.atan2(best_dir[1], best_dir[0])

        def neg(angles):
            th, ph = angles
            d = np.array(
                [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
            )
            return -measure_of(d)[0]

        res = minimize(
            neg,
            [theta0, phi0],
            method="Nelder-Mead",
            options={"maxiter": cfg.refine_maxiter, "xatol": 1e-6, "fatol": 1e-12},
        )
        if -res.fun > best_val:
            th, ph = res.x
            best_dir = (
                math.sin(th) * math.cos(ph),
                math.sin(th) * math.sin(ph),
                math.cos(th),
            )
            best_val, best_contribs = measure_of(np.asarray(best_dir))
        if not res.success:
            note = "direction refinement hit its iteration budget"
    return MeasureResult(
        best_val,
        tuple(best_contribs),
        "blp-numeric",
        direction=tuple(float(x) for x in best_dir),
        tail_bound=tail,
        note=note,
    )


def _pair_distance(dyn: ChannelDynamics, weights: np.ndarray, t: float) -> float:
    ls = np.array([g.value(t) for g in dyn.generators])
    return float(np.sqrt(np.sum(weights * ls**2)))


@dataclass(frozen=True)
class DivisibilityScan:
    t_values: np.ndarray
    s_values: np.ndarray
    min_component: np.ndarray  # (n_t, n_s), NaN on singular columns
    singular_t: np.ndarray  # boolean mask over t_values
    negative_cells: tuple[tuple[float, float, float], ...]  # (t, s, min comp)

    @property
    def has_violation(self) -> bool:
        return len(self.negative_cells) > 0


def _singular_times(dyn: ChannelDynamics, upto: float) -> list[float]:
    zeros = []
    for g in dyn.generators:
        if g.value.is_zero() or g.derivative.is_zero():
            continue
        zeros.extend(
            p.t for p in find_extrema(g.value, (0.0, upto)) if p.kind == "zero-crossing"
        )
    return sorted(zeros)


def divisibility_scan(
    ch: PauliChannel,
    w: HypoExpWTD,
    t_values: np.ndarray,
    s_values: np.ndarray,
) -> DivisibilityScan:
    """Smallest Pauli-conjugation weight of the intermediate map per cell.

    The map from t to t+s has eigenvalue ratios lam_i(t+s)/lam_i(t); columns
    whose t falls within 1e-6 of a zero of any lam_i (scaled by the window
    length) are flagged singular and excluded, mirroring the divergence of
    the ratios there.
    """
    t_values = np.asarray(t_values, dtype=float)
    s_values = np.asarray(s_values, dtype=float)
    dyn = dynamics(ch, w)
    T = float(t_values.max() + s_values.max())
    zeros = _singular_times(dyn, T)
    eps = 1e-6 * T
    singular = np.array(
        [any(abs(t - z) <= eps for z in zeros) for t in t_values], dtype=bool
    )
    lam_t = dyn.lambdas(t_values)  # (3, nt)
    ts = t_values[:, None] + s_values[None, :]
    lam_ts = np.array([g.value(ts.ravel()).reshape(ts.shape) for g in dyn.generators])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = lam_ts / lam_t[:, :, None]
    from .qubit import PAULI_TRANSFORM

    stacked = np.concatenate([np.ones((1,) + ts.shape), ratios], axis=0)
    weights = 0.25 * np.einsum("ij,jts->its", PAULI_TRANSFORM, stacked)
    min_comp = weights.min(axis=0)
    min_comp[singular, :] = np.nan
    cells = []
    for i in np.flatnonzero(~singular):
        for j in np.flatnonzero(min_comp[i] < -1e-12):
            cells.append(
                (float(t_values[i]), float(s_values[j]), float(min_comp[i, j]))
            )
    return DivisibilityScan(t_values, s_values, min_comp, singular, tuple(cells))


def _negativity_function(dyn: ChannelDynamics, s_offset: float):
    def neg(t: float) -> float:
        ls = np.array([g.value(t) for g in dyn.generators])
        if np.any(ls == 0.0):
            return math.inf  # isolated point; arctan stays bounded
        lts = np.array([g.value(t + s_offset) for g in dyn.generators])
        return choi_vector(lts / ls).negativity

    return neg


def _violation_intervals(
    dyn: ChannelDynamics, s_offset: float, window: tuple[float, float]
) -> list[tuple[float, float]]:
    """Subintervals where the intermediate map fails complete positivity."""
    t0, t1 = window
    steps = [_osc_step(g.value) for g in dyn.generators]
    step = min([s for s in steps if s is not None] + [(t1 - t0) / 400.0])
    grid = np.linspace(t0, t1, max(int(np.ceil((t1 - t0) / step)), 400) + 1)
    neg = _negativity_function(dyn, s_offset)
    vals = np.array([neg(float(t)) for t in grid])
    floor = 1e-12  # rounding noise of an exactly CP cell
    inside = vals > floor
    boundaries = []
    for i in np.flatnonzero(inside[:-1] != inside[1:]):
        a, b = grid[i], grid[i + 1]
        try:
            boundaries.append(float(brentq(lambda t: neg(t) - floor, a, b, xtol=1e-12)))
        except ValueError:
            boundaries.append(float(0.5 * (a + b)))
    marks = [t0] + sorted(boundaries) + [t1]
    out = []
    for a, b in zip(marks[:-1], marks[1:]):
        if neg(0.5 * (a + b)) > floor:
            if out and abs(out[-1][1] - a) < 1e-12:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def hou_measure(
    ch: PauliChannel,
    w: HypoExpWTD,
    s_offset: float | None = None,
    window: tuple[float, float] | None = None,
) -> MeasureResult:
    """Arctangent-weighted divisibility measure, finite by construction.

    Integrates arctan of the total negativity of the fixed-lag intermediate
    map over the region where complete positivity fails, normalized by the
    length of that region.  The lag defaults to 1e-3 divided by the rate
    scale; the arctangent stays bounded through the zeros of the eigenvalues,
    where the unnormalized measure diverges.
    """
    dyn = dynamics(ch, w)
    if s_offset is None:
        s_offset = 1e-3 / max(w.rates)
    if s_offset <= 0:
        raise ValueError("lag must be positive")
    if window is None:
        window = (0.0, _auto_window([g.derivative for g in dyn.generators]))
    intervals = _violation_intervals(dyn, s_offset, window)
    if not intervals:
        return MeasureResult(0.0, (), "rhp-hou", note=f"s_offset={s_offset:g}")
    neg = _negativity_function(dyn, s_offset)
    zeros = _singular_times(dyn, window[1] + s_offset)
    total = 0.0
    length = 0.0
    contribs = []
    for a, b in intervals:
        pts = [z for z in zeros if a < z < b]
        val, _err = quad(
            lambda t: math.atan(neg(t)), a, b, points=pts or None, limit=200
        )
        total += val
        length += b - a
        contribs.append(((a, b), val))
    return MeasureResult(
        total / length,
        tuple(contribs),
        "rhp-hou",
        note=f"s_offset={s_offset:g}; violation length={length:g}",
    )


def rhp_divisibility_measure(
    ch: PauliChannel,
    w: HypoExpWTD,
    s_offset: float | None = None,
    window: tuple[float, float] | None = None,
) -> MeasureResult:
    """Unnormalized divisibility measure: integral of the total negativity.

    Diverges (flagged as +inf) as soon as any map eigenvalue crosses zero in
    the window, because the intermediate-map ratios blow up there.
    """
    dyn = dynamics(ch, w)
    if s_offset is None:
        s_offset = 1e-3 / max(w.rates)
    if window is None:
        window = (0.0, _auto_window([g.derivative for g in dyn.generators]))
    zeros = _singular_times(dyn, window[1])
    if zeros:
        return MeasureResult(
            math.inf,
            (),
            "rhp-divisibility",
            note=f"eigenvalue zero at t={zeros[0]:.6g} makes the integral diverge",
        )
    intervals = _violation_intervals(dyn, s_offset, window)
    neg = _negativity_function(dyn, s_offset)
    total = 0.0
    contribs = []
    for a, b in intervals:
        val, _err = quad(neg, a, b, limit=200)
        total += val
        contribs.append(((a, b), val))
    return MeasureResult(
        total, tuple(contribs), "rhp-divisibility", note=f"s_offset={s_offset:g}"
    )


@dataclass(frozen=True)
class TCLCoefficients:
    """Time-local master-equation rates at one time, in both forms.

    canonical: rates (gamma_x, gamma_y, gamma_z) of the three independent
    Pauli channels; gamma_i = (2 a_i - sum_j a_j)/4 with a_i = lam_i'/lam_i.
    overcomplete: (dephasing, flip_pair, sigma_x, sigma_y) rates of the
    linearly dependent set {sigma_z, sigma_+/sigma_- exchange, sigma_x,
    sigma_y}; the last two are opposite, so one is negative whenever
    lam_x != lam_y even for divisible dynamics.
    """

    t: float
    canonical: tuple[float, float, float]
    overcomplete: tuple[float, float, float, float]
    singular: bool = False

    def apply_canonical(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        for g, s in zip(self.canonical, SIGMA[1:]):
            out += g * (s @ rho @ s - rho)
        return out

    def apply_overcomplete(self, rho: np.ndarray) -> np.ndarray:
        deph, flip, gx, gy = self.overcomplete
        sp = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        sm = sp.conj().T
        out = deph * (SIGMA[3] @ rho @ SIGMA[3] - rho)
        out += flip * (sp @ rho @ sm + sm @ rho @ sp - rho)
        out += gx * (SIGMA[1] @ rho @ SIGMA[1] - rho)
        out += gy * (SIGMA[2] @ rho @ SIGMA[2] - rho)
        return out


def tcl_coefficients(ch: PauliChannel, w: HypoExpWTD, t: float) -> TCLCoefficients:
    """Both time-local rate sets at time t; flags times where some lam_i = 0."""
    snap = dynamics(ch, w).snapshot(t)
    lam = np.asarray(snap.lambda_t)
    if np.any(np.abs(lam) < 1e-14):
        nan = (math.nan,) * 3
        return TCLCoefficients(t, nan, (math.nan,) * 4, singular=True)
    a = np.asarray(snap.lambda_dot_t) / lam
    canonical = tuple(float(0.25 * (2.0 * a[i] - a.sum())) for i in range(3))
    overcomplete = (
        float(-0.25 * (a[0] + a[1] - a[2])),
        float(-0.5 * a[2]),
        float(0.25 * (a[0] - a[1])),
        float(-0.25 * (a[0] - a[1])),
    )
    return TCLCoefficients(t, canonical, overcomplete)


def tcl_equivalence_check(coeffs: TCLCoefficients, rho: QubitState) -> float:
    """Max-norm difference of the two generator forms applied to rho."""
    if coeffs.singular:
        raise ValueError("rates are singular at this time")
    m = rho.matrix()
    diff = coeffs.apply_canonical(m) - coeffs.apply_overcomplete(m)
    return float(np.max(np.abs(diff)))
