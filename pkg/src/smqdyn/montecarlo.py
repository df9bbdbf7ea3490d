"""Trajectory-level oracle for renewal and two-state semi-Markov quantities.

Every trajectory draws from its own counter-based stream keyed by
(seed, trajectory index), so estimates are bit-identical regardless of
batching or thread count.  Exponential stages are sampled by inverse CDF.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .classical_semimarkov import ProbabilityVector, SemiMarkovSpec
from .waiting_time import HypoExpWTD

__all__ = [
    "SimConfig",
    "Estimate",
    "trajectory_rng",
    "sample_jump_count",
    "estimate_generating_function",
    "estimate_jump_probability",
    "simulate_two_state",
    "write_estimates_csv",
]


@dataclass(frozen=True)
class SimConfig:
    n_traj: int
    seed: int
    horizon: float

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("need at least one trajectory")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n: int

    def covers(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.std_error


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one trajectory (Philox keyed by seed, index)."""
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, index], dtype=np.uint64))
    )


def _stage_draws(w: HypoExpWTD, count: int, rng: np.random.Generator) -> np.ndarray:
    """`count` waiting times, each the sum of the exponential stages."""
    u = rng.random((count, w.n_stages))
    rates = np.asarray(w.rates)
    return (-np.log1p(-u) / rates).sum(axis=1)


def _jump_times(w: HypoExpWTD, horizon: float, rng: np.random.Generator) -> np.ndarray:
    block = max(int(horizon / w.mean + 8.0 * np.sqrt(horizon / w.mean + 1.0)) + 4, 8)
    waits = _stage_draws(w, block, rng)
    total = waits.sum()
    chunks = [waits]
    while total <= horizon:
        more = _stage_draws(w, block, rng)
        chunks.append(more)
        total += more.sum()
    times = np.cumsum(np.concatenate(chunks) if len(chunks) > 1 else chunks[0])
    return times[times <= horizon]


def sample_jump_count(w: HypoExpWTD, t: float, rng: np.random.Generator) -> int:
    """Number of completed waiting times up to t for a single trajectory."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0.0:
        return 0
    return int(len(_jump_times(w, t, rng)))


def _accumulate(values_iter, n_traj: int, n_times: int) -> list[Estimate]:
    acc = np.zeros(n_times)
    acc2 = np.zeros(n_times)
    for vals in values_iter:
        acc += vals
        acc2 += vals * vals
    mean = acc / n_traj
    if n_traj > 1:
        var = np.maximum(acc2 - n_traj * mean * mean, 0.0) / (n_traj - 1)
    else:
        var = np.zeros(n_times)
    return [
        Estimate(float(m), float(np.sqrt(v / n_traj)), n_traj)
        for m, v in zip(mean, var)
    ]


def _check_times(times: Sequence[float], cfg: SimConfig) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.size and float(times.max()) > cfg.horizon:
        raise ValueError("observation times must not exceed the horizon")
    return times


def estimate_generating_function(
    w: HypoExpWTD, mu: float, times: Sequence[float], cfg: SimConfig
) -> list[Estimate]:
    """Sample mean of mu^{N(t)} at each observation time."""
    if not -1.0 <= mu <= 1.0:
        raise ValueError("mu must lie in [-1, 1]")
    times = _check_times(times, cfg)

    def gen():
        for i in range(cfg.n_traj):
            jumps = _jump_times(w, cfg.horizon, trajectory_rng(cfg.seed, i))
            counts = np.searchsorted(jumps, times, side="right")
            yield np.power(float(mu), counts)

    return _accumulate(gen(), cfg.n_traj, len(times))


def estimate_jump_probability(
    w: HypoExpWTD, n: int, times: Sequence[float], cfg: SimConfig
) -> list[Estimate]:
    """Empirical frequency of exactly n jumps up to each observation time."""
    times = _check_times(times, cfg)

    def gen():
        for i in range(cfg.n_traj):
            jumps = _jump_times(w, cfg.horizon, trajectory_rng(cfg.seed, i))
            counts = np.searchsorted(jumps, times, side="right")
            yield (counts == n).astype(float)

    return _accumulate(gen(), cfg.n_traj, len(times))


def simulate_two_state(
    spec: SemiMarkovSpec,
    p0: ProbabilityVector,
    times: Sequence[float],
    cfg: SimConfig,
) -> list[Estimate]:
    """Empirical occupation probability of the first state at each time.

    The state after each jump follows the embedded chain: from state j the
    walker moves to the first state with the probability in column j of the
    jump matrix.
    """
    times = _check_times(times, cfg)
    to_first = (spec.pi, spec.sigma)  # P(next state = first | current state)

    def gen():
        for i in range(cfg.n_traj):
            rng = trajectory_rng(cfg.seed, i)
            state = 0 if rng.random() < p0.p[0] else 1
            jumps = _jump_times(spec.wtd, cfg.horizon, rng)
            draws = rng.random(len(jumps))
            states = np.empty(len(jumps) + 1, dtype=np.int8)
            states[0] = state
            for k, u in enumerate(draws):
                state = 0 if u < to_first[state] else 1
                states[k + 1] = state
            counts = np.searchsorted(jumps, times, side="right")
            yield (states[counts] == 0).astype(float)

    return _accumulate(gen(), cfg.n_traj, len(times))


def write_estimates_csv(
    stream: IO[str],
    quantity: str,
    times: Sequence[float],
    estimates: Sequence[Estimate],
    cfg: SimConfig,
) -> None:
    """CSV emission with the schema t, quantity, mean, std_error, n_traj, seed."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", "quantity", "mean", "std_error", "n_traj", "seed"])
    for t, est in zip(times, estimates):
        writer.writerow(
            [
                format(float(t), ".12g"),
                quantity,
                format(est.mean, ".12g"),
                format(est.std_error, ".12g"),
                est.n,
                cfg.seed,
            ]
        )
