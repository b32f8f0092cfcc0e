"""Evaluation engine: exact quadrature over the random draw and seeded Monte Carlo."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .online import GUARD_RTOL, GuessCenterConfig, barely_random_bottleneck, center_objective
from .report import RatioReport, emit_report, parse_report  # noqa: F401  (re-exported)

DEFAULT_POINTS = 200_000


def _guarded_ceil_vec(v: np.ndarray) -> np.ndarray:
    r = np.rint(v)
    snap = np.abs(v - r) <= GUARD_RTOL * np.maximum(1.0, np.abs(v))
    return np.where(snap, r, np.ceil(v)).astype(np.int64)


def last_thresholds(x: float, deltas: np.ndarray, n: int) -> np.ndarray:
    """Largest ``ceil(x^(i + delta)) <= n`` for every delta (0 if none), vectorized."""
    base = np.floor(math.log(n) / math.log(x) - deltas).astype(np.int64) - 1
    best = np.zeros(len(deltas), dtype=np.int64)
    for k in range(4):
        i = base + k
        ok_i = i >= 0
        t = _guarded_ceil_vec(np.power(x, np.maximum(i, 0) + deltas))
        take = ok_i & (t <= n)
        best = np.where(take, np.maximum(best, t), best)
    return best


def center_ratio_grid(x: float, n: int, deltas: np.ndarray) -> np.ndarray:
    """Ratio of center guessing on all-ones length ``n`` for each delta."""
    t = last_thresholds(x, deltas, n)
    bott = np.where(t > 0, np.maximum(t, n - t), n)
    return bott / -(-n // 2)


def expected_ratio_quadrature(
    cfg: GuessCenterConfig | float, n: int, points: int = DEFAULT_POINTS
) -> float:
    """Expected ratio over a uniform delta, by the midpoint rule on ``points`` nodes."""
    x = cfg.x if isinstance(cfg, GuessCenterConfig) else float(cfg)
    if isinstance(cfg, GuessCenterConfig) and cfg.weighted:
        raise ValueError("quadrature is defined for the all-ones instance")
    if n < 1:
        raise ValueError("n must be >= 1")
    deltas = (np.arange(points) + 0.5) / points
    return float(center_ratio_grid(x, n, deltas).mean())


def quadrature_report(x: float, n: int, points: int = DEFAULT_POINTS, tol: float = 0.005) -> RatioReport:
    deltas = (np.arange(points) + 0.5) / points
    r = center_ratio_grid(x, n, deltas)
    ref = center_objective(x)
    mean = float(r.mean())
    return RatioReport(
        "ax",
        f"ones(n={n}),quadrature({points})",
        points,
        mean,
        float(r.max()),
        0.0,
        {"x": x},
        reference=ref,
        tolerance=tol,
        passed=abs(mean - ref) <= tol,
    )


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, trial): results do not depend on scheduling."""
    return np.random.default_rng([seed, trial])


def monte_carlo(
    trial: Callable[[np.random.Generator], float],
    trials: int,
    seed: int = 0,
    algorithm: str = "",
    instance: str = "",
    reference: float | None = None,
    tolerance: float | None = None,
) -> RatioReport:
    """Run ``trial(rng)`` for independent seeded streams and summarize the ratios.

    When both ``reference`` and ``tolerance`` are given, the report passes iff
    the mean stays below ``reference + tolerance``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    samples = [float(trial(trial_rng(seed, t))) for t in range(trials)]
    rep = RatioReport.from_samples(algorithm, instance, samples, reference=reference, tolerance=tolerance)
    if reference is not None and tolerance is not None:
        rep.passed = rep.mean <= reference + tolerance
    rep.breakdown["seed"] = seed
    return rep


def barely_random_expectation(n: int) -> float:
    """Exact expected ratio of the one-bit algorithm on all-ones length ``n``."""
    opt = -(-n // 2)
    return 0.5 * (barely_random_bottleneck(n, 0) + barely_random_bottleneck(n, 1)) / opt


def barely_random_sweep(exponents: Sequence[int] = (20,), grid: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Expectation over the coin for ``n = floor(2 * 2^(i + a))`` on a grid of phases ``a``."""
    alphas = np.arange(grid) / grid
    worst = np.zeros(grid)
    for i in exponents:
        vals = np.array([barely_random_expectation(int(2 * 2 ** (i + a))) for a in alphas])
        worst = np.maximum(worst, vals)
    return alphas, worst
