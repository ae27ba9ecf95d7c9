"""Weak convergence-order estimation from log-log fits of |error| against h."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .benchmarks import Benchmark, get_benchmark
from .ensemble import EnsembleSpec, estimate_error, run_ensemble
from .richardson import run_richardson

GATE_FACTOR = 2.0


class SamplingDominatedError(ValueError):
    """Some errors are not resolved above sampling noise; the fit is refused."""

    def __init__(self, message, points=()):
        super().__init__(message)
        self.points = list(points)


@dataclass(frozen=True)
class ConvergencePoint:
    h: float
    error: float
    stderr: float
    estimate: object = None

    @property
    def resolved(self) -> bool:
        return abs(self.error) >= GATE_FACTOR * self.stderr and self.error != 0


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class ConvergenceStudy:
    scheme: str
    theta: float | None
    points: list[ConvergencePoint]
    slope: float
    intercept: float
    r_squared: float


def fit_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """OLS fit of ``log|error|`` on ``log h``."""
    pts = [(float(h), abs(float(e))) for h, e in points]
    if len(pts) < 2:
        raise ValueError("need at least two points to fit a slope")
    if any(h <= 0 for h, _ in pts):
        raise ValueError("step sizes must be positive")
    if any(e == 0 for _, e in pts):
        raise SamplingDominatedError(
            "an error is exactly zero; it cannot be told apart from sampling noise, "
            "use more paths or larger h"
        )
    # sort so the result does not depend on input order at the last bit
    pts.sort()
    x = np.log([h for h, _ in pts])
    y = np.log([e for _, e in pts])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValueError("step sizes must be distinct")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    syy = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if syy == 0 else max(0.0, min(1.0, 1.0 - float(resid @ resid) / syy))
    return SlopeFit(slope, intercept, r2)


def _point(bench, scheme, theta, h, T, n_paths, seed, functional, exact, x0, workers):
    if scheme == "richardson":
        est = run_richardson(bench, h, T, n_paths, seed, functional, x0=x0, workers=workers)
    else:
        spec = EnsembleSpec(
            bench, scheme, h, T, n_paths, seed, functional=functional, theta=theta,
            x0=None if x0 is None else tuple(x0),
        )
        est = run_ensemble(spec, workers=workers)
    err, se = estimate_error(est, exact)
    return ConvergencePoint(h, err, se, est)


def collect_points(
    system: str | Benchmark,
    scheme: str,
    theta: float | None,
    hs: Sequence[float],
    T: float,
    n_paths: int,
    seed: int,
    functional: str | None = None,
    exact: float | None = None,
    x0=None,
    workers: int = 1,
) -> list[ConvergencePoint]:
    """One ensemble per step size; the i-th uses ``derive_seed(seed, i)``."""
    bench = system if isinstance(system, Benchmark) else get_benchmark(system)
    functional = functional or bench.functional
    if exact is None:
        oracle = bench.oracle(functional)
        if oracle is None:
            raise ValueError(f"no exact oracle for {bench.name!r} / {functional!r}")
        exact = oracle(T, bench.x0 if x0 is None else x0)
    return [
        _point(bench, scheme, theta, h, T, n_paths, rng.derive_seed(seed, i), functional,
               exact, x0, workers)
        for i, h in enumerate(hs)
    ]


def fit_points(scheme: str, theta: float | None, points: list[ConvergencePoint]) -> ConvergenceStudy:
    """Apply the sampling gate, then fit."""
    bad = [p for p in points if not p.resolved]
    if bad:
        listing = ", ".join(
            f"h={p.h:.6g} (|error|={abs(p.error):.3g}, stderr={p.stderr:.3g})" for p in bad
        )
        raise SamplingDominatedError(
            f"{scheme}: error below {GATE_FACTOR:g}*stderr at {listing}; "
            "increase paths or use larger h",
            points,
        )
    fit = fit_slope([(p.h, p.error) for p in points])
    return ConvergenceStudy(scheme, theta, list(points), fit.slope, fit.intercept, fit.r_squared)


def convergence_study(
    system: str | Benchmark,
    scheme: str,
    theta: float | None,
    hs: Sequence[float],
    T: float,
    n_paths: int,
    seed: int,
    functional: str | None = None,
    exact: float | None = None,
    x0=None,
    workers: int = 1,
) -> ConvergenceStudy:
    if len(hs) < 3:
        raise ValueError("a convergence study needs at least three step sizes")
    if len(set(hs)) != len(hs):
        raise ValueError("step sizes must be distinct")
    pts = collect_points(system, scheme, theta, hs, T, n_paths, seed, functional, exact, x0, workers)
    return fit_points(scheme, theta if scheme == "wt" else None, pts)


def theta_convergence_sweep(
    system: str | Benchmark,
    thetas: Sequence[float],
    hs: Sequence[float],
    T: float,
    n_paths: int,
    seed: int,
    functional: str | None = None,
    exact: float | None = None,
    workers: int = 1,
) -> list[ConvergenceStudy]:
    """Weak-trapezoidal convergence study per theta.

    Every theta reuses the same per-h seeds, so a one-element sweep equals
    :func:`convergence_study` and slopes are compared under common noise.
    """
    return [
        convergence_study(system, "wt", float(th), hs, T, n_paths, seed, functional, exact,
                          workers=workers)
        for th in thetas
    ]


def power_law_points(hs: Sequence[float], coeff: float = 3.0, order: float = 2.0):
    """Synthetic ``(h, coeff * h**order)`` points for self-checks."""
    return [(h, coeff * math.pow(h, order)) for h in hs]
