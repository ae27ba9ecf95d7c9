"""Monte-Carlo ensembles of terminal values.

Paths are simulated in fixed-size blocks, vectorized across the block.  Each
path's normals are keyed on ``(seed, path_index, counter)`` so the terminal
value of every path, and therefore every statistic, is bit-identical for any
worker count or block size.  Statistics are reduced over the full per-path
array in path-index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .benchmarks import Benchmark, get_benchmark, get_functional
from .model import SdeSystem
from .schemes import (
    SCHEME_NAMES,
    draws_per_step,
    euler_step,
    make_theta_scheme,
    midpoint_drift_step,
    richardson_pair_step,
    wt_step,
)

BLOCK_SIZE = 1 << 15
MAX_EXCLUDED_FRACTION = 1e-3


class EnsembleError(RuntimeError):
    """Too many paths became nonfinite."""


def n_steps_for(h: float, T: float) -> int:
    """Number of steps, requiring ``T / h`` to be a positive integer."""
    if not (h > 0 and T > 0):
        raise ValueError(f"h and T must be positive (h={h}, T={T})")
    n = round(T / h)
    if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T/h = {T / h!r} is not an integer; choose h dividing T")
    return n


@dataclass
class PathSample:
    """Per-path functional values at the horizon.

    ``values`` has one column per output: a single column for ordinary
    schemes, ``(f(Z_{h/2}), f(Z_h))`` for the coupled Richardson pair.
    """

    values: np.ndarray
    alive: np.ndarray
    n_steps: int
    degenerate_steps: int
    degenerate_counts: np.ndarray
    first_failure: str | None = None

    @property
    def n_excluded(self) -> int:
        return int(self.alive.size - np.count_nonzero(self.alive))


def _run_block(system, x0, scheme, theta_scheme, h, n_steps, seed, functional, start, stop):
    n = stop - start
    M = system.n_channels
    dps = draws_per_step(scheme, M)
    k1, k2 = rng.path_keys(seed, np.arange(start, stop))
    state = np.broadcast_to(x0, (n, system.dim)).copy()
    coarse = state.copy() if scheme == "richardson" else None
    alive = np.ones(n, dtype=bool)
    deg_steps = np.zeros(n, dtype=np.int64)
    deg_chan = np.zeros((n, M), dtype=np.int64)

    with np.errstate(all="ignore"):
        for step in range(n_steps):
            eta = rng.normals_from_keys(k1, k2, step * dps, dps)
            if scheme == "wt":
                res = wt_step(system, state, h, theta_scheme, eta[:, :M], eta[:, M:])
                state = res.state
                deg_chan += res.degenerate
                deg_steps += res.any_degenerate
            elif scheme == "euler":
                state = euler_step(system, state, h, eta)
            elif scheme == "midpoint-drift":
                state = midpoint_drift_step(system, state, h, eta)
            else:
                coarse, state = richardson_pair_step(system, coarse, state, h, eta[:, :M], eta[:, M:])
            ok = np.isfinite(state).all(axis=1)
            if coarse is not None:
                ok &= np.isfinite(coarse).all(axis=1)
            if not ok.all():
                # freeze failed paths so they cannot feed back into the rates
                newly = alive & ~ok
                alive &= ok
                state[newly] = 0.0
                if coarse is not None:
                    coarse[newly] = 0.0

    obs = system.observed_dim
    cols = [functional(state[:, :obs])]
    if coarse is not None:
        cols.append(functional(coarse[:, :obs]))
    values = np.stack(cols, axis=1)
    failure = None
    if not alive.all():
        failure = f"path {start + int(np.argmin(alive))} became nonfinite"
    return values, alive, deg_steps, deg_chan, failure


def simulate(
    system: SdeSystem,
    x0,
    scheme: str,
    h: float,
    T: float,
    n_paths: int,
    seed: int,
    functional,
    theta: float = 0.5,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> PathSample:
    """Run ``n_paths`` paths to ``T`` and evaluate ``functional`` on each."""
    if scheme not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEME_NAMES)}")
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    n_steps = n_steps_for(h, T)
    if isinstance(functional, str):
        functional = get_functional(functional)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (system.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, system {system.name!r} needs ({system.dim},)")
    theta_scheme = make_theta_scheme(theta) if scheme == "wt" else None
    seed = int(seed) & rng.MASK64

    bounds = [(s, min(s + block_size, n_paths)) for s in range(0, n_paths, block_size)]
    n_out = 2 if scheme == "richardson" else 1
    M = system.n_channels
    values = np.empty((n_paths, n_out))
    alive = np.empty(n_paths, dtype=bool)
    deg_steps = np.empty(n_paths, dtype=np.int64)
    deg_chan = np.empty((n_paths, M), dtype=np.int64)

    def work(b):
        start, stop = b
        v, a, ds, dc, fail = _run_block(
            system, x0, scheme, theta_scheme, h, n_steps, seed, functional, start, stop
        )
        values[start:stop] = v
        alive[start:stop] = a
        deg_steps[start:stop] = ds
        deg_chan[start:stop] = dc
        return fail

    if workers <= 1 or len(bounds) == 1:
        failures = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            failures = list(pool.map(work, bounds))

    return PathSample(
        values=values,
        alive=alive,
        n_steps=n_steps,
        degenerate_steps=int(deg_steps[alive].sum()),
        degenerate_counts=deg_chan[alive].sum(axis=0),
        first_failure=next((f for f in failures if f), None),
    )


def check_exclusions(sample: PathSample) -> None:
    n = sample.alive.size
    bad = sample.n_excluded
    if bad > MAX_EXCLUDED_FRACTION * n:
        raise EnsembleError(
            f"{bad} of {n} paths became nonfinite (limit {MAX_EXCLUDED_FRACTION:.1%}); "
            f"{sample.first_failure}"
        )


@dataclass(frozen=True)
class EnsembleSpec:
    system: str | Benchmark
    scheme: str
    h: float
    T: float
    n_paths: int
    seed: int
    functional: str | None = None
    theta: float | None = 0.5
    x0: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("n_paths must be at least 2")
        n_steps_for(self.h, self.T)

    @property
    def benchmark(self) -> Benchmark:
        if isinstance(self.system, Benchmark):
            return self.system
        return get_benchmark(self.system)

    @property
    def functional_name(self) -> str:
        return self.functional or self.benchmark.functional

    @property
    def initial_state(self) -> np.ndarray:
        bench = self.benchmark
        if self.x0 is None:
            return bench.x0
        return np.asarray(self.x0, dtype=np.float64)

    def exact(self) -> float | None:
        oracle = self.benchmark.oracle(self.functional_name)
        if oracle is None:
            return None
        return oracle(self.T, self.initial_state)


@dataclass(frozen=True)
class EnsembleEstimate:
    mean: float
    variance: float
    stderr: float
    n_paths: int
    degenerate_fraction: float | None = None
    degenerate_counts: tuple[int, ...] = ()
    n_excluded: int = 0
    values: np.ndarray | None = field(default=None, repr=False, compare=False)


def summarize(values: np.ndarray) -> tuple[float, float, float]:
    """Mean, unbiased variance and standard error of a 1-d sample."""
    n = values.size
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1)) if n > 1 else 0.0
    return mean, var, math.sqrt(var / n)


def run_ensemble(
    spec: EnsembleSpec, workers: int = 1, keep_values: bool = False
) -> EnsembleEstimate:
    if spec.scheme == "richardson":
        raise ValueError("use richardson.run_richardson for the coupled estimator")
    bench = spec.benchmark
    sample = simulate(
        bench.system,
        spec.initial_state,
        spec.scheme,
        spec.h,
        spec.T,
        spec.n_paths,
        spec.seed,
        spec.functional_name,
        theta=spec.theta if spec.theta is not None else 0.5,
        workers=workers,
    )
    check_exclusions(sample)
    vals = sample.values[sample.alive, 0]
    mean, var, se = summarize(vals)
    frac = None
    if spec.scheme == "wt":
        frac = sample.degenerate_steps / (vals.size * sample.n_steps)
    return EnsembleEstimate(
        mean=mean,
        variance=var,
        stderr=se,
        n_paths=int(vals.size),
        degenerate_fraction=frac,
        degenerate_counts=tuple(int(c) for c in sample.degenerate_counts),
        n_excluded=sample.n_excluded,
        values=vals if keep_values else None,
    )


def estimate_error(estimate, exact: float) -> tuple[float, float]:
    """Signed error ``exact - mean`` and the estimate's standard error."""
    return exact - estimate.mean, estimate.stderr


def degenerate_sweep(
    system: str | Benchmark,
    thetas,
    h: float,
    T: float,
    n_paths: int,
    seed: int,
    workers: int = 1,
) -> list[tuple[float, float]]:
    """Fraction of degenerate weak-trapezoidal steps for each theta.

    Each theta gets its own seed derived from ``seed`` and its list position.
    """
    out = []
    for i, theta in enumerate(thetas):
        spec = EnsembleSpec(
            system, "wt", h, T, n_paths, rng.derive_seed(seed, 2, i), theta=float(theta)
        )
        est = run_ensemble(spec, workers=workers)
        out.append((float(theta), est.degenerate_fraction))
    return out
