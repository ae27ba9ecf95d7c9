"""Built-in benchmark systems, terminal functionals and exact moment oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import NoiseChannel, SdeSystem, augment_time

Functional = Callable[[np.ndarray], np.ndarray]
Oracle = Callable[[float, np.ndarray], float]

# Functionals act on the observed coordinates, shape (..., observed_dim).
FUNCTIONALS: dict[str, Functional] = {
    "x1": lambda x: x[..., 0],
    "x1sq": lambda x: x[..., 0] ** 2,
    "x2sq": lambda x: x[..., 1] ** 2,
    "norm-sq": lambda x: np.sum(x * x, axis=-1),
}


def get_functional(name: str) -> Functional:
    try:
        return FUNCTIONALS[name]
    except KeyError:
        raise KeyError(f"unknown functional {name!r}; choose from {', '.join(FUNCTIONALS)}") from None


@dataclass(frozen=True)
class MomentOracle:
    name: str
    evaluator: Oracle

    def __call__(self, t: float, x0) -> float:
        return float(self.evaluator(float(t), np.asarray(x0, dtype=np.float64)))


@dataclass(frozen=True)
class Benchmark:
    """A system bundled with its default initial state and known moments."""

    system: SdeSystem
    x0: np.ndarray
    functional: str
    oracles: dict[str, MomentOracle] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.system.name

    def oracle(self, functional: str) -> MomentOracle | None:
        return self.oracles.get(functional)


# --- linear system with non-commuting noise -----------------------------------

def build_ou() -> SdeSystem:
    def drift(x):
        out = np.zeros(x.shape)
        out[..., 0] = x[..., 0]
        return out

    return SdeSystem(
        2,
        drift,
        (
            # |x1| rather than x1: rates must be nonnegative, and the law is the same
            NoiseChannel(lambda x: np.abs(x[..., 0]), [0.0, 1.0]),
            NoiseChannel(lambda x: np.full(x.shape[:-1], 0.1), [1.0, 1.0]),
        ),
        name="ou",
    )


def ou_exact_x2sq(t: float, x0) -> float:
    """E X2(t)^2 for the ou system started at a deterministic x0."""
    x1sq, x2sq = float(x0[0]) ** 2, float(x0[1]) ** 2
    return x2sq - 0.5 * x1sq + math.exp(2 * t) * (200 * x1sq + 1) / 400 + t / 200 - 1 / 400


def build_ou_drift_only() -> SdeSystem:
    """The ou drift with the noise switched off; X1 = x1(0) e^t."""
    sys = build_ou()
    return SdeSystem(2, sys.drift, (), name="ou-drift")


# --- rotation with time-dependent rates ---------------------------------------

def _talay_drift(t, x):
    return np.stack([-x[..., 1], x[..., 0]], axis=-1)


def _talay_rate1(t, x):
    return np.sqrt((np.sin(x[..., 0] + x[..., 1]) ** 2 + 6.0) / (t + 1.0))


def _talay_rate2(t, x):
    return np.sqrt((np.cos(x[..., 0] + x[..., 1]) ** 2 + 6.0) / (t + 1.0))


def build_talay() -> SdeSystem:
    """Time-augmented 3-d form; the last coordinate is the clock."""
    return augment_time(
        2,
        _talay_drift,
        [(_talay_rate1, [1.0, 0.0]), (_talay_rate2, [0.0, 1.0])],
        name="talay",
    )


def talay_exact_normsq(t: float, x0) -> float:
    x0 = np.asarray(x0, dtype=np.float64)[:2]
    return float(x0 @ x0) + 13.0 * math.log1p(t)


# --- theta study system -------------------------------------------------------

def build_theta_test() -> SdeSystem:
    return SdeSystem(
        1,
        lambda x: np.zeros(x.shape),
        (NoiseChannel(lambda x: np.sqrt(x[..., 0] ** 2 + 1.0), [1.0]),),
        name="theta-test",
    )


def theta_test_exact_sq(t: float, x0) -> float:
    # d E[X^2] = E[X^2 + 1] dt
    return (float(x0[0]) ** 2 + 1.0) * math.exp(t) - 1.0


# --- synthetic systems --------------------------------------------------------

def build_const() -> SdeSystem:
    """dX = 1 dt."""
    return SdeSystem(1, lambda x: np.ones(x.shape), (), name="const")


def build_linear_1d() -> SdeSystem:
    """dX = X dt."""
    return SdeSystem(1, lambda x: np.array(x, dtype=np.float64), (), name="linear-1d")


def build_additive(sigma: float = 1.0) -> SdeSystem:
    """dX = sigma dW."""
    return SdeSystem(
        1,
        lambda x: np.zeros(x.shape),
        (NoiseChannel(lambda x: np.full(x.shape[:-1], sigma), [1.0]),),
        name="additive",
    )


def _registry() -> dict[str, Benchmark]:
    one = np.array([1.0, 1.0])
    return {
        "ou": Benchmark(
            build_ou(), one, "x2sq", {"x2sq": MomentOracle("ou-x2sq", ou_exact_x2sq)}
        ),
        "ou-drift": Benchmark(
            build_ou_drift_only(),
            one,
            "x1sq",
            {
                "x1sq": MomentOracle("ou-drift-x1sq", lambda t, x0: x0[0] ** 2 * math.exp(2 * t)),
                "x2sq": MomentOracle("ou-drift-x2sq", lambda t, x0: x0[1] ** 2),
            },
        ),
        "talay": Benchmark(
            build_talay(),
            np.array([1.0, 1.0, 0.0]),
            "norm-sq",
            {"norm-sq": MomentOracle("talay-norm-sq", talay_exact_normsq)},
        ),
        "theta-test": Benchmark(
            build_theta_test(),
            np.array([1.0]),
            "x1sq",
            {"x1sq": MomentOracle("theta-test-sq", theta_test_exact_sq)},
        ),
        "const": Benchmark(
            build_const(),
            np.array([0.0]),
            "x1",
            {"x1": MomentOracle("const-x1", lambda t, x0: x0[0] + t)},
        ),
        "linear-1d": Benchmark(
            build_linear_1d(),
            np.array([1.0]),
            "x1",
            {"x1": MomentOracle("linear-x1", lambda t, x0: x0[0] * math.exp(t))},
        ),
        "additive": Benchmark(
            build_additive(),
            np.array([0.0]),
            "x1sq",
            {
                "x1sq": MomentOracle("additive-sq", lambda t, x0: x0[0] ** 2 + t),
                "x1": MomentOracle("additive-x1", lambda t, x0: x0[0]),
            },
        ),
    }


BENCHMARKS: dict[str, Benchmark] = _registry()


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; choose from {', '.join(BENCHMARKS)}") from None
