"""SDE systems with noise entering along fixed directions.

A system is

    dX = b(X) dt + sum_k sigma_k(X) nu_k dW_k

where each ``sigma_k`` is a nonnegative scalar rate and each ``nu_k`` is a
constant vector.  Evaluators are vectorized over leading axes: a drift
callable maps an array of shape ``(..., d)`` to ``(..., d)`` and a rate
callable maps ``(..., d)`` to ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Drift = Callable[[np.ndarray], np.ndarray]
Rate = Callable[[np.ndarray], np.ndarray]
TimeDrift = Callable[[np.ndarray, np.ndarray], np.ndarray]
TimeRate = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ModelError(ValueError):
    """Raised for inconsistent system definitions or bad evaluation inputs."""


class NegativeRateError(ModelError):
    """A rate evaluator returned a negative value."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NoiseChannel:
    rate: Rate
    direction: np.ndarray

    def __post_init__(self):
        d = _frozen(self.direction)
        if d.ndim != 1:
            raise ModelError("channel direction must be a 1-d vector")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class SdeSystem:
    """Drift plus a tuple of fixed-direction noise channels.

    ``observed_dim`` is the number of leading coordinates that functionals
    see; it differs from ``dim`` only for time-augmented systems.
    """

    dim: int
    drift: Drift
    channels: tuple[NoiseChannel, ...] = ()
    name: str = "anonymous"
    observed_dim: int | None = None
    directions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ModelError(f"dim must be a positive integer, got {self.dim!r}")
        chans = tuple(self.channels)
        for k, ch in enumerate(chans):
            if ch.direction.shape != (self.dim,):
                raise ModelError(
                    f"channel {k + 1} direction has shape {ch.direction.shape}, "
                    f"expected ({self.dim},)"
                )
        object.__setattr__(self, "channels", chans)
        if self.observed_dim is None:
            object.__setattr__(self, "observed_dim", self.dim)
        elif not 1 <= self.observed_dim <= self.dim:
            raise ModelError("observed_dim must lie in [1, dim]")
        if chans:
            nu = np.stack([ch.direction for ch in chans])
        else:
            nu = np.zeros((0, self.dim))
        nu.setflags(write=False)
        object.__setattr__(self, "directions", nu)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def _check_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise ModelError(
                f"state has trailing dimension {x.shape[-1:] or ()}, "
                f"system {self.name!r} expects {self.dim}"
            )
        return x

    def drift_at(self, x: np.ndarray) -> np.ndarray:
        x = self._check_state(x)
        return np.broadcast_to(np.asarray(self.drift(x), dtype=np.float64), x.shape)

    def rates_at(self, x: np.ndarray) -> np.ndarray:
        """All channel rates stacked on a trailing axis, shape ``(..., M)``."""
        x = self._check_state(x)
        lead = x.shape[:-1]
        if not self.channels:
            return np.zeros(lead + (0,))
        out = np.empty(lead + (self.n_channels,))
        for k, ch in enumerate(self.channels):
            out[..., k] = ch.rate(x)
        if np.any(out < 0):
            k = int(np.argwhere(out < 0)[0][-1])
            raise NegativeRateError(
                f"system {self.name!r}: channel {k + 1} returned a negative rate"
            )
        return out

    def diffuse(self, weights: np.ndarray) -> np.ndarray:
        """Combine per-channel scalar weights ``(..., M)`` into ``sum_k w_k nu_k``."""
        return weights @ self.directions


def evaluate_drift(system: SdeSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.dim,):
        raise ModelError(f"expected a state of length {system.dim}, got shape {x.shape}")
    return np.array(system.drift_at(x))


def evaluate_rate(system: SdeSystem, x, k: int) -> float:
    """Rate of channel ``k`` (1-based) at the single state ``x``."""
    if not 1 <= k <= system.n_channels:
        raise ModelError(f"channel index {k} out of range 1..{system.n_channels}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.dim,):
        raise ModelError(f"expected a state of length {system.dim}, got shape {x.shape}")
    r = float(system.channels[k - 1].rate(x))
    if r < 0:
        raise NegativeRateError(f"system {system.name!r}: channel {k} returned {r}")
    return r


def augment_time(
    dim: int,
    drift: TimeDrift,
    channels: Sequence[tuple[TimeRate, Sequence[float]]],
    name: str = "augmented",
) -> SdeSystem:
    """Turn a time-dependent system into an autonomous one on ``dim + 1`` coordinates.

    The extra last coordinate is a clock with unit drift and no noise.
    ``drift(t, x)`` and each ``rate(t, x)`` receive the clock as ``t`` (shape
    ``(...)``) and the original coordinates as ``x`` (shape ``(..., dim)``).
    """

    def aug_drift(z):
        t = z[..., dim]
        out = np.empty(z.shape)
        out[..., :dim] = drift(t, z[..., :dim])
        out[..., dim] = 1.0
        return out

    def lift(rate):
        return lambda z: rate(z[..., dim], z[..., :dim])

    aug_channels = []
    for rate, direction in channels:
        direction = np.asarray(direction, dtype=np.float64)
        if direction.shape != (dim,):
            raise ModelError(f"direction {direction} does not have length {dim}")
        aug_channels.append(NoiseChannel(lift(rate), np.append(direction, 0.0)))
    return SdeSystem(dim + 1, aug_drift, tuple(aug_channels), name=name, observed_dim=dim)
