"""One-step maps for the integrators.

All step functions accept either a single state of shape ``(d,)`` with
normals of shape ``(M,)`` or a batch of states ``(n, d)`` with normals
``(n, M)``.  They are pure.  For a single state a nonfinite result raises
:class:`NonFiniteStateError`; batched callers (the ensemble driver) mask
nonfinite rows themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelError, SdeSystem

SCHEME_NAMES = ("wt", "euler", "midpoint-drift", "richardson")


class NonFiniteStateError(FloatingPointError):
    """A step produced inf or nan."""


@dataclass(frozen=True)
class ThetaScheme:
    theta: float
    alpha1: float
    alpha2: float

    @property
    def degeneracy_ratio(self) -> float:
        """alpha2 / alpha1, i.e. ``1 - 2 theta + 2 theta**2``."""
        return self.alpha2 / self.alpha1


def make_theta_scheme(theta: float) -> ThetaScheme:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie strictly between 0 and 1, got {theta}")
    denom = 2.0 * theta * (1.0 - theta)
    alpha1 = 1.0 / denom
    alpha2 = ((1.0 - theta) ** 2 + theta**2) / denom
    return ThetaScheme(theta, alpha1, alpha2)


@dataclass(frozen=True)
class StepResult:
    state: np.ndarray
    degenerate: np.ndarray

    @property
    def any_degenerate(self):
        """Per-step flag: OR over channels."""
        return np.any(self.degenerate, axis=-1)


def _prepare(system: SdeSystem, x, h: float, *normals):
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != system.dim:
        raise ModelError(f"state shape {x.shape} incompatible with dimension {system.dim}")
    want = x.shape[:-1] + (system.n_channels,)
    out = []
    for eta in normals:
        eta = np.asarray(eta, dtype=np.float64)
        if eta.shape != want:
            raise ModelError(f"normals have shape {eta.shape}, expected {want}")
        out.append(eta)
    return (x, *out)


def _finish(x_in: np.ndarray, y: np.ndarray) -> np.ndarray:
    if x_in.ndim == 1 and not np.all(np.isfinite(y)):
        raise NonFiniteStateError(f"step from {x_in} produced nonfinite state {y}")
    return y


def euler_step(system: SdeSystem, x, h: float, normals) -> np.ndarray:
    x, eta = _prepare(system, x, h, normals)
    y = x + system.drift_at(x) * h + system.diffuse(system.rates_at(x) * eta) * math.sqrt(h)
    return _finish(x, y)


def wt_step(system: SdeSystem, x, h: float, scheme: ThetaScheme, normals1, normals2) -> StepResult:
    """Weak trapezoidal step: Euler predictor to the theta-point, then corrector.

    The corrector diffusion uses ``sqrt([alpha1*s(y*)**2 - alpha2*s(x)**2]^+)``
    per channel; ``degenerate[..., k]`` records where the bracket is negative.
    A bracket of exactly zero is not degenerate.
    """
    x, eta1, eta2 = _prepare(system, x, h, normals1, normals2)
    th, a1, a2 = scheme.theta, scheme.alpha1, scheme.alpha2
    bx = system.drift_at(x)
    sx = system.rates_at(x)
    ystar = x + bx * (th * h) + system.diffuse(sx * eta1) * math.sqrt(th * h)

    by = system.drift_at(ystar)
    sy = system.rates_at(ystar)
    bracket = a1 * sy * sy - a2 * sx * sx
    degenerate = bracket < 0
    coef = np.sqrt(np.maximum(bracket, 0.0))
    rest = 1.0 - th
    y = ystar + (a1 * by - a2 * bx) * (rest * h) + system.diffuse(coef * eta2) * math.sqrt(rest * h)
    return StepResult(_finish(x, y), degenerate)


def midpoint_drift_step(system: SdeSystem, x, h: float, normals) -> np.ndarray:
    x, eta = _prepare(system, x, h, normals)
    ystar = x + system.drift_at(x) * (0.5 * h)
    y = x + system.drift_at(ystar) * h + system.diffuse(system.rates_at(x) * eta) * math.sqrt(h)
    return _finish(x, y)


def richardson_pair_step(
    system: SdeSystem, zh, zh2, h: float, normals_half1, normals_half2
) -> tuple[np.ndarray, np.ndarray]:
    """Advance a coupled (step h, step h/2) Euler pair by one full step.

    The coarse path uses ``(eta1 + eta2) / sqrt(2)``, so both paths are driven
    by the same Brownian increment over the step.
    """
    zh, eta1, eta2 = _prepare(system, zh, h, normals_half1, normals_half2)
    zh2 = np.asarray(zh2, dtype=np.float64)
    if zh2.shape != zh.shape:
        raise ModelError(f"paired states differ in shape: {zh.shape} vs {zh2.shape}")
    half = 0.5 * h
    fine = euler_step(system, zh2, half, eta1)
    fine = euler_step(system, fine, half, eta2)
    coarse = euler_step(system, zh, h, (eta1 + eta2) / math.sqrt(2.0))
    return coarse, fine


def draws_per_step(scheme: str, n_channels: int) -> int:
    """Normals consumed per step; the integrators' counter layout depends on it."""
    if scheme in ("wt", "richardson"):
        return 2 * n_channels
    if scheme in ("euler", "midpoint-drift"):
        return n_channels
    raise ValueError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEME_NAMES)}")
