"""Counter-based standard normal draws.

Every draw is a pure function of ``(master_seed, path_index, counter)``, so a
path's noise does not depend on how paths are batched or scheduled across
workers.  The generator is SplitMix64-style: two 64-bit keys are derived per
path, the counter is pushed through a Weyl increment and two rounds of the
SplitMix64 finalizer, and the top 53 bits give a uniform in (0, 1).  Normals
come from the inverse normal CDF (``scipy.special.ndtri``), one uniform per
draw.

Within a path the counter layout used by the integrators is
``step * draws_per_step + stage * M + channel`` (stage-major, channel-minor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_KEY2_SALT = 0xD1B54A32D192ED03

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30, _U27, _U31, _U11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_M53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix_inplace(z: np.ndarray) -> np.ndarray:
    z ^= z >> _U30
    z *= _U_M1
    z ^= z >> _U27
    z *= _U_M2
    z ^= z >> _U31
    return z


def derive_seed(seed: int, *tags: int) -> int:
    """Child seed from a master seed and integer tags; order of tags matters."""
    z = mix64(seed ^ 0x6A09E667F3BCC908)
    for tag in tags:
        z = mix64(z ^ mix64((int(tag) + 1) * GOLDEN))
    return z


def path_keys(master_seed: int, paths) -> tuple[np.ndarray, np.ndarray]:
    """Per-path key pair for an array of path indices."""
    base = mix64(int(master_seed))
    p = np.asarray(paths, dtype=np.uint64) + np.uint64(1)
    with np.errstate(over="ignore"):
        k1 = _mix_inplace(p * _U_GOLDEN ^ np.uint64(base))
        k2 = _mix_inplace(k1 ^ np.uint64(mix64(base ^ _KEY2_SALT)))
    return k1, k2


def normals_from_keys(k1: np.ndarray, k2: np.ndarray, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` for each path, shape ``(len(k1), count)``."""
    counters = np.arange(start + 1, start + count + 1, dtype=np.uint64) * _U_GOLDEN
    z = k1[:, None] + counters[None, :]
    _mix_inplace(z)
    z ^= k2[:, None]
    _mix_inplace(z)
    u = (z >> _U11).astype(np.float64)
    u += 0.5
    u *= _TWO_M53
    return ndtri(u)


def normals(master_seed: int, paths, start: int, count: int) -> np.ndarray:
    k1, k2 = path_keys(master_seed, paths)
    return normals_from_keys(k1, k2, start, count)


@dataclass
class NoiseStream:
    """Sequential view of one path's draws."""

    master_seed: int
    path_index: int
    counter: int = 0

    def next_normals(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be nonnegative")
        out = normals(self.master_seed, [self.path_index], self.counter, count)[0]
        self.counter += count
        return out


def stream_for_path(master_seed: int, path_index: int) -> NoiseStream:
    return NoiseStream(int(master_seed) & MASK64, int(path_index))


def next_normals(stream: NoiseStream, count: int) -> np.ndarray:
    return stream.next_normals(count)
