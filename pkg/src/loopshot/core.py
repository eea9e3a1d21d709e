"""Numerical carriers: latent rings, noise schedules and the seeded generator.

Tensors are plain ``numpy`` float32 arrays. Reductions accumulate in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError, ValidationError

U64_MAX = 2**64 - 1


def as_tensor(data, ndim=None, name="tensor") -> np.ndarray:
    """Return ``data`` as a contiguous float32 array, checking rank and finiteness."""
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeError(f"{name} must have {ndim} dims, got shape {arr.shape}")
    if arr.ndim == 0 or any(d < 1 for d in arr.shape):
        raise ShapeError(f"{name} dims must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


class SeededRng:
    """Counter-based generator: Philox-4x64 keyed directly by a 64-bit seed.

    The counter starts at zero, so a given seed yields the same stream on
    every platform for a fixed numpy release.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= U64_MAX:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.Philox(key=seed))

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape).astype(np.float32)

    def integers(self, low: int, high: int) -> int:
        return int(self._gen.integers(low, high))

    def uniform(self, shape=None):
        return self._gen.random(shape)


@dataclass(frozen=True, eq=False)
class LatentRing:
    """``F`` frame latents of width ``D`` addressed modulo ``F``."""

    data: np.ndarray

    def __post_init__(self):
        arr = as_tensor(self.data, ndim=2, name="ring")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def frame_count(self) -> int:
        return self.data.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.data.shape[1]

    def __getitem__(self, i: int) -> np.ndarray:
        return ring_get(self, i)

    def indices(self, start: int, length: int) -> np.ndarray:
        return (start + np.arange(length)) % self.frame_count

    def rotate(self, k: int) -> "LatentRing":
        """Ring whose frame ``i`` is this ring's frame ``i - k``."""
        return LatentRing(np.roll(self.data, k, axis=0))


def ring_get(ring: LatentRing, i: int) -> np.ndarray:
    return ring.data[int(i) % ring.frame_count]


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    beta: np.ndarray
    alpha_bar: np.ndarray = field(init=False)
    name: str = "custom"

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1 or beta.size < 1:
            raise ParameterError("beta must be a nonempty 1-D sequence")
        if np.any(beta <= 0) or np.any(beta >= 1):
            raise ParameterError("beta values must lie in (0, 1)")
        if np.any(np.diff(beta) < 0):
            raise ParameterError("beta must be nondecreasing")
        alpha_bar = np.cumprod(1.0 - beta)
        if alpha_bar[-1] <= 0:
            raise ParameterError("alpha_bar underflowed to zero")
        beta.flags.writeable = False
        alpha_bar.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def steps(self) -> int:
        return self.beta.size

    def alpha_bar_prev(self, t: int) -> float:
        # alpha_bar before the first noising step is 1 (clean signal)
        return 1.0 if t == 0 else float(self.alpha_bar[t - 1])

    def check_t(self, t: int) -> int:
        t = int(t)
        if not 0 <= t < self.steps:
            raise ParameterError(f"timestep {t} outside [0, {self.steps})")
        return t


def linear_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    if T < 1:
        raise ParameterError(f"T must be >= 1, got {T}")
    if not 0 < beta_start <= beta_end < 1:
        raise ParameterError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    return NoiseSchedule(beta, name=f"linear:{T}:{beta_start:g}:{beta_end:g}")


def add_noise(x0, t: int, sched: NoiseSchedule, eps) -> np.ndarray:
    """Sample the forward process at step ``t`` with the given noise."""
    x0 = np.asarray(x0, dtype=np.float32)
    eps = np.asarray(eps, dtype=np.float32)
    if x0.shape != eps.shape:
        raise ShapeError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    t = sched.check_t(t)
    a = sched.alpha_bar[t]
    out = np.sqrt(a) * x0.astype(np.float64) + np.sqrt(1.0 - a) * eps.astype(np.float64)
    return out.astype(np.float32)
