"""Analytic denoisers and periodic test signals.

None of these are learned models. The oracle knows the clean target and so
predicts the exact noise; the smoothing denoiser treats high-frequency
temporal content as noise and never looks at ring positions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LatentRing, NoiseSchedule, SeededRng
from .errors import ParameterError


@dataclass(frozen=True)
class SyntheticLoopSpec:
    F: int
    D: int
    harmonics: int = 1
    amplitude: float = 1.0
    seed: int = 0


def make_synthetic_loop(spec: SyntheticLoopSpec) -> LatentRing:
    """Random mixture of the first ``harmonics`` Fourier modes per channel.

    Mode ``k`` gets coefficients drawn from N(0, 1/k^2); each channel is then
    scaled so its peak magnitude equals ``amplitude``.
    """
    if spec.F < 1 or spec.D < 1 or spec.harmonics < 1:
        raise ParameterError("F, D and harmonics must all be >= 1")
    rng = SeededRng(spec.seed)
    coef = rng.normal((spec.D, spec.harmonics, 2)).astype(np.float64)
    k = np.arange(1, spec.harmonics + 1)
    coef /= k[None, :, None]
    phase = 2 * np.pi * np.outer(np.arange(spec.F), k) / spec.F  # [F, K]
    x = np.cos(phase) @ coef[:, :, 0].T + np.sin(phase) @ coef[:, :, 1].T  # [F, D]
    peak = np.max(np.abs(x), axis=0)
    peak[peak == 0] = 1.0
    return LatentRing((spec.amplitude * x / peak).astype(np.float32))


class OracleDenoiser:
    """Predicts the exact noise that separates ``x_t`` from a known target."""

    def __init__(self, target: LatentRing):
        self.target = target

    def predict_eps(self, latents, t, reference, *, positions, schedule: NoiseSchedule):
        t = schedule.check_t(t)
        a = schedule.alpha_bar[t]
        x0 = self.target.data[np.asarray(positions) % self.target.frame_count]
        eps = (latents.astype(np.float64) - np.sqrt(a) * x0) / np.sqrt(1.0 - a)
        return eps.astype(np.float32)


def oracle_denoiser(target: LatentRing) -> OracleDenoiser:
    return OracleDenoiser(target)


def reflect_indices(n: int, radius: int) -> np.ndarray:
    """Index table [n, 2*radius+1] mirroring about the first and last sample."""
    offsets = np.arange(-radius, radius + 1)
    idx = np.arange(n)[:, None] + offsets[None, :]
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * (n - 1)
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - idx, idx)


class SmoothingDenoiser:
    """Residual against a reflective temporal moving average of the window."""

    def __init__(self, kernel_radius: int):
        if kernel_radius < 0:
            raise ParameterError(f"kernel_radius must be >= 0, got {kernel_radius}")
        self.kernel_radius = kernel_radius

    def predict_eps(self, latents, t, reference, *, positions, schedule: NoiseSchedule):
        t = schedule.check_t(t)
        x = latents.astype(np.float64)
        idx = reflect_indices(x.shape[0], self.kernel_radius)
        # x - mean(neighbours), written as a mean of differences so constant
        # windows give exactly zero
        residual = -(x[idx] - x[:, None, :]).mean(axis=1)
        scale = np.sqrt(1.0 - schedule.alpha_bar[t])
        return (residual * scale).astype(np.float32)


def smoothing_denoiser(kernel_radius: int) -> SmoothingDenoiser:
    return SmoothingDenoiser(kernel_radius)
