"""Circular sliding-window loop sampler.

The ring of frame latents is cut into overlapping windows. Each window is
denoised on its own, the overlaps are blended with a linear ramp, and the
window grid rotates by ``n_offset`` frames every timestep so no frame stays
on a window boundary.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .core import LatentRing, NoiseSchedule, SeededRng, as_tensor
from .errors import ContractViolation, ParameterError, PlanningError, ShapeError
from .formats import dump_json, load_json, read_ltns, write_ltns

THREADS_ENV = "LOOPSHOT_THREADS"


class Denoiser(Protocol):
    """Noise predictor for one window of latents.

    ``positions`` are the ring indices of the window rows and ``schedule`` is
    the active noise schedule. Position-free denoisers must ignore
    ``positions``. Implementations must be deterministic and thread-safe.
    """

    def predict_eps(
        self,
        latents: np.ndarray,
        t: int,
        reference: np.ndarray,
        *,
        positions: np.ndarray,
        schedule: NoiseSchedule,
    ) -> np.ndarray: ...


@dataclass(frozen=True)
class SchedulerParams:
    window: int
    n_overlap: int = 4
    n_offset: int = 9
    deterministic: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise ParameterError(f"window must be >= 1, got {self.window}")
        if not 0 <= self.n_overlap < self.window:
            raise ParameterError(
                f"n_overlap must be in [0, window), got {self.n_overlap}"
            )
        if self.n_offset < 1:
            raise ParameterError(f"n_offset must be >= 1, got {self.n_offset}")
        if not self.deterministic:
            raise ParameterError("only the deterministic sampler update is implemented")

    @property
    def stride(self) -> int:
        return self.window - self.n_overlap


@dataclass(frozen=True)
class SegmentPlan:
    F: int
    W: int
    n_overlap: int
    starts: tuple

    @property
    def single(self) -> bool:
        return self.W >= self.F

    @property
    def length(self) -> int:
        """Latents per segment."""
        return min(self.W, self.F)

    @property
    def overlap(self) -> int:
        return 0 if self.single else self.n_overlap

    def positions(self, j: int) -> np.ndarray:
        return (self.starts[j] + np.arange(self.length)) % self.F

    def segment_weights(self) -> np.ndarray:
        """Blend weight of each offset inside a segment.

        Head offsets ramp up, tail offsets ramp down, so at every shared
        position the head weight and tail weight add up to one.
        """
        n = self.overlap
        w = np.ones(self.length, dtype=np.float64)
        if n:
            ramp = np.asarray(fusion_weights(n))
            w[:n] = ramp
            w[-n:] = 1.0 - ramp
        return w

    def coverage(self) -> np.ndarray:
        counts = np.zeros(self.F, dtype=np.int64)
        for j in range(len(self.starts)):
            np.add.at(counts, self.positions(j), 1)
        return counts

    def blend_coefficients(self) -> list:
        """Per ring position, the list of weights contributed by each covering segment."""
        table = [[] for _ in range(self.F)]
        w = self.segment_weights()
        for j in range(len(self.starts)):
            for off, p in enumerate(self.positions(j)):
                table[p].append(float(w[off]))
        return table


def _nearest_valid(F: int, stride: int) -> tuple:
    lower = (F // stride) * stride
    return lower, lower + stride


def plan_segments(F: int, params: SchedulerParams) -> SegmentPlan:
    if F < 1:
        raise ParameterError(f"frame count must be >= 1, got {F}")
    W, n = params.window, params.n_overlap
    if W >= F:
        return SegmentPlan(F, W, n, (0,))
    stride = params.stride
    if n > stride:
        raise PlanningError(
            f"n_overlap={n} exceeds stride={stride}; positions would be covered "
            f"by more than two windows"
        )
    if F % stride:
        lo, hi = _nearest_valid(F, stride)
        raise PlanningError(
            f"F={F} is not divisible by stride {stride} (window {W}, overlap {n}); "
            f"nearest valid frame counts: {lo} or {hi}",
            nearest=(lo, hi),
        )
    return SegmentPlan(F, W, n, tuple(range(0, F, stride)))


def shift_plan(plan: SegmentPlan, step_index: int, n_offset: int) -> SegmentPlan:
    if step_index < 0:
        raise ParameterError(f"step_index must be >= 0, got {step_index}")
    if plan.single:
        # a full-ring window has no boundaries to move; starts stay [0]
        return plan
    shift = step_index * n_offset
    return SegmentPlan(
        plan.F, plan.W, plan.n_overlap, tuple((s + shift) % plan.F for s in plan.starts)
    )


def fusion_weights(n_overlap: int) -> list:
    """Weight of the incoming segment along an overlap of ``n_overlap`` latents."""
    return [(i + 1) / (n_overlap + 1) for i in range(n_overlap)]


def default_workers() -> int:
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _update(x_t: np.ndarray, eps: np.ndarray, a_t: float, a_prev: float) -> np.ndarray:
    x_t = x_t.astype(np.float64)
    eps = eps.astype(np.float64)
    x0_hat = (x_t - np.sqrt(1.0 - a_t) * eps) / np.sqrt(a_t)
    return np.sqrt(a_prev) * x0_hat + np.sqrt(1.0 - a_prev) * eps


def denoise_step(
    ring: LatentRing,
    t: int,
    sched: NoiseSchedule,
    denoiser: Denoiser,
    plan: SegmentPlan,
    reference,
    workers: int | None = None,
) -> LatentRing:
    """Advance every window from step ``t`` to ``t - 1`` and fuse the overlaps."""
    t = sched.check_t(t)
    if plan.F != ring.frame_count:
        raise ShapeError(f"plan is for F={plan.F}, ring has {ring.frame_count} frames")
    reference = np.asarray(reference, dtype=np.float32)
    if reference.shape != (ring.latent_dim,):
        raise ShapeError(f"reference must have shape ({ring.latent_dim},)")
    a_t, a_prev = float(sched.alpha_bar[t]), sched.alpha_bar_prev(t)
    positions = [plan.positions(j) for j in range(len(plan.starts))]

    def run(pos):
        window = ring.data[pos]
        eps = np.asarray(
            denoiser.predict_eps(window, t, reference, positions=pos, schedule=sched)
        )
        if eps.shape != window.shape:
            raise ContractViolation(
                f"denoiser returned shape {eps.shape} for window {window.shape}"
            )
        if not np.all(np.isfinite(eps)):
            raise ContractViolation("denoiser returned non-finite values")
        return _update(window, eps, a_t, a_prev)

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(positions) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(positions))) as pool:
            outputs = list(pool.map(run, positions))
    else:
        outputs = [run(pos) for pos in positions]

    weights = plan.segment_weights()[:, None]
    fused = np.zeros(ring.data.shape, dtype=np.float64)
    for pos, out in zip(positions, outputs):
        fused[pos] += weights * out
    return LatentRing(fused.astype(np.float32))


def sample_loop(
    x_T,
    sched: NoiseSchedule,
    denoiser: Denoiser,
    params: SchedulerParams,
    reference,
    start_offset: int = 0,
    workers: int | None = None,
) -> np.ndarray:
    """Run the full reverse process from a given initial ring.

    ``start_offset`` rotates the whole window grid; it exists so callers can
    check that the sampler has no preferred frame.
    """
    ring = LatentRing(x_T)
    plan = plan_segments(ring.frame_count, params)
    plan = _rotate_plan(plan, start_offset)
    for step_index, t in enumerate(range(sched.steps - 1, -1, -1)):
        step_plan = shift_plan(plan, step_index, params.n_offset)
        ring = denoise_step(ring, t, sched, denoiser, step_plan, reference, workers)
    return ring.data


def _rotate_plan(plan: SegmentPlan, k: int) -> SegmentPlan:
    if plan.single:
        return plan
    return SegmentPlan(plan.F, plan.W, plan.n_overlap, tuple((s + k) % plan.F for s in plan.starts))


@dataclass(frozen=True, eq=False)
class LoopTemplate:
    frames: np.ndarray
    seed: int
    params: SchedulerParams
    schedule_id: str
    steps: int

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "W": self.params.window,
            "n_overlap": self.params.n_overlap,
            "n_offset": self.params.n_offset,
            "T": self.steps,
            "schedule_id": self.schedule_id,
        }


def generate_loop(
    F: int,
    D: int,
    sched: NoiseSchedule,
    denoiser: Denoiser,
    params: SchedulerParams,
    reference,
    seed: int,
    workers: int | None = None,
) -> LoopTemplate:
    plan_segments(F, params)  # fail before drawing noise
    x_T = SeededRng(seed).normal((F, D))
    frames = sample_loop(x_T, sched, denoiser, params, reference, workers=workers)
    return LoopTemplate(frames, int(seed), params, sched.name, sched.steps)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def save_template(path, template: LoopTemplate) -> Path:
    write_ltns(path, template.frames)
    side = sidecar_path(path)
    dump_json(side, template.sidecar())
    return side


def load_template(path) -> LoopTemplate:
    frames = as_tensor(read_ltns(path), ndim=2, name="template")
    side = sidecar_path(path)
    if side.exists():
        meta = load_json(side)
        params = SchedulerParams(meta["W"], meta["n_overlap"], meta["n_offset"])
        return LoopTemplate(frames, meta["seed"], params, meta["schedule_id"], meta["T"])
    # bare tensor: treat as an already-finished loop of unknown provenance
    return LoopTemplate(frames, 0, SchedulerParams(frames.shape[0], 0), "unknown", 0)


def reverse_playback_baseline(clip) -> np.ndarray:
    """Ping-pong loop: play forward, then backward without repeating endpoints."""
    clip = as_tensor(clip, ndim=2, name="clip")
    if clip.shape[0] < 2:
        raise ParameterError("reverse playback needs at least 2 frames")
    return np.concatenate([clip, clip[-2:0:-1]], axis=0)
