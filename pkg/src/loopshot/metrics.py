"""Dual-shot prompt formatting, annotation scoring and loop-seam diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from .core import as_tensor
from .errors import ParameterError, SchemaError, ValidationError

PROMPT_PREFIX = "A two-panel image split in the center; "
PANEL_TAGS = ("[LEFT]", "[RIGHT]")
SIDES = ("left", "right")


@dataclass(frozen=True)
class PromptSpec:
    left_description: str
    right_description: str


def format_prompt(spec: PromptSpec) -> str:
    for name in ("left_description", "right_description"):
        text = getattr(spec, name)
        if not isinstance(text, str) or not text.strip():
            raise ValidationError(f"{name} must be a nonempty string")
        if any(tag in text for tag in PANEL_TAGS):
            raise ValidationError(f"{name} must not contain panel tags")
    return f"{PROMPT_PREFIX}[LEFT] {spec.left_description} [RIGHT] {spec.right_description}"


@dataclass(frozen=True)
class AnnotationRecord:
    sample_id: str
    ots_left: bool
    ots_right: bool
    rule180: bool
    eye_left: bool
    eye_right: bool

    def validate(self) -> "AnnotationRecord":
        # eye contact is only judged on over-the-shoulder shots
        if self.eye_left and not self.ots_left:
            raise ValidationError(f"{self.sample_id}: eye_left set without ots_left")
        if self.eye_right and not self.ots_right:
            raise ValidationError(f"{self.sample_id}: eye_right set without ots_right")
        return self

    @classmethod
    def from_json(cls, doc) -> "AnnotationRecord":
        if not isinstance(doc, dict):
            raise SchemaError(f"annotation must be an object, got {doc!r}")
        kw = {}
        for f in fields(cls):
            if f.name not in doc:
                raise SchemaError(f"annotation missing field {f.name!r}")
            value = doc[f.name]
            if f.name != "sample_id" and not isinstance(value, bool):
                raise SchemaError(f"annotation field {f.name!r} must be boolean")
            kw[f.name] = value
        kw["sample_id"] = str(kw["sample_id"])
        return cls(**kw).validate()


@dataclass(frozen=True)
class LayoutRecord:
    sample_id: str
    shot1_main_side: str
    shot2_main_side: str

    def __post_init__(self):
        for side in (self.shot1_main_side, self.shot2_main_side):
            if side not in SIDES:
                raise ValidationError(f"{self.sample_id}: main side must be left/right, got {side!r}")


def rule180_from_layout(layout: LayoutRecord) -> bool:
    """True when the two main subjects sit on opposite sides of the frame.

    Shot 1 shows A with B's shoulder, shot 2 shows B with A's shoulder, so
    each character keeps its screen side only if the main sides differ.
    """
    return layout.shot1_main_side != layout.shot2_main_side


def _pair_score(a: bool, b: bool) -> float:
    return 0.5 * (bool(a) + bool(b))


def score_ots(rec: AnnotationRecord) -> float:
    return _pair_score(rec.ots_left, rec.ots_right)


def score_180(rec: AnnotationRecord) -> float:
    return 1.0 if rec.rule180 else 0.0


def score_eye(rec: AnnotationRecord) -> float:
    rec.validate()
    return _pair_score(rec.eye_left, rec.eye_right)


def aggregate_scores(records) -> dict:
    records = list(records)
    if not records:
        raise ParameterError("cannot aggregate an empty annotation list")
    # fsum keeps the mean independent of record order
    n = len(records)
    return {
        "ots": math.fsum(score_ots(r) for r in records) / n,
        "rule180": math.fsum(score_180(r) for r in records) / n,
        "eye": math.fsum(score_eye(r) for r in records) / n,
    }


def load_annotations(doc) -> list:
    if not isinstance(doc, list):
        raise SchemaError("annotations file must hold a JSON array")
    return [AnnotationRecord.from_json(d) for d in doc]


def format_score_table(rows, delimiter=None) -> str:
    """Render ``(method, scores)`` rows as a fixed-order table.

    With ``delimiter`` set, columns are joined by it instead of padded.
    """
    header = ("method", "OTS", "180°", "Eye")
    body = [
        (name, f"{s['ots']:.2f}", f"{s['rule180']:.2f}", f"{s['eye']:.2f}") for name, s in rows
    ]
    if delimiter is not None:
        return "\n".join(delimiter.join(r) for r in [header, *body]) + "\n"
    width = max(len(r[0]) for r in [header, *body])
    lines = [f"{r[0]:<{width}}  {r[1]:>4}  {r[2]:>4}  {r[3]:>4}" for r in [header, *body]]
    return "\n".join(lines) + "\n"


def yt_slice(video, x: int) -> np.ndarray:
    """Column ``x`` of every frame stacked over time: ``out[y, t] = video[t, y, x]``."""
    video = as_tensor(video, ndim=3, name="video")
    if not 0 <= x < video.shape[2]:
        raise ParameterError(f"column {x} outside [0, {video.shape[2]})")
    return np.ascontiguousarray(video[:, :, x].T)


def to_gray8(image) -> np.ndarray:
    """Min-max normalise to 0..255; a constant image maps to all zeros."""
    img = np.asarray(image, dtype=np.float64)
    lo, hi = img.min(), img.max()
    if hi == lo:
        return np.zeros(img.shape, dtype=np.uint8)
    return np.rint((img - lo) / (hi - lo) * 255.0).astype(np.uint8)


def yt_slice_image(video, x: int) -> np.ndarray:
    return to_gray8(yt_slice(video, x))


class SeamRatio(NamedTuple):
    ratio: float
    seam: float
    median: float
    status: str  # "ok" or "zero-denominator"


def seam_ratio(loop) -> SeamRatio:
    """Wrap-around frame jump relative to the median interior frame step."""
    loop = as_tensor(loop, name="loop")
    if loop.shape[0] < 3:
        raise ParameterError("seam ratio needs at least 3 frames")
    x = loop.reshape(loop.shape[0], -1).astype(np.float64)
    seam = float(np.linalg.norm(x[0] - x[-1]))
    median = float(np.median(np.linalg.norm(np.diff(x, axis=0), axis=1)))
    if median == 0.0:
        return SeamRatio(float("inf"), seam, median, "zero-denominator")
    return SeamRatio(seam / median, seam, median, "ok")


def frame_velocity(loop) -> np.ndarray:
    """Circular first difference: row ``i`` is ``frame[i+1] - frame[i]``, wrapping at the end."""
    loop = as_tensor(loop, name="loop")
    x = loop.astype(np.float64)
    return (np.roll(x, -1, axis=0) - x).astype(np.float32)


def velocity_seam_ratio(loop) -> SeamRatio:
    """Seam ratio of the velocity track; exposes direction reversals at the wrap."""
    return seam_ratio(frame_velocity(loop))


def step_norms(loop) -> np.ndarray:
    """Norm of every circular frame step, including the wrap ``F-1 -> 0``."""
    x = np.asarray(loop, dtype=np.float64).reshape(len(loop), -1)
    return np.linalg.norm(np.roll(x, -1, axis=0) - x, axis=1)
