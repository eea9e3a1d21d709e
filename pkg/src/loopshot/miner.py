"""Mining shot/reverse-shot pairs from identity-labelled footage.

Pipeline: cut detection -> A-B-A loop search over the shot list -> take the
B-A transition of each loop -> order the pair so the foreground shoulder is
on the right in shot 1 and on the left in shot 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_tensor
from .errors import ParameterError, SchemaError, ValidationError

SHOULDER_SIDES = ("left", "right", "none")


@dataclass(frozen=True)
class ShotRecord:
    shot_id: str
    start_frame: int
    end_frame: int
    identity: str
    shoulder_side: str | None = None

    def __post_init__(self):
        if self.start_frame >= self.end_frame:
            raise ValidationError(f"shot {self.shot_id}: start_frame must precede end_frame")
        if not self.identity:
            raise ValidationError(f"shot {self.shot_id}: identity is empty")
        if self.shoulder_side is not None and self.shoulder_side not in SHOULDER_SIDES:
            raise ValidationError(f"shot {self.shot_id}: bad shoulder_side {self.shoulder_side!r}")

    @classmethod
    def from_json(cls, doc) -> "ShotRecord":
        try:
            return cls(
                str(doc["shot_id"]),
                int(doc["start_frame"]),
                int(doc["end_frame"]),
                str(doc["identity"]),
                doc.get("shoulder_side"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed shot record {doc!r}: {exc}") from exc


@dataclass(frozen=True)
class ABAPair:
    first: ShotRecord  # the B shot
    second: ShotRecord  # the returning A shot
    loop_index: int

    def __post_init__(self):
        if self.first.identity == self.second.identity:
            raise ValidationError("pair shots must show different identities")


@dataclass(frozen=True)
class ShotOrder:
    """Outcome of shot ordering: either an ordered pair or a rejection reason."""

    shot1: ShotRecord | None
    shot2: ShotRecord | None
    reason: str | None = None

    @property
    def accepted(self) -> bool:
        return self.reason is None


def detect_cuts(frames, threshold: float) -> list:
    """Indices ``i`` where frame ``i`` differs from frame ``i-1`` by more than ``threshold`` (RMS)."""
    frames = as_tensor(frames, ndim=2, name="frames")
    if frames.shape[0] < 2:
        raise ParameterError("need at least 2 frames to detect cuts")
    if threshold <= 0:
        raise ParameterError(f"threshold must be > 0, got {threshold}")
    x = frames.astype(np.float64)
    score = np.linalg.norm(np.diff(x, axis=0), axis=1) / np.sqrt(x.shape[1])
    return [int(i) + 1 for i in np.flatnonzero(score > threshold)]


def shots_from_cuts(cuts, n_frames: int) -> list:
    """``(start, end)`` frame spans between consecutive cuts."""
    bounds = [0, *cuts, n_frames]
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if a < b]


def find_aba_loops(shots) -> list:
    ident = [s.identity if isinstance(s, ShotRecord) else s for s in shots]
    return [
        (i, i + 1, i + 2)
        for i in range(len(ident) - 2)
        if ident[i] == ident[i + 2] and ident[i] != ident[i + 1]
    ]


def extract_pairs(shots, loops) -> list:
    return [ABAPair(shots[b], shots[c], k) for k, (_, b, c) in enumerate(loops)]


def order_shots(pair: ABAPair) -> ShotOrder:
    a, b = pair.first, pair.second
    for s in (a, b):
        if s.shoulder_side is None:
            raise ValidationError(f"shot {s.shot_id} has no shoulder_side annotation")
    if "none" in (a.shoulder_side, b.shoulder_side):
        return ShotOrder(None, None, "no visible shoulder")
    if a.shoulder_side == b.shoulder_side:
        return ShotOrder(None, None, "same-side shoulders")
    if a.shoulder_side == "right":
        return ShotOrder(a, b)
    return ShotOrder(b, a)


def mine_pairs(shots) -> list:
    """Run loop search, pair extraction and ordering; one manifest row per pair.

    Pairs whose shots lack shoulder annotations are kept in B-A order with
    status ``unannotated`` so the manual filtering pass can pick them up.
    """
    rows = []
    for pair in extract_pairs(shots, find_aba_loops(shots)):
        row = {"loop_index": pair.loop_index}
        try:
            order = order_shots(pair)
        except ValidationError:
            row.update(shot1_id=pair.first.shot_id, shot2_id=pair.second.shot_id, status="unannotated")
        else:
            if order.accepted:
                row.update(shot1_id=order.shot1.shot_id, shot2_id=order.shot2.shot_id, status="accepted")
            else:
                row.update(
                    shot1_id=pair.first.shot_id,
                    shot2_id=pair.second.shot_id,
                    status="rejected",
                    reason=order.reason,
                )
        rows.append(row)
    return rows
