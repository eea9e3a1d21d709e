"""Dialogue assembly: cut loop templates into shots and concatenate them.

Each turn of the script becomes one shot cut from that speaker's loop
template, starting at a random frame of the loop. Shots are joined with hard
cuts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import SeededRng, as_tensor
from .errors import SchemaError, ValidationError

SPEAKERS = ("A", "B")


@dataclass(frozen=True)
class DialogueTurn:
    speaker: str
    duration_frames: int
    line_id: str = ""

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise SchemaError(f"unknown speaker {self.speaker!r}; expected A or B")
        if not isinstance(self.duration_frames, int) or self.duration_frames < 1:
            raise SchemaError(f"duration_frames must be a positive integer, got {self.duration_frames!r}")


@dataclass(frozen=True)
class EDLEntry:
    shot: str
    loop_start: int
    length: int
    line_id: str


@dataclass(frozen=True)
class EditDecisionList:
    entries: tuple = ()

    @property
    def total_length(self) -> int:
        return sum(e.length for e in self.entries)

    def to_json(self) -> dict:
        return {"entries": [asdict(e) for e in self.entries]}

    @classmethod
    def from_json(cls, doc) -> "EditDecisionList":
        try:
            entries = tuple(
                EDLEntry(str(e["shot"]), int(e["loop_start"]), int(e["length"]), str(e.get("line_id", "")))
                for e in doc["entries"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed EDL: {exc}") from exc
        return cls(entries)


def parse_script(doc) -> list:
    """Turns from a ``{"turns": [...]}`` dialogue script document."""
    if not isinstance(doc, dict) or not isinstance(doc.get("turns"), list):
        raise SchemaError('dialogue script must be an object with a "turns" list')
    turns = []
    for i, item in enumerate(doc["turns"]):
        if not isinstance(item, dict):
            raise SchemaError(f"turn {i} is not an object")
        try:
            turns.append(
                DialogueTurn(item["speaker"], item["duration_frames"], str(item.get("line_id", f"L{i}")))
            )
        except KeyError as exc:
            raise SchemaError(f"turn {i} missing field {exc}") from exc
    return turns


def extract_segment(frames, start: int, length: int) -> np.ndarray:
    """``length`` frames of a loop beginning at ``start``, wrapping as often as needed."""
    frames = np.asarray(getattr(frames, "frames", frames))
    if length < 1:
        raise ValidationError(f"segment length must be >= 1, got {length}")
    idx = (start + np.arange(length)) % frames.shape[0]
    return frames[idx]


def compile_timeline(turns, template_lengths: dict, seed: int) -> EditDecisionList:
    if not turns:
        raise SchemaError("dialogue script has no turns")
    rng = SeededRng(seed)
    entries = []
    for turn in turns:
        if turn.speaker not in template_lengths:
            raise SchemaError(f"no template for speaker {turn.speaker!r}")
        start = rng.integers(0, template_lengths[turn.speaker])
        entries.append(EDLEntry(turn.speaker, start, turn.duration_frames, turn.line_id))
    return EditDecisionList(tuple(entries))


def render_edl(edl: EditDecisionList, templates: dict):
    """Concatenate the EDL's shots; returns ``(frames, shot_track)``."""
    if not edl.entries:
        dim = next(iter(templates.values())).frames.shape[1] if templates else 0
        return np.zeros((0, dim), dtype=np.float32), []
    pieces, track = [], []
    for k, e in enumerate(edl.entries):
        if e.shot not in templates:
            raise ValidationError(f"entry {k} references missing template {e.shot!r}")
        frames = as_tensor(templates[e.shot].frames, ndim=2, name=f"template {e.shot}")
        if not 0 <= e.loop_start < frames.shape[0]:
            raise ValidationError(
                f"entry {k}: loop_start {e.loop_start} outside [0, {frames.shape[0]})"
            )
        pieces.append(extract_segment(frames, e.loop_start, e.length))
        track.extend([e.shot] * e.length)
    dims = {p.shape[1] for p in pieces}
    if len(dims) != 1:
        raise ValidationError(f"templates disagree on latent dim: {sorted(dims)}")
    return np.concatenate(pieces, axis=0), track
