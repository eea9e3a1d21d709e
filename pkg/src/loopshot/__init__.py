"""Circular loop-diffusion scheduling, dialogue assembly and shot mining."""

__version__ = "0.1.0"

from .assembly import DialogueTurn, EditDecisionList, EDLEntry, compile_timeline, extract_segment, render_edl
from .core import LatentRing, NoiseSchedule, SeededRng, add_noise, linear_schedule, ring_get
from .denoisers import SyntheticLoopSpec, make_synthetic_loop, oracle_denoiser, smoothing_denoiser
from .errors import (
    ContractViolation,
    FormatError,
    LoopshotError,
    ParameterError,
    PlanningError,
    SchemaError,
    ShapeError,
    ValidationError,
)
from .formats import read_ltns, write_ltns
from .metrics import (
    AnnotationRecord,
    LayoutRecord,
    PromptSpec,
    aggregate_scores,
    format_prompt,
    score_180,
    score_eye,
    score_ots,
    seam_ratio,
    yt_slice,
)
from .miner import ABAPair, ShotRecord, detect_cuts, extract_pairs, find_aba_loops, order_shots
from .scheduler import (
    LoopTemplate,
    SchedulerParams,
    SegmentPlan,
    denoise_step,
    fusion_weights,
    generate_loop,
    plan_segments,
    reverse_playback_baseline,
    shift_plan,
)
