"""``loopshot`` command line: one subcommand per pipeline stage.

Exit status: 0 success, 2 validation or planning failure, 3 I/O failure.
Every file-producing command also writes ``<output>.manifest.json``; pass
that to ``loopshot replay`` to regenerate the outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import EditDecisionList, compile_timeline, parse_script, render_edl
from .core import U64_MAX, LatentRing, SeededRng, as_tensor, linear_schedule
from .denoisers import SyntheticLoopSpec, make_synthetic_loop, oracle_denoiser, smoothing_denoiser
from .errors import LoopshotError, PlanningError, SchemaError, ShapeError
from .formats import dump_json, load_json, read_ltns, write_ltns, write_pgm
from .metrics import (
    aggregate_scores,
    format_score_table,
    load_annotations,
    seam_ratio,
    velocity_seam_ratio,
    yt_slice_image,
)
from .miner import ShotRecord, detect_cuts, mine_pairs
from .scheduler import (
    SchedulerParams,
    generate_loop,
    load_template,
    reverse_playback_baseline,
    save_template,
)

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3


def manifest_path(output) -> Path:
    return Path(f"{output}.manifest.json")


def write_manifest(args, argv, inputs, outputs, seed=0) -> Path:
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "command") and isinstance(v, (str, int, float, bool, list, type(None)))
    }
    manifest = {
        "command": args.command,
        "params": params,
        "argv": list(argv),
        "seed": int(seed),
        "input_paths": [str(p) for p in inputs],
        "output_paths": [str(p) for p in outputs],
        "tool_version": __version__,
    }
    path = manifest_path(outputs[0])
    dump_json(path, manifest)
    return path


def _fmt(x: float) -> str:
    return "inf" if np.isinf(x) else f"{x:.4f}"


def cmd_gen_loop(args, argv):
    F, D = args.frames, args.dim
    params = SchedulerParams(args.window, args.overlap, args.offset)
    sched = linear_schedule(args.steps, args.beta_start, args.beta_end)
    inputs = []
    if args.target:
        target = as_tensor(read_ltns(args.target), ndim=2, name="target")
        if target.shape != (F, D):
            raise ShapeError(f"target shape {target.shape} does not match --frames/--dim ({F}, {D})")
        inputs.append(args.target)
    else:
        target = make_synthetic_loop(SyntheticLoopSpec(F, D, args.harmonics, 1.0, args.seed)).data
    # the reference is a random frame of the target, never a fixed first frame
    ref_index = args.reference_frame
    if ref_index is None:
        ref_index = SeededRng((args.seed + 1) % (U64_MAX + 1)).integers(0, F)
    reference = target[ref_index % F]
    if args.denoiser == "oracle":
        denoiser = oracle_denoiser(LatentRing(target))
    else:
        denoiser = smoothing_denoiser(args.kernel_radius)
    template = generate_loop(F, D, sched, denoiser, params, reference, args.seed, workers=args.workers)
    out = Path(args.out)
    side = save_template(out, template)
    outputs = [out, side]
    if args.figure:
        from .plotting import plot_step_profile

        plot_step_profile({"generated": template.frames, "target": target}, args.figure)
        outputs.append(args.figure)
    write_manifest(args, argv, inputs, outputs, args.seed)
    rms = float(np.sqrt(np.mean((template.frames.astype(np.float64) - target) ** 2)))
    print("frames\tdim\tseam_ratio\trms_to_target")
    print(f"{F}\t{D}\t{_fmt(seam_ratio(template.frames).ratio)}\t{rms:.3e}")


def cmd_assemble(args, argv):
    turns = parse_script(load_json(args.script))
    templates = {"A": load_template(args.template_a), "B": load_template(args.template_b)}
    lengths = {k: t.frame_count for k, t in templates.items()}
    edl = compile_timeline(turns, lengths, args.seed)
    frames, track = render_edl(edl, templates)
    out = Path(args.out)
    edl_path = out.with_suffix(".edl.json")
    track_path = out.with_suffix(".track.json")
    write_ltns(out, frames)
    dump_json(edl_path, edl.to_json())
    dump_json(track_path, {"shot_track": track})
    write_manifest(args, argv, [args.script, args.template_a, args.template_b], [out, edl_path, track_path], args.seed)
    print("shot\tloop_start\tlength\tline_id")
    for e in edl.entries:
        print(f"{e.shot}\t{e.loop_start}\t{e.length}\t{e.line_id}")
    print(f"# total frames: {frames.shape[0]}")


def cmd_render(args, argv):
    edl = EditDecisionList.from_json(load_json(args.edl))
    templates = {"A": load_template(args.template_a), "B": load_template(args.template_b)}
    frames, track = render_edl(edl, templates)
    out = Path(args.out)
    track_path = out.with_suffix(".track.json")
    write_ltns(out, frames)
    dump_json(track_path, {"shot_track": track})
    write_manifest(args, argv, [args.edl, args.template_a, args.template_b], [out, track_path])
    print(f"# total frames: {frames.shape[0]}")


def cmd_mine(args, argv):
    doc = load_json(args.shots)
    if not isinstance(doc, list):
        raise SchemaError("shots file must hold a JSON array of shot records")
    shots = [ShotRecord.from_json(d) for d in doc]
    result = {"pairs": mine_pairs(shots)}
    inputs = [args.shots]
    if args.frames:
        result["cuts"] = detect_cuts(read_ltns(args.frames), args.threshold)
        inputs.append(args.frames)
    dump_json(args.out, result)
    write_manifest(args, argv, inputs, [args.out])
    print("loop_index\tshot1_id\tshot2_id\tstatus")
    for row in result["pairs"]:
        print(f"{row['loop_index']}\t{row['shot1_id']}\t{row['shot2_id']}\t{row['status']}")


def cmd_score(args, argv):
    names = list(args.method or [])
    rows = []
    for i, path in enumerate(args.annotations):
        name = names[i] if i < len(names) else Path(path).stem
        rows.append((name, aggregate_scores(load_annotations(load_json(path)))))
    delimiter = "\t" if args.tsv else None
    table = format_score_table(rows, delimiter)
    sys.stdout.write(table)
    outputs = []
    if args.out:
        Path(args.out).write_text(format_score_table(rows, "\t"))
        outputs.append(args.out)
    if args.figure:
        from .plotting import plot_scores

        plot_scores(rows, args.figure)
        outputs.append(args.figure)
    if outputs:
        write_manifest(args, argv, args.annotations, outputs)


def cmd_slice(args, argv):
    video = read_ltns(args.video)
    image = yt_slice_image(video, args.column)
    write_pgm(args.out, image)
    outputs = [args.out]
    if args.figure:
        from .plotting import plot_yt_slice

        plot_yt_slice(image, args.figure, title=f"y-t slice, column {args.column}")
        outputs.append(args.figure)
    write_manifest(args, argv, [args.video], outputs)
    print(f"rows\tframes\n{image.shape[0]}\t{image.shape[1]}")


def cmd_baseline(args, argv):
    clip = read_ltns(args.clip)
    loop = reverse_playback_baseline(clip)
    write_ltns(args.out, loop)
    write_manifest(args, argv, [args.clip], [args.out])
    s, v = seam_ratio(loop), velocity_seam_ratio(loop)
    print("frames\tseam_ratio\tvelocity_seam_ratio")
    print(f"{loop.shape[0]}\t{_fmt(s.ratio)}\t{_fmt(v.ratio)}")


def cmd_seam(args, argv):
    loops = {}
    print("loop\tframes\tseam_ratio\tvelocity_seam_ratio\tstatus")
    for path in args.loops:
        frames = read_ltns(path)
        loops[Path(path).stem] = frames
        s, v = seam_ratio(frames), velocity_seam_ratio(frames)
        print(f"{Path(path).stem}\t{frames.shape[0]}\t{_fmt(s.ratio)}\t{_fmt(v.ratio)}\t{s.status}")
    if args.figure:
        from .plotting import plot_step_profile

        plot_step_profile(loops, args.figure)
        write_manifest(args, argv, args.loops, [args.figure])


def cmd_replay(args, argv):
    manifest = load_json(args.manifest)
    if not isinstance(manifest, dict) or not isinstance(manifest.get("argv"), list):
        raise SchemaError("manifest has no argv list")
    if manifest["argv"] and manifest["argv"][0] == "replay":
        raise SchemaError("refusing to replay a replay manifest")
    return main(manifest["argv"])


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loopshot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-loop", help="generate a seamless loop template")
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--overlap", type=int, default=4)
    p.add_argument("--offset", type=int, default=9)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--denoiser", choices=("oracle", "smooth"), required=True)
    p.add_argument("--target", help="LTNS [F, D] clean loop; synthetic if omitted")
    p.add_argument("--harmonics", type=int, default=2)
    p.add_argument("--kernel-radius", type=int, default=1)
    p.add_argument("--beta-start", type=float, default=1e-4)
    p.add_argument("--beta-end", type=float, default=0.02)
    p.add_argument("--reference-frame", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--figure", help="write a frame-step profile PNG")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_loop)

    p = sub.add_parser("assemble", help="compile a dialogue script into an EDL and render it")
    p.add_argument("--script", required=True)
    p.add_argument("--template-a", required=True)
    p.add_argument("--template-b", required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("render", help="render an existing EDL")
    p.add_argument("--edl", required=True)
    p.add_argument("--template-a", required=True)
    p.add_argument("--template-b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("mine", help="find A-B-A loops and emit ordered B-A pairs")
    p.add_argument("--shots", required=True)
    p.add_argument("--frames", help="LTNS [N, D] video for cut detection")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("score", help="aggregate layout annotations")
    p.add_argument("annotations", nargs="+")
    p.add_argument("--method", action="append", help="row label, once per annotations file")
    p.add_argument("--tsv", action="store_true", help="tab-delimited output")
    p.add_argument("--out", help="also write the table as TSV")
    p.add_argument("--figure", help="write a bar chart PNG")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("slice", help="y-t slice of a grayscale video as PGM")
    p.add_argument("--video", required=True)
    p.add_argument("--column", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--figure")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("baseline", help="reverse-playback loop of a clip")
    p.add_argument("--clip", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("seam", help="seam diagnostics for one or more loops")
    p.add_argument("loops", nargs="+")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_seam)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        rc = args.func(args, argv)
    except PlanningError as exc:
        print(f"loopshot: planning error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LoopshotError as exc:
        print(f"loopshot: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"loopshot: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return rc or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
