"""``catpose-eval`` command line.

Thresholds are given in centimeters and degrees and converted to meters
and radians internally. Exit codes: 0 success, 1 internal error, 2 invalid
input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import carve
from .aggregate import (
    DEFAULT_GRIDS,
    PRESETS,
    Thresholds,
    classify_correct,
    precision,
    precision_best_worst,
    sweep,
)
from .datasets import (
    PLANS,
    generate_fixture,
    group_hypotheses,
    load_annotation_frames,
    load_ground_truth,
    load_mesh,
    load_predictions,
    save_mesh,
    save_pointset,
    write_ground_truth,
    write_orientation_csv,
)
from .datasets.manifest import GroundTruthInstance
from .errors import CatposeError, ValidationError
from .geometry import compose, invert
from .metrics import (
    DEFAULT_FSCORE_DELTA,
    EvalConfig,
    Estimate,
    Frame,
    GroundTruth,
    InstanceEval,
    chamfer_distance,
    evaluate_instance,
    f_score,
    symmetry_for,
)
from .sampling import DEFAULT_SAMPLES, TriMesh, derive_seed, sample_surface

SEED_ENV = "CATPOSE_EVAL_SEED"
SENSITIVITY_GRID = (100, 178, 316, 562, 1000, 3162, 10000)
RESULT_COLUMNS = ("instance_id", "category", "d", "delta", "iou_oriented", "iou_axis_aligned",
                  "cd", "nad", "f_recall", "f_precision", "f_score", "correct")


def _fmt(x):
    return repr(float(x))


def _json_safe(obj):
    # JSON has no inf/nan; unbounded thresholds and absent metrics become null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path, doc):
    Path(path).write_text(json.dumps(_json_safe(doc), indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def resolve_seed(arg_seed):
    if arg_seed is not None:
        seed = arg_seed
    else:
        raw = os.environ.get(SEED_ENV)
        if raw is None or raw.strip() == "":
            return 0
        try:
            seed = int(raw, 0)
        except ValueError as exc:
            raise ValidationError(f"{SEED_ENV}={raw!r} is not an integer") from exc
    if not 0 <= seed < 2 ** 64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("expected comma-separated positive integers")
    return vals


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


# ---------------------------------------------------------------- evaluation


def _eval_task(task):
    gt, est, cfg, hyp = task
    if est is None:
        return InstanceEval.missing_prediction(gt.instance_id, gt.category, cfg.fscore_delta), hyp
    return evaluate_instance(gt, est, cfg), hyp


def _selected_thresholds(args, delta_f):
    th = PRESETS[args.preset] if args.preset else PRESETS["lenient"]
    th = replace(th, delta_for_f=delta_f)
    if args.d_max_cm is not None:
        th = replace(th, d_max=args.d_max_cm / 100.0)
    if args.delta_max_deg is not None:
        th = replace(th, delta_max=math.radians(args.delta_max_deg))
    if args.f_min is not None:
        th = replace(th, f_min=args.f_min)
    return th


def run_evaluation(args):
    """Evaluate every (instance, hypothesis); returns GT list, flat rows and multi-hypothesis flag."""
    seed = resolve_seed(args.seed)
    gts = load_ground_truth(args.gt)
    preds = load_predictions(args.pred)
    known = {g.instance_id for g in gts}
    unknown = sorted({p.instance_id for p in preds} - known)
    if unknown:
        raise ValidationError(f"predictions for unknown instance ids: {', '.join(unknown)}")
    groups = group_hypotheses(preds)
    multi = any(len(h) > 1 or h[0].hypothesis_index is not None for h in groups.values())
    delta_f = args.fscore_delta_cm / 100.0
    tasks = []
    for g in gts:
        cfg = EvalConfig(fscore_delta=delta_f, n_samples=args.samples,
                         seed=derive_seed(seed, g.instance_id), frame=Frame(args.frame))
        gt = GroundTruth(g.mesh, g.pose, g.extents, g.category, g.symmetry, g.instance_id)
        hyps = groups.get(g.instance_id)
        if not hyps:
            tasks.append((gt, None, cfg, 0))
            continue
        for k, p in enumerate(hyps):
            tasks.append((gt, Estimate(p.shape, p.pose, p.extents), cfg, k))
    results = _map(_eval_task, tasks, args.workers)
    return gts, results, multi, seed


def _primary(results):
    """First hypothesis per instance, in ground-truth order."""
    return [e for e, hyp in results if hyp == 0]


def _hypothesis_groups(results):
    groups = []
    for e, hyp in results:
        if hyp == 0:
            groups.append([])
        groups[-1].append(e)
    return groups


def cmd_eval(args):
    gts, results, multi, seed = run_evaluation(args)
    delta_f = args.fscore_delta_cm / 100.0
    selected = _selected_thresholds(args, delta_f)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    columns = list(RESULT_COLUMNS)
    if multi:
        columns.insert(2, "hypothesis")
    with open(out / "results.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for e, hyp in results:
            row = [e.instance_id, e.category]
            if multi:
                row.append(hyp)
            row += [_fmt(getattr(e, c)) for c in RESULT_COLUMNS[2:-1]]
            row.append(int(classify_correct(e, selected)))
            w.writerow(row)

    primary = _primary(results)
    groups = _hypothesis_groups(results)
    reports = {}
    for name, th in [("selected", selected)] + sorted(PRESETS.items()):
        if th.f_min is not None and th.delta_for_f != delta_f:
            # F-score thresholds only make sense at the Delta they were stated for
            reports[name] = {"skipped": f"needs F-score at {th.delta_for_f} m, run used {delta_f} m"}
            continue
        rep = precision(primary, th).as_dict()
        if multi:
            rep["p_best"], rep["p_worst"] = precision_best_worst(groups, th)
        reports[name] = rep
    summary = {
        "schema_version": 1,
        "gt": str(args.gt),
        "pred": str(args.pred),
        "seed": seed,
        "n_samples": args.samples,
        "fscore_delta": delta_f,
        "frame": Frame(args.frame).value,
        "instances": len(gts),
        "missing_predictions": [e.instance_id for e in primary if e.missing],
        "multi_hypothesis": multi,
        "precision": reports,
    }
    _write_json(out / "summary.json", summary)
    sel = reports["selected"]
    print(f"precision {sel['overall']:.4f} ({sel['correct']}/{sel['count']}) -> {out}")
    return 0


def _cli_units(axis, value):
    if axis == "d":
        return round(value * 100.0, 10)
    if axis == "delta":
        return round(math.degrees(value), 10)
    return value


def _from_cli_units(axis, value):
    if axis == "d":
        return value / 100.0
    if axis == "delta":
        return math.radians(value)
    return value


def cmd_curves(args):
    _, results, _, _ = run_evaluation(args)
    primary = _primary(results)
    base = Thresholds(delta_for_f=args.fscore_delta_cm / 100.0)
    if args.preset:
        base = replace(PRESETS[args.preset], delta_for_f=base.delta_for_f)
    axes = ("d", "delta", "f") if args.axis == "all" else (args.axis,)
    rows = []
    for axis in axes:
        if args.grid is not None:
            grid = [_from_cli_units(axis, v) for v in args.grid]
        else:
            grid = DEFAULT_GRIDS[axis]
        curve = sweep(primary, axis, grid, base)
        rows += [(axis, _cli_units(axis, g), v) for g, v in zip(curve.grid, curve.values)]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "threshold", "precision"])
        for axis, g, v in rows:
            w.writerow([axis, _fmt(g), _fmt(v)])
    print(f"{len(rows)} curve points -> {out}")
    return 0


# ---------------------------------------------------------------- sensitivity


def _sensitivity_task(task):
    mesh, n, delta, seed = task
    a = sample_surface(mesh, n, derive_seed(seed, f"sensitivity/{n}/a"))
    b = sample_surface(mesh, n, derive_seed(seed, f"sensitivity/{n}/b"))
    return n, chamfer_distance(a, b), f_score(a, b, delta)[2]


def scaled_to_height(mesh: TriMesh, height):
    """Uniformly scale so the y extent equals ``height``."""
    span = float(np.ptp(mesh.vertices[:, 1]))
    if span <= 0:
        raise ValidationError("mesh has zero height; cannot rescale")
    return TriMesh(mesh.vertices * (height / span), mesh.triangles)


def sensitivity_rows(mesh, n_grid, delta, seed, workers=1):
    """``(n, cd_self, f_self)`` from two independent samplings of the same mesh per ``n``."""
    return _map(_sensitivity_task, [(mesh, n, delta, seed) for n in n_grid], workers)


def cmd_sensitivity(args):
    seed = resolve_seed(args.seed)
    mesh = load_mesh(args.mesh)
    if args.height_cm is not None:
        mesh = scaled_to_height(mesh, args.height_cm / 100.0)
    rows = sensitivity_rows(mesh, args.n_grid, args.fscore_delta_cm / 100.0, seed, args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "cd_self", "f_self"])
        for n, cd, f in rows:
            w.writerow([n, _fmt(cd), _fmt(f)])
    print(f"{len(rows)} rows -> {out}")
    return 0


# ---------------------------------------------------------------- annotation, sampling, fixtures


def cmd_annotate(args):
    job = load_annotation_frames(args.frames)
    resolution = args.resolution_mm / 1000.0
    margin = None if args.margin_mm is None else args.margin_mm / 1000.0
    mesh, extents, recenter = carve.annotate(job.extents, resolution, job.frames,
                                             args.smooth_iterations, args.smooth_lambda, margin)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh_path = out / f"{job.instance_id}.obj"
    save_mesh(mesh_path, mesh)
    # object-in-camera pose for the recentred frame: box_pose after undoing the recentring
    undo = invert(recenter)
    instances = [
        GroundTruthInstance(f"{job.instance_id}/{fid}", job.category,
                            symmetry_for(job.category), compose(fr.box_pose, undo), mesh_path, extents)
        for fid, fr in zip(job.frame_ids, job.frames)
    ]
    write_ground_truth(out / "annotation.json", instances, job.frames[0].intrinsics)
    ext_cm = ", ".join(f"{x * 100:.2f}" for x in extents)
    print(f"{len(mesh.triangles)} triangles, extents ({ext_cm}) cm -> {out}")
    return 0


def cmd_sample(args):
    seed = resolve_seed(args.seed)
    pts = sample_surface(load_mesh(args.mesh), args.samples, seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_pointset(out, pts)
    print(f"{len(pts)} points -> {out}")
    return 0


def cmd_fixture(args):
    seed = resolve_seed(args.seed)
    oracle = generate_fixture(args.plan, args.out, seed)
    extra = f", expected precision {oracle['expected_precision']:.4f}" if "expected_precision" in oracle else ""
    print(f"fixture {args.plan!r} -> {args.out}{extra}")
    return 0


def cmd_orientations(args):
    gts = load_ground_truth(args.gt, load_meshes=False)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_orientation_csv(out, gts)
    print(f"{len(gts)} up-axis vectors -> {out}")
    return 0


# ---------------------------------------------------------------- parser


def _add_eval_options(p):
    p.add_argument("--gt", required=True, help="ground-truth manifest (JSON)")
    p.add_argument("--pred", required=True, help="prediction manifest (JSON)")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="threshold preset (eval default: lenient; curves default: unbounded)")
    p.add_argument("--d-max-cm", type=float, default=None, help="translation bound in cm")
    p.add_argument("--delta-max-deg", type=float, default=None, help="rotation bound in degrees")
    p.add_argument("--f-min", type=float, default=None, help="minimum F-score")
    p.add_argument("--fscore-delta-cm", type=_positive(float), default=DEFAULT_FSCORE_DELTA * 100.0,
                   help="F-score distance threshold in cm (default 1)")
    p.add_argument("--samples", type=_positive(int), default=DEFAULT_SAMPLES,
                   help="surface samples per mesh (default 10000)")
    p.add_argument("--frame", choices=[f.value for f in Frame], default=Frame.CAMERA.value)
    _add_common(p)


def _add_common(p):
    p.add_argument("--seed", type=int, default=None,
                   help=f"64-bit seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--workers", type=_positive(int), default=os.cpu_count() or 1)


def build_parser():
    parser = argparse.ArgumentParser(prog="catpose-eval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="per-instance metrics and precision summary")
    _add_eval_options(p)
    p.add_argument("--out", required=True, help="output directory (results.csv, summary.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curves", help="precision as one threshold is swept")
    _add_eval_options(p)
    p.add_argument("--axis", choices=["d", "delta", "f", "all"], default="all")
    p.add_argument("--grid", type=_float_list, default=None,
                   help="comma-separated ascending grid in cm / degrees / F units")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("sensitivity", help="CD and F-score between two samplings of one mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--n-grid", type=_int_list, default=list(SENSITIVITY_GRID))
    p.add_argument("--fscore-delta-cm", type=_positive(float), default=DEFAULT_FSCORE_DELTA * 100.0)
    p.add_argument("--height-cm", type=_positive(float), default=None,
                   help="rescale the mesh to this height (y extent) first")
    p.add_argument("--out", required=True, help="output CSV")
    _add_common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("annotate", help="carve a mesh from posed depth frames")
    p.add_argument("--frames", required=True, help="frames manifest (JSON)")
    p.add_argument("--resolution-mm", type=_positive(float), default=carve.DEFAULT_RESOLUTION * 1000.0)
    p.add_argument("--smooth-iterations", type=int, default=carve.DEFAULT_SMOOTH_ITERATIONS)
    p.add_argument("--smooth-lambda", type=float, default=carve.DEFAULT_SMOOTH_LAMBDA)
    p.add_argument("--margin-mm", type=float, default=None, help="free-space margin (default: one voxel)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("sample", help="area-weighted surface samples of a mesh as PLY")
    p.add_argument("--mesh", required=True)
    p.add_argument("--samples", type=_positive(int), default=DEFAULT_SAMPLES)
    p.add_argument("--out", required=True, help="output PLY")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fixture", help="write a synthetic dataset with a sidecar oracle")
    p.add_argument("plan", choices=PLANS)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("orientations", help="camera-frame up-axis of every ground-truth instance")
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_orientations)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CatposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
