"""Command-line interface for the evaluation workbench.

    posebench synth scene --frames 200 --out-dir scene/
    posebench synth raters --manifest m.json --gt gt.csv --n 10 --sigma 3
    posebench build-dataset --pool pool.json --plan plan.json --out out.json
    posebench eval --predictions p.csv --ground-truth gt.csv --manifest m.json
    posebench agreement --interrater ann.csv --manifest m.json --out base.csv
    posebench icc --model-report report.json --baseline base.csv
    posebench report --kind table2 --baseline base.csv --model-report r.json
    posebench bench --predictor "python -m posebench.mock_predictor" ...
    posebench serve --manifest m.json --roster roster.txt --data-dir data/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import agreement as agreement_mod
from . import bench as bench_mod
from . import dataset as dataset_mod
from . import formats
from . import metrics as metrics_mod
from . import reporting
from . import synthetic
from .service import AnnotationServer, AnnotationService
from .skeleton import KEYPOINTS, KeypointId
from .types import Setup, Split, group_by_frame


def _write_bytes(path: str, data: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(path).write_bytes(data)


def _load_manifest(path: str):
    return formats.parse_manifest(Path(path).read_bytes())


def _load_plan(path: str | None, total_frames: int = 0, seed: int = 0):
    if path is None:
        return dataset_mod.StratificationPlan(total_frames=total_frames, seed=seed)
    doc = json.loads(Path(path).read_text())
    return dataset_mod.StratificationPlan(
        total_frames=doc.get("total_frames", total_frames),
        setup_shares={Setup(k): v for k, v in doc["setup_shares"].items()}
        if "setup_shares" in doc
        else dict(dataset_mod.DEFAULT_SETUP_SHARES),
        challenging_share=doc.get("challenging_share", 0.20),
        split_shares={Split(k): v for k, v in doc["split_shares"].items()}
        if "split_shares" in doc
        else dict(dataset_mod.DEFAULT_SPLIT_SHARES),
        interrater_count=doc.get("interrater_count", 100),
        seed=doc.get("seed", seed),
    )


def _load_profile(args) -> synthetic.NoiseProfile:
    if getattr(args, "profile", None):
        doc = json.loads(Path(args.profile).read_text())
        sigma = doc.get("sigma", 0.0)
        if isinstance(sigma, dict):
            per_keypoint = {KeypointId.from_label(k): float(v) for k, v in sigma.items()}
            missing = [k for k in KEYPOINTS if k not in per_keypoint]
            if missing:
                raise SystemExit(f"profile missing sigmas for {[k.label for k in missing]}")
        else:
            per_keypoint = {k: float(sigma) for k in KEYPOINTS}
        return synthetic.NoiseProfile(
            per_keypoint,
            inversion_rate=doc.get("inversion_rate", 0.0),
            miss_rate=doc.get("miss_rate", 0.0),
            seed=doc.get("seed", getattr(args, "seed", 0)),
        )
    return synthetic.NoiseProfile.uniform(args.sigma, seed=args.seed)


def _cmd_synth_scene(args) -> int:
    manifest, annotations = synthetic.gen_scene(
        args.frames,
        width=args.width,
        height=args.height,
        seed=args.seed,
        interrater_count=args.interrater,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.images:
        from PIL import Image

        images_dir = out_dir / "images"
        images_dir.mkdir(exist_ok=True)
        frames = []
        for f in manifest.frames:
            rel = f"images/{f.frame_id}.png"
            Image.new("RGB", (f.width, f.height), (24, 24, 32)).save(out_dir / rel)
            frames.append(
                type(f)(
                    frame_id=f.frame_id,
                    video_id=f.video_id,
                    width=f.width,
                    height=f.height,
                    setup=f.setup,
                    pose_class=f.pose_class,
                    image_path=rel,
                )
            )
        manifest = type(manifest)(
            manifest.videos, tuple(frames), manifest.splits, manifest.interrater_frames
        )
    (out_dir / "manifest.json").write_bytes(formats.write_manifest(manifest))
    (out_dir / "annotations.csv").write_bytes(formats.write_annotations(annotations))
    print(f"wrote {len(annotations)} frames to {out_dir}")
    return 0


def _cmd_synth_raters(args) -> int:
    manifest = _load_manifest(args.manifest)
    gts = formats.parse_annotations(Path(args.gt).read_bytes(), manifest)
    if args.frames == "interrater":
        gts = [g for g in gts if g.frame_id in manifest.interrater_frames]
    profile = _load_profile(args)
    rater_ids = [f"rater{i + 1:02d}" for i in range(args.n)]
    by_rater = synthetic.make_raters(gts, manifest, profile, rater_ids)
    records = [pose for poses in by_rater.values() for pose in poses]
    _write_bytes(args.out, formats.write_annotations(records))
    return 0


def _cmd_synth_model(args) -> int:
    manifest = _load_manifest(args.manifest)
    gts = formats.parse_annotations(Path(args.gt).read_bytes(), manifest)
    profile = _load_profile(args)
    preds = synthetic.perturb_model(gts, manifest, profile, model_id=args.model_id)
    _write_bytes(args.out, formats.write_predictions(preds))
    return 0


def _cmd_build_dataset(args) -> int:
    pool = _load_manifest(args.pool)
    plan = _load_plan(args.plan, total_frames=len(pool.frames), seed=args.seed)
    selected = dataset_mod.stratify_frames(list(pool.frames), plan)
    manifest = dataset_mod.split_dataset(selected, plan, videos=pool.videos)
    _write_bytes(args.out, formats.write_manifest(manifest))
    report = dataset_mod.validate_split(manifest, plan.split_shares)
    counts = {s.value: len(manifest.frames_in(s)) for s in Split}
    print(f"selected {len(selected)} frames; splits {counts}")
    if not report.ok:
        print(f"WARNING: atomicity violations: {report.violations}", file=sys.stderr)
    return 0


def _cmd_validate_split(args) -> int:
    manifest = _load_manifest(args.manifest)
    plan = _load_plan(args.plan) if args.plan else None
    report = dataset_mod.validate_split(
        manifest, plan.split_shares if plan else None
    )
    print(json.dumps(
        {
            "violations": [list(v) for v in report.violations],
            "empty_splits": [s.value for s in report.empty_splits],
            "share_deviation": {s.value: d for s, d in report.share_deviation.items()},
            "setup_shares": {s.value: v for s, v in report.setup_shares.items()},
        },
        indent=2,
    ))
    return 0 if report.ok else 1


def _cmd_subsets(args) -> int:
    manifest = _load_manifest(args.manifest)
    train = manifest.frames_in(Split.TRAIN)
    sizes = [int(s) for s in args.sizes.split(",")]
    subsets = dataset_mod.build_training_subsets(train, sizes, seed=args.seed)
    doc = {str(size): sorted(frame_ids) for size, frame_ids in subsets.items()}
    _write_bytes(args.out, json.dumps(doc, indent=2).encode("utf-8"))
    return 0


def _cmd_eval(args) -> int:
    manifest = _load_manifest(args.manifest)
    gts = formats.parse_annotations(Path(args.ground_truth).read_bytes(), manifest)
    prediction_sets = formats.parse_predictions(Path(args.predictions).read_bytes(), manifest)
    baseline = (
        formats.parse_baseline(Path(args.baseline).read_bytes())
        if args.baseline
        else None
    )
    config = metrics_mod.PckConfig(
        tuple(float(t) for t in args.taus.split(","))
    )
    if args.split:
        wanted = {f.frame_id for f in manifest.frames_in(Split(args.split))}
        gts = [g for g in gts if g.frame_id in wanted]
    docs = []
    for preds in prediction_sets:
        report = metrics_mod.compute_metric_report(preds, gts, manifest, baseline, config)
        docs.append(metrics_mod.report_to_dict(report))
    payload = docs[0] if len(docs) == 1 else docs
    _write_bytes(args.out, json.dumps(payload, indent=2).encode("utf-8"))
    return 0


def _cmd_agreement(args) -> int:
    manifest = _load_manifest(args.manifest)
    annotations = formats.parse_annotations(Path(args.interrater).read_bytes(), manifest)
    grouped = group_by_frame(annotations)
    baseline = agreement_mod.annotation_spread(grouped, manifest)
    _write_bytes(args.out, formats.write_baseline(baseline))
    overall = baseline.overall()
    print(
        f"{baseline.n_frames} frames x {baseline.n_raters} raters; "
        f"overall spread {overall.h * 1000:.2f} mm "
        f"(95th percentile {overall.h95 * 1000:.2f} mm)"
    )
    return 0


def _cmd_icc(args) -> int:
    report = metrics_mod.report_from_dict(json.loads(Path(args.model_report).read_text()))
    baseline = formats.parse_baseline(Path(args.baseline).read_bytes())
    result = agreement_mod.model_vs_human_icc(
        {k: report.per_keypoint[k].me for k in KEYPOINTS},
        {k: baseline.per_keypoint[k].h for k in KEYPOINTS},
        alpha=args.alpha,
    )
    doc = reporting.icc_report({report.model_id: result})
    sys.stdout.write(reporting.render(doc, args.format).decode("utf-8"))
    return 0


def _cmd_report(args) -> int:
    kind_map = {
        "table1": reporting.ReportKind.PERFORMANCE,
        "table2": reporting.ReportKind.HUMAN_COMPARISON,
        "table3": reporting.ReportKind.ICC,
        "fig4": reporting.ReportKind.ERROR_DISTRIBUTION,
        "fig6": reporting.ReportKind.SAMPLE_EFFICIENCY,
    }
    kind = kind_map.get(args.kind)
    if kind is None:
        raise SystemExit(f"unknown report kind {args.kind!r}")
    reports = [
        metrics_mod.report_from_dict(json.loads(Path(p).read_text()))
        for p in args.model_report
    ]
    if kind is reporting.ReportKind.PERFORMANCE:
        doc = reporting.performance_report(reports)
    elif kind is reporting.ReportKind.HUMAN_COMPARISON:
        if not args.baseline:
            raise SystemExit("table2 needs --baseline")
        baseline = formats.parse_baseline(Path(args.baseline).read_bytes())
        doc = reporting.human_comparison_report(baseline, reports)
    elif kind is reporting.ReportKind.ICC:
        if not args.baseline:
            raise SystemExit("table3 needs --baseline")
        baseline = formats.parse_baseline(Path(args.baseline).read_bytes())
        results = {
            r.model_id: agreement_mod.model_vs_human_icc(
                {k: r.per_keypoint[k].me for k in KEYPOINTS},
                {k: baseline.per_keypoint[k].h for k in KEYPOINTS},
            )
            for r in reports
        }
        doc = reporting.icc_report(results)
    else:
        raise SystemExit(f"{args.kind} needs inputs not expressible from files yet")
    _write_bytes(args.out, reporting.render(doc, args.format))
    return 0


def _cmd_bench(args) -> int:
    manifest = _load_manifest(args.frames)
    frame_refs = [f.image_path or f.frame_id for f in manifest.frames]
    if args.limit:
        frame_refs = frame_refs[: args.limit]
    config = bench_mod.BenchConfig(
        predictor=args.predictor,
        batch_size=args.batch,
        runs=args.runs,
        warmup_runs=args.warmup,
        timeout_s=args.timeout,
    )
    result = bench_mod.measure_latency(frame_refs, config)
    print(
        json.dumps(
            {
                "median_latency_ms_per_image": result.median_latency_ms_per_image,
                "per_run_ms": list(result.per_run_ms),
                "images_per_run": result.images_per_run,
            },
            indent=2,
        )
    )
    return 0


def _cmd_serve(args) -> int:
    manifest = _load_manifest(args.manifest)
    roster = [
        line.strip()
        for line in Path(args.roster).read_text().splitlines()
        if line.strip()
    ]
    host, _, port = args.listen.rpartition(":")
    service = AnnotationService(
        manifest,
        roster,
        args.data_dir,
        fsync=not args.no_fsync,
        image_root=Path(args.manifest).parent,
    )
    server = AnnotationServer(
        service, host or "127.0.0.1", int(port), static_dir=args.static
    )
    print(f"serving on {server.address} (data dir {args.data_dir})", flush=True)
    server.serve_forever()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="posebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="synthetic scenes, raters, predictors")
    synth_sub = synth.add_subparsers(dest="synth_command", required=True)

    scene = synth_sub.add_parser("scene")
    scene.add_argument("--frames", type=int, required=True)
    scene.add_argument("--width", type=int, default=1280)
    scene.add_argument("--height", type=int, default=720)
    scene.add_argument("--seed", type=int, default=0)
    scene.add_argument("--interrater", type=int, default=100)
    scene.add_argument("--images", action="store_true", help="write placeholder PNGs")
    scene.add_argument("--out-dir", required=True)
    scene.set_defaults(func=_cmd_synth_scene)

    raters = synth_sub.add_parser("raters")
    raters.add_argument("--manifest", required=True)
    raters.add_argument("--gt", required=True)
    raters.add_argument("--n", type=int, default=10)
    raters.add_argument("--sigma", type=float, default=3.0)
    raters.add_argument("--profile", help="noise profile JSON")
    raters.add_argument("--frames", choices=["all", "interrater"], default="all")
    raters.add_argument("--seed", type=int, default=0)
    raters.add_argument("--out", default="-")
    raters.set_defaults(func=_cmd_synth_raters)

    model = synth_sub.add_parser("model")
    model.add_argument("--manifest", required=True)
    model.add_argument("--gt", required=True)
    model.add_argument("--sigma", type=float, default=5.0)
    model.add_argument("--profile", help="noise profile JSON")
    model.add_argument("--model-id", default="synthetic")
    model.add_argument("--seed", type=int, default=0)
    model.add_argument("--out", default="-")
    model.set_defaults(func=_cmd_synth_model)

    build = sub.add_parser("build-dataset", help="stratify and split a frame pool")
    build.add_argument("--pool", required=True)
    build.add_argument("--plan", help="stratification plan JSON")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--out", required=True)
    build.set_defaults(func=_cmd_build_dataset)

    vsplit = sub.add_parser("validate-split", help="audit an existing manifest")
    vsplit.add_argument("manifest")
    vsplit.add_argument("--plan")
    vsplit.set_defaults(func=_cmd_validate_split)

    subsets = sub.add_parser("subsets", help="training subsets per size")
    subsets.add_argument("--manifest", required=True)
    subsets.add_argument("--sizes", required=True, help="comma-separated sizes")
    subsets.add_argument("--seed", type=int, default=0)
    subsets.add_argument("--out", default="-")
    subsets.set_defaults(func=_cmd_subsets)

    ev = sub.add_parser("eval", help="compute the metric report for predictions")
    ev.add_argument("--predictions", required=True)
    ev.add_argument("--ground-truth", required=True)
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--baseline")
    ev.add_argument("--taus", default="1.0,0.5,0.3,0.1")
    ev.add_argument("--split", choices=[s.value for s in Split])
    ev.add_argument("--out", default="-")
    ev.set_defaults(func=_cmd_eval)

    agr = sub.add_parser("agreement", help="baseline from inter-rater annotations")
    agr.add_argument("--interrater", required=True)
    agr.add_argument("--manifest", required=True)
    agr.add_argument("--out", default="-")
    agr.set_defaults(func=_cmd_agreement)

    icc = sub.add_parser("icc", help="ICC between a model report and a baseline")
    icc.add_argument("--model-report", required=True)
    icc.add_argument("--baseline", required=True)
    icc.add_argument("--alpha", type=float, default=0.05)
    icc.add_argument("--format", choices=["csv", "txt", "md"], default="txt")
    icc.set_defaults(func=_cmd_icc)

    rep = sub.add_parser("report", help="render a result table")
    rep.add_argument("--kind", required=True, choices=["table1", "table2", "table3", "fig4", "fig6"])
    rep.add_argument("--format", choices=["csv", "txt", "md"], default="csv")
    rep.add_argument("--baseline")
    rep.add_argument("--model-report", action="append", default=[])
    rep.add_argument("--out", default="-")
    rep.set_defaults(func=_cmd_report)

    bench = sub.add_parser("bench", help="measure predictor latency")
    bench.add_argument("--predictor", required=True)
    bench.add_argument("--frames", required=True, help="manifest with frame references")
    bench.add_argument("--batch", type=int, default=10)
    bench.add_argument("--runs", type=int, default=10)
    bench.add_argument("--warmup", type=int, default=1)
    bench.add_argument("--timeout", type=float, default=60.0)
    bench.add_argument("--limit", type=int, default=0)
    bench.set_defaults(func=_cmd_bench)

    serve = sub.add_parser("serve", help="run the annotation service")
    serve.add_argument("--manifest", required=True)
    serve.add_argument("--roster", required=True)
    serve.add_argument("--data-dir", required=True)
    serve.add_argument("--listen", default="127.0.0.1:8777")
    serve.add_argument("--static", help="directory with the web client build")
    serve.add_argument("--no-fsync", action="store_true")
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
