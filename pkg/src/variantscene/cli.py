"""Batch command-line front end.

Exit codes: 0 success, 2 bad input (arguments, config or input files),
3 generation failure, 4 client configuration, 5 evaluation input,
6 annotation failure for at least one scene.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import annotate as an
from . import dataset as ds
from . import evaluate as ev
from .config import ConfigError, RunConfig
from .errors import ClientFailure, DuplicatePrediction, NonUniqueDescription, PlyError, VariantSceneError
from .pool import Provenance, ingest, load_pool, pool_from_synthetic, pool_stats, save_record
from .scene import load_scene
from .synth import object_set

EXIT_PARSE = 2
EXIT_GENERATION = 3
EXIT_CLIENT = 4
EXIT_EVALUATION = 5
EXIT_ANNOTATION = 6

log = logging.getLogger("variantscene")


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load_config(args) -> RunConfig:
    path = args.config
    try:
        if path is not None:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            if isinstance(raw, dict) and "config" in raw and "scenes" in raw:
                # a dataset manifest: regenerate from its snapshot
                raw = raw["config"]
            cfg = RunConfig.from_dict(raw)
        else:
            cfg = RunConfig.from_dict()
    except (OSError, yaml.YAMLError, ConfigError) as exc:
        raise CommandError(EXIT_PARSE, f"config: {exc}") from exc
    if args.seed is not None:
        cfg.data["seed"] = args.seed
    return cfg


def _pool_dir(args, cfg):
    return Path(args.run_dir) / cfg["pool_dir"]


def _read_mapping(path):
    """CSV or YAML mapping of file path to class label."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".csv"):
        return {row[0]: row[1] for row in csv.reader(text.splitlines()) if row and not row[0].startswith("#")}
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError("mapping file must map paths to class labels")
    return {str(k): str(v) for k, v in data.items()}


# --- commands ------------------------------------------------------------

def cmd_ingest(args, cfg):
    pool_dir = _pool_dir(args, cfg)
    pool_dir.mkdir(parents=True, exist_ok=True)
    added = 0
    if args.synthetic:
        sp = cfg["synthetic_pool"]
        objs = object_set(sp["seed"], per_cell=sp["per_cell"], realscan_fraction=sp["realscan_fraction"])
        for rec in sorted(pool_from_synthetic(objs).records, key=lambda r: r.id):
            added += save_record(rec, pool_dir)
    mapping = {}
    if args.mapping:
        try:
            mapping = _read_mapping(args.mapping)
        except (OSError, ValueError, yaml.YAMLError) as exc:
            raise CommandError(EXIT_PARSE, f"{args.mapping}: {exc}") from exc
    paths = list(args.paths) + [p for p in mapping if p not in args.paths]
    for path in paths:
        label = mapping.get(path, args.class_label)
        if not label:
            raise CommandError(EXIT_PARSE, f"{path}: no class label (use --class or --mapping)")
        try:
            rec = ingest(path, label, Provenance(args.provenance), args.source or Path(path).name)
        except (OSError, PlyError, VariantSceneError) as exc:
            raise CommandError(EXIT_PARSE, f"{path}: {exc}") from exc
        added += save_record(rec, pool_dir)
    total = len(_pool_rows(pool_dir))
    print(f"added {added} object(s); pool now holds {total}")
    return 0


def _pool_rows(pool_dir):
    path = Path(pool_dir) / "manifest.jsonl"
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _pool_digest(pool):
    return hashlib.sha256("\n".join(sorted(r.id for r in pool.records)).encode()).hexdigest()[:16]


def cmd_generate(args, cfg):
    if args.count is not None:
        cfg.data["generate"]["count"] = args.count
    pool_dir = _pool_dir(args, cfg)
    pool = load_pool(pool_dir) if pool_dir.exists() else None
    if pool is None or len(pool) == 0:
        raise CommandError(EXIT_GENERATION, f"pool at {pool_dir} is empty; run `ingest` first")
    count = cfg["generate"]["count"]
    settings = ds.GenerationSettings.from_config(cfg)
    results = ds.generate(pool, settings, count, jobs=args.jobs)
    _reset_outputs(Path(args.run_dir), cfg["scenes_dir"])
    for r in results:
        if r.scene is None:
            log.warning("scene %d failed: %s", r.index, r.failures[-1] if r.failures else "unknown")
    ds.write_dataset(args.run_dir, cfg["scenes_dir"], results, cfg.snapshot(), cfg.seed,
                     pool_digest=_pool_digest(pool))
    print(ds.format_summary(results))
    ok = sum(r.scene is not None for r in results)
    if count and ok < cfg["generate"]["min_success"] * count:
        raise CommandError(EXIT_GENERATION, f"only {ok}/{count} scenes succeeded")
    return 0


def _reset_outputs(run_dir, scenes_dir):
    """A regenerated dataset invalidates earlier scenes and annotations."""
    for pattern in ("scene-*.ply", "scene-*.json"):
        for f in (run_dir / scenes_dir).glob(pattern):
            f.unlink()
    for f in (run_dir / "transcripts").glob("*.json"):
        f.unlink()
    ann = run_dir / "annotations.jsonl"
    if ann.exists():
        ann.unlink()


def _make_clients(cfg, kind):
    c = cfg["client"]
    if kind == "mock":
        return an.mock_clients(c["seed"])
    try:
        client = an.HttpChatClient(c["endpoint"], c["model"], c["key_env"])
    except ClientFailure as exc:
        raise CommandError(EXIT_CLIENT, str(exc)) from exc
    return client, client


def _annotate_task(item):
    run_dir, path, acfg, clients = item
    scene = load_scene(Path(run_dir) / Path(path).parent, Path(path).name)
    try:
        ann, sums, trs = an.annotate_scene(scene, clients, acfg)
    except (NonUniqueDescription, ClientFailure) as exc:
        return scene.scene_id, None, f"{type(exc).__name__}: {exc}"
    return scene.scene_id, (ann, an.transcript_record(scene.scene_id, sums, trs)), None


def cmd_annotate(args, cfg):
    kind = args.client or cfg["client"]["kind"]
    clients = _make_clients(cfg, kind)
    run_dir = Path(args.run_dir)
    try:
        manifest = ds.load_manifest(run_dir)
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"no dataset in {run_dir}: {exc}") from exc
    acfg = cfg.annotation_config()
    todo = [e for e in manifest["scenes"] if not e["annotated"]]
    (run_dir / "transcripts").mkdir(parents=True, exist_ok=True)
    items = [(str(run_dir), e["path"], acfg, clients) for e in todo]
    if args.jobs > 1 and kind == "mock" and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            outcomes = ex.map(_annotate_task, items)
            failures = _collect(run_dir, manifest, outcomes)
    else:
        failures = _collect(run_dir, manifest, map(_annotate_task, items))
    done = sum(e["annotated"] for e in manifest["scenes"])
    print(f"annotated {len(todo) - len(failures)} scene(s); {done}/{len(manifest['scenes'])} total")
    if failures:
        raise CommandError(EXIT_ANNOTATION, f"{len(failures)} scene(s) failed to annotate")
    return 0


def _collect(run_dir, manifest, outcomes):
    entries = {e["id"]: e for e in manifest["scenes"]}
    failures = []
    with open(run_dir / "annotations.jsonl", "a", encoding="utf-8") as fh:
        for scene_id, payload, err in outcomes:
            if err:
                log.error("scene %s: %s", scene_id, err)
                failures.append(scene_id)
                continue
            ann, record = payload
            ref = f"transcripts/{scene_id}.json"
            (run_dir / ref).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n", encoding="utf-8")
            ann.transcript_ref = ref
            fh.write(json.dumps(ann.to_json(), sort_keys=True) + "\n")
            fh.flush()
            entries[scene_id]["annotated"] = True
            ds.save_manifest(run_dir, manifest)
    return failures


def cmd_evaluate(args, cfg):
    run_dir = Path(args.run_dir)
    reports = run_dir / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    wrote = False
    if args.predictions or args.predictor:
        ann_path = Path(args.annotations) if args.annotations else run_dir / "annotations.jsonl"
        try:
            samples = ev.read_samples(ann_path)
        except (OSError, KeyError, ValueError) as exc:
            raise CommandError(EXIT_EVALUATION, f"{ann_path}: {exc}") from exc
        try:
            if args.predictions:
                preds = ev.read_predictions(args.predictions)
            elif args.predictor == "oracle":
                preds = ev.oracle_predictions(samples)
            else:
                manifest = ds.load_manifest(run_dir)
                paths = {e["id"]: e["path"] for e in manifest["scenes"]}
                scenes = [load_scene(run_dir / Path(paths[s.scene_id]).parent, s.scene_id) for s in samples]
                preds = ev.baseline_predictions(scenes)
            overall = ev.grounding_accuracy(samples, preds)
            results = {axis: ev.breakdown(samples, preds, axis) for axis in _axes(args.by)}
        except (ev.PredictionFormatError, DuplicatePrediction, OSError) as exc:
            raise CommandError(EXIT_EVALUATION, str(exc)) from exc
        ev.write_report(overall, reports / "overall.csv")
        print(ev.format_table(overall, "overall"))
        for axis, res in results.items():
            ev.write_report(res, reports / f"by_{axis}.csv", axis)
            print()
            print(ev.format_table(res, axis))
        wrote = True
    if args.seg_gt or args.seg_pred:
        if not (args.seg_gt and args.seg_pred):
            raise CommandError(EXIT_EVALUATION, "--seg-gt and --seg-pred go together")
        score = _segmentation(Path(args.seg_gt), Path(args.seg_pred))
        ev.write_seg_report(score, reports / "segmentation.csv")
        print(f"mIoU_I {score.miou_i:.4f}% over {len(score.per_instance)} instance(s)")
        wrote = True
    if not wrote:
        raise CommandError(EXIT_EVALUATION, "nothing to evaluate: give --predictions, --predictor or --seg-gt/--seg-pred")
    return 0


def _axes(spec):
    if not spec:
        return []
    axes = [a.strip() for a in spec.split(",") if a.strip()]
    for a in axes:
        if a not in ev.AXES:
            raise CommandError(EXIT_PARSE, f"unknown --by axis {a!r}")
    return axes


def _segmentation(gt_dir, pred_dir):
    names = sorted(p.name for p in gt_dir.glob("*.txt"))
    gts, preds = [], []
    try:
        for name in names:
            gts.append(ev.read_labels(gt_dir / name))
            preds.append(ev.read_labels(pred_dir / name))
        return ev.segmentation_miou(gts, preds)
    except (OSError, ValueError) as exc:
        raise CommandError(EXIT_EVALUATION, str(exc)) from exc


def cmd_stats(args, cfg):
    pool_dir = _pool_dir(args, cfg)
    stats = pool_stats(load_pool(pool_dir)) if pool_dir.exists() else {}
    keys = sorted({k for row in stats.values() for k in row if k != "total"})
    print(f"{'class':<12}{'total':>7}" + "".join(f"{k:>10}" for k in keys))
    for cls, row in stats.items():
        print(f"{cls:<12}{row['total']:>7}" + "".join(f"{row.get(k, 0):>10}" for k in keys))
    try:
        manifest = ds.load_manifest(args.run_dir)
    except OSError:
        return 0
    table = {}
    for e in manifest["scenes"]:
        row = table.setdefault(e["distinction"], {})
        row[e["num_distractors"]] = row.get(e["num_distractors"], 0) + 1
    done = sum(e["annotated"] for e in manifest["scenes"])
    print()
    print(f"scenes {len(manifest['scenes'])}, annotated {done}, failed {len(manifest.get('failed', []))}")
    for d, row in sorted(table.items()):
        print(f"  {d:<15}" + " ".join(f"{n}:{c}" for n, c in sorted(row.items())))
    return 0


# --- parser --------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="YAML run configuration (or a dataset.json)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the configured seed")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--run-dir", default=argparse.SUPPRESS, help="directory holding all artifacts")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="variantscene", parents=[common],
                                     description="Controllable 3D grounding benchmark synthesis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="add object point clouds to the pool")
    p.add_argument("paths", nargs="*")
    p.add_argument("--class", dest="class_label")
    p.add_argument("--mapping", help="CSV or YAML file mapping paths to class labels")
    p.add_argument("--provenance", choices=[x.value for x in Provenance], default="RealScan")
    p.add_argument("--source", default="")
    p.add_argument("--synthetic", action="store_true", help="add the procedural object catalogue")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("generate", parents=[common], help="generate scenes")
    p.add_argument("--count", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("annotate", parents=[common], help="annotate generated scenes")
    p.add_argument("--client", choices=["mock", "http"])
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("evaluate", parents=[common], help="score grounding or segmentation predictions")
    p.add_argument("--predictions", help="JSONL of {scene_id, pred_box}")
    p.add_argument("--predictor", choices=["oracle", "baseline"], help="score a built-in predictor")
    p.add_argument("--annotations", help="annotation JSONL (default: run dir)")
    p.add_argument("--by", help="comma-separated breakdown axes: distractors, distinction")
    p.add_argument("--seg-gt", help="directory of ground-truth part label files")
    p.add_argument("--seg-pred", help="directory of predicted part label files")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", parents=[common], help="summarize pool and dataset")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("jobs", 1), ("run_dir", "run"), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        Path(args.run_dir).mkdir(parents=True, exist_ok=True)
        return args.func(args, cfg)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
