"""Command-line entry point: synth -> extract -> analyze -> train -> report."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import icc_table, permanova_tables, rows_to_csv
from .core import TASKS, labels_for, read_manifest, read_recording_csv, write_recording_csv
from .decoders.models import save_model
from .decoders.selection import GridSpec, fit_standardized, grid_search_cv, select_modality
from .errors import DependencyError, TouchTellError
from .evaluation import (MODALITIES, MODELS, assert_split_disjoint, modality_report,
                         split_by_participant, write_report)
from .pipeline import FeatureTable, extract_manifest
from .sensor import decode_stream, stream_session
from .synth import SynthConfig, gen_dataset

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISSING = 3


class UsageError(TouchTellError):
    pass


def _out_dir(args):
    root = args.out or os.environ.get("TOUCHTELL_DIR") or "touchtell-out"
    return Path(root)


def _need(path, what):
    path = Path(path)
    if not path.exists():
        raise DependencyError(f"missing {what}: {path}")
    return path


def _require_seed(args):
    if args.seed is None:
        raise UsageError(f"'{args.command}' needs --seed")
    return args.seed


def _tasks(task):
    return list(TASKS) if task == "both" else [task]


def _synth_config(args):
    base = {}
    if args.config:
        base = json.loads(_need(args.config, "config file").read_text(encoding="utf-8"))
        base = base.get("synth", base)
    cfg = SynthConfig.from_dict({**base, "seed": args.seed})
    if args.participants is not None:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), "n_participants": args.participants})
    if args.rounds is not None:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), "n_rounds": args.rounds})
    return cfg


def _features(args, out):
    path = Path(args.features) if args.features else out / "features.csv"
    return FeatureTable.from_csv(_need(path, "features (run 'extract' first)"))


def cmd_synth(args):
    _require_seed(args)
    out = _out_dir(args)
    cfg = _synth_config(args)
    for task in _tasks(args.task):
        manifest = gen_dataset(cfg, task, out, jobs=args.jobs)
        n = sum(1 for t in manifest.trials if t.task == task)
        print(f"synth task={task} trials={n} seed={cfg.seed} out={out}")


def cmd_extract(args):
    out = _out_dir(args)
    manifest = read_manifest(_need(args.manifest or out / "manifest.jsonl", "manifest"))
    if args.task != "both":
        manifest = manifest.by_task(args.task)
    table = extract_manifest(manifest, jobs=args.jobs)
    dest = Path(args.output) if args.output else out / "features.csv"
    dest.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(dest)
    print(f"extract rows={len(table)} out={dest}")


def cmd_analyze_icc(args):
    out = _out_dir(args)
    table = _features(args, out)
    for task in _tasks(args.task):
        rows = icc_table(table, task, args.components)
        dest = out / f"icc_{task}.csv"
        rows_to_csv(rows, dest)
        for r in rows:
            print(f"icc task={task} label={r.label} icc={r.icc:.4f} f={r.f:.4f} p={r.p:.4g}")


def cmd_analyze_permanova(args):
    seed = _require_seed(args)
    out = _out_dir(args)
    table = _features(args, out)
    for task in _tasks(args.task):
        overall, pairs = permanova_tables(table, task, args.permutations, seed)
        rows_to_csv([{"task": task, "pseudo_f": overall.pseudo_f, "p": overall.p,
                      "n_permutations": overall.n_permutations}],
                    out / f"permanova_{task}.csv")
        rows_to_csv(pairs, out / f"permanova_pairwise_{task}.csv")
        print(f"permanova task={task} pseudo_f={overall.pseudo_f:.4f} p={overall.p:.4g} "
              f"pairs={len(pairs)}")


def cmd_train(args):
    seed = _require_seed(args)
    out = _out_dir(args)
    table = _features(args, out).for_task(args.task)
    if len(table) == 0:
        raise DependencyError(f"features contain no {args.task!r} trials")
    split = split_by_participant(table, args.n_train, seed)
    assert_split_disjoint(split, table.participant_id)
    tr, _ = split.masks(table.participant_id)
    X = select_modality(table.X, args.modality)[tr]
    y = table.label[tr]
    groups = table.participant_id[tr]
    grid = GridSpec.load(args.grid, args.model) if args.grid else GridSpec.default(args.model)
    classes = labels_for(args.task)
    cv = grid_search_cv(args.model, grid, X, y, groups, k=args.folds, seed=seed,
                        classes=classes)
    zm, model = fit_standardized(args.model, X, y, cv.chosen, seed, classes)
    models_dir = out / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.task}_{args.modality}_{args.model}"
    meta = {"task": args.task, "modality": args.modality, "seed": seed,
            "chosen": cv.chosen, "train_participants": list(split.train),
            "zscore_mean": zm.mean.tolist(), "zscore_std": zm.std.tolist()}
    save_model(model, models_dir / f"{stem}.json", meta)
    rows_to_csv(list(cv.rows()), models_dir / f"{stem}_cv.csv")
    best = cv.settings.index(cv.chosen)
    print(f"train task={args.task} modality={args.modality} model={args.model} "
          f"chosen={json.dumps(cv.chosen, sort_keys=True)} "
          f"cv_accuracy={cv.mean_accuracy[best]:.4f}")


def cmd_report(args):
    seed = _require_seed(args)
    out = _out_dir(args)
    table = _features(args, out)
    split = split_by_participant(table, args.n_train, seed)
    assert_split_disjoint(split, table.participant_id)
    grids = {}
    if args.grid:
        grids = {m: GridSpec.load(args.grid, m) for m in args.models}
    seeds = [seed * 1000 + i for i in range(args.runs)]
    report = modality_report(table, split, models=args.models, seeds=seeds,
                             tasks=_tasks(args.task), modalities=args.modalities, grids=grids,
                             k=args.folds, base_seed=seed, jobs=args.jobs)
    dest = write_report(report, out / "report", svg=args.svg)
    for line in report.summary_lines():
        print(line)
    print(f"report out={dest}")


def cmd_stream(args):
    rec = read_recording_csv(_need(args.input, "recording"))
    data = stream_session(rec).data
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def cmd_decode_stream(args):
    data = _need(args.input, "wire log").read_bytes() if args.input else sys.stdin.buffer.read()
    rec = decode_stream(data)
    data = write_recording_csv(rec, None)
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def build_parser():
    p = argparse.ArgumentParser(prog="touchtell",
                                description="Touch-and-sound affect decoding pipeline.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output root (default $TOUCHTELL_DIR)")
    common.add_argument("--jobs", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    s.add_argument("--task", choices=(*TASKS, "both"), default="both")
    s.add_argument("--config", help="JSON with SynthConfig overrides")
    s.add_argument("--participants", type=int)
    s.add_argument("--rounds", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", parents=[common], help="extract features to CSV")
    s.add_argument("--manifest")
    s.add_argument("--task", choices=(*TASKS, "both"), default="both")
    s.add_argument("--output")
    s.set_defaults(func=cmd_extract)

    a = sub.add_parser("analyze", help="consistency and variability statistics")
    asub = a.add_subparsers(dest="analysis", required=True)
    s = asub.add_parser("icc", parents=[common])
    s.add_argument("--task", choices=(*TASKS, "both"), default="both")
    s.add_argument("--features")
    s.add_argument("--components", type=int, default=1)
    s.set_defaults(func=cmd_analyze_icc, command="analyze icc")
    s = asub.add_parser("permanova", parents=[common])
    s.add_argument("--task", choices=(*TASKS, "both"), default="both")
    s.add_argument("--features")
    s.add_argument("--permutations", type=int, default=999)
    s.set_defaults(func=cmd_analyze_permanova, command="analyze permanova")

    s = sub.add_parser("train", parents=[common], help="grid search and fit one decoder")
    s.add_argument("--task", choices=TASKS, required=True)
    s.add_argument("--modality", choices=MODALITIES, default="fused")
    s.add_argument("--model", choices=MODELS, default="rf")
    s.add_argument("--grid", help="JSON grid file")
    s.add_argument("--features")
    s.add_argument("--n-train", type=int, default=22)
    s.add_argument("--folds", type=int, default=10)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("report", parents=[common], help="modality comparison report")
    s.add_argument("--task", choices=(*TASKS, "both"), default="both")
    s.add_argument("--models", nargs="+", choices=MODELS, default=list(MODELS))
    s.add_argument("--modalities", nargs="+", choices=MODALITIES, default=list(MODALITIES))
    s.add_argument("--grid")
    s.add_argument("--features")
    s.add_argument("--runs", type=int, default=10, help="training seeds per cell")
    s.add_argument("--n-train", type=int, default=22)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--svg", action="store_true", help="also write confusion heatmaps")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("stream", parents=[common], help="recording CSV -> wire log")
    s.add_argument("--input", required=True)
    s.add_argument("--output")
    s.set_defaults(func=cmd_stream)

    s = sub.add_parser("decode-stream", parents=[common], help="wire log -> recording CSV")
    s.add_argument("--input")
    s.add_argument("--output")
    s.set_defaults(func=cmd_decode_stream)
    return p


def _error_line(kind, exc):
    return f"error kind={kind} message={json.dumps(str(exc))}"


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        args.func(args)
    except UsageError as exc:
        print(_error_line("usage", exc), file=sys.stderr)
        return EXIT_USAGE
    except DependencyError as exc:
        print(_error_line("missing", exc), file=sys.stderr)
        return EXIT_MISSING
    except (TouchTellError, ValueError, OSError, AssertionError) as exc:
        print(_error_line(type(exc).__name__, exc), file=sys.stderr)
        return EXIT_ERROR
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
