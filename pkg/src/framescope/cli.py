"""Command-line entry point.

Subcommands: extract, gen, train, classify, eval, kld, bench. Exit codes:
0 success, 2 input/usage error, 3 numerical failure. Analysis commands
print a human-readable table and can additionally write machine-readable
JSON-lines rows.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import nn
from .annexb import detect_codec, extract_frames_annexb
from .datagen import standard_benchmark
from .dtw import DtwConfig, dtw_distance, knn_classify
from .errors import DivergedLoss, FramescopeError, NoStartCode, NotMp4, TooShort
from .fsts import load_dataset, read_fsts, write_fsts, write_manifest
from .metrics import EvalReport, confusion, metrics, realtime_factor
from .mp4 import extract_frames_mp4
from .series import (
    Codec,
    FrameSizeSeries,
    LabeledDataset,
    PreprocessSpec,
    prepare_matrix,
    preprocess,
    split,
    split_train_val,
)
from .stats import class_kld_matrix

log = logging.getLogger(__name__)


def _write_rows(rows: list[dict], path: str) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def _prep_from_args(args, n_frames: int) -> PreprocessSpec:
    return PreprocessSpec(n_frames=n_frames, normalization=args.norm)


# --- extract -----------------------------------------------------------------

def _extract_series(data: bytes, args, source_id: str) -> FrameSizeSeries:
    container = args.container
    if container in ("mp4", "auto"):
        try:
            series = extract_frames_mp4(data, include_overhead=args.include_overhead, source_id=source_id)
            if args.fps > 0:
                series = FrameSizeSeries(series.sizes, series.codec, args.fps, source_id)
            return series
        except NotMp4 as mp4_err:
            if container == "mp4":
                raise
            mp4_reason = str(mp4_err)
    else:
        mp4_reason = "not attempted"
    codec = Codec.AVC if args.codec == "avc" else Codec.HEVC if args.codec == "hevc" else None
    try:
        if codec is None:
            codec = detect_codec(data)
        return extract_frames_annexb(data, codec, fps=args.fps, source_id=source_id)
    except NoStartCode as annexb_err:
        if container == "annexb":
            raise
        raise NoStartCode(
            f"input is neither MP4 (container layer: {mp4_reason}) "
            f"nor Annex-B (stream layer: {annexb_err})"
        ) from annexb_err


def cmd_extract(args) -> int:
    with open(args.input, "rb") as fh:
        data = fh.read()
    series = _extract_series(data, args, source_id=os.path.basename(args.input))
    write_fsts(series, args.output)
    print(
        f"{args.input}: {len(series)} frames, {series.total_bits} bits"
        f" ({series.codec.name.lower()}), wrote {args.output}"
    )
    return 0


# --- gen ---------------------------------------------------------------------

def _dataset_to_fsts(ds: LabeledDataset, out_dir: str) -> list[tuple[str, str]]:
    rows = []
    for i, (series, idx) in enumerate(ds.items):
        label = ds.class_names[idx]
        sub = os.path.join(out_dir, label)
        os.makedirs(sub, exist_ok=True)
        rel = os.path.join(label, f"clip{i:05d}.fsts")
        write_fsts(series, os.path.join(out_dir, rel))
        rows.append((rel, label))
    return rows


def cmd_gen(args) -> int:
    ds = standard_benchmark(args.classes, args.clips, args.frames, args.seed)
    os.makedirs(args.output, exist_ok=True)
    rows = _dataset_to_fsts(ds, args.output)
    manifest = os.path.join(args.output, "manifest.csv")
    write_manifest(rows, manifest)
    written = [manifest]
    if args.split:
        fractions = tuple(float(f) for f in args.split.split(","))
        if len(fractions) != 3:
            raise FramescopeError("--split needs three comma-separated fractions")
        parts = split(ds, fractions, args.seed)
        row_of = {id(series): rel for rel, (series, _) in zip((r for r, _ in rows), ds.items)}
        for part, tag in zip(parts, ("train", "val", "test")):
            part_rows = [(row_of[id(s)], ds.class_names[i]) for s, i in part.items]
            path = os.path.join(args.output, f"manifest.{tag}.csv")
            write_manifest(part_rows, path)
            written.append(path)
    print(
        f"wrote {len(rows)} clips across {args.classes} classes to {args.output} "
        f"({', '.join(os.path.basename(w) for w in written)})"
    )
    return 0


# --- train -------------------------------------------------------------------

def _train_config(args) -> nn.TrainConfig:
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides.update(json.load(fh))
    for key, attr in (
        ("init_lr", "lr"),
        ("max_epochs", "epochs"),
        ("batch_size", "batch_size"),
        ("seed", "seed"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return nn.TrainConfig(**overrides)


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def cmd_train(args) -> int:
    ds = load_dataset(args.manifest)
    too_short = [s.source_id for s, _ in ds.items if len(s) < args.n_frames]
    if too_short:
        raise TooShort(
            f"{len(too_short)} of {len(ds)} clips are shorter than N={args.n_frames} "
            f"(first: {too_short[0]!r})"
        )
    prep = _prep_from_args(args, args.n_frames)
    cfg = _train_config(args)
    train_ds, val_ds = split_train_val(ds, args.val_fraction, cfg.seed)
    model = nn.build_model(
        ds.class_names,
        filters=_parse_ints(args.filters),
        kernels=_parse_ints(args.kernels),
        seed=cfg.seed,
    )
    model, history = nn.train(model, train_ds, val_ds, cfg, prep)
    nn.save_model(model, args.output)
    _write_rows(history.rows(), args.output + ".history.jsonl")
    best = history.best_epoch
    print(
        f"trained on {len(train_ds)} items, validated on {len(val_ds)}; "
        f"best epoch {best}: val_loss {history.val_loss[best]:.4f}, "
        f"val_accuracy {history.val_accuracy[best]:.4f}; wrote {args.output}"
    )
    return 0


# --- classify ------------------------------------------------------------------

def cmd_classify(args) -> int:
    model = nn.load_model(args.model)
    with open(args.input, "rb") as fh:
        head = fh.read(4)
    if head == b"FSTS":
        series = read_fsts(args.input)
    else:
        with open(args.input, "rb") as fh:
            data = fh.read()
        series = _extract_series(data, args, source_id=os.path.basename(args.input))
    n = args.n_frames if args.n_frames else len(series)
    vector = preprocess(series, _prep_from_args(args, n))
    name, probs = nn.predict(model, vector)
    print(f"{args.input}: {name}")
    for cls, p in sorted(zip(model.class_names, probs), key=lambda kv: -kv[1]):
        print(f"  {cls}: {p:.4f}")
    return 0


# --- eval ----------------------------------------------------------------------

def _check_class_tables(model_names: list[str], ds_names: list[str]) -> None:
    if model_names != ds_names:
        only_model = sorted(set(model_names) - set(ds_names))
        only_ds = sorted(set(ds_names) - set(model_names))
        raise FramescopeError(
            "class tables differ between model and manifest"
            f" (model-only: {only_model}, manifest-only: {only_ds})"
        )


def _model_predictions(model, ds: LabeledDataset, prep: PreprocessSpec) -> tuple[np.ndarray, np.ndarray, float]:
    x, y = prepare_matrix(ds, prep)
    xin = x[:, None, :].astype(model.dtype)
    start = time.perf_counter()
    probs = nn.batch_forward(model, xin)
    wall = time.perf_counter() - start
    return probs.argmax(axis=1), y, wall


def cmd_eval(args) -> int:
    model = nn.load_model(args.model)
    ds = load_dataset(args.manifest)
    _check_class_tables(model.class_names, ds.class_names)
    prep = _prep_from_args(args, args.n_frames)
    pred, truth, wall = _model_predictions(model, ds, prep)
    conf = confusion(truth, pred, ds.n_classes)
    frames = len(ds) * args.n_frames
    report = EvalReport(
        class_names=ds.class_names,
        confusion=conf,
        summary=metrics(conf),
        wall_time_seconds=wall,
        frames_processed=frames,
        real_time_factor=realtime_factor(len(ds), args.n_frames, args.fps, wall) if wall > 0 else 0.0,
    )
    rows = [dict(row, method="resnet") for row in report.rows()]
    print("== residual network ==")
    print(report.table())

    if args.baseline == "dtw":
        refs = load_dataset(args.baseline_train) if args.baseline_train else None
        start = time.perf_counter()
        dtw_pred = []
        cfg = DtwConfig()
        for i, (series, _) in enumerate(ds.items):
            query = preprocess(series, prep)
            if refs is not None:
                dtw_pred.append(knn_classify(refs, query, k=1, cfg=cfg, prep=prep))
            else:
                rest = LabeledDataset(
                    [item for j, item in enumerate(ds.items) if j != i], ds.class_names
                )
                dtw_pred.append(knn_classify(rest, query, k=1, cfg=cfg, prep=prep))
        dtw_wall = time.perf_counter() - start
        dtw_conf = confusion(truth, dtw_pred, ds.n_classes)
        ratio = dtw_wall / wall if wall > 0 else float("inf")
        dtw_report = EvalReport(
            class_names=ds.class_names,
            confusion=dtw_conf,
            summary=metrics(dtw_conf),
            wall_time_seconds=dtw_wall,
            frames_processed=frames,
            real_time_factor=realtime_factor(len(ds), args.n_frames, args.fps, dtw_wall)
            if dtw_wall > 0
            else 0.0,
            notes=[f"warping baseline is {ratio:.1f}x slower than the network"],
        )
        print("== 1-NN DTW baseline ==")
        print(dtw_report.table())
        rows += [dict(row, method="dtw_1nn") for row in dtw_report.rows()]
        rows.append({"record": "speed_ratio", "dtw_over_resnet": ratio})

    if args.rows:
        _write_rows(rows, args.rows)
    return 0


# --- kld -----------------------------------------------------------------------

def cmd_kld(args) -> int:
    ds = load_dataset(args.manifest)
    matrix = class_kld_matrix(ds, bins=args.bins, seed=args.seed)
    width = max(len(n) for n in matrix.class_names)
    print(f"{'':<{width}}  " + "  ".join(f"{n:>10}" for n in matrix.class_names))
    for i, name in enumerate(matrix.class_names):
        cells = "  ".join(f"{matrix.values[i, j]:10.4f}" for j in range(len(matrix.class_names)))
        print(f"{name:<{width}}  {cells}")
    ratio = matrix.inter_intra_ratio()
    print(f"median inter / median intra: {ratio:.1f}")
    if args.rows:
        rows = [
            {
                "record": "kld",
                "from": matrix.class_names[i],
                "to": matrix.class_names[j],
                "nats": float(matrix.values[i, j]),
                "kind": "intra" if i == j else "inter",
            }
            for i in range(len(matrix.class_names))
            for j in range(len(matrix.class_names))
        ]
        rows.append({"record": "summary", "inter_intra_ratio": ratio})
        _write_rows(rows, args.rows)
    return 0


# --- bench -----------------------------------------------------------------------

def cmd_bench(args) -> int:
    model = nn.load_model(args.model)
    ds = load_dataset(args.manifest)
    _check_class_tables(model.class_names, ds.class_names)
    prep = _prep_from_args(args, args.n_frames)
    x, _ = prepare_matrix(ds, prep)
    xin = x[:, None, :].astype(model.dtype)
    nn.batch_forward(model, xin[: min(4, len(ds))])  # warm-up
    timings = []
    for _ in range(args.repeat):
        start = time.perf_counter()
        nn.batch_forward(model, xin)
        timings.append(time.perf_counter() - start)
    median = float(np.median(timings))
    items_per_s = len(ds) / median
    frames_per_s = items_per_s * args.n_frames
    rtf = realtime_factor(len(ds), args.n_frames, args.fps, median)
    print(
        f"{len(ds)} items x {args.n_frames} frames, fps {args.fps}, repeats {args.repeat}\n"
        f"median wall time: {median:.4f}s  items/s: {items_per_s:.1f}  frames/s: {frames_per_s:.1f}\n"
        f"real-time factor = ({len(ds)} * {args.n_frames} / {args.fps}) / {median:.4f} = {rtf:.1f}"
    )
    if args.rows:
        _write_rows(
            [
                {
                    "record": "bench",
                    "items": len(ds),
                    "n_frames": args.n_frames,
                    "fps": args.fps,
                    "repeat": args.repeat,
                    "timings_seconds": timings,
                    "median_seconds": median,
                    "items_per_second": items_per_s,
                    "frames_per_second": frames_per_s,
                    "real_time_factor": rtf,
                }
            ],
            args.rows,
        )
    return 0


# --- parser ------------------------------------------------------------------------

def _add_norm(p):
    p.add_argument("--norm", choices=("zscore", "none"), default="zscore")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framescope",
        description="Classify compressed video from per-frame bitstream sizes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="video file -> FSTS series")
    p.add_argument("input")
    p.add_argument("--codec", choices=("avc", "hevc", "auto"), default="auto")
    p.add_argument("--container", choices=("annexb", "mp4", "auto"), default="auto")
    p.add_argument("--include-overhead", action="store_true",
                   help="spread MP4 container bytes across frames")
    p.add_argument("--fps", type=float, default=0.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("gen", help="write a synthetic benchmark dataset")
    p.add_argument("--classes", type=int, default=11)
    p.add_argument("--clips", type=int, default=20)
    p.add_argument("--frames", type=int, default=3000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default="", help="train,val,test fractions")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the classifier on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--n-frames", type=int, required=True)
    _add_norm(p)
    p.add_argument("--config", default="", help="JSON file with TrainConfig overrides")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--filters", default="256,512,512")
    p.add_argument("--kernels", default="8,5,3")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify one FSTS or video file")
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.add_argument("--n-frames", type=int, default=0, help="0 = use the full series")
    _add_norm(p)
    p.add_argument("--codec", choices=("avc", "hevc", "auto"), default="auto")
    p.add_argument("--container", choices=("annexb", "mp4", "auto"), default="auto")
    p.add_argument("--include-overhead", action="store_true")
    p.add_argument("--fps", type=float, default=0.0)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="evaluate a model against a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--n-frames", type=int, required=True)
    _add_norm(p)
    p.add_argument("--baseline", choices=("dtw", "none"), default="none")
    p.add_argument("--baseline-train", default="",
                   help="manifest of DTW reference items (default: leave-one-out)")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--rows", default="", help="write JSONL records here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("kld", help="inter/intra-class divergence matrix")
    p.add_argument("--manifest", required=True)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rows", default="")
    p.set_defaults(func=cmd_kld)

    p = sub.add_parser("bench", help="inference throughput benchmark")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--n-frames", type=int, required=True)
    _add_norm(p)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--rows", default="")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergedLoss as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FramescopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
