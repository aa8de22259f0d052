"""Command line front end.

Exit codes: 0 success, 2 input or load error, 3 dimension mismatch,
4 training diverged.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import UnidentifiedImageError
from sklearn.metrics import confusion_matrix

from .config import PipelineConfig
from .context import N_CONTEXTS, Context, ContextClassifier, load_model, save_model
from .core import check_same_shape
from .dataset import (
    build_context_dataset,
    decode_label_png,
    load_context_mapping,
    load_corpus,
    load_rgb_image,
    save_saliency_png,
)
from .exceptions import DimensionMismatch, DivergedLoss, SaliencyError
from .pipeline import run_pipeline
from .semantic import load_lut_bank

logger = logging.getLogger("ctxsal")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIMENSION = 3
EXIT_DIVERGED = 4

_INPUT_ERRORS = (SaliencyError, OSError, UnidentifiedImageError, ValueError)


class CommandError(Exception):
    def __init__(self, message, status=EXIT_INPUT):
        super().__init__(message)
        self.status = status


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    elif text:
        print(text)


def _resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {"model": args.model, "lut_bank": args.lut_bank}
    if args.no_center_prior:
        overrides["center_prior"] = False
    if args.no_smooth:
        overrides["smooth"] = False
    if getattr(args, "lut", None) is not None:
        overrides["user_lut"] = args.lut == "user"
    return cfg.updated(overrides, source="command line")


def _load_pipeline_inputs(cfg: PipelineConfig):
    if not cfg.model:
        raise CommandError("no context model given (use --model or `model =` in the config)")
    try:
        model = load_model(cfg.model)
    except _INPUT_ERRORS as exc:
        raise CommandError(f"cannot load model {cfg.model}: {exc}") from exc
    try:
        bank = load_lut_bank(cfg.lut_bank)
    except _INPUT_ERRORS as exc:
        raise CommandError(f"cannot load LUT bank {cfg.lut_bank}: {exc}") from exc
    if cfg.user_lut and bank.user is None:
        raise CommandError(
            f"MissingUserLut: --lut user requested but LUT bank "
            f"{cfg.lut_bank or '(default)'} has no [user] section"
        )
    return model, bank


def cmd_saliency(args) -> int:
    cfg = _resolve_config(args)
    model, bank = _load_pipeline_inputs(cfg)
    try:
        image = load_rgb_image(args.image)
    except _INPUT_ERRORS as exc:
        raise CommandError(f"cannot read image {args.image}: {exc}") from exc
    try:
        labels = decode_label_png(args.labels)
    except _INPUT_ERRORS as exc:
        raise CommandError(f"cannot read label map {args.labels}: {exc}") from exc
    try:
        check_same_shape(image, labels, names=(str(args.image), str(args.labels)))
    except DimensionMismatch as exc:
        raise CommandError(str(exc), EXIT_DIMENSION) from exc

    result = run_pipeline(image, labels, cfg, model, bank)

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "final.png"]
    save_saliency_png(result.final, written[0])
    if args.intermediates:
        for name, values in result.intermediates().items():
            path = out_dir / f"{name}.png"
            save_saliency_png(values, path)
            written.append(path)
    _emit(args, {"context": result.context.label, "files": [str(p) for p in written]},
          result.context.label)
    return EXIT_OK


def _load_dataset(args, split):
    try:
        corpus = load_corpus(args.root, split)
        mapping = load_context_mapping(args.mapping)
        dataset = build_context_dataset(corpus, mapping, n_jobs=args.jobs or 1)
    except _INPUT_ERRORS as exc:
        raise CommandError(str(exc)) from exc
    if not len(dataset):
        raise CommandError(f"split {split!r} under {args.root} is empty")
    return corpus, dataset


def cmd_train_context(args) -> int:
    corpus, dataset = _load_dataset(args, args.split)
    logger.info("%s", corpus.count_report())
    logger.info("context counts vs reference:\n%s", dataset.count_report())

    def report(epoch, loss, acc):
        if not args.json:
            print(f"epoch {epoch} loss {loss:.6f} accuracy {acc:.4f}")

    model = ContextClassifier(learning_rate=args.learning_rate, epochs=args.epochs,
                              batch_size=args.batch_size, random_state=args.seed)
    try:
        model.fit(dataset.X, dataset.y, epoch_callback=report)
    except DivergedLoss as exc:
        raise CommandError(f"training diverged: {exc}", EXIT_DIVERGED) from exc

    save_model(model, args.output)
    if args.history:
        with open(args.history, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "loss", "accuracy"])
            writer.writerows((e, repr(loss), repr(acc)) for e, loss, acc in model.history_)
    _emit(
        args,
        {"split": args.split, "images": len(dataset), "train_accuracy": model.train_accuracy_,
         "final_loss": model.history_[-1][1], "model": str(args.output),
         "context_counts": {c.label: n for c, n in dataset.context_counts().items()}},
        f"final train accuracy {model.train_accuracy_:.4f} on {len(dataset)} images",
    )
    return EXIT_OK


def cmd_eval_context(args) -> int:
    if not args.model:
        raise CommandError("--model is required")
    try:
        model = load_model(args.model)
    except _INPUT_ERRORS as exc:
        raise CommandError(f"cannot load model {args.model}: {exc}") from exc
    _, dataset = _load_dataset(args, args.split)
    pred = model.predict(dataset.X)
    accuracy = float(np.mean(pred == dataset.y))
    cm = confusion_matrix(dataset.y, pred, labels=list(range(N_CONTEXTS)))

    names = [c.label for c in Context]
    width = max(map(len, names)) + 2
    lines = [f"accuracy {accuracy:.4f} on {len(dataset)} images ({args.split})",
             "rows: true context, columns: predicted",
             " " * width + "".join(f"{n:>{width}}" for n in names)]
    for name, row in zip(names, cm):
        lines.append(f"{name:<{width}}" + "".join(f"{v:>{width}d}" for v in row))
    _emit(args, {"split": args.split, "images": len(dataset), "accuracy": accuracy,
                 "contexts": names, "confusion_matrix": cm.tolist()}, "\n".join(lines))
    return EXIT_OK


def _batch_one(entry, cfg, model, bank, out_dir) -> str | None:
    """Process one corpus entry; returns an error message or None."""
    try:
        image = load_rgb_image(entry.image_path)
        labels = decode_label_png(entry.label_path)
        result = run_pipeline(image, labels, cfg, model, bank)
        save_saliency_png(result.final, out_dir / f"{entry.id}_saliency.png")
    except _INPUT_ERRORS as exc:
        return f"{entry.id}: {exc}"
    return None


def cmd_batch(args) -> int:
    cfg = _resolve_config(args)
    model, bank = _load_pipeline_inputs(cfg)
    try:
        corpus = load_corpus(args.root, args.split)
    except _INPUT_ERRORS as exc:
        raise CommandError(str(exc)) from exc
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = args.jobs or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        errors = list(pool.map(lambda e: _batch_one(e, cfg, model, bank, out_dir), corpus.entries))
    failures = [msg for msg in errors if msg is not None]
    for msg in failures:
        logger.error("skipped %s", msg)
    ok = len(errors) - len(failures)
    _emit(args, {"ok": ok, "failed": len(failures), "errors": failures},
          f"{ok} ok, {len(failures)} failed")
    return EXIT_INPUT if failures and ok == 0 else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="pipeline config file of key = value lines")
    shared.add_argument("--model", help="context model file")
    shared.add_argument("--lut-bank", help="LUT bank file (default: packaged defaults)")
    shared.add_argument("--mapping", help="class -> context mapping file")
    shared.add_argument("--seed", type=int, default=0, help="training seed (default 0)")
    shared.add_argument("--intermediates", action="store_true",
                        help="also write the contrast, color, semantic and fused maps")
    shared.add_argument("--no-center-prior", action="store_true")
    shared.add_argument("--no-smooth", action="store_true")
    shared.add_argument("--jobs", type=int, default=None, help="worker threads")
    shared.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ctxsal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saliency", parents=[shared], help="saliency map for one image")
    p.add_argument("image")
    p.add_argument("labels", help="palette-indexed label PNG")
    p.add_argument("-o", "--output-dir", default=".")
    p.add_argument("--lut", choices=("context", "user"), default=None,
                   help="LUT selection: detected context (default) or the user LUT")
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("train-context", parents=[shared], help="train the context classifier")
    p.add_argument("root", help="VOC-layout corpus root")
    p.add_argument("--split", default="train")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--history", help="write epoch,loss,accuracy CSV here")
    p.set_defaults(func=cmd_train_context)

    p = sub.add_parser("eval-context", parents=[shared], help="evaluate a context model")
    p.add_argument("root")
    p.add_argument("--split", default="val")
    p.set_defaults(func=cmd_eval_context)

    p = sub.add_parser("batch", parents=[shared], help="saliency maps for a whole split")
    p.add_argument("root")
    p.add_argument("--split", default="val")
    p.add_argument("-o", "--output-dir", required=True)
    p.add_argument("--lut", choices=("context", "user"), default=None)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="ctxsal: %(levelname)s: %(message)s", stream=sys.stderr,
                        force=True)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"ctxsal {args.command}: {exc}", file=sys.stderr)
        return exc.status
    except SaliencyError as exc:
        print(f"ctxsal {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
