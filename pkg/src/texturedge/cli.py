"""Command-line interface.

Subcommands mirror the pipeline stages so each is independently runnable:
``enhance``, ``texture``, ``segment``, ``eval``, ``pipeline``,
``experiment``, and ``bench``.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable inputs,
missing records, degenerate data), 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import segment as seg
from .enhance import clahe, srad
from .errors import InternalInvariantError, MissingRecordError, TexturedgeError
from .evalmetrics import confusion, metrics, roc_az, roc_points_csv
from .imgio import parse_mias_index, read_pgm, write_pgm
from .pipeline import (
    DATASET_ENV_VAR,
    PipelineConfig,
    ThresholdSpec,
    bench,
    bench_csv,
    experiment_csv,
    experiment_jsonl,
    find_index_file,
    load_config,
    run_experiment,
    run_pipeline,
    serialize_config,
)
from .texture import (
    ANGLES,
    Descriptor,
    decode_texture_map,
    directional_sum,
    encode_texture_map,
    offsets_for_distance,
    quantize,
    texture_map_sliding,
    texture_map_to_gray,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _parse_threshold(text: str) -> ThresholdSpec:
    if text == "otsu":
        return ThresholdSpec("otsu")
    for name in ("fixed", "percentile"):
        if text.startswith(name + ":"):
            return ThresholdSpec(name, float(text[len(name) + 1:]))
    raise argparse.ArgumentTypeError(
        f"threshold must be 'otsu', 'fixed:T', or 'percentile:P', got {text!r}")


def _load_base_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return PipelineConfig()


_OVERRIDES = (
    # (flag dest, config section, field)
    ("srad_iterations", "srad", "iterations"),
    ("srad_time_step", "srad", "time_step"),
    ("clahe_clip", "clahe", "clip_limit"),
    ("levels", "glcm", "levels"),
    ("window", "glcm", "window_side"),
    ("distance", "glcm", "distance"),
    ("symmetric", "glcm", "symmetric"),
    ("threshold", "segment", "threshold_method"),
    ("close_radius", "segment", "close_radius"),
    ("margin", "roi", "margin_factor"),
)


def _apply_overrides(config: PipelineConfig, args) -> PipelineConfig:
    for dest, section, fieldname in _OVERRIDES:
        value = getattr(args, dest, None)
        if value is None:
            continue
        updated = dataclasses.replace(getattr(config, section), **{fieldname: value})
        config = dataclasses.replace(config, **{section: updated})
    if getattr(args, "no_fill_holes", False):
        config = dataclasses.replace(
            config, segment=dataclasses.replace(config.segment, fill_holes=False))
    return config


def _add_config_flags(p: argparse.ArgumentParser, *, glcm=False, srad_clahe=False,
                      segmenting=False, roi=False):
    p.add_argument("--config", help="pipeline config JSON file")
    if srad_clahe:
        p.add_argument("--srad-iterations", type=int)
        p.add_argument("--srad-time-step", type=float)
        p.add_argument("--clahe-clip", type=float, dest="clahe_clip")
    if glcm:
        p.add_argument("--levels", type=int)
        p.add_argument("--window", type=int)
        p.add_argument("--distance", type=int)
        p.add_argument("--symmetric", action="store_const", const=True, default=None)
    if segmenting:
        p.add_argument("--threshold", type=_parse_threshold)
        p.add_argument("--close-radius", type=int, dest="close_radius")
        p.add_argument("--no-fill-holes", action="store_true")
    if roi:
        p.add_argument("--margin", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="texturedge",
                     description="Texture-based mammographic mass segmentation")
    parser.add_argument("--print-defaults", action="store_true",
                        help="print the default config JSON and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("enhance", help="SRAD + CLAHE on a whole image")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    _add_config_flags(p, srad_clahe=True)

    p = sub.add_parser("texture", help="direction contrast maps of a ROI image")
    p.add_argument("-i", "--input", required=True, help="ROI image (PGM)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--descriptor", default="contrast",
                   choices=[d.value for d in Descriptor])
    _add_config_flags(p, glcm=True)

    p = sub.add_parser("segment", help="mask + contours from a texture map")
    p.add_argument("-i", "--input", required=True, help="texture map (.f64)")
    p.add_argument("--center", required=True, help="mass center as X,Y in map coords")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p, segmenting=True)

    p = sub.add_parser("eval", help="metrics of a predicted mask vs. a reference mask")
    p.add_argument("--pred", required=True, help="predicted mask (0/255 PGM)")
    p.add_argument("--truth", required=True, help="reference mask (0/255 PGM)")
    p.add_argument("--scores", help="texture map (.f64) for the ROC area")
    p.add_argument("--roc-csv", help="also dump the ROC points as CSV here")
    p.add_argument("-o", "--output", help="write the report JSON here instead of stdout")

    p = sub.add_parser("pipeline", help="full run on one annotated image")
    p.add_argument("--image", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--record", help="annotation line, e.g. 'mdb005 F CIRC B 477 133 30'")
    group.add_argument("--id", dest="ref_id", help="record id resolved from --dataset")
    p.add_argument("--dataset", help=f"dataset dir (default ${DATASET_ENV_VAR})")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--eval-full-image", action="store_true",
                   help="score the mask over the whole image, not just the ROI crop")
    _add_config_flags(p, glcm=True, srad_clahe=True, segmenting=True, roi=True)

    p = sub.add_parser("experiment", help="batch run over dataset ids")
    p.add_argument("--dataset", help=f"dataset dir (default ${DATASET_ENV_VAR})")
    p.add_argument("--ids", nargs="*", default=[], help="record ids (empty: no rows)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--eval-full-image", action="store_true",
                   help="score masks over whole images, not just ROI crops")
    _add_config_flags(p, glcm=True, srad_clahe=True, segmenting=True, roi=True)

    p = sub.add_parser("bench", help="time the naive vs. sliding map kernels")
    p.add_argument("--sizes", type=_int_list, default=[64, 128])
    p.add_argument("--windows", type=_int_list, default=[3, 7, 9])
    p.add_argument("--levels", type=_int_list, default=[8])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("-o", "--output", help="write the CSV here instead of stdout")

    return parser


def _dataset_dir(args) -> Path:
    value = getattr(args, "dataset", None) or os.environ.get(DATASET_ENV_VAR)
    if not value:
        raise ValueError(
            f"no dataset directory: pass --dataset or set ${DATASET_ENV_VAR}")
    return Path(value)


def _cmd_enhance(args) -> int:
    config = _apply_overrides(_load_base_config(args), args)
    img = read_pgm(args.input)
    write_pgm(args.output, clahe(srad(img, config.srad), config.clahe))
    return EXIT_OK


def _cmd_texture(args) -> int:
    config = _apply_overrides(_load_base_config(args), args)
    img = read_pgm(args.input)
    q = quantize(img, config.glcm.levels)
    offsets = offsets_for_distance(config.glcm.distance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.descriptor
    maps = []
    for angle in ANGLES:
        m = texture_map_sliding(q, args.descriptor, config.glcm.window_side,
                                offsets[angle], config.glcm.symmetric)
        maps.append(m)
        _write_map(out / f"{name}_{angle}.pgm", m)
    total = directional_sum(maps)
    _write_map(out / f"{name}_sum.pgm", total)
    (out / f"{name}_sum.f64").write_bytes(encode_texture_map(total))
    return EXIT_OK


def _write_map(path: Path, m) -> None:
    gray, lo, hi = texture_map_to_gray(m)
    write_pgm(path, gray)
    path.with_suffix(".minmax.txt").write_text(f"min {lo!r}\nmax {hi!r}\n")


def _cmd_segment(args) -> int:
    config = _apply_overrides(_load_base_config(args), args)
    sum_map = decode_texture_map(Path(args.input).read_bytes())
    cx, cy = (float(tok) for tok in args.center.split(","))
    spec = config.segment.threshold_method
    if spec.method == "otsu":
        threshold = seg.otsu_threshold(sum_map)
    elif spec.method == "fixed":
        threshold = float(spec.value)
    else:
        threshold = float(np.percentile(sum_map, spec.value))
    mask = seg.refine_mask(seg.binarize(sum_map, threshold), (cx, cy),
                           config.segment.close_radius, config.segment.fill_holes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(out / "mask.pgm", seg.mask_to_gray(mask))
    (out / "contours.txt").write_text(seg.contours_to_text(seg.trace_contour(mask)))
    print(f"threshold {threshold!r}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    pred = read_pgm(args.pred) >= 128
    truth = read_pgm(args.truth) >= 128
    report = metrics(confusion(pred, truth))
    doc = report.as_dict()
    if args.scores:
        scores = decode_texture_map(Path(args.scores).read_bytes())
        curve = roc_az(scores, truth)
        doc["az"] = curve.az
        if args.roc_csv:
            Path(args.roc_csv).write_text(roc_points_csv(curve))
    elif args.roc_csv:
        raise ValueError("--roc-csv needs --scores")
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _record_for(args):
    if args.record is not None:
        records = parse_mias_index(args.record)
        if not records:
            raise ValueError("--record is empty")
        return records[0]
    root = _dataset_dir(args)
    records = parse_mias_index(find_index_file(root).read_text())
    matches = [r for r in records if r.ref_id == args.ref_id]
    if not matches:
        raise MissingRecordError(f"no annotation record for id {args.ref_id!r}")
    with_geometry = [r for r in matches if r.has_geometry]
    return with_geometry[0] if with_geometry else matches[0]


def _cmd_pipeline(args) -> int:
    config = _apply_overrides(_load_base_config(args), args)
    record = _record_for(args)
    result = run_pipeline(args.image, record, config, out_dir=args.out,
                          eval_full_image=args.eval_full_image)
    if result.report is not None:
        print(f"{record.ref_id} dice {result.report.dice!r} az {result.roc.az!r}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    config = _apply_overrides(_load_base_config(args), args)
    root = _dataset_dir(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_experiment(root, args.ids, config, out_dir=out,
                          eval_full_image=args.eval_full_image)
    (out / "report.csv").write_text(experiment_csv(rows))
    (out / "report.jsonl").write_text(experiment_jsonl(rows))
    for row in rows:
        print(f"{row.ref_id} {row.tissue} dice {row.report.dice!r} az {row.az!r}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    rows = bench(args.sizes, args.windows, args.levels, repeats=args.repeats)
    text = bench_csv(rows)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {
    "enhance": _cmd_enhance,
    "texture": _cmd_texture,
    "segment": _cmd_segment,
    "eval": _cmd_eval,
    "pipeline": _cmd_pipeline,
    "experiment": _cmd_experiment,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        sys.stdout.write(serialize_config(PipelineConfig()))
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except InternalInvariantError as exc:
        print(f"texturedge: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (TexturedgeError, OSError) as exc:
        print(f"texturedge: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, TypeError) as exc:
        print(f"texturedge: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
