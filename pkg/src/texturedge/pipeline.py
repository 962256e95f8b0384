"""End-to-end orchestration: enhance -> ROI -> texture -> segment -> evaluate.

One JSON config document drives every stage; identical inputs and config
produce byte-identical output trees. Batch experiments aggregate per
tissue class, and ``bench`` times the naive vs. incremental map kernels
while insisting their outputs match exactly.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import segment as seg
from .enhance import ClaheParams, SradParams, clahe, srad
from .errors import (
    InternalInvariantError,
    MissingImageError,
    MissingRecordError,
    NoGroundTruthError,
)
from .evalmetrics import (
    EvalReport,
    RocCurve,
    circle_mask,
    confusion,
    metrics,
    roc_az,
    roc_points_csv,
)
from .imgio import MiasRecord, RoiCrop, RoiSpec, extract_roi, parse_mias_index, read_pgm, write_pgm
from .texture import (
    ANGLES,
    Descriptor,
    Offset,
    directional_sum,
    encode_texture_map,
    offsets_for_distance,
    quantize,
    texture_map_naive,
    texture_map_sliding,
    texture_map_to_gray,
)

DATASET_ENV_VAR = "TEXTUREDGE_MIAS_DIR"
_INDEX_CANDIDATES = ("Info.txt", "info.txt", "index.txt", "mias_index.txt")

THRESHOLD_METHODS = ("otsu", "fixed", "percentile")


@dataclass(frozen=True)
class ThresholdSpec:
    """Binarization rule: ``otsu``, ``fixed`` (value = threshold in map
    units), or ``percentile`` (value in [0, 100])."""

    method: str = "otsu"
    value: Optional[float] = None

    def __post_init__(self):
        if self.method not in THRESHOLD_METHODS:
            raise ValueError(f"unknown threshold method {self.method!r}")
        if self.method == "otsu" and self.value is not None:
            raise ValueError("otsu takes no value")
        if self.method in ("fixed", "percentile") and self.value is None:
            raise ValueError(f"{self.method} threshold needs a value")
        if self.method == "percentile" and not (0.0 <= self.value <= 100.0):
            raise ValueError(f"percentile must be in [0, 100], got {self.value}")


@dataclass(frozen=True)
class GlcmConfig:
    levels: int = 8
    window_side: int = 7
    distance: int = 1
    symmetric: bool = False


@dataclass(frozen=True)
class SegmentConfig:
    threshold_method: ThresholdSpec = field(default_factory=ThresholdSpec)
    close_radius: int = 3
    fill_holes: bool = True


@dataclass(frozen=True)
class RoiConfig:
    margin_factor: float = 1.5


@dataclass(frozen=True)
class EvalConfig:
    use_circle_proxy: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    srad: SradParams = field(default_factory=SradParams)
    clahe: ClaheParams = field(default_factory=ClaheParams)
    glcm: GlcmConfig = field(default_factory=GlcmConfig)
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    roi: RoiConfig = field(default_factory=RoiConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def to_dict(self) -> dict:
        region = self.srad.homogeneous_region
        return {
            "srad": {
                "iterations": self.srad.iterations,
                "time_step": self.srad.time_step,
                "q0_decay_rho": self.srad.q0_decay_rho,
                "homogeneous_region": list(region) if region is not None else None,
            },
            "clahe": {
                "clip_limit": self.clahe.clip_limit,
                "tiles_x": self.clahe.tiles_x,
                "tiles_y": self.clahe.tiles_y,
                "bins": self.clahe.bins,
            },
            "glcm": {
                "levels": self.glcm.levels,
                "window_side": self.glcm.window_side,
                "distance": self.glcm.distance,
                "symmetric": self.glcm.symmetric,
            },
            "segment": {
                "threshold_method": _threshold_to_dict(self.segment.threshold_method),
                "close_radius": self.segment.close_radius,
                "fill_holes": self.segment.fill_holes,
            },
            "roi": {"margin_factor": self.roi.margin_factor},
            "eval": {"use_circle_proxy": self.eval.use_circle_proxy},
        }


def _threshold_to_dict(t: ThresholdSpec) -> dict:
    d = {"method": t.method}
    if t.value is not None:
        d["value"] = t.value
    return d


def _threshold_from_dict(d) -> ThresholdSpec:
    if not isinstance(d, dict):
        raise ValueError(
            f"threshold_method must be an object like {{'method': 'otsu'}}, got {d!r}")
    return ThresholdSpec(method=d.get("method", "otsu"), value=d.get("value"))


def config_from_dict(d: dict) -> PipelineConfig:
    base = PipelineConfig().to_dict()
    unknown = set(d) - set(base)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    merged = {k: {**base[k], **d.get(k, {})} for k in base}
    for section, fields_ in merged.items():
        extra = set(fields_) - set(base[section])
        if extra:
            raise ValueError(f"unknown fields in {section!r}: {sorted(extra)}")
    region = merged["srad"]["homogeneous_region"]
    return PipelineConfig(
        srad=SradParams(
            iterations=merged["srad"]["iterations"],
            time_step=merged["srad"]["time_step"],
            q0_decay_rho=merged["srad"]["q0_decay_rho"],
            homogeneous_region=tuple(region) if region is not None else None,
        ),
        clahe=ClaheParams(**merged["clahe"]),
        glcm=GlcmConfig(**merged["glcm"]),
        segment=SegmentConfig(
            threshold_method=_threshold_from_dict(merged["segment"]["threshold_method"]),
            close_radius=merged["segment"]["close_radius"],
            fill_holes=merged["segment"]["fill_holes"],
        ),
        roi=RoiConfig(**merged["roi"]),
        eval=EvalConfig(**merged["eval"]),
    )


def serialize_config(config: PipelineConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_config(text: str) -> PipelineConfig:
    return config_from_dict(json.loads(text))


def load_config(path) -> PipelineConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Single-image pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PipelineResult:
    ref_id: str
    enhanced: np.ndarray
    roi: RoiCrop
    direction_maps: dict[int, np.ndarray]
    sum_map: np.ndarray
    threshold: float
    mask: np.ndarray
    contours: list[list[tuple[int, int]]]
    report: Optional[EvalReport]
    roc: Optional[RocCurve]
    eval_scope: str = "roi"


def _resolve_threshold(sum_map: np.ndarray, spec: ThresholdSpec) -> float:
    if spec.method == "otsu":
        return seg.otsu_threshold(sum_map)
    if spec.method == "fixed":
        return float(spec.value)
    return float(np.percentile(sum_map, spec.value))


def run_pipeline(image, record: MiasRecord,
                 config: PipelineConfig = PipelineConfig(),
                 out_dir=None, eval_full_image: bool = False) -> PipelineResult:
    """Run every stage on one image and, if ``out_dir`` is given, write the
    full artifact set under ``out_dir/<ref_id>/``.

    ``image`` may be a PGM path or a 2-D uint8 array. The record must carry
    circle geometry (it defines the ROI and the proxy ground truth);
    otherwise ``NoGroundTruthError`` is raised.

    Confusion metrics are taken over the ROI crop by default;
    ``eval_full_image=True`` scores the mask against the circle on the whole
    image instead (the ROC area always sweeps the crop, the only place
    texture scores exist).
    """
    if isinstance(image, (str, Path)):
        path = Path(image)
        if not path.is_file():
            raise MissingImageError(f"no image file at {path}")
        img = read_pgm(path)
    else:
        img = image
    if not record.has_geometry:
        raise NoGroundTruthError(
            f"record {record.ref_id} has no center/radius annotation")

    enhanced = clahe(srad(img, config.srad), config.clahe)
    roi_spec = RoiSpec.from_mias(record, img.shape[0], config.roi.margin_factor)
    crop = extract_roi(enhanced, roi_spec)

    q = quantize(crop.image, config.glcm.levels)
    offsets = offsets_for_distance(config.glcm.distance)
    direction_maps = {
        angle: texture_map_sliding(q, Descriptor.CONTRAST, config.glcm.window_side,
                                   offsets[angle], config.glcm.symmetric)
        for angle in ANGLES
    }
    sum_map = directional_sum([direction_maps[a] for a in ANGLES])

    threshold = _resolve_threshold(sum_map, config.segment.threshold_method)
    raw_mask = seg.binarize(sum_map, threshold)
    center_in_crop = (roi_spec.center_x - crop.x0, roi_spec.center_y - crop.y0)
    mask = seg.refine_mask(raw_mask, center_in_crop,
                           config.segment.close_radius, config.segment.fill_holes)
    contours = seg.trace_contour(mask)

    report = roc = None
    if config.eval.use_circle_proxy:
        truth = circle_mask(crop.width, crop.height,
                            center_in_crop[0], center_in_crop[1], record.radius)
        roc = roc_az(sum_map, truth)
        if eval_full_image:
            h, w = img.shape
            full_truth = circle_mask(w, h, roi_spec.center_x, roi_spec.center_y,
                                     record.radius)
            full_mask = np.zeros((h, w), dtype=bool)
            full_mask[crop.y0:crop.y0 + crop.height,
                      crop.x0:crop.x0 + crop.width] = mask
            report = metrics(confusion(full_mask, full_truth))
        else:
            report = metrics(confusion(mask, truth))

    result = PipelineResult(record.ref_id, enhanced, crop, direction_maps,
                            sum_map, threshold, mask, contours, report, roc,
                            "full" if eval_full_image else "roi")
    if out_dir is not None:
        write_artifacts(result, record, out_dir)
    return result


def _write_map_pgm(path: Path, m: np.ndarray) -> None:
    gray, lo, hi = texture_map_to_gray(m)
    write_pgm(path, gray)
    path.with_suffix(".minmax.txt").write_text(f"min {lo!r}\nmax {hi!r}\n")


def write_artifacts(result: PipelineResult, record: MiasRecord, out_dir) -> Path:
    """Deterministic artifact tree for one pipeline run."""
    dest = Path(out_dir) / result.ref_id
    dest.mkdir(parents=True, exist_ok=True)
    write_pgm(dest / "enhanced.pgm", result.enhanced)
    write_pgm(dest / "roi.pgm", result.roi.image)
    for angle in ANGLES:
        _write_map_pgm(dest / f"contrast_{angle}.pgm", result.direction_maps[angle])
    _write_map_pgm(dest / "contrast_sum.pgm", result.sum_map)
    (dest / "contrast_sum.f64").write_bytes(encode_texture_map(result.sum_map))
    write_pgm(dest / "mask.pgm", seg.mask_to_gray(result.mask))
    (dest / "contours.txt").write_text(seg.contours_to_text(result.contours))
    write_pgm(dest / "overlay.pgm", seg.make_overlay(result.roi.image, result.mask))
    if result.roc is not None:
        (dest / "roc_points.csv").write_text(roc_points_csv(result.roc))
    (dest / "report.json").write_text(_report_json(result, record))
    return dest


def _report_json(result: PipelineResult, record: MiasRecord) -> str:
    doc = {
        "ref_id": result.ref_id,
        "tissue": record.tissue,
        "abnormality": record.abnormality,
        "roi_offset": [result.roi.x0, result.roi.y0],
        "threshold": result.threshold,
    }
    if result.report is not None:
        doc.update(result.report.as_dict())
        doc["az"] = result.roc.az
        doc["eval_scope"] = result.eval_scope
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Batch experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentRow:
    ref_id: str
    tissue: str
    report: EvalReport
    az: float


_METRIC_FIELDS = ("dice", "precision", "recall", "specificity", "f_measure", "az")
CSV_COLUMNS = ("ref_id", "tissue", "tp", "fp", "fn", "tn") + _METRIC_FIELDS


def find_index_file(dataset_dir) -> Path:
    root = Path(dataset_dir)
    for name in _INDEX_CANDIDATES:
        candidate = root / name
        if candidate.is_file():
            return candidate
    raise MissingRecordError(
        f"no annotation index ({'/'.join(_INDEX_CANDIDATES)}) under {root}")


def run_experiment(dataset_dir, ids: Sequence[str],
                   config: PipelineConfig = PipelineConfig(),
                   out_dir=None, eval_full_image: bool = False) -> list[ExperimentRow]:
    """Run the pipeline for each id in a dataset directory.

    The directory must hold ``<id>.pgm`` images and an annotation index.
    When an id has several annotation lines, the first one carrying circle
    geometry is used. Rows come back sorted by ref_id; images are processed
    sequentially so output ordering never depends on scheduling.
    """
    if not config.eval.use_circle_proxy:
        raise ValueError("experiment rows need evaluation; enable eval.use_circle_proxy")
    root = Path(dataset_dir)
    records = parse_mias_index(find_index_file(root).read_text())
    by_id: dict[str, MiasRecord] = {}
    for rec in records:
        if rec.ref_id not in by_id or (not by_id[rec.ref_id].has_geometry and rec.has_geometry):
            by_id[rec.ref_id] = rec

    rows = []
    for ref in sorted(set(ids)):
        if ref not in by_id:
            raise MissingRecordError(f"no annotation record for id {ref!r}")
        image_path = root / f"{ref}.pgm"
        if not image_path.is_file():
            raise MissingImageError(f"no image file at {image_path}")
        result = run_pipeline(image_path, by_id[ref], config, out_dir=out_dir,
                              eval_full_image=eval_full_image)
        rows.append(ExperimentRow(ref, by_id[ref].tissue, result.report, result.roc.az))
    return rows


def tissue_aggregates(rows: Sequence[ExperimentRow]) -> dict[str, dict[str, float]]:
    """Mean of each metric per tissue class, keyed by tissue letter."""
    groups: dict[str, list[ExperimentRow]] = {}
    for row in rows:
        groups.setdefault(row.tissue, []).append(row)
    out = {}
    for tissue in sorted(groups):
        members = groups[tissue]
        agg = {}
        for name in _METRIC_FIELDS:
            values = [row.az if name == "az" else getattr(row.report, name)
                      for row in members]
            agg[name] = float(np.mean(values))
        agg["count"] = len(members)
        out[tissue] = agg
    return out


def _row_values(row: ExperimentRow) -> list:
    c = row.report.counts
    return [row.ref_id, row.tissue, c.tp, c.fp, c.fn, c.tn,
            repr(row.report.dice), repr(row.report.precision),
            repr(row.report.recall), repr(row.report.specificity),
            repr(row.report.f_measure), repr(row.az)]


def experiment_csv(rows: Sequence[ExperimentRow]) -> str:
    """CSV with one row per image plus per-tissue aggregate mean rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(_row_values(row))
    for tissue, agg in tissue_aggregates(rows).items():
        writer.writerow([f"mean:{tissue}", tissue, "", "", "", ""]
                        + [repr(agg[name]) for name in _METRIC_FIELDS])
    return buf.getvalue()


def experiment_jsonl(rows: Sequence[ExperimentRow]) -> str:
    lines = []
    for row in rows:
        doc = {"ref_id": row.ref_id, "tissue": row.tissue, "az": row.az}
        doc.update(row.report.as_dict())
        lines.append(json.dumps(doc, sort_keys=True))
    for tissue, agg in tissue_aggregates(rows).items():
        lines.append(json.dumps({"aggregate": tissue, **agg}, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Kernel benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    size: int
    window_side: int
    levels: int
    naive_seconds: float
    sliding_seconds: float
    equal: bool


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def bench(sizes: Sequence[int], window_sides: Sequence[int],
          levels_list: Sequence[int], repeats: int = 5, seed: int = 0) -> list[BenchRow]:
    """Median-of-N wall clock for both kernels on random images, plus an
    exact-equality verdict over all four direction offsets.

    Raises ``InternalInvariantError`` if the kernels ever disagree.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for size in sizes:
        img = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
        for window_side in window_sides:
            for levels in levels_list:
                q = quantize(img, levels)
                off = Offset(1, 0)
                naive_t = _median_time(
                    lambda: texture_map_naive(q, Descriptor.CONTRAST, window_side, off),
                    repeats)
                sliding_t = _median_time(
                    lambda: texture_map_sliding(q, Descriptor.CONTRAST, window_side, off),
                    repeats)
                equal = all(
                    np.array_equal(
                        texture_map_naive(q, Descriptor.CONTRAST, window_side, o),
                        texture_map_sliding(q, Descriptor.CONTRAST, window_side, o))
                    for o in offsets_for_distance(1).values())
                rows.append(BenchRow(size, window_side, levels, naive_t, sliding_t, equal))
                if not equal:
                    raise InternalInvariantError(
                        f"kernel outputs differ for size={size} "
                        f"window={window_side} levels={levels}")
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["size", "window_side", "levels",
                     "naive_seconds", "sliding_seconds", "equal"])
    for r in rows:
        writer.writerow([r.size, r.window_side, r.levels,
                         repr(r.naive_seconds), repr(r.sliding_seconds),
                         str(r.equal).lower()])
    return buf.getvalue()
