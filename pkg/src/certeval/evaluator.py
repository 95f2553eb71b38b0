"""
Evaluation runs over a corpus of predicted maps and expert maps.

Per (image, expert) pair the evaluator accumulates a confusion matrix and
scores the deduced segmentation; matrices are merged and normalized once at the
end, segmentation scores are aggregated weighted by image size.
"""

import asyncio
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .boundary import (
    boundary_image,
    extract_predicted_boundary,
    extract_reference_boundary,
    format_boundary_grid,
)
from .confusion import (
    ConfusionMatrix,
    accumulate_image,
    ecr,
    fraction_entry,
    gcr,
    merge,
    normalize,
)
from .direction import DEFAULT_BD_EPS, GvfConfig, VectorField, bd, gradient, gvf, write_field
from .errors import InputError
from .labels import CertaintyScheme, ClassMap, ExpertMap, Tiling
from .matching import (
    DEFAULT_EXPONENT,
    DIRECTIONAL_VARIANTS,
    VARIANTS,
    SegScores,
    aggregate,
    match,
    score_segmentation,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalRun:
    """
    Everything needed to evaluate one corpus.

    Attributes:
        images: (ClassMap path, ExpertMap paths) per image
        tiling: classification units
        scheme: certainty weights
        variants: segmentation measure variants to report
        a: WDC exponent
        gvf: GVF solver settings
        bd_eps: zero-magnitude guard of BD
        bd_compat: normalize GVF BD by gradient magnitudes
        ecr_with_unmodeled: include the unmodeled row in the ECR
        allow_reject: accept predicted class 0 as a reject decision
        workers: images evaluated concurrently
        output: report path (None: no file)
        dump_dir: directory for boundary grids and direction fields
    """

    images: Tuple[Tuple[str, Tuple[str, ...]], ...]
    tiling: Tiling = field(default_factory=lambda: Tiling(32))
    scheme: CertaintyScheme = field(default_factory=CertaintyScheme.default)
    variants: Tuple[str, ...] = ("plain", "nef", "gvf")
    a: Fraction = DEFAULT_EXPONENT
    gvf: GvfConfig = field(default_factory=GvfConfig)
    bd_eps: float = DEFAULT_BD_EPS
    bd_compat: bool = False
    ecr_with_unmodeled: bool = False
    allow_reject: bool = False
    workers: int = 1
    output: Optional[str] = None
    dump_dir: Optional[str] = None
    cache: object = field(default=None, compare=False)

    def __post_init__(self):
        images = tuple((str(pred), tuple(str(e) for e in experts)) for pred, experts in self.images)
        if not images:
            raise InputError("an evaluation run needs at least one image")
        for pred, experts in images:
            if not experts:
                raise InputError(f"image {pred} has no expert map")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown or not self.variants:
            raise InputError(f"unknown measure variants {unknown}; expected some of {', '.join(VARIANTS)}")
        if self.workers < 1:
            raise InputError(f"workers must be >= 1, got {self.workers}")
        if Fraction(self.a) <= 0:
            raise InputError(f"the WDC exponent must be positive, got {self.a}")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "variants", tuple(dict.fromkeys(self.variants)))
        object.__setattr__(self, "a", Fraction(self.a))


@dataclass
class PairResult:
    """Outcome for one (image, expert) pair."""

    pred_path: str
    expert_path: str
    pixels: int
    cm: ConfusionMatrix
    scores: Dict[str, SegScores]

    def to_dict(self) -> dict:
        return {
            "pred": self.pred_path,
            "expert": self.expert_path,
            "pixels": self.pixels,
            "scores": [self.scores[v].to_dict() for v in self.scores],
        }


@dataclass
class Report:
    """Confusion block, segmentation block and run metadata."""

    confusion: dict
    segmentation: dict
    meta: dict

    def to_dict(self) -> dict:
        return {"meta": self.meta, "confusion": self.confusion, "segmentation": self.segmentation}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_json())
        return path


def _load_corpus(run: EvalRun) -> List[Tuple[str, ClassMap, List[Tuple[str, ExpertMap]]]]:
    """Parse every file up front in sorted order so the first bad file is reported."""
    from utils.map_parser import MapParser

    corpus = []
    for pred_path, expert_paths in sorted(run.images):
        pred = MapParser.read_class_map(pred_path)
        experts = []
        for expert_path in sorted(expert_paths):
            expert = MapParser.read_expert_map(expert_path)
            pred.check_against(expert, expert_path)
            experts.append((expert_path, expert))
        corpus.append((pred_path, pred, experts))
    return corpus


def _slug(path: str) -> str:
    return Path(path).stem


def _direction_fields(image: np.ndarray, variant: str, run: EvalRun) -> Tuple[VectorField, VectorField]:
    """(field used for direction, gradient) of one boundary image."""
    g = gradient(image)
    if variant == "grad":
        return g, g
    return gvf(image, run.gvf, run.cache), g


def _evaluate_image(
    run: EvalRun, num_classes: int, pred_path: str, pred: ClassMap, experts: List[Tuple[str, ExpertMap]]
) -> List[PairResult]:
    found = extract_predicted_boundary(pred)
    found_image = boundary_image(found)
    pixels = pred.height * pred.width
    dump_dir = Path(run.dump_dir) if run.dump_dir else None
    if dump_dir:
        dump_dir.mkdir(parents=True, exist_ok=True)
        (dump_dir / f"{_slug(pred_path)}.found.ubm").write_text(format_boundary_grid(found), encoding="ascii")

    variants = run.variants
    if pred.height < 2 or pred.width < 2:
        variants = tuple(v for v in run.variants if v not in DIRECTIONAL_VARIANTS)
        skipped = [v for v in run.variants if v in DIRECTIONAL_VARIANTS]
        if skipped:
            logger.warning(
                f"⚠️ {pred_path} is {pred.height}x{pred.width}, too small for direction fields; "
                f"skipping {', '.join(skipped)}"
            )

    found_fields = {}
    for variant in variants:
        if variant in DIRECTIONAL_VARIANTS and len(found):
            found_fields[variant] = _direction_fields(found_image, variant, run)
            if dump_dir:
                write_field(dump_dir / f"{_slug(pred_path)}.found.{variant}.uvf", found_fields[variant][0])

    results = []
    for expert_path, expert in experts:
        cm = accumulate_image(
            ConfusionMatrix.zeros(num_classes), expert, pred, run.tiling, run.scheme,
            allow_reject=run.allow_reject, source=expert_path,
        )
        ref = extract_reference_boundary(expert, run.scheme)
        table = match(found, ref) if len(found) and len(ref) else None
        if dump_dir:
            (dump_dir / f"{_slug(expert_path)}.ref.ubm").write_text(format_boundary_grid(ref), encoding="ascii")

        scores = {}
        for variant in variants:
            bd_grid = None
            if variant in DIRECTIONAL_VARIANTS and table is not None:
                ref_field, ref_grad = _direction_fields(boundary_image(ref), variant, run)
                found_field, found_grad = found_fields[variant]
                if dump_dir:
                    write_field(dump_dir / f"{_slug(expert_path)}.ref.{variant}.uvf", ref_field)
                if variant == "gvf" and run.bd_compat:
                    bd_grid = bd(ref_field, found_field, run.bd_eps, ref_grad, found_grad)
                else:
                    bd_grid = bd(ref_field, found_field, run.bd_eps)
            scores[variant] = score_segmentation(found, ref, variant, run.a, bd_grid, table)
        results.append(PairResult(pred_path, expert_path, pixels, cm, scores))

    logger.info(f"🖼️ Evaluated {pred_path} against {len(experts)} expert map(s)")
    return results


async def _evaluate_corpus(run: EvalRun, num_classes: int, corpus) -> List[List[PairResult]]:
    semaphore = asyncio.Semaphore(run.workers)

    async def one(pred_path, pred, experts):
        async with semaphore:
            return await asyncio.to_thread(_evaluate_image, run, num_classes, pred_path, pred, experts)

    return await asyncio.gather(*(one(*item) for item in corpus))


def _pct(values: Sequence[float]) -> List[float]:
    return [round(float(v) * 100.0, 2) for v in values]


def _confusion_block(run: EvalRun, cm: ConfusionMatrix) -> dict:
    ncm = normalize(cm)
    gcr_vec = gcr(ncm)
    if cm.num_classes >= 2:
        ecr_vec = ecr(ncm, with_unmodeled=run.ecr_with_unmodeled)
    else:
        logger.warning("⚠️ Single-class corpus: the error classification rate is undefined")
        ecr_vec = None
    normalized = ncm.to_dict()
    return {
        "num_classes": cm.num_classes,
        "row_labels": [str(i) for i in range(1, cm.num_classes + 1)] + ["unmodeled"],
        "cm": cm.to_dict(),
        "Ncm": normalized["Ncm"],
        "row_totals": normalized["row_totals"],
        "gcr": [float(v) for v in gcr_vec],
        "gcr_pct": _pct(gcr_vec),
        "ecr": None if ecr_vec is None else [float(v) for v in ecr_vec],
        "ecr_pct": None if ecr_vec is None else _pct(ecr_vec),
        "rejected_mass": fraction_entry(cm.rejected_mass),
        "flags": {"not_evaluated_rows": normalized["not_evaluated_rows"]},
    }


def _segmentation_block(run: EvalRun, pairs: List[PairResult]) -> dict:
    aggregates = {}
    for variant in run.variants:
        scored = [p.scores[variant] for p in pairs if variant in p.scores]
        if scored:
            aggregates[variant] = aggregate(scored).to_dict()
    return {"per_image": [p.to_dict() for p in pairs], "aggregate": aggregates}


def _meta(run: EvalRun, pairs: List[PairResult]) -> dict:
    return {
        "tool": "certeval",
        "version": __version__,
        "scheme": run.scheme.describe(),
        "tiling": {"size": run.tiling.size, "step": run.tiling.step, "anchor": list(run.tiling.anchor)},
        "a": f"{run.a.numerator}/{run.a.denominator}",
        "variants": list(run.variants),
        "gvf": {
            "mu": run.gvf.mu,
            "dt": run.gvf.dt,
            "max_iterations": run.gvf.max_iterations,
            "tolerance": run.gvf.tolerance,
        },
        "bd": {"eps": run.bd_eps, "compat": run.bd_compat},
        "ecr_mode": "with-unmodeled" if run.ecr_with_unmodeled else "modeled",
        "allow_reject": run.allow_reject,
        "seeds": None,
        "images": len(run.images),
        "pairs": len(pairs),
    }


def run_eval(run: EvalRun) -> Report:
    """
    Evaluate a corpus.

    Returns:
        Report; identical inputs give a byte-identical JSON rendering whatever the
        order of images and experts in ``run``
    """
    logger.info(f"🔍 Evaluating {len(run.images)} image(s), variants: {', '.join(run.variants)}")
    corpus = _load_corpus(run)
    num_classes = max(
        max([pred.num_classes] + [expert.num_classes for _, expert in experts])
        for _, pred, experts in corpus
    )

    per_image = asyncio.run(_evaluate_corpus(run, num_classes, corpus))
    pairs = sorted(
        (pair for group in per_image for pair in group),
        key=lambda p: (p.pred_path, p.expert_path),
    )

    merged = merge([p.cm for p in pairs])
    report = Report(
        confusion=_confusion_block(run, merged),
        segmentation=_segmentation_block(run, pairs),
        meta=_meta(run, pairs),
    )

    if run.output:
        path = report.write(run.output)
        logger.info(f"📄 Report written to {path}")
    return report


def render_text(report: Union[Report, dict]) -> str:
    """Human-readable report: percentage matrix, rate vectors and segmentation scores."""
    data = report.to_dict() if isinstance(report, Report) else report
    conf = data["confusion"]
    lines = ["Normalized confusion matrix (%)"]
    header = "".join(f"{label:>10}" for label in conf["row_labels"][:-1])
    lines.append(f"{'':>10}{header}")
    for label, row in zip(conf["row_labels"], conf["Ncm"]):
        cells = "".join(f"{entry['value'] * 100:>10.2f}" for entry in row)
        lines.append(f"{label:>10}{cells}")
    lines.append("")
    lines.append("GCR (%): [" + " ".join(f"{v:.2f}" for v in conf["gcr_pct"]) + "]")
    if conf["ecr_pct"] is not None:
        lines.append("ECR (%): [" + " ".join(f"{v:.2f}" for v in conf["ecr_pct"]) + "]")
    if conf["flags"]["not_evaluated_rows"]:
        lines.append("Not evaluated rows: " + ", ".join(str(r) for r in conf["flags"]["not_evaluated_rows"]))
    lines.append("")
    lines.append(f"{'variant':>10}{'WDC %':>10}{'FD %':>10}{'WDC raw':>12}")
    for variant, agg in data["segmentation"]["aggregate"].items():
        lines.append(f"{variant:>10}{agg['wdc_pct']:>10.2f}{agg['fd_pct']:>10.2f}{agg['wdc_raw']:>12.6f}")
    return "\n".join(lines) + "\n"


def _mean_std(values: Sequence[float]) -> Dict[str, float]:
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {"mean": round(float(arr.mean()), 2), "std": round(std, 2), "n": int(arr.size)}


def summarize_reports(reports: Sequence[dict]) -> dict:
    """
    Mean and sample standard deviation across several reports (e.g. repeated
    random partitions of a database), in percent.
    """
    reports = list(reports)
    if not reports:
        raise InputError("nothing to summarize")

    variants = {}
    for report in reports:
        for variant, agg in report["segmentation"]["aggregate"].items():
            entry = variants.setdefault(variant, {"wdc": [], "fd": []})
            entry["wdc"].append(agg["wdc_pct"])
            entry["fd"].append(agg["fd_pct"])

    def vector_stats(key: str) -> Optional[dict]:
        vectors = [r["confusion"][key] for r in reports if r["confusion"].get(key) is not None]
        if not vectors or len({len(v) for v in vectors}) != 1:
            return None
        arr = np.asarray(vectors, dtype=np.float64)
        std = arr.std(axis=0, ddof=1) if len(vectors) > 1 else np.zeros(arr.shape[1])
        return {
            "mean": [round(float(v), 2) for v in arr.mean(axis=0)],
            "std": [round(float(v), 2) for v in std],
        }

    return {
        "reports": len(reports),
        "segmentation": {
            variant: {"wdc_pct": _mean_std(v["wdc"]), "fd_pct": _mean_std(v["fd"])}
            for variant, v in sorted(variants.items())
        },
        "gcr_pct": vector_stats("gcr_pct"),
        "ecr_pct": vector_stats("ecr_pct"),
    }


