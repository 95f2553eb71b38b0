import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from config import EvalConfig, GvfSettings
from src.certeval.convert import convert
from src.certeval.direction import GvfConfig
from src.certeval.errors import InputError, NumericalError
from src.certeval.evaluator import EvalRun, render_text, run_eval, summarize_reports
from src.certeval.labels import CertaintyScheme, Tiling
from src.certeval.matching import VARIANTS
from src.certeval.synth import CORRUPTIONS, KINDS, SynthSpec, write_synthetic


logger = logging.getLogger(__name__)


def _setup_logging(verbose: bool):
    level = logging.DEBUG if verbose else getattr(logging, EvalConfig.LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )


def _pair(text: str) -> Tuple[int, int]:
    try:
        row, col = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROW,COL, got {text!r}")
    return row, col


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certeval",
        description="Evaluate classified images against uncertain expert annotations.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser("evaluate", help="score predicted maps against expert maps")
    evaluate.add_argument("--pred", nargs="+", required=True, help="UCM1 predicted class maps")
    evaluate.add_argument(
        "--expert", nargs="+", required=True,
        help="UEM1 expert maps; one comma-separated group per --pred, or all for a single --pred",
    )
    evaluate.add_argument("--scheme", default=EvalConfig.SCHEME, help="certainty weights sure,moderately,not-sure")
    evaluate.add_argument("--uniform", action="store_true", help="ignore certainty (every weight 1)")
    evaluate.add_argument("--tile", type=int, default=EvalConfig.TILE_SIZE, help="tile side n")
    evaluate.add_argument("--step", type=int, default=EvalConfig.STEP, help="tile step (default: tile side)")
    evaluate.add_argument("--anchor", type=_pair, default=(0, 0), help="first tile offset ROW,COL")
    evaluate.add_argument("--variants", default=EvalConfig.VARIANTS, help=f"any of {','.join(VARIANTS)}")
    evaluate.add_argument("--a", default=EvalConfig.A, help="WDC exponent")
    evaluate.add_argument("--mu", type=float, default=GvfSettings.MU)
    evaluate.add_argument("--dt", type=float, default=GvfSettings.DT)
    evaluate.add_argument("--max-iter", type=int, default=GvfSettings.MAX_ITERATIONS)
    evaluate.add_argument("--tol", type=float, default=GvfSettings.TOLERANCE)
    evaluate.add_argument("--bd-eps", type=float, default=GvfSettings.BD_EPS)
    evaluate.add_argument(
        "--bd-compat", action="store_true", default=GvfSettings.BD_COMPAT,
        help="normalize GVF directions by gradient magnitudes",
    )
    evaluate.add_argument(
        "--ecr-unmodeled", action="store_true", default=EvalConfig.ECR_WITH_UNMODELED,
        help="include the unmodeled row in the error classification rate",
    )
    evaluate.add_argument(
        "--reject-class", action="store_true", default=EvalConfig.REJECT_CLASS,
        help="accept predicted class 0 as a reject decision",
    )
    evaluate.add_argument("--workers", type=int, default=EvalConfig.WORKERS)
    evaluate.add_argument("--out", help="report path (default: stdout)")
    evaluate.add_argument("--format", choices=("json", "text"), default="json")
    evaluate.add_argument("--dump-dir", help="write boundary grids and direction fields here")
    evaluate.add_argument(
        "--cache", action="store_true", default=GvfSettings.ENABLE_CACHE,
        help="cache solved GVF fields on disk",
    )

    synth = commands.add_parser("synth", help="generate a synthetic expert/prediction pair")
    synth.add_argument("--kind", choices=KINDS, default="straight-edge")
    synth.add_argument("--size", type=int, default=32)
    synth.add_argument("--corruption", choices=CORRUPTIONS, default="shift")
    synth.add_argument("--shift", type=int, default=0)
    synth.add_argument("--spurious", type=int, default=0)
    synth.add_argument("--cell", type=int)
    synth.add_argument("--grade", default="s")
    synth.add_argument("--boundary-grade", default="s")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out-dir", required=True)

    conv = commands.add_parser("convert", help="convert a PGM grid into a UEM1/UCM1 map")
    conv.add_argument("--in", dest="image", required=True, help="8-bit PGM (P2/P5)")
    conv.add_argument("--map", dest="mapping", required=True, help="value,class,grade CSV table")
    conv.add_argument("--out", required=True, help="output path ending in .uem or .ucm")
    conv.add_argument("--num-classes", type=int)

    summarize = commands.add_parser("summarize", help="mean and std over several JSON reports")
    summarize.add_argument("reports", nargs="+")
    summarize.add_argument("--out")

    return parser


def _group_images(preds: Sequence[str], experts: Sequence[str]) -> List[Tuple[str, Tuple[str, ...]]]:
    if len(preds) == 1:
        paths = tuple(p for group in experts for p in group.split(",") if p)
        return [(preds[0], paths)]
    if len(experts) != len(preds):
        raise InputError(f"{len(preds)} predicted maps but {len(experts)} expert groups")
    return [(pred, tuple(p for p in group.split(",") if p)) for pred, group in zip(preds, experts)]


def _emit(text: str, out: Optional[str]):
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info(f"📄 Written {path}")
    else:
        sys.stdout.write(text)


def cmd_evaluate(args) -> int:
    scheme = CertaintyScheme.uniform() if args.uniform else CertaintyScheme.parse(args.scheme)
    try:
        a = Fraction(args.a)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"invalid WDC exponent {args.a!r}")

    cache = None
    if args.cache:
        from utils.cache import FieldCache

        cache = FieldCache(GvfSettings.CACHE_DIR, GvfSettings.CACHE_TTL_HOURS)

    run = EvalRun(
        images=tuple(_group_images(args.pred, args.expert)),
        tiling=Tiling(args.tile, args.step, args.anchor),
        scheme=scheme,
        variants=tuple(v.strip() for v in args.variants.split(",") if v.strip()),
        a=a,
        gvf=GvfConfig(mu=args.mu, dt=args.dt, max_iterations=args.max_iter, tolerance=args.tol),
        bd_eps=args.bd_eps,
        bd_compat=args.bd_compat,
        ecr_with_unmodeled=args.ecr_unmodeled,
        allow_reject=args.reject_class,
        workers=args.workers,
        dump_dir=args.dump_dir,
        cache=cache,
    )
    report = run_eval(run)
    _emit(render_text(report) if args.format == "text" else report.to_json(), args.out)
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        kind=args.kind,
        size=args.size,
        corruption=args.corruption,
        shift=args.shift,
        spurious=args.spurious,
        cell=args.cell,
        grade=args.grade,
        boundary_grade=args.boundary_grade,
        seed=args.seed,
    )
    write_synthetic(spec, args.out_dir)
    return 0


def cmd_convert(args) -> int:
    convert(args.image, args.mapping, args.out, args.num_classes)
    return 0


def cmd_summarize(args) -> int:
    reports = []
    for path in args.reports:
        try:
            with open(path, encoding="utf-8") as f:
                reports.append(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read report: {e}", path)
    summary = summarize_reports(reports)
    _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", args.out)
    return 0


COMMANDS = {
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "convert": cmd_convert,
    "summarize": cmd_summarize,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0 on success, 2 on bad input, 3 on numerical failure."""
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    if not EvalConfig.validate() or not GvfSettings.validate():
        return 2

    try:
        logger.info("=" * 60)
        logger.info(f"🔍 certeval {args.command}")
        logger.info("=" * 60)
        code = COMMANDS[args.command](args)
        logger.info("✅ Done")
        return code

    except InputError as e:
        logger.error(f"❌ Input error: {str(e)}")
        return 2
    except NumericalError as e:
        logger.error(f"❌ Numerical failure: {str(e)}", exc_info=True)
        return 3
    except KeyboardInterrupt:
        logger.info("👋 Interrupted")
        return 130
    except Exception as e:
        logger.error("=" * 60)
        logger.error(f"❌ Fatal error: {str(e)}", exc_info=True)
        logger.error("=" * 60)
        return 1


if __name__ == "__main__":
    sys.exit(main())
