"""Command-line front end.

Subcommands: score, triplet-eval, sweep-kr, stats, build-df. Reports are
JSON with sorted keys and no timestamps, so identical inputs produce
byte-identical output. Exit codes: 0 success, 1 usage error, 2 unreadable
or malformed input, 3 unexpected internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from dataclasses import dataclass

from . import __version__, harness
from .corpus import DfTable
from .errors import (
    CiderEvalError,
    InputFormatError,
    InvalidArgumentError,
    InvalidReferenceError,
)
from .metrics import METRIC_NAMES, MetricConfig, resolve_metric

_DEFAULT_GRID = tuple(round(i / 10, 1) for i in range(11))


@dataclass
class RunConfig:
    """Everything one invocation needs, decoupled from argparse."""

    command: str
    input_path: str = None
    refs_path: str = None
    df_path: str = None
    out_path: str = None
    metrics: tuple = ()
    k_r: float = 0.8
    kr_grid: str = None  # comma list; None means the default grid
    sigma: float = 6.0
    max_n: int = 4
    num_refs: int = 1
    seed: int = 0
    parallelism: int = None  # None means "CIDER_EVAL_THREADS or 1"
    report_scale: float = 100.0
    penalty_breakdown: bool = False


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cider-eval", allow_abbrev=False,
                     description="Caption evaluation toolkit.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, allow_abbrev=False)

    def add_common(p, grid_kr=False):
        p.add_argument("--in", dest="input_path", required=True,
                       metavar="FILE", help="input JSONL file")
        p.add_argument("--out", dest="out_path", metavar="FILE",
                       help="output file (default: stdout)")
        if grid_kr:
            p.add_argument("--kr", dest="kr_grid", metavar="LIST",
                           help="comma-separated k_r grid (default 0.0..1.0 "
                                "in steps of 0.1)")
        else:
            p.add_argument("--kr", dest="k_r", type=float, default=0.8,
                           metavar="X", help="repetition/length blend weight")
        p.add_argument("--sigma", type=float, default=6.0, metavar="X",
                       help="gaussian length-penalty width")
        p.add_argument("--max-n", type=int, default=4, metavar="N",
                       help="largest n-gram order")
        p.add_argument("--parallelism", type=int, default=None, metavar="N",
                       help="worker threads (default: CIDER_EVAL_THREADS or 1)")
        p.add_argument("--scale", dest="report_scale", type=float,
                       default=100.0, metavar="X",
                       help="multiplier applied to raw scores for reporting")

    p = add("score", "score a batch of candidate captions")
    add_common(p)
    p.add_argument("--metrics", default="cider-r,cider-d", metavar="LIST",
                   help="comma-separated metric names "
                        f"(choices: {', '.join(METRIC_NAMES)})")
    p.add_argument("--refs-file", dest="refs_path", metavar="FILE",
                   help="take references from this JSONL file, matched by "
                        "image_id")
    p.add_argument("--df", dest="df_path", metavar="FILE",
                   help="precomputed document-frequency file (default: "
                        "build from the batch's own references)")
    p.add_argument("--penalty-breakdown", action="store_true",
                   help="include per-reference penalty terms per image")

    p = add("triplet-eval", "accuracy against human pairwise judgements")
    add_common(p)
    p.add_argument("--metrics", default=",".join(METRIC_NAMES), metavar="LIST",
                   help="comma-separated metric names (default: all)")
    p.add_argument("--refs", dest="num_refs", type=int, default=1, metavar="K",
                   help="references subsampled per triplet")
    p.add_argument("--seed", type=int, default=0, metavar="N",
                   help="subsampling seed")

    p = add("sweep-kr", "evaluate a grid of k_r blend weights")
    add_common(p, grid_kr=True)
    p.add_argument("--refs", dest="num_refs", type=int, default=1, metavar="K",
                   help="references subsampled per triplet")
    p.add_argument("--seed", type=int, default=0, metavar="N",
                   help="subsampling seed")

    p = add("stats", "corpus statistics for a caption collection")
    p.add_argument("--in", dest="input_path", required=True, metavar="FILE",
                   help="captions: .jsonl references or one caption per line")
    p.add_argument("--out", dest="out_path", metavar="FILE",
                   help="output file (default: stdout)")

    p = add("build-df", "precompute document frequencies from references")
    p.add_argument("--in", dest="input_path", required=True, metavar="FILE",
                   help="JSONL file with a references list per record")
    p.add_argument("--out", dest="out_path", required=True, metavar="FILE",
                   help="document-frequency file to write")
    p.add_argument("--max-n", type=int, default=4, metavar="N",
                   help="largest n-gram order")

    return parser


def _parse_grid(raw) -> tuple:
    if raw is None:
        return _DEFAULT_GRID
    try:
        return tuple(float(chunk) for chunk in raw.split(","))
    except ValueError:
        raise InvalidArgumentError(
            f"--kr grid must be comma-separated numbers, got {raw!r}") from None


def parse_args(argv=None) -> RunConfig:
    args = vars(_build_parser().parse_args(argv))
    if "metrics" in args:
        args["metrics"] = tuple(
            name.strip() for name in args.pop("metrics").split(",") if name.strip())
    return RunConfig(**{k: v for k, v in args.items()
                        if k in RunConfig.__dataclass_fields__})


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------


def _parallelism(config: RunConfig) -> int:
    value = config.parallelism
    if value is None:
        raw = os.environ.get("CIDER_EVAL_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise InvalidArgumentError(
                f"CIDER_EVAL_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise InvalidArgumentError(f"parallelism must be >= 1, got {value}")
    return value


def _metric_config(config: RunConfig, k_r=None) -> MetricConfig:
    return MetricConfig(max_n=config.max_n, sigma=config.sigma,
                        k_r=config.k_r if k_r is None else k_r,
                        report_scale=config.report_scale)


def _emit_json(payload: dict, out_path) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_score_csv(report: dict, metric_names, out_path) -> None:
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id"] + [f"{name}_reported"
                                        for name in metric_names])
        for image in report["images"]:
            writer.writerow(
                [image["image_id"]]
                + [repr(image["scores"][name]["reported"])
                   for name in metric_names])


def _cmd_score(config: RunConfig) -> None:
    for name in config.metrics:
        resolve_metric(name)
    batch = harness.load_batch_jsonl(config.input_path, config.refs_path)
    df_table = (DfTable.load(config.df_path)
                if config.df_path is not None else None)
    report = harness.score_batch(
        batch, config.metrics, _metric_config(config), df_table=df_table,
        parallelism=_parallelism(config),
        include_penalties=config.penalty_breakdown)
    if config.df_path is not None:
        report["df"]["path"] = config.df_path
    report["version"] = __version__
    if config.out_path is not None and config.out_path.endswith(".csv"):
        _emit_score_csv(report, config.metrics, config.out_path)
    else:
        _emit_json(report, config.out_path)


def _cmd_triplet_eval(config: RunConfig) -> None:
    for name in config.metrics:
        resolve_metric(name)
    triplets = harness.load_triplets_jsonl(config.input_path)
    cfg = _metric_config(config)
    parallelism = _parallelism(config)
    results = []
    for name in config.metrics:
        report = harness.triplet_accuracy(
            triplets, name, cfg, k=config.num_refs, seed=config.seed,
            parallelism=parallelism)
        results.append({
            "metric": report.metric_name,
            "accuracy": report.accuracy,
            "num_triplets": report.num_triplets,
            "num_ties": report.num_ties,
            "num_short": report.num_short,
        })
    _emit_json({
        "version": __version__,
        "config": {"max_n": cfg.max_n, "sigma": cfg.sigma, "k_r": cfg.k_r,
                   "report_scale": cfg.report_scale},
        "num_refs_used": config.num_refs,
        "seed": config.seed,
        "results": results,
    }, config.out_path)


def _cmd_sweep_kr(config: RunConfig) -> None:
    grid = _parse_grid(config.kr_grid)
    data = _load_sweep_input(config.input_path)
    cfg = _metric_config(config)
    rows = harness.sweep_kr(data, grid, cfg, k=config.num_refs,
                            seed=config.seed,
                            parallelism=_parallelism(config))
    objective = ("triplet_accuracy" if not isinstance(data, harness.EvalBatch)
                 else "corpus_mean_raw")
    _emit_json({
        "version": __version__,
        "config": {"max_n": cfg.max_n, "sigma": cfg.sigma,
                   "report_scale": cfg.report_scale},
        "objective": objective,
        "num_refs_used": config.num_refs,
        "seed": config.seed,
        "grid": rows,
    }, config.out_path)


def _load_sweep_input(path):
    """Triplet files carry a "vote" field; batch files carry image ids."""
    for _lineno, obj in harness._parse_jsonl(path):
        if "vote" in obj:
            return harness.load_triplets_jsonl(path)
        return harness.load_batch_jsonl(path)
    raise InputFormatError("no records found", str(path))


def _cmd_stats(config: RunConfig) -> None:
    captions = harness.load_captions(config.input_path)
    stats = harness.corpus_stats(captions)
    _emit_json({
        "version": __version__,
        "dataset_size": stats.dataset_size,
        "vocabulary_size": stats.vocabulary_size,
        "avg_sentence_length": stats.avg_sentence_length,
        "std_sentence_length": stats.std_sentence_length,
    }, config.out_path)


def _cmd_build_df(config: RunConfig) -> None:
    from .corpus import build_df
    from .textproc import tokenize

    reference_sets = harness.load_reference_sets_jsonl(config.input_path)
    tokenized = [[tokenize(r) for r in refs] for refs in reference_sets]
    table = build_df(tokenized, config.max_n)
    table.save(config.out_path)


_COMMANDS = {
    "score": _cmd_score,
    "triplet-eval": _cmd_triplet_eval,
    "sweep-kr": _cmd_sweep_kr,
    "stats": _cmd_stats,
    "build-df": _cmd_build_df,
}


def run(config: RunConfig) -> int:
    """Execute one parsed invocation and map failures to exit codes."""
    try:
        _COMMANDS[config.command](config)
        return 0
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputFormatError, InvalidReferenceError, CiderEvalError,
            OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


def main(argv=None) -> None:
    sys.exit(run(parse_args(argv)))


if __name__ == "__main__":
    main()
