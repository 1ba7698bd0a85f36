"""Command-line front end.

Every command writes its result through a temp-file rename, so partial
output files are never left behind, and embeds a ``manifest`` section
echoing the full invocation; rerunning the same seeded invocation
reproduces the output byte for byte. Embedding inputs ending in ``.csv``
are parsed as CSV, anything else as the binary format.

Result records are ``key=value`` lines (or JSON with ``--format json``).
The ``pareto`` and ``bench`` commands write CSV rows behind ``#`` manifest
comments; their column orders are fixed:

* pareto: ``tag,precision,recall``
* bench:  ``n,estimator,distance_evals,queries,mean_per_query``
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .analysis import ParetoPoint, ScoreSeries, pareto_frontier, pearson, scaling_benchmark, spearman
from .baselines import fid, kid
from .compress import CompressionSpec, compress
from .hashing import build_table, choose_hyperplane_count, generate_hyperplanes
from .io import EmbeddingSet, atomic_write_bytes, load_embeddings, load_tensor, save_tensor
from .metrics import EvalConfig, evaluate, realism_scores


@dataclass
class RunManifest:
    """Echo of one invocation; replaying it reproduces seeded outputs byte-identically."""

    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    config: dict[str, object] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None

    def pairs(self) -> list[tuple[str, object]]:
        out: list[tuple[str, object]] = [("manifest.command", self.command)]
        if self.seed is not None:
            out.append(("manifest.seed", self.seed))
        out += [(f"manifest.input.{k}", v) for k, v in self.inputs.items()]
        out += [(f"manifest.output.{k}", v) for k, v in self.outputs.items()]
        out += [(f"manifest.config.{k}", v) for k, v in self.config.items()]
        return out


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_record(path: str, pairs: list[tuple[str, object]], fmt: str) -> None:
    if fmt == "json":
        text = json.dumps({k: v for k, v in pairs}, indent=2) + "\n"
    else:
        text = "".join(f"{k}={_fmt(v)}\n" for k, v in pairs)
    atomic_write_bytes(path, text.encode("ascii"))


def _write_csv(path: str, manifest: RunManifest, rows: list[str]) -> None:
    lines = [f"# {k}={_fmt(v)}" for k, v in manifest.pairs()]
    atomic_write_bytes(path, ("\n".join(lines + rows) + "\n").encode("ascii"))


def _load_set(path: str, label: str) -> EmbeddingSet:
    fmt = "csv" if path.endswith(".csv") else "binary"
    return load_embeddings(path, format=fmt, label=label)


def _parse_height(text: str) -> int | str:
    return "auto" if text == "auto" else int(text)


def cmd_eval(args) -> int:
    real = _load_set(args.real, "real")
    gen = _load_set(args.generated, "generated")
    config = EvalConfig(
        k=args.k,
        hyperplanes=_parse_height(args.H),
        runs=args.runs,
        seed=args.seed,
        estimator=args.estimator.replace("-", "_"),
    )
    score = evaluate(real, gen, config)
    manifest = RunManifest(
        command="eval",
        inputs={"real": args.real, "generated": args.generated},
        config={
            "estimator": args.estimator,
            "k": args.k,
            "H": args.H,
            "runs": args.runs,
            "format": args.format,
        },
        outputs={"result": args.out},
        seed=args.seed,
    )
    pairs = manifest.pairs()
    pairs += [
        ("result.precision", float(score.precision)),
        ("result.recall", float(score.recall)),
    ]
    for i, (p, r) in enumerate(score.per_run):
        pairs += [(f"result.run.{i}.precision", float(p)), (f"result.run.{i}.recall", float(r))]
    pairs += [
        ("result.stats.distance_evals", score.stats.distance_evals),
        ("result.stats.queries", score.stats.queries),
        ("result.stats.mean_per_query", float(score.stats.mean_per_query)),
    ]
    _write_record(args.out, pairs, args.format)
    print(f"precision={score.precision!r} recall={score.recall!r}")
    return 0


def cmd_realism(args) -> int:
    real = _load_set(args.real, "real")
    gen = _load_set(args.generated, "generated")
    height = _parse_height(args.H)
    if height == "auto":
        height = choose_hyperplane_count(real.n + gen.n)
    planes = generate_hyperplanes(height, real.d, args.seed)
    report = realism_scores(gen, build_table(real, planes), args.k, args.drop_largest_radii)
    manifest = RunManifest(
        command="realism",
        inputs={"real": args.real, "generated": args.generated},
        config={
            "k": args.k,
            "H": args.H,
            "drop_largest_radii": args.drop_largest_radii,
            "format": args.format,
        },
        outputs={"result": args.out},
        seed=args.seed,
    )
    pairs = manifest.pairs()
    pairs.append(("result.count", int(report.scores.size)))
    for i, value in enumerate(report.scores):
        pairs.append((f"result.rs.{i}", float(value)))
    _write_record(args.out, pairs, args.format)
    finite = report.scores[np.isfinite(report.scores)]
    mean = float(finite.mean()) if finite.size else float("nan")
    print(f"samples={report.scores.size} finite_mean_rs={mean!r}")
    return 0


def cmd_baseline(args) -> int:
    a = _load_set(args.real, "real")
    b = _load_set(args.generated, "generated")
    if args.metric == "fid":
        value = fid(a, b)
    else:
        value = kid(a, b, args.block_size)
    manifest = RunManifest(
        command="baseline",
        inputs={"real": args.real, "generated": args.generated},
        config={"metric": args.metric, "block_size": args.block_size, "format": args.format},
        outputs={"result": args.out},
    )
    pairs = manifest.pairs() + [(f"result.{args.metric}", float(value))]
    _write_record(args.out, pairs, args.format)
    print(f"{args.metric}={value!r}")
    return 0


def cmd_compress(args) -> int:
    tensor = load_tensor(args.tensor, name=Path(args.tensor).stem)
    spec = CompressionSpec(
        scheme=args.scheme.replace("-", "_"),
        bits=args.bits,
        mcq_samples=args.mcq_samples,
        expand_ratio=args.expand_ratio,
        seed=args.seed,
    )
    out, report = compress(tensor, spec)
    save_tensor(out, args.out)
    manifest = RunManifest(
        command="compress",
        inputs={"tensor": args.tensor},
        config={
            "scheme": args.scheme,
            "bits": args.bits,
            "mcq_samples": args.mcq_samples,
            "expand_ratio": args.expand_ratio,
            "format": args.format,
        },
        outputs={"tensor": args.out, "report": args.report or ""},
        seed=args.seed,
    )
    pairs = manifest.pairs()
    pairs += [
        ("report.distinct_levels", report.distinct_levels),
        ("report.pruned_fraction", float(report.pruned_fraction)),
        ("report.max_abs_error", float(report.max_abs_error)),
        ("report.l1_in", float(report.l1_in)),
        ("report.l1_out", float(report.l1_out)),
        ("report.clip_threshold", "none" if report.clip_threshold is None else float(report.clip_threshold)),
    ]
    if args.report:
        _write_record(args.report, pairs, args.format)
    for key, value in pairs:
        if key.startswith("report."):
            print(f"{key}={_fmt(value)}")
    return 0


def _read_series_csv(path: str) -> tuple[ScoreSeries, ScoreSeries]:
    labels, left, right = [], [], []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}: row {lineno} needs 3 columns (label,a,b)")
            labels.append(parts[0])
            left.append(float(parts[1]))
            right.append(float(parts[2]))
    return ScoreSeries(tuple(labels), np.array(left)), ScoreSeries(tuple(labels), np.array(right))


def cmd_correlate(args) -> int:
    series_a, series_b = _read_series_csv(args.scores)
    manifest = RunManifest(
        command="correlate",
        inputs={"scores": args.scores},
        config={"method": args.method, "format": args.format},
        outputs={"result": args.out},
    )
    pairs = manifest.pairs()
    if args.method in ("pearson", "both"):
        pairs.append(("result.pearson", pearson(series_a, series_b)))
    if args.method in ("spearman", "both"):
        pairs.append(("result.spearman", spearman(series_a, series_b)))
    _write_record(args.out, pairs, args.format)
    for key, value in pairs:
        if key.startswith("result."):
            print(f"{key}={_fmt(value)}")
    return 0


def cmd_pareto(args) -> int:
    points = []
    with open(args.points, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{args.points}: row {lineno} needs 3 columns (tag,precision,recall)")
            points.append(ParetoPoint(float(parts[1]), float(parts[2]), parts[0]))
    frontier = pareto_frontier(points)
    manifest = RunManifest(
        command="pareto",
        inputs={"points": args.points},
        config={},
        outputs={"result": args.out},
    )
    rows = [f"{p.tag},{p.precision!r},{p.recall!r}" for p in frontier]
    _write_csv(args.out, manifest, rows)
    print(f"frontier_points={len(frontier)}")
    return 0


def cmd_bench(args) -> int:
    sizes = [int(tok) for tok in args.sizes.split(",")]
    estimators = [tok.replace("-", "_") for tok in args.estimators.split(",")]
    rows = scaling_benchmark(args.d, sizes, estimators, seed=args.seed, k=args.k)
    manifest = RunManifest(
        command="bench",
        inputs={},
        config={"d": args.d, "sizes": args.sizes, "estimators": args.estimators, "k": args.k},
        outputs={"result": args.out},
        seed=args.seed,
    )
    # wall time varies run to run, so it goes to stdout, not into the result file
    csv_rows = [
        f"{row.n},{row.estimator.replace('_', '-')},{row.distance_evals},{row.queries},{row.mean_per_query!r}"
        for row in rows
    ]
    _write_csv(args.out, manifest, csv_rows)
    for row in rows:
        print(f"n={row.n} estimator={row.estimator} wall_time={row.wall_time:.4f}s "
              f"mean_per_query={row.mean_per_query!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lshpr",
        description="Hash-based precision/recall evaluation and post-training weight compression.",
    )
    parser.add_argument("--threads", type=int, default=None, help="cap BLAS/worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--out", required=True, help="result file path")

    p = sub.add_parser("eval", help="precision/recall of generated embeddings vs real ones")
    p.add_argument("real", help="real embedding file (.csv or binary)")
    p.add_argument("generated", help="generated embedding file (.csv or binary)")
    p.add_argument("--estimator", choices=("lsh", "lsh-knn", "knn"), default="lsh-knn")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--H", default="auto", help='hyperplane count or "auto"')
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("realism", help="per-sample realism scores of generated embeddings")
    p.add_argument("real")
    p.add_argument("generated")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--H", default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop-largest-radii", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_realism)

    p = sub.add_parser("baseline", help="FID or KID between two embedding files")
    p.add_argument("real")
    p.add_argument("generated")
    p.add_argument("--metric", choices=("fid", "kid"), default="fid")
    p.add_argument("--block-size", type=int, default=None)
    add_common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("compress", help="apply a weight-compression scheme to a tensor file")
    p.add_argument("tensor")
    p.add_argument("--scheme", choices=("lq", "mcq", "ocs-lq", "aciq-lq"), required=True)
    p.add_argument("--bits", type=int, default=None)
    p.add_argument("--mcq-samples", type=int, default=None)
    p.add_argument("--expand-ratio", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="optional report record path")
    add_common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("correlate", help="pearson/spearman between two score columns")
    p.add_argument("scores", help="CSV rows: label,score_a,score_b")
    p.add_argument("--method", choices=("pearson", "spearman", "both"), default="both")
    add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("pareto", help="extract the non-dominated precision/recall frontier")
    p.add_argument("points", help="CSV rows: tag,precision,recall")
    add_common(p)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("bench", help="scaling benchmark over synthetic data")
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--sizes", required=True, help="comma-separated ascending sizes")
    p.add_argument("--estimators", default="lsh,lsh-knn,knn")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    add_common(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    limits = threadpool_limits(args.threads) if args.threads else contextlib.nullcontext()
    try:
        with limits:
            return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
