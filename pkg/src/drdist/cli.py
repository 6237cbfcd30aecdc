"""Command-line frontend: ``drdist measure | viz | bench``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import bench, distvis, registry
from .core import (
    MeasureSpec,
    SpecEntry,
    load_labels,
    load_matrix,
    load_spec,
    worker_count,
)
from .errors import DimensionError, DrDistError, InputError, IoError, ParamError
from .preprocess import METRICS
from .scheduler import Engine

RANDOMIZED = {"snc", "cvm"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _report(InputError(message), exit_code=2)


def _report(err: Exception, exit_code: int | None = None):
    payload = {"error": type(err).__name__, "message": str(err)}
    if isinstance(err, ParamError) and err.index is not None:
        payload["index"] = err.index
    sys.stderr.write(json.dumps(payload) + "\n")
    raise SystemExit(exit_code if exit_code is not None else getattr(err, "exit_code", 3))


def _write(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as err:
        raise IoError(f"cannot write {out}: {err}") from err


def _seeded(spec: MeasureSpec, seed: int | None) -> MeasureSpec:
    if seed is None:
        return spec
    entries = []
    for e in spec:
        params = dict(e.params)
        if e.id in RANDOMIZED:
            params.setdefault("seed", seed)
        entries.append(SpecEntry(e.id, params))
    return MeasureSpec(tuple(entries))


def cmd_measure(args) -> int:
    if args.list:
        _write(json.dumps(registry.dump(), indent=2) + "\n", args.out)
        return 0
    for flag in ("high", "low", "spec"):
        if getattr(args, flag) is None:
            raise InputError(f"--{flag} is required")
    spec = _seeded(load_spec(args.spec), args.seed)
    high, low = load_matrix(args.high), load_matrix(args.low)
    labels = load_labels(args.labels) if args.labels else None
    t0 = time.perf_counter()
    outputs = Engine(spec, high, labels, return_local=args.local, metric=args.metric).run(low)
    elapsed = time.perf_counter() - t0
    report = {
        "meta": {
            "n_points": high.n_points,
            "dim_high": high.dim,
            "dim_low": low.dim,
            "metric": args.metric,
            "seed": args.seed,
            "return_local": args.local,
            "wall_time_seconds": elapsed,
        },
        "results": [o.to_json() for o in outputs],
    }
    _write(json.dumps(report, indent=2) + "\n", args.out)
    return 0


def _pick_locals(report, measure_id: str | None):
    results = report.get("results", report) if isinstance(report, dict) else report
    for entry in results:
        if measure_id is not None and entry.get("id") != measure_id:
            continue
        loc = entry.get("locals")
        if not loc:
            continue
        desc = registry.REGISTRY.get(entry.get("id"))
        pair = desc.local_pair if desc else None
        if pair and all(name in loc for name in pair):
            return loc[pair[0]], loc[pair[1]]
    raise InputError("no measure output with a false/missing local pair found")


def cmd_viz(args) -> int:
    low = load_matrix(args.low)
    if low.dim != 2:
        raise DimensionError(f"embedding must be 2-D, got {low.dim} columns")
    try:
        report = json.loads(Path(args.locals).read_text())
    except OSError as err:
        raise IoError(f"cannot read {args.locals}: {err}") from err
    except json.JSONDecodeError as err:
        raise InputError(f"{args.locals} is not JSON: {err}") from err
    local_false, local_missing = _pick_locals(report, args.measure)
    field = distvis.DistortionField.from_scores(low.data, local_false, local_missing)
    cfg = distvis.VizConfig(width=args.width, height=args.height, k=args.k)
    svg = distvis.checkviz(field, cfg) if args.kind == "checkviz" else distvis.reliability_map(field, None, cfg)
    _write(svg, args.out)
    return 0


def cmd_bench(args) -> int:
    x = load_matrix(args.high)
    spec = load_spec(args.spec) if args.spec else MeasureSpec.parse(bench.FIVE_MEASURES)
    labels = load_labels(args.labels) if args.labels else None
    report = bench.run_benchmark(x, spec, args.reps, args.seed or 0, labels, args.metric)
    _write(json.dumps(report, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="drdist", description="Dimensionality-reduction distortion measures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("measure", help="evaluate a spec on a high/low dataset pair")
    m.add_argument("--high")
    m.add_argument("--low")
    m.add_argument("--labels")
    m.add_argument("--spec")
    m.add_argument("--local", action="store_true", help="include pointwise distortions")
    m.add_argument("--metric", default="euclidean", choices=METRICS)
    m.add_argument("--seed", type=int)
    m.add_argument("--out")
    m.add_argument("--list", action="store_true", help="dump the measure registry")
    m.set_defaults(func=cmd_measure)

    v = sub.add_parser("viz", help="render local distortions as SVG")
    v.add_argument("--low", required=True)
    v.add_argument("--locals", required=True, help="JSON written by 'measure --local'")
    v.add_argument("--kind", choices=("checkviz", "relmap"), default="checkviz")
    v.add_argument("--measure", help="measure id whose locals to draw")
    v.add_argument("--k", type=int, default=5)
    v.add_argument("--width", type=int, default=800)
    v.add_argument("--height", type=int, default=800)
    v.add_argument("--out")
    v.set_defaults(func=cmd_viz)

    b = sub.add_parser("bench", help="time scheduled vs naive execution")
    b.add_argument("--high", required=True)
    b.add_argument("--spec", help="defaults to tnc, mrre, snc, dtm, kl_div")
    b.add_argument("--labels")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--metric", default="euclidean", choices=METRICS)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with threadpool_limits(worker_count()):
            return args.func(args)
    except DrDistError as err:
        _report(err)
    except ValueError as err:  # library-level validation outside our hierarchy
        _report(err, exit_code=4)


if __name__ == "__main__":
    sys.exit(main())
