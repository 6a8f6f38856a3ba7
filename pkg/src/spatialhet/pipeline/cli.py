"""Command-line interface: ``spatialhet run|validate|synth|weights|diag``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .. import __version__
from ..diagnostics import gearys_c, local_geary, local_morans_i, morans_i
from ..errors import ConfigError, DataError, NumericalError, SpatialHetError
from ..frame import read_frame, write_geojson
from ..synth import SyntheticSpec, generate_synthetic, synthetic_adjacency
from ..weights import build_contiguity, build_distance_band, build_knn, read_adjacency, row_standardize
from .config import FORMATS, load_config, preflight, tomllib
from .run import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, run


def _table_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("table", help="delimited text table with a header row")
    p.add_argument("--id", default="id", help="unit id column (default: id)")
    p.add_argument("--x", default="x", help="easting column in meters (default: x)")
    p.add_argument("--y", default="y", help="northing column in meters (default: y)")
    p.add_argument("--delimiter", default=",", help="field delimiter (default: comma)")


def _weights_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--weights", choices=("knn", "contiguity", "band"), default="knn")
    p.add_argument("--k", type=int, default=8, help="neighbours for knn weights (default: 8)")
    p.add_argument("--radius", type=float, help="distance band radius in meters")
    p.add_argument("--adjacency", help="two-column id pair file for contiguity weights")
    p.add_argument("--binary", action="store_true", help="keep binary weights instead of row-standardizing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialhet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spatialhet {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="execute a run configuration")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the forest (outputs do not depend on it)")
    p.add_argument("--output-dir", help="run directory (overrides output.directory)")
    p.add_argument("--format", choices=FORMATS, help="surface/frame export format")

    p = sub.add_parser("validate", help="check a run configuration without computing anything")
    p.add_argument("config")

    p = sub.add_parser("synth", help="generate a synthetic dataset from a generator config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="generator seed (overrides the config's seed)")
    p.add_argument("--output-dir", default=".", help="directory for the generated files")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--name", help="file stem (default: the config file stem)")

    p = sub.add_parser("weights", help="build a spatial weights matrix and export id/neighbour/weight triples")
    wsub = p.add_subparsers(dest="kind", required=True)
    for kind in ("knn", "contiguity", "band"):
        q = wsub.add_parser(kind)
        _table_args(q)
        if kind == "knn":
            q.add_argument("--k", type=int, required=True)
        elif kind == "band":
            q.add_argument("--radius", type=float, required=True)
        else:
            q.add_argument("--adjacency", required=True)
        q.add_argument("--row-standardize", action="store_true")
        q.add_argument("--output", "-o", help="output file (default: stdout)")

    p = sub.add_parser("diag", help="global or local autocorrelation of one column")
    dsub = p.add_subparsers(dest="statistic", required=True)
    for stat in ("moran", "geary", "lisa", "local-geary"):
        q = dsub.add_parser(stat)
        _table_args(q)
        q.add_argument("--column", required=True)
        _weights_args(q)
        q.add_argument("--permutations", type=int, default=999)
        q.add_argument("--seed", type=int, default=0)
        if stat in ("lisa", "local-geary"):
            q.add_argument("--alpha", type=float, default=0.05)
            q.add_argument("--output-dir", default=".")
            q.add_argument("--format", choices=FORMATS, default="csv")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be nonnegative")
        config = replace(config, seed=args.seed, source={**config.source, "seed": args.seed})
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    report = run(config, output_dir=args.output_dir, threads=args.threads, formats=args.format)
    for s in report.stages:
        line = f"{s.name:<22} {s.status}"
        print(line + (f"  {s.error}" if s.error else ""), file=sys.stderr if s.error else sys.stdout)
    print(f"report: {report.output_dir / 'report.txt'}")
    return report.exit_code


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    preflight(config)
    print(f"{args.config}: ok ({', '.join(config.stages)})")
    return EXIT_OK


def _cmd_synth(args) -> int:
    path = Path(args.config)
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"generator config not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    spec = SyntheticSpec.from_mapping(cfg)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("a nonnegative integer seed is required (config 'seed' or --seed)")
    frame = generate_synthetic(spec, seed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or path.stem
    cols = cfg.get("columns", {})
    id_col, x_col, y_col = cols.get("id", "id"), cols.get("x", "easting"), cols.get("y", "northing")
    if args.format in ("csv", "both"):
        (out / f"{stem}.csv").write_text(frame.to_csv(id_column=id_col, x_column=x_col, y_column=y_col),
                                         encoding="utf-8")
    if args.format in ("geojson", "both"):
        write_geojson(out / f"{stem}.geojson", frame.to_geojson())
    pairs = synthetic_adjacency(spec, queen=bool(cfg.get("grid", {}).get("queen", False)))
    (out / f"{stem}_adjacency.csv").write_text("".join(f"{a},{b}\n" for a, b in pairs), encoding="utf-8")
    print(f"wrote {frame.n} units to {out / stem}.*")
    return EXIT_OK


def _read_table(args):
    try:
        return read_frame(args.table, args.id, args.x, args.y, delimiter=args.delimiter)
    except FileNotFoundError as exc:
        raise ConfigError(f"table not found: {args.table}") from exc


def _read_adjacency(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return read_adjacency(fh.read())
    except FileNotFoundError as exc:
        raise ConfigError(f"adjacency file not found: {path}") from exc


def _cmd_weights(args) -> int:
    frame = _read_table(args)
    if args.kind == "knn":
        W = build_knn(frame, args.k)
    elif args.kind == "band":
        W = build_distance_band(frame, args.radius)
    else:
        W = build_contiguity(frame, _read_adjacency(args.adjacency))
    if args.row_standardize:
        W = row_standardize(W)
    text = W.export()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if W.islands:
        print(f"warning: {len(W.islands)} islands", file=sys.stderr)
    return EXIT_OK


def _cmd_diag(args) -> int:
    frame = _read_table(args)
    if args.column not in frame.columns:
        raise ConfigError(f"column {args.column!r} not found")
    if args.weights == "knn":
        W = build_knn(frame, args.k)
    elif args.weights == "band":
        if args.radius is None:
            raise ConfigError("--radius is required for band weights")
        W = build_distance_band(frame, args.radius)
    else:
        if not args.adjacency:
            raise ConfigError("--adjacency is required for contiguity weights")
        W = build_contiguity(frame, _read_adjacency(args.adjacency))
    if not args.binary:
        W = row_standardize(W)
    y = frame[args.column]
    if args.statistic in ("moran", "geary"):
        fn = morans_i if args.statistic == "moran" else gearys_c
        r = fn(y, W, n_permutations=args.permutations, seed=args.seed)
        print(f"{r.name},{r.statistic!r},{r.null_expectation!r},{r.pseudo_p!r},{r.n_permutations},{r.alternative}")
        return EXIT_OK
    fn = local_morans_i if args.statistic == "lisa" else local_geary
    r = fn(y, W, alpha=args.alpha, n_permutations=args.permutations, seed=args.seed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{args.column}_{r.statistic}"
    if args.format in ("csv", "both"):
        lines = ["id,local,pseudo_p,label"]
        lines += [f"{u},{v!r},{p!r},{lab}" for u, v, p, lab in
                  zip(frame.unit_ids, map(float, r.local), map(float, r.pseudo_p), r.labels)]
        (out / f"{stem}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.format in ("geojson", "both"):
        write_geojson(out / f"{stem}.geojson", frame.to_geojson(r.as_columns()))
    counts = {}
    for lab in r.labels:
        counts[lab] = counts.get(lab, 0) + 1
    print(", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "synth": _cmd_synth,
            "weights": _cmd_weights, "diag": _cmd_diag}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, SpatialHetError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
