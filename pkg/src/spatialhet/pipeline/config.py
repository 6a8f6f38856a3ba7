"""Declarative run configuration read from TOML."""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..errors import ConfigError
from ..gwr.kernels import ADAPTIVE, BISQUARE, FIXED, GAUSSIAN

MODEL_STAGES = ("ols", "sar_lag", "sar_error", "gwr_basic", "gwr_lcr", "msgwr")
WEIGHT_ROLES = ("autocorrelation", "sar", "residuals")
WEIGHT_KINDS = ("knn", "contiguity", "band")
FORMATS = ("csv", "geojson", "both")


@dataclass(frozen=True)
class WeightsStage:
    """How one analysis stage builds its weights: ``knn`` (k), ``contiguity`` or ``band`` (radius)."""

    kind: str = "knn"
    k: int = 8
    radius: float | None = None
    row_standardize: bool = True

    def describe(self) -> str:
        if self.kind == "knn":
            return f"knn(k={self.k})"
        if self.kind == "band":
            return f"band(radius={self.radius!r})"
        return "contiguity"


@dataclass(frozen=True)
class Derivation:
    numerator: str
    denominator: str
    out: str


@dataclass(frozen=True)
class VarselOptions:
    enabled: bool = True
    importance: float = 10.0
    correlation: float = 0.8
    vif: float = 5.0
    n_trees: int = 500
    min_leaf_size: int = 5
    exclude: tuple = ()


@dataclass(frozen=True)
class GwrOptions:
    kernel: str = BISQUARE
    mode: str = ADAPTIVE
    criterion: str = "aicc"
    bandwidth: float | None = None
    cn_threshold: float = 30.0
    max_sweeps: int = 50
    tolerance: float = 1e-5


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run needs; paths are resolved against the config file."""

    table: Path
    id_column: str
    x_column: str
    y_column: str
    response: str
    predictors: tuple
    seed: int
    stages: tuple
    adjacency: Path | None = None
    delimiter: str = ","
    derive: tuple = ()
    varsel: VarselOptions = field(default_factory=VarselOptions)
    weights: dict = field(default_factory=dict)
    gwr: GwrOptions = field(default_factory=GwrOptions)
    permutations: int = 999
    output_dir: Path | None = None
    formats: str = "both"
    threads: int = 1
    source: dict = field(default_factory=dict, repr=False)

    def weights_for(self, role: str) -> WeightsStage:
        return self.weights.get(role, WeightsStage())


def _table(cfg: dict, name: str) -> dict:
    value = cfg.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return section[key]


def _weights_stage(raw, role: str) -> WeightsStage:
    if not isinstance(raw, dict):
        raise ConfigError(f"weights.{role} must be a table")
    unknown = set(raw) - {"kind", "k", "radius", "row_standardize"}
    if unknown:
        raise ConfigError(f"unknown keys in weights.{role}: {sorted(unknown)}")
    kind = raw.get("kind", "knn")
    if kind not in WEIGHT_KINDS:
        raise ConfigError(f"weights.{role}.kind must be one of {WEIGHT_KINDS}, got {kind!r}")
    k = raw.get("k", 8)
    if kind == "knn" and (not isinstance(k, int) or k < 1):
        raise ConfigError(f"weights.{role}.k must be a positive integer")
    radius = raw.get("radius")
    if kind == "band" and (not isinstance(radius, (int, float)) or radius <= 0):
        raise ConfigError(f"weights.{role}.radius must be a positive number")
    return WeightsStage(kind, int(k), None if radius is None else float(radius),
                        bool(raw.get("row_standardize", True)))


def parse_config(cfg: dict, base_dir: Path | str = ".") -> RunConfig:
    """Validate a parsed TOML mapping and build a :class:`RunConfig`."""
    base = Path(base_dir)
    if "seed" not in cfg:
        raise ConfigError("a master 'seed' is mandatory")
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")

    inp = _table(cfg, "input")
    table = base / str(_require(inp, "table", "[input]"))
    adjacency = inp.get("adjacency")
    adjacency = base / adjacency if adjacency else None
    predictors = _require(inp, "predictors", "[input]")
    if not isinstance(predictors, list) or not predictors or not all(isinstance(p, str) for p in predictors):
        raise ConfigError("input.predictors must be a non-empty list of column names")
    if len(set(predictors)) != len(predictors):
        raise ConfigError("input.predictors contains duplicates")
    response = str(_require(inp, "response", "[input]"))
    if response in predictors:
        raise ConfigError(f"response {response!r} is also listed as a predictor")

    derive = []
    for i, d in enumerate(cfg.get("derive", [])):
        if not isinstance(d, dict):
            raise ConfigError("each [[derive]] entry must be a table")
        derive.append(Derivation(*(str(_require(d, k, f"derive[{i}]")) for k in ("numerator", "denominator", "out"))))

    vs = _table(cfg, "varsel")
    varsel = VarselOptions(
        enabled=bool(vs.get("enabled", True)), importance=float(vs.get("importance", 10.0)),
        correlation=float(vs.get("correlation", 0.8)), vif=float(vs.get("vif", 5.0)),
        n_trees=int(vs.get("n_trees", 500)), min_leaf_size=int(vs.get("min_leaf_size", 5)),
        exclude=tuple(vs.get("exclude", ())),
    )
    if not 0 < varsel.correlation <= 1:
        raise ConfigError("varsel.correlation must lie in (0, 1]")
    if varsel.vif <= 1:
        raise ConfigError("varsel.vif must exceed 1")
    if varsel.n_trees < 1 or varsel.min_leaf_size < 1:
        raise ConfigError("varsel.n_trees and varsel.min_leaf_size must be positive")
    stray = set(varsel.exclude) - set(predictors)
    if stray:
        raise ConfigError(f"varsel.exclude names unknown predictors {sorted(stray)}")

    wraw = _table(cfg, "weights")
    unknown = set(wraw) - set(WEIGHT_ROLES)
    if unknown:
        raise ConfigError(f"unknown weights stages {sorted(unknown)}; expected {WEIGHT_ROLES}")
    weights = {role: _weights_stage(wraw[role], role) for role in wraw}
    if any(w.kind == "contiguity" for w in weights.values()) and adjacency is None:
        raise ConfigError("contiguity weights need input.adjacency")

    models = _table(cfg, "models")
    stages = models.get("stages", [])
    if not isinstance(stages, list) or not stages:
        raise ConfigError("at least one model stage must be enabled in models.stages")
    bad = [s for s in stages if s not in MODEL_STAGES]
    if bad:
        raise ConfigError(f"unknown model stages {bad}; expected a subset of {MODEL_STAGES}")
    stages = tuple(s for s in MODEL_STAGES if s in stages)

    g = _table(cfg, "gwr")
    gwr = GwrOptions(
        kernel=g.get("kernel", BISQUARE), mode=g.get("mode", ADAPTIVE), criterion=g.get("criterion", "aicc"),
        bandwidth=g.get("bandwidth"), cn_threshold=float(g.get("cn_threshold", 30.0)),
        max_sweeps=int(g.get("max_sweeps", 50)), tolerance=float(g.get("tolerance", 1e-5)),
    )
    if gwr.kernel not in (GAUSSIAN, BISQUARE):
        raise ConfigError(f"gwr.kernel must be 'gaussian' or 'bisquare', got {gwr.kernel!r}")
    if gwr.mode not in (FIXED, ADAPTIVE):
        raise ConfigError(f"gwr.mode must be 'fixed' or 'adaptive', got {gwr.mode!r}")
    if gwr.criterion not in ("aicc", "cv"):
        raise ConfigError(f"gwr.criterion must be 'aicc' or 'cv', got {gwr.criterion!r}")
    if gwr.bandwidth is not None and not (isinstance(gwr.bandwidth, (int, float)) and gwr.bandwidth > 0):
        raise ConfigError("gwr.bandwidth must be a positive number")
    if gwr.cn_threshold <= 1:
        raise ConfigError("gwr.cn_threshold must exceed 1")

    out = _table(cfg, "output")
    formats = out.get("format", "both")
    if formats not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}")
    permutations = int(cfg.get("permutations", 999))
    if permutations < 0:
        raise ConfigError("permutations must be nonnegative")
    out_dir = out.get("directory")

    return RunConfig(
        table=table, id_column=str(inp.get("id", "id")), x_column=str(inp.get("x", "x")),
        y_column=str(inp.get("y", "y")), response=response, predictors=tuple(predictors), seed=seed,
        stages=stages, adjacency=adjacency, delimiter=str(inp.get("delimiter", ",")), derive=tuple(derive),
        varsel=varsel, weights=weights, gwr=gwr, permutations=permutations,
        output_dir=base / out_dir if out_dir else None, formats=formats, source=cfg,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(cfg, path.parent)


def preflight(config: RunConfig) -> list:
    """Checks that need the input files but no computation; returns the table header.

    Raises :class:`ConfigError` for unreadable inputs or column bindings that
    do not resolve (derived columns count as available).
    """
    for p in (config.table, config.adjacency):
        if p is not None and not p.is_file():
            raise ConfigError(f"input file not found: {p}")
    with open(config.table, encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh, delimiter=config.delimiter), None)
    if not header:
        raise ConfigError(f"{config.table} has no header row")
    header = [h.strip() for h in header]
    available = set(header)
    for name in (config.id_column, config.x_column, config.y_column):
        if name not in available:
            raise ConfigError(f"column {name!r} not found in {config.table.name}")
    for d in config.derive:
        for name in (d.numerator, d.denominator):
            if name not in available:
                raise ConfigError(f"derive input column {name!r} not found")
        available.add(d.out)
    for name in (config.response, *config.predictors):
        if name not in available:
            raise ConfigError(f"column {name!r} not found in {config.table.name}")
    return header
