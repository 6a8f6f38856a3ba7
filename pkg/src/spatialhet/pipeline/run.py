"""End-to-end workflow: ingest, screen, diagnose, fit, compare, export."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
import time
import zlib
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..diagnostics import gearys_c, local_morans_i, morans_i
from ..errors import ConfigError, DataError, NumericalError, SpatialHetError
from ..frame import ModelSpec, _jsonable, derive_share, read_frame, write_geojson
from ..gwr import (
    BandwidthSpec,
    KernelSpec,
    fit_gwr,
    fit_lcr_gwr,
    fit_msgwr,
    select_bandwidth,
    summary_block,
    surfaces_csv,
    surfaces_geojson,
)
from ..gwr.kernels import FIXED
from ..ols import compare_aic, fit_ols
from ..sar import fit_spatial_error, fit_spatial_lag
from ..varsel import select_variables
from ..weights import build_contiguity, build_distance_band, build_knn, read_adjacency, row_standardize
from .config import WEIGHT_ROLES, RunConfig, WeightsStage, preflight

OK, FAILED, SKIPPED = "ok", "failed", "skipped"
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4


def stage_seed(master: int, name: str) -> int:
    """Seed of the named sub-stream ``name`` (stage plus purpose) under ``master``.

    Each name hashes to its own spawn key, so adding or removing a stage never
    shifts the draws of another.
    """
    ss = np.random.SeedSequence(master, spawn_key=(zlib.crc32(name.encode("utf-8")),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, DataError):
        return EXIT_DATA
    return EXIT_NUMERICAL


@dataclass
class StageRecord:
    name: str
    status: str
    detail: str = ""
    error: str = ""
    exit_code: int = EXIT_OK


@dataclass
class RunReport:
    """Outcome of one run. Everything except ``metadata`` is deterministic."""

    stages: list = field(default_factory=list)
    selected: list = field(default_factory=list)
    drop_reasons: dict = field(default_factory=dict)
    comparison: list = field(default_factory=list)
    autocorrelation: list = field(default_factory=list)
    residual_autocorrelation: list = field(default_factory=list)
    removed_islands: list = field(default_factory=list)
    files: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    output_dir: Path | None = None

    @property
    def ok(self) -> bool:
        return all(s.status != FAILED for s in self.stages)

    @property
    def exit_code(self) -> int:
        for s in self.stages:
            if s.status == FAILED:
                return s.exit_code
        return EXIT_OK

    def stage(self, name: str) -> StageRecord:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self, include_metadata: bool = True) -> dict:
        out = {
            "software": {"package": "spatialhet", "version": __version__},
            "stages": [{"name": s.name, "status": s.status, "detail": s.detail, "error": s.error}
                       for s in self.stages],
            "selected_variables": list(self.selected),
            "drop_reasons": dict(self.drop_reasons),
            "removed_islands": list(self.removed_islands),
            "global_autocorrelation": self.autocorrelation,
            "model_comparison": self.comparison,
            "residual_autocorrelation": self.residual_autocorrelation,
            "files": self.files,
            "config": self.config,
        }
        if include_metadata:
            out["metadata"] = self.metadata
        return out

    def to_text(self) -> str:
        lines = [f"spatialhet {__version__} run report", "", "Stages:"]
        for s in self.stages:
            msg = f"  {s.name:<22} {s.status}"
            if s.detail:
                msg += f"  {s.detail}"
            if s.error:
                msg += f"  [{s.error}]"
            lines.append(msg)
        lines += ["", "Selected variables: " + (", ".join(self.selected) if self.selected else "(none)")]
        for name, why in self.drop_reasons.items():
            lines.append(f"  dropped {name}: {why}")
        if self.removed_islands:
            lines.append("Removed islands: " + ", ".join(self.removed_islands))
        if self.autocorrelation:
            lines += ["", "Global autocorrelation of the response:"]
            for row in self.autocorrelation:
                lines.append(f"  {row['statistic']:<10} {row['value']:.6f}  expected {row['expected']:.6f}"
                             f"  pseudo-p {row['pseudo_p']:.4f}")
        if self.comparison:
            lines += ["", "Model comparison (lower AICc is better):",
                      f"  {'rank':<6}{'model':<12}{'AICc':>16}{'AIC':>16}{'R2':>12}"]
            for row in self.comparison:
                lines.append(f"  {row['rank']:<6}{row['model']:<12}{row['aicc']:>16.4f}{row['aic']:>16.4f}"
                             f"{_fmt_opt(row['r2']):>12}")
        if self.residual_autocorrelation:
            lines += ["", "Residual autocorrelation:",
                      f"  {'model':<12}{'Geary C':>12}{'pseudo-p':>10}{'Moran I':>12}{'pseudo-p':>10}"]
            for row in self.residual_autocorrelation:
                lines.append(f"  {row['model']:<12}{row['geary_c']:>12.4f}{row['geary_p']:>10.4f}"
                             f"{row['moran_i']:>12.4f}{row['moran_p']:>10.4f}")
        lines += ["", "Files:"]
        lines += [f"  {f['path']}" for f in self.files]
        return "\n".join(lines) + "\n"


def _fmt_opt(v) -> str:
    return "" if v is None else f"{v:.4f}"


class _Outputs:
    """Writes files into the run directory and keeps the manifest."""

    def __init__(self, root: Path):
        self.root = root
        self.written = []

    def text(self, name: str, content: str) -> None:
        path = self.root / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        self.written.append(name)

    def geojson(self, name: str, collection: dict) -> None:
        write_geojson(self.root / name, collection)
        self.written.append(name)

    def manifest(self) -> list:
        out = []
        for name in self.written:
            data = (self.root / name).read_bytes()
            out.append({"path": name, "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()})
        return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _build_weights(frame, stage: WeightsStage, adjacency):
    if stage.kind == "knn":
        W = build_knn(frame, stage.k)
    elif stage.kind == "band":
        W = build_distance_band(frame, stage.radius)
    else:
        W = build_contiguity(frame, adjacency)
    return row_standardize(W) if stage.row_standardize else W


class Pipeline:
    """Stateful runner; ``run`` is the entry point most callers want."""

    def __init__(self, config: RunConfig, output_dir: Path, threads: int = 1, formats: str | None = None):
        self.config = config
        self.out = _Outputs(Path(output_dir))
        self.threads = max(1, int(threads))
        self.formats = formats or config.formats
        self.report = RunReport(config=config.source, output_dir=Path(output_dir))
        self.timings = {}
        self.frame = None
        self.predictors = []
        self.weights = {}
        self.adjacency = None
        self.fits = {}

    def seed(self, name: str) -> int:
        return stage_seed(self.config.seed, name)

    def _stage(self, name: str, fn, requires=()):
        blocked = [r for r in requires if not r]
        if blocked:
            self.report.stages.append(StageRecord(name, SKIPPED, "an upstream stage failed"))
            return False
        t0 = time.perf_counter()
        try:
            detail = fn() or ""
        except SpatialHetError as exc:
            self.report.stages.append(StageRecord(name, FAILED, error=f"{type(exc).__name__}: {exc}",
                                                  exit_code=exit_code_for(exc)))
            return False
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            self.report.stages.append(StageRecord(name, FAILED, error=f"{type(exc).__name__}: {exc}",
                                                  exit_code=EXIT_NUMERICAL))
            return False
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)
        self.report.stages.append(StageRecord(name, OK, detail))
        return True

    # stages -------------------------------------------------------------

    def ingest(self):
        c = self.config
        derived = {d.out for d in c.derive}
        needed = []
        for d in c.derive:
            needed += [d.numerator, d.denominator]
        needed += [c.response, *c.predictors]
        needed = [n for n in dict.fromkeys(needed) if n not in derived]
        self.frame = read_frame(c.table, c.id_column, c.x_column, c.y_column, columns=needed,
                                delimiter=c.delimiter)
        if c.adjacency is not None:
            self.adjacency = read_adjacency(c.adjacency.read_text(encoding="utf-8"))
        dup = len(self.frame.duplicate_locations)
        return f"n={self.frame.n}" + (f", {dup} duplicate-location groups" if dup else "")

    def derive(self):
        for d in self.config.derive:
            self.frame = derive_share(self.frame, d.numerator, d.denominator, d.out)
        return f"{len(self.config.derive)} derived columns"

    def varsel(self):
        c = self.config
        candidates = [p for p in c.predictors if p not in set(c.varsel.exclude)]
        for name in c.varsel.exclude:
            self.report.drop_reasons[name] = "excluded by configuration"
        if not c.varsel.enabled or len(candidates) < 2:
            self.predictors = candidates
            if not candidates:
                raise DataError("no candidate predictors remain")
            return "screening disabled" if not c.varsel.enabled else "single candidate, screening skipped"
        funnel = select_variables(
            self.frame, ModelSpec(c.response, candidates), importance_threshold=c.varsel.importance,
            corr_threshold=c.varsel.correlation, vif_threshold=c.varsel.vif, n_trees=c.varsel.n_trees,
            min_leaf_size=c.varsel.min_leaf_size, seed=self.seed("varsel.forest"), n_jobs=self.threads,
        )
        self.report.drop_reasons.update(funnel.drop_reasons)
        reasons = funnel.drop_reasons
        self.out.text("varsel_importance.csv", funnel.report.table(funnel.selected, reasons))
        if not funnel.selected:
            raise DataError("variable selection retained no predictor")
        self.predictors = list(funnel.selected)
        return f"{len(self.predictors)} of {len(candidates)} predictors retained"

    def build_weights(self):
        roles = {role: self.config.weights_for(role) for role in WEIGHT_ROLES}
        built = {role: _build_weights(self.frame, st, self.adjacency) for role, st in roles.items()}
        islands = sorted({i for W in built.values() for i in W.islands})
        if islands:
            if len(islands) == self.frame.n:
                raise DataError("every unit is an island")
            removed = [self.frame.unit_ids[i] for i in islands]
            self.frame = self.frame.take(np.setdiff1d(np.arange(self.frame.n), islands))
            self.report.removed_islands = removed
            if self.adjacency is not None:
                gone = set(removed)
                self.adjacency = [(a, b) for a, b in self.adjacency if a not in gone and b not in gone]
            built = {role: _build_weights(self.frame, st, self.adjacency) for role, st in roles.items()}
        self.weights = built
        for role, W in built.items():
            self.out.text(f"weights_{role}.csv", W.export())
        desc = ", ".join(f"{r}={roles[r].describe()}" for r in WEIGHT_ROLES)
        return desc + (f"; dropped {len(islands)} islands" if islands else "")

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.config.response, self.predictors)

    def ols(self):
        fit = fit_ols(self.frame, self.spec)
        self.fits["ols"] = fit
        self.out.text("ols_summary.csv", fit.summary_table())
        return f"R2={fit.r2:.4f}"

    def autocorrelation(self):
        c = self.config
        W = self.weights["autocorrelation"]
        y = self.frame[c.response]
        rows = []
        for stat, fn in (("moran_i", morans_i), ("geary_c", gearys_c)):
            r = fn(y, W, n_permutations=c.permutations, seed=self.seed(f"autocorrelation.{stat}"))
            rows.append({"statistic": stat, "value": r.statistic, "expected": r.null_expectation,
                         "pseudo_p": r.pseudo_p, "alternative": r.alternative})
        self.report.autocorrelation = rows
        lisa = local_morans_i(y, W, n_permutations=c.permutations, seed=self.seed("autocorrelation.lisa"))
        self.out.text("lisa_response.csv", _csv_text(
            ["id", "local_moran", "pseudo_p", "label"],
            [[u, repr(float(v)), repr(float(p)), lab]
             for u, v, p, lab in zip(self.frame.unit_ids, lisa.local, lisa.pseudo_p, lisa.labels)],
        ))
        return f"Moran I={rows[0]['value']:.4f}, Geary C={rows[1]['value']:.4f}"

    def sar(self, kind: str):
        W = self.weights["sar"]
        fit = (fit_spatial_lag if kind == "sar_lag" else fit_spatial_error)(self.frame, self.spec, W)
        fit = _renamed(fit, kind)
        self.fits[kind] = fit
        self.out.text(f"{kind}_summary.csv", fit.summary_table())
        return f"parameter={fit.spatial_parameter:.4f}, LR={fit.lr_statistic:.4f}"

    def kernel(self) -> KernelSpec:
        g = self.config.gwr
        if g.bandwidth is not None:
            bw = BandwidthSpec.fixed(g.bandwidth) if g.mode == FIXED else BandwidthSpec.adaptive(int(g.bandwidth))
            return KernelSpec(g.kernel, bw)
        return select_bandwidth(self.frame, self.spec, g.kernel, g.mode, g.criterion).kernel

    def gwr(self, kind: str):
        g = self.config.gwr
        if kind == "gwr_basic":
            fit = fit_gwr(self.frame, self.spec, self.kernel())
        elif kind == "gwr_lcr":
            fit = fit_lcr_gwr(self.frame, self.spec, self.kernel(), cn_threshold=g.cn_threshold)
        else:
            fit = fit_msgwr(self.frame, self.spec, g.kernel, g.mode, g.criterion,
                            max_sweeps=g.max_sweeps, tol=g.tolerance)
        self.out.text(f"{kind}_summary.txt", summary_block(fit))
        if self.formats in ("csv", "both"):
            self.out.text(f"{kind}_surfaces.csv", surfaces_csv(fit, self.frame))
        if self.formats in ("geojson", "both"):
            self.out.geojson(f"{kind}_surfaces.geojson", surfaces_geojson(fit, self.frame))
        if kind == "msgwr" and not fit.converged:
            # the best iterate is exported for inspection but kept out of the comparison
            raise NumericalError(f"backfitting did not converge in {g.max_sweeps} sweeps")
        self.fits[kind] = fit
        if fit.variable_bandwidths is not None:
            bws = ", ".join(f"{t}:{b}" for t, b in zip(fit.terms, fit.variable_bandwidths))
            return f"bandwidths=({bws}), AICc={fit.aicc:.4f}"
        return f"bandwidth={fit.kernel.bandwidth}, AICc={fit.aicc:.4f}"

    def residual_diagnostics(self):
        W = self.weights["residuals"]
        rows = []
        for name, fit in self.fits.items():
            gc = gearys_c(fit.residuals, W, self.config.permutations, self.seed(f"residuals.{name}.geary"))
            mi = morans_i(fit.residuals, W, self.config.permutations, self.seed(f"residuals.{name}.moran"))
            rows.append({"model": name, "geary_c": gc.statistic, "geary_p": gc.pseudo_p,
                         "moran_i": mi.statistic, "moran_p": mi.pseudo_p})
        self.report.residual_autocorrelation = rows
        self.out.text("residual_autocorrelation.csv", _csv_text(
            ["model", "geary_c", "geary_pseudo_p", "moran_i", "moran_pseudo_p"],
            [[r["model"], repr(r["geary_c"]), repr(r["geary_p"]), repr(r["moran_i"]), repr(r["moran_p"])]
             for r in rows],
        ))
        return f"{len(rows)} models"

    def comparison(self):
        ranked = compare_aic(self.fits, "aicc")
        rows = []
        for rank, (name, aicc) in enumerate(ranked, start=1):
            fit = self.fits[name]
            r2 = getattr(fit, "r2", None)
            rows.append({"rank": rank, "model": name, "aicc": aicc, "aic": float(fit.aic),
                         "r2": None if r2 is None else float(r2)})
        self.report.comparison = rows
        self.out.text("model_comparison.csv", _csv_text(
            ["rank", "model", "aicc", "aic", "r2"],
            [[r["rank"], r["model"], repr(r["aicc"]), repr(r["aic"]), "" if r["r2"] is None else repr(r["r2"])]
             for r in rows],
        ))
        return f"best={ranked[0][0]}"

    def export_frame(self):
        extra = {}
        for name, fit in self.fits.items():
            extra[f"fitted_{name}"] = fit.fitted
            extra[f"resid_{name}"] = fit.residuals
        if self.formats in ("csv", "both"):
            frame = self.frame
            for k, v in extra.items():
                frame = frame.with_column(k, v)
            self.out.text("frame.csv", frame.to_csv(id_column=self.config.id_column,
                                                     x_column=self.config.x_column, y_column=self.config.y_column))
        if self.formats in ("geojson", "both"):
            self.out.geojson("frame.geojson", self.frame.to_geojson(extra))
        return f"{len(self.out.written)} files"

    # driver -------------------------------------------------------------

    def execute(self) -> RunReport:
        started = datetime.now(timezone.utc)
        stages = self.config.stages
        ok_in = self._stage("ingest", self.ingest)
        ok_dv = self._stage("derive", self.derive, [ok_in])
        ok_vs = self._stage("varsel", self.varsel, [ok_in, ok_dv])
        ready = ok_in and ok_dv and ok_vs
        ok_w = self._stage("weights", self.build_weights, [ready])
        if "ols" in stages:
            self._stage("ols", self.ols, [ready and ok_w])
        self._stage("autocorrelation", self.autocorrelation, [ready and ok_w])
        for kind in ("sar_lag", "sar_error"):
            if kind in stages:
                self._stage(kind, lambda k=kind: self.sar(k), [ready and ok_w])
        for kind in ("gwr_basic", "gwr_lcr", "msgwr"):
            if kind in stages:
                self._stage(kind, lambda k=kind: self.gwr(k), [ready and ok_w])
        have_fits = bool(self.fits)
        self._stage("residual_diagnostics", self.residual_diagnostics, [ready and ok_w and have_fits])
        self._stage("comparison", self.comparison, [have_fits])
        self._stage("export", self.export_frame, [ok_in and ok_dv])
        self.report.selected = list(self.predictors)
        self.report.metadata = {
            "started": started.isoformat(timespec="seconds"),
            "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "timings_seconds": self.timings,
            "threads": self.threads,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        self.finish()
        return self.report

    def finish(self) -> None:
        """Write report.txt and report.json; the JSON manifest hashes every other file."""
        self.report.files = [{"path": n} for n in [*self.out.written, "report.txt", "report.json"]]
        self.out.text("report.txt", self.report.to_text())
        self.report.files = self.out.manifest() + [{"path": "report.json", "bytes": None, "sha256": None}]
        payload = json.dumps(_clean(self.report.to_dict()), indent=1, allow_nan=False)
        (self.out.root / "report.json").write_text(payload + "\n", encoding="utf-8")


def _renamed(fit, name):
    return replace(fit, name=name)


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    obj = _jsonable(obj) if isinstance(obj, (np.generic,)) else obj
    if isinstance(obj, float) and not np.isfinite(obj):
        return "nan" if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def run(config: RunConfig, output_dir=None, threads: int = 1, formats: str | None = None) -> RunReport:
    """Execute every enabled stage and write the run directory.

    Pre-flight validation (column bindings, readable inputs) happens before
    the output directory is created, so a bad config leaves nothing behind.
    A failing stage is recorded with its error; stages that do not depend on
    it still run and earlier outputs are kept. ``report.exit_code`` is
    nonzero if any stage failed.
    """
    preflight(config)
    out = Path(output_dir) if output_dir is not None else config.output_dir
    if out is None:
        raise ConfigError("no output directory given (config output.directory or --output-dir)")
    out.mkdir(parents=True, exist_ok=True)
    return Pipeline(config, out, threads=threads, formats=formats).execute()
