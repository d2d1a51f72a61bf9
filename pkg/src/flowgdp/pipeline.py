"""Stage orchestration: features -> regression -> gravity -> network -> pca -> distfit.

Each stage writes one JSON report (validated against ``schemas``) plus
optional CSV/DOT/GeoJSON side files. Exit status: 0 success, 1 data error,
2 numerical failure.
"""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import distfit as distfit_mod
from . import gravity as gravity_mod
from . import network as net
from . import pca as pca_mod
from . import regression as reg
from .dataio import DEFAULT_NAMES, load_dataset
from .errors import DataError, FlowGdpError, UndefinedCorrelation
from .model import FEATURE_NAMES, FeatureTable, RegionDataset, VehicleClass, extract_features
from .schemas import validate_report
from .serialize import atomic_write_text, clean, dumps, fmt

log = logging.getLogger(__name__)

STAGES = ("features", "regression", "gravity", "network", "pca", "distfit")
REGRESSION_METHODS = ("ols", "glm", "ridge", "lasso")
GRAVITY_METHODS = ("loglinear", "minimax", "null")


@dataclass
class PipelineConfig:
    data_dir: str | None = None
    cities: str | None = None
    flows: str | None = None
    distances: str | None = None
    gdp: str | None = None
    out_dir: str = "flowgdp-out"
    years: list[int] | None = None
    classes: list[str] = field(default_factory=lambda: ["carbus", "truck"])
    stages: list[str] = field(default_factory=lambda: list(STAGES))
    regression_methods: list[str] = field(default_factory=lambda: list(REGRESSION_METHODS))
    gravity_methods: list[str] = field(default_factory=lambda: list(GRAVITY_METHODS))
    null_mode: str = "loglog"
    ridge_grid: list[float] | None = None
    lasso_grid: list[float] | None = None
    damping: float = 0.85
    pca_standardize: bool = True
    pca_include_diagonal: bool = False
    pca_components: list[int] = field(default_factory=lambda: [1, 2])
    loading_threshold: float = 0.3
    score_threshold: float = 1.0
    pca_signed: bool = False
    bootstrap_n: int = 1000
    seed: int = 0

    def __post_init__(self):
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ValueError(f"unknown stages {bad}; choose from {list(STAGES)}")
        bad = [m for m in self.regression_methods if m not in REGRESSION_METHODS]
        if bad:
            raise ValueError(f"unknown regression methods {bad}")
        bad = [m for m in self.gravity_methods if m not in GRAVITY_METHODS]
        if bad:
            raise ValueError(f"unknown gravity methods {bad}")
        self.classes = [VehicleClass.parse(c).value for c in self.classes]
        if self.years is not None:
            self.years = [int(y) for y in self.years]
            if not self.years:
                raise ValueError("year range is empty")
        if self.loading_threshold < 0 or self.score_threshold < 0:
            raise ValueError("PCA thresholds must be >= 0")

    @classmethod
    def from_file(cls, path, **overrides) -> "PipelineConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def input_paths(self) -> dict[str, Path]:
        base = Path(self.data_dir) if self.data_dir else None
        out = {}
        for key in ("cities", "flows", "distances", "gdp"):
            val = getattr(self, key)
            if val is None:
                if base is None:
                    raise ValueError(f"no path for {key}.csv: set data_dir or {key}")
                val = base / DEFAULT_NAMES[key]
            out[key] = Path(val)
        return out


@dataclass
class PipelineResult:
    exit_code: int
    written: list[Path] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def _analysis_years(ds: RegionDataset, cfg: PipelineConfig) -> list[int]:
    have = {(f.year, f.vehicle_class.value) for f in ds.flows}
    gdp_years = {g.year for g in ds.gdp}
    full = sorted(y for y in {f.year for f in ds.flows}
                  if all((y, c.value) in have for c in VehicleClass) and y in gdp_years)
    if cfg.years is None:
        if not full:
            raise DataError("no year has both vehicle classes and GDP")
        return full
    missing = [y for y in cfg.years if y not in full]
    if missing:
        raise DataError(f"years {missing} lack flows for both classes or GDP")
    return list(cfg.years)


class _Run:
    def __init__(self, ds: RegionDataset, cfg: PipelineConfig):
        self.ds = ds
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.years = _analysis_years(ds, cfg)
        self.ids = ds.city_ids
        self.written: list[Path] = []
        self._features: FeatureTable | None = None

    def emit(self, stage: str, body: dict) -> None:
        doc = clean({"stage": stage, "schema_version": 1, **body})
        validate_report(stage, doc)
        self.written.append(atomic_write_text(self.out / f"{stage}.json", dumps(doc)))

    def side(self, name: str, text: str) -> None:
        self.written.append(atomic_write_text(self.out / name, text))

    @property
    def features(self) -> FeatureTable:
        if self._features is None:
            self._features = FeatureTable.concat(extract_features(self.ds, y) for y in self.years)
        return self._features

    # --- stages -----------------------------------------------------------

    def stage_features(self):
        t = self.features
        rows = [{"city": c, "year": y, **dict(zip(t.columns, vals))}
                for (c, y), vals in zip(t.keys, t.values.tolist())]
        self.emit("features", {
            "columns": list(t.columns),
            "rows": rows,
            "undefined": [{"city": c, "year": y, "column": col} for c, y, col in t.undefined],
        })

    def stage_regression(self):
        gdp = {(g.city, g.year): g.gdp for g in self.ds.gdp}
        t = self.features
        X = reg.DesignMatrix.from_features(t, gdp, FEATURE_NAMES)
        excluded = [{"city": c, "year": y} for (c, y) in t.keys if (c, y) not in set(X.row_keys)]
        vifs = reg.vif(X)
        fits, diags = {}, {}
        for method in self.cfg.regression_methods:
            if method == "ols":
                rep = reg.fit_ols(X)
                rep.vif = vifs
                fits["ols"] = rep.to_dict()
                diags["ols"] = reg.diagnostics(rep, X).to_dict()
            elif method == "glm":
                rep = reg.fit_log_glm(X)
                fits["glm"] = rep.to_dict()
                diags["glm"] = reg.diagnostics(rep, X).to_dict()
            else:
                grid = self._grid(method, X)
                best, scores = reg.calibrate_lambda(X, method, grid)
                rep = (reg.fit_ridge if method == "ridge" else reg.fit_lasso)(X, best)
                d = rep.to_dict()
                d["cv"] = {"grid": grid, "scores": scores.tolist(), "best_lambda": best}
                fits[method] = d
        self.emit("regression", {
            "columns": list(X.columns),
            "n_obs": X.n_obs,
            "excluded_rows": excluded,
            "vif": dict(zip(X.columns, vifs.tolist())),
            "fits": fits,
            "diagnostics": diags,
        })

    def _grid(self, method, X):
        given = self.cfg.ridge_grid if method == "ridge" else self.cfg.lasso_grid
        if given is not None:
            return [float(g) for g in given]
        if method == "ridge":
            return [0.0] + (X.n_obs * np.logspace(-4, 1, 19)).tolist()
        lmax = reg.lasso_lambda_max(X)
        return [0.0] + (lmax * np.logspace(-4, 0, 19)).tolist()

    def stage_gravity(self):
        fits = []
        for year in self.years:
            for vc in self.cfg.classes:
                flows = self.ds.flow(year, vc)
                for method in self.cfg.gravity_methods:
                    if method == "null":
                        fit = gravity_mod.fit_nullmodel(flows, self.ds.distances, self.ids,
                                                        mode=self.cfg.null_mode)
                    else:
                        fit = gravity_mod.FITTERS[method](flows, self.ds.distances, self.ids)
                    d = fit.to_dict()
                    if method == "null":
                        d["k_constant"] = None
                    fits.append({"year": year, "vehicle_class": vc, **d})
        self.emit("gravity", {"fits": fits})

    def stage_network(self):
        out = {}
        for year in self.years:
            gd = net.WeightedGraph.from_distances(self.ds.distances, self.ids)
            entry = {"distance": {"betweenness": net.betweenness(gd), "closeness": net.closeness(gd)}}
            series = {"Betw(D)": entry["distance"]["betweenness"],
                      "Closeness(D)": entry["distance"]["closeness"]}
            unreachable = len(net.unreachable_pairs(gd))
            for vc in self.cfg.classes:
                g = net.WeightedGraph.from_flows(self.ds.flow(year, vc), self.ids)
                entry[vc] = {"closeness": net.closeness(g),
                             "pagerank": net.pagerank(g, self.cfg.damping)}
                tag = VehicleClass(vc).suffix
                series[f"Closeness({tag})"] = entry[vc]["closeness"]
                series[f"PageRank({tag})"] = entry[vc]["pagerank"]
            gdp = dict(zip(self.ids, self.ds.gdp_vector(year).tolist()))
            corr = {}
            for name, vals in series.items():
                try:
                    corr[name] = net.correlate_with_gdp({name: vals}, gdp)[name]
                except UndefinedCorrelation:
                    corr[name] = None
            labels, M = net.correlation_table({"GDP": gdp, **series}, self.ids)
            entry["correlation_with_gdp"] = corr
            entry["correlation_table"] = {"labels": labels, "matrix": M}
            entry["unreachable_pairs"] = unreachable
            out[str(year)] = entry
            rows = [",".join(["", *labels])]
            rows += [",".join([lab, *(fmt(v) for v in M[i])]) for i, lab in enumerate(labels)]
            self.side(f"network_correlation_{year}.csv", "\n".join(rows) + "\n")
        self.emit("network", {"years": out})

    def stage_pca(self):
        coords = {c.id: (c.lon, c.lat) for c in self.ds.cities
                  if c.lon is not None and c.lat is not None}
        results = []
        for year in self.years:
            for vc in self.cfg.classes:
                flows = self.ds.flow(year, vc)
                res = pca_mod.pca_flows(flows, self.ids, self.cfg.pca_standardize,
                                        self.cfg.pca_include_diagonal)
                subs = []
                for k in self.cfg.pca_components:
                    if k > res.n_components:
                        continue
                    sub = pca_mod.extract_subnetwork(res, flows, k, self.cfg.loading_threshold,
                                                     self.cfg.score_threshold, self.cfg.pca_signed)
                    subs.append(sub.to_dict())
                    stem = f"pca_{year}_{vc}_pc{k}"
                    self.side(f"{stem}.dot", sub.to_dot())
                    if coords:
                        self.side(f"{stem}.geojson", dumps(sub.to_geojson(coords)))
                results.append({"year": year, "vehicle_class": vc, "pca": res.to_dict(),
                                "subnetworks": subs})
        self.emit("pca", {"results": results})

    def stage_distfit(self):
        years = set(self.years)
        sample = [g.gdp for g in self.ds.gdp if g.year in years]
        res = distfit_mod.fit_distributions(sample, self.cfg.bootstrap_n, self.cfg.seed)
        self.emit("distfit", {"n": len(sample), **res.to_dict()})
        self.side("distfit_bootstrap.csv", res.bootstrap_csv())


def run_dataset(ds: RegionDataset, cfg: PipelineConfig) -> PipelineResult:
    """Run the configured stages on an in-memory dataset."""
    result = PipelineResult(0)
    try:
        run = _Run(ds, cfg)
    except FlowGdpError as exc:
        return PipelineResult(exc.exit_code, [], [str(exc)])
    for stage in STAGES:
        if stage not in cfg.stages:
            continue
        try:
            getattr(run, f"stage_{stage}")()
        except FlowGdpError as exc:
            result.errors.append(f"{stage}: {type(exc).__name__}: {exc}")
            result.exit_code = exc.exit_code
            break
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            result.errors.append(f"{stage}: {type(exc).__name__}: {exc}")
            result.exit_code = 2
            break
        log.info("stage %s done", stage)
    result.written = run.written
    return result


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Load the configured CSVs and run the pipeline."""
    try:
        paths = cfg.input_paths()
        ds = load_dataset(paths["cities"], paths["flows"], paths["distances"], paths["gdp"])
    except FlowGdpError as exc:
        return PipelineResult(exc.exit_code, [], [f"load: {type(exc).__name__}: {exc}"])
    except (OSError, ValueError) as exc:
        return PipelineResult(1, [], [f"load: {exc}"])
    return run_dataset(ds, cfg)


def report_errors(result: PipelineResult, stream=sys.stderr) -> None:
    for e in result.errors:
        print(f"error: {e}", file=stream)
