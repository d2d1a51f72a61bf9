"""Canonical data model: cities, GDP, distances, OD flows, and the eight flow features."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import NoSuchYear

FEATURE_NAMES = ("I_C", "O_C", "N_C", "R_C", "I_K", "O_K", "N_K", "R_K")


class VehicleClass(str, enum.Enum):
    CARS_BUSES = "carbus"
    TRUCKS = "truck"

    @property
    def suffix(self) -> str:
        return "C" if self is VehicleClass.CARS_BUSES else "K"

    @classmethod
    def parse(cls, value: "str | VehicleClass") -> "VehicleClass":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown vehicle class {value!r}; expected carbus or truck") from None


@dataclass(frozen=True)
class City:
    id: str
    name: str = ""
    lon: float | None = None
    lat: float | None = None


@dataclass(frozen=True)
class GdpRecord:
    city: str
    year: int
    gdp: float


@dataclass(frozen=True)
class FlowMatrix:
    """Directed OD volumes for one (year, vehicle class).

    ``entries`` maps ``(origin, destination)`` to a vehicle count; the
    diagonal holds intracity flow. ``payload`` is passengers (cars & buses)
    or tonnes (trucks) where known.
    """

    year: int
    vehicle_class: VehicleClass
    entries: Mapping[tuple[str, str], float]
    payload: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vehicle_class", VehicleClass.parse(self.vehicle_class))

    def to_array(self, city_ids: Iterable[str]) -> np.ndarray:
        ids = list(city_ids)
        index = {c: k for k, c in enumerate(ids)}
        out = np.zeros((len(ids), len(ids)))
        for (o, d), v in self.entries.items():
            if o in index and d in index:
                out[index[o], index[d]] = v
        return out

    @classmethod
    def from_array(cls, year: int, vehicle_class, city_ids, array, payload=None) -> "FlowMatrix":
        ids = list(city_ids)
        a = np.asarray(array, dtype=float)
        entries = {(o, d): float(a[i, j]) for i, o in enumerate(ids) for j, d in enumerate(ids)}
        pay = {}
        if payload is not None:
            p = np.asarray(payload, dtype=float)
            pay = {(o, d): float(p[i, j]) for i, o in enumerate(ids) for j, d in enumerate(ids)}
        return cls(year, VehicleClass.parse(vehicle_class), entries, pay)


@dataclass(frozen=True)
class DistanceMatrix:
    """Pairwise distances in km, keyed by ordered pair (both directions present after loading)."""

    entries: Mapping[tuple[str, str], float]

    def get(self, a: str, b: str) -> float | None:
        v = self.entries.get((a, b))
        if v is None:
            v = self.entries.get((b, a))
        return v

    def to_array(self, city_ids: Iterable[str]) -> np.ndarray:
        """Dense matrix; missing off-diagonal pairs are NaN, diagonal is 0."""
        ids = list(city_ids)
        n = len(ids)
        out = np.full((n, n), np.nan)
        np.fill_diagonal(out, 0.0)
        for i, a in enumerate(ids):
            for j, b in enumerate(ids):
                if i != j:
                    v = self.get(a, b)
                    if v is not None:
                        out[i, j] = v
        return out

    @classmethod
    def from_array(cls, city_ids, array) -> "DistanceMatrix":
        ids = list(city_ids)
        a = np.asarray(array, dtype=float)
        return cls({(x, y): float(a[i, j]) for i, x in enumerate(ids)
                    for j, y in enumerate(ids) if i != j})


@dataclass(frozen=True)
class RegionDataset:
    cities: tuple[City, ...]
    gdp: tuple[GdpRecord, ...]
    distances: DistanceMatrix
    flows: tuple[FlowMatrix, ...]

    @property
    def city_ids(self) -> list[str]:
        return [c.id for c in self.cities]

    @property
    def years(self) -> list[int]:
        return sorted({f.year for f in self.flows} | {g.year for g in self.gdp})

    def flow(self, year: int, vehicle_class) -> FlowMatrix:
        vc = VehicleClass.parse(vehicle_class)
        for f in self.flows:
            if f.year == year and f.vehicle_class is vc:
                return f
        raise NoSuchYear(f"no {vc.value} flow matrix for year {year}")

    def gdp_vector(self, year: int) -> np.ndarray:
        by_city = {g.city: g.gdp for g in self.gdp if g.year == year}
        missing = [c for c in self.city_ids if c not in by_city]
        if missing:
            raise NoSuchYear(f"no GDP for year {year} for cities {missing}")
        return np.array([by_city[c] for c in self.city_ids])


@dataclass(frozen=True)
class FeatureTable:
    """The eight flow predictors per (city, year).

    Ratio cells with a zero outgoing-flow denominator hold NaN and are listed
    in ``undefined``; such rows are excluded from regression.
    """

    keys: tuple[tuple[str, int], ...]
    values: np.ndarray
    undefined: tuple[tuple[str, int, str], ...] = ()
    columns: tuple[str, ...] = FEATURE_NAMES

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    @property
    def defined_mask(self) -> np.ndarray:
        return ~np.isnan(self.values).any(axis=1)

    def row(self, city: str, year: int) -> dict[str, float]:
        k = self.keys.index((city, year))
        return dict(zip(self.columns, self.values[k].tolist()))

    @staticmethod
    def concat(tables: Iterable["FeatureTable"]) -> "FeatureTable":
        tables = list(tables)
        if not tables:
            return FeatureTable((), np.zeros((0, len(FEATURE_NAMES))))
        return FeatureTable(
            tuple(k for t in tables for k in t.keys),
            np.vstack([t.values for t in tables]),
            tuple(u for t in tables for u in t.undefined),
        )


def extract_features(dataset: RegionDataset, year: int) -> FeatureTable:
    """Incoming, outgoing, intracity flow and in/out ratio per city, for both vehicle classes."""
    ids = dataset.city_ids
    cols = []
    undefined = []
    for vc in (VehicleClass.CARS_BUSES, VehicleClass.TRUCKS):
        G = dataset.flow(year, vc).to_array(ids)
        intra = np.diag(G).copy()
        off = G.copy()
        np.fill_diagonal(off, 0.0)
        incoming = off.sum(axis=0)
        outgoing = off.sum(axis=1)
        ratio = np.full(len(ids), np.nan)
        ok = outgoing > 0
        with np.errstate(over="ignore"):
            ratio[ok] = incoming[ok] / outgoing[ok]
        # denormal denominators can overflow; treat like a zero denominator
        ok &= np.isfinite(ratio)
        ratio[~ok] = np.nan
        for k in np.flatnonzero(~ok):
            undefined.append((ids[k], year, f"R_{vc.suffix}"))
        cols.extend([incoming, outgoing, intra, ratio])
    return FeatureTable(
        tuple((c, year) for c in ids),
        np.column_stack(cols),
        tuple(undefined),
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.location}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict:
        as_dict = lambda v: {"kind": v.kind, "location": v.location, "message": v.message}
        return {
            "ok": self.ok,
            "violations": [as_dict(v) for v in self.violations],
            "warnings": [as_dict(v) for v in self.warnings],
        }


def validate(dataset: RegionDataset) -> ValidationReport:
    """Collect every invariant violation; never raises."""
    rep = ValidationReport()
    bad = rep.violations.append

    ids = [c.id for c in dataset.cities]
    known = set(ids)
    seen = set()
    for c in dataset.cities:
        if not c.id:
            bad(Violation("empty_city_id", "cities", "city id is empty"))
        if c.id in seen:
            bad(Violation("duplicate_city", f"city {c.id}", "city id listed more than once"))
        seen.add(c.id)

    gdp_keys = set()
    for g in dataset.gdp:
        loc = f"gdp {g.city}/{g.year}"
        if g.city not in known:
            bad(Violation("unknown_city", loc, f"city {g.city!r} not in city list"))
        if not (g.gdp > 0 and math.isfinite(g.gdp)):
            bad(Violation("non_positive_gdp", loc, f"gdp {g.gdp} must be > 0"))
        if (g.city, g.year) in gdp_keys:
            bad(Violation("duplicate_gdp", loc, "duplicate (city, year)"))
        gdp_keys.add((g.city, g.year))

    dist = dataset.distances.entries
    for (a, b), km in sorted(dist.items()):
        loc = f"distance {a}->{b}"
        for c in (a, b):
            if c not in known:
                bad(Violation("unknown_city", loc, f"city {c!r} not in city list"))
        if a == b:
            if km != 0:
                bad(Violation("nonzero_diagonal_distance", loc, f"diagonal distance {km} must be 0"))
            continue
        if not (km > 0 and math.isfinite(km)):
            bad(Violation("non_positive_distance", loc, f"distance {km} must be > 0"))
        back = dist.get((b, a))
        if back is not None and back != km and a < b:
            bad(Violation("asymmetric_distance", loc, f"{a}->{b}={km} but {b}->{a}={back}"))
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if dataset.distances.get(a, b) is None:
                bad(Violation("missing_distance", f"distance {a}<->{b}", "no distance for city pair"))

    flow_keys = set()
    for f in dataset.flows:
        tag = f"flows {f.year}/{f.vehicle_class.value}"
        if (f.year, f.vehicle_class) in flow_keys:
            bad(Violation("duplicate_flow_matrix", tag, "matrix given twice"))
        flow_keys.add((f.year, f.vehicle_class))
        for (o, d), v in sorted(f.entries.items()):
            loc = f"{tag} {o}->{d}"
            for c in (o, d):
                if c not in known:
                    bad(Violation("unknown_city", loc, f"city {c!r} not in city list"))
            if not (v >= 0 and math.isfinite(v)):
                bad(Violation("negative_volume", loc, f"volume {v} must be >= 0"))
        for (o, d), v in sorted(f.payload.items()):
            if not (v >= 0 and math.isfinite(v)):
                bad(Violation("negative_payload", f"{tag} {o}->{d}", f"payload {v} must be >= 0"))

    flow_years = {y for y, _ in flow_keys}
    if dataset.gdp and flow_years and not (flow_years & {g.year for g in dataset.gdp}):
        bad(Violation("no_common_year", "dataset", "flow years and GDP years do not overlap"))

    if rep.ok:
        for year in sorted(flow_years):
            if all((year, vc) in flow_keys for vc in VehicleClass):
                for city, y, col in extract_features(dataset, year).undefined:
                    rep.warnings.append(Violation(
                        "undefined_ratio", f"{city}/{y}",
                        f"{col} undefined (zero outgoing flow); row excluded from regression"))
    return rep
