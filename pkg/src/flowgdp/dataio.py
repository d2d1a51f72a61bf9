"""CSV ingestion and export of region datasets.

Schemas (UTF-8, header row, comma separated)::

    cities.csv     city_id,name,lon,lat            (lon/lat optional)
    gdp.csv        city_id,year,gdp_billion_cny
    distances.csv  origin,dest,km                  (one direction suffices)
    flows.csv      year,vehicle_class,origin,dest,vehicles,payload   (payload optional)
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

from .errors import ParseError, SchemaError, ValidationError
from .model import City, DistanceMatrix, FlowMatrix, GdpRecord, RegionDataset, VehicleClass, validate
from .serialize import atomic_write_text

CITIES_COLUMNS = ("city_id", "name", "lon", "lat")
GDP_COLUMNS = ("city_id", "year", "gdp_billion_cny")
DISTANCE_COLUMNS = ("origin", "dest", "km")
FLOW_COLUMNS = ("year", "vehicle_class", "origin", "dest", "vehicles", "payload")

REQUIRED = {
    "cities": ("city_id", "name"),
    "gdp": GDP_COLUMNS,
    "distances": DISTANCE_COLUMNS,
    "flows": ("year", "vehicle_class", "origin", "dest", "vehicles"),
}
DEFAULT_NAMES = {"cities": "cities.csv", "gdp": "gdp.csv", "distances": "distances.csv",
                 "flows": "flows.csv"}


def _rows(path, kind, allowed):
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in REQUIRED[kind] if c not in header]
        extra = [c for c in header if c not in allowed]
        if missing or extra:
            raise SchemaError(
                f"{path}: expected columns {list(allowed)}; "
                f"missing {missing or 'none'}, unexpected {extra or 'none'}")
        reader.fieldnames = header
        for lineno, row in enumerate(reader, start=2):
            yield lineno, {k: (v or "").strip() for k, v in row.items() if k is not None}


def _num(path, row, col, text, *, nonneg=False, positive=False, optional=False):
    if text == "":
        if optional:
            return None
        raise ParseError(path, row, col, "value is missing")
    try:
        val = float(text)
    except ValueError:
        raise ParseError(path, row, col, f"{text!r} is not a number") from None
    if not math.isfinite(val):
        raise ParseError(path, row, col, f"{text!r} is not finite")
    if nonneg and val < 0:
        raise ParseError(path, row, col, f"{text!r} must be >= 0")
    if positive and val <= 0:
        raise ParseError(path, row, col, f"{text!r} must be > 0")
    return val


def _int(path, row, col, text):
    try:
        return int(text)
    except ValueError:
        raise ParseError(path, row, col, f"{text!r} is not an integer") from None


def read_cities(path) -> tuple[City, ...]:
    out = []
    for row, r in _rows(path, "cities", CITIES_COLUMNS):
        if not r["city_id"]:
            raise ParseError(path, row, "city_id", "city id is empty")
        lon = _num(path, row, "lon", r.get("lon", ""), optional=True)
        lat = _num(path, row, "lat", r.get("lat", ""), optional=True)
        out.append(City(r["city_id"], r["name"], lon, lat))
    return tuple(out)


def read_gdp(path) -> tuple[GdpRecord, ...]:
    return tuple(
        GdpRecord(r["city_id"], _int(path, row, "year", r["year"]),
                  _num(path, row, "gdp_billion_cny", r["gdp_billion_cny"]))
        for row, r in _rows(path, "gdp", GDP_COLUMNS))


def read_distances(path) -> DistanceMatrix:
    given = {}
    for row, r in _rows(path, "distances", DISTANCE_COLUMNS):
        given[(r["origin"], r["dest"])] = _num(path, row, "km", r["km"])
    entries = dict(given)
    for (a, b), km in given.items():
        entries.setdefault((b, a), km)
    return DistanceMatrix(entries)


def read_flows(path) -> tuple[FlowMatrix, ...]:
    groups: dict = {}
    for row, r in _rows(path, "flows", FLOW_COLUMNS):
        year = _int(path, row, "year", r["year"])
        try:
            vc = VehicleClass.parse(r["vehicle_class"])
        except ValueError as exc:
            raise ParseError(path, row, "vehicle_class", str(exc)) from None
        vol = _num(path, row, "vehicles", r["vehicles"], nonneg=True)
        pay = _num(path, row, "payload", r.get("payload", ""), nonneg=True, optional=True)
        entries, payload = groups.setdefault((year, vc), ({}, {}))
        key = (r["origin"], r["dest"])
        if key in entries:
            raise ParseError(path, row, "origin", f"duplicate flow {key[0]}->{key[1]}")
        entries[key] = vol
        if pay is not None:
            payload[key] = pay
    return tuple(FlowMatrix(y, vc, e, p) for (y, vc), (e, p) in
                 sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1].value)))


def load_dataset(cities_csv, flows_csv, distances_csv, gdp_csv, *, check: bool = True) -> RegionDataset:
    """Read the four CSVs; raises ValidationError if the dataset is not well formed."""
    ds = RegionDataset(read_cities(cities_csv), read_gdp(gdp_csv),
                       read_distances(distances_csv), read_flows(flows_csv))
    if check:
        rep = validate(ds)
        if not rep.ok:
            raise ValidationError(rep)
    return ds


def load_dir(directory, *, check: bool = True) -> RegionDataset:
    d = Path(directory)
    return load_dataset(d / DEFAULT_NAMES["cities"], d / DEFAULT_NAMES["flows"],
                        d / DEFAULT_NAMES["distances"], d / DEFAULT_NAMES["gdp"], check=check)


def _csv_text(header, rows) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _exact(x) -> str:
    return "" if x is None else repr(float(x))


def write_dataset(ds: RegionDataset, directory) -> dict[str, Path]:
    """Write the four CSVs with full float precision (exact read-back)."""
    d = Path(directory)
    ids = ds.city_ids
    order = {c: k for k, c in enumerate(ids)}
    paths = {}
    paths["cities"] = atomic_write_text(d / DEFAULT_NAMES["cities"], _csv_text(
        CITIES_COLUMNS, [(c.id, c.name, _exact(c.lon), _exact(c.lat)) for c in ds.cities]))
    paths["gdp"] = atomic_write_text(d / DEFAULT_NAMES["gdp"], _csv_text(
        GDP_COLUMNS, [(g.city, g.year, _exact(g.gdp)) for g in ds.gdp]))
    dist_rows = []
    for (a, b), km in sorted(ds.distances.entries.items(), key=lambda kv: (order.get(kv[0][0], 0), order.get(kv[0][1], 0))):
        back = ds.distances.entries.get((b, a))
        if order.get(a, 0) < order.get(b, 0) or back is None or back != km:
            dist_rows.append((a, b, _exact(km)))
    paths["distances"] = atomic_write_text(d / DEFAULT_NAMES["distances"],
                                           _csv_text(DISTANCE_COLUMNS, dist_rows))
    flow_rows = []
    for f in ds.flows:
        for (o, de), v in sorted(f.entries.items(), key=lambda kv: (order.get(kv[0][0], 0), order.get(kv[0][1], 0))):
            flow_rows.append((f.year, f.vehicle_class.value, o, de, _exact(v),
                              _exact(f.payload.get((o, de)))))
    paths["flows"] = atomic_write_text(d / DEFAULT_NAMES["flows"], _csv_text(FLOW_COLUMNS, flow_rows))
    return paths
