"""Deterministic CSV and JSON writers for the toolkit's record types.

Every float is printed with 17 significant digits (full round-trip
precision), so identical inputs produce byte-identical files on one
platform.  JSON documents are emitted as JSON lines, one object per
record, each carrying a ``schema_version`` field.
"""

from __future__ import annotations

import io
import json
import math
from typing import Any, Iterable, Optional

from .atlas import BifurcationPoint, BranchSample, RegionGrid
from .events import OrbitClass, OrbitRecord
from .symmap import FixedPoint, Spectrum
from .torus import TorusScanResult

SCHEMA_VERSION = 1


def fmt(x: Any) -> str:
    """Render one value for CSV output; floats get 17 significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def _json_default(x):
    raise TypeError(f"not JSON serializable: {type(x)}")


class _F(float):
    """Float wrapper whose repr is the fixed 17-significant-digit form."""

    def __repr__(self):
        return format(float(self), ".17g")


def _wrap_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return _F(obj)
    if isinstance(obj, dict):
        return {k: _wrap_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_wrap_floats(v) for v in obj]
    return obj


def json_line(record: dict) -> str:
    """One deterministic JSON line with schema_version injected."""
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(record)
    return json.dumps(_wrap_floats(payload), default=_json_default, sort_keys=False)


def write_json_lines(records: Iterable[dict], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json_line(rec) + "\n")


def write_csv(header: list[str], rows: Iterable[Iterable[Any]], path_or_buf) -> None:
    own = isinstance(path_or_buf, str)
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def csv_text(header: list[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    write_csv(header, rows, buf)
    return buf.getvalue()


# --------------------------------------------------------------------------
# Record-specific encodings
# --------------------------------------------------------------------------


def orbit_record_json(rec: OrbitRecord, cls: Optional[OrbitClass] = None) -> dict:
    out = {
        "Q": rec.params.Q,
        "Omega": rec.params.Omega,
        "sigma": rec.params.sigma,
        "terminated": rec.terminated,
        "n_events": len(rec.events),
        "events": [{"kind": e.kind.value, "time": e.time} for e in rec.events],
        "intervals": rec.intervals,
        "h_section": [list(pt) for pt in rec.h_section],
    }
    if cls is not None:
        out["classification"] = {
            "tag": cls.tag.value,
            "label": cls.label,
            "symbols": list(cls.symbols) if cls.symbols else None,
            "nu": cls.nu,
            "symmetry": cls.symmetry,
            "period": cls.period,
        }
    return out


ORBIT_CSV_HEADER = ["t", "x", "y"]


def orbit_samples_rows(rec: OrbitRecord):
    return rec.samples


FIXEDPOINT_CSV_HEADER = [
    "nu", "Q", "Omega", "sigma", "Tstar", "yZstar", "zstar", "deltastar",
    "xH", "valid_z", "valid_delta", "valid_parity", "unstable_count",
]


def fixed_point_json(fp: FixedPoint, xh: float, spectrum: Optional[Spectrum]) -> dict:
    out = {
        "nu": fp.nu,
        "Q": fp.params.Q,
        "Omega": fp.params.Omega,
        "sigma": fp.params.sigma,
        "Tstar": fp.Tstar,
        "yZstar": fp.yZstar,
        "zstar": fp.zstar,
        "deltastar": fp.deltastar,
        "xH": xh,
        "valid": {
            "z_window": fp.valid.z_window,
            "delta_window": fp.valid.delta_window,
            "parity": fp.valid.parity,
        },
    }
    if spectrum is not None:
        out["roots"] = [[float(z.real), float(z.imag)] for z in spectrum.roots]
        out["unstable_count"] = spectrum.unstable_count
    return out


def fixed_point_row(fp: FixedPoint, xh: float, spectrum: Optional[Spectrum]):
    return [
        fp.nu, fp.params.Q, fp.params.Omega, fp.params.sigma,
        fp.Tstar, fp.yZstar, fp.zstar, fp.deltastar, xh,
        fp.valid.z_window, fp.valid.delta_window, fp.valid.parity,
        spectrum.unstable_count if spectrum is not None else "",
    ]


def bifurcation_point_json(pt: BifurcationPoint) -> dict:
    return {
        "kind": pt.kind,
        "nu": pt.nu,
        "Q": pt.Q,
        "Omega": pt.Omega,
        "phi": pt.phi,
        "residuals": list(pt.residuals),
    }


LOCUS_CSV_HEADER = ["kind", "nu", "Q", "Omega", "phi"]


def bifurcation_point_row(pt: BifurcationPoint):
    return [pt.kind, pt.nu, pt.Q, pt.Omega, pt.phi]


REGION_CSV_HEADER = ["nu", "Q", "Omega", "exists", "stable", "unstable_count"]


def region_rows(grid: RegionGrid):
    for i, nu in enumerate(grid.nus):
        for iq, q in enumerate(grid.Q_axis):
            for jo, om in enumerate(grid.Omega_axis):
                yield [
                    nu, float(q), float(om),
                    bool(grid.exists[i, iq, jo]),
                    bool(grid.stable[i, iq, jo]),
                    int(grid.unstable_count[i, iq, jo]),
                ]


BRANCH_CSV_HEADER = [
    "kind", "nu", "Q", "Omega", "Tstar", "invP", "xH", "unstable_count", "marker",
]


def branch_rows(samples: Iterable[BranchSample]):
    for s in samples:
        yield [s.kind, s.nu, s.Q, s.Omega, s.Tstar, s.invP, s.xH, s.unstable_count, s.marker]


TORUS_CSV_HEADER = ["Q", "Omega", "tag", "x", "y"]


def torus_rows(result: TorusScanResult):
    for entry in result.entries:
        for x, y in entry.section:
            yield [entry.Q, entry.Omega, entry.tag, x, y]


def torus_summary_json(result: TorusScanResult) -> list[dict]:
    return [
        {
            "Q": e.Q,
            "Omega": e.Omega,
            "tag": e.tag,
            "seed": e.seed,
            "n_points": e.shape.n_points,
            "n_clusters": e.shape.n_clusters,
            "diameter": e.shape.diameter,
            "box_dimension": e.shape.box_dimension,
        }
        for e in result.entries
    ]
