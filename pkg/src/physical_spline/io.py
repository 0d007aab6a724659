"""Track CSV, state CSV, config and model file formats.

All angles in files are radians.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .basis import TimeGrid
from .errors import ModelFormatError, ModelVersionError, TrackFormatError, UnanchoredProblemError
from .heading import HeadingSpline
from .measurements import FitConfig, Kind, Measurement, MeasurementSet
from .model import KinematicState, PhysicalSpline, WeightVector

logger = logging.getLogger(__name__)

TRACK_COLUMNS = (
    "t", "x", "y", "vx", "vy", "ax", "ay", "psi",
    "c_pos", "c_vel", "c_acc", "c_psi", "psi_ref", "c_lon", "c_lat",
)
STATE_COLUMNS = ("t", "x", "y", "vx", "vy", "ax", "ay", "speed", "psi")

MODEL_MAGIC = "physical-spline-model"
MODEL_VERSION = 1


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _read_rows(path):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TrackFormatError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        rows = [row for row in reader if any(cell.strip() for cell in row)]
    return header, rows


def _parse_cell(path, lineno: int, column: str, text: str) -> Optional[float]:
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise TrackFormatError(f"{path}: line {lineno}, column {column!r}: cannot parse {text!r}") from None
    if not math.isfinite(value):
        raise TrackFormatError(f"{path}: line {lineno}, column {column!r}: non-finite value {text!r}")
    return value


def _parse_table(path) -> tuple[list[str], list[tuple[int, dict]]]:
    header, rows = _read_rows(path)
    if "t" not in header:
        raise TrackFormatError(f"{path}: missing required column 't'")
    if len(set(header)) != len(header):
        raise TrackFormatError(f"{path}: duplicate column names in header")
    records = []
    for offset, row in enumerate(rows):
        lineno = offset + 2
        if len(row) > len(header):
            raise TrackFormatError(f"{path}: line {lineno}: {len(row)} cells for {len(header)} columns")
        row = list(row) + [""] * (len(header) - len(row))
        rec = {col: _parse_cell(path, lineno, col, cell) for col, cell in zip(header, row)}
        if rec["t"] is None:
            raise TrackFormatError(f"{path}: line {lineno}: missing time 't'")
        records.append((lineno, rec))
    return header, records


def _pair(path, lineno, rec, a, b):
    va, vb = rec.get(a), rec.get(b)
    if (va is None) != (vb is None):
        missing = b if vb is None else a
        raise TrackFormatError(f"{path}: line {lineno}, column {missing!r}: {a}/{b} must be given together")
    return None if va is None else (va, vb)


def _weight(rec, name):
    c = rec.get(name)
    return 1.0 if c is None else c


def load_track(path, require_position: bool = True) -> MeasurementSet:
    """Read a measurement CSV into a time-shifted MeasurementSet.

    One measurement is created per signal present in a row.  Rows with a
    ``psi_ref`` become lon/lat position measurements.  Unknown columns are
    ignored, so a state CSV written by :func:`write_states` loads as a track.
    """
    header, records = _parse_table(path)
    unknown = [h for h in header if h not in TRACK_COLUMNS]
    if unknown:
        logger.debug("%s: ignoring columns %s", path, unknown)
    if not records:
        raise TrackFormatError(f"{path}: no data rows")

    measurements = []
    for lineno, rec in records:
        t = rec["t"]
        try:
            pos = _pair(path, lineno, rec, "x", "y")
            if pos is not None:
                c = _weight(rec, "c_pos")
                if rec.get("psi_ref") is not None:
                    measurements.append(Measurement(
                        t, Kind.LONLAT_POSITION, pos, c, rec["psi_ref"],
                        _weight(rec, "c_lon"), _weight(rec, "c_lat"),
                    ))
                else:
                    measurements.append(Measurement(t, Kind.POSITION, pos, c))
            vel = _pair(path, lineno, rec, "vx", "vy")
            if vel is not None:
                measurements.append(Measurement(t, Kind.VELOCITY, vel, _weight(rec, "c_vel")))
            acc = _pair(path, lineno, rec, "ax", "ay")
            if acc is not None:
                measurements.append(Measurement(t, Kind.ACCELERATION, acc, _weight(rec, "c_acc")))
            if rec.get("psi") is not None:
                measurements.append(Measurement(t, Kind.HEADING, rec["psi"], _weight(rec, "c_psi")))
        except TrackFormatError:
            raise
        except ValueError as exc:
            raise TrackFormatError(f"{path}: line {lineno}: {exc}") from None

    if not measurements:
        raise TrackFormatError(f"{path}: rows contain no measurements")
    if require_position and not any(m.kind in (Kind.POSITION, Kind.LONLAT_POSITION) for m in measurements):
        raise UnanchoredProblemError(f"{path}: no position data (columns x, y)")
    return MeasurementSet.from_absolute(measurements)


def write_table(path, columns: dict, order: Iterable[str]) -> None:
    """Write equally long columns; NaN and None become empty cells."""
    order = list(order)
    n = len(next(iter(columns.values()))) if columns else 0
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(order)
        for i in range(n):
            row = []
            for col in order:
                v = columns[col][i]
                row.append("" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v)))
            writer.writerow(row)


def write_states(path, states: Iterable[KinematicState], t_offset: float = 0.0) -> None:
    """Write states as ``t,x,y,vx,vy,ax,ay,speed,psi`` with absolute times.

    ``psi`` is the fitted heading when available, else the course; it is
    left empty where neither is defined.
    """
    states = list(states)
    cols = {
        "t": [s.t + t_offset for s in states],
        "x": [s.x for s in states],
        "y": [s.y for s in states],
        "vx": [s.vx for s in states],
        "vy": [s.vy for s in states],
        "ax": [s.ax for s in states],
        "ay": [s.ay for s in states],
        "speed": [s.speed for s in states],
        "psi": [s.psi for s in states],
    }
    write_table(path, cols, STATE_COLUMNS)


def read_states(path) -> dict:
    """Read a state CSV into float arrays; missing cells are NaN."""
    header, records = _parse_table(path)
    for col in ("x", "y"):
        if col not in header:
            raise TrackFormatError(f"{path}: missing required column {col!r}")
    out = {}
    for col in header:
        out[col] = np.array([np.nan if r[col] is None else r[col] for _, r in records], dtype=float)
    order = np.argsort(out["t"], kind="stable")
    return {k: v[order] for k, v in out.items()}


def load_config(path) -> FitConfig:
    """Parse a flat ``key = value`` config file (``#`` starts a comment)."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else (":" if ":" in line else None)
        if sep is None:
            raise ValueError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split(sep, 1))
        values[key] = value
    try:
        return FitConfig.from_dict(values)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _numbers_line(name: str, values) -> str:
    values = np.asarray(values, dtype=float)
    return " ".join([name, str(values.size)] + [_fmt(v) for v in values])


def dumps_model(spline: PhysicalSpline) -> str:
    lines = [
        MODEL_MAGIC,
        f"version {MODEL_VERSION}",
        f"t_offset {_fmt(spline.t_offset)}",
        _numbers_line("knots", spline.grid.knots),
        _numbers_line("x_block", spline.weights.x_block),
        _numbers_line("y_block", spline.weights.y_block),
    ]
    hs = spline.heading_model
    if hs is not None:
        lines.append(_numbers_line("heading_knots", hs.grid.knots))
        lines.append(_numbers_line("cos_block", hs.cos_block))
        lines.append(_numbers_line("sin_block", hs.sin_block))
    for key, value in (spline.config or {}).items():
        lines.append(f"config {key} {value!r}" if isinstance(value, bool) else f"config {key} {_fmt(value)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(path, spline: PhysicalSpline) -> None:
    """Store the parameter vector, grid and time offset of ``spline``."""
    Path(path).write_text(dumps_model(spline))


def loads_model(text: str, source: str = "<model>") -> PhysicalSpline:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise ModelFormatError(f"{source}: not a physical spline model file")
    if len(lines) < 2 or not lines[1].startswith("version "):
        raise ModelFormatError(f"{source}: missing version line")
    try:
        version = int(lines[1].split()[1])
    except (IndexError, ValueError):
        raise ModelFormatError(f"{source}: bad version line {lines[1]!r}") from None
    if version != MODEL_VERSION:
        raise ModelVersionError(f"{source}: unsupported model format version {version} (expected {MODEL_VERSION})")
    if lines[-1].strip() != "end":
        raise ModelFormatError(f"{source}: truncated model file (no 'end' marker)")

    arrays, scalars, config = {}, {}, {}
    for lineno, line in enumerate(lines[2:-1], 3):
        parts = line.split()
        if not parts:
            continue
        try:
            if parts[0] == "config":
                key, value = parts[1], parts[2]
                config[key] = value == "True" if value in ("True", "False") else float(value)
            elif parts[0] == "t_offset":
                scalars["t_offset"] = float(parts[1])
            else:
                count = int(parts[1])
                values = np.array([float(v) for v in parts[2:]])
                if values.size != count:
                    raise ModelFormatError(
                        f"{source}: line {lineno}: {parts[0]} declares {count} values, found {values.size}"
                    )
                arrays[parts[0]] = values
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ModelFormatError):
                raise
            raise ModelFormatError(f"{source}: line {lineno}: malformed entry") from None

    for key in ("knots", "x_block", "y_block"):
        if key not in arrays:
            raise ModelFormatError(f"{source}: missing {key!r}")
    if "t_offset" not in scalars:
        raise ModelFormatError(f"{source}: missing 't_offset'")
    try:
        grid = TimeGrid(arrays["knots"])
        heading = None
        if "cos_block" in arrays or "sin_block" in arrays:
            hgrid = TimeGrid(arrays.get("heading_knots", arrays["knots"]))
            heading = HeadingSpline(hgrid, arrays["cos_block"], arrays["sin_block"])
        return PhysicalSpline(
            grid,
            WeightVector(arrays["x_block"], arrays["y_block"]),
            scalars["t_offset"],
            heading_model=heading,
            config=config or None,
        )
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"{source}: inconsistent model ({exc})") from None


def load_model(path) -> PhysicalSpline:
    return loads_model(Path(path).read_text(), str(path))
