"""End-to-end fit of a measurement set: Cartesian pass, heading, optional second pass."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .costs import assemble, raw_heading_interpolator
from .heading import HeadingSpline, fit_heading, kinematic_samples
from .measurements import FitConfig, Kind, Measurement, MeasurementSet, as_arrays, wrap_angle
from .model import PhysicalSpline
from .solver import solve

logger = logging.getLogger(__name__)


@dataclass
class FitReport:
    assembly_seconds: float = 0.0
    solve_seconds: float = 0.0
    heading_seconds: float = 0.0
    residual_rms: dict = field(default_factory=dict)
    passes: int = 1

    def format(self) -> str:
        lines = [f"  {name:<14s} {value:.6g}" for name, value in self.residual_rms.items()]
        return "residual RMS per cost family:\n" + "\n".join(lines)

    def format_profile(self) -> str:
        total = self.assembly_seconds + self.solve_seconds
        share = self.assembly_seconds / total if total > 0 else float("nan")
        return (
            f"assembly {self.assembly_seconds:.4f} s, solve {self.solve_seconds:.4f} s "
            f"(assembly share {share:.1%}), heading {self.heading_seconds:.4f} s"
        )


@dataclass
class FitResult:
    spline: PhysicalSpline
    report: FitReport


def _unique_times(meas: MeasurementSet) -> np.ndarray:
    return np.unique(np.array([m.t for m in meas], dtype=float))


def residual_rms(spline: PhysicalSpline, meas: MeasurementSet) -> dict:
    """RMS of the raw (unweighted) residuals of each measurement family."""
    out = {}
    pos = meas.of_kind(Kind.POSITION, Kind.LONLAT_POSITION)
    if pos:
        t, v, _ = as_arrays(pos)
        s = spline.sample(t)
        ex, ey = s["x"] - v[:, 0], s["y"] - v[:, 1]
        out["position"] = float(np.sqrt(np.mean(ex**2 + ey**2)))
        ref = None
        if spline.heading_model is not None:
            ref = spline.heading_model.reconstruct(t, strict=False)
        else:
            interp = raw_heading_interpolator(meas)
            if interp is not None:
                ref = interp(t)
        if ref is not None:
            ok = np.isfinite(ref)
            c, sn = np.cos(ref[ok]), np.sin(ref[ok])
            out["longitudinal"] = float(np.sqrt(np.mean((c * ex[ok] + sn * ey[ok]) ** 2)))
            out["lateral"] = float(np.sqrt(np.mean((-sn * ex[ok] + c * ey[ok]) ** 2)))
    for kind, keys, name in (
        (Kind.VELOCITY, ("vx", "vy"), "velocity"),
        (Kind.ACCELERATION, ("ax", "ay"), "acceleration"),
    ):
        ms = meas.of_kind(kind)
        if ms:
            t, v, _ = as_arrays(ms)
            s = spline.sample(t)
            err = (s[keys[0]] - v[:, 0]) ** 2 + (s[keys[1]] - v[:, 1]) ** 2
            out[name] = float(np.sqrt(np.mean(err)))
    heads = meas.of_kind(Kind.HEADING)
    if heads:
        t, psi, _ = as_arrays(heads)
        s = spline.sample(t)
        cross = -np.sin(psi) * s["vx"] + np.cos(psi) * s["vy"]
        out["heading_dir"] = float(np.sqrt(np.mean(cross**2)))
        if spline.heading_model is not None:
            est = spline.heading_model.reconstruct(t, strict=False)
            ok = np.isfinite(est)
            err = wrap_angle(est[ok] - psi[ok])
            out["heading"] = float(np.sqrt(np.mean(err**2)))
    return out


def _heading_dir_samples(meas: MeasurementSet, hs: HeadingSpline) -> list[Measurement]:
    heads = meas.of_kind(Kind.HEADING)
    if heads:
        t, _, c = as_arrays(heads)
    else:
        t = np.unique([m.t for m in meas.of_kind(Kind.POSITION, Kind.LONLAT_POSITION)])
        c = np.ones(t.size)
    psi = hs.reconstruct(t, strict=False)
    return [
        Measurement(float(ti), Kind.HEADING, float(p), float(ci))
        for ti, p, ci in zip(t, psi, c)
        if np.isfinite(p)
    ]


def fit_track(
    meas: MeasurementSet,
    config: Optional[FitConfig] = None,
    two_pass: bool = False,
    with_heading: Optional[bool] = None,
) -> FitResult:
    """Fit a physical spline to ``meas``.

    The Cartesian fit runs first.  A heading model is then fitted when the
    track has heading measurements, or when ``two_pass`` is set, from the
    heading measurements plus velocities/accelerations of the Cartesian
    spline.  In two-pass mode the Cartesian fit is repeated with the fitted
    heading feeding the lon/lat split and the heading-direction cost.
    """
    config = config or FitConfig()
    report = FitReport()
    if with_heading is None:
        with_heading = two_pass or meas.has(Kind.HEADING)

    t0 = time.perf_counter()
    ne = assemble(meas, config)
    t1 = time.perf_counter()
    weights = solve(ne)
    t2 = time.perf_counter()
    report.assembly_seconds += t1 - t0
    report.solve_seconds += t2 - t1
    grid = ne.grid
    spline = PhysicalSpline(grid, weights, meas.t_offset, config=config.to_dict())

    hs = None
    if with_heading:
        t3 = time.perf_counter()
        vel, acc = kinematic_samples(spline, _unique_times(meas))
        try:
            hs = fit_heading(meas, vel, acc, config, grid)
        except ValueError as exc:
            if two_pass or meas.has(Kind.HEADING):
                raise
            logger.info("no heading model: %s", exc)
        report.heading_seconds += time.perf_counter() - t3

    if two_pass and hs is not None:
        t0 = time.perf_counter()
        ne = assemble(meas, config, grid, heading_model=hs, heading_meas=_heading_dir_samples(meas, hs))
        t1 = time.perf_counter()
        weights = solve(ne)
        t2 = time.perf_counter()
        report.assembly_seconds += t1 - t0
        report.solve_seconds += t2 - t1
        report.passes = 2

    spline = PhysicalSpline(grid, weights, meas.t_offset, heading_model=hs, config=config.to_dict())
    report.residual_rms = residual_rms(spline, meas)
    return FitResult(spline, report)
