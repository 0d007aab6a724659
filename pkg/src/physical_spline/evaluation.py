"""Error metrics of an estimated track against ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurements import wrap_angle

REGIONS = ("all", "interior", "start", "end")


@dataclass(frozen=True)
class Metric:
    name: str
    region: str
    rmse: float
    max_abs: float
    count: int


def _interp_truth(truth: dict, t: np.ndarray) -> dict:
    tt = truth["t"]
    out = {}
    for key in ("x", "y", "vx", "vy", "speed"):
        if key in truth and np.all(np.isfinite(truth[key])):
            out[key] = np.interp(t, tt, truth[key])
    if "speed" not in out and "vx" in out and "vy" in out:
        out["speed"] = np.hypot(out["vx"], out["vy"])
    psi = truth.get("psi")
    if psi is not None:
        ok = np.isfinite(psi)
        if ok.sum() >= 2:
            out["psi"] = wrap_angle(np.interp(t, tt[ok], np.unwrap(psi[ok])))
    return out


def compare_tracks(estimate: dict, truth: dict, edge: float = 1.0) -> list[Metric]:
    """RMSE and max error of position, lon/lat, speed and heading.

    Truth is linearly interpolated to the estimate times that fall inside the
    truth span.  Metrics are reported over the whole overlap, its interior and
    the first/last ``edge`` seconds separately, since fits are weakest at the
    track ends.
    """
    t_est = np.asarray(estimate["t"], dtype=float)
    tt = np.asarray(truth["t"], dtype=float)
    inside = (t_est >= tt.min()) & (t_est <= tt.max())
    if not inside.any():
        raise ValueError("estimate and truth time ranges do not overlap")
    t = t_est[inside]
    est = {k: np.asarray(v, dtype=float)[inside] for k, v in estimate.items()}
    ref = _interp_truth(truth, t)

    errors = {}
    ex, ey = est["x"] - ref["x"], est["y"] - ref["y"]
    errors["position"] = np.hypot(ex, ey)
    if "psi" in ref:
        c, s = np.cos(ref["psi"]), np.sin(ref["psi"])
        errors["longitudinal"] = c * ex + s * ey
        errors["lateral"] = -s * ex + c * ey
    est_speed = est.get("speed")
    if est_speed is None and "vx" in est and "vy" in est:
        est_speed = np.hypot(est["vx"], est["vy"])
    if est_speed is not None and "speed" in ref:
        errors["speed"] = est_speed - ref["speed"]
    if "psi" in est and "psi" in ref:
        errors["heading"] = wrap_angle(est["psi"] - ref["psi"])

    t0, t1 = t.min(), t.max()
    masks = {
        "all": np.ones(t.size, dtype=bool),
        "interior": (t >= t0 + edge) & (t <= t1 - edge),
        "start": t < t0 + edge,
        "end": t > t1 - edge,
    }
    metrics = []
    for name, err in errors.items():
        for region in REGIONS:
            e = err[masks[region] & np.isfinite(err)]
            if e.size == 0:
                metrics.append(Metric(name, region, float("nan"), float("nan"), 0))
                continue
            metrics.append(Metric(name, region, float(np.sqrt(np.mean(e**2))), float(np.max(np.abs(e))), int(e.size)))
    return metrics


def metric(metrics: list[Metric], name: str, region: str = "all") -> Metric:
    for m in metrics:
        if m.name == name and m.region == region:
            return m
    raise KeyError((name, region))
