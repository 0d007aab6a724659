"""Synthetic benchmark tracks with known ground truth.

Each scenario returns the true states and a corrupted measurement table.
Output is a pure function of the parameters and the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurements import wrap_angle


@dataclass
class Scenario:
    name: str
    truth: dict  # t, x, y, vx, vy, ax, ay, psi arrays
    measured: dict  # columns of the corrupted track CSV
    params: dict

    @property
    def measured_columns(self) -> list[str]:
        order = ("t", "x", "y", "vx", "vy", "ax", "ay", "psi")
        return [c for c in order if c in self.measured]


DEFAULTS = {
    "circle_sine": dict(
        radius=20.0, speed=5.0, amplitude=0.5, frequency=1.0, duration=25.0,
        rate=10.0, noise=0.0, heading_noise=0.0,
    ),
    "lon_jump": dict(
        speed=10.0, heading=0.3, jump=2.0, duration=10.0, rate=10.0,
        noise=0.0, velocity_noise=0.1, heading_noise=0.0,
    ),
    "const_accel": dict(duration=10.0, rate=10.0, noise=0.0),
    "standstill": dict(duration=10.0, rate=10.0, noise=0.05, heading=0.4),
    "turn": dict(
        speed=5.0, radius=15.0, lead=3.0, rate=10.0,
        noise=0.1, velocity_noise=0.2, heading_noise=0.05,
    ),
}
SCENARIOS = tuple(DEFAULTS)


def _times(duration: float, rate: float) -> np.ndarray:
    n = int(round(duration * rate)) + 1
    return np.arange(n) / rate


def _truth(t, x, y, vx, vy, ax, ay, psi) -> dict:
    as_f = lambda a: np.broadcast_to(np.asarray(a, dtype=float), t.shape).copy()  # noqa: E731
    return {"t": t, "x": as_f(x), "y": as_f(y), "vx": as_f(vx), "vy": as_f(vy),
            "ax": as_f(ax), "ay": as_f(ay), "psi": wrap_angle(as_f(psi))}


def _circle_sine(p, rng):
    t = _times(p["duration"], p["rate"])
    R, v = p["radius"], p["speed"]
    w = v / R
    th = w * t
    truth = _truth(t, R * np.cos(th), R * np.sin(th), -v * np.sin(th), v * np.cos(th),
                   -v * w * np.cos(th), -v * w * np.sin(th), th + 0.5 * np.pi)
    r = R + p["amplitude"] * np.sin(2.0 * np.pi * p["frequency"] * t)
    meas = {
        "t": t,
        "x": r * np.cos(th) + p["noise"] * rng.standard_normal(t.size),
        "y": r * np.sin(th) + p["noise"] * rng.standard_normal(t.size),
        "psi": wrap_angle(truth["psi"] + p["heading_noise"] * rng.standard_normal(t.size)),
    }
    return truth, meas


def _lon_jump(p, rng):
    t = _times(p["duration"], p["rate"])
    v, h = p["speed"], p["heading"]
    ux, uy = np.cos(h), np.sin(h)
    truth = _truth(t, v * t * ux, v * t * uy, v * ux, v * uy, 0.0, 0.0, h)
    step = np.where(t >= 0.5 * p["duration"], p["jump"], 0.0)
    n = t.size
    meas = {
        "t": t,
        "x": truth["x"] + step * ux + p["noise"] * rng.standard_normal(n),
        "y": truth["y"] + step * uy + p["noise"] * rng.standard_normal(n),
        "vx": truth["vx"] + p["velocity_noise"] * rng.standard_normal(n),
        "vy": truth["vy"] + p["velocity_noise"] * rng.standard_normal(n),
        "psi": wrap_angle(truth["psi"] + p["heading_noise"] * rng.standard_normal(n)),
    }
    return truth, meas


def _const_accel(p, rng):
    t = _times(p["duration"], p["rate"])
    truth = _truth(t, 1.0 + 2.0 * t + 1.5 * t * t, 0.0, 2.0 + 3.0 * t, 0.0, 3.0, 0.0, 0.0)
    meas = {
        "t": t,
        "x": truth["x"] + p["noise"] * rng.standard_normal(t.size),
        "y": truth["y"] + p["noise"] * rng.standard_normal(t.size),
    }
    return truth, meas


def _standstill(p, rng):
    t = _times(p["duration"], p["rate"])
    truth = _truth(t, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, p["heading"])
    meas = {
        "t": t,
        "x": p["noise"] * rng.standard_normal(t.size),
        "y": p["noise"] * rng.standard_normal(t.size),
    }
    return truth, meas


def _turn(p, rng):
    """Straight lead-in along +x, 90 degree left arc, straight lead-out along +y."""
    v, R, lead = p["speed"], p["radius"], p["lead"]
    t_arc = 0.5 * np.pi * R / v
    t = _times(2.0 * lead + t_arc, p["rate"])
    w = v / R
    before, after = t < lead, t >= lead + t_arc
    th = np.clip(w * (t - lead), 0.0, 0.5 * np.pi)
    # arc centre at (v*lead, R)
    x = np.where(before, v * t, np.where(after, v * lead + R, v * lead + R * np.sin(th)))
    y = np.where(before, 0.0, np.where(after, R + v * (t - lead - t_arc), R - R * np.cos(th)))
    vx, vy = v * np.cos(th), v * np.sin(th)
    on_arc = ~(before | after)
    ax = np.where(on_arc, -v * w * np.sin(th), 0.0)
    ay = np.where(on_arc, v * w * np.cos(th), 0.0)
    truth = _truth(t, x, y, vx, vy, ax, ay, th)
    n = t.size
    meas = {
        "t": t,
        "x": x + p["noise"] * rng.standard_normal(n),
        "y": y + p["noise"] * rng.standard_normal(n),
        "vx": vx + p["velocity_noise"] * rng.standard_normal(n),
        "vy": vy + p["velocity_noise"] * rng.standard_normal(n),
        "psi": wrap_angle(th + p["heading_noise"] * rng.standard_normal(n)),
    }
    return truth, meas


_BUILDERS = {
    "circle_sine": _circle_sine,
    "lon_jump": _lon_jump,
    "const_accel": _const_accel,
    "standstill": _standstill,
    "turn": _turn,
}


def make_scenario(name: str, seed: int = 0, **params) -> Scenario:
    """Build scenario ``name``; ``params`` override its defaults."""
    if name not in DEFAULTS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    merged = dict(DEFAULTS[name])
    for key, value in params.items():
        if key not in merged:
            raise ValueError(f"scenario {name!r} has no parameter {key!r}")
        merged[key] = float(value)
    rng = np.random.default_rng(seed)
    truth, meas = _BUILDERS[name](merged, rng)
    truth["speed"] = np.hypot(truth["vx"], truth["vy"])
    return Scenario(name, truth, meas, merged)
