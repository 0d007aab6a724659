import numpy as np
import pytest

from physical_spline import Kind, Measurement, MeasurementSet
from physical_spline.basis import TimeGrid
from physical_spline.synth import make_scenario


def scenario_measurements(sc, kinds=("position", "velocity", "heading")):
    """MeasurementSet from a synthetic scenario's corrupted columns."""
    m = sc.measured
    out = []
    for i, t in enumerate(m["t"]):
        if "position" in kinds:
            out.append(Measurement(t, Kind.POSITION, (m["x"][i], m["y"][i])))
        if "velocity" in kinds and "vx" in m:
            out.append(Measurement(t, Kind.VELOCITY, (m["vx"][i], m["vy"][i])))
        if "heading" in kinds and "psi" in m:
            out.append(Measurement(t, Kind.HEADING, m["psi"][i]))
    return MeasurementSet.from_absolute(out)


def random_measurements(rng, t_end, n, kinds=(Kind.POSITION,)):
    out = []
    for kind in kinds:
        for t in rng.uniform(0.0, t_end, n):
            c = float(rng.uniform(0.1, 2.0))
            if kind is Kind.HEADING:
                out.append(Measurement(float(t), kind, float(rng.uniform(-np.pi, np.pi)), c))
            elif kind is Kind.LONLAT_POSITION:
                out.append(Measurement(float(t), kind, tuple(rng.normal(0, 5, 2)), c,
                                       float(rng.uniform(-np.pi, np.pi)),
                                       float(rng.uniform(0.1, 2)), float(rng.uniform(0.1, 2))))
            else:
                out.append(Measurement(float(t), kind, tuple(rng.normal(0, 5, 2)), c))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid5():
    return TimeGrid.uniform(5.0, 1.0)


@pytest.fixture
def const_accel_set():
    return scenario_measurements(make_scenario("const_accel"), ("position",))
