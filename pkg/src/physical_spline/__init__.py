"""Kinematically consistent smoothing of 2D object trajectories."""

from .basis import TimeGrid, design_matrix, eval_basis
from .costs import NormalEquations, assemble, detect_standstill
from .errors import (
    MeasurementRangeError,
    ModelFormatError,
    ModelVersionError,
    PhysicalSplineError,
    SingularSystemError,
    TrackFormatError,
    UnanchoredProblemError,
    UndefinedHeadingError,
)
from .heading import HeadingSpline, fit_heading, reconstruct_heading
from .measurements import FitConfig, Kind, Measurement, MeasurementSet
from .model import (
    KinematicState,
    PhysicalSpline,
    WeightVector,
    evaluate,
    evaluate_batch,
    extend_constant_velocity,
)
from .pipeline import FitReport, FitResult, fit_track
from .solver import oracle_solve, solve

__version__ = "0.1.0"
