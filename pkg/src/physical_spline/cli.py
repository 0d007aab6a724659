"""Command line interface.

Exit codes: 0 success, 1 unexpected error, 2 usage error, 3 I/O error,
4 parse/format error, 5 unanchored problem (no position data),
6 singular system.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .errors import (
    MeasurementRangeError,
    ModelFormatError,
    SingularSystemError,
    TrackFormatError,
    UnanchoredProblemError,
)
from .evaluation import compare_tracks
from .measurements import FitConfig
from .model import evaluate_batch
from .pipeline import fit_track
from .synth import SCENARIOS, make_scenario

logger = logging.getLogger("physical_spline")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_UNANCHORED = 5
EXIT_SINGULAR = 6


class UsageError(Exception):
    pass


def _uniform_times(t_end: float, dt: float) -> np.ndarray:
    if not dt > 0.0:
        raise UsageError("resample step must be > 0")
    n = int(np.floor(t_end / dt + 1e-9)) + 1
    return dt * np.arange(n)


def _read_times(path) -> np.ndarray:
    """Absolute times from a file: a CSV with a 't' column or one number per line."""
    text = Path(path).read_text().split()
    if not text:
        return np.zeros(0)
    first = text[0].split(",")
    try:
        float(first[0])
        has_header = False
    except ValueError:
        has_header = True
    if has_header:
        header = [h.strip() for h in first]
        if "t" not in header:
            raise TrackFormatError(f"{path}: no 't' column")
        col = header.index("t")
        rows = text[1:]
    else:
        col, rows = 0, text
    try:
        return np.array([float(r.split(",")[col]) for r in rows], dtype=float)
    except (ValueError, IndexError):
        raise TrackFormatError(f"{path}: unparseable time value") from None


def _output_times(spline, span: float, dt, times_file) -> np.ndarray:
    """Model-relative times for a resample request."""
    if times_file is not None:
        t = _read_times(times_file) - spline.t_offset
        if t.size and t.min() < -1e-9:
            raise MeasurementRangeError("requested times precede the start of the model")
        return np.maximum(t, 0.0)
    return _uniform_times(span, dt)


def _fit_one(track, out_model, out_states, config, args_dict):
    meas = io.load_track(track)
    result = fit_track(meas, config, two_pass=args_dict["two_pass"])
    spline = result.spline
    if out_model is not None:
        io.save_model(out_model, spline)
    if out_states is not None:
        if args_dict["resample_dt"] is None and args_dict["resample_times"] is None:
            times = np.unique([m.t for m in meas])
        else:
            times = _output_times(spline, meas.t_last, args_dict["resample_dt"], args_dict["resample_times"])
        io.write_states(out_states, evaluate_batch(spline, times), spline.t_offset)
    return str(track), result.report


def cmd_fit(args) -> int:
    config = io.load_config(args.config) if args.config else FitConfig()
    tracks = [Path(p) for p in args.tracks]
    opts = {
        "two_pass": args.two_pass,
        "resample_dt": args.resample_dt,
        "resample_times": args.resample_times,
    }
    if args.resample_dt is not None and args.resample_times is not None:
        raise UsageError("--resample-dt and --resample-times are mutually exclusive")

    if len(tracks) == 1 and args.out_dir is None:
        jobs = [(tracks[0], args.model, args.out)]
    else:
        if args.out_dir is None:
            raise UsageError("several tracks need --out-dir")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        jobs = [(p, out_dir / f"{p.stem}.model", out_dir / f"{p.stem}.states.csv") for p in tracks]
    if all(m is None and s is None for _, m, s in jobs):
        logger.warning("neither --model nor --out given; fit results are only summarised")

    if len(jobs) > 1 and args.jobs != 1:
        with ProcessPoolExecutor(max_workers=args.jobs or None) as pool:
            futures = [pool.submit(_fit_one, t, m, s, config, opts) for t, m, s in jobs]
            results = [f.result() for f in futures]
    else:
        results = [_fit_one(t, m, s, config, opts) for t, m, s in jobs]

    for track, report in results:
        print(f"{track}: {report.passes} pass(es)")
        print(report.format())
        if args.profile:
            print("profile: " + report.format_profile())
    return EXIT_OK


def cmd_resample(args) -> int:
    if args.dt is not None and args.times is not None:
        raise UsageError("--dt and --times are mutually exclusive")
    spline = io.load_model(args.model)
    dt = args.dt if args.dt is not None else 0.1
    times = _output_times(spline, spline.grid.t_end, dt, args.times)
    io.write_states(args.out, evaluate_batch(spline, times), spline.t_offset)
    return EXIT_OK


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param {key}: not a number: {value!r}") from None
    return params


def cmd_synth(args) -> int:
    params = _parse_params(args.param)
    if args.noise is not None:
        params["noise"] = args.noise
    try:
        sc = make_scenario(args.scenario, seed=args.seed, **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth_path = out_dir / f"{args.prefix}truth.csv"
    meas_path = out_dir / f"{args.prefix}corrupted.csv"
    io.write_table(truth_path, sc.truth, io.STATE_COLUMNS)
    io.write_table(meas_path, sc.measured, sc.measured_columns)
    print(f"wrote {truth_path} and {meas_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    estimate = io.read_states(args.estimate)
    truth = io.read_states(args.truth)
    try:
        metrics = compare_tracks(estimate, truth, edge=args.edge)
    except ValueError as exc:
        raise TrackFormatError(str(exc)) from None
    if args.format == "csv":
        print("metric,region,rmse,max,count")
        for m in metrics:
            print(f"{m.name},{m.region},{m.rmse!r},{m.max_abs!r},{m.count}")
    else:
        print(f"{'metric':<14s} {'region':<9s} {'rmse':>12s} {'max':>12s} {'n':>6s}")
        for m in metrics:
            print(f"{m.name:<14s} {m.region:<9s} {m.rmse:12.6g} {m.max_abs:12.6g} {m.count:6d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="physical-spline",
        description="Denoise 2D object tracks with a kinematically consistent spline.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit tracks, write model and/or resampled states")
    p.add_argument("tracks", nargs="+", help="measurement CSV file(s)")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--model", help="output model file (single track)")
    p.add_argument("--out", help="output state CSV (single track)")
    p.add_argument("--out-dir", help="output directory when fitting several tracks")
    p.add_argument("--resample-dt", type=float, help="uniform output step in seconds")
    p.add_argument("--resample-times", help="file with absolute output times")
    p.add_argument("--two-pass", action="store_true", help="refit positions using the fitted heading")
    p.add_argument("--profile", action="store_true", help="report assembly vs solve time")
    p.add_argument("--jobs", type=int, default=0, help="worker processes for several tracks (0: all cores)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("resample", help="evaluate a saved model on new times")
    p.add_argument("model")
    p.add_argument("--dt", type=float, help="uniform step over the model span (default 0.1 s)")
    p.add_argument("--times", help="file with absolute output times")
    p.add_argument("--out", default="/dev/stdout", help="output state CSV")
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="override a scenario parameter")
    p.add_argument("--noise", type=float, help="position noise standard deviation (m)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="", help="file name prefix for truth.csv / corrupted.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="compare an estimate against ground truth")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--edge", type=float, default=1.0, help="seconds reported separately at each end")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnanchoredProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNANCHORED
    except SingularSystemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (TrackFormatError, ModelFormatError, MeasurementRangeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
