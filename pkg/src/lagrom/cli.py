"""Command-line driver: generate snapshot data, train reduced models,
predict, and export diagnostics as CSV.

Subcommands: fom, train, predict, coherence, nwidth, svd. All outputs go
through the container/CSV formats in `io`, and every subcommand is
deterministic for identical inputs and flags. Exit codes: 0 success, 2
usage error, 3 numerical failure (stability, tangling, rank), 4 I/O error.
Set LAGROM_LOG=debug|info|warning for diagnostics on stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import analysis, io, pdmd, problems
from .core import (
    CflViolation,
    GridTangling,
    ParamSet,
    RankDeficiency,
    SnapshotSet,
    SolverBlowup,
    TimeAxis,
    stacked_matrix,
)

log = logging.getLogger("lagrom")


def _parse_points(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"bad grid spec {text!r} (use e.g. 128 or 40x40)")


def _parse_linspace(text: str) -> np.ndarray:
    """a:b:n inclusive."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"bad range {text!r} (use a:b:n)")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("range needs at least one point")
    return np.linspace(a, b, n)


def _parse_params_file(path: str) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if line_no == 0:
                    continue  # header row
                raise ValueError(f"bad parameter row {line!r} in {path}")
    if not rows:
        raise ValueError(f"no parameter rows in {path}")
    return np.asarray(rows)


def _parse_mu(text: str, dim: int) -> np.ndarray:
    """Rows separated by ';', entries by ','. For 1D parameters a plain
    comma list is a list of rows."""
    if ";" in text or dim > 1:
        rows = [r for r in text.split(";") if r.strip()]
        vals = np.asarray([[float(c) for c in r.split(",")] for r in rows])
    else:
        vals = np.asarray([[float(c)] for c in text.split(",")])
    if vals.shape[1] != dim:
        raise ValueError(f"parameter rows have {vals.shape[1]} entries, model has {dim}")
    return vals


def _parse_steps(text: str) -> tuple[int, int]:
    """'k' means horizons 1..k; 'a..b' is an explicit inclusive range."""
    if ".." in text:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    else:
        lo, hi = 1, int(text)
    if not 1 <= lo <= hi:
        raise ValueError(f"bad step range {text!r}")
    return lo, hi


def _build_time_axis(args) -> tuple[TimeAxis, int]:
    """Solver marching axis plus the stored snapshot count (or None)."""
    t0 = args.t0
    if args.tmax <= t0:
        raise ValueError("--tmax must exceed --t0")
    if args.dt is not None:
        steps = int(round((args.tmax - t0) / args.dt))
        if steps < 1 or abs(t0 + steps * args.dt - args.tmax) > 1e-9 * max(1.0, abs(args.tmax)):
            raise ValueError(f"--dt {args.dt} does not divide the horizon {args.tmax - t0}")
        return TimeAxis(t0, args.dt, steps + 1), args.snapshots
    if args.snapshots is None:
        raise ValueError("need --dt or --snapshots to fix the time axis")
    if args.snapshots < 2:
        raise ValueError("--snapshots must be at least 2")
    dt = (args.tmax - t0) / (args.snapshots - 1)
    return TimeAxis(t0, dt, args.snapshots), None


# ------------------------------------------------------------ subcommands

def _cmd_fom(args) -> int:
    if args.problem not in problems.PROBLEM_NAMES:
        raise ValueError(f"unknown problem {args.problem!r}")
    given = [s for s in (args.param_grid, args.params_file, args.param_sample) if s]
    if len(given) != 1:
        raise ValueError("give exactly one of --param-grid, --params-file, --param-sample")
    if args.param_grid:
        values = _parse_linspace(args.param_grid)[:, None]
    elif args.param_sample:
        lo, hi, n = args.param_sample.split(":")
        values = problems.seeded_test_params(float(lo), float(hi), int(n), args.seed)[:, None]
    else:
        values = _parse_params_file(args.params_file)
    grid = problems.preset_grid(args.problem, _parse_points(args.grid) if args.grid else None)
    times, snapshots = _build_time_axis(args)
    log.info("fom %s/%s: %d parameters, %d instants, grid %s",
             args.problem, args.frame, len(values), times.count, grid.shape)
    snaps = problems.generate(args.problem, args.frame, values, grid, times,
                              snapshots=snapshots, jobs=args.jobs)
    io.write_container(snaps, args.out)
    log.info("wrote %s shape %s", args.out, list(snaps.data.shape))
    return 0


def _cmd_train(args) -> int:
    train = io.read_container(args.infile)
    if args.compressor == "pod":
        if args.rank is None:
            raise ValueError("--rank is required for the pod compressor")
        comp = pdmd.fit_pod(train, args.rank, normalize=args.normalize)
        rank = args.rank
    elif args.compressor.startswith("external:"):
        latents = io.read_container(args.compressor.split(":", 1)[1])
        comp = pdmd.external_compressor(latents, train.channel_names, train.data.shape[3:])
        rank = comp.rank if args.rank is None else args.rank
    else:
        raise ValueError(f"unknown compressor {args.compressor!r} (pod or external:path)")
    model = pdmd.fit_pdmd(train, comp, rank)
    io.write_pdmd_model(model, args.out)
    log.info("wrote model %s (rank %d, %d parameters, frame %s)",
             args.out, model.rank, model.params.n_params, model.frame)
    return 0


def _decode_all(model, latents, grid):
    """[n_steps, n_values, *grid.shape] fields for one parameter's latent rows,
    with tangled decodes reported and zeroed."""
    fields = []
    failures = []
    for j in range(latents.shape[0]):
        try:
            fields.append(pdmd.decode_and_reconstruct(model, latents[j], grid))
        except GridTangling as e:
            log.warning("decode failed at step %d: %s", j + 1, e)
            failures.append(j)
            n_vals = len(model.compressor.channel_names)
            if model.frame == "lagrangian":
                n_vals -= model.grid.dim
            fields.append(np.zeros((n_vals, *grid.shape)))
    return np.stack(fields), failures


def _cmd_predict(args) -> int:
    model = io.read_pdmd_model(args.model)
    mu_rows = _parse_mu(args.mu, model.params.dim)
    lo, hi = _parse_steps(args.steps)
    n_steps = hi - lo + 1
    dt = model.train_times.dt
    t_end = model.train_times.instant(model.train_times.count - 1)
    times = TimeAxis(t_end + lo * dt, dt, n_steps)

    latents = np.empty((len(mu_rows), n_steps, model.rank))
    for i, row in enumerate(mu_rows):
        latents[i] = pdmd.predict_pdmd_trajectory(model, row, hi)[lo - 1 :]

    params = ParamSet(model.params.names, mu_rows)
    if model.compressor.kind == "external":
        if args.out.endswith(".csv"):
            raise ValueError("external-compressor models emit latent containers, not CSV")
        s = SnapshotSet(model.grid, params, times, "latent", ("z",),
                        latents[:, :, None, :])
        io.write_container(s, args.out)
        log.info("wrote latent container %s (decode with the external tool)", args.out)
        return 0

    blocks, failed = [], {}
    for i in range(len(mu_rows)):
        fields, failures = _decode_all(model, latents[i], model.grid)
        blocks.append(fields)
        if failures:
            failed[i] = failures
    fields = np.stack(blocks)  # [n_mu, n_steps, n_values, *space]
    value_names = model.compressor.channel_names
    if model.frame == "lagrangian":
        value_names = value_names[model.grid.dim :]
    pred = SnapshotSet(model.grid, params, times, "eulerian", value_names, fields)

    table = None
    if args.truth:
        truth = io.read_container(args.truth)
        table = analysis.relative_l2_error(truth.data, pred.data,
                                           param_values=mu_rows, times=times.times)
        print(f"mean relative L2 error: {table.mean:.6e}")
    if args.out.endswith(".csv"):
        if table is None:
            raise ValueError("CSV output needs --truth (it holds the error table)")
        io.export_csv(table, args.out, param_names=model.params.names)
    else:
        extra = {"failed_decodes": sorted(
            [i, j + lo] for i, js in failed.items() for j in js)} if failed else None
        io.write_container(pred, args.out, extra_header=extra)
        if args.errors_out:
            if table is None:
                raise ValueError("--errors-out needs --truth")
            io.export_csv(table, args.errors_out, param_names=model.params.names)
    if failed:
        log.warning("%d snapshots failed to decode and were zeroed",
                    sum(len(v) for v in failed.values()))
    return 0


def _cmd_coherence(args) -> int:
    train = io.read_container(args.infile[0])
    if len(args.infile) > 1:
        ev = io.read_container(args.infile[1])
    elif args.evalfile:
        ev = io.read_container(args.evalfile)
    else:
        ev = train  # self-coherence: every snapshot matches itself
    series = analysis.coherence(train, ev)
    io.export_csv(series, args.out)
    return 0


def _cmd_nwidth(args) -> int:
    snaps = io.read_container(args.infile[0])
    curve = analysis.nwidth_proxy(snaps, args.n_max)
    io.export_csv(curve, args.out)
    return 0


def _cmd_svd(args) -> int:
    snaps = io.read_container(args.infile[0])
    S = np.linalg.svd(stacked_matrix(snaps), compute_uv=False)
    if S[0] == 0:
        raise ValueError("all-zero snapshot set")
    rows = [[i + 1, s, s / S[0]] for i, s in enumerate(S)]
    io.export_csv((["i", "sigma", "sigma_normalized"], rows), args.out)
    return 0


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lagrom",
                                description="Transport-dominated reduced-order modeling toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fom", help="generate full-order snapshot data")
    f.add_argument("--problem", required=True, choices=problems.PROBLEM_NAMES)
    f.add_argument("--frame", required=True, choices=("eulerian", "lagrangian"))
    f.add_argument("--param-grid", help="a:b:n inclusive linspace")
    f.add_argument("--params-file", help="CSV of parameter rows")
    f.add_argument("--param-sample", help="a:b:n sorted uniform draws (see --seed)")
    f.add_argument("--grid", help="points per axis, e.g. 128 or 40x40")
    f.add_argument("--t0", type=float, default=0.0)
    f.add_argument("--tmax", type=float, required=True)
    f.add_argument("--dt", type=float, help="solver step (omit for closed-form problems)")
    f.add_argument("--snapshots", type=int, help="stored instants (thins solver output)")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--out", required=True)
    f.set_defaults(func=_cmd_fom)

    t = sub.add_parser("train", help="fit a parametric reduced model")
    t.add_argument("--in", dest="infile", required=True)
    t.add_argument("--compressor", default="pod", help="pod or external:latents.lrom")
    t.add_argument("--rank", type=int)
    t.add_argument("--normalize", action="store_true",
                   help="z-score channels before the basis fit (recorded in the model)")
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_train)

    pr = sub.add_parser("predict", help="evolve and reconstruct at new parameters")
    pr.add_argument("--model", required=True)
    pr.add_argument("--mu", required=True, help="comma list; ';' separates rows")
    pr.add_argument("--steps", required=True, help="k (horizons 1..k) or a..b")
    pr.add_argument("--truth", help="container with matching fields")
    pr.add_argument("--errors-out", help="CSV path for the error table")
    pr.add_argument("--out", required=True, help=".csv for the error table, else container")
    pr.set_defaults(func=_cmd_predict)

    c = sub.add_parser("coherence", help="training-window coherence of an evaluation set")
    c.add_argument("--in", dest="infile", nargs="+", required=True,
                   help="training container [evaluation container]")
    c.add_argument("--eval", dest="evalfile")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_coherence)

    n = sub.add_parser("nwidth", help="projection-error curve of a snapshot set")
    n.add_argument("--in", dest="infile", nargs="+", required=True)
    n.add_argument("--n-max", type=int, default=20)
    n.add_argument("--out", required=True)
    n.set_defaults(func=_cmd_nwidth)

    s = sub.add_parser("svd", help="singular values of the global snapshot matrix")
    s.add_argument("--in", dest="infile", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_svd)
    return p


def main(argv=None) -> int:
    level = os.environ.get("LAGROM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CflViolation, GridTangling, RankDeficiency, SolverBlowup) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except io.ContainerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
