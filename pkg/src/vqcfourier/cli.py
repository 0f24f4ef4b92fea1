"""``vqcfourier`` command line.

Every artifact carries a ``meta`` block (tool, version, command, resolved
configuration, seed) and no timestamps, so rerunning a command with the
recorded configuration reproduces its output byte for byte.

Exit codes: 0 success, 1 computational failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import CircuitError, load_circuit
from .data import (
    DAMPING_IN,
    DAMPING_OUT,
    LAMBDA_SCALE,
    ConditioningError,
    FeatureMap,
    FrequencyGrid,
    build_grid,
    damping_factors,
    inverse_nfft,
    load_dataset,
    save_dataset,
)
from .ranking import score_and_rank
from .simulator import SimulationError, TrainConfig, expectation, friedman_dataset, train
from .spectrum import circuit_spectrum, dumps_report, evaluate_fourier_sum, moment_matrices
from .tree import DEFAULT_LEAF_CAP, LeafCapExceeded, circuit_leaves, evaluate_reconstruction

TOOL = "vqcfourier"
WORKERS_ENV = "VQCFOURIER_WORKERS"

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# --- helpers ----------------------------------------------------------------


def _meta(command: str, config: dict, seed=None) -> dict:
    return {"tool": TOOL, "version": __version__, "command": command, "config": config, "seed": seed}


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _grid(text: str | None) -> FrequencyGrid | None:
    if text is None:
        return None
    try:
        sizes = [int(v) for v in text.lower().replace("x", ",").split(",") if v]
        return FrequencyGrid(tuple(sizes))
    except ValueError as exc:
        raise InputError(f"--grid: {exc}") from None


def _feature_map(x, text: str | None) -> FeatureMap:
    if text is None:
        return FeatureMap.fit(x)
    lo, hi = _floats(text, "--feature-range") if "," in text else (None, None)
    if lo is None or hi is None or not hi > lo:
        raise InputError("--feature-range must be 'lo,hi' with hi > lo")
    d = np.atleast_2d(x).shape[1]
    return FeatureMap((lo,) * d, (hi,) * d)


def _load(path):
    if not Path(path).is_file():
        raise InputError(f"{path}: no such file")
    return load_circuit(path)


def _workers(value) -> int:
    if value is not None:
        return value
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _emit(out: Path | None, files: dict, stdout_key: str) -> None:
    """Write ``files`` (name -> text) into ``out`` or print one of them."""
    if out is None:
        sys.stdout.write(files[stdout_key])
        if not files[stdout_key].endswith("\n"):
            sys.stdout.write("\n")
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text if text.endswith("\n") else text + "\n")


def _spectrum_plot(report, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if report.d not in (1, 2):
        raise InputError("spectrum plots need one or two features")
    polys = [report.coefficients[w] for w in report.spectrum]
    mean, cov = moment_matrices(polys)
    power = np.abs(mean) ** 2 + np.real(np.diag(cov)) if polys else np.zeros(0)
    counts = [max(n, 1) for n in report.encoding_counts]
    fig, ax = plt.subplots(figsize=(4, 3.5))
    if report.d == 1:
        ax.bar([w[0] for w in report.spectrum], power)
        ax.set_xlabel("frequency")
        ax.set_ylabel("E|c|^2")
    else:
        img = np.full((2 * counts[1] + 1, 2 * counts[0] + 1), np.nan)
        for w, p in zip(report.spectrum, power):
            img[w[1] + counts[1], w[0] + counts[0]] = p
        shown = ax.imshow(img, origin="lower", extent=(-counts[0] - 0.5, counts[0] + 0.5, -counts[1] - 0.5, counts[1] + 0.5))
        fig.colorbar(shown, ax=ax, label="E|c|^2")
        ax.set_xlabel("w_0")
        ax.set_ylabel("w_1")
    ax.set_title(report.circuit_id or "spectrum")
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


# --- commands ---------------------------------------------------------------


def cmd_spectrum(args) -> int:
    if len(args.circuit) != 1:
        raise InputError("spectrum takes exactly one --circuit")
    circuit, observable = _load(args.circuit[0])
    report = circuit_spectrum(circuit, observable, leaf_cap=args.leaf_cap)
    config = {"circuit": args.circuit[0], "leaf_cap": args.leaf_cap, "timing": args.timing}
    text = dumps_report(report, meta=_meta("spectrum", config), include_timing=args.timing)
    rows = ["\t".join(["frequency"] + [f"w{j}" for j in range(report.d)])]
    rows += ["\t".join([str(i)] + [str(v) for v in w]) for i, w in enumerate(report.spectrum)]
    table = f"# {json.dumps(_meta('spectrum', config), sort_keys=True)}\n" + "\n".join(rows) + "\n"
    stem = circuit.name or "circuit"
    files = {}
    if args.format in ("structured", "both"):
        files[f"{stem}.spectrum.json"] = text
    if args.format in ("table", "both"):
        files[f"{stem}.spectrum.tsv"] = table
    _emit(args.out, files, f"{stem}.spectrum.tsv" if args.format == "table" else f"{stem}.spectrum.json")
    if args.plot:
        _spectrum_plot(report, args.plot)
    return EXIT_OK


def cmd_verify(args) -> int:
    if len(args.circuit) != 1:
        raise InputError("verify takes exactly one --circuit")
    if args.trials < 0:
        raise InputError("--trials must be non-negative")
    circuit, observable = _load(args.circuit[0])
    config = {"circuit": args.circuit[0], "trials": args.trials, "tolerance": args.tolerance, "leaf_cap": args.leaf_cap}
    report = circuit_spectrum(circuit, observable, leaf_cap=args.leaf_cap)
    leaves = circuit_leaves(circuit, observable, leaf_cap=args.leaf_cap)
    result = {"meta": _meta("verify", config, args.seed), "trials": args.trials, "spectrum_size": len(report.spectrum)}
    if args.trials == 0:
        print("warning: zero trials requested, nothing was compared (vacuous pass)", file=sys.stderr)
        result.update(max_deviation=0.0, max_deviation_tree=0.0, max_deviation_fourier=0.0, passed=True, vacuous=True)
    else:
        rng = np.random.default_rng(args.seed)
        x = rng.uniform(-np.pi, np.pi, (args.trials, circuit.d))
        theta = rng.uniform(-np.pi, np.pi, (args.trials, circuit.w))
        truth = np.atleast_1d(expectation(circuit, observable, x, theta))
        tree = np.atleast_1d(evaluate_reconstruction(leaves, x, theta, d=circuit.d, w=circuit.w))
        fourier = evaluate_fourier_sum(report, x, theta)
        dev_tree = float(np.max(np.abs(tree - truth)))
        dev_fourier = float(np.max(np.abs(fourier - truth)))
        worst = max(dev_tree, dev_fourier)
        result.update(
            max_deviation=worst,
            max_deviation_tree=dev_tree,
            max_deviation_fourier=dev_fourier,
            passed=worst < args.tolerance,
            vacuous=False,
        )
    _emit(args.out, {"verify.json": json.dumps(result, indent=1)}, "verify.json")
    status = "PASS" if result["passed"] else "FAIL"
    print(f"{status} max deviation {result['max_deviation']:.3e} over {args.trials} points", file=sys.stderr)
    return EXIT_OK if result["passed"] else EXIT_COMPUTE


def _dataset(args):
    if not args.data:
        raise InputError("--data is required")
    if not Path(args.data).is_file():
        raise InputError(f"{args.data}: no such file")
    return load_dataset(args.data, delimiter=args.delimiter, header=args.header)


def cmd_data_spectrum(args) -> int:
    data = _dataset(args)
    fmap = _feature_map(data.x, args.feature_range)
    u = fmap.to_torus(data.x)
    omega = None
    if args.circuit:
        if len(args.circuit) != 1:
            raise InputError("data-spectrum takes at most one --circuit")
        circuit, observable = _load(args.circuit[0])
        if circuit.d != data.d:
            raise InputError(f"circuit has {circuit.d} features, data has {data.d}")
        report = circuit_spectrum(circuit, observable, leaf_cap=args.leaf_cap)
        omega = report.spectrum
        grid = _grid(args.grid) or build_grid([max(n, 1) for n in report.encoding_counts])
    else:
        grid = _grid(args.grid)
        if grid is None:
            raise InputError("data-spectrum needs --grid or --circuit")
    if grid.d != data.d:
        raise InputError(f"grid has {grid.d} axes, data has {data.d} features")
    weights = None
    if omega is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            weights = damping_factors(grid, omega, args.damping_in, args.damping_out)
    spec = inverse_nfft(u, data.y, grid, weights, lam_scale=args.lambda_scale)
    config = {
        "data": args.data,
        "header": args.header,
        "delimiter": args.delimiter,
        "circuit": args.circuit[0] if args.circuit else None,
        "grid": list(grid.sizes),
        "damping_in": args.damping_in if omega is not None else None,
        "damping_out": args.damping_out if omega is not None else None,
        "lambda_scale": args.lambda_scale,
        "feature_map": fmap.as_dict(),
    }
    _emit(args.out, {"data_spectrum.json": spec.to_json(_meta("data-spectrum", config))}, "data_spectrum.json")
    return EXIT_OK


def cmd_rank(args) -> int:
    if not args.circuit:
        raise InputError("rank needs at least one --circuit")
    data = _dataset(args)
    loaded = [_load(p) for p in args.circuit]
    names = [c.name for c, _ in loaded]
    if len(set(names)) != len(names):
        raise InputError(f"candidate names must be unique, got {names}")
    for path, (c, _) in zip(args.circuit, loaded):
        if c.d != data.d:
            raise InputError(f"{path}: circuit has {c.d} features, data has {data.d}")
    reports = [circuit_spectrum(c, o, leaf_cap=args.leaf_cap) for c, o in loaded]
    fmap = _feature_map(data.x, args.feature_range)
    u = fmap.to_torus(data.x)
    workers = _workers(args.workers)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ranked = score_and_rank(
            reports,
            u,
            data.y,
            grid=_grid(args.grid),
            subset_size=args.subset_size,
            seed=args.seed,
            damping_in=args.damping_in,
            damping_out=args.damping_out,
            normalization=args.normalization,
            workers=workers,
        )
    config = {
        "circuits": list(args.circuit),
        "data": args.data,
        "header": args.header,
        "delimiter": args.delimiter,
        "feature_map": fmap.as_dict(),
        "leaf_cap": args.leaf_cap,
        **ranked.provenance,
    }
    meta = _meta("rank", config, args.seed)
    files = {}
    if args.format in ("structured", "both"):
        files["rank.json"] = ranked.to_json(meta)
    if args.format in ("table", "both"):
        files["rank.tsv"] = ranked.to_table(meta=meta)
    _emit(args.out, files, "rank.tsv" if args.format == "table" else "rank.json")
    if args.plot:
        ranked.plot(args.plot)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if len(args.circuit) != 1:
        raise InputError("simulate takes exactly one --circuit")
    circuit, observable = _load(args.circuit[0])
    if args.points:
        if not Path(args.points).is_file():
            raise InputError(f"{args.points}: no such file")
        x = np.loadtxt(args.points, delimiter=args.delimiter, ndmin=2, comments="#")
    elif args.x:
        x = np.array([_floats(v, "--x") for v in args.x])
    else:
        x = np.zeros((1, circuit.d))
    x = x.reshape(len(x), -1) if circuit.d else np.zeros((len(x), 0))
    if x.shape[1] != circuit.d:
        raise InputError(f"points have {x.shape[1]} coordinates, circuit has {circuit.d} features")
    theta = np.array(_floats(args.theta, "--theta")) if args.theta else np.zeros(0)
    if theta.size != circuit.w:
        raise InputError(f"--theta has {theta.size} values, circuit has {circuit.w} parameters")
    values = np.atleast_1d(expectation(circuit, observable, x, np.broadcast_to(theta, (len(x), circuit.w))))
    config = {"circuit": args.circuit[0], "theta": theta.tolist(), "points": args.points, "x": x.tolist()}
    out = {"meta": _meta("simulate", config), "values": [float(v) for v in values]}
    _emit(args.out, {"simulate.json": json.dumps(out, indent=1)}, "simulate.json")
    return EXIT_OK


def cmd_train(args) -> int:
    if len(args.circuit) != 1:
        raise InputError("train takes exactly one --circuit")
    circuit, observable = _load(args.circuit[0])
    data = _dataset(args)
    if circuit.d != data.d:
        raise InputError(f"circuit has {circuit.d} features, data has {data.d}")
    fmap = _feature_map(data.x, args.feature_range)
    x_test = y_test = None
    if args.test_data:
        if not Path(args.test_data).is_file():
            raise InputError(f"{args.test_data}: no such file")
        test = load_dataset(args.test_data, delimiter=args.delimiter, header=args.header)
        x_test, y_test = fmap.to_angles(test.x), test.y
    config_obj = TrainConfig(lr=args.lr, batch=args.batch, epochs=args.epochs, seed=args.seed)
    result = train(circuit, observable, fmap.to_angles(data.x), data.y, config_obj, x_test, y_test)
    config = {
        "circuit": args.circuit[0],
        "data": args.data,
        "test_data": args.test_data,
        "header": args.header,
        "delimiter": args.delimiter,
        "feature_map": fmap.as_dict(),
        "lr": args.lr,
        "batch": args.batch,
        "epochs": args.epochs,
    }
    meta = _meta("train", config, args.seed)
    summary = {
        "meta": meta,
        "theta": result.theta.tolist(),
        "initial_theta": result.initial_theta.tolist(),
        "final_train_mse": result.train_loss[-1],
        "min_test_mse": result.min_test_loss,
    }
    table = f"# {json.dumps(meta, sort_keys=True)}\n" + result.loss_table()
    _emit(args.out, {"train.json": json.dumps(summary, indent=1), "train_loss.tsv": table}, "train.json")
    return EXIT_OK


def cmd_friedman(args) -> int:
    if args.samples < 1:
        raise InputError("--samples must be at least 1")
    data = friedman_dataset(args.samples, seed=args.seed, noise=args.noise, standardize=args.standardize)
    config = {"samples": args.samples, "noise": args.noise, "standardize": args.standardize}
    if "label_map" in data.meta:
        config["label_map"] = data.meta["label_map"]
    meta = _meta("friedman", config, args.seed)
    comment = json.dumps(meta, sort_keys=True)
    if args.out is None:
        save_dataset(data, sys.stdout, comment=comment)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        save_dataset(data, args.out / "friedman.csv", comment=comment)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=TOOL, description="Exact Fourier spectra and architecture ranking for Clifford+Pauli circuits.")
    p.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, circuits=True, data=False, seed=False):
        if circuits:
            sp.add_argument("--circuit", action="append", default=[], metavar="FILE", help="circuit JSON (repeatable)")
        if data:
            sp.add_argument("--data", metavar="FILE", help="delimited samples: feature columns then label")
            sp.add_argument("--header", action="store_true", help="data file starts with a header row")
            sp.add_argument("--delimiter", default=",")
            sp.add_argument("--feature-range", metavar="LO,HI", help="raw feature range (default: per-column min/max)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, metavar="DIR", help="output directory (default: print to stdout)")
        sp.add_argument("--leaf-cap", type=int, default=DEFAULT_LEAF_CAP)

    sp = sub.add_parser("spectrum", help="exact spectrum and coefficient polynomials")
    common(sp)
    sp.add_argument("--format", choices=["structured", "table", "both"], default="structured")
    sp.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte reproducibility)")
    sp.add_argument("--plot", metavar="FILE", help="heatmap of E|c_w|^2 over the spectrum")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("verify", help="compare the Fourier reconstruction with the simulator")
    common(sp, seed=True)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--tolerance", type=float, default=1e-9)
    sp.set_defaults(func=cmd_verify)

    def damping(sp):
        sp.add_argument("--grid", metavar="N0,N1,...", help="even lattice sizes per feature")
        sp.add_argument("--damping-in", type=float, default=DAMPING_IN)
        sp.add_argument("--damping-out", type=float, default=DAMPING_OUT)

    sp = sub.add_parser("data-spectrum", help="damped inverse NFFT of a dataset")
    common(sp, data=True)
    damping(sp)
    sp.add_argument("--lambda-scale", type=float, default=LAMBDA_SCALE)
    sp.set_defaults(func=cmd_data_spectrum)

    sp = sub.add_parser("rank", help="score and rank candidate circuits on a dataset")
    common(sp, data=True, seed=True)
    damping(sp)
    sp.add_argument("--subset-size", type=int, default=100)
    sp.add_argument("--normalization", choices=["max", "minmax", "none"], default="max")
    sp.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    sp.add_argument("--format", choices=["structured", "table", "both"], default="both")
    sp.add_argument("--plot", metavar="FILE", help="stacked bars of the score terms")
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("simulate", help="statevector expectation at given points")
    common(sp)
    sp.add_argument("--x", action="append", metavar="A,B,...", help="feature angles of one point (repeatable)")
    sp.add_argument("--points", metavar="FILE", help="delimited file of feature angles, one point per row")
    sp.add_argument("--delimiter", default=",")
    sp.add_argument("--theta", metavar="A,B,...")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("train", help="fit variational parameters with Adam and parameter shift")
    common(sp, data=True, seed=True)
    sp.add_argument("--test-data", metavar="FILE")
    sp.add_argument("--epochs", type=int, default=100)
    sp.add_argument("--lr", type=float, default=0.005)
    sp.add_argument("--batch", type=int, default=128)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("friedman", help="generate Friedman #1 regression data")
    common(sp, circuits=False, seed=True)
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--standardize", action="store_true")
    sp.set_defaults(func=cmd_friedman)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if getattr(args, "subset_size", 1) < 1:
        print(f"{TOOL}: error: --subset-size must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (LeafCapExceeded, ConditioningError, SimulationError) as exc:
        print(f"{TOOL}: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (CircuitError, InputError, ValueError, OSError) as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
