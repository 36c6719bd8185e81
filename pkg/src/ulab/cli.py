"""Command-line entry point: ``ulab <subcommand> [flags]``.

Every subcommand writes one JSON record (schema ``ulab/1``) to stdout or
``--out`` and, where it produces tables, a CSV side file (``--csv``, or the
``--out`` path with a ``.csv`` suffix). Exit codes: 0 ok, 2 bad arguments
or violated hypotheses, 3 enumeration budget exceeded, 4 solver did not
converge.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import detector, demixing, gaussian, partial_fourier, rip, uncertainty
from .errors import ArgumentError, BudgetError, ConvergenceError
from .kernels import BACKEND
from .operators import UnitaryOperator, dft_operator, haar_unitary
from .rng import generator
from .signal import (MACHINE_EPS_CUTOFF, sparsity_report, subgroup_indicator,
                     unit_vector)

SCHEMA = "ulab/1"
EXIT_OK, EXIT_ARGS, EXIT_BUDGET, EXIT_CONVERGENCE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ARGS)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(value):
    """Replace non-finite floats (invalid JSON) with strings."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def parse_signal(spec: str, n: int, seed: int = 0) -> np.ndarray:
    """``impulse``, ``comb:d``, ``gaussian``, ``random:k`` or ``flat``."""
    name, _, arg = spec.partition(":")
    if name == "impulse":
        return unit_vector(n, int(arg) if arg else 0)
    if name == "comb":
        return subgroup_indicator(n, int(arg))
    if name == "gaussian":
        return gaussian.discrete_gaussian(n).astype(np.complex128)
    if name == "flat":
        return np.ones(n, dtype=np.complex128)
    if name == "random":
        k = int(arg) if arg else n
        if not 1 <= k <= n:
            raise ArgumentError("random:k needs 1 <= k <= n")
        rng = generator(seed, n, k, 0x516)
        x = np.zeros(n, dtype=np.complex128)
        idx = rng.choice(n, size=k, replace=False)
        x[idx] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        return x
    raise ArgumentError(f"unknown signal spec {spec!r}")


def _operator(n: int, haar_seed: Optional[int], path: Optional[str]) -> UnitaryOperator:
    if path:
        U = UnitaryOperator.load(path)
        if U.n != n:
            raise ArgumentError(f"cached operator has n={U.n}, expected {n}")
        return U
    return dft_operator(n) if haar_seed is None else haar_unitary(n, haar_seed)


def _parse_u(spec: str, n: int) -> UnitaryOperator:
    if spec == "dft":
        return dft_operator(n)
    name, _, arg = spec.partition(":")
    if name == "haar" and arg:
        return haar_unitary(n, int(arg))
    raise ArgumentError(f"bad operator spec {spec!r} (dft or haar:seed)")


def _write_csv(path: Optional[Path], header, rows) -> Optional[str]:
    if path is None:
        return None
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def _csv_path(args) -> Optional[Path]:
    if getattr(args, "csv", None):
        return Path(args.csv)
    if getattr(args, "out", None):
        return Path(args.out).with_suffix(".csv")
    return None


# --------------------------------------------------------------------------
# subcommands; each returns (outputs, anchor)


def cmd_ns(args):
    x = parse_signal(args.signal, args.n, args.seed)
    report = sparsity_report(x, args.rel_tol, args.abs_tol)
    return report.to_dict(), "numerical sparsity ns(x) = ||x||_1^2 / ||x||_2^2"


def cmd_gaussian(args):
    n = args.n
    x = gaussian.discrete_gaussian(n)
    fx = dft_operator(n).apply(x)
    if args.rel_threshold is not None:
        rep_x = sparsity_report(x, rel_tol=args.rel_threshold)
        rep_f = sparsity_report(fx, rel_tol=args.rel_threshold)
    else:
        rep_x = sparsity_report(x, abs_tol=args.threshold)
        rep_f = sparsity_report(fx, abs_tol=args.threshold)
    bounds = gaussian.gaussian_bounds(n)
    mag = np.abs(x)
    path = _write_csv(_csv_path(args), ["index", "real", "imag", "magnitude"],
                      [(j, float(x[j].real), float(x[j].imag), float(mag[j])) for j in range(n)])
    out = {
        "x": rep_x.to_dict(),
        "fx": rep_f.to_dict(),
        "zero_norm": rep_x.zero_norm,
        "fixed_point_error": float(np.abs(fx - x).max() / mag.max()),
        "ns_product_over_n": rep_x.ns * rep_f.ns / n,
        "bounds": {"l2_sq_lower": bounds.l2_sq_lower, "l1_upper": bounds.l1_upper,
                   "ns_upper": bounds.ns_upper, "hold": bounds.holds_for(x)},
        "csv": path,
    }
    return out, "discrete Gaussian is a DFT fixed point with near-extremal ns product"


_PRINCIPLE_FLAGS = {"m0": "mult_zero_norm", "a0": "add_zero_norm", "mns": "mult_ns", "ans": "add_ns"}


def cmd_up_check(args):
    x = parse_signal(args.signal, args.n, args.seed)
    principle = _PRINCIPLE_FLAGS[args.principle]
    if principle == "mult_zero_norm":
        rep = uncertainty.check_mult_zero_norm(x)
    elif principle == "add_zero_norm":
        rep = uncertainty.check_add_zero_norm(x)
    else:
        U = _operator(args.n, args.haar_seed, args.operator)
        check = uncertainty.check_mult_ns if principle == "mult_ns" else uncertainty.check_add_ns
        rep = check(x, U)
    anchors = {
        "mult_zero_norm": "multiplicative 0-norm uncertainty principle",
        "add_zero_norm": "additive 0-norm uncertainty principle (prime n)",
        "mult_ns": "multiplicative numerical-sparsity uncertainty principle",
        "add_ns": "additive numerical-sparsity principle for Haar unitaries",
    }
    return rep.to_dict(include_witness=args.witness), anchors[principle]


def cmd_up_scan(args):
    scan = uncertainty.additive_montecarlo(
        args.n, args.seeds, args.budget, args.seed, include_dft=not args.no_dft,
        restarts=args.restarts, steps=args.steps)
    path = _write_csv(_csv_path(args), ["seed", "additive_minimum"],
                      list(zip(scan.seeds, scan.haar_minima)))
    return {**scan.to_dict(), "csv": path}, "additive numerical-sparsity principle for Haar unitaries"


def _measurement(spec: str, n: int) -> rip.MeasurementMatrix:
    name, _, rest = spec.partition(":")
    if name == "iu-dft":
        return rip.identity_concat(dft_operator(n))
    if name == "iu-haar":
        return rip.identity_concat(haar_unitary(n, int(rest or 0)))
    if name == "iu-file":
        return rip.identity_concat(UnitaryOperator.load(rest))
    if name == "partial-fourier":
        m_str, _, seed_str = rest.partition(":")
        if not m_str:
            raise ArgumentError("partial-fourier needs m (partial-fourier:m:seed)")
        rows = partial_fourier.sample_rows(n, int(m_str), int(seed_str or 0))
        return rip.partial_fourier(n, rows.indices)
    raise ArgumentError(f"unknown matrix spec {spec!r}")


def cmd_rip(args):
    Phi = _measurement(args.matrix, args.n)
    report = rip.rip_report(Phi, args.k, args.budget, samples=args.mc, seed=args.seed)
    out = {**report.to_dict(), "matrix": args.matrix, "structure": Phi.structure,
           "m": Phi.m, "N": Phi.N}
    if args.mc is None and np.abs(Phi.column_norms() - 1).max() <= 1e-10:
        out["delta_le_2theta"] = report.delta <= 2 * report.theta + 1e-10
    return out, "restricted orthogonality, restricted isometry and width constants"


def cmd_coupon(args):
    stats = partial_fourier.coupon_simulate(args.k, args.trials, args.seed)
    path = _write_csv(_csv_path(args), ["trial", "T_k"], enumerate(stats.samples.tolist()))
    return {**stats.to_dict(), "csv": path}, "coupon collector completion time Gumbel limit"


def cmd_pf_witness(args):
    res = partial_fourier.witness_probability(args.n, args.k, args.m, args.trials, args.seed)
    rows = partial_fourier.sample_rows(args.n, args.m, args.seed)
    x = partial_fourier.nullspace_sparse_witness(args.n, args.k, rows)
    example = None
    if x is not None:
        example = {"zero_norm": int(np.count_nonzero(x)),
                   "max_response": float(np.abs(rows.matrix() @ x).max()) if rows.m else 0.0}
    return ({**res.to_dict(), "example_witness": example},
            "sparse nullspace witnesses of row-sampled DFT matrices")


def cmd_detect(args):
    noise = detector.NoiseModel.parse(args.noise)
    shapes = None if args.shape == "all" else [args.shape]
    res = detector.detection_experiment(args.n, args.k, noise, args.p, args.trials,
                                        args.seed, shapes=shapes)
    return res.to_dict(), "l1 detector error guarantee for noisy Fourier queries"


def cmd_demix(args):
    n = args.n
    per_instance = []
    csv_rows = []
    for t in range(args.trials):
        if args.comb:
            rng = generator(args.seed, n, t, 0xC0B)
            prob = demixing.comb_problem(n, int(rng.integers(n)), int(rng.integers(n)),
                                         np.exp(2j * np.pi * rng.random()))
        else:
            U = _parse_u(args.u, n)
            prob = demixing.planted_problem(U, args.kx, args.keps, seed=args.seed + t)
        res = demixing.demix(prob)
        per_instance.append({"trial": t, "label": prob.label, **res.to_dict()})
        csv_rows.append((t, prob.label, res.success, res.relative_error))
        if args.save_problems:
            with open(args.save_problems, "a") as fh:
                fh.write(prob.to_json() + "\n")
    rate = float(np.mean([r["success"] for r in per_instance])) if per_instance else float("nan")
    out = {"n": n, "kx": args.kx, "keps": args.keps, "u": args.u, "comb": args.comb,
           "success_rate": rate, "instances": per_instance}
    header = ["trial", "label", "success", "relative_error"]
    if args.sweep_n:
        sweep = demixing.bottleneck_sweep(
            [int(v) for v in args.sweep_n.split(",")], [int(v) for v in args.sweep_k.split(",")],
            args.u.partition(":")[0], args.trials, args.seed)
        out["sweep"] = sweep.to_dict()
        header, csv_rows = ["n", "k", "success_rate"], sweep.csv_rows()
    out["csv"] = _write_csv(_csv_path(args), header, csv_rows)
    return out, "l1 demixing of Fourier-sparse signals from sparse corruption"


def cmd_haar_cache(args):
    U = haar_unitary(args.n, args.seed)
    U.save(args.file)
    return ({"n": args.n, "file": args.file, "bytes": 16 + 16 * args.n * args.n,
             "unitarity_error": U.unitarity_error()},
            "Haar-distributed unitary via QR of a complex Ginibre matrix")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ulab", description="Numerical-sparsity uncertainty experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=fn)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the JSON record here instead of stdout")
        return p

    p = add("ns", cmd_ns, "sparsity report of a signal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--signal", default="impulse")
    p.add_argument("--rel-tol", type=float, default=0.0)
    p.add_argument("--abs-tol", type=float)

    p = add("gaussian", cmd_gaussian, "discrete Gaussian and its sparsity")
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--threshold", type=float, default=MACHINE_EPS_CUTOFF)
    g.add_argument("--rel-threshold", type=float)
    p.add_argument("--csv")

    p = add("up-check", cmd_up_check, "check one uncertainty principle")
    p.add_argument("--principle", choices=sorted(_PRINCIPLE_FLAGS), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--signal", default="impulse")
    p.add_argument("--haar-seed", type=int)
    p.add_argument("--operator", help="cached operator file (see haar-cache)")
    p.add_argument("--witness", action="store_true", help="include the signal in the output")

    p = add("up-scan", cmd_up_scan, "additive minima over Haar draws")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--no-dft", action="store_true")
    p.add_argument("--csv")

    p = add("rip", cmd_rip, "restricted isometry / orthogonality constants")
    p.add_argument("--matrix", required=True,
                   help="iu-dft | iu-haar:seed | iu-file:path | partial-fourier:m:seed")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--budget", type=int, default=rip.DEFAULT_BUDGET)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="exhaustive enumeration (default)")
    g.add_argument("--mc", type=int, metavar="T", help="sample T random supports instead")

    p = add("coupon", cmd_coupon, "coupon collector simulation")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--csv")

    p = add("pf-witness", cmd_pf_witness, "sparse nullspace witness probability")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, default=10_000)

    p = add("detect", cmd_detect, "l1 detector Monte Carlo")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--noise", default="const:0")
    p.add_argument("--shape", choices=[*detector.SHAPES, "all"], default="all")
    p.add_argument("--trials", type=int, default=10_000)

    p = add("demix", cmd_demix, "l1 demixing experiments")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kx", type=int, default=1)
    p.add_argument("--keps", type=int, default=1)
    p.add_argument("--u", default="dft")
    p.add_argument("--comb", action="store_true")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--sweep-n", help="comma-separated n values for a phase table")
    p.add_argument("--sweep-k", default="1,2,4,8,16")
    p.add_argument("--save-problems", help="append instances as JSON lines")
    p.add_argument("--csv")

    p = add("haar-cache", cmd_haar_cache, "write a Haar unitary to a binary container")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--file", required=True)
    return parser


def run(argv=None, now: Optional[str] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    started = now or _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        outputs, anchor = args.func(args)
    except (ArgumentError, ValueError) as exc:
        print(f"ulab {args.command}: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except BudgetError as exc:
        print(f"ulab {args.command}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConvergenceError as exc:
        print(f"ulab {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    record = {
        "schema": SCHEMA,
        "command": args.command,
        "params": params,
        "seed": args.seed,
        "started_at": started,
        "backend": BACKEND,
        "paper_anchor": anchor,
        "outputs": outputs,
    }
    text = json.dumps(_clean(record), indent=2, default=_json_default)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
