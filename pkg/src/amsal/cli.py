"""Batch command-line interface.

Subcommands: synth (emit a planted dataset), align (recover an
assignment), erase (fit and apply a removal operator), eval (score
predictions) and pipeline (align -> erase -> eval from a config file).
The CLI is a thin shell; every result is reproducible through library
calls alone. AMSAL_THREADS, when set, caps the parallelism the library
may use internally (0 means automatic); the reference implementation
runs each stage sequentially, which trivially respects any cap.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io as aio
from .assignment import GuardedRecords, bounds_from_priors
from .driver import AmsalConfig, alignment_accuracy, run_amsal
from .errors import AmsalError, InvalidInput
from .metrics import EvalReport, accuracy, f1_macro, mae, mae_gap, tpr_gap_rms
from .removal import apply_eraser, fit_inlp, fit_sal
from .synthetic import LatentSpec, as_records, generate_latent


def thread_cap():
    """Parsed AMSAL_THREADS value; 0 (automatic) when unset."""
    raw = os.environ.get("AMSAL_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise InvalidInput(f"AMSAL_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise InvalidInput(f"AMSAL_THREADS must be non-negative, got {cap}")
    return cap


def _ext(fmt):
    return "csv" if fmt == "csv" else "bin"


def _cmd_synth(args):
    spec = LatentSpec(
        n=args.n,
        d=args.d,
        d_prime=args.d_prime,
        num_states=args.states,
        state_priors=tuple(args.priors),
        x_noise=args.x_noise,
        z_noise=args.z_noise,
        separation=args.separation,
        bound_b=args.clip,
        rng_seed=args.seed,
    )
    data = generate_latent(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = _ext(args.format)
    aio.save_matrix(data.x, out / f"x.{ext}", fmt=args.format)
    aio.save_matrix(data.z, out / f"z_samples.{ext}", fmt=args.format)
    records, truth = as_records(data, slack=args.slack)
    aio.save_matrix(records.z, out / f"z_records.{ext}", fmt=args.format)
    aio.save_assignment(truth, out / "truth.csv")
    with open(out / "states.csv", "w") as fh:
        for h in data.states:
            fh.write(f"{int(h)}\n")
    with open(out / "priors.csv", "w") as fh:
        counts = np.bincount(truth.map, minlength=records.m)
        fh.write(",".join(repr(float(c) / data.n) for c in counts) + "\n")
    print(f"wrote {data.n} samples ({records.m} unique records) to {out}")
    return 0


def _records_from_args(args, n, z):
    if args.priors:
        priors = np.asarray(args.priors, dtype=np.float64)
    else:
        priors = np.full(z.shape[0], 1.0 / z.shape[0])
    lower, upper = bounds_from_priors(priors, n, args.slack)
    return GuardedRecords(z, lower, upper)


def _cmd_align(args):
    x = aio.load_matrix(args.x)
    z = aio.load_matrix(args.records)
    records = _records_from_args(args, x.shape[0], z)
    truth = aio.load_assignment(args.truth) if args.truth else None
    seed_labels = aio.load_seed_labels(args.labels) if args.labels else None
    cfg = AmsalConfig(
        max_iterations=args.iterations,
        num_seeds=args.seeds,
        slack=args.slack,
        score_k=args.k if args.k else "full",
        selection="partial" if seed_labels is not None else "unsupervised",
        seed_labels=seed_labels,
        rng_seed=args.rng_seed,
    )
    result = run_amsal(x, records, cfg, truth=truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    aio.save_assignment(result.assignment, out / "assignment.csv")
    aio.save_trace(result.trace, out / "trace.csv")
    print(f"objective = {result.objective!r} (seed {result.seed})")
    if truth is not None:
        print(f"alignment_accuracy = {alignment_accuracy(result.assignment, truth)!r}")
    return 0


def _cmd_erase(args):
    x = aio.load_matrix(args.x)
    pi = aio.load_assignment(args.assignment)
    if args.method == "sal":
        z = aio.load_matrix(args.records)
        records = _records_from_args(args, x.shape[0], z)
        rank = "auto" if args.rank == "auto" else int(args.rank)
        eraser = fit_sal(x, records, pi, rank)
    else:
        eraser = fit_inlp(x, pi.map, args.max_rounds)
    erased = apply_eraser(eraser, x)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    aio.save_eraser(eraser, out / "eraser.bin")
    ext = _ext(args.format)
    aio.save_matrix(erased, out / f"x_erased.{ext}", fmt=args.format)
    print(f"erased matrix written to {out / f'x_erased.{ext}'}")
    return 0


def _cmd_eval(args):
    z = aio.load_labels(args.z)
    if args.task == "classification":
        y_true = aio.load_labels(args.y_true)
        y_pred = aio.load_labels(args.y_pred)
        gap = tpr_gap_rms(y_true, y_pred, z) if np.unique(z).size == 2 else None
        report = EvalReport(
            task_accuracy=accuracy(y_true, y_pred),
            f1_macro=f1_macro(y_true, y_pred),
            tpr_gap_rms=gap,
        )
    else:
        y_true = aio.load_values(args.y_true)
        y_pred = aio.load_values(args.y_pred)
        errs = np.abs(y_true - y_pred)
        report = EvalReport(mae=mae(y_true, y_pred), mae_gap=mae_gap(errs, z))
    text = aio.format_report(report)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def _cmd_pipeline(args):
    cfg = aio.PipelineConfig.from_file(args.config)
    report = aio.run_pipeline(cfg)
    print(aio.format_report(report), end="")
    return 0


def _add_bounds_args(p):
    p.add_argument("--priors", type=float, nargs="*", default=None,
                   help="record priors in records-file row order (default: uniform; "
                        "synth writes the matching values to priors.csv)")
    p.add_argument("--slack", type=float, default=0.2,
                   help="fractional slack around the prior counts")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="amsal",
        description="Align unlabeled inputs to guarded records, then erase the aligned information.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--d-prime", type=int, default=2)
    p.add_argument("--states", type=int, default=2)
    p.add_argument("--priors", type=float, nargs="*", default=(0.6, 0.4))
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--x-noise", type=float, default=1.0)
    p.add_argument("--z-noise", type=float, default=0.0)
    p.add_argument("--clip", type=float, default=None)
    p.add_argument("--slack", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("align", help="recover an input-to-record assignment")
    p.add_argument("--x", required=True)
    p.add_argument("--records", required=True)
    _add_bounds_args(p)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None, help="projected scoring dimensions")
    p.add_argument("--truth", default=None)
    p.add_argument("--labels", default=None, help="seed pairs for partial selection")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("erase", help="fit an eraser under a fixed assignment")
    p.add_argument("--x", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("--method", choices=("sal", "inlp"), default="sal")
    p.add_argument("--records", default=None, help="required for sal")
    _add_bounds_args(p)
    p.add_argument("--rank", default="auto", help="directions to drop (sal)")
    p.add_argument("--max-rounds", type=int, default=10, help="probe rounds (inlp)")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_erase)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--task", choices=("classification", "regression"), required=True)
    p.add_argument("--y-true", required=True)
    p.add_argument("--y-pred", required=True)
    p.add_argument("--z", required=True, help="per-sample guarded group ids")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("pipeline", help="run align -> erase -> eval from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        thread_cap()
        if args.command == "erase" and args.method == "sal" and not args.records:
            raise InvalidInput("erase --method sal requires --records")
        return args.func(args)
    except AmsalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
