"""Command-line front end: ``maln <subcommand> ...``.

Exit codes: 0 success, 2 invalid input or infeasible alignment, 3 malformed
tensor file, 4 enumeration limit refused. Failures print one JSON line
``{"error": code, "message": ...}`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import alignment, emission, lattice, train
from .tensor import FormatError, read_tensor, write_tensor

EXIT_INVALID = 2
EXIT_FORMAT = 3
EXIT_LIMIT = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_INVALID, f"{message}\n{self.format_usage()}")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _read(path):
    try:
        return read_tensor(path)
    except OSError as exc:
        raise CliError(EXIT_INVALID, f"cannot read {path}: {exc.strerror}") from exc


def cmd_emission(args, out):
    mel = _read(args.mel)
    gaussians = emission.GaussianSequence.from_packed(_read(args.gaussians))
    write_tensor(emission.emission_matrix(mel, gaussians), args.out)


def cmd_loss(args, out):
    logp = _read(args.logp)
    if args.grad:
        loss, grad = lattice.loss_and_grad(logp)
        write_tensor(grad, args.grad)
    else:
        _, loss = lattice.forward(logp)
    print(_fmt(loss), file=out)


def cmd_oracle(args, out):
    print(_fmt(lattice.brute_force_loss(_read(args.logp))), file=out)


def cmd_align(args, out):
    path, score = alignment.viterbi(_read(args.logp))
    durations = alignment.path_to_durations(path, int(path[-1]) + 1)
    print(_dump({"durations": durations.tolist(), "score": score}), file=out)


def cmd_regulate(args, out):
    hidden = _read(args.hidden)
    with open(args.durations) as fh:
        spec = json.load(fh)
    durations = spec["durations"] if isinstance(spec, dict) else spec
    write_tensor(alignment.length_regulate(hidden, np.asarray(durations, dtype=np.int64)), args.out)


def cmd_train_demo(args, out):
    report = train.run_demo(m=args.tokens, d=args.dim, noise_std=args.noise, steps=args.steps,
                            lr=args.lr, seed=args.seed, max_duration=args.max_duration,
                            regressor_steps=args.regressor_steps)
    data = asdict(report)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(data, fh, indent=2)
    summary = {k: data[k] for k in ("final_loss", "true_durations", "recovered_durations",
                                    "recovered", "regressor_mse")}
    print(_dump(summary), file=out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="maln", description="Monotonic alignment loss toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("emission", help="Gaussian log-likelihood matrix")
    p.add_argument("--mel", required=True, help="(n, d) frames tensor")
    p.add_argument("--gaussians", required=True, help="(2, m, d) means/log-variances tensor")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emission)

    p = sub.add_parser("loss", help="alignment loss by the forward recursion")
    p.add_argument("--logp", required=True)
    p.add_argument("--grad", help="write the (n, m) gradient tensor here")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("oracle", help="alignment loss by enumerating every path")
    p.add_argument("--logp", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("align", help="best path durations")
    p.add_argument("--logp", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("regulate", help="expand token rows by durations")
    p.add_argument("--hidden", required=True)
    p.add_argument("--durations", required=True, help='JSON list or {"durations": [...]}')
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_regulate)

    p = sub.add_parser("train-demo", help="synthetic training run")
    p.add_argument("--tokens", type=int, default=5)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-duration", type=int, default=8)
    p.add_argument("--regressor-steps", type=int, default=2000)
    p.add_argument("--report", help="write the full JSON report here")
    p.set_defaults(func=cmd_train_demo)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        args.func(args, out)
        return 0
    except CliError as exc:
        code, message = exc.code, str(exc)
    except FormatError as exc:
        code, message = EXIT_FORMAT, str(exc)
    except lattice.CombinatorialLimit as exc:
        code, message = EXIT_LIMIT, str(exc)
    except (ValueError, IndexError, KeyError, TypeError, json.JSONDecodeError) as exc:
        code, message = EXIT_INVALID, str(exc)
    print(_dump({"error": code, "message": message}), file=err)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
