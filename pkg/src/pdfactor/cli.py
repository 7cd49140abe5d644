"""Command-line interface: factor, sweep, verify, simulate.

Matrices travel as small JSON documents (dimension plus flat row-major
data), chains add a factor list and optional scheme metadata, and bulk
output (sweeps, trajectories) goes to CSV. Angles are degrees at the
boundary and radians inside. Exit codes: 0 success, 1 invalid input or
flags, 2 numerical failure or unreachable target, 3 verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .ballantine import FactorOptions, factor_matrix, verify
from .errors import (
    DimensionMismatch,
    InvalidInput,
    InvalidParams,
    InvalidStep,
    NegativeDeterminant,
    NonPositiveDeterminant,
    NotARotation,
    NotOrthogonal,
    NotPositiveDefinite,
    NumericalFailure,
    SingularInput,
    TargetUnreachable,
)
from .flowsim import (
    ParticleCloud,
    segments_from_chain,
    simulate,
    transition_matrix,
    write_trajectory_csv,
)
from .matfun import _spd_eig
from .planar import ChainParams, FactorChain, phi_sweep

__all__ = [
    "main",
    "load_matrix",
    "save_matrix",
    "load_chain",
    "save_chain",
]

DEG = math.pi / 180.0

_INVALID_ERRORS = (
    InvalidInput,
    InvalidParams,
    InvalidStep,
    DimensionMismatch,
    NegativeDeterminant,
    NonPositiveDeterminant,
    NotARotation,
    NotOrthogonal,
    NotPositiveDefinite,
    SingularInput,
)
_NUMERIC_ERRORS = (NumericalFailure, TargetUnreachable)


class _UsageError(Exception):
    """Bad flags; argparse would normally exit 2, we want exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInput(f"{path}: expected a JSON object")
    return doc


def _shape_matrix(flat, n, what):
    arr = np.asarray(flat, dtype=np.float64)
    if arr.ndim != 1 or arr.size != n * n:
        raise InvalidInput(f"{what}: expected {n * n} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{what}: entries must be finite")
    return arr.reshape(n, n)


def load_matrix(path) -> np.ndarray:
    """Read a JSON matrix file: {"n": dim, "data": flat row-major}."""
    doc = _read_json(path)
    try:
        n = int(doc["n"])
        data = doc["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: need integer 'n' and 'data'") from exc
    if n < 1:
        raise InvalidInput(f"{path}: n must be >= 1")
    return _shape_matrix(data, n, path)


def save_matrix(path, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    doc = {"n": int(M.shape[0]), "data": M.ravel().tolist()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_chain(path) -> FactorChain:
    """Read a chain file and certify every factor SPD before returning."""
    doc = _read_json(path)
    try:
        n = int(doc["n"])
        raw = list(doc["factors"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: need integer 'n' and 'factors'") from exc
    if n < 1:
        raise InvalidInput(f"{path}: n must be >= 1")
    if not raw:
        raise InvalidInput(f"{path}: empty factor list")
    factors = []
    for i, flat in enumerate(raw):
        M = _shape_matrix(flat, n, f"{path} factor {i}")
        _spd_eig(M, f"{path} factor {i}")
        factors.append(M)
    params = None
    meta = doc.get("meta")
    if isinstance(meta, dict) and {"lambda", "theta_rad", "k"} <= set(meta):
        params = ChainParams(meta["lambda"], meta["theta_rad"], meta["k"])
    return FactorChain(factors, params=params)


def save_chain(path, chain: FactorChain) -> None:
    doc = {
        "n": int(chain.n),
        "factors": [M.ravel().tolist() for M in chain.factors],
    }
    if chain.params is not None:
        doc["meta"] = {
            "lambda": chain.params.lam,
            "theta_rad": chain.params.theta,
            "k": chain.params.k,
        }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _parse_float_list(values, what):
    out = []
    for chunk in values:
        for piece in str(chunk).split(","):
            piece = piece.strip()
            if not piece:
                continue
            try:
                out.append(float(piece))
            except ValueError as exc:
                raise _UsageError(f"bad {what} value: {piece!r}") from exc
    if not out:
        raise _UsageError(f"no {what} values given")
    return out


def cmd_factor(args) -> int:
    Phi = load_matrix(args.input)
    opts = FactorOptions(
        k_rotation=args.factors,
        lam_budget=args.max_cond,
        tol_verify=args.tol,
    )
    chain = factor_matrix(Phi, opts)
    report = verify(chain, Phi, args.tol)
    if args.output:
        save_chain(args.output, chain)
    print(json.dumps(report.as_dict(), indent=2))
    return 0 if report.passed else 3


def cmd_sweep(args) -> int:
    lams = _parse_float_list(args.lam, "--lambda")
    theta_max = args.theta_max * DEG
    lines = ["theta_deg,lambda,phi_deg"]
    for lam in lams:
        table = phi_sweep(lam, args.k, theta_max, args.steps)
        for th, ph in zip(table.theta, table.phi):
            lines.append(
                "%.17g,%.17g,%.17g" % (th / DEG, lam, ph / DEG)
            )
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    chain = load_chain(args.chain)
    target = load_matrix(args.target)
    report = verify(chain, target, args.tol)
    print(json.dumps(report.as_dict(), indent=2))
    return 0 if report.passed else 3


def _load_particles(path, n):
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            body = fh.read()
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc}") from exc
    expected = ",".join(f"x{i + 1}" for i in range(n))
    if header.replace(" ", "") != expected:
        raise InvalidInput(
            f"{path}: expected header {expected!r}, got {header!r}"
        )
    rows = []
    for ln, line in enumerate(body.splitlines(), start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n:
            raise InvalidInput(f"{path} line {ln}: expected {n} columns")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise InvalidInput(f"{path} line {ln}: {exc}") from exc
    if not rows:
        raise InvalidInput(f"{path}: no particles")
    return np.array(rows, dtype=np.float64)


def cmd_simulate(args) -> int:
    chain = load_chain(args.chain)
    positions = _load_particles(args.particles, chain.n)
    durations = None
    if args.durations:
        durations = _parse_float_list(args.durations, "--durations")
    segments = segments_from_chain(chain, durations)
    trajectory = simulate(segments, ParticleCloud(positions), dt=args.dt)
    write_trajectory_csv(trajectory, args.out_prefix)
    P = transition_matrix(segments)
    print(json.dumps({"n": int(P.shape[0]), "data": P.ravel().tolist()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pdfactor",
        description=(
            "Factor positive-determinant matrices into short products of "
            "symmetric positive-definite matrices, and simulate the "
            "gradient flows that realize them."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "factor", help="factor a JSON matrix into an SPD chain"
    )
    p.add_argument("input", help="matrix JSON file")
    p.add_argument("--factors", type=int, default=5, metavar="K",
                   help="rotation stages per block (default 5)")
    p.add_argument("--max-cond", type=float, default=1000.0, metavar="L",
                   help="largest per-factor eigenvalue ratio (default 1000)")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="verification tolerance (default 1e-8)")
    p.add_argument("--output", help="write the chain JSON here")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser(
        "sweep", help="tabulate net rotation angle against step angle"
    )
    p.add_argument("--k", type=int, default=3, help="factor count (default 3)")
    p.add_argument("--lambda", dest="lam", action="append", required=True,
                   metavar="L", help="scale value, repeatable or comma list")
    p.add_argument("--theta-max", type=float, default=89.9, metavar="DEG",
                   help="sweep upper limit in degrees (default 89.9)")
    p.add_argument("--steps", type=int, default=2000,
                   help="grid points (default 2000)")
    p.add_argument("--output", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "verify", help="check a chain against a target matrix"
    )
    p.add_argument("--chain", required=True, help="chain JSON file")
    p.add_argument("--target", required=True, help="matrix JSON file")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="residual tolerance (default 1e-8)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "simulate", help="run the gradient flow a chain encodes"
    )
    p.add_argument("--chain", required=True, help="chain JSON file")
    p.add_argument("--particles", required=True,
                   help="CSV of starting positions, header x1..xn")
    p.add_argument("--dt", type=float, default=1e-3,
                   help="integration step (default 1e-3)")
    p.add_argument("--durations", action="append", metavar="T",
                   help="per-factor durations, repeatable or comma list")
    p.add_argument("--out-prefix", required=True,
                   help="prefix for trajectory and covariance CSVs")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _INVALID_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
