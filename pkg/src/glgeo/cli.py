"""Command-line front end.

Exit codes:
    0   success (distance solved or closed form, verification passed)
    2   distance is only a best upper bound, or verification failed
    3   distance is infinite (points in different components of GL(n))
    64  malformed input (matrix/curve literal, bad flags)
    65  input outside the domain (singular, det <= 0, not normal, ...)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .core import MetricParams, SingularMatrixError, iso_norm, matrix_from_rows, parse_matrix
from .distance import DistanceStatus, SolverOptions, dist_to_SOn, geodesic_distance
from .geodesics import (
    DiscreteCurve,
    GeodesicSpec,
    conserved_quantities,
    curve_from_json,
    curve_to_json,
    finite_difference_tangents,
    geodesic_residual,
    sample_geodesic,
)
from .matfun import log_psym, mat_exp, normal_log, polar_decompose, sqrt_psym

EXIT_OK = 0
EXIT_UPPER_BOUND = 2
EXIT_VERIFY_FAILED = 2
EXIT_INFINITE = 3
EXIT_MALFORMED = 64
EXIT_DOMAIN = 65


class MalformedInput(Exception):
    pass


class DomainError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits: lossless for float64."""
    return format(float(x), ".17g")


def to_json(obj, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits; arrays stay on one line."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v, indent) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return fmt(obj)


def _flat_names(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i + 1}{j + 1}" for i in range(n) for j in range(n)]


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_MALFORMED, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=float, default=1.0)
    common.add_argument("--muc", type=float, default=1.0)
    common.add_argument("--kappa", type=float, default=1.0)
    common.add_argument("--tol", type=float, default=None, help="solver residual tolerance")
    common.add_argument("--seed", type=int, default=None,
                        help="solver seed (default: $GLGEO_SEED or 0)")
    common.add_argument("--max-starts", type=int, default=None)
    common.add_argument("--max-winding", type=int, default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog="glgeo", description="Geodesics and geodesic distances on GL+(n).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dist", parents=[common], help="geodesic distance between two matrices")
    p.add_argument("--a", required=True, help="matrix literal or @file")
    p.add_argument("--b", required=True, help="matrix literal or @file")

    p = sub.add_parser("geodesic", parents=[common], help="sample a geodesic curve")
    p.add_argument("--base", required=True)
    p.add_argument("--tangent", required=True, help="initial tangent in identity coordinates")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--verify", action="store_true", help="append conserved quantities per sample")

    p = sub.add_parser("verify", parents=[common], help="check a sampled curve against the geodesic equation")
    p.add_argument("curve", help="curve file (JSON or CSV), '-' for stdin")
    p.add_argument("--threshold", type=float, default=1e-4)

    p = sub.add_parser("hencky", parents=[common], help="distance to SO(n) and polar factors")
    p.add_argument("--f", required=True)

    p = sub.add_parser("matfun", parents=[common], help="matrix exp/log/sqrt utilities")
    p.add_argument("function", choices=("exp", "log", "sqrt", "normal-log"))
    p.add_argument("--m", required=True)
    return parser


def _read_text(ref: str) -> str:
    if ref == "-":
        return sys.stdin.read()
    if ref.startswith("@"):
        try:
            with open(ref[1:], encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise MalformedInput(f"cannot read {ref[1:]}: {exc.strerror}") from None
    return ref


def _matrix_arg(ref: str, name: str) -> np.ndarray:
    try:
        return parse_matrix(_read_text(ref))
    except ValueError as exc:
        raise MalformedInput(f"--{name}: {exc}") from None


def _params(args) -> MetricParams:
    try:
        return MetricParams(args.mu, args.muc, args.kappa)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from None


def _solver_options(args) -> SolverOptions:
    seed = args.seed
    if seed is None:
        try:
            seed = int(os.environ.get("GLGEO_SEED", "0"))
        except ValueError:
            raise MalformedInput("GLGEO_SEED must be an integer") from None
    kwargs = {"seed": seed}
    if args.tol is not None:
        kwargs["residual_tol"] = args.tol
    if args.max_starts is not None:
        kwargs["max_starts"] = args.max_starts
    if args.max_winding is not None:
        kwargs["max_winding"] = args.max_winding
    try:
        return SolverOptions(**kwargs)
    except ValueError as exc:
        raise MalformedInput(str(exc)) from None


def cmd_dist(args) -> tuple[int, str]:
    A = _matrix_arg(args.a, "a")
    B = _matrix_arg(args.b, "b")
    if A.shape != B.shape:
        raise MalformedInput("--a and --b must have the same dimension")
    p = _params(args)
    opts = _solver_options(args)
    try:
        result = geodesic_distance(A, B, p, opts)
    except SingularMatrixError as exc:
        raise DomainError(str(exc)) from None

    code = {
        DistanceStatus.EXACT_CLOSED_FORM: EXIT_OK,
        DistanceStatus.SOLVER_CONVERGED: EXIT_OK,
        DistanceStatus.BEST_UPPER_BOUND: EXIT_UPPER_BOUND,
        DistanceStatus.INFINITE: EXIT_INFINITE,
    }[result.status]
    if args.format == "json":
        return code, to_json(result.to_json()) + "\n"
    n = A.shape[0]
    header = ["value", "residual", "status", "starts_used", "converged_starts"] + _flat_names("m", n)
    minimizer = result.minimizer.ravel().tolist() if result.minimizer is not None else [""] * (n * n)
    value = fmt(result.value) if math.isfinite(result.value) else "Infinity"
    row = [value, result.residual, result.status.value,
           str(result.starts_used), str(result.converged_starts)] + minimizer
    return code, to_csv(header, [row])


def _conserved_row(U, p):
    return list(conserved_quantities(U, p))


def cmd_geodesic(args) -> tuple[int, str]:
    base = _matrix_arg(args.base, "base")
    tangent = _matrix_arg(args.tangent, "tangent")
    if base.shape != tangent.shape:
        raise MalformedInput("--base and --tangent must have the same dimension")
    if args.samples < 2:
        raise MalformedInput("--samples must be at least 2")
    if not args.t1 > args.t0:
        raise MalformedInput("--t1 must be greater than --t0")
    p = _params(args)
    if np.linalg.det(base) <= 0.0:
        raise DomainError("base point must have positive determinant")
    spec = GeodesicSpec(base, tangent, p)
    curve = sample_geodesic(spec, np.linspace(args.t0, args.t1, args.samples))
    n = base.shape[0]

    if args.format == "json":
        obj = curve_to_json(curve)
        if args.verify:
            obj["conserved"] = [
                dict(zip(("norm", "trace", "det", "trcof"), _conserved_row(U, p)))
                for U in curve.tangents
            ]
        return EXIT_OK, to_json(obj) + "\n"
    header = ["t"] + _flat_names("x", n)
    if args.verify:
        header += ["norm", "trace", "det", "trcof"]
    rows = []
    for t, X, U in zip(curve.times, curve.points, curve.tangents):
        row = [t] + X.ravel().tolist()
        if args.verify:
            row += _conserved_row(U, p)
        rows.append(row)
    return EXIT_OK, to_csv(header, rows)


def _parse_curve(text: str) -> DiscreteCurve:
    stripped = text.lstrip()
    try:
        if stripped.startswith("{"):
            def _reject(token):
                raise ValueError(f"non-finite literal {token!r}")

            return curve_from_json(json.loads(text, parse_constant=_reject))
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or not rows[0] or rows[0][0] != "t":
            raise ValueError('CSV curve must start with a header row "t,x11,..."')
        header = rows[0]
        n_entries = sum(1 for h in header if h.startswith("x"))
        n = math.isqrt(n_entries)
        if n < 1 or n * n != n_entries:
            raise ValueError("CSV header does not describe a square matrix")
        times, points = [], []
        for row in rows[1:]:
            if not row:
                continue
            values = [float(v) for v in row[: 1 + n_entries]]
            if len(values) != 1 + n_entries:
                raise ValueError("short CSV row")
            times.append(values[0])
            points.append(matrix_from_rows(np.reshape(values[1:], (n, n)).tolist()))
        return DiscreteCurve(np.array(times), np.array(points))
    except (ValueError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"malformed curve: {exc}") from None


def cmd_verify(args) -> tuple[int, str]:
    curve = _parse_curve(_read_text(args.curve if args.curve == "-" else "@" + args.curve))
    p = _params(args)
    try:
        residual = geodesic_residual(curve, p)
        us, _ = finite_difference_tangents(curve)
    except (ValueError, SingularMatrixError) as exc:
        raise DomainError(str(exc)) from None
    values = np.array([_conserved_row(U, p) for U in us])
    ref = values[0]
    drift = np.max(np.abs(values - ref), axis=0) / np.maximum(np.abs(ref), 1.0)
    passed = residual <= args.threshold
    code = EXIT_OK if passed else EXIT_VERIFY_FAILED
    names = ("norm", "trace", "det", "trcof")
    if args.format == "json":
        obj = {
            "residual": residual,
            "threshold": args.threshold,
            "passed": passed,
            "samples": len(curve),
            "conserved_drift": dict(zip(names, drift.tolist())),
        }
        return code, to_json(obj) + "\n"
    header = ["residual", "threshold", "passed", "samples"] + [f"drift_{k}" for k in names]
    row = [residual, args.threshold, "true" if passed else "false", str(len(curve))] + drift.tolist()
    return code, to_csv(header, [row])


def cmd_hencky(args) -> tuple[int, str]:
    F = _matrix_arg(args.f, "f")
    if np.linalg.det(F) <= 0.0:
        raise DomainError("F must have positive determinant")
    try:
        polar = polar_decompose(F)
        log_u = log_psym(polar.stretch)
        distance = dist_to_SOn(F, args.mu, args.kappa)
    except (ValueError, SingularMatrixError) as exc:
        raise DomainError(str(exc)) from None
    if args.format == "json":
        obj = {
            "distance": distance,
            "rotation": polar.rotation,
            "stretch": polar.stretch,
            "log_stretch": log_u,
        }
        return EXIT_OK, to_json(obj) + "\n"
    n = F.shape[0]
    header = ["distance"] + _flat_names("r", n) + _flat_names("u", n) + _flat_names("l", n)
    row = [distance] + polar.rotation.ravel().tolist() + polar.stretch.ravel().tolist() + log_u.ravel().tolist()
    return EXIT_OK, to_csv(header, [row])


def cmd_matfun(args) -> tuple[int, str]:
    M = _matrix_arg(args.m, "m")
    n = M.shape[0]
    try:
        if args.function == "normal-log":
            winding = 2 if args.max_winding is None else args.max_winding
            p = _params(args)
            branches = normal_log(M, winding)
        else:
            fn = {"exp": mat_exp, "log": log_psym, "sqrt": sqrt_psym}[args.function]
            result = fn(M)
    except (ValueError, SingularMatrixError) as exc:
        raise DomainError(str(exc)) from None

    if args.function != "normal-log":
        if args.format == "json":
            return EXIT_OK, to_json({"function": args.function, "result": result}) + "\n"
        return EXIT_OK, to_csv(_flat_names("m", n), [result.ravel().tolist()])

    if args.format == "json":
        obj = {
            "function": args.function,
            "branches": [
                {
                    "branch_index": list(br.branch_index),
                    "frobenius_norm": float(np.linalg.norm(br.value)),
                    "iso_norm": iso_norm(p, br.value),
                    "value": br.value,
                }
                for br in branches
            ],
        }
        return EXIT_OK, to_json(obj) + "\n"
    header = ["branch_index", "frobenius_norm", "iso_norm"] + _flat_names("m", n)
    rows = [
        [";".join(str(k) for k in br.branch_index), float(np.linalg.norm(br.value)),
         iso_norm(p, br.value)] + br.value.ravel().tolist()
        for br in branches
    ]
    return EXIT_OK, to_csv(header, rows)


COMMANDS = {
    "dist": cmd_dist,
    "geodesic": cmd_geodesic,
    "verify": cmd_verify,
    "hencky": cmd_hencky,
    "matfun": cmd_matfun,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help and on usage errors; report the code instead
        return exc.code if isinstance(exc.code, int) else EXIT_MALFORMED
    try:
        code, text = COMMANDS[args.command](args)
    except MalformedInput as exc:
        print(f"glgeo: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except DomainError as exc:
        print(f"glgeo: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
