"""Command-line front end.

Subcommands: ``analyze``, ``decay``, ``torus`` and ``verify-paper``. Exit codes:
0 success, 1 failed verification, 2 parse or flag error, 3 validation error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Optional

import numpy as np
import yaml

from . import constants as C
from .entropy import check_density, decay_trajectory
from .errors import NumericalError, QmsError, ValidationError
from .modelfile import ModelFileError, build_model, load_model_file
from .semigroup import SemigroupModel, random_density

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3, 4
SCHEMA = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def round12(x):
    """Round floats (recursively) to 12 significant digits."""
    if isinstance(x, float):
        if not math.isfinite(x):
            raise NumericalError(f"non-finite value {x} in report")
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round12(v) for v in x]
    if isinstance(x, np.generic):
        return round12(x.item())
    return x


def build_report(model: SemigroupModel, echo: dict, args, curvature: Optional[dict]) -> dict:
    t0 = time.perf_counter()
    cert = None
    if curvature is not None and curvature.get("kind", "assumed") == "assumed":
        cert = C.CurvatureCertificate("assumed", float(curvature["lambda"]))
    res = C.analyze_model(
        model,
        tcb_method=args.tcb,
        search_starts=args.search_starts,
        seed=args.seed,
        cert=cert,
        max_iters=args.max_iters,
    )
    est = res.estimate
    if res.certificate is not None:
        curv = {
            "lambda": res.certificate.lam,
            "kind": res.certificate.kind,
            "verified": res.certificate.verified,
        }
    else:
        curv = {"lambda": None, "kind": "none", "verified": False}
    if res.curvature_report is not None:
        curv["check_deviation"] = res.curvature_report.max_deviation
        if res.certificate is None and model.curvature_hint is not None:
            curv["rejected_claim"] = {
                "lambda": model.curvature_hint[0],
                "kind": model.curvature_hint[1],
            }
    witness = None
    if est.witness is not None:
        witness = np.linalg.eigvalsh(est.witness).tolist()
    report = {
        "schema": SCHEMA,
        "model": {"name": model.name, "dim": model.n, "input": echo},
        "spectral_gap": res.spectral_gap,
        "fixed_point_dim": res.fixed_point_dim,
        "cb_index": {"value": res.cb_index, "exact": res.cb_index_exact},
        "t_cb": {"value": res.tcb, "method": res.tcb_method},
        "curvature": curv,
        "mlsi": {
            "lower_bound": est.lower_bound,
            "route": est.route,
            "candidates": est.candidates,
            "upper_bound": est.upper_bound,
            "witness_spectrum": witness,
        },
        "search": {"starts": args.search_starts, "seed": args.seed},
    }
    if args.timings:
        report["timings"] = {"total_seconds": time.perf_counter() - t0}
    return round12(report)


def format_text(d: dict, indent: int = 0) -> str:
    """Render a report dict as indented ``key: value`` lines."""
    lines = []
    pad = "  " * indent
    for k, v in d.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(format_text(v, indent + 1))
        elif isinstance(v, list):
            lines.append(f"{pad}{k}: " + ", ".join(_fmt(x) for x in v))
        else:
            lines.append(f"{pad}{k}: {_fmt(v)}")
    return "\n".join(line for line in lines if line)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if v is None:
        return "-"
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def _load(path):
    mf = load_model_file(path)
    return mf, build_model(mf)


def cmd_analyze(args) -> int:
    mf, model = _load(args.model)
    report = build_report(model, mf.echo(), args, mf.curvature)
    if args.format == "text":
        print(format_text(report))
    else:
        print(json.dumps(report, indent=2))
    return EXIT_OK


def _read_rho(path: str, n: int) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ModelFileError(f"cannot read density file: {exc}") from exc
    try:
        a = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFileError("density must be a numeric matrix") from exc
    if a.shape == (n, n, 2):
        a = a[..., 0] + 1j * a[..., 1]
    if a.shape != (n, n):
        raise ModelFileError(f"density must be {n}x{n}")
    return check_density(np.asarray(a, dtype=complex))


def decay_state(model: SemigroupModel, kind: str, seed: int, path: Optional[str] = None):
    """Initial state for ``decay``: random, a search witness, or read from a file."""
    if kind == "file":
        if not path:
            raise UsageError("--rho file needs --rho-file PATH")
        return _read_rho(path, model.n)
    if kind == "random":
        return random_density(model.space, np.random.default_rng(seed))
    if model.name == "depolarizing" and model.fixed_algebra.dim == 1 and model.n >= 2:
        n = model.n
        rest = (n - 1.5) / (n - 1)
        return np.diag([1.5] + [rest] * (n - 1)).astype(complex)
    up = C.optimal_mlsi_upper(model, n_starts=2, seed=seed, max_iters=1000)
    if up.witness is None:
        return random_density(model.space, np.random.default_rng(seed))
    return up.witness


def cmd_decay(args) -> int:
    if not args.tmax > 0:
        raise UsageError("--tmax must be positive")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    _, model = _load(args.model)
    rho = decay_state(model, args.rho, args.seed, args.rho_file)
    traj = decay_trajectory(model, rho, np.linspace(0.0, args.tmax, args.steps))
    text = traj.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def torus_report(d: int, tol: float) -> dict:
    t = C.torus_tcb(d, tol)
    lo, hi = C.torus_bracket(d)
    return round12(
        {
            "schema": SCHEMA,
            "dim": d,
            "t_cb": t,
            "bracket": [lo, hi],
            "clsi": 1.0 / (4.0 * t),
            "clsi_from_bracket": 1.0 / (4.0 * hi),
            "dimension_free_floor": C.TORUS_FLOOR,
            "tol": tol,
        }
    )


def cmd_torus(args) -> int:
    if args.dim < 1:
        raise UsageError("--dim must be at least 1")
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    rep = torus_report(args.dim, args.tol)
    if args.format == "json":
        print(json.dumps(rep, indent=2))
    else:
        print(format_text(rep))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.filter, args.perturb)
    if not results:
        raise UsageError(f"no checks match filter {args.filter!r}")
    if args.format == "json":
        print(json.dumps(round12([r.row() for r in results]), indent=2))
    else:
        print(f"{'status':6}  {'id':26} {'rel':3} {'expected':>18} {'computed':>18} {'tol':>8}  locus")
        for r in results:
            c = r.check
            status = "PASS" if r.passed else "FAIL"
            print(
                f"{status:6}  {c.id:26} {c.relation:3} {c.expected:18.12g} "
                f"{r.computed:18.12g} {c.tol:8.1g}  {c.locus}"
            )
    failed = [r.check.id for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=sys.stderr)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmsemigroup", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="spectral gap, return time and MLSI estimates")
    a.add_argument("model", help="model file (YAML or JSON)")
    a.add_argument("--tcb", choices=("exact", "bound"), default="exact")
    a.add_argument("--search-starts", type=int, default=4)
    a.add_argument("--max-iters", type=int, default=2000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--timings", action="store_true", help="include wall-clock timings")
    fmt = a.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--text", dest="format", action="store_const", const="text")
    a.set_defaults(format="json", func=cmd_analyze)

    d = sub.add_parser("decay", help="relative entropy and Fisher information along T_t rho")
    d.add_argument("model")
    d.add_argument("--rho", choices=("random", "file", "witness"), default="random")
    d.add_argument("--rho-file")
    d.add_argument("--tmax", type=float, default=5.0)
    d.add_argument("--steps", type=int, default=50)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decay)

    t = sub.add_parser("torus", help="heat semigroup on the d-torus")
    t.add_argument("--dim", type=int, default=1)
    t.add_argument("--tol", type=float, default=C.TCB_TOL)
    fmt = t.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--text", dest="format", action="store_const", const="text")
    t.set_defaults(format="text", func=cmd_torus)

    v = sub.add_parser("verify-paper", help="run the golden-value checks")
    v.add_argument("--filter", help="only checks whose id or group contains this string")
    v.add_argument("--perturb", help=argparse.SUPPRESS)
    v.add_argument("--json", dest="format", action="store_const", const="json", default="text")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ModelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, QmsError, np.linalg.LinAlgError) as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
