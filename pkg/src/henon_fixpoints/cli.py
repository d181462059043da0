"""Command-line interface.

Every command reads a composition file (JSON; see README), runs one library
operation and writes a JSON report whose ``operation`` and ``options`` fields
echo exactly what was run. Exit codes: 0 success, 2 invalid input, 1 internal
error or failed certificate.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import threading
import time
from pathlib import Path

import numpy as np

from .coefficients import parse_exact
from .dynamics import (
    EscapeOptions,
    SliceSpec,
    backward_filtration_radius,
    filtration_radius,
    green_minus,
    green_plus,
    in_k_minus,
    in_k_plus,
    render_slice,
    write_csv,
    write_pgm,
)
from .henon import (
    CompositionError,
    HenonComposition,
    composition_from_dict,
    composition_to_dict,
    default_lambda,
    fixed_point_system,
    random_composition,
    rotate,
    validate_composition,
)
from .ideals import (
    NotGroebnerError,
    decomposition_verify,
    phi_membership,
    random_h,
    shifted_phi_membership,
    verify_groebner_system,
)
from .poly import Cancelled, CancelToken
from .solver import SolverError, check_shared_multipliers, solve_fixed_points

EXIT_OK, EXIT_FAILURE, EXIT_INVALID = 0, 1, 2
DEFAULT_SEED = 20240101


class InputError(Exception):
    """Bad user input: reported with exit code 2."""


class CheckFailed(Exception):
    """A certificate or scan came out negative: exit code 1, report still written."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# --------------------------------------------------------------------------- helpers


def _load(path) -> HenonComposition:
    if path is None:
        raise InputError("--input is required for this command")
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{p}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return composition_from_dict(data)
    except CompositionError as exc:
        raise InputError(f"{p}: {exc}") from None


def _composition(args) -> HenonComposition:
    comp = _load(args.input)
    if args.rotate:
        if not 0 <= args.rotate < comp.n:
            raise InputError(f"--rotate must lie in [0, {comp.n})")
        comp = rotate(comp, args.rotate)
    return comp


def _exact_arg(value, name):
    if value is None:
        return None
    try:
        return parse_exact(_split_complex(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"{name}: {exc}") from None


def _split_complex(text: str):
    """``"a/b"`` or ``"a/b,c/d"`` (real, imaginary)."""
    parts = [t.strip() for t in text.split(",")]
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return parts
    raise ValueError(f"expected 're' or 're,im', got {text!r}")


def _complex_arg(text: str, name: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise InputError(f"{name}: cannot parse complex number {text!r}") from None


def _cz(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _warnings(comp) -> list:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return validate_composition(comp)


def _cancel_token(args) -> CancelToken | None:
    if not args.timeout:
        return None
    token = CancelToken()
    timer = threading.Timer(args.timeout, token.cancel)
    timer.daemon = True
    timer.start()
    return token


# --------------------------------------------------------------------------- commands


def cmd_system(args) -> dict:
    comp = _composition(args)
    return {
        "operation": "fixed_point_system",
        "options": {"rotate": args.rotate},
        "n": comp.n,
        "degree": comp.degree,
        "polynomials": [phi.to_text() for phi in fixed_point_system(comp)],
        "warnings": _warnings(comp),
    }


def cmd_groebner(args) -> dict:
    comp = _composition(args)
    report = verify_groebner_system(comp, _cancel_token(args), strict=False)
    out = {
        "operation": "verify_groebner_system",
        "options": {"rotate": args.rotate},
        "is_groebner": report.is_groebner,
        "pairs_checked": report.pairs_checked,
        "failing_pair": list(report.failing_pair) if report.failing_pair else None,
        "witness_remainder": report.witness_remainder.to_text() if report.witness_remainder else None,
    }
    if not report.is_groebner:
        raise CheckFailed("fixed-point system is not a Gröbner basis", out)
    return out


def cmd_phi_check(args) -> dict:
    comp = _composition(args)
    lam = _exact_arg(args.lam, "--lambda")
    lam = default_lambda(comp) if lam is None else lam
    report = phi_membership(comp, lam, _cancel_token(args))
    return {
        "operation": "phi_membership",
        "options": {"lambda": str(lam), "rotate": args.rotate},
        "warnings": _warnings(comp),
        **report.to_dict(),
    }


def cmd_shifted_phi_check(args) -> dict:
    comp = _composition(args)
    lam = _exact_arg(args.lam, "--lambda")
    lam = default_lambda(comp) if lam is None else lam
    alpha = _exact_arg(args.alpha, "--alpha")
    report = shifted_phi_membership(comp, lam, alpha, _cancel_token(args))
    return {
        "operation": "shifted_phi_membership",
        "options": {"lambda": str(lam), "alpha": str(alpha), "rotate": args.rotate},
        "warnings": _warnings(comp),
        **report.to_dict(),
    }


def _parse_index_list(text: str, name: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated integers, got {text!r}") from None


def cmd_decomposition(args) -> dict:
    comp = _composition(args)
    J = _parse_index_list(args.J, "--J") if args.J else list(range(1, comp.n + 1))
    alpha = _exact_arg(args.alpha, "--alpha")
    if args.h and args.random_h:
        raise InputError("--h and --random-h are mutually exclusive")
    if args.h:
        try:
            raw = json.loads(args.h)
        except json.JSONDecodeError as exc:
            raise InputError(f"--h: malformed JSON at column {exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise InputError("--h must be a JSON object mapping '1,2' style subsets to coefficients")
        h = {tuple(_parse_index_list(k, "--h")): v for k, v in raw.items()}
    elif args.random_h:
        h = random_h(np.random.default_rng(args.seed), J)
    else:
        h = {}
    try:
        report = decomposition_verify(comp, J, args.j, alpha, h)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {
        "operation": "decomposition_verify",
        "options": {
            "J": list(report.J),
            "j": args.j,
            "alpha": str(alpha),
            "h": {",".join(map(str, L)): str(parse_exact(c)) for L, c in sorted(h.items())},
            "rotate": args.rotate,
        },
        **report.to_dict(),
    }
    if not (report.identity_holds and report.leading_match):
        raise CheckFailed("decomposition identity failed", out)
    return out


def _solver_options(args) -> dict:
    return {
        "tolerance": args.tolerance,
        "cluster_radius": args.cluster_radius,
        "seed": args.seed,
    }


def cmd_fixpoints(args) -> dict:
    comp = _composition(args)
    opts = _solver_options(args)
    records = solve_fixed_points(comp, **opts)
    shared = check_shared_multipliers(
        comp, args.multiplier_tolerance, records=None if comp.n == 1 else records, **opts
    )
    return {
        "operation": "solve_fixed_points",
        "options": {**opts, "multiplier_tolerance": args.multiplier_tolerance, "rotate": args.rotate},
        "degree": comp.degree,
        "jacobian": _cz(comp.jacobian),
        "total_multiplicity": sum(r.multiplicity for r in records),
        "records": [r.to_dict() for r in records],
        "shared_multipliers": {"operation": "check_shared_multipliers", **shared.to_dict()},
    }


def _scan_one(comp: HenonComposition, tol: float, opts: dict) -> dict:
    try:
        rep = check_shared_multipliers(comp, tol, **opts)
    except SolverError as exc:
        return {"applicable": False, "reason": f"inapplicable: solver failed ({exc})", "holds": None,
                "largest_group": 0, "degree": comp.degree}
    return rep.to_dict()


def cmd_shared_multiplier_scan(args) -> dict:
    opts = _solver_options(args)
    options = {
        **opts,
        "samples": args.samples,
        "n": args.n,
        "degrees": args.degrees,
        "delta_bound": args.delta_bound,
        "multiplier_tolerance": args.multiplier_tolerance,
    }
    notes = []
    if args.input:
        comp = _composition(args)
        if comp.n == 1:
            notes.append("single factor cubed before scanning")
        comps = [comp]
        options["samples"] = 1
        options["source"] = "input"
    else:
        if args.samples < 0:
            raise InputError("--samples must be >= 0")
        if args.n < 1:
            raise InputError("--n must be >= 1")
        degrees = _parse_index_list(args.degrees, "--degrees")
        if not degrees or min(degrees) < 2:
            raise InputError("--degrees needs integers >= 2")
        if not 0 < args.delta_bound <= 1:
            raise InputError("--delta-bound must lie in (0, 1]")
        per_factor = args.delta_bound ** (1.0 / args.n)
        children = np.random.SeedSequence(args.seed).spawn(args.samples)
        comps = [
            random_composition(np.random.default_rng(s), args.n, degrees, delta_bound=per_factor)
            for s in children
        ]
        options["source"] = "random"
    if args.jobs != 1 and len(comps) > 1:
        from joblib import Parallel, delayed

        verdicts = Parallel(n_jobs=args.jobs)(
            delayed(_scan_one)(c, args.multiplier_tolerance, opts) for c in comps
        )
    else:
        verdicts = [_scan_one(c, args.multiplier_tolerance, opts) for c in comps]
    violations = [k for k, v in enumerate(verdicts) if v.get("holds") is False]
    inapplicable = [k for k, v in enumerate(verdicts) if not v.get("applicable")]
    out = {
        "operation": "check_shared_multipliers",
        "options": options,
        "notes": notes,
        "samples": [{"index": k, **v} for k, v in enumerate(verdicts)],
        "violations": len(violations),
        "violating_samples": violations,
        "inapplicable": len(inapplicable),
        "max_group_size": max((v.get("largest_group", 0) for v in verdicts), default=0),
    }
    if violations:
        raise CheckFailed(f"{len(violations)} sample(s) violate the multiplier-group bound", out)
    return out


def cmd_green(args) -> dict:
    comp = _composition(args).to_float()
    point = (_complex_arg(args.x, "--x"), _complex_arg(args.y, "--y"))
    opts = EscapeOptions(args.max_iterations, args.escape_radius, args.green_tolerance)
    try:
        opts.radius_for(comp)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    plus, minus = in_k_plus(comp, point, opts), in_k_minus(comp, point, opts)
    return {
        "operation": "green_plus/green_minus",
        "options": {
            "max_iterations": opts.max_iterations,
            "escape_radius": opts.escape_radius,
            "tolerance": opts.tolerance,
            "rotate": args.rotate,
        },
        "point": [_cz(point[0]), _cz(point[1])],
        "filtration_radius": filtration_radius(comp),
        "backward_filtration_radius": backward_filtration_radius(comp),
        "green_plus": green_plus(comp, point, opts),
        "green_minus": green_minus(comp, point, opts),
        "forward": plus.__dict__,
        "backward": minus.__dict__,
    }


def cmd_render(args) -> dict:
    comp = _composition(args).to_float()
    if args.slice:
        try:
            spec = SliceSpec.from_dict(json.loads(Path(args.slice).read_text(encoding="utf-8")))
        except OSError as exc:
            raise InputError(f"{args.slice}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.slice}: malformed JSON at line {exc.lineno}, column {exc.colno}") from None
        except (ValueError, TypeError, KeyError) as exc:
            raise InputError(f"{args.slice}: {exc}") from None
    else:
        try:
            spec = SliceSpec(
                origin=(_complex_arg(args.origin_x, "--origin-x"), _complex_arg(args.origin_y, "--origin-y")),
                axis_u=tuple(_complex_arg(t, "--axis-u") for t in args.axis_u.split(",")),
                axis_v=tuple(_complex_arg(t, "--axis-v") for t in args.axis_v.split(",")),
                extent=tuple(float(t) for t in args.extent.split(",")),
                resolution=(args.width, args.height),
            )
        except ValueError as exc:
            raise InputError(str(exc)) from None
    opts = EscapeOptions(args.max_iterations, args.escape_radius, args.green_tolerance)
    values = render_slice(comp, spec, opts, n_jobs=args.jobs)
    if args.out is None:
        raise InputError("--out is required for render")
    prefix = Path(args.out)
    pgm, csv = prefix.with_suffix(".pgm"), prefix.with_suffix(".csv")
    write_pgm(values, pgm)
    write_csv(values, csv)
    return {
        "operation": "render_slice",
        "options": {
            "slice": spec.to_dict(),
            "max_iterations": opts.max_iterations,
            "escape_radius": opts.escape_radius,
            "tolerance": opts.tolerance,
            "rotate": args.rotate,
        },
        "pgm": str(pgm),
        "csv": str(csv),
        "zero_pixels": int(np.count_nonzero(values == 0)),
        "max_value": float(values.max()),
    }


def cmd_sample(args) -> dict:
    """Write a random exact composition (handy for trying the other commands)."""
    degrees = _parse_index_list(args.degrees, "--degrees")
    comp = random_composition(np.random.default_rng(args.seed), args.n, degrees,
                              delta_bound=args.delta_bound ** (1.0 / args.n))
    return {"operation": "random_composition", "options": {"n": args.n, "degrees": degrees},
            **composition_to_dict(comp)}


COMMANDS = {
    "system": cmd_system,
    "groebner": cmd_groebner,
    "phi-check": cmd_phi_check,
    "shifted-phi-check": cmd_shifted_phi_check,
    "lemma52": cmd_decomposition,
    "fixpoints": cmd_fixpoints,
    "prop51-scan": cmd_shared_multiplier_scan,
    "green": cmd_green,
    "render": cmd_render,
    "sample": cmd_sample,
}


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", help="composition JSON file")
    common.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--rotate", type=int, default=0, help="cyclically rotate the factors first")
    common.add_argument("--timeout", type=float, default=None,
                        help="cancel exact divisions after this many seconds")
    common.add_argument("--timing", action="store_true", help="print elapsed time to stderr")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tolerance", type=float, default=1e-8)
    solver.add_argument("--cluster-radius", type=float, default=1e-6)
    solver.add_argument("--multiplier-tolerance", type=float, default=1e-6)

    escape = argparse.ArgumentParser(add_help=False)
    escape.add_argument("--max-iterations", type=int, default=200)
    escape.add_argument("--escape-radius", type=float, default=None)
    escape.add_argument("--green-tolerance", type=float, default=1e-10)

    parser = argparse.ArgumentParser(prog="henon-fixpoints", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("system", parents=[common], help="print the fixed-point system")
    sub.add_parser("groebner", parents=[common], help="verify the Gröbner basis property")
    p = sub.add_parser("phi-check", parents=[common], help="non-membership of the multiplier polynomial")
    p.add_argument("--lambda", dest="lam", help="multiplier (default d); 're' or 're,im'")
    p = sub.add_parser("shifted-phi-check", parents=[common], help="non-membership of (y1 - alpha) Phi")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--alpha", default="0")
    p = sub.add_parser("lemma52", parents=[common], help="verify the division identity for (y_j - alpha)((p')^J + h)")
    p.add_argument("--J", help="comma-separated index set (default 1..n)")
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--alpha", default="0")
    p.add_argument("--h", help='JSON object such as {"1,2": "3/2"}')
    p.add_argument("--random-h", action="store_true", help="draw h at random from --seed")
    sub.add_parser("fixpoints", parents=[common, solver], help="solve and classify all fixed points")
    p = sub.add_parser("prop51-scan", parents=[common, solver], help="scan random compositions for shared multipliers")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--degrees", default="2", help="degree menu, e.g. '2,3'")
    p.add_argument("--delta-bound", type=float, default=1.0, help="sample with |delta| < bound")
    p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("green", parents=[common, escape], help="Green functions at a point")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p = sub.add_parser("render", parents=[common, escape], help="render G+ on a real 2-D slice")
    p.add_argument("--slice", help="slice JSON file (overrides the flags below)")
    p.add_argument("--origin-x", default="0")
    p.add_argument("--origin-y", default="0")
    p.add_argument("--axis-u", default="0,1")
    p.add_argument("--axis-v", default="0,1j")
    p.add_argument("--extent", default="-2,2,-2,2")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--out", help="output prefix; writes PREFIX.pgm and PREFIX.csv")
    p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("sample", parents=[common], help="write a random exact composition")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--degrees", default="2")
    p.add_argument("--delta-bound", type=float, default=1.0)
    return parser


def _emit(report: dict, args) -> None:
    report = {"command": args.command, "seed": args.seed, **report}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


_NEGATIVE_VALUE = re.compile(r"^-[0-9.]")


def _attach_negative_values(argv: list) -> list:
    """Rewrite ``--alpha -1/2`` as ``--alpha=-1/2``.

    argparse only recognises plain negative decimals as values; fractions and
    complex literals such as ``-1/2`` or ``-2+1i`` would be taken for flags.
    """
    out = []
    for tok in argv:
        if out and _NEGATIVE_VALUE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_attach_negative_values(argv))
    start = time.perf_counter()
    try:
        report = COMMANDS[args.command](args)
        _emit(report, args)
        code = EXIT_OK
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INVALID
    except CheckFailed as exc:
        _emit(exc.report, args)
        print(f"check failed: {exc}", file=sys.stderr)
        code = EXIT_FAILURE
    except Cancelled:
        print("error: cancelled after --timeout", file=sys.stderr)
        code = EXIT_FAILURE
    except (NotGroebnerError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_FAILURE
    except OSError as exc:
        print(f"error: {getattr(exc, 'filename', '') or ''}: {exc}", file=sys.stderr)
        code = EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_FAILURE
    if args.timing:
        print(f"elapsed: {time.perf_counter() - start:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
