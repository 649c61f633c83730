"""Command-line driver.

Every command prints one report (JSON by default).  Exit status: 0 for a
pass or a plain value, 1 for a failure carrying a witness, 2 for usage or
input errors.  ``recheck`` re-verifies the witness in a saved report.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from dataclasses import dataclass, field

from .exact_matrix import matrix_from_json, matrix_to_json, random_invertible
from .free_algebra import (
    NotMultilinearError,
    PolySyntaxError,
    as_multilinear,
    classify,
    format_poly,
    parse_poly,
    MultilinearPoly,
)
from .group_lab import WitnessError, build_theta, membership_report, theta_breaks_zero_set
from .pi_lab import (
    central_solutions,
    evaluate,
    find_nonvanishing_unit_tuple,
    nonidentity_witness,
    units_to_tuple,
)
from .preservers import (
    MatrixLinearMap,
    SamplingError,
    StandardFormParams,
    check_preserves_zeros,
    decompose_standard,
    random_standard_params,
    standard_map,
    standard_rep,
    transpose_map,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    inputs: dict
    verdict: str
    seed: int
    result: dict = field(default_factory=dict)
    witness: object = None
    elapsed_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "result": self.result,
            "witness": self.witness,
            "seed": self.seed,
            "elapsed_ms": self.elapsed_ms,
        }

    @property
    def exit_code(self) -> int:
        return {"pass": EXIT_OK, "value": EXIT_OK, "fail": EXIT_FAIL}.get(self.verdict, EXIT_USAGE)


# ---------------------------------------------------------------------------
# input helpers


def read_poly(arg: str) -> MultilinearPoly:
    text = arg
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as fh:
            text = fh.read().strip()
    try:
        return as_multilinear(parse_poly(text))
    except PolySyntaxError as exc:
        raise InputError(str(exc)) from None
    except NotMultilinearError as exc:
        raise InputError(f"not a multilinear polynomial: {exc}") from None


def read_map(path: str) -> MatrixLinearMap:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read map file {path}: {exc}") from None
    try:
        if isinstance(obj, dict) and "alpha" in obj:
            return standard_map(StandardFormParams.from_json(obj))
        return MatrixLinearMap.from_json(obj)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad map file {path}: {exc}") from None


def tuple_to_json(t) -> list:
    return [matrix_to_json(a) for a in t]


def tuple_from_json(obj) -> tuple:
    return tuple(matrix_from_json(m) for m in obj)


def _need_n(args) -> int:
    if args.n is None:
        raise InputError("--n is required")
    if args.n < 1:
        raise InputError("--n must be positive")
    return args.n


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> RunReport:
    f = read_poly(args.poly)
    if f.is_zero():
        raise InputError("cannot classify the zero polynomial")
    rep = classify(f)
    return RunReport("classify", {"poly": format_poly(f)}, "value", args.seed,
                     result=rep.to_dict())


def cmd_identity_test(args) -> RunReport:
    f = read_poly(args.poly)
    n = _need_n(args)
    inputs = {"poly": format_poly(f), "n": n}
    hit = find_nonvanishing_unit_tuple(f, n, workers=None)
    if hit is None:
        return RunReport("identity-test", inputs, "pass", args.seed, result={"is_identity": True})
    if f.degree < 2 * n:
        t = nonidentity_witness(f, n)
        kind = "staircase"
    else:
        t = units_to_tuple(hit, n)
        kind = "matrix-units"
    value = evaluate(f, t)
    return RunReport("identity-test", inputs, "fail", args.seed,
                     result={"is_identity": False, "witness_kind": kind,
                             "value": matrix_to_json(value)},
                     witness={"tuple": tuple_to_json(t)})


def cmd_preserve_check(args) -> RunReport:
    f = read_poly(args.poly)
    if args.map is None:
        raise InputError("--map is required")
    L = read_map(args.map)
    if f.degree < 1:
        raise InputError("polynomial must have degree >= 1")
    inputs = {"poly": format_poly(f), "map": L.to_json(), "trials": args.trials,
              "inverse": bool(args.inverse)}
    rng = random.Random(args.seed)
    try:
        v = check_preserves_zeros(f, L, args.trials, rng, include_inverse=args.inverse)
    except SamplingError as exc:
        return RunReport("preserve-check", inputs, "sampling-exhausted", args.seed,
                         result={"error": str(exc)})
    if v.passed:
        return RunReport("preserve-check", inputs, "pass", args.seed,
                         result={"trials_run": v.trials_run})
    t, img = v.counterexample
    return RunReport("preserve-check", inputs, "fail", args.seed,
                     result={"trials_run": v.trials_run},
                     witness={"tuple": tuple_to_json(t), "image_value": matrix_to_json(img)})


def cmd_decompose(args) -> RunReport:
    if args.map is None:
        raise InputError("--map is required")
    L = read_map(args.map)
    if not L.is_invertible():
        raise InputError("map is singular")
    inputs = {"map": L.to_json()}
    p = decompose_standard(L)
    if p is None:
        return RunReport("decompose", inputs, "fail", args.seed,
                         result={"standard_form": False})
    exact = standard_rep(p) == L.rep
    return RunReport("decompose", inputs, "pass" if exact else "fail", args.seed,
                     result={"standard_form": True, "roundtrip_exact": exact},
                     witness={"params": p.to_json()})


def cmd_witness_theta(args) -> RunReport:
    f = read_poly(args.poly)
    n = _need_n(args)
    try:
        t, tt = theta_breaks_zero_set(f, n)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    except WitnessError as exc:  # pragma: no cover - contradicts the construction
        return RunReport("witness-theta", {"poly": format_poly(f), "n": n}, "fail", args.seed,
                         result={"error": str(exc)})
    theta = build_theta(n)
    mem = membership_report(theta)
    return RunReport(
        "witness-theta", {"poly": format_poly(f), "n": n}, "pass", args.seed,
        result={"f_t": matrix_to_json(evaluate(f, t)),
                "f_theta_t": matrix_to_json(evaluate(f, tt)),
                "theta_membership": mem.to_dict()},
        witness={"tuple": tuple_to_json(t), "theta_tuple": tuple_to_json(tt)})


def cmd_lemma23(args) -> RunReport:
    f = read_poly(args.poly)
    n = _need_n(args)
    basis = central_solutions(f, n, seed=args.seed)
    scalar_only = all(b.is_scalar() for b in basis)
    dim = len(basis)
    label = "scalar-only" if scalar_only else f"larger space (dimension {dim})"
    return RunReport("lemma23", {"poly": format_poly(f), "n": n}, "value", args.seed,
                     result={"dimension": dim, "verdict": label, "scalar_only": scalar_only},
                     witness={"basis": [matrix_to_json(b) for b in basis]})


def cmd_make_map(args) -> RunReport:
    n = _need_n(args)
    rng = random.Random(args.seed)
    kind = args.kind
    params = None
    if kind == "identity":
        L = MatrixLinearMap.identity(n)
    elif kind == "transpose":
        L = transpose_map(n)
    elif kind == "theta":
        L = build_theta(n)
    elif kind == "scalar":
        L = MatrixLinearMap.identity(n).scaled(2)
    elif kind in ("standard", "conjugation"):
        params = random_standard_params(n, rng, transpose=False if kind == "conjugation" else None,
                                        central=kind == "standard")
        L = standard_map(params)
    elif kind == "generic":
        L = MatrixLinearMap(n, random_invertible(n * n, rng))
    else:  # pragma: no cover - argparse restricts choices
        raise InputError(f"unknown kind {kind}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(L.to_json(), fh, indent=1)
            fh.write("\n")
    return RunReport("make-map", {"kind": kind, "n": n}, "value", args.seed,
                     result={"map": L.to_json(),
                             "params": params.to_json() if params else None})


# ---------------------------------------------------------------------------
# recheck


def _recheck(report: dict) -> tuple[bool, str]:
    cmd = report.get("command")
    inputs = report.get("inputs", {})
    verdict = report.get("verdict")
    witness = report.get("witness") or {}
    result = report.get("result") or {}
    if cmd == "classify":
        f = as_multilinear(inputs["poly"])
        ok = classify(f).to_dict() == result
        return ok, "classification recomputed"
    if cmd == "identity-test":
        f = as_multilinear(inputs["poly"])
        n = int(inputs["n"])
        if verdict == "pass":
            return find_nonvanishing_unit_tuple(f, n) is None, "identity re-enumerated"
        t = tuple_from_json(witness["tuple"])
        val = evaluate(f, t)
        ok = (not val.is_zero()) and val == matrix_from_json(result["value"])
        return ok, "witness value re-evaluated"
    if cmd == "preserve-check":
        f = as_multilinear(inputs["poly"])
        L = MatrixLinearMap.from_json(inputs["map"])
        if verdict != "fail":
            return True, "nothing to recheck for a passing sampled verdict"
        t = tuple_from_json(witness["tuple"])
        img = evaluate(f, [L(a) for a in t])
        if inputs.get("inverse") and img.is_zero():
            img = evaluate(f, [L.inverse()(a) for a in t])
        ok = evaluate(f, t).is_zero() and not img.is_zero() and \
            img == matrix_from_json(witness["image_value"])
        return ok, "counterexample re-evaluated"
    if cmd == "decompose":
        L = MatrixLinearMap.from_json(inputs["map"])
        if verdict == "fail":
            return decompose_standard(L) is None, "decomposition re-attempted"
        p = StandardFormParams.from_json(witness["params"])
        return standard_rep(p) == L.rep, "params reassembled"
    if cmd == "witness-theta":
        f = as_multilinear(inputs["poly"])
        n = int(inputs["n"])
        theta = build_theta(n)
        t = tuple_from_json(witness["tuple"])
        tt = tuple_from_json(witness["theta_tuple"])
        ok = tuple(theta(a) for a in t) == tt and not evaluate(f, t).is_zero() \
            and evaluate(f, tt).is_zero()
        return ok, "staircase and theta image re-evaluated"
    if cmd == "lemma23":
        f = as_multilinear(inputs["poly"])
        n = int(inputs["n"])
        basis = [matrix_from_json(b) for b in witness["basis"]]
        again = central_solutions(f, n, seed=int(report.get("seed", 0)))
        return again == basis, "central solutions recomputed"
    if cmd == "make-map":
        return True, "nothing to recheck"
    raise InputError(f"don't know how to recheck command {cmd!r}")


def cmd_recheck(args) -> RunReport:
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read report {args.report}: {exc}") from None
    try:
        ok, what = _recheck(report)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed report: {exc}") from None
    return RunReport("recheck", {"report_command": report.get("command"),
                                 "report_verdict": report.get("verdict")},
                     "pass" if ok else "fail", args.seed, result={"checked": what})


# ---------------------------------------------------------------------------


COMMANDS = {
    "classify": cmd_classify,
    "identity-test": cmd_identity_test,
    "preserve-check": cmd_preserve_check,
    "decompose": cmd_decompose,
    "witness-theta": cmd_witness_theta,
    "lemma23": cmd_lemma23,
    "central-solutions": cmd_lemma23,
    "make-map": cmd_make_map,
    "recheck": cmd_recheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="preserver-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, poly=False, n=False, map_=False):
        if poly:
            p.add_argument("--poly", required=True, help="polynomial text or a file holding it")
        if n:
            p.add_argument("--n", type=int, help="matrix size")
        if map_:
            p.add_argument("--map", help="map JSON (matrix or standard-form params)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("json", "text"), default="json")

    common(sub.add_parser("classify", help="conditions (A)/(B)/(C) and Lie-generation"), poly=True)
    common(sub.add_parser("identity-test", help="is the polynomial an identity of M_n"),
           poly=True, n=True)
    p = sub.add_parser("preserve-check", help="sample zeros and test their images")
    common(p, poly=True, map_=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--inverse", action="store_true", help="also check the inverse map")
    common(sub.add_parser("decompose", help="recover standard-form parameters"), map_=True)
    common(sub.add_parser("witness-theta", help="staircase tuple separated by theta"),
           poly=True, n=True)
    common(sub.add_parser("lemma23", aliases=["central-solutions"],
                          help="matrices c killing f in every slot"),
           poly=True, n=True)
    p = sub.add_parser("make-map", help="write an example map file")
    common(p, n=True)
    p.add_argument("--kind", required=True, choices=(
        "identity", "transpose", "theta", "scalar", "standard", "conjugation", "generic"))
    p.add_argument("--out")
    p = sub.add_parser("recheck", help="re-verify a saved report")
    p.add_argument("report")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "text"), default="json")
    return parser


def render(report: RunReport, fmt: str) -> str:
    d = report.to_dict()
    if fmt == "json":
        return json.dumps(d, indent=2, sort_keys=True)
    lines = [f"command: {d['command']}", f"verdict: {d['verdict']}", f"seed: {d['seed']}"]
    for k, v in sorted(d["inputs"].items()):
        if k != "map":
            lines.append(f"input {k}: {v}")
    for k, v in sorted(d["result"].items()):
        lines.append(f"{k}: {json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v}")
    if d["witness"] is not None:
        lines.append("witness: " + json.dumps(d["witness"], sort_keys=True))
    return "\n".join(lines)


def run(argv=None) -> tuple[RunReport | None, int, str]:
    """Parse and execute; returns (report, exit code, rendered output)."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--recheck":
        argv[0] = "recheck"
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return None, EXIT_USAGE if exc.code else EXIT_OK, ""
    start = time.perf_counter()
    try:
        report = COMMANDS[args.command](args)
    except InputError as exc:
        report = RunReport(args.command, {}, "error", getattr(args, "seed", 0),
                           result={"error": str(exc)})
    report.elapsed_ms = int((time.perf_counter() - start) * 1000)
    return report, report.exit_code, render(report, args.format)


def main(argv=None) -> int:
    report, code, text = run(argv)
    if text:
        print(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
