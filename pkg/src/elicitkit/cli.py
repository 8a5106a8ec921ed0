"""Command-line front end.

    elicitkit eval    --data FILE --property JSON
    elicitkit elicit  --data FILE --loss JSON [--erm-config JSON] [--compare]
    elicitkit check   {convexity,concavity,obstruction,rank} FIXTURE

JSON arguments may be given inline or as a path to a ``.json`` file.  Reports
go to stdout (and ``--out``).  Exit codes: 0 success, 1 failed check, 2 bad
input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import bayes_risk_concavity_check, level_set_convexity_check
from .distributions import Interval, discretized_normal, distribution_from_dict, load_distribution
from .erm import erm_config_from_json, match_targets, minimize
from .errors import ElicitError, FixtureExpectationMismatch, ParseError, UnsupportedSpec
from .identification import (
    PAIRS,
    central_moment_identification,
    feature_mean_identification,
    identification_rank,
    joint_obstruction_diagnostic,
    stack_identifications,
    standard_identification,
)
from .jsonfmt import dumps
from .losses import loss_from_json
from .properties import ModalMass, property_from_json

SCHEMA = 1
COMPARE_TOL = 1e-4
EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT = 0, 1, 2
NEGATABLE_KINDS = ("ExpectedShortfall", "SpectralRisk")
NEGATABLE_LOSSES = ("es_joint", "spectral")


def _json_arg(text: str, what: str):
    path = Path(text)
    if text.endswith(".json") and path.exists():
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: invalid JSON: {exc}") from None


def _digest(path: str) -> str:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _value_json(val):
    if isinstance(val, Interval):
        return val.as_list()
    if isinstance(val, ModalMass):
        return {"mass": val.mass, "centers": [c.as_list() for c in val.centers]}
    if isinstance(val, np.ndarray):
        return val.tolist()
    return val


def _negate_component(c):
    if isinstance(c, list):
        return [-c[1], -c[0]]
    return -c


def _base_report(args, argv) -> dict:
    return {
        "schema": SCHEMA,
        "command": _echo(argv),
        "toolkit_version": __version__,
    }


def _echo(argv):
    """Command line minus the output path, which is not an input."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        if a == "--timing":
            continue
        out.append(a)
    return out


def cmd_eval(args, argv) -> tuple[dict, int]:
    spec = property_from_json(_json_arg(args.property, "--property"))
    report = _base_report(args, argv)
    report["input_digest"] = _digest(args.data)
    p = load_distribution(args.data)
    val = _value_json(spec.evaluate(p))
    if args.es_sign == "negated" and spec.kind in NEGATABLE_KINDS:
        val = -val
    report.update({"property": spec.to_json(), "oracle": val, "es_sign": args.es_sign})
    return report, EXIT_OK


def cmd_elicit(args, argv) -> tuple[dict, int]:
    loss_obj = _json_arg(args.loss, "--loss")
    loss = loss_from_json(loss_obj)
    cfg = erm_config_from_json(_json_arg(args.erm_config, "--erm-config") if args.erm_config else None)
    report = _base_report(args, argv)
    report["input_digest"] = _digest(args.data)
    p = load_distribution(args.data)
    result = minimize(loss, p, cfg)
    erm_json = result.to_json()
    report.update({"loss": loss.spec, "erm_config": cfg.to_json(), "es_sign": args.es_sign})
    code = EXIT_OK
    if args.compare:
        if loss.target is None:
            raise UnsupportedSpec(f"no oracle is available for {loss.label}")
        targets = loss.target(p)
        ok, residuals = match_targets(result.minimizers, targets, COMPARE_TOL)
        report["oracle"] = [t.to_json() for t in targets]
        report["residuals"] = residuals
        report["pass"] = ok
        report["tolerance"] = COMPARE_TOL
        code = EXIT_OK if ok else EXIT_CHECK_FAILED
    if args.es_sign == "negated" and loss_obj.get("loss") in NEGATABLE_LOSSES:
        for m in erm_json["minimizers"]:
            m[0] = _negate_component(m[0])
        for t in report.get("oracle", []):
            t[0] = _negate_component(t[0])
    report["erm"] = erm_json
    return report, code


# -- check fixtures -------------------------------------------------------------


def _family(obj) -> list:
    if isinstance(obj, dict) and "discretized_normal" in obj:
        n = int(obj.get("n", 21))
        return [discretized_normal(loc, scale, n=n) for loc, scale in obj["discretized_normal"]]
    if not isinstance(obj, list):
        raise ParseError("family must be a list of distributions or a generator object")
    return [distribution_from_dict(d) for d in obj]


def _pairs(obj) -> list:
    try:
        return [(distribution_from_dict(a), distribution_from_dict(b)) for a, b in obj]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ElicitError):
            raise
        raise ParseError("pairs must be a list of [p, q] distribution pairs") from None


def _identification(obj):
    if "stack" in obj:
        parts = [standard_identification(property_from_json(s)) for s in obj["stack"]]
        V = parts[0]
        for W in parts[1:]:
            offset = V.arity
            V = stack_identifications(V, W, range(offset), range(offset, offset + W.arity))
        return V
    if "features" in obj:
        powers = [int(k) for k in obj["features"]]
        return feature_mean_identification(
            lambda y: np.stack([np.asarray(y, dtype=float) ** k for k in powers], axis=-1), len(powers)
        )
    if "central_moment" in obj:
        return central_moment_identification(obj["central_moment"])
    raise UnsupportedSpec("identification must give one of stack, features, central_moment")


def _obstruction_pair(obj):
    name = obj.get("name")
    if name not in PAIRS:
        raise UnsupportedSpec(f"unknown identification pair {name!r}")
    params = {k: v for k, v in obj.items() if k != "name"}
    return PAIRS[name](**params)


def _run_check(mode: str, fx: dict):
    """Returns ``(observed verdict, module report dict)``."""
    if mode == "convexity":
        spec = property_from_json(fx["property"])
        rep = level_set_convexity_check(spec, _pairs(fx["pairs"]), fx.get("lambdas", [0.1 * i for i in range(1, 10)]))
        return ("passed" if rep.passed else "counterexample"), rep.to_json()
    if mode == "concavity":
        base = loss_from_json(fx["loss"])
        spec = property_from_json(fx["property"])
        rep = bayes_risk_concavity_check(
            base, spec, _pairs(fx["pairs"]), fx.get("lambdas", [0.1 * i for i in range(1, 10)]),
            fx.get("strictness", 1e-6),
        )
        return ("strict" if rep.strict_ok else "not_strict"), rep.to_json()
    if mode == "obstruction":
        Vp, V = _obstruction_pair(fx["pair"])
        rep = joint_obstruction_diagnostic(Vp, V, _family(fx["family"]), fx["r_prime"], fx["r"])
        return ("flagged" if rep.flagged else "not_flagged"), rep.to_json()
    if mode == "rank":
        V = _identification(fx["identification"])
        rank = identification_rank(V, fx["report"], _family(fx["family"]))
        return rank, {"rank": rank, "identification": V.label}
    raise UnsupportedSpec(f"unknown check mode {mode!r}")


def cmd_check(args, argv) -> tuple[dict, int]:
    report = _base_report(args, argv)
    report["input_digest"] = _digest(args.fixture)
    try:
        fx = json.loads(Path(args.fixture).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.fixture}: invalid JSON: {exc}") from None
    if not isinstance(fx, dict) or "expected" not in fx:
        raise ParseError('fixture needs an "expected" verdict')
    try:
        observed, detail = _run_check(args.mode, fx)
    except KeyError as exc:
        raise ParseError(f"fixture is missing field {exc}") from None
    expected = fx["expected"]
    report.update(
        {"mode": args.mode, "expected": expected, "observed": observed, "matches": observed == expected, "report": detail}
    )
    return report, EXIT_OK if observed == expected else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elicitkit", description="Property elicitation toolkit")
    ap.add_argument("--version", action="version", version=f"elicitkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="also write the JSON report here")
        p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical reruns)")

    e = sub.add_parser("eval", help="evaluate a property oracle on data")
    e.add_argument("--data", required=True, help="distribution .json or sample .csv")
    e.add_argument("--property", required=True, help="property spec JSON")
    e.add_argument("--es-sign", choices=("paper", "negated"), default="paper")
    common(e)

    m = sub.add_parser("elicit", help="run ERM for a loss on data")
    m.add_argument("--data", required=True)
    m.add_argument("--loss", required=True, help="loss spec JSON")
    m.add_argument("--erm-config", help="ERM config JSON")
    m.add_argument("--compare", action="store_true", help="compare against the oracle at 1e-4")
    m.add_argument("--es-sign", choices=("paper", "negated"), default="paper")
    common(m)

    c = sub.add_parser("check", help="run a diagnostic fixture")
    c.add_argument("mode", choices=("convexity", "concavity", "obstruction", "rank"))
    c.add_argument("fixture")
    common(c)
    return ap


COMMANDS = {"eval": cmd_eval, "elicit": cmd_elicit, "check": cmd_check}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args, argv)
    except FixtureExpectationMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except ElicitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - start
    text = dumps(report)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    if code == EXIT_CHECK_FAILED and args.command == "check":
        print(
            f"error: FixtureExpectationMismatch: expected {report['expected']!r}, observed {report['observed']!r}",
            file=sys.stderr,
        )
    return code


if __name__ == "__main__":
    sys.exit(main())
