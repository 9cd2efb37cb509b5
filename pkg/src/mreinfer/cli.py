"""Command-line front end.

Exit status: 0 on success, 1 on malformed input, 2 when the problem itself is
infeasible or degenerate (diagnostic on stderr, partial report on the output
where one exists).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import __version__
from .bayes import JointPrior, bayes_closed_form, bayes_via_mre
from .convergence import DEFAULT_N_LIST, convergence_experiment
from .dist import Distribution, Event, OutcomeSpace, make_distribution, tv_distance
from .errors import (
    DegenerateData,
    Infeasible,
    NotConverged,
    UnachievableSum,
    ZeroProbabilityEvent,
)
from .info import format_extended, information_gain, relative_entropy, shannon_entropy
from .maxent import indifference_prior
from .mle import MODELS, Dataset, mle_fit, simulate
from .solver import ConstraintSet, Moment, MreSolution, solve_mre

SUBCOMMANDS = ("info", "update", "maxent", "bayes", "mle", "converge")
DEFAULT_TOL = 1e-10


class InputError(Exception):
    pass


class ProblemError(Exception):
    """Infeasible or degenerate problem; ``partial`` is written if not None."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass
class RunConfig:
    subcommand: str
    input: str | None
    output: str | None
    tol: float | None
    seed: int
    format: str


# --- parsing helpers -------------------------------------------------------

def _fields(obj, name, required=(), optional=()):
    if not isinstance(obj, dict):
        raise InputError(f"{name}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise InputError(f"{name}: unknown fields {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise InputError(f"{name}: missing fields {missing}")
    return obj


def _number(x, name):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{name}: expected a number, got {x!r}")
    return float(x)


def _label_list(x, name):
    if not isinstance(x, list) or not all(isinstance(v, str) for v in x):
        raise InputError(f"{name}: expected a list of label strings")
    return x


def _distribution(obj, name) -> Distribution:
    _fields(obj, name, required=("labels", "weights"))
    labels = _label_list(obj["labels"], f"{name}.labels")
    if not isinstance(obj["weights"], list):
        raise InputError(f"{name}.weights: expected a list")
    weights = [_number(w, f"{name}.weights") for w in obj["weights"]]
    try:
        return make_distribution(OutcomeSpace(labels), weights)
    except (ValueError, KeyError) as exc:
        raise InputError(f"{name}: {exc}") from None


def _constraints(obj, space: OutcomeSpace) -> ConstraintSet:
    zeros = _label_list(obj.get("zeros", []), "zeros")
    moments = obj.get("moments", [])
    if not isinstance(moments, list):
        raise InputError("moments: expected a list")
    parsed = []
    for k, mom in enumerate(moments):
        _fields(mom, f"moments[{k}]", required=("coeffs", "target"))
        coeffs = mom["coeffs"]
        if not isinstance(coeffs, dict):
            raise InputError(f"moments[{k}].coeffs: expected an object mapping labels to numbers")
        a = np.zeros(space.n)
        for lab, val in coeffs.items():
            if lab not in space:
                raise InputError(f"moments[{k}].coeffs: unknown label {lab!r}")
            a[space.index(lab)] = _number(val, f"moments[{k}].coeffs[{lab}]")
        parsed.append(Moment(a, _number(mom["target"], f"moments[{k}].target")))
    for z in zeros:
        if z not in space:
            raise InputError(f"zeros: unknown label {z!r}")
    try:
        return ConstraintSet(space, zeros, parsed)
    except Infeasible as exc:
        raise ProblemError(str(exc), {"status": "infeasible", "diagnostic": str(exc)}) from None


def _tol(cfg: RunConfig, obj) -> float:
    if cfg.tol is not None:
        return cfg.tol
    if "tol" in obj:
        t = _number(obj["tol"], "tol")
        if not t > 0:
            raise InputError("tol must be positive")
        return t
    return DEFAULT_TOL


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return format_extended(float(x))
    return x


def _flatten(prefix, x, rows):
    if isinstance(x, dict) and set(x) == {"labels", "weights"}:
        for lab, w in zip(x["labels"], x["weights"]):
            rows.append((f"{prefix}[{lab}]", w))
    elif isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, rows)
    elif isinstance(x, list) and any(isinstance(v, (dict, list)) for v in x):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, x))


def _table(doc) -> str:
    rows: list = []
    _flatten("", doc, rows)
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {json.dumps(v, ensure_ascii=False)}" for k, v in rows)


def _render(doc, fmt, table=None) -> str:
    doc = _jsonable(doc)
    if fmt == "table":
        return table if table is not None else _table(doc)
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False)


# --- subcommands -----------------------------------------------------------

def _solution_doc(sol: MreSolution) -> dict:
    return {
        "posterior": sol.posterior.as_dict(),
        "multipliers": [float(x) for x in sol.multipliers],
        "kl": sol.achieved_kl,
        "residual": sol.kkt_residual,
        "iterations": sol.iterations,
    }


def _solve(prior, constraints, tol, echo):
    try:
        sol = solve_mre(prior, constraints, tol=tol)
    except Infeasible as exc:
        partial = dict(echo, status="infeasible", diagnostic=str(exc))
        raise ProblemError(str(exc), partial) from None
    except NotConverged as exc:
        partial = dict(echo, status="not-converged", **_solution_doc(exc.solution))
        raise ProblemError(str(exc), partial) from None
    return dict(echo, **_solution_doc(sol))


def cmd_update(cfg, obj):
    _fields(obj, "problem", required=("prior",), optional=("zeros", "moments", "tol"))
    prior = _distribution(obj["prior"], "prior")
    constraints = _constraints(obj, prior.space)
    return _solve(prior, constraints, _tol(cfg, obj), obj)


def cmd_maxent(cfg, obj):
    _fields(obj, "problem", required=("labels",), optional=("zeros", "moments", "tol"))
    space = OutcomeSpace(_label_list(obj["labels"], "labels"))
    constraints = _constraints(obj, space)
    return _solve(indifference_prior(space), constraints, _tol(cfg, obj), obj)


def cmd_bayes(cfg, obj, method):
    _fields(obj, "case", required=("joint", "hypotheses", "evidence"))
    prior = _distribution(obj["joint"], "joint")
    hyps = obj["hypotheses"]
    if not isinstance(hyps, dict):
        raise InputError("hypotheses: expected an object mapping names to joint labels")
    try:
        joint = JointPrior(prior, {h: _label_list(c, f"hypotheses.{h}") for h, c in hyps.items()})
        evidence = Event(prior.space, _label_list(obj["evidence"], "evidence"))
    except (ValueError, KeyError) as exc:
        raise InputError(str(exc)) from None
    tol = _tol(cfg, {})
    out: dict[str, Any] = {"method": method, "p_evidence": prior.prob(evidence)}
    try:
        if method in ("closed", "both"):
            out["closed"] = bayes_closed_form(joint, evidence).as_dict()
        if method in ("mre", "both"):
            out["mre"] = bayes_via_mre(joint, evidence, tol=tol).as_dict()
    except (ZeroProbabilityEvent, Infeasible, NotConverged) as exc:
        raise ProblemError(str(exc), dict(out, status="infeasible", diagnostic=str(exc))) from None
    if method == "both":
        h = joint.hypothesis_space
        out["tv_gap"] = tv_distance(Distribution(h, out["closed"]["weights"]),
                                    Distribution(h, out["mre"]["weights"]))
    return out


def _mle_model(obj):
    name = obj["model"]
    if name not in MODELS:
        raise InputError(f"model: unknown model {name!r}; known: {sorted(MODELS)}")
    labels = obj.get("labels")
    data = obj.get("data", {})
    if labels is not None:
        labels = _label_list(labels, "labels")
    elif name == "truncated_geometric":
        try:
            labels = [str(v) for v in range(1, max(int(k) for k in data) + 1)]
        except ValueError:
            raise InputError("truncated_geometric: data labels must be integers 1..m") from None
    else:
        labels = list(data)
    try:
        if name == "truncated_geometric":
            if labels != [str(v) for v in range(1, len(labels) + 1)]:
                raise InputError("truncated_geometric: labels must be 1..m")
            return MODELS[name](len(labels))
        return MODELS[name](labels)
    except ValueError as exc:
        raise InputError(f"model: {exc}") from None


def cmd_mle(cfg, obj):
    _fields(obj, "fit", required=("model",), optional=("data", "labels", "simulate"))
    if ("data" in obj) == ("simulate" in obj):
        raise InputError("fit: give exactly one of 'data' or 'simulate'")
    if "data" in obj and (not isinstance(obj["data"], dict) or not obj["data"]):
        raise InputError("data: expected a non-empty object mapping labels to counts")
    if "simulate" in obj and "labels" not in obj:
        raise InputError("simulate: 'labels' is required to fix the outcome space")
    model = _mle_model(obj)
    try:
        if "data" in obj:
            for k, v in obj["data"].items():
                _number(v, f"data[{k}]")
            data = Dataset.from_mapping(model.space, obj["data"])
        else:
            sim = _fields(obj["simulate"], "simulate", required=("theta", "n"))
            theta = [_number(t, "simulate.theta") for t in sim["theta"]]
            n = sim["n"]
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise InputError("simulate.n: expected a positive integer")
            data = simulate(model, theta, n, np.random.default_rng(cfg.seed))
    except (ValueError, KeyError) as exc:
        raise InputError(str(exc)) from None
    tol = cfg.tol if cfg.tol is not None else 1e-8
    try:
        report = mle_fit(model, data, tol=tol, on_degenerate="raise")
    except DegenerateData as exc:
        partial = dict(exc.report.as_dict(), counts=data.counts, status="degenerate")
        raise ProblemError(str(exc), partial) from None
    return dict(report.as_dict(), counts=data.counts)


def cmd_converge(cfg, obj):
    _fields(obj, "experiment", required=("base", "mean"), optional=("n_list",))
    base = _distribution(obj["base"], "base")
    mean = _number(obj["mean"], "mean")
    n_list = obj.get("n_list", list(DEFAULT_N_LIST))
    if not isinstance(n_list, list) or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1
                                               for n in n_list):
        raise InputError("n_list: expected a list of positive integers")
    try:
        report = convergence_experiment(base, mean, n_list, tol=_tol(cfg, {}))
    except UnachievableSum as exc:
        raise ProblemError(str(exc)) from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return report.as_dict(), report.table()


def cmd_info(cfg, args):
    if args.info_cmd == "gain":
        try:
            return {"p": args.p, "q": args.q, "gain": information_gain(args.p, args.q)}
        except ValueError as exc:
            raise InputError(str(exc)) from None
    obj = _load(args.input)
    if args.info_cmd == "entropy":
        d = _distribution(obj, "distribution")
        return {"entropy": shannon_entropy(d), "log_n": math.log(d.space.n)}
    _fields(obj, "pair", required=("q", "p"))
    q, p = _distribution(obj["q"], "q"), _distribution(obj["p"], "p")
    if q.space != p.space:
        raise InputError("q and p have different labels")
    return {
        "kl": relative_entropy(q, p),
        "entropy_q": shannon_entropy(q),
        "entropy_p": shannon_entropy(p),
        "tv": tv_distance(q, p),
    }


def _load(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("tol must be a positive finite number")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None, help="solver tolerance")
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for simulated data")

    parser = argparse.ArgumentParser(prog="mreinfer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    info = sub.add_parser("info", help="information measures")
    info_sub = info.add_subparsers(dest="info_cmd", required=True)
    gain = info_sub.add_parser("gain", parents=[common], help="log(q/p) for two plausibilities")
    gain.add_argument("p", type=float)
    gain.add_argument("q", type=float)
    kl = info_sub.add_parser("kl", parents=[common], help='KL of {"q": ..., "p": ...}')
    kl.add_argument("input")
    ent = info_sub.add_parser("entropy", parents=[common], help="Shannon entropy of a distribution")
    ent.add_argument("input")

    for name, help_text in [("update", "minimum relative entropy posterior"),
                            ("maxent", "maximum entropy distribution (uniform prior)"),
                            ("mle", "maximum likelihood fit"),
                            ("converge", "sum-conditioned marginal vs MRE tilt")]:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("input")
    bayes = sub.add_parser("bayes", parents=[common], help="Bayesian conditioning two ways")
    bayes.add_argument("--method", choices=("closed", "mre", "both"), default="both")
    bayes.add_argument("input")
    return parser


def _emit(text, output):
    data = text + "\n"
    if output is None:
        sys.stdout.write(data)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    cfg = RunConfig(args.subcommand, getattr(args, "input", None), args.output if hasattr(args, "output") else None,
                    getattr(args, "tol", None), getattr(args, "seed", 0), getattr(args, "format", "json"))
    table = None
    try:
        if cfg.subcommand == "info":
            doc = cmd_info(cfg, args)
        else:
            obj = _load(cfg.input)
            if cfg.subcommand == "update":
                doc = cmd_update(cfg, obj)
            elif cfg.subcommand == "maxent":
                doc = cmd_maxent(cfg, obj)
            elif cfg.subcommand == "bayes":
                doc = cmd_bayes(cfg, obj, args.method)
            elif cfg.subcommand == "mle":
                doc = cmd_mle(cfg, obj)
            else:
                doc, table = cmd_converge(cfg, obj)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.partial is not None:
            _emit(_render(exc.partial, cfg.format), cfg.output)
        return 2
    _emit(_render(doc, cfg.format, table), cfg.output)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
