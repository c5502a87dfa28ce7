"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 inadmissible parameters,
3 domination violated or a Stein identity failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import _series
from .bounds import Scheme, theorem_one, theorem_three, theorem_two
from .dist import Binomial, Generic, Geometric, Pmf, Poisson, total_count
from .errors import DominationViolated, InadmissibleParameters, NbSteinError
from .k1k2 import (
    K1K2Config,
    one_param_bound_k1k2,
    one_param_params,
    table1,
    table2,
    two_param_bound_k1k2,
    two_param_params,
    waiting_pmf,
)
from .matching import NbParams, ThreeParamFit, match_one_param, match_three_param, match_two_param
from .moments import aggregate
from .oracle import mixture_pmf, nb_pmf, simulate_k1k2, v_pmf, verify_domination
from .steinop import (
    TestFunction,
    k1k2_stein_apply,
    nb_stein_apply,
    stein_expectation,
    v_stein_apply,
    y_stein_apply,
)

EXIT_OK, EXIT_USAGE, EXIT_INADMISSIBLE, EXIT_VIOLATION = 0, 1, 2, 3
COMMANDS = ("bound", "table1", "table2", "verify", "simulate", "stein-check")
FORMATS = ("csv", "json", "md")
SCHEMES = tuple(s.value for s in Scheme)
TABLE_COLUMNS = ("k1", "k2", "p_bar", "n", "scheme", "bound", "tail_estimate", "flags")
STEIN_TOL = 1e-8


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    command: str
    mixture_file: str | None = None
    scheme: str | None = None
    truncation: int | None = None
    seed: int = 0
    format: str = "json"
    output: str | None = None
    k1: int | None = None
    k2: int | None = None
    p_bar: float | None = None
    n: int = 1
    alpha: float | None = None
    p: float | None = None
    trials: int = 1_000_000
    functions: int = 100
    support: int = 60
    form: str = "tabulated"
    workers: int | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"command must be one of {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {', '.join(FORMATS)}")
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise UsageError(f"scheme must be one of {', '.join(SCHEMES)}")
        if self.truncation is None:
            try:
                self.truncation = _series.resolve_truncation(None)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
        if int(self.truncation) != self.truncation or self.truncation < 10:
            raise UsageError("truncation must be an integer of at least 10")
        if self.form not in ("tabulated", "printed"):
            raise UsageError("form must be 'tabulated' or 'printed'")

    @property
    def k1k2(self) -> K1K2Config | None:
        if self.k1 is None and self.k2 is None and self.p_bar is None:
            return None
        if None in (self.k1, self.k2, self.p_bar):
            raise UsageError("a waiting-time target needs --k1, --k2 and --p-bar")
        try:
            return K1K2Config(self.k1, self.k2, self.p_bar, self.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(raw) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config field(s): {', '.join(unknown)}")
    return raw


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------


def _field(obj, key, where, kind):
    if key not in obj:
        raise UsageError(f"{where}.{key}: missing")
    value = obj[key]
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind is int:
        ok = ok and float(value).is_integer()
    if kind is list:
        ok = isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    if not ok:
        raise UsageError(f"{where}.{key}: expected {kind.__name__}, got {value!r}")
    return int(value) if kind is int else value


_COMPONENT_FIELDS = {
    "geometric": {"p"},
    "poisson": {"lambda"},
    "binomial": {"n", "p"},
    "generic": {"a", "pmf", "tail_mass"},
}


def parse_component(obj, where="component"):
    if not isinstance(obj, dict):
        raise UsageError(f"{where}: expected an object")
    kind = obj.get("type")
    if kind not in _COMPONENT_FIELDS:
        raise UsageError(f"{where}.type: expected one of {', '.join(_COMPONENT_FIELDS)}, got {kind!r}")
    extra = set(obj) - _COMPONENT_FIELDS[kind] - {"type", "count"}
    if extra:
        raise UsageError(f"{where}: unknown field(s) {', '.join(sorted(extra))}")
    count = _field(obj, "count", where, int) if "count" in obj else 1
    if count < 1:
        raise UsageError(f"{where}.count: must be at least 1")

    def prob(key):
        v = float(_field(obj, key, where, float))
        if not 0.0 < v < 1.0:
            raise UsageError(f"{where}.{key}: probability {v} outside (0, 1)")
        return v

    try:
        if kind == "geometric":
            return Geometric(prob("p"), count)
        if kind == "poisson":
            lam = float(_field(obj, "lambda", where, float))
            if not lam > 0:
                raise UsageError(f"{where}.lambda: must be positive, got {lam}")
            return Poisson(lam, count)
        if kind == "binomial":
            n = _field(obj, "n", where, int)
            if n < 1:
                raise UsageError(f"{where}.n: must be at least 1")
            return Binomial(n, prob("p"), count)
        a = _field(obj, "a", where, list)
        probs = _field(obj, "pmf", where, list)
        tail = float(obj.get("tail_mass", 0.0))
        return Generic(tuple(a), Pmf(probs, tail), count)
    except ValueError as exc:
        raise UsageError(f"{where}: {exc}") from None


def parse_mixture_data(data) -> list:
    if not isinstance(data, dict) or not isinstance(data.get("components"), list) or not data["components"]:
        raise UsageError("mixture: expected {\"components\": [ ... ]} with at least one component")
    extra = set(data) - {"components"}
    if extra:
        raise UsageError(f"mixture: unknown field(s) {', '.join(sorted(extra))}")
    return [parse_component(c, f"components[{i}]") for i, c in enumerate(data["components"])]


def parse_mixture(path: str) -> list:
    """Read a mixture file; raises :class:`UsageError` naming the bad field."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read mixture {path}: {exc}") from None
    return parse_mixture_data(data)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.6g}"
    if isinstance(v, (tuple, list)):
        return ";".join(str(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Scheme):
        return v.value
    return v


@dataclass
class Output:
    columns: tuple
    records: list
    meta: dict = field(default_factory=dict)
    markdown: str | None = None  # custom layout for md, same numbers


def render(out: Output, fmt: str) -> str:
    if fmt == "json":
        payload = {**_jsonable(out.meta), "records": _jsonable(out.records)}
        return json.dumps(payload, indent=2, sort_keys=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(out.columns)
        for r in out.records:
            w.writerow([_fmt(r.get(c)) for c in out.columns])
        return buf.getvalue()
    if out.markdown is not None:
        return out.markdown
    lines = ["| " + " | ".join(out.columns) + " |", "|" + "---|" * len(out.columns)]
    for r in out.records:
        lines.append("| " + " | ".join(_fmt(r.get(c)) for c in out.columns) + " |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _params_record(params) -> dict:
    if isinstance(params, ThreeParamFit):
        return {"alpha": params.alpha, "p": params.p, "p_hat": params.p_hat, "r": params.r, "eta": params.eta.eta}
    if isinstance(params, NbParams):
        return {"alpha": params.alpha, "p": params.p}
    return {}


def _bound_record(report, extra=None) -> dict:
    rec = {"scheme": report.scheme.value, **(extra or {}), **_params_record(report.params)}
    rec.update(
        bound=report.bound,
        tail_estimate=report.tail_estimate,
        truncation_L=report.truncation_L,
        flags=list(report.hypothesis_flags),
        terms=dict(report.terms),
        notes=dict(report.notes),
    )
    return rec


def _mixture(cfg: RunConfig):
    if not cfg.mixture_file:
        raise UsageError("this command needs --mixture")
    return parse_mixture(cfg.mixture_file)


def _mixture_params(cfg: RunConfig, mixture, scheme: Scheme):
    m = aggregate(mixture)
    if scheme is Scheme.ONE_PARAM:
        if cfg.alpha is not None and cfg.p is not None:
            raise UsageError("give at most one of --alpha and --p")
        if cfg.p is not None:
            return match_one_param(m, p=cfg.p)
        return match_one_param(m, alpha=cfg.alpha if cfg.alpha is not None else float(total_count(mixture)))
    if scheme is Scheme.TWO_PARAM:
        return match_two_param(m)
    return match_three_param(m)


_MIXTURE_THEOREMS = {Scheme.ONE_PARAM: theorem_one, Scheme.TWO_PARAM: theorem_two, Scheme.THREE_PARAM: theorem_three}


def _scheme_of(cfg: RunConfig, default: str) -> Scheme:
    return Scheme(cfg.scheme or default)


def cmd_bound(cfg: RunConfig) -> tuple[Output, int]:
    target = cfg.k1k2
    if target is not None:
        scheme = _scheme_of(cfg, "k1k2-one")
        fn = {Scheme.K1K2_ONE: one_param_bound_k1k2, Scheme.K1K2_TWO: two_param_bound_k1k2}.get(scheme)
        if fn is None:
            raise UsageError("waiting-time bounds use scheme k1k2-one or k1k2-two")
        rec = _bound_record(fn(target, cfg.truncation, form=cfg.form),
                            {"k1": target.k1, "k2": target.k2, "p_bar": target.p_bar, "n": target.n})
    else:
        scheme = _scheme_of(cfg, "two-param")
        if scheme not in _MIXTURE_THEOREMS:
            raise UsageError("mixture bounds use scheme one-param, two-param or three-param")
        mixture = _mixture(cfg)
        params = _mixture_params(cfg, mixture, scheme)
        rec = _bound_record(_MIXTURE_THEOREMS[scheme](mixture, params, cfg.truncation))
    cols = tuple(k for k in rec if k not in ("terms", "notes"))
    return Output(cols, [rec]), EXIT_OK


def _table_records(cells) -> list:
    out = []
    for c in cells:
        rep = c.report
        out.append({
            "k1": c.k1, "k2": c.k2, "p_bar": c.p_bar, "n": c.n, "scheme": c.scheme.value,
            "bound": c.bound,
            "tail_estimate": rep.tail_estimate if rep is not None else math.nan,
            "flags": list(rep.hypothesis_flags) if rep is not None else [c.error],
        })
    return out


def _pbar_label(pb):
    return f"1/{round(1 / pb)}" if abs(1 / pb - round(1 / pb)) < 1e-12 else _fmt(pb)


def _table_markdown(records, ns) -> str:
    p_bars = list(dict.fromkeys(r["p_bar"] for r in records))
    rows = list(dict.fromkeys((r["k1"], r["k2"]) for r in records))
    index = {(r["k1"], r["k2"], r["p_bar"], r["n"]): r["bound"] for r in records}
    heads = [(pb, n) for n in ns for pb in p_bars]
    label = [f"p̄={_pbar_label(pb)}" + ("" if n is None else f", n={n}") for pb, n in heads]
    lines = ["| (k1,k2) | " + " | ".join(label) + " |", "|---|" + "---|" * len(heads)]
    for k1, k2 in rows:
        vals = [_fmt(index.get((k1, k2, pb, n), math.nan)) for pb, n in heads]
        lines.append(f"| ({k1},{k2}) | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def cmd_table(cfg: RunConfig, which: int) -> tuple[Output, int]:
    if which == 1:
        cells = table1(L=cfg.truncation, form=cfg.form, workers=cfg.workers)
        ns = [None]
    else:
        cells = table2(L=cfg.truncation, form=cfg.form, workers=cfg.workers)
        ns = sorted({c.n for c in cells})
    records = _table_records(cells)
    meta = {"table": which, "truncation_L": cfg.truncation, "form": cfg.form}
    return Output(TABLE_COLUMNS, records, meta, _table_markdown(records, ns)), EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[Output, int]:
    target = cfg.k1k2
    if target is not None:
        scheme = _scheme_of(cfg, "k1k2-one")
        extra = {"k1": target.k1, "k2": target.k2, "p_bar": target.p_bar, "n": target.n}
    else:
        target = _mixture(cfg)
        scheme = _scheme_of(cfg, "two-param")
        extra = {}
    code = EXIT_OK
    try:
        dom = verify_domination(target, scheme, truncation=cfg.truncation, form=cfg.form)
    except DominationViolated as exc:
        dom = exc.report
        code = EXIT_VIOLATION
        print(f"error: {exc}", file=sys.stderr)
    rec = {"scheme": scheme.value, **extra, **_params_record(dom.report.params), **dom.as_dict(),
           "violated": dom.violated, "flags": list(dom.report.hypothesis_flags)}
    return Output(tuple(rec), [rec]), code


def cmd_simulate(cfg: RunConfig) -> tuple[Output, int]:
    target = cfg.k1k2
    if target is None:
        raise UsageError("simulate needs --k1, --k2 and --p-bar")
    run = simulate_k1k2(target, cfg.trials, cfg.seed)
    L = len(run.empirical)
    reference = waiting_pmf(target, L).probs
    records = [
        {"m": m, "empirical": float(run.empirical.probs[m]), "std_error": float(run.std_errors[m]),
         "reference": float(reference[m])}
        for m in range(L)
    ]
    z = run.standardized_deviation(reference)
    meta = {"k1": target.k1, "k2": target.k2, "p_bar": target.p_bar, "n": target.n,
            "seed": cfg.seed, "trials": cfg.trials, "bins_tested": int(z.size),
            "max_abs_z": float(np.max(np.abs(z)))}
    return Output(("m", "empirical", "std_error", "reference"), records, meta), EXIT_OK


CONTROL_SCALE = 1.25


def _control(params: NbParams, L: int) -> Pmf:
    """Mismatched law for the negative control: alpha scaled by CONTROL_SCALE."""
    return nb_pmf(NbParams(params.alpha * CONTROL_SCALE, params.p), L)


def _stein_setup(cfg: RunConfig):
    """(operator, matching law, mismatched law) for the chosen scheme."""
    L = max(cfg.support + 1, 2000)
    target = cfg.k1k2
    scheme = cfg.scheme or ("k1k2-one" if target is not None else "two-param")
    if target is not None:
        params = one_param_params(target) if Scheme(scheme) is Scheme.K1K2_ONE else two_param_params(target)
        return (lambda g, m: k1k2_stein_apply(target, params, g, m)), waiting_pmf(target, L), _control(params, L)
    if cfg.mixture_file is None:
        if cfg.alpha is None or cfg.p is None:
            raise UsageError("stein-check needs --mixture, a waiting-time target, or both --alpha and --p")
        params = NbParams(cfg.alpha, cfg.p)
        return (lambda g, m: nb_stein_apply(params, g, m)), nb_pmf(params, L), _control(params, L)
    mixture = _mixture(cfg)
    s = Scheme(scheme)
    if s not in _MIXTURE_THEOREMS:
        raise UsageError("mixture checks use scheme one-param, two-param or three-param")
    params = _mixture_params(cfg, mixture, s)
    if s is Scheme.THREE_PARAM:
        return (lambda g, m: v_stein_apply(params, g, m)), v_pmf(params, L), _control(params.nb, L)
    return (lambda g, m: y_stein_apply(mixture, params, g, m)), mixture_pmf(mixture, L), _control(params, L)


def cmd_stein(cfg: RunConfig) -> tuple[Output, int]:
    op, law, other = _stein_setup(cfg)
    rng = np.random.default_rng(cfg.seed)
    records = []
    code = EXIT_OK
    for i in range(cfg.functions):
        g = TestFunction.random(rng, cfg.support)
        e = stein_expectation(op, law, g)
        c = stein_expectation(op, other, g)
        ok = abs(e.value) <= STEIN_TOL + e.tail_bound
        if not ok:
            code = EXIT_VIOLATION
        records.append({"function": i, "expectation": e.value, "tail_bound": e.tail_bound,
                        "control": c.value, "passed": ok})
    powered = sum(abs(r["control"]) > 1e-4 for r in records)
    meta = {"seed": cfg.seed, "functions": cfg.functions, "support": cfg.support, "tolerance": STEIN_TOL,
            "max_abs_expectation": max(abs(r["expectation"]) for r in records),
            "control_fraction_above_1e-4": powered / len(records)}
    if code:
        print("error: Stein identity failed for at least one test function", file=sys.stderr)
    return Output(("function", "expectation", "tail_bound", "control", "passed"), records, meta), code


def run(cfg: RunConfig) -> int:
    """Execute one command and write its report; returns the exit code."""
    handlers = {
        "bound": cmd_bound,
        "table1": lambda c: cmd_table(c, 1),
        "table2": lambda c: cmd_table(c, 2),
        "verify": cmd_verify,
        "simulate": cmd_simulate,
        "stein-check": cmd_stein,
    }
    try:
        out, code = handlers[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InadmissibleParameters as exc:
        print(f"inadmissible: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except DominationViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (NbSteinError, ValueError) as exc:
        print(f"usage error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(out, cfg.format)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return code


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nbstein", description="Negative binomial approximation bounds and their checks.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    parser.add_argument("--mixture", dest="mixture_file", help="JSON mixture file")
    parser.add_argument("--scheme", choices=SCHEMES)
    parser.add_argument("--truncation", type=int, help="series truncation L (default 3000 or $NB_STEIN_TRUNCATION)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--output", help="write here instead of stdout")
    parser.add_argument("--k1", type=int)
    parser.add_argument("--k2", type=int)
    parser.add_argument("--p-bar", dest="p_bar", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--p", type=float)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--functions", type=int)
    parser.add_argument("--support", type=int)
    parser.add_argument("--form", choices=("tabulated", "printed"))
    parser.add_argument("--workers", type=int)
    return parser


def config_from_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = load_config(ns.config) if ns.config else {}
    if "command" in values and values["command"] != ns.command:
        raise UsageError(f"config command {values['command']!r} conflicts with {ns.command!r}")
    for key, value in vars(ns).items():
        if key != "config" and value is not None:
            values[key] = value
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
