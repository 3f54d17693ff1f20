"""qsv command line: coefficient tables, verification suites and a self-test.

Exit codes: 0 pass, 1 check failure, 2 I/O or configuration error,
3 convention-gate failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from . import __version__
from .ncalg import ALL_VARIANTS, DEFAULT_VARIANT, GateFailure, Variant, gate_check
from .qfield import PoleError, QScalar, eval_at, limit_q_to_1, parse

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_GATE = 0, 1, 2, 3
SCHEMA = 1
NMAX_BOUND = 12


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    suite: str = "all"
    space: str | None = None
    order: int | None = None
    time_order: int | None = None
    q: str = "symbolic"
    convention: str = "auto-gate"
    format: str = "text"
    out: str | None = None
    nmax: int = 4
    timing: bool = False


_INT_KEYS = {"order", "time_order", "nmax"}
_BOOL_KEYS = {"timing"}


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                out[key] = int(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key} must be an integer") from exc
        elif key in _BOOL_KEYS:
            out[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict:
    path = path or os.environ.get("QSV_CONFIG")
    if not path:
        return {}
    try:
        return parse_config_text(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def q_mode(spec: str):
    """None for symbolic, a Fraction for r/s, a float for numeric input."""
    if spec == "symbolic":
        return None
    try:
        if "." in spec or "e" in spec.lower():
            return float(spec)
        return Fraction(spec)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad --q value {spec!r}") from exc


def render_scalar(c: QScalar | None, q) -> str | None:
    if c is None:
        return None
    if q is None:
        return str(c)
    v = eval_at(c, q)
    if isinstance(v, complex):
        return repr(v.real) if v.imag == 0 else repr(v)
    return str(v)


def resolve_convention(name: str) -> Variant:
    """The explicit variant, or the default table if it passes the gate, else the unique passing variant."""
    if name != "auto-gate":
        for v in ALL_VARIANTS:
            if v.vid == name:
                return v
        raise ConfigError(f"unknown convention {name!r}")
    if gate_check(DEFAULT_VARIANT):
        return DEFAULT_VARIANT
    passing = [v for v in ALL_VARIANTS if gate_check(v)]
    if len(passing) != 1:
        raise GateFailure(f"{len(passing)} convention variants pass the gate: {[v.vid for v in passing]}")
    return passing[0]


# ---------------------------------------------------------------- report output

def report_dict(cfg: RunConfig, variant: Variant, results, command: str) -> dict:
    q = q_mode(cfg.q)
    rows = []
    for r, dt in results:
        row = r.as_dict()
        if "value" in r.detail:
            row["value"] = render_scalar(parse(r.detail["value"]), q)
        if cfg.timing:
            row["seconds"] = round(dt, 3)
        rows.append(row)
    rows.sort(key=lambda d: (d["check_id"], d["space"], d["geometry"], d["window"]))
    return {
        "schema": SCHEMA,
        "tool_version": __version__,
        "command": command,
        "convention": variant.vid,
        "suite": cfg.suite,
        "results": rows,
        "summary": {s: sum(1 for d in rows if d["status"] == s) for s in ("pass", "fail", "unsupported")},
    }


CSV_COLUMNS = ("check_id", "space", "geometry", "window", "status", "witness", "value")


def format_report(rep: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rep, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        cols = CSV_COLUMNS + (("seconds",) if rep["results"] and "seconds" in rep["results"][0] else ())
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rep["results"]:
            w.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in cols})
        return buf.getvalue()
    lines = [f"qsv {rep['tool_version']}  convention={rep['convention']}  suite={rep['suite']}"]
    for row in rep["results"]:
        t = f"  ({row['seconds']:.3f}s)" if "seconds" in row else ""
        wit = f"  -- {row['witness']}" if row["witness"] else ""
        if row.get("value") is not None:
            wit += f"  value={row['value']}"
        lines.append(f"{row['status'].upper():<11} {row['check_id']:<24} {row['space']:<8} "
                     f"{row['geometry']:<28} {row['window']}{t}{wit}")
    s = rep["summary"]
    lines.append(f"{s['pass']} passed, {s['fail']} failed, {s['unsupported']} unsupported")
    return "\n".join(lines) + "\n"


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_coeffs(cfg: RunConfig) -> int:
    from .suites import coefficient_table

    if not 0 <= cfg.nmax <= NMAX_BOUND:
        raise ConfigError(f"--nmax must be between 0 and {NMAX_BOUND}")
    variant = resolve_convention(cfg.convention)
    q = q_mode(cfg.q)
    rows = coefficient_table(cfg.nmax, variant)
    ok = all(r["agree"] for r in rows)
    table = [{"n": r["n"], "k": r["k"],
              "recursive": render_scalar(r["recursive"], q),
              "closed": render_scalar(r["closed"], q),
              "oracle": render_scalar(r["oracle"], q),
              "agree": r["agree"]} for r in rows]
    if cfg.format == "json":
        text = json.dumps({"schema": SCHEMA, "tool_version": __version__, "command": "coeffs",
                           "convention": variant.vid, "rows": table}, sort_keys=True, indent=2,
                          ensure_ascii=False) + "\n"
    elif cfg.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=("n", "k", "recursive", "closed", "oracle", "agree"), lineterminator="\n")
        w.writeheader()
        for row in table:
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})
        text = buf.getvalue()
    else:
        lines = [f"(C_q)_k^n  convention={variant.vid}"]
        for row in table:
            flag = "agree" if row["agree"] else "DISAGREE"
            lines.append(f"n={row['n']} k={row['k']}  recursive={row['recursive']}  closed={row['closed']}  "
                         f"oracle={row['oracle'] if row['oracle'] is not None else 'n/a'}  {flag}")
        text = "\n".join(lines) + "\n"
    emit(text, cfg.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    from .suites import SPACES, SUITES, Orders, run_checks, suite_checks

    if cfg.suite not in SUITES:
        raise ConfigError(f"unknown suite {cfg.suite!r}")
    if cfg.space is not None and cfg.space not in SPACES:
        raise ConfigError(f"unknown space {cfg.space!r}")
    variant = resolve_convention(cfg.convention)
    orders = Orders()
    if cfg.order is not None:
        orders = replace(orders, line_N=cfg.order, euclid_N=cfg.order)
    if cfg.time_order is not None:
        orders = replace(orders, line_K=cfg.time_order, euclid_K=cfg.time_order)
    results = run_checks(suite_checks(cfg.suite, cfg.space, orders, variant))
    rep = report_dict(cfg, variant, results, "verify")
    emit(format_report(rep, cfg.format), cfg.out)
    return EXIT_OK if all(r.ok for r, _ in results) else EXIT_FAIL


def selftest_results(variant: Variant):
    """Gate, field-axiom sample, q -> 1 spot checks and a numeric spot evaluation at q = 9/10."""
    from .dynamics import CheckResult, displayed_bracket
    from .qcombi import cq_closed, qbinomial, qnum
    from .qfield import I, lam, lamp, qpow
    from .waves import GeometrySpec, phase_cancellation, schrodinger_residual, plane_wave

    out = []

    def add(cid, ok, wit=None):
        out.append((CheckResult(cid, "-", "-", "-", "pass" if ok else "fail", None if ok else wit), 0.0))

    add("gate", True)
    a, b, c = qnum(3, 1) + 2 * qpow(-2), lam, (1 + I * qpow(1)) / (qpow(2) + 1)
    add("field_axioms",
        a * (b + c) == a * b + a * c and (a * b) * c == a * (b * c) and a * a.inv() == 1 and a + (-a) == 0)
    add("limit_q_to_1",
        all(limit_q_to_1(qnum(n, 1)) == n for n in range(11))
        and limit_q_to_1(lam) == 0 and limit_q_to_1(lamp) == 2
        and limit_q_to_1(qbinomial(6, 2, 4)) == 15
        and limit_q_to_1(cq_closed(3, 1)) == (-2) ** 2 * 3)
    # three symbolic identities, re-evaluated numerically
    g = GeometrySpec("line")
    residuals = [phase_cancellation(g, 4), schrodinger_residual(plane_wave(g, 4, 2), 4, 2)]
    zero_vals = [abs(complex(eval_at(v, 0.9))) for r in residuals for v in r.terms.values()]
    diff = displayed_bracket("line", "unhatted", "left") - (1 + qpow(1))
    zero_vals.append(abs(complex(eval_at(diff, 0.9))))
    add("numeric_q_0.9", all(z <= 1e-12 for z in zero_vals), f"max |value| {max(zero_vals, default=0)}")
    return out


def cmd_selftest(cfg: RunConfig) -> int:
    variant = resolve_convention(cfg.convention)
    results = selftest_results(variant)
    rep = report_dict(replace(cfg, suite="selftest"), variant, results, "selftest")
    emit(format_report(rep, cfg.format), cfg.out)
    return EXIT_OK if all(r.ok for r, _ in results) else EXIT_FAIL


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsv", description="Exact checks of q-deformed Schroedinger theory.")
    p.add_argument("--version", action="version", version=f"qsv {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file (default: $QSV_CONFIG)")
    common.add_argument("--q", help="symbolic, a rational r/s, or a decimal for numeric output")
    common.add_argument("--convention", help="auto-gate or a variant id such as ipd")
    common.add_argument("--format", choices=("text", "json", "csv"))
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", default=None, help="include per-check timings")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("coeffs", parents=[common], help="(C_q) coefficient table")
    c.add_argument("--nmax", type=int)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite")
    v.add_argument("--space")
    v.add_argument("--order", type=int, help="position degree N")
    v.add_argument("--time-order", dest="time_order", type=int, help="time order K")
    sub.add_parser("selftest", parents=[common], help="gate, field axioms and limit spot checks")
    return p


def make_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    if cfg.format not in ("text", "json", "csv"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    q_mode(cfg.q)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        cmd = {"coeffs": cmd_coeffs, "verify": cmd_verify, "selftest": cmd_selftest}[args.command]
        return cmd(cfg)
    except GateFailure as exc:
        print(f"qsv: convention gate failed: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (ConfigError, OSError) as exc:
        print(f"qsv: {exc}", file=sys.stderr)
        return EXIT_IO
    except PoleError as exc:
        print(f"qsv: cannot evaluate at the requested q: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
