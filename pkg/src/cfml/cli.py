"""Command-line entry point: ``cfml <command> [flags]`` or ``cfml run --config file.json``.

A config file is a JSON object ``{"command": ..., "params": {...}, "out": ...,
"seed": ..., "workers": ..., "precision_bits": ...}``.  Flags given on the
command line override the file.  Unknown fields are rejected.

Exit codes: 0 success, 2 invalid input, 3 cap or budget exceeded, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import mpmath

from cfml import cantor, cf, measure, pressure, primes
from cfml.errors import CapExceeded, DomainError, NumericalFailure
from cfml.phi import PhiSpec

EXIT_OK, EXIT_INVALID, EXIT_CAP, EXIT_NUMERIC = 0, 2, 3, 4

TOP_FIELDS = {"command", "params", "out", "seed", "workers", "precision_bits"}
STOCHASTIC = {"mc-measure", "ce-ratio"}


class ConfigError(DomainError):
    pass


# ------------------------------------------------------------------ helpers


def _rational(text: Any) -> Fraction:
    if isinstance(text, float):
        raise ConfigError("rationals must be given exactly, e.g. \"113/355\"")
    return Fraction(str(text))


def _digits(value: Any) -> tuple[int, ...]:
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    return tuple(int(v) for v in value)


def _phi(value: Any) -> PhiSpec:
    if isinstance(value, str):
        value = json.loads(value)
    if not isinstance(value, dict):
        raise ConfigError("phi must be a JSON object such as {\"form\": \"power\", \"c\": 1, \"k\": 0.5}")
    return PhiSpec.from_dict(value)


def _int(value: Any) -> int:
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        v = float(value) if any(c in value for c in ".eE") else int(value)
        return _int(v)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}")
    return value


def _csv(header: tuple[str, ...], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table(limit: int) -> primes.PrimeTable:
    return primes.load_table(limit)


# ----------------------------------------------------------------- commands
# Each command maps validated params to (text, suffix, summary).

Command = Callable[[dict, argparse.Namespace], tuple[str, str, str]]


def cmd_expand(p: dict, ctx) -> tuple[str, str, str]:
    x = _rational(p["x"])
    w = cf.expand(x, _int(p.get("max_terms", 64)))
    rows = [[str(i), str(a)] for i, a in enumerate(w.digits, start=1)]
    return _csv(("index", "digit"), rows), "csv", f"x = {x}: {list(w.digits)}"


def cmd_cylinder(p: dict, ctx) -> tuple[str, str, str]:
    w = cf.Word(_digits(p["word"]))
    c = cf.cylinder(w)
    rows = [[" ".join(map(str, w.digits)), str(c.lo), str(c.hi), str(c.length), repr(float(c.length)), str(w.n % 2)]]
    if "M" in p:
        M = _int(p["M"])
        tail = cf.tail_union_measure(w, M)
        slice_ = cf.digit_slice_measure(w, M)
        rows[0] += [str(M), str(tail), str(slice_)]
        header = ("word", "lo", "hi", "length", "length_float", "parity", "M", "tail_union", "digit_slice")
    else:
        header = ("word", "lo", "hi", "length", "length_float", "parity")
    return _csv(header, rows), "csv", f"I_{w.n}{list(w.digits)} = [{c.lo}, {c.hi}], length {c.length}"


def cmd_sn(p: dict, ctx) -> tuple[str, str, str]:
    q = pressure.SnQuery(
        n=_int(p["n"]),
        M=_int(p["M"]),
        B=float(p["B"]),
        tol=float(p.get("tol", pressure.DEFAULT_TOL)),
        cap=_int(p.get("cap", pressure.ENUMERATION_CAP)),
    )
    s = pressure.solve_sn(q, ctx.precision_bits)
    rows = [[str(q.n), str(q.M), repr(q.B), repr(q.tol), repr(s)]]
    return _csv(("n", "M", "B", "tol", "s"), rows), "csv", f"s_{q.n}(B={q.B}, M={q.M}) = {s!r}"


def cmd_dimension(p: dict, ctx) -> tuple[str, str, str]:
    phi = _phi(p["phi"])
    horizon = tuple(_int(v) for v in p.get("horizon", (2, 64)))
    res = pressure.dimension(
        phi,
        n=_int(p.get("n", 3)),
        M=_int(p.get("M", 8)),
        tol=float(p.get("tol", pressure.DEFAULT_TOL)),
        horizon=horizon,
        precision_bits=ctx.precision_bits,
    )
    seq = res.diagnostics.get("s_sequence", [])
    rows = [[json.dumps(phi.to_dict(), sort_keys=True), repr(res.logB), repr(res.logb), res.regime, repr(res.dim), res.method, " ".join(repr(v) for v in seq)]]
    header = ("phi", "logB", "logb", "regime", "dim", "method", "s_sequence")
    return _csv(header, rows), "csv", f"dim = {res.dim!r} ({res.regime}, {res.method})"


def cmd_prime_tail(p: dict, ctx) -> tuple[str, str, str]:
    limit = _int(p.get("limit", 10**8))
    table = _table(limit)
    Ms = p["M"] if isinstance(p["M"], list) else [p["M"]]
    rows = []
    for M in (_int(m) for m in Ms):
        r = primes.prime_square_tail(M, table, ctx.precision_bits)
        with mpmath.workprec(ctx.precision_bits):
            rows.append([str(M), str(limit), mpmath.nstr(r.lower, 25), mpmath.nstr(r.upper, 25), repr(r.normalized)])
    header = ("M", "limit", "lower", "upper", "normalized")
    return _csv(header, rows), "csv", f"prime tail for M in {[int(r[0]) for r in rows]}: normalized {[float(r[4]) for r in rows]}"


def cmd_mc_measure(p: dict, ctx) -> tuple[str, str, str]:
    phi = _phi(p["phi"])
    ns = p["n"] if isinstance(p["n"], list) else [p["n"]]
    table = _table(_int(p.get("table_limit", measure.DEFAULT_TABLE_LIMIT)))
    rows = []
    for n in (_int(v) for v in ns):
        rep = measure.mc_measure(p.get("kind", "Eprime_n"), phi, n, _int(p["samples"]), ctx.seed, ctx.workers, table)
        rows.append(rep.csv_row())
    summary = f"{len(rows)} estimate(s), seed {ctx.seed}: " + ", ".join(f"n={r[1]} -> {r[5]}" for r in rows)
    return _csv(measure.McReport.CSV_HEADER, rows), "csv", summary


def cmd_series(p: dict, ctx) -> tuple[str, str, str]:
    phi = _phi(p["phi"])
    lower = _phi(p["lower_bound"]) if "lower_bound" in p else None
    upper = _phi(p["upper_bound"]) if "upper_bound" in p else None
    res = measure.series_classifier(phi, _int(p.get("horizon", 10_000)), lower, upper)
    rows = [[res.verdict, str(n), repr(s)] for n, s in res.partial_sums]
    return _csv(("verdict", "n", "partial_sum"), rows), "csv", f"{res.verdict}: {res.reason}"


def cmd_ce_ratio(p: dict, ctx) -> tuple[str, str, str]:
    phi = _phi(p["phi"])
    table = _table(_int(p.get("table_limit", measure.DEFAULT_TABLE_LIMIT)))
    res = measure.chung_erdos_ratio(phi, _int(p["N"]), _int(p["samples"]), ctx.seed, ctx.workers, table)
    return _csv(measure.CeResult.CSV_HEADER, [res.csv_row()]), "csv", f"Chung-Erdos ratio {res.ratio!r} (N={res.N}, seed {ctx.seed})"


def cmd_cantor_audit(p: dict, ctx) -> tuple[str, str, str]:
    known = {"Btilde", "M", "N", "s", "delta", "ell", "i_seq", "audit_mode", "max_level", "cap", "prime_sample"}
    extra = set(p) - known
    if extra:
        raise ConfigError(f"unknown cantor-audit params: {sorted(extra)}")
    params = cantor.CantorParams(
        Btilde=float(p["Btilde"]),
        M=_int(p["M"]),
        N=_int(p["N"]),
        s=float(p["s"]),
        delta=float(p["delta"]),
        ell=_digits(p["ell"]),
        i_seq=_digits(p.get("i_seq", ())),
        audit_mode=bool(p.get("audit_mode", True)),
        precision_bits=ctx.precision_bits,
    )
    report = cantor.audit(
        params,
        max_level=_int(p["max_level"]) if "max_level" in p else None,
        cap=_int(p.get("cap", cantor.DEFAULT_NODE_CAP)),
        prime_sample=_int(p["prime_sample"]) if "prime_sample" in p else None,
        seed=ctx.seed if ctx.seed is not None else 0,
    )
    s = report["summary"]
    summary = (
        f"{len(report['levels'])} levels: mass_ok={s['mass_ok']} gap_ok={s['gap_ok']} "
        f"holder_max_growth={s['holder_max_growth']:.6g} warnings={len(report['warnings'])}"
    )
    return _json(report), "json", summary


COMMANDS: dict[str, tuple[Command, set[str]]] = {
    "expand": (cmd_expand, {"x", "max_terms"}),
    "cylinder": (cmd_cylinder, {"word", "M"}),
    "sn": (cmd_sn, {"n", "M", "B", "tol", "cap"}),
    "dimension": (cmd_dimension, {"phi", "n", "M", "tol", "horizon"}),
    "prime-tail": (cmd_prime_tail, {"M", "limit"}),
    "mc-measure": (cmd_mc_measure, {"phi", "kind", "n", "samples", "table_limit"}),
    "series": (cmd_series, {"phi", "horizon", "lower_bound", "upper_bound"}),
    "ce-ratio": (cmd_ce_ratio, {"phi", "N", "samples", "table_limit"}),
    "cantor-audit": (
        cmd_cantor_audit,
        {"Btilde", "M", "N", "s", "delta", "ell", "i_seq", "audit_mode", "max_level", "cap", "prime_sample"},
    ),
}


# --------------------------------------------------------------- arguments


def _json_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfml", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, help="JSON config file; flags override it")
        sp.add_argument("--out", type=Path, help="output file (stdout when omitted)")
        sp.add_argument("--seed", type=int, help="64-bit seed, required by stochastic commands")
        sp.add_argument("--workers", type=int, help="worker threads (output does not depend on it)")
        sp.add_argument("--precision-bits", dest="precision_bits", type=int)

    run = sub.add_parser("run", help="run a command described entirely by a config file")
    common(run)
    for name, (_, fields) in COMMANDS.items():
        sp = sub.add_parser(name)
        common(sp)
        for f in sorted(fields):
            # values are parsed as JSON when possible, so lists and phi objects work
            sp.add_argument(f"--{f.replace('_', '-')}", dest=f"param_{f}", type=_json_value, metavar=f.upper())
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(cfg) - TOP_FIELDS
    if extra:
        raise ConfigError(f"unknown config fields: {sorted(extra)}")
    return cfg


def resolve(args: argparse.Namespace) -> tuple[str, dict, argparse.Namespace]:
    """Merge config file and flags into ``(command, params, context)``."""
    cfg = _load_config(args.config)
    command = args.command
    if command == "run":
        if "command" not in cfg:
            raise ConfigError("'run' needs a config with a 'command' field")
        command = cfg["command"]
    elif "command" in cfg and cfg["command"] != command:
        raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    fields = COMMANDS[command][1]
    params = dict(cfg.get("params", {}))
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object")
    for key, value in vars(args).items():
        if key.startswith("param_") and value is not None:
            params[key[len("param_"):]] = value
    extra = set(params) - fields
    if extra:
        raise ConfigError(f"unknown params for {command}: {sorted(extra)}")
    ctx = argparse.Namespace(
        out=args.out if args.out is not None else (Path(cfg["out"]) if "out" in cfg else None),
        seed=args.seed if args.seed is not None else cfg.get("seed"),
        workers=args.workers if args.workers is not None else cfg.get("workers", 1),
        precision_bits=args.precision_bits if args.precision_bits is not None else cfg.get("precision_bits", 80),
    )
    if ctx.seed is not None:
        ctx.seed = _int(ctx.seed)
        if not 0 <= ctx.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
    if command in STOCHASTIC and ctx.seed is None:
        raise ConfigError(f"{command} is stochastic and needs --seed")
    ctx.workers = _int(ctx.workers)
    ctx.precision_bits = _int(ctx.precision_bits)
    if ctx.workers < 1 or ctx.precision_bits < 53:
        raise ConfigError("need workers >= 1 and precision_bits >= 53")
    return command, params, ctx


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        command, params, ctx = resolve(args)
        fn = COMMANDS[command][0]
        try:
            text, _, summary = fn(params, ctx)
        except KeyError as exc:
            raise ConfigError(f"{command} needs parameter {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, (DomainError, NumericalFailure)):
                raise
            raise ConfigError(str(exc)) from None
    except CapExceeded as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CAP
    except NumericalFailure as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    if ctx.out is None:
        stdout.write(text)
    else:
        ctx.out.parent.mkdir(parents=True, exist_ok=True)
        ctx.out.write_text(text)
    print(summary, file=stderr if ctx.out is None else stdout)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
