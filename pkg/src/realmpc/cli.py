"""Command-line front end: run protocols, audit costs, run the CNN demo.

Exit codes: 0 success, 1 usage or configuration error, 2 input parse error,
3 protocol abort, 4 conformance failure in an audit.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
from fractions import Fraction

import numpy as np

from . import catalog, cnn
from .cost import audit, known_protocols, predict
from .errors import (CatalogError, ConfigurationError, DomainError, ModelError, ProtocolAbort,
                     RealMPCError)
from .shares import ShareDomain

SEED_ENV = "REALMPC_SEED"
EXIT_USAGE, EXIT_PARSE, EXIT_ABORT, EXIT_AUDIT = 1, 2, 3, 4


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --- formatting ----------------------------------------------------------------------

def _fmt(v, structured: bool) -> str:
    if isinstance(v, (Fraction,)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if structured:
            return format(f, ".17g")
        # 8 significant digits sits above the ~1e-7 float floor of masked products
        r = format(f, ".8g")
        return "0" if r == "-0" else r
    if isinstance(v, np.ndarray):
        if v.ndim == 0:
            return _fmt(v[()], structured)
        if structured:
            return ",".join(_fmt(x, True) for x in v.ravel())
        return np.array2string(v, formatter={"float_kind": lambda x: _fmt(x, False)}, separator=", ")
    return str(v)


class Report:
    """Ordered key/value records; rendered as aligned text or key=value lines."""

    def __init__(self):
        self.rows: list[tuple[str, object]] = []

    def add(self, key, value):
        self.rows.append((key, value))

    def render(self, fmt: str) -> str:
        structured = fmt == "structured"
        if structured:
            return "".join(f"{k}={_fmt(v, True)}\n" for k, v in self.rows)
        width = max((len(k) for k, _ in self.rows), default=0)
        out = []
        for k, v in self.rows:
            text = _fmt(v, False)
            if "\n" in text:
                text = text.replace("\n", "\n" + " " * (width + 2))
            out.append(f"{k.ljust(width)}  {text}")
        return "\n".join(out) + "\n"


# --- input parsing ---------------------------------------------------------------------

_SPLIT = re.compile(r"[,\s]+")


def parse_numbers(tokens) -> list[float]:
    out = []
    for tok in tokens:
        for piece in _SPLIT.split(str(tok).strip()):
            if not piece:
                continue
            try:
                out.append(float(piece))
            except ValueError:
                raise ParseError(f"not a decimal number: {piece!r}") from None
    return out


def read_matrix(path: str) -> np.ndarray:
    try:
        with open(path) as f:
            lines = [ln for ln in f.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as e:
        raise ParseError(f"cannot read matrix file {path}: {e.strerror}") from None
    rows = [parse_numbers([ln]) for ln in lines]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ParseError(f"{path}: expected a square matrix, got row lengths {[len(r) for r in rows]}")
    return np.array(rows)


def read_vector(path: str) -> np.ndarray:
    try:
        with open(path) as f:
            return np.array(parse_numbers([f.read()]))
    except OSError as e:
        raise ParseError(f"cannot read input file {path}: {e.strerror}") from None


def parse_param(text: str):
    if "=" not in text:
        raise UsageError(f"--param expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    raw = raw.strip()
    if raw.lower() in ("true", "false"):
        return key, raw.lower() == "true"
    for conv in (int, Fraction if "/" in raw else float):
        try:
            return key, conv(raw)
        except (ValueError, ZeroDivisionError):
            pass
    return key, raw


def parse_n_range(text: str) -> list[int]:
    m = re.fullmatch(r"(\d+)(?:-(\d+))?", text.strip())
    if not m:
        raise UsageError(f"--n expects N or A-B, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2) or lo)
    if lo < 2 or hi < lo:
        raise UsageError("party count must be at least 2")
    return list(range(lo, hi + 1))


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _domain(args) -> ShareDomain:
    return ShareDomain(l=args.l)


def _single_n(args) -> int:
    ns = parse_n_range(args.n)
    if len(ns) != 1:
        raise UsageError("this command takes a single party count")
    return ns[0]


def _protocol(args) -> str:
    pid = args.protocol_pos or args.protocol
    if not pid:
        raise UsageError("a protocol id is required")
    return pid


# --- commands ----------------------------------------------------------------------------

def cmd_run(args) -> tuple[int, Report]:
    pid = _protocol(args)
    entry = catalog.get(pid)
    n = _single_n(args)
    params = dict(parse_param(p) for p in args.param)
    if entry.family == "matrix":
        if not args.matrix:
            raise UsageError(f"{pid} takes matrix inputs; pass --matrix FILE")
        values = [read_matrix(p) for p in args.matrix]
    else:
        if args.matrix:
            raise UsageError(f"{pid} takes scalar inputs; use --inputs")
        values = [np.array(v) for v in parse_numbers(args.inputs)]
        if entry.arity == "m" and len(values) < 3:
            raise UsageError(f"{pid} needs at least 3 inputs")
    if isinstance(entry.arity, int) and len(values) != entry.arity:
        raise UsageError(f"{pid} takes {entry.arity} input(s), got {len(values)}")
    seed = _seed(args)
    res = catalog.execute(pid, n, values, params, seed=seed, domain=_domain(args))
    t = res.transcript
    rep = Report()
    rep.add("protocol", pid)
    rep.add("n", n)
    rep.add("seed", seed)
    if entry.out_fmt == "eigen":
        rep.add("eigenvalues", res.output[0])
        # scaling is free after reconstruction: unit columns, largest entry positive
        V = res.output[1] / np.linalg.norm(res.output[1], axis=0)
        V = V * np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])])
        rep.add("eigenvectors", V)
    elif entry.out_fmt == "sign":
        rep.add("result", np.asarray(res.output).astype(int))
    else:
        rep.add("result", res.output)
    if entry.out_fmt != "eigen" and np.ndim(res.output) > 1:
        rep.add("result_shape", "x".join(str(k) for k in np.shape(res.output)))
    _transcript_rows(rep, t, res.dealer)
    return 0, rep


def _transcript_rows(rep: Report, t, dealer=None):
    rep.add("rounds", t.rounds)
    rep.add("comm_lunits", t.comm_lunits)
    rep.add("online_bits", t.online_bits)
    rep.add("offline_bits", t.offline_bits)
    if dealer is not None:
        rep.add("dealer_prg", dealer[0])
        rep.add("dealer_add", dealer[1])
        rep.add("dealer_mul", dealer[2])
    rep.add("exposure_events", t.exposure_count())
    for e in t.exposures:
        rep.add(f"exposure.{e.protocol}", f"{e.kind}@party{e.party}x{e.count}")


def cmd_audit(args) -> tuple[int, Report]:
    pids = args.protocol or ([args.protocol_pos] if args.protocol_pos else [])
    if not pids:
        raise UsageError("pass one or more protocol ids, or 'all'")
    if pids == ["all"]:
        pids = [p for p in catalog.protocol_ids() if p in known_protocols()]
    ns = parse_n_range(args.n)
    params = dict(parse_param(p) for p in args.param)
    seed = _seed(args)
    rep = Report()
    status = 0
    for pid in pids:
        entry = catalog.get(pid)
        for n in ns:
            p = dict(params)
            if entry.family == "matrix":
                p.setdefault("d", 2)
            if entry.arity == "m":
                p.setdefault("m", 3)
            m = catalog.measure(pid, n, p, seed, _domain(args))
            key = f"{pid}.n{n}"
            try:
                pred = predict(pid, n, p.get("d", 2), p.get("m", 3), args.l)
            except CatalogError:
                rep.add(f"{key}.status", "no-prediction")
                rep.add(f"{key}.rounds", m.rounds)
                rep.add(f"{key}.comm_lunits", Fraction(m.scalars) + Fraction(m.bits, args.l))
                continue
            r = audit(m, pred)
            verdict = "pass" if r.ok and not r.flagged else ("flagged" if r.ok else "fail")
            if not r.ok:
                status = EXIT_AUDIT
            rep.add(f"{key}.status", verdict)
            for c in r.checks:
                rep.add(f"{key}.{c.name}", f"{_fmt(c.measured, True)}/{_fmt(c.predicted, True)} {c.status}")
    return status, rep


def cmd_cnn(args) -> tuple[int, Report]:
    n = _single_n(args)
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    if args.model:
        model = cnn.ModelSpec.load(args.model)
    elif args.arch:
        model = cnn.ARCHITECTURES[args.arch](rng, width=args.width)
    else:
        raise UsageError("pass --model FILE or --arch NAME")
    if args.input:
        x = read_vector(args.input)
        if x.size != int(np.prod(model.input_shape)):
            raise ParseError(f"input has {x.size} values, model expects shape {model.input_shape}")
    else:
        x = rng.uniform(0.0, 1.0, model.input_shape)
    r = cnn.run_inference(model, x, n=n, seed=seed, domain=_domain(args))
    rep = Report()
    rep.add("n", n)
    rep.add("seed", seed)
    rep.add("layers", ",".join(L.kind for L in model.layers))
    rep.add("secure_logits", r.logits)
    rep.add("plain_logits", r.plain)
    rep.add("max_abs_delta", r.max_error)
    rep.add("comparisons", r.comparisons)
    rep.add("rounds", r.rounds)
    rep.add("comm_lunits", r.comm_lunits)
    rep.add("exposure_events", r.exposures)
    return 0, rep


def cmd_list(args) -> tuple[int, Report]:
    rep = Report()
    for pid in catalog.protocol_ids():
        e = catalog.get(pid)
        rep.add(pid, f"{e.family} in={e.in_fmt} out={e.out_fmt} arity={e.arity}")
    return 0, rep


# --- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", default="2", help="party count, or a range A-B for audit")
    common.add_argument("--l", type=int, default=64, help="wire width of one scalar in bits")
    common.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    common.add_argument("--format", choices=("human", "structured"), default="human")
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="protocol parameter, e.g. a=1/3, base=2, d=3, m=5")

    p = _Parser(prog="realmpc", description="Real-number secret-sharing protocols on simulated parties.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    r = sub.add_parser("run", parents=[common], help="run one protocol on literal inputs")
    r.add_argument("protocol_pos", nargs="?", metavar="PROTOCOL")
    r.add_argument("--protocol")
    r.add_argument("--inputs", nargs="*", default=[], help="decimal literals")
    r.add_argument("--matrix", action="append", default=[], help="square matrix text file (repeatable)")
    a = sub.add_parser("audit", parents=[common], help="compare measured costs with the closed forms")
    a.add_argument("protocol_pos", nargs="?", metavar="PROTOCOL")
    a.add_argument("--protocol", action="append", help="protocol id (repeatable) or 'all'")
    c = sub.add_parser("cnn", parents=[common], help="secure CNN inference demo")
    c.add_argument("--model", help="model JSON file")
    c.add_argument("--arch", choices=sorted(cnn.ARCHITECTURES), help="generate a seeded reference model")
    c.add_argument("--width", type=int, default=4)
    c.add_argument("--input", help="file of flat decimal input values")
    sub.add_parser("list", parents=[common], help="list protocol ids")
    return p


COMMANDS = {"run": cmd_run, "audit": cmd_audit, "cnn": cmd_cnn, "list": cmd_list}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("choose a command: run, audit, cnn or list")
        if args.l < 1:
            raise UsageError("--l must be positive")
        code, rep = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, CatalogError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ModelError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ProtocolAbort as e:
        print(f"protocol abort: {e}", file=sys.stderr)
        return EXIT_ABORT
    except RealMPCError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ABORT
    text = rep.render(args.format)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
