"""Command-line frontend: ``flagcoh chi | cohomology | verify | claims``.

Expression syntax (``*`` is tensor product, ``+`` direct sum)::

    O(a,b)      line bundle on X
    OQ(m)       O(m) on Q3, pulled back
    OP(d)       O(d) on P3, pulled back
    U2, U2*     spinor bundle on Q3 and its dual (U2*E is U2 tensor E; U2**E the dual)
    SU2*(k)     S^k U2*
    Psi1        Omega^1_P4(1) restricted to Q3
    Omega2      Omega^2_P4(2) restricted to Q3
    TQ          tangent bundle of Q3
    FU2(n)      n-fold Frobenius pullback of U2 (FU2*(n) for the dual)
    F^n(E)      n-fold Frobenius pullback of any expression

Integer arguments may use ``k`` for p^n, e.g. ``FU2(1)*O(k-2,-2)``.
Exit codes: 0 success, 1 failure, 2 not stabilized or over budget,
3 unsupported expression.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import cech, claims
from .cech import Cache, Schedule, Unstable
from .geom import ModelError, ResourceExhausted
from .rootdata import Weight, euler_characteristic
from .sheafexpr import Frob, Line, Named, Sum, Tensor, UnsupportedExpression, euler_char, rewrite

EXIT_OK, EXIT_FAIL, EXIT_UNSTABLE, EXIT_UNSUPPORTED = 0, 1, 2, 3

EXTENDED_GRID = ((5, 2), (7, 1))


class Writer:
    """Single sink for everything the CLI prints."""

    def __init__(self, out=None, err=None):
        self.out = out or sys.stdout
        self.err = err or sys.stderr

    def line(self, text: str = "") -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def note(self, text: str) -> None:
        self.err.write(text + "\n")
        self.err.flush()


# ---------------------------------------------------------------------------
# expression parsing


class ParseError(UnsupportedExpression):
    pass


_AFFINE = re.compile(r"^([+-]?\d*)k([+-]\d+)?$|^([+-]?\d+)$")


def parse_int(text: str, k: Optional[int]) -> int:
    t = text.replace(" ", "")
    m = _AFFINE.match(t)
    if not m:
        raise ParseError(f"cannot read integer {text!r}")
    if m.group(3) is not None:
        return int(m.group(3))
    if k is None:
        raise ParseError("'k' needs -p (and -n) to be given")
    c = m.group(1)
    coef = 1 if c in ("", "+") else -1 if c == "-" else int(c)
    return coef * k + int(m.group(2) or 0)


class _Parser:
    NAMES = ("Omega2", "Psi1", "SU2*", "FU2*", "FU2", "U2*", "U2", "TQ", "OQ", "OP", "O", "F^")

    def __init__(self, text: str, k: Optional[int]):
        self.s = text.replace(" ", "")
        self.i = 0
        self.k = k

    def fail(self, msg: str):
        raise ParseError(f"{msg} at position {self.i} in {self.s!r}")

    def peek(self, tok: str) -> bool:
        return self.s.startswith(tok, self.i)

    def take(self, tok: str) -> None:
        if not self.peek(tok):
            self.fail(f"expected {tok!r}")
        self.i += len(tok)

    def parse(self):
        e = self.expr()
        if self.i != len(self.s):
            self.fail("unexpected input")
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek("+"):
            self.take("+")
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        factors = [self.factor()]
        while self.peek("*"):
            self.take("*")
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Tensor(tuple(factors))

    def args(self) -> list[int]:
        self.take("(")
        j = self.s.find(")", self.i)
        if j < 0:
            self.fail("unclosed '('")
        raw = self.s[self.i:j]
        self.i = j + 1
        return [parse_int(a, self.k) for a in raw.split(",")] if raw else []

    def factor(self):
        if self.peek("("):
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        for name in self.NAMES:
            if self.peek(name):
                if name == "U2*" and self._factor_start(self.i + 3):
                    # U2*E reads as U2 tensor E; write U2**E for the dual
                    continue
                self.i += len(name)
                return self.named(name)
        self.fail("unknown bundle name")

    def _factor_start(self, j: int) -> bool:
        return j < len(self.s) and (self.s[j].isalpha() or self.s[j] == "(")

    def named(self, name: str):
        if name == "F^":
            m = re.match(r"\d+", self.s[self.i:])
            if not m:
                self.fail("expected Frobenius power")
            self.i += m.end()
            self.take("(")
            inner = self.expr()
            self.take(")")
            return Frob(inner, int(m.group()))
        if name in ("U2", "U2*", "Psi1", "Omega2", "TQ"):
            return Named(name)
        a = self.args()
        want = 2 if name == "O" else 1
        if len(a) != want:
            self.fail(f"{name} takes {want} argument(s)")
        if name == "O":
            return Line(Weight(*a))
        if name in ("FU2", "FU2*"):
            return Frob(Named(name[1:]), a[0])
        return Named(name, tuple(a))


def parse_expression(text: str, p: Optional[int] = None, n: int = 1):
    k = p**n if p is not None else None
    return _Parser(text, k).parse()


_WEIGHT = re.compile(r"^\(?\s*(-?\d+)\s*,\s*(-?\d+)\s*\)?$")


# ---------------------------------------------------------------------------
# configuration


def _env(name: str, default, cast=str):
    v = os.environ.get("FLAGCOH_" + name)
    return default if v is None else cast(v)


@dataclass(frozen=True)
class Config:
    primes: tuple = ()
    ns: tuple = (1,)
    truncation: Optional[int] = None
    t_max: Optional[int] = None
    jobs: int = 1
    budget: Optional[int] = cech.DEFAULT_SCHEDULE.max_dim
    cache_dir: Optional[str] = None
    seed: int = 20240601
    fmt: str = "md"
    cover: str = "auto"

    def __post_init__(self):
        for p in self.primes:
            if p < 3 or p % 2 == 0 or any(p % d == 0 for d in range(3, int(p**0.5) + 1, 2)):
                raise ValueError(f"{p} is not an odd prime")
        if any(n < 1 for n in self.ns):
            raise ValueError("n must be at least 1")
        if self.jobs < 1:
            raise ValueError("need at least one worker")

    def schedule(self) -> Schedule:
        return replace(cech.DEFAULT_SCHEDULE, start=self.truncation, t_max=self.t_max, jobs=self.jobs,
                       max_dim=self.budget, cover=self.cover)

    def cache(self) -> Optional[Cache]:
        return Cache(self.cache_dir) if self.cache_dir else None


def _budget(v: str) -> Optional[int]:
    return None if v.lower() in ("none", "0", "off") else int(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-p", "--p", type=int, nargs="+", default=_env("P", None, lambda v: [int(x) for x in v.split(",")]))
    common.add_argument("-n", "--n", type=int, nargs="+", default=_env("N", [1], lambda v: [int(x) for x in v.split(",")]))
    common.add_argument("--truncation", type=int, default=_env("TRUNCATION", None, int), help="starting pole order")
    common.add_argument("--t-max", type=int, default=_env("T_MAX", None, int))
    common.add_argument("--jobs", type=int, default=_env("JOBS", 1, int))
    common.add_argument("--budget", type=_budget, default=_env("BUDGET", cech.DEFAULT_SCHEDULE.max_dim, _budget),
                        help="largest complex per weight, in basis elements ('none' for no limit)")
    common.add_argument("--cover", choices=("auto", "product", "charts", "quadric", "projective"),
                        default=_env("COVER", "auto"))
    common.add_argument("--cache-dir", default=_env("CACHE_DIR", None))
    common.add_argument("--seed", type=int, default=_env("SEED", 20240601, int))
    common.add_argument("--format", choices=("json", "md"), default=_env("FORMAT", "md"))

    ap = argparse.ArgumentParser(prog="flagcoh", description="Cohomology on the Sp4 flag variety over F_p.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("chi", parents=[common], help="Euler characteristic of a weight or expression")
    c.add_argument("target")
    c = sub.add_parser("cohomology", parents=[common], help="Betti vector of an expression")
    c.add_argument("target")
    c.add_argument("--certificates", action="store_true", help="print the certificate record as JSON")
    c = sub.add_parser("verify", parents=[common], help="verify registered claims")
    c.add_argument("claims", nargs="*", help="claim ids, e.g. C2 C8")
    c.add_argument("--claims", dest="claim_list", default=None, help="comma-separated claim ids")
    c.add_argument("--all", action="store_true", help="all registered claims")
    c.add_argument("--extended", action="store_true", help="add (5,2) and (7,1) to the default grid")
    c.add_argument("--out", default=None, help="directory for report.json, report.md and timings.json")
    sub.add_parser("claims", help="list registered claims")
    return ap


def config_from(args) -> Config:
    return Config(
        primes=tuple(args.p or ()),
        ns=tuple(args.n),
        truncation=args.truncation,
        t_max=args.t_max,
        jobs=args.jobs,
        budget=args.budget,
        cache_dir=args.cache_dir,
        seed=args.seed,
        fmt=args.format,
        cover=args.cover,
    )


# ---------------------------------------------------------------------------
# commands


def cmd_chi(args, cfg: Config, w: Writer) -> int:
    m = _WEIGHT.match(args.target.strip())
    if m:
        w.line(str(euler_characteristic(Weight(int(m.group(1)), int(m.group(2))))))
        return EXIT_OK
    p = cfg.primes[0] if cfg.primes else None
    e = rewrite(parse_expression(args.target, p, cfg.ns[0]), p).expr
    w.line(str(euler_char(e)))
    return EXIT_OK


def cmd_cohomology(args, cfg: Config, w: Writer) -> int:
    if not cfg.primes:
        w.note("cohomology needs -p")
        return EXIT_FAIL
    code = EXIT_OK
    for p in cfg.primes:
        for n in cfg.ns:
            m = _WEIGHT.match(args.target.strip())
            raw = Line(Weight(int(m.group(1)), int(m.group(2)))) if m else parse_expression(args.target, p, n)
            rw = rewrite(raw, p)
            try:
                bv = cech.cohomology_expr(rw.expr, p, cfg.schedule(), cfg.cache())
            except (Unstable, ResourceExhausted) as ex:
                w.note(f"p={p}: {ex}")
                code = max(code, EXIT_UNSTABLE)
                continue
            if cfg.fmt == "json":
                d = bv.to_json()
                d["rules"] = rw.rules
                d["markers"] = rw.markers
                if not args.certificates:
                    d.pop("certificates")
                w.line(json.dumps(d, sort_keys=True))
            else:
                w.line(str(bv))
                for mk in rw.markers:
                    w.line(f"  {mk}")
                if args.certificates:
                    w.line(json.dumps(bv.certificates, sort_keys=True, indent=1))
            if not bv.stabilized:
                code = max(code, EXIT_UNSTABLE)
    return code


def _grid(args, cfg: Config) -> tuple:
    if cfg.primes:
        return tuple((p, n) for p in cfg.primes for n in cfg.ns)
    grid = claims.DEFAULT_GRID
    return grid + EXTENDED_GRID if args.extended else grid


def cmd_verify(args, cfg: Config, w: Writer) -> int:
    ids = list(args.claims)
    if args.claim_list:
        ids += [c.strip() for c in args.claim_list.split(",") if c.strip()]
    if args.all or not ids:
        ids = None
    grid = _grid(args, cfg)

    def progress(e):
        w.note(f"{e.claim} p={e.p} n={e.n}: {e.status} ({e.seconds:.1f}s)")

    report = claims.run(ids, grid, cfg.schedule(), cfg.cache(), cfg.seed, progress)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.dumps() + "\n")
        (out / "report.md").write_text(report.markdown())
        (out / "timings.json").write_text(json.dumps(report.timings(), sort_keys=True, indent=2) + "\n")
    w.line(report.dumps() if cfg.fmt == "json" else report.markdown())
    return EXIT_FAIL if report.any_failed() else EXIT_OK


def cmd_claims(args, w: Writer) -> int:
    for c in claims.register_standard_claims():
        w.line(f"{c.id}\t{c.title}")
    return EXIT_OK


def main(argv=None, writer: Optional[Writer] = None) -> int:
    w = writer or Writer()
    args = build_parser().parse_args(argv)
    if args.command == "claims":
        return cmd_claims(args, w)
    try:
        cfg = config_from(args)
        if args.command == "chi":
            return cmd_chi(args, cfg, w)
        if args.command == "cohomology":
            return cmd_cohomology(args, cfg, w)
        return cmd_verify(args, cfg, w)
    except UnsupportedExpression as ex:
        w.note(f"unsupported expression: {ex}")
        return EXIT_UNSUPPORTED
    except (ValueError, KeyError) as ex:
        w.note(f"error: {ex}")
        return EXIT_FAIL
    except ModelError as ex:
        w.note(f"model check failed: {ex}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
