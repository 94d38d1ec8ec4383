"""Sheaf expressions on the flag variety and the rewrite rules that reduce
bundles on P^3 and Q3 to line bundles and kernel-presented bundles on X.

A kernel bundle is the kernel of a matrix of forms between sums of line
bundles.  Each source/target copy carries a torus-weight shift so that the
sections of the kernel are torus-graded compatibly with the group action;
``chi_terms`` records its class as a signed list of shifted line bundles.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import rootdata
from .fplinalg import rank_dense
from .geom import (
    NVARS,
    P_VARS,
    PAIRS,
    WEIGHTS,
    ModelError,
    mono_var,
    poly_bidegree,
    poly_eval,
    poly_pow,
    poly_weight,
    pvar,
    random_point,
)
from .rootdata import Weight, euler_characteristic

Shift = tuple[int, int]
FrozenPoly = tuple  # sorted tuple of (mono, coef)


def freeze(f: dict) -> FrozenPoly:
    return tuple(sorted((m, c) for m, c in f.items() if c))


def thaw(f: FrozenPoly) -> dict:
    return dict(f)


def _add(a: Shift, b: Shift) -> Shift:
    return (a[0] + b[0], a[1] + b[1])


def _scale(a: Shift, k: int) -> Shift:
    return (a[0] * k, a[1] * k)


class UnsupportedExpression(ValueError):
    """The expression needs a construction the pipeline does not provide."""


@dataclass(frozen=True)
class Line:
    weight: Weight


@dataclass(frozen=True)
class Sum:
    terms: tuple


@dataclass(frozen=True)
class Twist:
    expr: object
    weight: Weight


@dataclass(frozen=True)
class Kernel:
    name: str
    matrix: tuple  # rows (targets) of columns (sources) of FrozenPoly
    source: tuple  # Weights
    target: tuple
    source_shift: tuple  # torus shifts per source copy
    target_shift: tuple
    rank: int  # generic rank of the matrix
    chi_terms: tuple  # (coefficient, Weight, shift)

    def __post_init__(self):
        if len(self.matrix) != len(self.target):
            raise ValueError("matrix rows must match target list")
        for j, row in enumerate(self.matrix):
            if len(row) != len(self.source):
                raise ValueError("matrix columns must match source list")
            for i, entry in enumerate(row):
                if not entry:
                    continue
                f = thaw(entry)
                want = self.target[j] - self.source[i]
                if poly_bidegree(f) != (want.a, want.b):
                    raise ValueError(f"entry ({j},{i}) of {self.name} has wrong bidegree")
                wt = _add(self.target_shift[j], _scale(self.source_shift[i], -1))
                if poly_weight(f) != wt:
                    raise ValueError(f"entry ({j},{i}) of {self.name} has wrong torus weight")

    @property
    def bundle_rank(self) -> int:
        return len(self.source) - self.rank

    def twisted(self, w: Weight) -> "Kernel":
        if w == Weight(0, 0):
            return self
        return replace(
            self,
            name=f"{self.name}{w}",
            source=tuple(s + w for s in self.source),
            target=tuple(t + w for t in self.target),
            chi_terms=tuple((c, lw + w, sh) for c, lw, sh in self.chi_terms),
        )

    def exactness_twist(self) -> tuple[int, int]:
        """Pole orders (x, p) making every piece of the class dominant after any Cech twist."""
        return (
            max(max(0, -lw.a) for _, lw, _ in self.chi_terms),
            max(max(0, -lw.b) for _, lw, _ in self.chi_terms),
        )


SheafExpr = Union[Line, Sum, Twist, Kernel]


# ---------------------------------------------------------------------------
# constructors


def _entry(sign: int, var: int) -> FrozenPoly:
    return ((mono_var(var), sign),)


def spinor_pullback() -> Kernel:
    """Pullback of the spinor bundle: kernel of v -> v ^ pi, V (x) O -> wedge^3 V (x) O(0,1)."""
    rows = []
    tshift = []
    for abc in ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)):
        a, b, c = abc
        row = [()] * 4
        row[a - 1] = _entry(1, pvar(b, c))
        row[b - 1] = _entry(-1, pvar(a, c))
        row[c - 1] = _entry(1, pvar(a, b))
        rows.append(tuple(row))
        t = (0, 0)
        for i in abc:
            t = _add(t, WEIGHTS[i - 1])
        tshift.append(t)
    return Kernel(
        name="U2",
        matrix=tuple(rows),
        source=(Weight(0, 0),) * 4,
        target=(Weight(0, 1),) * 4,
        source_shift=tuple(WEIGHTS[i] for i in range(4)),
        target_shift=tuple(tshift),
        rank=2,
        chi_terms=((1, Weight(-1, 0), (0, 0)), (1, Weight(1, -1), (0, 0))),
    )


# the five coordinates of the ambient P^4 of the quadric (p24 = -p13 there)
W_COORDS = tuple(pvar(j, k) for j, k in PAIRS if (j, k) != (2, 4))


def psi1_kernel() -> Kernel:
    """Omega^1_{P^4}(1) restricted to Q3: kernel of W* (x) O -> O(0,1)."""
    row = tuple(_entry(1, v) for v in W_COORDS)
    src_shift = tuple(_scale(WEIGHTS[v], -1) for v in W_COORDS)
    chi = tuple((1, Weight(0, 0), s) for s in src_shift) + ((-1, Weight(0, 1), (0, 0)),)
    return Kernel(
        name="Psi1",
        matrix=(row,),
        source=(Weight(0, 0),) * 5,
        target=(Weight(0, 1),),
        source_shift=src_shift,
        target_shift=((0, 0),),
        rank=1,
        chi_terms=chi,
    )


def omega2_kernel() -> Kernel:
    """Omega^2_{P^4}(2) restricted to Q3: kernel of the Koszul map wedge^2 W* (x) O -> W* (x) O(0,1)."""
    pairs = [(a, b) for a in range(5) for b in range(a + 1, 5)]
    rows = []
    for c in range(5):
        row = []
        for a, b in pairs:
            if c == b:
                row.append(_entry(1, W_COORDS[a]))
            elif c == a:
                row.append(_entry(-1, W_COORDS[b]))
            else:
                row.append(())
        rows.append(tuple(row))
    neg = [_scale(WEIGHTS[v], -1) for v in W_COORDS]
    src_shift = tuple(_add(neg[a], neg[b]) for a, b in pairs)
    tgt_shift = tuple(neg)
    chi = (
        tuple((1, Weight(0, 0), s) for s in src_shift)
        + tuple((-1, Weight(0, 1), s) for s in tgt_shift)
        + ((1, Weight(0, 2), (0, 0)),)
    )
    return Kernel(
        name="Omega2",
        matrix=tuple(rows),
        source=(Weight(0, 0),) * 10,
        target=(Weight(0, 1),) * 5,
        source_shift=src_shift,
        target_shift=tgt_shift,
        rank=4,
        chi_terms=chi,
    )


def tensor_kernels(e: Kernel, f: Kernel) -> Kernel:
    """ker(A) (x) ker(B) as the kernel of the stacked map [A (x) 1 ; 1 (x) B]."""
    from .geom import poly_mul

    ns, ms = len(e.source), len(f.source)
    src = [(i, k) for i in range(ns) for k in range(ms)]
    rows, tgt, tsh = [], [], []
    for j in range(len(e.target)):
        for k in range(ms):
            rows.append(tuple(e.matrix[j][i] if kk == k else () for i, kk in src))
            tgt.append(e.target[j] + f.source[k])
            tsh.append(_add(e.target_shift[j], f.source_shift[k]))
    for i in range(ns):
        for l in range(len(f.target)):
            rows.append(tuple(f.matrix[l][k] if ii == i else () for ii, k in src))
            tgt.append(e.source[i] + f.target[l])
            tsh.append(_add(e.source_shift[i], f.target_shift[l]))
    chi = tuple(
        (c1 * c2, w1 + w2, _add(s1, s2)) for c1, w1, s1 in e.chi_terms for c2, w2, s2 in f.chi_terms
    )
    rank = ns * ms - e.bundle_rank * f.bundle_rank
    del poly_mul
    return Kernel(
        name=f"({e.name}*{f.name})",
        matrix=tuple(rows),
        source=tuple(e.source[i] + f.source[k] for i, k in src),
        target=tuple(tgt),
        source_shift=tuple(_add(e.source_shift[i], f.source_shift[k]) for i, k in src),
        target_shift=tuple(tsh),
        rank=rank,
        chi_terms=chi,
    )


# ---------------------------------------------------------------------------
# Frobenius pullback, twists, normalization


def frobenius_pull(e: SheafExpr, n: int, p: int) -> SheafExpr:
    if n < 0:
        raise ValueError("Frobenius exponent must be non-negative")
    if n == 0:
        return e
    q = p**n
    if isinstance(e, Line):
        return Line(e.weight * q)
    if isinstance(e, Sum):
        return Sum(tuple(frobenius_pull(t, n, p) for t in e.terms))
    if isinstance(e, Twist):
        return Twist(frobenius_pull(e.expr, n, p), e.weight * q)
    if isinstance(e, Kernel):
        mat = tuple(
            tuple(freeze(poly_pow(thaw(x), q, p)) if x else () for x in row) for row in e.matrix
        )
        return Kernel(
            name=f"F{n}*{e.name}" if p else e.name,
            matrix=mat,
            source=tuple(s * q for s in e.source),
            target=tuple(t * q for t in e.target),
            source_shift=tuple(_scale(s, q) for s in e.source_shift),
            target_shift=tuple(_scale(s, q) for s in e.target_shift),
            rank=e.rank,
            chi_terms=tuple((c, w * q, _scale(s, q)) for c, w, s in e.chi_terms),
        )
    raise UnsupportedExpression(f"cannot Frobenius-pull {e!r}")


def normalize(e: SheafExpr, w: Weight = Weight(0, 0)) -> SheafExpr:
    """Push twists to the atoms and flatten sums; sums are sorted canonically."""
    if isinstance(e, Line):
        return Line(e.weight + w)
    if isinstance(e, Twist):
        return normalize(e.expr, w + e.weight)
    if isinstance(e, Kernel):
        return e.twisted(w)
    if isinstance(e, Sum):
        flat = []
        for t in e.terms:
            t = normalize(t, w)
            flat.extend(t.terms if isinstance(t, Sum) else [t])
        flat.sort(key=canonical)
        return flat[0] if len(flat) == 1 else Sum(tuple(flat))
    raise UnsupportedExpression(f"not a rewritten expression: {e!r}")


def canonical(e: SheafExpr) -> str:
    """Deterministic serialization; identical bundles give identical strings."""
    if isinstance(e, Line):
        return f"O({e.weight.a},{e.weight.b})"
    if isinstance(e, Twist):
        return canonical(normalize(e))
    if isinstance(e, Sum):
        n = normalize(e)
        if not isinstance(n, Sum):
            return canonical(n)
        return "Sum[" + ";".join(canonical(t) for t in n.terms) + "]"
    if isinstance(e, Kernel):
        body = repr((e.matrix, e.source, e.target, e.source_shift, e.target_shift, e.rank, e.chi_terms))
        digest = hashlib.sha256(body.encode()).hexdigest()[:16]
        return f"Ker[{e.name}#{digest}]"
    raise UnsupportedExpression(f"cannot serialize {e!r}")


def label(e: SheafExpr) -> str:
    if isinstance(e, Kernel):
        return e.name
    if isinstance(e, Line):
        return canonical(e)
    if isinstance(e, Twist):
        return f"{label(e.expr)}{e.weight}"
    return " + ".join(label(t) for t in e.terms)


def euler_char(e: SheafExpr) -> int:
    """Euler characteristic from line-bundle constituents."""
    e = normalize(e)
    if isinstance(e, Line):
        return euler_characteristic(e.weight)
    if isinstance(e, Sum):
        return sum(euler_char(t) for t in e.terms)
    if isinstance(e, Kernel):
        return sum(c * euler_characteristic(w) for c, w, _ in e.chi_terms)
    raise UnsupportedExpression(repr(e))


def rank_certificate(k: Kernel, p: int, seed: int = 20240601, npoints: int = 20) -> list[int]:
    """Ranks of the matrix at random F_p points; any deviation from the declared rank is fatal."""
    rng = random.Random(seed)
    ranks = []
    for _ in range(npoints):
        pt = random_point(p, rng)
        mat = [[poly_eval(thaw(x), pt, p) if x else 0 for x in row] for row in k.matrix]
        r = rank_dense(mat, p)
        ranks.append(r)
        if r != k.rank:
            raise ModelError(f"{k.name}: rank {r} at {pt}, declared {k.rank}")
    return ranks


def kernels_in(e: SheafExpr) -> list[Kernel]:
    e = normalize(e)
    if isinstance(e, Kernel):
        return [e]
    if isinstance(e, Sum):
        return [k for t in e.terms for k in kernels_in(t)]
    return []


# ---------------------------------------------------------------------------
# named atoms and rewriting


@dataclass(frozen=True)
class Named:
    """A bundle named on P^3, Q3 or X, resolved by ``rewrite``."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Frob:
    expr: object
    n: int


@dataclass(frozen=True)
class Tensor:
    factors: tuple


def SymU2Dual(k: int) -> Named:
    return Named("SU2*", (k,))


def OQ(m: int) -> Named:
    return Named("OQ", (m,))


def OP3(d: int) -> Named:
    return Named("OP", (d,))


U2 = Named("U2")
U2_DUAL = Named("U2*")
PSI1 = Named("Psi1")
OMEGA2 = Named("Omega2")
T_Q3 = Named("TQ")


@dataclass
class Rewritten:
    expr: SheafExpr
    markers: list = field(default_factory=list)
    rules: list = field(default_factory=list)


RULE_CITATIONS = {
    "R1": "S^k U2* = R q_* O(k,0) for k >= 0",
    "R2": "U2* = U2 (x) O_Q(1) via det U2 = O_Q(-1)",
    "R3": "pullback along a P^1-bundle preserves cohomology",
    "R4": "Omega^1_P4(1)|Q3 = ker(W* (x) O -> O(1))",
    "R5": "Omega^2_P4(2)|Q3 = ker(wedge^2 W* (x) O -> W* (x) O(1))",
    "R6": "T_Q3 = S^2 U2* for p odd",
}


def rewrite(e, p: Optional[int] = None) -> Rewritten:
    out = Rewritten(Line(Weight(0, 0)))
    out.expr = normalize(_rw(e, p, out))
    return out


def _rw(e, p, acc: Rewritten):
    if isinstance(e, (Line, Kernel)):
        return e
    if isinstance(e, Sum):
        return Sum(tuple(_rw(t, p, acc) for t in e.terms))
    if isinstance(e, Twist):
        return Twist(_rw(e.expr, p, acc), e.weight)
    if isinstance(e, Frob):
        if p is None:
            raise UnsupportedExpression("Frobenius pullback needs a prime")
        return frobenius_pull(normalize(_rw(e.expr, p, acc)), e.n, p)
    if isinstance(e, Tensor):
        parts = [normalize(_rw(f, p, acc)) for f in e.factors]
        result = parts[0]
        for f in parts[1:]:
            result = _tensor2(result, f)
        return result
    if isinstance(e, Named):
        return _rw_named(e, p, acc)
    raise UnsupportedExpression(f"unknown expression node {e!r}")


def _tensor2(a, b):
    if isinstance(a, Sum):
        return Sum(tuple(_tensor2(t, b) for t in a.terms))
    if isinstance(b, Sum):
        return Sum(tuple(_tensor2(a, t) for t in b.terms))
    if isinstance(a, Line):
        return normalize(b, a.weight)
    if isinstance(b, Line):
        return normalize(a, b.weight)
    if isinstance(a, Kernel) and isinstance(b, Kernel):
        return tensor_kernels(a, b)
    raise UnsupportedExpression(f"cannot tensor {a!r} and {b!r}")


def _rw_named(e: Named, p, acc: Rewritten):
    nm, args = e.name, e.args
    if nm == "SU2*":
        (k,) = args
        if k < 0:
            raise UnsupportedExpression("S^k U2* needs k >= 0")
        acc.rules.append("R1")
        acc.markers.append(f"H(Q3, S^{k} U2*) = H(X, O({k},0))")
        return Line(Weight(k, 0))
    if nm == "TQ":
        acc.rules.append("R6")
        return _rw_named(Named("SU2*", (2,)), p, acc)
    if nm == "OQ":
        acc.rules.append("R3")
        acc.markers.append(f"H(Q3, O({args[0]})) = H(X, O(0,{args[0]}))")
        return Line(Weight(0, args[0]))
    if nm == "OP":
        acc.rules.append("R3")
        acc.markers.append(f"H(P3, O({args[0]})) = H(X, O({args[0]},0))")
        return Line(Weight(args[0], 0))
    if nm == "U2":
        acc.rules.append("R3")
        return spinor_pullback()
    if nm == "U2*":
        acc.rules.extend(["R2", "R3"])
        return Twist(spinor_pullback(), Weight(0, 1))
    if nm == "Psi1":
        acc.rules.extend(["R4", "R3"])
        return psi1_kernel()
    if nm == "Omega2":
        acc.rules.extend(["R5", "R3"])
        return omega2_kernel()
    if nm in ("D", "S"):
        raise UnsupportedExpression(f"{nm}^k of a presented bundle is not supported")
    raise UnsupportedExpression(f"unknown bundle name {nm!r}")


# ---------------------------------------------------------------------------
# Euler characteristics of the inputs, from their own defining sequences


def chi_input(e: Named) -> int:
    """Euler characteristic of a named bundle computed without the rewrite rules."""
    if e.name == "SU2*":
        (k,) = e.args
        # filtration of S^k of the extension O(-1,1) -> U2* -> O(1,0) on X
        return sum(euler_characteristic(Weight(k - 2 * i, i)) for i in range(k + 1))
    if e.name == "U2*":
        # V (x) O -> U2* with kernel U2 (chi 0 from O(-1,0), O(1,-1))
        return 4 - (euler_characteristic(Weight(-1, 0)) + euler_characteristic(Weight(1, -1)))
    if e.name == "Psi1":
        return 5 * euler_characteristic(Weight(0, 0)) - euler_characteristic(Weight(0, 1))
    if e.name == "Omega2":
        psi1_1 = 5 * euler_characteristic(Weight(0, 1)) - euler_characteristic(Weight(0, 2))
        return 10 - psi1_1
    if e.name == "TQ":
        # Euler sequence of P^4 and the normal bundle O(2) of the quadric
        return 5 * euler_characteristic(Weight(0, 1)) - 1 - euler_characteristic(Weight(0, 2))
    raise UnsupportedExpression(e.name)
