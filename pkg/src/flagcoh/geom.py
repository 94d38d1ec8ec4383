"""Coordinate model of the symplectic flag variety inside P^3 x P^5.

A point is a pair (line, Lagrangian plane) with the line inside the plane.
Coordinates are x1..x4 on P^3 and the Plucker coordinates p12..p34 on P^5,
with symplectic form x1^x3 + x2^x4.  Polynomials are dicts mapping 10-tuples
of exponents (in ``VARS`` order) to integer coefficients.
"""
from __future__ import annotations

import itertools
import random
from operator import add, sub
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
import sympy as sp

from .fplinalg import rank_dense
from .rootdata import Weight

VARS = ("x1", "x2", "x3", "x4", "p12", "p13", "p14", "p23", "p24", "p34")
NVARS = len(VARS)
VAR_INDEX = {v: i for i, v in enumerate(VARS)}
X_VARS = (0, 1, 2, 3)
P_VARS = (4, 5, 6, 7, 8, 9)
PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))
PAIR_INDEX = {pr: 4 + k for k, pr in enumerate(PAIRS)}

# torus weights in epsilon coordinates; basis vector e3 has weight -e1, e4 has -e2
_BASIS_WT = {1: (1, 0), 2: (0, 1), 3: (-1, 0), 4: (0, -1)}
WEIGHTS: tuple[tuple[int, int], ...] = tuple(
    [_BASIS_WT[i] for i in (1, 2, 3, 4)]
    + [(_BASIS_WT[j][0] + _BASIS_WT[k][0], _BASIS_WT[j][1] + _BASIS_WT[k][1]) for j, k in PAIRS]
)

# Groebner basis variable order (grevlex); p24 first so that the linear form eliminates it
GB_ORDER = ("p24", "p13", "x1", "x2", "x3", "x4", "p12", "p14", "p23", "p34")

MODEL_VERSION = "incidence-P3xP5/grevlex-v1"

Mono = tuple[int, ...]
Poly = dict


def mono_var(i: int, k: int = 1) -> Mono:
    e = [0] * NVARS
    e[i] = k
    return tuple(e)


def mono_mul(*ms: Mono) -> Mono:
    return tuple(map(sum, zip(*ms)))


def mono_divides(a: Mono, b: Mono) -> bool:
    return all(x <= y for x, y in zip(a, b))


def bidegree(m: Mono) -> tuple[int, int]:
    return (m[0] + m[1] + m[2] + m[3], sum(m[4:]))


def torus_weight(m: Mono) -> tuple[int, int]:
    e1 = e2 = 0
    for i, k in enumerate(m):
        if k:
            e1 += k * WEIGHTS[i][0]
            e2 += k * WEIGHTS[i][1]
    return (e1, e2)


def poly_mul(f: Poly, g: Poly, p: Optional[int] = None) -> Poly:
    out: dict = defaultdict(int)
    for m1, c1 in f.items():
        for m2, c2 in g.items():
            out[mono_mul(m1, m2)] += c1 * c2
    if p is None:
        return {m: c for m, c in out.items() if c}
    return {m: c % p for m, c in out.items() if c % p}


def poly_pow(f: Poly, k: int, p: Optional[int] = None) -> Poly:
    out: Poly = {tuple([0] * NVARS): 1}
    base = dict(f)
    while k:
        if k & 1:
            out = poly_mul(out, base, p)
        k >>= 1
        if k:
            base = poly_mul(base, base, p)
    return out


def poly_eval(f: Poly, point: Sequence[int], p: int) -> int:
    total = 0
    for m, c in f.items():
        t = c
        for v, k in zip(point, m):
            if k:
                t = t * pow(v, k, p)
        total += t
    return total % p


def poly_diff(f: Poly, i: int) -> Poly:
    out: Poly = {}
    for m, c in f.items():
        if m[i]:
            e = list(m)
            e[i] -= 1
            out[tuple(e)] = out.get(tuple(e), 0) + c * m[i]
    return {m: c for m, c in out.items() if c}


def poly_bidegree(f: Poly) -> Optional[tuple[int, int]]:
    degs = {bidegree(m) for m in f}
    if len(degs) > 1:
        raise ValueError("polynomial is not bihomogeneous")
    return degs.pop() if degs else None


def poly_weight(f: Poly) -> Optional[tuple[int, int]]:
    wts = {torus_weight(m) for m in f}
    if len(wts) > 1:
        raise ValueError("polynomial is not torus-homogeneous")
    return wts.pop() if wts else None


def _lin(*terms: tuple[int, str, str]) -> Poly:
    out: Poly = {}
    for c, a, b in terms:
        m = mono_mul(mono_var(VAR_INDEX[a]), mono_var(VAR_INDEX[b])) if b else mono_var(VAR_INDEX[a])
        out[m] = out.get(m, 0) + c
    return out


def pvar(j: int, k: int) -> int:
    return PAIR_INDEX[(j, k)]


# ---------------------------------------------------------------------------
# the ideal


def ideal_generators() -> dict[str, Poly]:
    """The linear form, the Plucker quadric and the four incidence forms."""
    return {
        "L": _lin((1, "p13", ""), (1, "p24", "")),
        "P": _lin((1, "p12", "p34"), (-1, "p13", "p24"), (1, "p14", "p23")),
        "I1": _lin((1, "x1", "p23"), (-1, "x2", "p13"), (1, "x3", "p12")),
        "I2": _lin((1, "x1", "p24"), (-1, "x2", "p14"), (1, "x4", "p12")),
        "I3": _lin((1, "x1", "p34"), (-1, "x3", "p14"), (1, "x4", "p13")),
        "I4": _lin((1, "x2", "p34"), (-1, "x3", "p24"), (1, "x4", "p23")),
    }


def symplectic_form(u: Sequence[int], v: Sequence[int]) -> int:
    return u[0] * v[2] - u[2] * v[0] + u[1] * v[3] - u[3] * v[1]


def plucker(u: Sequence[int], v: Sequence[int]) -> list[int]:
    return [u[j - 1] * v[k - 1] - u[k - 1] * v[j - 1] for j, k in PAIRS]


class ModelError(RuntimeError):
    """The coordinate model failed an internal consistency check."""


class ResourceExhausted(RuntimeError):
    """A computation exceeded the configured size budget."""


def _sympy_gens():
    syms = sp.symbols(" ".join(VARS))
    return syms, [syms[VAR_INDEX[v]] for v in GB_ORDER]


def _to_sympy(f: Poly, syms) -> sp.Expr:
    return sp.Add(*[c * sp.Mul(*[s**k for s, k in zip(syms, m)]) for m, c in f.items()])


@lru_cache(maxsize=None)
def groebner_rules(modulus: int = 0) -> tuple[tuple[Mono, tuple[tuple[int, Mono], ...]], ...]:
    """Reduced grevlex Groebner basis as rewrite rules ``LT -> -tail``.

    ``modulus = 0`` means over Q.  Every element is required to be monic with
    integer coefficients so that the same rules reduce over Z and any F_p.
    """
    syms, gens = _sympy_gens()
    polys = [_to_sympy(g, syms) for g in ideal_generators().values()]
    kw = {"modulus": modulus} if modulus else {}
    G = sp.groebner(polys, *gens, order="grevlex", **kw)
    rules = []
    for g in G.exprs:
        P = sp.Poly(g, *gens, **kw)
        terms = P.terms(order="grevlex")
        lm, lc = terms[0]

        def conv(mono):
            e = [0] * NVARS
            for name, k in zip(GB_ORDER, mono):
                e[VAR_INDEX[name]] += k
            return tuple(e)

        lc = int(lc)
        if lc != 1:
            raise ModelError(f"Groebner element with leading coefficient {lc}")
        tail = []
        for m, c in terms[1:]:
            c = int(c)
            if modulus and c > modulus // 2:
                c -= modulus
            tail.append((-c, conv(m)))
        rules.append((conv(lm), tuple(tail)))
    rules.sort()
    return tuple(rules)


def check_groebner_characteristic(p: int) -> None:
    """The rules over Q must reduce to the rules over F_p."""
    over_q = groebner_rules(0)
    over_p = groebner_rules(p)
    red = tuple((lt, tuple(((c % p), m) for c, m in tail)) for lt, tail in over_q)
    red_p = tuple((lt, tuple(((c % p), m) for c, m in tail)) for lt, tail in over_p)
    if red != red_p:
        raise ModelError(f"Groebner basis over F_{p} differs from the one over Q")


def _cond(var: str, e: Sequence[int]) -> str:
    return " and ".join(f"{var}[{i}] >= {k}" if k > 1 else f"{var}[{i}]" for i, k in enumerate(e) if k) or "True"


def _compile_divisor_test(leading: Sequence[Mono]):
    """Generated function returning the index of the first leading term dividing m, else -1."""
    lines = ["def find(m):"]
    for k, lt in enumerate(leading):
        lines.append(f"    if {_cond('m', lt)}: return {k}")
    lines.append("    return -1")
    ns: dict = {}
    exec("\n".join(lines), ns)
    return ns["find"]


def _compile_pair_test(mixed):
    """Generated test: is the monomial (x-part, p-part) divisible by a mixed leading term."""
    lines = ["def test(xe, pe):"]
    for xs, ps in mixed:
        lines.append(f"    if {_cond('pe', ps)} and {_cond('xe', xs)}: return True")
    lines.append("    return False")
    ns: dict = {}
    exec("\n".join(lines), ns)
    return ns["test"]


class QuotientRing:
    """Normal forms and standard-monomial bases of the coordinate ring over F_p."""

    def __init__(self, p: int):
        check_groebner_characteristic(p)
        self.p = p
        self.rules = groebner_rules(0)
        self.leading = [lt for lt, _ in self.rules]
        self._nf: dict[Mono, dict[Mono, int]] = {}
        self._analyze_leading_terms()

    # -- leading term structure -------------------------------------------------
    def _analyze_leading_terms(self):
        self.killed = set()
        self.cap = [None] * NVARS
        self.pure_x, self.pure_p, self.mixed = [], [], []
        for lt in self.leading:
            supp = [i for i, k in enumerate(lt) if k]
            if len(supp) == 1:
                i = supp[0]
                if lt[i] == 1:
                    self.killed.add(i)
                else:
                    c = self.cap[i]
                    self.cap[i] = lt[i] - 1 if c is None else min(c, lt[i] - 1)
                continue
            xs = lt[:4]
            ps = lt[4:]
            if not any(ps):
                self.pure_x.append(xs)
            elif not any(xs):
                self.pure_p.append(ps)
            else:
                self.mixed.append((xs, ps))
        self._find = _compile_divisor_test(self.leading)
        self._mixed_test = _compile_pair_test(self.mixed)

    # -- normal form ------------------------------------------------------------
    def _rule_for(self, m: Mono):
        k = self._find(m)
        return None if k < 0 else self.rules[k]

    def nf_mono(self, m: Mono) -> dict[Mono, int]:
        cache = self._nf
        hit = cache.get(m)
        if hit is not None:
            return hit
        p = self.p
        stack = [m]
        while stack:
            t = stack[-1]
            if t in cache:
                stack.pop()
                continue
            rule = self._rule_for(t)
            if rule is None:
                cache[t] = {t: 1}
                stack.pop()
                continue
            lt, tail = rule
            q = tuple(map(sub, t, lt))
            kids = [(c, tuple(map(add, mt, q))) for c, mt in tail]
            missing = [k for _, k in kids if k not in cache]
            if missing:
                stack.extend(missing)
                continue
            out: dict[Mono, int] = defaultdict(int)
            for c, k in kids:
                for mm, v in cache[k].items():
                    out[mm] = (out[mm] + c * v) % p
            cache[t] = {k: v for k, v in out.items() if v}
            stack.pop()
        return cache[m]

    def nf(self, f: Poly) -> dict[Mono, int]:
        out: dict[Mono, int] = defaultdict(int)
        for m, c in f.items():
            for mm, v in self.nf_mono(m).items():
                out[mm] = (out[mm] + c * v) % self.p
        return {k: v for k, v in out.items() if v}

    def is_standard(self, m: Mono) -> bool:
        return self._rule_for(m) is None

    # -- standard monomials -----------------------------------------------------
    @lru_cache(maxsize=None)
    def _xgroups(self, A: int) -> dict:
        g = defaultdict(list)
        for u1 in range(A + 1):
            for u2 in range(A + 1 - u1):
                for u3 in range(A + 1 - u1 - u2):
                    u = (u1, u2, u3, A - u1 - u2 - u3)
                    if any(all(a <= b for a, b in zip(lt, u)) for lt in self.pure_x):
                        continue
                    g[(u[0] - u[2], u[1] - u[3])].append(u)
        return dict(g)

    @lru_cache(maxsize=None)
    def _pgroups(self, B: int) -> dict:
        free = [i for i in P_VARS if i not in self.killed]
        g = defaultdict(list)

        def rec(pos, left, acc):
            if pos == len(free) - 1:
                i = free[pos]
                if self.cap[i] is not None and left > self.cap[i]:
                    return
                yield acc + [(i, left)]
                return
            i = free[pos]
            top = left if self.cap[i] is None else min(left, self.cap[i])
            for k in range(top + 1):
                yield from rec(pos + 1, left - k, acc + [(i, k)])

        for assign in rec(0, B, []):
            e = [0] * 6
            for i, k in assign:
                e[i - 4] = k
            e = tuple(e)
            if any(all(a <= b for a, b in zip(lt, e)) for lt in self.pure_p):
                continue
            w = torus_weight((0, 0, 0, 0) + e)
            g[w].append(e)
        return dict(g)

    @lru_cache(maxsize=None)
    def basis(self, A: int, B: int, w: tuple[int, int]) -> tuple[Mono, ...]:
        """Standard monomials of bidegree (A, B) and torus weight ``w``, sorted."""
        if A < 0 or B < 0:
            return ()
        xg = self._xgroups(A)
        pg = self._pgroups(B)
        out = []
        test = self._mixed_test
        for wx, xs in xg.items():
            ps = pg.get((w[0] - wx[0], w[1] - wx[1]))
            if not ps:
                continue
            for pe in ps:
                for xe in xs:
                    if not test(xe, pe):
                        out.append(xe + pe)
        out.sort()
        return tuple(out)

    @lru_cache(maxsize=None)
    def position(self, A: int, B: int, w: tuple[int, int]) -> dict:
        return {m: k for k, m in enumerate(self.basis(A, B, w))}

    def release_caches(self) -> None:
        """Drop memoized normal forms and bases; they are rebuilt on demand."""
        self._nf.clear()
        for f in (QuotientRing.basis, QuotientRing.position, QuotientRing._xgroups, QuotientRing._pgroups):
            f.cache_clear()

    def cache_size(self) -> int:
        return len(self._nf) + QuotientRing.basis.cache_info().currsize

    def weights_in_degree(self, A: int, B: int) -> list[tuple[int, int]]:
        if A < 0 or B < 0:
            return []
        ws = set()
        for wx in self._xgroups(A):
            for wp in self._pgroups(B):
                ws.add((wx[0] + wp[0], wx[1] + wp[1]))
        return sorted(ws)

    def hilbert(self, A: int, B: int) -> int:
        return sum(len(self.basis(A, B, w)) for w in self.weights_in_degree(A, B))


_RINGS: dict[int, QuotientRing] = {}


def quotient_ring(p: int) -> QuotientRing:
    r = _RINGS.get(p)
    if r is None:
        r = _RINGS[p] = QuotientRing(p)
    return r


# ---------------------------------------------------------------------------
# charts


@dataclass(frozen=True, order=True)
class Chart:
    line: int
    plane: tuple[int, int]

    @property
    def x_var(self) -> int:
        return self.line - 1

    @property
    def p_var(self) -> int:
        return PAIR_INDEX[self.plane]

    @property
    def monomial(self) -> Mono:
        return mono_mul(mono_var(self.x_var), mono_var(self.p_var))

    def fixed_point(self) -> tuple[int, ...]:
        pt = [0] * NVARS
        pt[self.x_var] = 1
        pt[self.p_var] = 1
        return tuple(pt)

    def __str__(self) -> str:
        return f"({self.line},{self.plane[0]}{self.plane[1]})"


LAGRANGIAN_PLANES = ((1, 2), (1, 4), (2, 3), (3, 4))


def fixed_points() -> list[Chart]:
    out = []
    for pl in LAGRANGIAN_PLANES:
        e = [[1 if i == j - 1 else 0 for i in range(4)] for j in pl]
        assert symplectic_form(e[0], e[1]) == 0
        for i in pl:
            out.append(Chart(i, pl))
    return sorted(out)


def inverted_variables(charts: Iterable[Chart]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    xs = sorted({c.x_var for c in charts})
    ps = sorted({c.p_var for c in charts})
    return tuple(xs), tuple(ps)


@dataclass(frozen=True)
class ChartModel:
    variables: tuple[str, ...] = VARS
    generators: tuple[str, ...] = ("L", "P", "I1", "I2", "I3", "I4")
    charts: tuple[Chart, ...] = field(default_factory=lambda: tuple(fixed_points()))
    version: str = MODEL_VERSION

    def ideal(self) -> dict[str, Poly]:
        return ideal_generators()

    def ring(self, p: int) -> QuotientRing:
        return quotient_ring(p)


# ---------------------------------------------------------------------------
# points over F_p


def _projective_points(n: int, p: int) -> np.ndarray:
    """Normalized representatives of P^{n-1}(F_p) as rows."""
    pts = []
    for lead in range(n):
        for tail in itertools.product(range(p), repeat=n - lead - 1):
            pts.append([0] * lead + [1] + list(tail))
    return np.array(pts, dtype=np.int64)


def _eval_np(f: Poly, X: np.ndarray, P: np.ndarray, p: int) -> np.ndarray:
    """Evaluate a bihomogeneous form on all pairs (rows of X) x (rows of P)."""
    full = np.zeros((len(X), len(P)), dtype=np.int64)
    for m, c in f.items():
        xs = np.ones(len(X), dtype=np.int64)
        for i in X_VARS:
            for _ in range(m[i]):
                xs = xs * X[:, i] % p
        ps = np.ones(len(P), dtype=np.int64)
        for j, i in enumerate(P_VARS):
            for _ in range(m[i]):
                ps = ps * P[:, j] % p
        full = (full + c * np.outer(xs, ps)) % p
    return full


def enumerate_points(p: int) -> list[tuple[int, ...]]:
    """All F_p points of X by exhaustive search over P^3 x P^5."""
    if p > 7:
        raise ResourceExhausted(f"exhaustive point enumeration refused for p={p} > 7")
    gens = ideal_generators()
    Xs = _projective_points(4, p)
    Ps = _projective_points(6, p)
    one = np.ones((1, 4), dtype=np.int64)
    keep = np.ones(len(Ps), dtype=bool)
    for name in ("L", "P"):
        keep &= _eval_np(gens[name], one, Ps, p)[0] == 0
    Ps = Ps[keep]
    ok = np.ones((len(Xs), len(Ps)), dtype=bool)
    for name in ("I1", "I2", "I3", "I4"):
        ok &= _eval_np(gens[name], Xs, Ps, p) == 0
    ii, jj = np.nonzero(ok)
    return [tuple(int(v) for v in Xs[i]) + tuple(int(v) for v in Ps[j]) for i, j in zip(ii, jj)]


def point_count(p: int) -> int:
    if p % 2 == 0 or p < 3 or not sp.isprime(p):
        raise ValueError(f"point_count needs an odd prime, got {p}")
    return len(enumerate_points(p))


def on_variety(point: Sequence[int], p: int) -> bool:
    if not any(point[i] % p for i in X_VARS) or not any(point[i] % p for i in P_VARS):
        return False
    return all(poly_eval(g, point, p) == 0 for g in ideal_generators().values())


def charts_containing(point: Sequence[int], p: int) -> list[Chart]:
    return [c for c in fixed_points() if point[c.x_var] % p and point[c.p_var] % p]


def jacobian_rank_at(point: Sequence[int], p: int) -> int:
    """Rank of the Jacobian of the six generators in an affine chart of P^3 x P^5."""
    point = tuple(int(v) % p for v in point)
    if len(point) != NVARS or not on_variety(point, p):
        raise ValueError("point is not an F_p point of the flag variety")
    charts = charts_containing(point, p)
    if not charts:
        raise ValueError("point lies in none of the fixed-point charts")
    ch = charts[0]
    sx = pow(point[ch.x_var], -1, p)
    sp_ = pow(point[ch.p_var], -1, p)
    pt = [v * sx % p for v in point[:4]] + [v * sp_ % p for v in point[4:]]
    cols = [i for i in range(NVARS) if i not in (ch.x_var, ch.p_var)]
    rows = []
    for g in ideal_generators().values():
        rows.append([poly_eval(poly_diff(g, i), pt, p) for i in cols])
    return rank_dense(rows, p)


def random_point(p: int, rng: random.Random) -> tuple[int, ...]:
    """Uniform-ish F_p point: a random line inside a random Lagrangian plane."""
    while True:
        u = [rng.randrange(p) for _ in range(4)]
        v = [rng.randrange(p) for _ in range(4)]
        if symplectic_form(u, v) % p:
            continue
        pl = [c % p for c in plucker(u, v)]
        if not any(pl):
            continue
        s, t = rng.randrange(p), rng.randrange(p)
        x = [(s * a + t * b) % p for a, b in zip(u, v)]
        if not any(x):
            continue
        pt = tuple(x) + tuple(pl)
        assert on_variety(pt, p)
        return pt


def big_cell(chart: Chart):
    """Symbolic parametrization of the affine cell around a fixed point.

    The plane is spanned by u = e_j + (coords on the complement) and
    v = e_k + ..., constrained to be Lagrangian; the line is u + t*v (or
    v + t*u).  Returns (params, point) with point a list of 10 sympy exprs.
    """
    j, k = chart.plane
    comp = [i for i in (1, 2, 3, 4) if i not in chart.plane]
    a, b, c, d, t = sp.symbols("a b c d t")
    u = [0] * 4
    v = [0] * 4
    u[j - 1], v[k - 1] = 1, 1
    u[comp[0] - 1], u[comp[1] - 1] = a, b
    v[comp[0] - 1], v[comp[1] - 1] = c, d
    omega = sp.expand(symplectic_form(u, v))
    var = next(s for s in (d, c, b, a) if sp.degree(omega, s) == 1 and omega.coeff(s, 1).is_number)
    sol = sp.solve(omega, var)[0]
    u = [sp.sympify(e).subs(var, sol) for e in u]
    v = [sp.sympify(e).subs(var, sol) for e in v]
    if chart.line == j:
        x = [ui + t * vi for ui, vi in zip(u, v)]
    else:
        x = [vi + t * ui for ui, vi in zip(u, v)]
    params = [s for s in (a, b, c, d) if s != var] + [t]
    return params, [sp.expand(e) for e in x + plucker(u, v)]


# ---------------------------------------------------------------------------
# section spaces


@dataclass
class SectionSpace:
    """Sections of O(degree) over the intersection of ``charts`` with pole order <= T.

    The basis consists of Laurent monomials m / (prod of inverted vars)^T with
    m a standard monomial; relations are already divided out by taking normal
    forms, so the relation rank is zero by construction.
    """

    degree: Weight
    charts: frozenset
    T: int
    p: int
    inverted: tuple[tuple[int, ...], tuple[int, ...]]
    basis: list

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def laurent(self, m: Mono) -> tuple[int, ...]:
        e = list(m)
        for i in self.inverted[0] + self.inverted[1]:
            e[i] -= self.T
        return tuple(e)


def section_space(
    degree: Weight,
    charts: Iterable[Chart],
    T: int,
    p: int,
    weight: Optional[tuple[int, int]] = None,
    max_basis: Optional[int] = None,
) -> SectionSpace:
    charts = frozenset(charts)
    if not charts:
        raise ValueError("section_space needs at least one chart")
    if T < 0:
        raise ValueError("truncation must be non-negative")
    xs, ps = inverted_variables(charts)
    R = quotient_ring(p)
    A = degree.a + T * len(xs)
    B = degree.b + T * len(ps)
    shift = torus_weight(mono_mul(*(mono_var(i, T) for i in xs + ps))) if T else (0, 0)
    ws = [weight] if weight is not None else R.weights_in_degree(A, B)
    basis = []
    for w in ws:
        target = (w[0] + shift[0], w[1] + shift[1]) if weight is not None else w
        basis.extend(R.basis(A, B, target))
        if max_basis is not None and len(basis) > max_basis:
            raise ResourceExhausted(
                f"section space for degree {degree}, T={T} exceeds budget {max_basis}"
            )
    return SectionSpace(degree, charts, T, p, (xs, ps), basis)
