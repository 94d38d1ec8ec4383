"""Torus-graded truncated Cech cohomology over F_p.

For a cover by the opens D(x_i p_jk), the sections of O(lam) over an
intersection with inverted variables (I, K) and pole order at most T are
identified with the degree ``lam + T*(|I|, |K|)`` piece of the coordinate
ring, divided by (prod I * prod K)^T.  Restriction maps become
multiplication by the newly inverted variables to the power T followed by a
normal form.  Everything is graded by the torus weight, so the complex
splits into one small complex per weight; only dominant weights are
computed and the totals are recovered from Weyl-orbit sizes.

The truncated complex is a complex of global sections of a resolution of
the sheaf by the twists L(T*D) over the cover.  It computes the true
cohomology as soon as every such twist has vanishing higher cohomology,
which ``exactness_twist`` guarantees through Kempf vanishing on the pieces
of a line-bundle filtration.  The run at T + step is an independent
consistency check.
"""
from __future__ import annotations

import concurrent.futures as cf
import hashlib
import itertools
import json
import multiprocessing as mp
import os
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from operator import add
from pathlib import Path
from typing import Optional

from . import rootdata
from .fplinalg import rank_mod_p
from .geom import (
    MODEL_VERSION,
    NVARS,
    WEIGHTS,
    ModelError,
    ResourceExhausted,
    fixed_points,
    quotient_ring,
)
from .rootdata import Weight, euler_characteristic
from .sheafexpr import Kernel, Line, Sum, canonical, euler_char, label, normalize, thaw

COUNTERS: Counter = Counter()
RELEASE_ABOVE = 20000  # complexes larger than this drop the ring caches afterwards
CACHE_LIMIT = 200000  # memoized normal forms plus bases kept across complexes

X_COVER = (0, 1, 2, 3)
P_COVER = (4, 6, 7, 9)  # p12, p14, p23, p34


class Unstable(RuntimeError):
    """Truncation schedule exhausted without two agreeing runs."""


@dataclass(frozen=True)
class Schedule:
    start: Optional[int] = None  # None: use the exactness bound of the expression
    step: int = 2
    t_max: Optional[int] = None  # None: start + 12
    cover: str = "auto"  # auto: quadric for bundles pulled back from Q3, product otherwise
    margin: int = 2
    jobs: int = 1
    check_d2: bool = True
    max_dim: Optional[int] = 160000  # per-weight budget on the total size of the complex; None for no limit

    def signature(self) -> str:
        return f"start={self.start};step={self.step};tmax={self.t_max};cover={self.cover};margin={self.margin}"


DEFAULT_SCHEDULE = Schedule()


@dataclass
class BettiVector:
    h: tuple
    chi: int
    p: int
    T_used: int
    stabilized: bool
    expr: str = ""
    certificates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.h = tuple(int(v) for v in self.h)
        if self.chi != sum((-1) ** i * v for i, v in enumerate(self.h)):
            raise ValueError("chi does not match the alternating sum")

    def __getitem__(self, i: int) -> int:
        return self.h[i]

    def vanishes(self, i: int) -> bool:
        return self.h[i] == 0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "BettiVector":
        return cls(tuple(d["h"]), d["chi"], d["p"], d["T_used"], d["stabilized"], d.get("expr", ""), d.get("certificates", {}))

    def __str__(self) -> str:
        st = "stabilized" if self.stabilized else "UNSTABLE"
        return " ".join(map(str, self.h)) + f", chi={self.chi}, T={self.T_used}, {st}"


# ---------------------------------------------------------------------------
# cover combinatorics


def _nonempty_subsets(s):
    return [c for k in range(1, len(s) + 1) for c in itertools.combinations(s, k)]


@lru_cache(maxsize=None)
def cover_structure(cover: str):
    """Terms (key, cech degree, I, K) up to degree 5, and signed edges key -> (key', sign, added vars)."""
    terms = []
    edges = {}
    if cover == "product":
        for I in _nonempty_subsets(X_COVER):
            for K in _nonempty_subsets(P_COVER):
                n = len(I) + len(K) - 2
                if n <= 5:
                    terms.append(((I, K), n, I, K))
        for key, n, I, K in terms:
            out = []
            if n < 5:
                for v in X_COVER:
                    if v not in I:
                        I2 = tuple(sorted(I + (v,)))
                        out.append(((I2, K), (-1) ** I2.index(v), (v,)))
                for v in P_COVER:
                    if v not in K:
                        K2 = tuple(sorted(K + (v,)))
                        out.append(((I, K2), (-1) ** (len(I) - 1) * (-1) ** K2.index(v), (v,)))
            edges[key] = out
    elif cover == "charts":
        charts = fixed_points()
        info = {}
        for S in _nonempty_subsets(tuple(range(len(charts)))):
            n = len(S) - 1
            if n > 5:
                continue
            I = tuple(sorted({charts[c].x_var for c in S}))
            K = tuple(sorted({charts[c].p_var for c in S}))
            terms.append((S, n, I, K))
            info[S] = (I, K)
        for key, n, I, K in terms:
            out = []
            if n < 5:
                for c in range(len(charts)):
                    if c in key:
                        continue
                    S2 = tuple(sorted(key + (c,)))
                    I2, K2 = info[S2]
                    added = tuple(v for v in I2 if v not in I) + tuple(v for v in K2 if v not in K)
                    out.append((S2, (-1) ** S2.index(c), added))
            edges[key] = out
    elif cover == "quadric":
        # only the p-charts: the x-degree 0 slice of the ring is the coordinate ring of Q3
        for K in _nonempty_subsets(P_COVER):
            terms.append(((K,), len(K) - 1, (), K))
        for key, n, I, K in terms:
            out = []
            for v in P_COVER:
                if v not in K:
                    K2 = tuple(sorted(K + (v,)))
                    out.append(((K2,), (-1) ** K2.index(v), (v,)))
            edges[key] = out
    elif cover == "projective":
        # only the x-charts: the p-degree 0 slice of the ring is the coordinate ring of P3
        for I in _nonempty_subsets(X_COVER):
            terms.append(((I,), len(I) - 1, I, ()))
        for key, n, I, K in terms:
            out = []
            for v in X_COVER:
                if v not in I:
                    I2 = tuple(sorted(I + (v,)))
                    out.append(((I2,), (-1) ** I2.index(v), (v,)))
            edges[key] = out
    else:
        raise ValueError(f"unknown cover {cover!r}")
    return terms, edges


# ---------------------------------------------------------------------------
# atoms: a line bundle or a kernel bundle, flattened for the workers


@dataclass(frozen=True)
class Atom:
    sources: tuple  # ((a, b), shift)
    targets: tuple
    entries: tuple  # ((j, i, ((mono, coef), ...)), ...)
    pieces: tuple  # (coef, (a, b), shift) -- class in the Grothendieck group
    bound: tuple  # exactness pole orders (x-direction, p-direction)


def atom_of(e) -> Atom:
    if isinstance(e, Line):
        w = e.weight
        return Atom((((w.a, w.b), (0, 0)),), (), (), ((1, (w.a, w.b), (0, 0)),), (max(0, -w.a), max(0, -w.b)))
    if isinstance(e, Kernel):
        return Atom(
            tuple(((s.a, s.b), sh) for s, sh in zip(e.source, e.source_shift)),
            tuple(((t.a, t.b), sh) for t, sh in zip(e.target, e.target_shift)),
            tuple((j, i, x) for j, row in enumerate(e.matrix) for i, x in enumerate(row) if x),
            tuple((c, (w.a, w.b), sh) for c, w, sh in e.chi_terms),
            e.exactness_twist(),
        )
    raise TypeError(f"not an atom: {e!r}")


def _wsum(I, K, T):
    e1 = e2 = 0
    for v in I:
        e1 += T[0] * WEIGHTS[v][0]
        e2 += T[0] * WEIGHTS[v][1]
    for v in K:
        e1 += T[1] * WEIGHTS[v][0]
        e2 += T[1] * WEIGHTS[v][1]
    return (e1, e2)


def betti_at_weight(atom: Atom, p: int, T: tuple, mu: tuple, cover: str = "product", check_d2: bool = True, max_dim=None):
    """Betti numbers of the weight-``mu`` part of the truncated complex.

    ``T = (Tx, Tp)`` are the pole orders along x- and p-variables.
    Returns (h, dims) where dims are the sizes of the source terms by degree.
    For kernels the kernel complex is never formed explicitly: with Phi the
    termwise matrix and d the Cech differential of the source complex,
    dim K^n = dim F^n - rank Phi^n and rank(d|K^n) = rank[Phi^n ; d^n] - rank Phi^n.
    """
    R = quotient_ring(p)
    terms, edges = cover_structure(cover)
    fbase = {}
    gbase = {}
    dimsF = [0] * 6
    dimsG = [0] * 6
    for key, n, I, K in terms:
        s = _wsum(I, K, T)
        for ci, ((a, b), sh) in enumerate(atom.sources):
            A, B, w = a + T[0] * len(I), b + T[1] * len(K), (mu[0] + sh[0] + s[0], mu[1] + sh[1] + s[1])
            bs = R.basis(A, B, w)
            fbase[(key, ci)] = (dimsF[n], bs, (A, B, w))
            dimsF[n] += len(bs)
        if n <= 4:
            for cj, ((a, b), sh) in enumerate(atom.targets):
                A, B, w = a + T[0] * len(I), b + T[1] * len(K), (mu[0] + sh[0] + s[0], mu[1] + sh[1] + s[1])
                bs = R.basis(A, B, w)
                gbase[(key, cj)] = (dimsG[n], bs, (A, B, w))
                dimsG[n] += len(bs)
    total = sum(dimsF) + sum(dimsG)
    if max_dim is not None and total > max_dim:
        raise ResourceExhausted(f"complex at weight {mu}, T={T} has {total} > {max_dim} basis elements")
    if dimsF[0] + dimsF[1] + dimsF[2] + dimsF[3] + dimsF[4] == 0:
        return (0, 0, 0, 0, 0), tuple(dimsF)

    nf = R.nf_mono
    by_source = {}
    for j, i, x in atom.entries:
        by_source.setdefault(i, []).append((j, x))

    d_rows = [[] for _ in range(5)]
    phi_rank = [0] * 5
    stacked_rank = [0] * 5
    for n in range(5):
        rows_n = d_rows[n]
        phi_rows_all = []
        for key, tn, I, K in terms:
            if tn != n:
                continue
            outs = edges[key]
            for ci in range(len(atom.sources)):
                off, bs, (A, B, w) = fbase[(key, ci)]
                if not bs:
                    continue
                targets = []
                for k2, sign, added in outs:
                    toff, tbs, tdeg = fbase[(k2, ci)]
                    if not tbs:
                        continue
                    pos = R.position(*tdeg)
                    bump = [0] * NVARS
                    for v in added:
                        bump[v] = T[0] if v < 4 else T[1]
                    targets.append((toff, pos, sign, tuple(bump)))
                phis = []
                for cj, x in by_source.get(ci, ()):
                    goff, gbs, gdeg = gbase[(key, cj)]
                    if gbs:
                        phis.append((goff, R.position(*gdeg), x))
                local = []
                for m in bs:
                    row = {}
                    for toff, pos, sign, bump in targets:
                        mm = tuple(map(add, m, bump))
                        for k, c in nf(mm).items():
                            col = toff + pos[k]
                            row[col] = (row.get(col, 0) + sign * c) % p
                    row = {c: v for c, v in row.items() if v}
                    rows_n.append(row)
                    if phis:
                        prow = {}
                        for goff, pos, x in phis:
                            for em, ec in x:
                                mm = tuple(map(add, m, em))
                                for k, c in nf(mm).items():
                                    col = goff + pos[k]
                                    prow[col] = (prow.get(col, 0) + ec * c) % p
                        prow = {c: v for c, v in prow.items() if v}
                        local.append(prow)
                    elif atom.targets:
                        local.append({})
                if atom.targets:
                    phi_rows_all.extend(local)
            if atom.targets:
                # Phi is block diagonal over terms: rank per term
                start = len(phi_rows_all) - sum(len(fbase[(key, ci)][1]) for ci in range(len(atom.sources)))
                phi_rank[n] += rank_mod_p(phi_rows_all[start:], p)
        if atom.targets:
            shift = dimsF[n + 1]
            stacked = []
            for r, pr in zip(rows_n, phi_rows_all):
                s = dict(r)
                for c, v in pr.items():
                    s[shift + c] = v
                stacked.append(s)
            stacked_rank[n] = rank_mod_p(stacked, p)
        else:
            stacked_rank[n] = rank_mod_p(rows_n, p)

    if check_d2:
        for n in range(4):
            nxt = d_rows[n + 1]
            for r in d_rows[n]:
                acc = {}
                for c, v in r.items():
                    for c2, v2 in nxt[c].items():
                        acc[c2] = (acc.get(c2, 0) + v * v2) % p
                if any(acc.values()):
                    raise ModelError(f"d^2 != 0 at weight {mu}, T={T}")

    kdim = [dimsF[n] - phi_rank[n] for n in range(5)]
    dr = [stacked_rank[n] - phi_rank[n] for n in range(5)]
    h = tuple(kdim[n] - dr[n] - (dr[n - 1] if n else 0) for n in range(5))
    if min(h) < 0:
        raise ModelError(f"negative Betti number {h} at weight {mu}")
    return h, tuple(dimsF)


# ---------------------------------------------------------------------------
# weight bookkeeping


def expected_euler_at(atom: Atom, mu: tuple) -> int:
    total = 0
    for c, (a, b), sh in atom.pieces:
        total += c * rootdata.euler_weight_multiplicity(Weight(a, b), (mu[0] + sh[0], mu[1] + sh[1]))
    return total


def weight_radius(atom: Atom) -> int:
    r = 0
    for _, (a, b), sh in atom.pieces:
        r = max(r, rootdata.weight_radius(Weight(a, b)) + max(abs(sh[0]), abs(sh[1])))
    return r


def pulled_back_from_quadric(atom: Atom) -> bool:
    if any(a != 0 for (a, _), _ in atom.sources + atom.targets):
        return False
    return all(not any(m[:4]) for _, _, x in atom.entries for m, _ in x)


def pulled_back_from_projective(atom: Atom) -> bool:
    if any(b != 0 for (_, b), _ in atom.sources + atom.targets):
        return False
    return all(not any(m[4:]) for _, _, x in atom.entries for m, _ in x)


def resolve_cover(atom: Atom, cover: str) -> str:
    if cover == "auto":
        if pulled_back_from_quadric(atom):
            return "quadric"
        if pulled_back_from_projective(atom):
            return "projective"
        return "product"
    if cover == "quadric" and not pulled_back_from_quadric(atom):
        raise ValueError("the quadric cover needs a bundle pulled back from Q3")
    if cover == "projective" and not pulled_back_from_projective(atom):
        raise ValueError("the projective cover needs a bundle pulled back from P3")
    return cover


def complex_size(atom: Atom, p: int, T: tuple, mu: tuple, cover: str) -> int:
    """Total number of basis elements betti_at_weight would handle."""
    R = quotient_ring(p)
    terms, _ = cover_structure(cover)
    total = 0
    for key, n, I, K in terms:
        s = _wsum(I, K, T)
        parts = atom.sources + (atom.targets if n <= 4 else ())
        for (a, b), sh in parts:
            total += len(R.basis(a + T[0] * len(I), b + T[1] * len(K), (mu[0] + sh[0] + s[0], mu[1] + sh[1] + s[1])))
    return total


def check_budget(atom: Atom, p: int, T: tuple, weights, sched: Schedule, cover: str) -> int:
    """Largest complex among the first two truncations; raises if over budget."""
    worst = 0
    for t in (T, (T[0] + sched.step, T[1] + sched.step)):
        for mu in weights:
            worst = max(worst, complex_size(atom, p, t, mu, cover))
            if sched.max_dim is not None and worst > sched.max_dim:
                raise ResourceExhausted(f"complex at weight {mu}, T={t} has {worst} > {sched.max_dim} basis elements")
    if worst > RELEASE_ABOVE:
        quotient_ring(p).release_caches()
    return worst


def start_truncation(atom: Atom, cover: str):
    """Initial pole orders and whether exactness is proven for them.

    On X every filtration piece twisted by the pole orders is dominant, so
    Kempf vanishing certifies the truncation.  On Q3 and P3 the same holds
    for line bundles; for kernels there is no such filtration on the factor
    and the start is pushed past the range where the twists still carry
    higher cohomology, leaving agreement between consecutive runs as the
    only check.
    """
    if cover in ("product", "charts"):
        return atom.bound, True
    k = 1 if cover == "quadric" else 0
    start = atom.bound[k] if not atom.targets else 2 * atom.bound[k] + 2
    T = (0, start) if k else (start, 0)
    return T, not atom.targets


def _job(args):
    atom, p, T, mu, cover, check_d2, max_dim = args
    t = time.time()
    h, dims = betti_at_weight(atom, p, T, mu, cover, check_d2, max_dim)
    R = quotient_ring(p)
    if sum(dims) > RELEASE_ABOVE or R.cache_size() > CACHE_LIMIT:
        # normal forms rarely repeat across weights; keep memory flat on long runs
        R.release_caches()
    return mu, h, dims, time.time() - t


def _run_weights(atom: Atom, p: int, T: tuple, weights, sched: Schedule, cover: str):
    args = [(atom, p, T, mu, cover, sched.check_d2, sched.max_dim) for mu in weights]
    COUNTERS["cech_builds"] += len(args)
    if sched.jobs <= 1 or len(args) <= 1:
        return [_job(a) for a in args]
    ctx = mp.get_context("fork")
    with cf.ProcessPoolExecutor(max_workers=sched.jobs, mp_context=ctx) as ex:
        return list(ex.map(_job, args, chunksize=1))


def atom_cohomology(e, p: int, sched: Schedule = DEFAULT_SCHEDULE) -> BettiVector:
    atom = atom_of(e)
    cover = resolve_cover(atom, sched.cover)
    T, certified = start_truncation(atom, cover)
    if sched.start is not None:
        certified = certified and sched.start >= max(T)
        T = (sched.start, sched.start)
    t_max = max(T) + 12 if sched.t_max is None else sched.t_max
    radius = weight_radius(atom)
    weights = list(rootdata.dominant_weights(radius + sched.margin))
    largest = check_budget(atom, p, T, weights, sched, cover)
    history = []
    t_start = time.time()
    while True:
        res = _run_weights(atom, p, T, weights, sched, cover)
        table = {mu: h for mu, h, _, _ in res}
        history.append((T, table, res))
        if len(history) >= 2 and history[-1][1] == history[-2][1]:
            break
        if max(T) + sched.step > t_max:
            raise Unstable(f"{label(e)} over F_{p}: no agreement up to T={T}")
        T = (T[0] + sched.step, T[1] + sched.step)
    T_used, table, res = history[-2]
    totals = [0] * 5
    details = []
    for mu, h, dims, secs in sorted(res):
        exp = expected_euler_at(atom, mu)
        got = sum((-1) ** i * v for i, v in enumerate(h))
        if got != exp:
            raise ModelError(f"{label(e)}: Euler characteristic {got} != {exp} at weight {mu}")
        if max(mu) > radius and any(h):
            raise ModelError(f"{label(e)}: cohomology outside the weight bound at {mu}")
        orb = rootdata.orbit_size(mu)
        for i in range(5):
            totals[i] += orb * h[i]
        if any(h):
            details.append([list(mu), list(h), orb])
    bv = BettiVector(
        tuple(totals),
        sum((-1) ** i * v for i, v in enumerate(totals)),
        p,
        max(T_used),
        True,
        label(e),
        {
            "weights": details,
            "schedule": [list(t) for t, _, _ in history],
            "weights_computed": len(weights),
            "largest_complex": largest,
            "d2_checked": sched.check_d2,
            "cover": cover,
            "exactness": "kempf" if certified else "stabilization",
            "seconds": round(time.time() - t_start, 3),
        },
    )
    if bv.chi != euler_char(e):
        raise ModelError(f"{label(e)}: chi {bv.chi} != {euler_char(e)}")
    return bv


# ---------------------------------------------------------------------------
# cache


class Cache:
    """Content-addressed store of Betti vectors with a readable index."""

    def __init__(self, path):
        self.path = Path(path)
        (self.path / "objects").mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(e, p: int, sched: Schedule) -> str:
        body = "|".join([MODEL_VERSION, canonical(e), str(p), sched.signature()])
        return hashlib.sha256(body.encode()).hexdigest()

    def get(self, e, p, sched) -> Optional[BettiVector]:
        f = self.path / "objects" / (self.key(e, p, sched) + ".json")
        if not f.exists():
            return None
        COUNTERS["cache_hits"] += 1
        return BettiVector.from_json(json.loads(f.read_text()))

    def put(self, e, p, sched, bv: BettiVector) -> None:
        k = self.key(e, p, sched)
        f = self.path / "objects" / (k + ".json")
        tmp = f.with_suffix(f".{os.getpid()}.tmp")
        tmp.write_text(json.dumps(bv.to_json(), sort_keys=True, indent=1))
        os.replace(tmp, f)
        with open(self.path / "index.tsv", "a") as fh:
            fh.write(f"{k}\t{canonical(e)}\t{label(e)}\tp={p}\tT={bv.T_used}\t{' '.join(map(str, bv.h))}\n")


# ---------------------------------------------------------------------------
# public entry points


def _combine(parts: list, p: int, e) -> BettiVector:
    h = [sum(b.h[i] for b in parts) for i in range(5)]
    return BettiVector(
        tuple(h),
        sum(b.chi for b in parts),
        p,
        max(b.T_used for b in parts),
        all(b.stabilized for b in parts),
        label(e),
        {"summands": [b.to_json() for b in parts]},
    )


def cohomology_expr(e, p: int, schedule: Schedule = DEFAULT_SCHEDULE, cache: Optional[Cache] = None) -> BettiVector:
    if p < 3 or p % 2 == 0:
        raise ValueError("p must be an odd prime")
    e = normalize(e)
    if isinstance(e, Sum):
        return _combine([cohomology_expr(t, p, schedule, cache) for t in e.terms], p, e)
    if cache is not None:
        hit = cache.get(e, p, schedule)
        if hit is not None:
            return hit
    bv = atom_cohomology(e, p, schedule)
    if cache is not None:
        cache.put(e, p, schedule, bv)
    return bv


def cohomology_line(lam, p: int, schedule: Schedule = DEFAULT_SCHEDULE, cache: Optional[Cache] = None) -> BettiVector:
    return cohomology_expr(Line(rootdata.as_weight(lam)), p, schedule, cache)


def dual_check(lam, p: int, schedule: Schedule = DEFAULT_SCHEDULE, cache: Optional[Cache] = None) -> bool:
    lam = rootdata.as_weight(lam)
    a = cohomology_line(lam, p, schedule, cache)
    b = cohomology_line(rootdata.serre_dual(lam), p, schedule, cache)
    return all(a.h[i] == b.h[4 - i] for i in range(5))
