"""B2 root datum, Weyl group, weights and Euler characteristics on G/B.

Weights are written in the fundamental-weight basis ``a*w_alpha + b*w_beta``
with ``w_alpha = e1`` and ``w_beta = e1 + e2``, so that ``alpha = e1 - e2`` is
the short simple root and ``beta = 2*e2`` the long one.  ``O(1, 0)`` is then
the pullback of ``O(1)`` from P^3 and ``O(0, 1)`` the pullback of ``O(1)``
from the quadric Q3.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence, Union


@dataclass(frozen=True, order=True)
class Weight:
    a: int
    b: int

    def __add__(self, other: "Weight") -> "Weight":
        return Weight(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "Weight") -> "Weight":
        return Weight(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "Weight":
        return Weight(-self.a, -self.b)

    def __mul__(self, k: int) -> "Weight":
        return Weight(k * self.a, k * self.b)

    __rmul__ = __mul__

    def epsilon(self) -> tuple[int, int]:
        return (self.a + self.b, self.b)

    @classmethod
    def from_epsilon(cls, e1: int, e2: int) -> "Weight":
        return cls(e1 - e2, e2)

    def is_dominant(self) -> bool:
        return self.a >= 0 and self.b >= 0

    def __str__(self) -> str:
        return f"({self.a},{self.b})"


RHO = Weight(1, 1)
CANONICAL = Weight(-2, -2)

# Positive roots in epsilon coordinates: alpha, beta, alpha+beta, 2alpha+beta.
POSITIVE_ROOTS: tuple[tuple[int, int], ...] = ((1, -1), (0, 2), (1, 1), (2, 0))


@dataclass(frozen=True)
class WeylElement:
    """Signed permutation of (e1, e2): ``w(e_i) = signs[i] * e_{perm[i]}``."""

    perm: tuple[int, int]
    signs: tuple[int, int]

    def act_eps(self, v: tuple[int, int]) -> tuple[int, int]:
        out = [0, 0]
        for i in range(2):
            out[self.perm[i]] += self.signs[i] * v[i]
        return (out[0], out[1])

    def act(self, lam: Weight) -> Weight:
        return Weight.from_epsilon(*self.act_eps(lam.epsilon()))

    @property
    def length(self) -> int:
        n = 0
        for r in POSITIVE_ROOTS:
            w = self.act_eps(r)
            if w not in POSITIVE_ROOTS:
                n += 1
        return n

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        e = [self.act_eps(other.act_eps(v)) for v in ((1, 0), (0, 1))]
        perm = tuple(0 if e[i][0] else 1 for i in range(2))
        signs = tuple(e[i][perm[i]] for i in range(2))
        return WeylElement(perm, signs)  # type: ignore[arg-type]


@lru_cache(maxsize=None)
def weyl_group() -> tuple[WeylElement, ...]:
    elems = [
        WeylElement(perm, signs)
        for perm in ((0, 1), (1, 0))
        for signs in itertools.product((1, -1), repeat=2)
    ]
    return tuple(sorted(elems, key=lambda w: (w.length, w.perm, w.signs)))


IDENTITY = WeylElement((0, 1), (1, 1))
S_ALPHA = WeylElement((1, 0), (1, 1))  # swaps e1 and e2
S_BETA = WeylElement((0, 1), (1, -1))  # e2 -> -e2
W0 = WeylElement((0, 1), (-1, -1))


def euler_characteristic(lam: Weight) -> int:
    """Weyl dimension polynomial; characteristic independent."""
    a, b = lam.a, lam.b
    num = (a + 1) * (b + 1) * (a + b + 2) * (a + 2 * b + 3)
    q, r = divmod(num, 6)
    assert r == 0, f"non-integral Euler characteristic for {lam}"
    return q


def dot_action(w: WeylElement, lam: Weight) -> Weight:
    return w.act(lam + RHO) - RHO


def serre_dual(lam: Weight) -> Weight:
    return CANONICAL - lam


def dominant_dot_conjugate(lam: Weight) -> Optional[tuple[WeylElement, Weight]]:
    """Return (w, w.lam) with w.lam dominant, or None when lam + rho is singular."""
    for w in weyl_group():
        mu = dot_action(w, lam)
        if mu.is_dominant():
            return w, mu
    return None


def kempf_predicts(lam: Weight) -> Optional[tuple[int, int, int, int, int]]:
    if lam.is_dominant():
        return (euler_characteristic(lam), 0, 0, 0, 0)
    return None


def bott_char0(lam: Weight) -> tuple[int, ...]:
    """Borel-Weil-Bott answer in characteristic zero."""
    h = [0] * 5
    found = dominant_dot_conjugate(lam)
    if found is not None:
        w, mu = found
        h[w.length] = euler_characteristic(mu)
    return tuple(h)


# ---------------------------------------------------------------------------
# weight multiplicities (torus characters), used for per-weight Euler checks


def dominant_eps(v: tuple[int, int]) -> tuple[int, int]:
    e1, e2 = abs(v[0]), abs(v[1])
    return (max(e1, e2), min(e1, e2))


def orbit_size(v: tuple[int, int]) -> int:
    e1, e2 = dominant_eps(v)
    if e1 == 0:
        return 1
    if e2 == 0 or e1 == e2:
        return 4
    return 8


@lru_cache(maxsize=None)
def _kostant_partition(g1: int, g2: int) -> int:
    """Ways to write (g1, g2) as a non-negative sum of positive roots."""
    count = 0
    # 2e1 used k times, e1+e2 used j times, e1-e2 used i times; 2e2 fills the rest.
    for k in range(max(0, g1 // 2) + 1):
        r1 = g1 - 2 * k
        for j in range(r1 + 1):
            i = r1 - j
            rest = g2 - j + i
            if rest >= 0 and rest % 2 == 0:
                count += 1
    return count


def weight_multiplicity(highest: Weight, mu: tuple[int, int]) -> int:
    """Multiplicity of the epsilon-weight ``mu`` in the Weyl character of ``highest``."""
    assert highest.is_dominant()
    lr = (highest + RHO).epsilon()
    rho = RHO.epsilon()
    total = 0
    for w in weyl_group():
        v = w.act_eps(lr)
        g = (v[0] - mu[0] - rho[0], v[1] - mu[1] - rho[1])
        if g[0] < 0:
            continue
        total += (-1) ** w.length * _kostant_partition(*g)
    return total


def euler_weight_multiplicity(lam: Weight, mu: tuple[int, int]) -> int:
    """Multiplicity of ``mu`` in sum_i (-1)^i ch H^i(G/B, O(lam))."""
    found = dominant_dot_conjugate(lam)
    if found is None:
        return 0
    w, nu = found
    return (-1) ** w.length * weight_multiplicity(nu, mu)


def weight_radius(lam: Weight) -> int:
    """Max-norm bound for the weights of any H^i(O(lam)).

    Composition factors of H^i(lam) have highest weight at most
    dom(lam + rho) - rho, so every weight lies in that W-orbit hull.
    """
    e = dominant_eps((lam + RHO).epsilon())
    mu = (e[0] - 2, e[1] - 1)
    return max(abs(mu[0]), abs(mu[1]), 0)


def dominant_weights(radius: int, parity: Optional[int] = None) -> Iterator[tuple[int, int]]:
    for e1 in range(radius + 1):
        for e2 in range(e1 + 1):
            if parity is None or (e1 + e2) % 2 == parity:
                yield (e1, e2)


# ---------------------------------------------------------------------------
# symbolic line-bundle names


@dataclass(frozen=True)
class PiStar:
    d: int


@dataclass(frozen=True)
class QStar:
    m: int


@dataclass(frozen=True)
class RelPi:
    c: int


@dataclass(frozen=True)
class RelQ:
    c: int


@dataclass(frozen=True)
class Canonical:
    pass


@dataclass(frozen=True)
class Product:
    factors: tuple["LineBundleName", ...]


LineBundleName = Union[PiStar, QStar, RelPi, RelQ, Canonical, Product]


def to_weight(name: LineBundleName) -> Weight:
    if isinstance(name, PiStar):
        return Weight(name.d, 0)
    if isinstance(name, QStar):
        return Weight(0, name.m)
    if isinstance(name, RelPi):
        return Weight(-name.c, name.c)
    if isinstance(name, RelQ):
        return Weight(name.c, 0)
    if isinstance(name, Canonical):
        return CANONICAL
    if isinstance(name, Product):
        total = Weight(0, 0)
        for f in name.factors:
            total = total + to_weight(f)
        return total
    raise TypeError(f"not a line bundle name: {name!r}")


def parse_weight(text: str) -> Weight:
    s = text.strip()
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    parts = [t for t in s.replace(" ", "").split(",") if t]
    if len(parts) != 2:
        raise ValueError(f"cannot parse weight {text!r}; expected '(a,b)'")
    return Weight(int(parts[0]), int(parts[1]))


def as_weight(x: Union[Weight, Sequence[int]]) -> Weight:
    if isinstance(x, Weight):
        return x
    a, b = x
    return Weight(int(a), int(b))
