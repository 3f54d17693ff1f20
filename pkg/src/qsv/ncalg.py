"""Normal-ordered noncommutative polynomials on the braided line and q-deformed Euclidean 3-space.

Monomials are tuples of exponents: one entry per algebra generator (in
canonical order) followed by the central formal symbols ``t``, ``(2m)`` and
``a``.  Products are brought to canonical order by a rewrite system given as a
table of adjacent-pair relations ``g_k g_j -> s * g_j g_k + corrections`` for
``k > j``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Mapping

from .qfield import ONE, ZERO, QScalar, lam, parse as parse_scalar, q, qpow

SYMBOLS = ("t", "(2m)", "a")

GENERATORS = {
    ("line", "position"): ("x1",),
    ("line", "momentum"): ("p1",),
    ("euclid3", "position"): ("x+", "x3", "x-"),
    ("euclid3", "momentum"): ("p-", "p3", "p+"),
}


class AlgebraError(ValueError):
    """Mixing elements of different algebras."""


class ConventionMismatch(ArithmeticError):
    """A star power left the span predicted by the ansatz."""


class UnsupportedOperation(NotImplementedError):
    pass


Monomial = tuple  # exponents per generator, then t, (2m), a


@dataclass(frozen=True)
class Variant:
    """One of the eight candidate euclid3 conventions.

    ``invert``: use q^-2 instead of q^2 in the two p3 relations.
    ``neg_lambda``: use -lambda as the correction coefficient.
    ``swap_metric``: exchange g^{+-} and g^{-+}.
    """

    invert: bool = False
    neg_lambda: bool = False
    swap_metric: bool = False

    @property
    def vid(self) -> str:
        return "".join(("i" if self.invert else "n", "m" if self.neg_lambda else "p", "s" if self.swap_metric else "d"))

    @classmethod
    def from_id(cls, vid: str) -> "Variant":
        if len(vid) != 3 or vid[0] not in "ni" or vid[1] not in "pm" or vid[2] not in "ds":
            raise ValueError(f"unknown convention variant {vid!r}")
        return cls(vid[0] == "i", vid[1] == "m", vid[2] == "s")

    def describe(self) -> str:
        s = "q^-2" if self.invert else "q^2"
        c = "-lambda" if self.neg_lambda else "lambda"
        gpm, gmp = ("-q^-1", "-q") if self.swap_metric else ("-q", "-q^-1")
        return (f"p3 p+ = {s} p+ p3, p- p3 = {s} p3 p-, p+ p- = p- p+ + {c} p3^2; "
                f"g^33 = 1, g^+- = {gpm}, g^-+ = {gmp}")


ALL_VARIANTS = tuple(Variant(i, n, s) for i in (False, True) for n in (False, True) for s in (False, True))
DEFAULT_VARIANT = Variant()


@dataclass(frozen=True)
class AlgebraSpec:
    space: str  # "line" | "euclid3"
    sector: str  # "position" | "momentum"
    variant: Variant = DEFAULT_VARIANT
    mirrored: bool = False

    def __post_init__(self):
        if (self.space, self.sector) not in GENERATORS:
            raise ValueError(f"unknown algebra {self.space}/{self.sector}")

    @property
    def gens(self) -> tuple[str, ...]:
        return GENERATORS[(self.space, self.sector)]

    @property
    def ngens(self) -> int:
        return len(self.gens)

    @property
    def width(self) -> int:
        return self.ngens + len(SYMBOLS)

    def laurent_allowed(self, i: int) -> bool:
        return self.space == "line" and self.sector == "position" and i == 0

    def _s(self, x: QScalar) -> QScalar:
        return x.scale_q(-1) if self.mirrored else x

    def relations(self) -> dict[tuple[int, int], tuple[QScalar, dict[tuple[int, ...], QScalar]]]:
        """{(k, j): (s, {word: c})} meaning g_k g_j = s g_j g_k + sum c * word, k > j."""
        if self.space == "line":
            return {}
        v = self.variant
        # stated with the momentum labels p- (0), p3 (1), p+ (2); same by index for coordinates
        # p3 p+ = s p+ p3  ->  p+ p3 = s^-1 p3 p+
        # p- p3 = s p3 p-  ->  p3 p- = s^-1 p- p3
        s = qpow(-2) if v.invert else qpow(2)
        c = -lam if v.neg_lambda else lam
        return {
            (2, 1): (self._s(s.inv()), {}),
            (1, 0): (self._s(s.inv()), {}),
            (2, 0): (ONE, {(1, 1): self._s(c)}),
        }

    def metric(self) -> dict[tuple[int, int], QScalar]:
        """Nonzero g^{AB} keyed by (index of A, index of B) in generator order.

        Index labels follow the momentum ordering (-, 3, +) for both sectors of
        euclid3; the position generators (x+, x3, x-) carry the matching upper
        labels (+, 3, -).
        """
        if self.space == "line":
            return {(0, 0): ONE}
        gpm, gmp = -q, -q.inv()
        if self.variant.swap_metric:
            gpm, gmp = gmp, gpm
        # momentum indices: 0 = '-', 1 = '3', 2 = '+'
        # g^{+-}: A='+' (2), B='-' (0)
        return {(1, 1): ONE, (2, 0): self._s(gpm), (0, 2): self._s(gmp)}

    def label(self, i: int) -> str:
        return self.gens[i]


def line_position() -> AlgebraSpec:
    return AlgebraSpec("line", "position")


def line_momentum() -> AlgebraSpec:
    return AlgebraSpec("line", "momentum")


def euclid_position(variant: Variant = DEFAULT_VARIANT) -> AlgebraSpec:
    return AlgebraSpec("euclid3", "position", variant)


def euclid_momentum(variant: Variant = DEFAULT_VARIANT) -> AlgebraSpec:
    return AlgebraSpec("euclid3", "momentum", variant)


# ---------------------------------------------------------------- rewriting

@lru_cache(maxsize=None)
def _rules(alg: AlgebraSpec):
    out = {}
    for (k, j), (s, corr) in alg.relations().items():
        words = []
        for w, c in corr.items():
            words.append((w, c))
        out[(k, j)] = (s, tuple(words))
    return out


def _unit(alg: AlgebraSpec, i: int) -> Monomial:
    e = [0] * alg.width
    e[i] = 1
    return tuple(e)


@lru_cache(maxsize=None)
def _mul_gen(alg: AlgebraSpec, mono: Monomial, j: int) -> tuple[tuple[Monomial, QScalar], ...]:
    """Normal form of mono * g_j."""
    n = alg.ngens
    hi = max((k for k in range(j + 1, n) if mono[k] != 0), default=None)
    if hi is None:
        e = list(mono)
        e[j] += 1
        return ((tuple(e), ONE),)
    # mono = mono' g_hi ;  g_hi g_j = s g_j g_hi + sum c word
    s, words = _rules(alg)[(hi, j)]
    e = list(mono)
    e[hi] -= 1
    rest = tuple(e)
    acc: dict[Monomial, QScalar] = {}
    for m1, c1 in _mul_gen(alg, rest, j):
        for m2, c2 in _mul_gen(alg, m1, hi):
            _acc(acc, m2, s * c1 * c2)
    for w, c in words:
        cur = {rest: c}
        for g in w:
            nxt: dict[Monomial, QScalar] = {}
            for m1, c1 in cur.items():
                for m2, c2 in _mul_gen(alg, m1, g):
                    _acc(nxt, m2, c1 * c2)
            cur = nxt
        for m2, c2 in cur.items():
            _acc(acc, m2, c2)
    return tuple((m, c) for m, c in acc.items() if c)


def _acc(d: dict, k, v: QScalar) -> None:
    if not v:
        return
    r = d.get(k)
    if r is None:
        d[k] = v
    else:
        r = r + v
        if r:
            d[k] = r
        else:
            del d[k]


@lru_cache(maxsize=None)
def _mul_mono(alg: AlgebraSpec, m1: Monomial, m2: Monomial) -> tuple[tuple[Monomial, QScalar], ...]:
    n = alg.ngens
    base = list(m1)
    for i in range(n, alg.width):
        base[i] += m2[i]
    if alg.space == "line" or not any(m2[:n]):
        e = list(base)
        for i in range(n):
            e[i] += m2[i]
        return ((tuple(e), ONE),)
    cur: dict[Monomial, QScalar] = {tuple(base): ONE}
    for g in range(n):
        for _ in range(m2[g]):
            nxt: dict[Monomial, QScalar] = {}
            for m, c in cur.items():
                for m3, c3 in _mul_gen(alg, m, g):
                    _acc(nxt, m3, c * c3)
            cur = nxt
    return tuple(cur.items())


# ---------------------------------------------------------------- elements

class NCElement:
    """Finite linear combination of normal-ordered monomials."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: AlgebraSpec, terms: Mapping[Monomial, QScalar] | None = None):
        self.alg = alg
        t: dict[Monomial, QScalar] = {}
        if terms:
            for m, c in terms.items():
                c = QScalar(c)
                if c:
                    m = tuple(m)
                    if len(m) != alg.width:
                        raise AlgebraError(f"monomial {m} has wrong length for {alg.space}/{alg.sector}")
                    for i in range(alg.ngens):
                        if m[i] < 0 and not alg.laurent_allowed(i):
                            raise AlgebraError(f"negative exponent on {alg.label(i)}")
                    _acc(t, m, c)
        self.terms = t

    # constructors
    @classmethod
    def scalar(cls, alg: AlgebraSpec, c=1) -> "NCElement":
        return cls(alg, {(0,) * alg.width: QScalar(c)})

    @classmethod
    def gen(cls, alg: AlgebraSpec, name: str, power: int = 1) -> "NCElement":
        e = [0] * alg.width
        if name in alg.gens:
            e[alg.gens.index(name)] = power
        elif name in SYMBOLS:
            e[alg.ngens + SYMBOLS.index(name)] = power
        else:
            raise AlgebraError(f"{name!r} is not a generator of {alg.space}/{alg.sector}")
        return cls(alg, {tuple(e): ONE})

    @classmethod
    def monomial(cls, alg: AlgebraSpec, exps: Iterable[int], c=1) -> "NCElement":
        return cls(alg, {tuple(exps): QScalar(c)})

    # arithmetic
    def _check(self, o: "NCElement"):
        if not isinstance(o, NCElement):
            raise AlgebraError("not an NCElement")
        if o.alg != self.alg:
            raise AlgebraError(f"algebra mismatch: {self.alg} vs {o.alg}")

    def __add__(self, o):
        if not isinstance(o, NCElement):
            o = NCElement.scalar(self.alg, o)
        self._check(o)
        t = dict(self.terms)
        for m, c in o.terms.items():
            _acc(t, m, c)
        return _wrap(self.alg, t)

    __radd__ = __add__

    def __neg__(self):
        return _wrap(self.alg, {m: -c for m, c in self.terms.items()})

    def __sub__(self, o):
        if not isinstance(o, NCElement):
            o = NCElement.scalar(self.alg, o)
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def scale(self, c) -> "NCElement":
        c = QScalar(c)
        if not c:
            return NCElement(self.alg)
        return _wrap(self.alg, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, o):
        if isinstance(o, NCElement):
            return star_multiply(self, o)
        return self.scale(o)

    def __rmul__(self, o):
        return self.scale(o)

    def __pow__(self, n: int):
        if n < 0:
            # only single Laurent monomials (line coordinate, central symbols) are invertible here
            if len(self.terms) != 1:
                raise AlgebraError("negative powers need a single monomial")
            (m, c), = self.terms.items()
            k = self.alg.ngens
            if any(e and not self.alg.laurent_allowed(i) for i, e in enumerate(m[:k])):
                raise AlgebraError(f"{monomial_str(self.alg, m)} is not invertible")
            return NCElement(self.alg, {tuple(e * n for e in m): c ** n})
        r = NCElement.scalar(self.alg)
        for _ in range(n):
            r = r * self
        return r

    def __eq__(self, o):
        if isinstance(o, NCElement):
            return self.alg == o.alg and self.terms == o.terms
        if not self.terms:
            return QScalar(o).is_zero()
        return self == NCElement.scalar(self.alg, o)

    def __hash__(self):
        return hash((self.alg, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, mono: Iterable[int]) -> QScalar:
        return self.terms.get(tuple(mono), ZERO)

    def degree(self, mono: Monomial) -> int:
        return sum(mono[: self.alg.ngens])

    def map_coeffs(self, f) -> "NCElement":
        return NCElement(self.alg, {m: f(c) for m, c in self.terms.items()})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: _sort_key(mc[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"[{c}] {monomial_str(self.alg, m)}" for m, c in self.sorted_terms())

    def __repr__(self):
        return f"NCElement<{self.alg.space}/{self.alg.sector}>({self})"


def _wrap(alg, terms) -> NCElement:
    e = NCElement.__new__(NCElement)
    e.alg = alg
    e.terms = terms
    return e


def _sort_key(m):
    return (sum(m), tuple(-x for x in m))


def monomial_str(alg: AlgebraSpec, m: Monomial) -> str:
    names = alg.gens + SYMBOLS
    parts = [f"{names[i]}^{e}" for i, e in enumerate(m) if e]
    return " ".join(parts) if parts else "1"


def parse_monomial(alg: AlgebraSpec, text: str) -> Monomial:
    names = alg.gens + SYMBOLS
    e = [0] * alg.width
    text = text.strip()
    if text == "1":
        return tuple(e)
    for tok in text.split():
        m = re.fullmatch(r"(.+)\^(-?\d+)", tok)
        if not m or m.group(1) not in names:
            raise ValueError(f"bad monomial token {tok!r}")
        e[names.index(m.group(1))] += int(m.group(2))
    return tuple(e)


def parse_element(alg: AlgebraSpec, text: str) -> NCElement:
    text = text.strip()
    if text == "0":
        return NCElement(alg)
    terms: dict[Monomial, QScalar] = {}
    for part in re.findall(r"\[([^\]]*)\]\s*([^\[]*?)(?=\s*\+\s*\[|\s*$)", text):
        _acc(terms, parse_monomial(alg, part[1]), parse_scalar(part[0]))
    return NCElement(alg, terms)


# ---------------------------------------------------------------- operations

def star_multiply(a: NCElement, b: NCElement) -> NCElement:
    a._check(b)
    alg = a.alg
    out: dict[Monomial, QScalar] = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            c12 = c1 * c2
            for m, c in _mul_mono(alg, m1, m2):
                _acc(out, m, c12 * c if c != ONE else c12)
    return _wrap(alg, out)


def normal_order(alg: AlgebraSpec, word: Iterable[str], coeff=1) -> NCElement:
    """Normal form of a product of generator names, e.g. ["p+", "p-"]."""
    r = NCElement.scalar(alg, coeff)
    for name in word:
        r = r * NCElement.gen(alg, name)
    return r


def generators(alg: AlgebraSpec) -> list[NCElement]:
    return [NCElement.gen(alg, g) for g in alg.gens]


def quadratic_invariant(alg: AlgebraSpec) -> NCElement:
    """p^2 = g^{AB} p_B p_A (momentum) or r^2 = g_{AB} x^A x^B (position)."""
    if alg.space == "line":
        g = NCElement.gen(alg, alg.gens[0])
        return g * g
    acc = NCElement(alg)
    gens = generators(alg)
    for (a, b), c in alg.metric().items():
        if alg.sector == "momentum":
            acc = acc + (gens[b] * gens[a]).scale(c)
        else:
            # position labels (+,3,-) sit at indices (0,1,2); lower metric g_{AB} equals g^{AB}
            # with labels mapped through the index reversal of the momentum ordering
            acc = acc + (gens[2 - a] * gens[2 - b]).scale(c)
    return acc


def p_squared(alg: AlgebraSpec) -> NCElement:
    if alg.sector != "momentum":
        raise AlgebraError("p_squared needs a momentum algebra")
    return quadratic_invariant(alg)


def r_squared(alg: AlgebraSpec) -> NCElement:
    if alg.sector != "position":
        raise AlgebraError("r_squared needs a position algebra")
    return quadratic_invariant(alg)


def power_expand_p2(n: int, alg: AlgebraSpec | None = None) -> dict[int, QScalar]:
    alg = alg or euclid_momentum()
    p2 = p_squared(alg)
    e = p2 ** n
    out: dict[int, QScalar] = {}
    for m, c in e.terms.items():
        a, b, cc = m[0], m[1], m[2]
        if a != cc or b % 2 or a + b // 2 != n or any(m[3:]):
            raise ConventionMismatch(f"term {monomial_str(alg, m)} outside the ansatz span at n={n}")
        out[b // 2] = c
    return {k: out.get(k, ZERO) for k in range(n + 1)}


def commutator(a: NCElement, b: NCElement) -> NCElement:
    return a * b - b * a


def is_central(e: NCElement) -> bool:
    return all(commutator(e, g).is_zero() for g in generators(e.alg))


def conjugate_element(e: NCElement) -> NCElement:
    """Antilinear, product reversing.  Defined on the braided line only."""
    if e.alg.space != "line":
        raise UnsupportedOperation("conjugation on euclid3 is not supported")
    # commutative algebra with self-conjugate generators: reversal is trivial
    return e.map_coeffs(lambda c: c.conjugate())


def grade_scaling(e: NCElement, factors: Mapping[str, QScalar]) -> NCElement:
    names = e.alg.gens + SYMBOLS
    fs = [QScalar(factors.get(n, 1)) for n in names]
    for n, f in zip(names, fs):
        if not f:
            raise ValueError(f"scaling factor for {n} must be nonzero")
    out = {}
    for m, c in e.terms.items():
        s = c
        for f, k in zip(fs, m):
            if k and f != ONE:
                s = s * f ** k
        out[m] = s
    return NCElement(e.alg, out)


def theta_minus(e: NCElement, variant: str = "L") -> NCElement:
    """Braided antipode on line momentum space: p^n -> (-1)^n q^{s n(n-1)/2} p^n, s = -1 (L), +1 (R)."""
    if e.alg.space != "line" or e.alg.sector != "momentum":
        raise UnsupportedOperation("theta_minus is implemented on the braided line momentum space only")
    if variant not in ("L", "R"):
        raise ValueError("variant must be 'L' or 'R'")
    s = -1 if variant == "L" else 1
    out = {}
    for m, c in e.terms.items():
        n = m[0]
        out[m] = c * (-1) ** n * qpow(s * n * (n - 1) // 2)
    return NCElement(e.alg, out)


def mirror_scalar(c: QScalar) -> QScalar:
    return QScalar(c).scale_q(-1)


def mirror_algebra(alg: AlgebraSpec) -> AlgebraSpec:
    return replace(alg, mirrored=not alg.mirrored)


# ---------------------------------------------------------------- convention gate

class GateFailure(RuntimeError):
    """No unique relation-table variant reproduces the star-power coefficients."""


def gate_check(variant: Variant, nmax: int = 4) -> bool:
    from .qcombi import cq_closed

    alg = euclid_momentum(variant)
    try:
        for n in range(nmax + 1):
            tab = power_expand_p2(n, alg)
            if any(tab[k] != cq_closed(n, k) for k in range(n + 1)):
                return False
    except ConventionMismatch:
        return False
    return True


def gate_report(nmax: int = 4) -> dict[str, bool]:
    return {v.vid: gate_check(v, nmax) for v in ALL_VARIANTS}


@lru_cache(maxsize=None)
def resolve_variant(nmax: int = 4) -> Variant:
    """The default table if it passes, otherwise the unique passing variant."""
    if gate_check(DEFAULT_VARIANT, nmax):
        return DEFAULT_VARIANT
    passing = [v for v in ALL_VARIANTS if gate_check(v, nmax)]
    if len(passing) != 1:
        raise GateFailure(f"{len(passing)} convention variants pass the gate: {[v.vid for v in passing]}")
    return passing[0]
