"""Derivative actions, pairing-derived q-deformed partial derivatives and operators on truncated windows.

On q-deformed Euclidean space the partial derivatives are constructed from the
q-exponentials: the action of ``i∂_A`` on position monomials is the unique
degree-lowering linear map under which the exponential is a momentum
eigenfunction.  Degree by degree this is a square linear system whose matrix
is the block of exponential coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .linalg import SingularMatrix, inverse, matmul, transpose
from .ncalg import AlgebraSpec, NCElement, SYMBOLS, generators
from .qcombi import qnum_signed
from .qfield import I, ONE, ZERO, QScalar

MINUS_I = -I

CALCULI = ("unhatted", "hatted")
SIDES = ("left", "right")


def _calc_of(geometry) -> str:
    return "hatted" if geometry.hatted else "unhatted"


def _side_of(geometry) -> str:
    return "right" if geometry.conjugate else "left"


# ---------------------------------------------------------------- derivative actions

@dataclass(frozen=True)
class DerivativeAction:
    """A degree-lowering linear map on monomials of one algebra.

    ``fn`` receives a monomial and returns an NCElement; symbol exponents
    (t, (2m), a) are carried along unchanged.
    """

    space: str
    sector: str
    calculus: str
    side: str
    index: str
    fn: Callable = field(compare=False, repr=False)

    def on_monomial(self, alg: AlgebraSpec, mono: tuple) -> NCElement:
        return self.fn(alg, mono)

    def __call__(self, e: NCElement) -> NCElement:
        acc: dict = {}
        for m, c in e.terms.items():
            for m2, c2 in self.fn(e.alg, m).terms.items():
                v = acc.get(m2, ZERO) + c * c2
                if v:
                    acc[m2] = v
                else:
                    acc.pop(m2, None)
        return NCElement(e.alg, acc)


def _line_fn(base: int, sign: int):
    def fn(alg: AlgebraSpec, mono: tuple) -> NCElement:
        n = mono[0]
        if n == 0:
            return NCElement(alg)
        e = list(mono)
        e[0] = n - 1
        return NCElement(alg, {tuple(e): qnum_signed(n, base) * sign})

    return fn


def line_derivative(calculus: str = "unhatted", side: str = "left", sector: str = "position") -> DerivativeAction:
    """Jackson-type derivative on the braided line.

    Left: ∂ ▷ x^n = [[n]]_q x^(n-1); hatted ∂̂ ▷̄ uses base q^-1.  Right actions
    carry a minus sign with the same base.  Negative n uses the same formula.
    """
    if calculus not in CALCULI or side not in SIDES:
        raise ValueError("bad calculus or side")
    base = 1 if calculus == "unhatted" else -1
    sign = 1 if side == "left" else -1
    return DerivativeAction("line", sector, calculus, side, "1", _line_fn(base, sign))


def time_derivative(side: str = "left"):
    """d/dt for left actions, -d/dt for right actions, acting on the t exponent."""
    sign = 1 if side == "left" else -1

    def fn(alg: AlgebraSpec, mono: tuple) -> NCElement:
        k = alg.ngens
        n = mono[k]
        if n == 0:
            return NCElement(alg)
        e = list(mono)
        e[k] = n - 1
        return NCElement(alg, {tuple(e): QScalar(sign * n)})

    return fn


# ---------------------------------------------------------------- pairing construction

def _basis(alg: AlgebraSpec, d: int) -> list[tuple]:
    n, w = alg.ngens, alg.width
    out = []

    def rec(prefix, left):
        if len(prefix) == n - 1:
            out.append(tuple(prefix + [left] + [0] * (w - n)))
            return
        for a in range(left, -1, -1):
            rec(prefix + [a], left - a)

    if n == 1:
        return [tuple([d] + [0] * (w - 1))]
    rec([], d)
    return out


def _geometry(space: str, calculus: str, conjugate: bool):
    from .waves import GeometrySpec

    return GeometrySpec(space, "RLbar" if calculus == "hatted" else "RbarL", conjugate)


@lru_cache(maxsize=None)
def _wave_block(space: str, calculus: str, conjugate: bool, variant, d: int):
    """Matrix E of the degree-d exponential block: rows position basis, columns momentum basis."""
    from dataclasses import replace

    from .waves import _bases, _mom_factor, _pos_factor, _qfact, _spatial_indices

    g = replace(_geometry(space, calculus, conjugate), variant=variant)
    xb, pb = _basis(g.pos, d), _basis(g.mom, d)
    xi = {m: i for i, m in enumerate(xb)}
    pi = {m: i for i, m in enumerate(pb)}
    E = [[ZERO] * len(pb) for _ in xb]
    u = g.phase_unit
    for n in _spatial_indices(space, d):
        if sum(n) != d:
            continue
        c = u ** d / _qfact(n, _bases(g))
        x, p = _pos_factor(g, n), _mom_factor(g, n)
        for mx, cx in x.terms.items():
            for mp, cp in p.terms.items():
                E[xi[mx]][pi[mp]] = E[xi[mx]][pi[mp]] + c * cx * cp
    return g, xb, pb, E


def _mult_matrix(alg: AlgebraSpec, basis_from, basis_to, gen: NCElement, side: str):
    """Matrix of m -> m * gen (side='right') or gen * m (side='left') between bases."""
    ti = {m: i for i, m in enumerate(basis_to)}
    M = [[ZERO] * len(basis_to) for _ in basis_from]
    for r, m in enumerate(basis_from):
        e = NCElement.monomial(alg, m)
        prod = e * gen if side == "right" else gen * e
        for m2, c in prod.terms.items():
            M[r][ti[m2]] = c
    return M


@lru_cache(maxsize=None)
def _pairing_matrix(space: str, calculus: str, side: str, sector: str, variant, gi: int, d: int):
    """Matrix D (rows: degree d+1 basis, columns: degree d basis) of ∂ on the given sector.

    Position sector, left:   i∂_A ▷ exp = exp ⊛ p_A
    Position sector, right:  exp ◁ i∂_A = p_A ⊛ exp          (conjugate exponential)
    Momentum sector, left:   i∂_p^A ▷ exp = x^A ⊛ exp
    Momentum sector, right:  exp ◁ i∂_p^A = exp ⊛ x^A        (conjugate exponential)
    """
    conj = side == "right"
    g, xb0, pb0, E0 = _wave_block(space, calculus, conj, variant, d)
    _, xb1, pb1, E1 = _wave_block(space, calculus, conj, variant, d + 1)
    try:
        E1inv = inverse(E1)
    except SingularMatrix as exc:  # cannot happen while q-factorials are nonzero
        raise SingularMatrix(f"pairing system singular at degree {d + 1}") from exc
    mi = MINUS_I
    if sector == "position":
        gen = generators(g.mom)[gi]
        if side == "left":
            # i D^T E1 = E0 M,  M: p^b * p_A
            M = _mult_matrix(g.mom, pb0, pb1, gen, "right")
            Dt = matmul(matmul(E0, M), E1inv)
            D = transpose(Dt)
        else:
            # ubar = sum E[x][p] p ⊗ x ; i E1^T R = L^T E0^T  with L: p_A * p^b
            L = _mult_matrix(g.mom, pb0, pb1, gen, "left")
            D = matmul(inverse(transpose(E1)), matmul(transpose(L), transpose(E0)))
        basis_hi, basis_lo = xb1, xb0
        alg = g.pos
    else:
        gen = generators(g.pos)[gi]
        if side == "left":
            # i E1 F = N^T E0,  N: x^A * x^a
            N = _mult_matrix(g.pos, xb0, xb1, gen, "left")
            D = matmul(E1inv, matmul(transpose(N), E0))
        else:
            # ubar: i G^T E1^T ... with E indexed [x][p]:  i E1^T-form
            # coefficient p^b ⊗ x^c:  i sum_b' G[b'][b] E1[c][b'] = sum_a E0[a][b] R[a][c],  R: x^a * x^A
            R = _mult_matrix(g.pos, xb0, xb1, gen, "right")
            # i E1 G = R^T E0  (as matrices indexed [x][p])
            D = matmul(E1inv, matmul(transpose(R), E0))
        basis_hi, basis_lo = pb1, pb0
        alg = g.mom
    D = [[mi * c for c in row] for row in D]
    return alg, basis_hi, basis_lo, D


def _index_label(space: str, sector: str, gi: int) -> str:
    if space == "line":
        return "1"
    labels = ("-", "3", "+") if sector == "position" else ("+", "3", "-")
    return labels[gi]


def _gen_index(space: str, sector: str, index: str) -> int:
    if space == "line":
        return 0
    labels = ("-", "3", "+") if sector == "position" else ("+", "3", "-")
    if index not in labels:
        raise ValueError(f"unknown index {index!r}")
    return labels.index(index)


def derive_action_from_pairing(space: str, calculus: str = "unhatted", N: int = 4, side: str = "left",
                               sector: str = "position", index: str = "3", variant=None) -> DerivativeAction:
    """Pairing-derived derivative, tabulated for source degrees 1..N (higher degrees on demand).

    Position-sector indices are lower (∂_-, ∂_3, ∂_+, matching p_A);
    momentum-sector indices are upper (∂_p^+, ∂_p^3, ∂_p^-, matching x^A).
    """
    from .ncalg import resolve_variant

    if calculus not in CALCULI or side not in SIDES or sector not in ("position", "momentum"):
        raise ValueError("bad calculus, side or sector")
    if N < 1:
        raise ValueError("N must be at least 1")
    v = resolve_variant() if (variant is None and space == "euclid3") else variant
    gi = _gen_index(space, sector, index)
    tables: dict[tuple, NCElement] = {}

    def table(d_hi: int):
        alg, bh, bl, D = _pairing_matrix(space, calculus, side, sector, v, gi, d_hi - 1)
        for r, m in enumerate(bh):
            tables[m] = NCElement(alg, {bl[c]: D[r][c] for c in range(len(bl)) if D[r][c]})

    for d in range(1, N + 1):
        table(d)

    def fn(alg: AlgebraSpec, mono: tuple) -> NCElement:
        n = alg.ngens
        d = sum(mono[:n])
        if d == 0:
            return NCElement(alg)
        if any(x < 0 for x in mono[:n]):
            raise ValueError("pairing-derived actions are defined on polynomial monomials only")
        key = tuple(mono[:n]) + (0,) * (alg.width - n)
        img = tables.get(key)
        if img is None:
            table(d)
            img = tables[key]
        if img.alg != alg:
            img = NCElement(alg, img.terms)
        sym = mono[n:]
        if not any(sym):
            return img
        return NCElement(alg, {m[:n] + tuple(a + b for a, b in zip(m[n:], sym)): c for m, c in img.terms.items()})

    return DerivativeAction(space, sector, calculus, side, index, fn)


@lru_cache(maxsize=None)
def _cached_action(space, calculus, side, sector, index, variant):
    if space == "line":
        return line_derivative(calculus, side, sector)
    return derive_action_from_pairing(space, calculus, 2, side, sector, index, variant)


def derivative(space: str, calculus: str, side: str, sector: str = "position", index: str = "1", variant=None) -> DerivativeAction:
    """Cached derivative action: closed formula on the line, pairing-derived on euclid3."""
    from .ncalg import resolve_variant

    if space == "euclid3" and variant is None:
        variant = resolve_variant()
    return _cached_action(space, calculus, side, sector, index, variant)


def position_indices(space: str) -> list[str]:
    return ["1"] if space == "line" else ["-", "3", "+"]


def momentum_indices(space: str) -> list[str]:
    return ["1"] if space == "line" else ["+", "3", "-"]


# ---------------------------------------------------------------- waves and momentum operators

def momentum_generator(geometry, index) -> NCElement:
    """p_A in the geometry's momentum algebra; index is a label ('1', '-', '3', '+') or generator position."""
    mom = geometry.mom
    if isinstance(index, int):
        return generators(mom)[index]
    return generators(mom)[_gen_index(geometry.space, "position", index)]


def wave_derivative(geometry, index: str) -> DerivativeAction:
    return derivative(geometry.space, _calc_of(geometry), _side_of(geometry), "position", index, geometry.variant)


def apply_momentum_operator(wave, e: NCElement):
    """Act with the operator e(P), P_A = i∂_A, on the position factor of a wave.

    Words act right-to-left for left actions (P_B P_A ▷ u = P_B ▷ (P_A ▷ u)) and
    left-to-right for right actions (u ◁ P_B P_A = (u ◁ P_B) ◁ P_A).  Symbol
    exponents of e (the inverse mass) are multiplied onto the momentum factor.
    """
    from .waves import TensorSeries

    g = wave.geometry
    mom = g.mom
    n = mom.ngens
    acts = [wave_derivative(g, _index_label(g.space, "position", i)) for i in range(n)]
    total = TensorSeries(g)
    for m, c in e.terms.items():
        word = [i for i in range(n) for _ in range(m[i])]
        if g.conjugate:
            order = word
        else:
            order = list(reversed(word))
        cur = wave
        for i in order:
            cur = cur.map_position(lambda mx, a=acts[i]: a.on_monomial(g.pos, mx)).scale(I)
        sym = NCElement.monomial(mom, (0,) * n + tuple(m[n:]))
        cur = cur.map_momentum(lambda pm, s=sym: pm * s)
        total = total + cur.scale(c)
    return total


# ---------------------------------------------------------------- operators on windows

class WindowMismatch(ValueError):
    pass


class LinearOperator:
    """Linear map on one algebra given by its action on monomials.

    ``side`` fixes how operator products compose: for left operators
    (AB)f = A(Bf); for right operators f◁(AB) = (f◁A)◁B.
    """

    def __init__(self, alg: AlgebraSpec, fn: Callable[[tuple], NCElement], side: str = "left", name: str = ""):
        if side not in SIDES:
            raise ValueError("side must be 'left' or 'right'")
        self.alg = alg
        self.fn = fn
        self.side = side
        self.name = name
        self._cache: dict = {}

    def on_monomial(self, m: tuple) -> NCElement:
        r = self._cache.get(m)
        if r is None:
            r = self._cache[m] = self.fn(m)
        return r

    def __call__(self, e: NCElement) -> NCElement:
        acc: dict = {}
        for m, c in e.terms.items():
            for m2, c2 in self.on_monomial(m).terms.items():
                v = acc.get(m2, ZERO) + c * c2
                if v:
                    acc[m2] = v
                else:
                    acc.pop(m2, None)
        return NCElement(self.alg, acc)

    def _check(self, o: "LinearOperator"):
        if o.alg != self.alg or o.side != self.side:
            raise WindowMismatch(f"incompatible operators {self.name!r} and {o.name!r}")

    def __add__(self, o):
        self._check(o)
        return LinearOperator(self.alg, lambda m: self.on_monomial(m) + o.on_monomial(m), self.side, f"({self.name}+{o.name})")

    def __sub__(self, o):
        self._check(o)
        return LinearOperator(self.alg, lambda m: self.on_monomial(m) - o.on_monomial(m), self.side, f"({self.name}-{o.name})")

    def scale(self, c) -> "LinearOperator":
        c = QScalar(c)
        return LinearOperator(self.alg, lambda m: self.on_monomial(m).scale(c), self.side, f"{c}*{self.name}")

    def __matmul__(self, o):
        return compose(self, o)

    def matrix(self, window: Sequence[tuple]) -> tuple[list[tuple], list[list[QScalar]]]:
        """Exact matrix on a window: rows indexed by the image basis, columns by the window."""
        images = [self.on_monomial(m) for m in window]
        rows = sorted({m2 for im in images for m2 in im.terms}, key=lambda m: (sum(m), m))
        ri = {m: i for i, m in enumerate(rows)}
        mat = [[ZERO] * len(window) for _ in rows]
        for j, im in enumerate(images):
            for m2, c in im.terms.items():
                mat[ri[m2]][j] = c
        return rows, mat

    def first_difference(self, o: "LinearOperator", window: Iterable[tuple]):
        """First window monomial on which the two operators differ, with both images; None if equal."""
        for m in window:
            a, b = self.on_monomial(m), o.on_monomial(m)
            if a != b:
                return m, a, b
        return None

    def is_zero_on(self, window: Iterable[tuple]):
        for m in window:
            if self.on_monomial(m):
                return m
        return None


def compose(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    """Operator product AB (left: apply B first; right: apply A first)."""
    A._check(B)
    first, second = (B, A) if A.side == "left" else (A, B)
    return LinearOperator(A.alg, lambda m: second(first.on_monomial(m)), A.side, f"{A.name}{B.name}")


def commutator(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    return compose(A, B) - compose(B, A)


def identity_operator(alg: AlgebraSpec, side: str = "left") -> LinearOperator:
    return LinearOperator(alg, lambda m: NCElement.monomial(alg, m), side, "1")


def as_operator(obj, alg: AlgebraSpec, side: str = "left", name: str = "") -> LinearOperator:
    """Operator from a DerivativeAction or from multiplication by an NCElement (on the given side)."""
    if isinstance(obj, DerivativeAction):
        return LinearOperator(alg, lambda m: obj.on_monomial(alg, m), side, name or f"∂{obj.index}")
    if isinstance(obj, NCElement):
        if side == "left":
            return LinearOperator(alg, lambda m: obj * NCElement.monomial(alg, m), side, name or "mult")
        return LinearOperator(alg, lambda m: NCElement.monomial(alg, m) * obj, side, name or "mult")
    raise TypeError(f"cannot turn {type(obj).__name__} into an operator")


def scaled_multiplication(alg: AlgebraSpec, v: NCElement, per_degree: QScalar, side: str = "left",
                          name: str = "") -> LinearOperator:
    """Multiplication by a braided constant times v: f -> v * σ(f) (left) or σ(f) * v (right).

    σ rescales a monomial of spatial degree d by per_degree**d; this is the
    braided product of a constant whose ⊙ rule rescales the coordinates.
    """
    n = alg.ngens

    def fn(m):
        d = sum(m[:n])
        f = NCElement.monomial(alg, m, per_degree ** d if d else ONE)
        return v * f if side == "left" else f * v

    return LinearOperator(alg, fn, side, name or "V")


def window(alg: AlgebraSpec, N: int, low: int = 0, symbols: dict | None = None) -> list[tuple]:
    """All spatial monomials of degree low..N (line: exponents low..N), with fixed symbol exponents."""
    sym = [0] * len(SYMBOLS)
    for k, v in (symbols or {}).items():
        sym[SYMBOLS.index(k)] = v
    out = []
    if alg.space == "line":
        for e in range(low, N + 1):
            out.append(tuple([e] + sym))
        return out
    for d in range(max(low, 0), N + 1):
        for m in _basis(alg, d):
            out.append(tuple(list(m[: alg.ngens]) + sym))
    return out


# ---------------------------------------------------------------- derivative on P^2

def act_on_p2(space: str, calculus: str = "unhatted", side: str = "left", index: str | None = None,
              variant=None) -> NCElement:
    """∂_p^A acting on P^2 (2m)^-1 (left) or (2m)^-1 P^2 (right) in the momentum algebra.

    The inverse mass is a passive symbol here; the result keeps it.
    """
    from .ncalg import euclid_momentum, line_momentum, p_squared, resolve_variant

    if space == "line":
        mom = line_momentum()
        index = "1"
    else:
        variant = variant or resolve_variant()
        mom = euclid_momentum(variant)
        index = index or "3"
    p2 = p_squared(mom) * NCElement.gen(mom, "(2m)", -1)
    d = derivative(space, calculus, side, "momentum", index, variant)
    return d(p2)


def raised_momentum(space: str, index: str, variant=None, side: str = "left") -> NCElement:
    """P^A = g^{AB} P_B for left actions, P^A = P_B g^{BA} for right actions (the line has P^1 = P_1)."""
    from .ncalg import euclid_momentum, line_momentum, resolve_variant

    if space == "line":
        return NCElement.gen(line_momentum(), "p1")
    variant = variant or resolve_variant()
    mom = euclid_momentum(variant)
    gens = generators(mom)
    a = {"-": 0, "3": 1, "+": 2}[index]
    acc = NCElement(mom)
    for (i, j), c in mom.metric().items():
        if side == "left" and i == a:
            acc = acc + gens[j].scale(c)
        elif side == "right" and j == a:
            acc = acc + gens[i].scale(c)
    return acc
