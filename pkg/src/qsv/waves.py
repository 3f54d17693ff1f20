"""Truncated q-plane waves, time phase factors and residual checks.

A wave is stored as a :class:`TensorSeries`: exact coefficients on pairs
(position monomial, momentum monomial).  Time enters the position factor as
the central symbol ``t``; the inverse mass enters the momentum factor as
``(2m)``.  Unconjugate waves carry the position factor on the left of the
tensor product, conjugate waves on the right.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial
from typing import Callable, Iterable, Mapping

from .ncalg import (
    AlgebraSpec,
    NCElement,
    UnsupportedOperation,
    Variant,
    euclid_momentum,
    euclid_position,
    line_momentum,
    line_position,
    monomial_str,
    normal_order,
    p_squared,
    resolve_variant,
    theta_minus,
)
from .qcombi import qbinomial, qfactorial
from .qfield import I, ONE, ZERO, QScalar, lamp, qpow

CALCULI = ("RbarL", "RLbar")
MINUS_I = -I


@dataclass(frozen=True)
class GeometrySpec:
    """Calculus pair, conjugation flag and space of a plane-wave family.

    ``RbarL`` pairs with the unhatted derivatives (left action, or right
    barred action for conjugate waves); ``RLbar`` with the hatted ones.
    """

    space: str = "line"
    calculus: str = "RbarL"
    conjugate: bool = False
    variant: Variant | None = None

    def __post_init__(self):
        if self.space not in ("line", "euclid3"):
            raise ValueError(f"unknown space {self.space!r}")
        if self.calculus not in CALCULI:
            raise ValueError(f"unknown calculus {self.calculus!r}")

    @property
    def zeta(self) -> int:
        return -1 if self.space == "line" else 2

    @property
    def hatted(self) -> bool:
        return self.calculus == "RLbar"

    @property
    def sign(self) -> int:
        """+1 for (R̄,L), -1 for (R,L̄): the exponent sign of every q-base."""
        return -1 if self.hatted else 1

    @property
    def resolved_variant(self) -> Variant:
        return self.variant if self.variant is not None else resolve_variant()

    @property
    def pos(self) -> AlgebraSpec:
        return line_position() if self.space == "line" else euclid_position(self.resolved_variant)

    @property
    def mom(self) -> AlgebraSpec:
        return line_momentum() if self.space == "line" else euclid_momentum(self.resolved_variant)

    @property
    def phase_unit(self) -> QScalar:
        """i^-1 for unconjugate waves, -i^-1 = i for conjugate ones."""
        return I if self.conjugate else MINUS_I

    @property
    def tag(self) -> str:
        return f"{self.space}:{self.calculus}{':conj' if self.conjugate else ''}"

    def mirror(self) -> "GeometrySpec":
        return replace(self, calculus="RLbar" if self.calculus == "RbarL" else "RbarL")

    def conj(self) -> "GeometrySpec":
        return replace(self, conjugate=not self.conjugate)


def all_geometries(space: str) -> list[GeometrySpec]:
    return [GeometrySpec(space, c, j) for c in CALCULI for j in (False, True)]


def mirror_geometry(spec):
    """Swap the two calculi (and q with q^-1 for algebra specs); an involution."""
    from .ncalg import mirror_algebra

    if isinstance(spec, GeometrySpec):
        return spec.mirror()
    if isinstance(spec, AlgebraSpec):
        return mirror_algebra(spec)
    raise TypeError(f"cannot mirror {type(spec).__name__}")


# ---------------------------------------------------------------- series

Key = tuple  # (position monomial, momentum monomial)


class TensorSeries:
    __slots__ = ("geometry", "terms")

    def __init__(self, geometry: GeometrySpec, terms: Mapping[Key, QScalar] | None = None):
        self.geometry = geometry
        t = {}
        for k, c in (terms or {}).items():
            if c:
                t[k] = c
        self.terms = t

    @property
    def pos(self):
        return self.geometry.pos

    @property
    def mom(self):
        return self.geometry.mom

    @classmethod
    def tensor(cls, geometry: GeometrySpec, x: NCElement, p: NCElement, coeff=1) -> "TensorSeries":
        c0 = QScalar(coeff)
        out: dict[Key, QScalar] = {}
        for mx, cx in x.terms.items():
            for mp, cp in p.terms.items():
                _acc(out, (mx, mp), c0 * cx * cp)
        return cls(geometry, out)

    def _same(self, o: "TensorSeries"):
        if self.geometry.space != o.geometry.space:
            raise ValueError("series from different spaces")

    def __add__(self, o: "TensorSeries") -> "TensorSeries":
        self._same(o)
        t = dict(self.terms)
        for k, c in o.terms.items():
            _acc(t, k, c)
        return TensorSeries(self.geometry, t)

    def __neg__(self):
        return TensorSeries(self.geometry, {k: -c for k, c in self.terms.items()})

    def __sub__(self, o):
        return self + (-o)

    def scale(self, c) -> "TensorSeries":
        c = QScalar(c)
        return TensorSeries(self.geometry, {k: v * c for k, v in self.terms.items()})

    def __eq__(self, o):
        return isinstance(o, TensorSeries) and self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    def coeff(self, x: Iterable[int], p: Iterable[int]) -> QScalar:
        return self.terms.get((tuple(x), tuple(p)), ZERO)

    def spatial_degree(self, key: Key) -> int:
        return sum(key[0][: self.pos.ngens])

    def time_degree(self, key: Key) -> int:
        return key[0][self.pos.ngens]

    def truncate(self, max_deg: int | None = None, max_t: int | None = None) -> "TensorSeries":
        return TensorSeries(self.geometry, {
            k: c for k, c in self.terms.items()
            if (max_deg is None or self.spatial_degree(k) <= max_deg) and (max_t is None or self.time_degree(k) <= max_t)
        })

    def time_slice(self, n0: int = 0) -> "TensorSeries":
        return TensorSeries(self.geometry, {k: c for k, c in self.terms.items() if self.time_degree(k) == n0})

    def map_coeffs(self, f) -> "TensorSeries":
        return TensorSeries(self.geometry, {k: f(c) for k, c in self.terms.items()})

    def map_momentum(self, f: Callable[[NCElement], NCElement]) -> "TensorSeries":
        """Apply a linear map to the momentum factor of every term."""
        out: dict[Key, QScalar] = {}
        for (mx, mp), c in self.terms.items():
            img = f(NCElement.monomial(self.mom, mp))
            for mp2, c2 in img.terms.items():
                _acc(out, (mx, mp2), c * c2)
        return TensorSeries(self.geometry, out)

    def map_position(self, f: Callable[[tuple], NCElement]) -> "TensorSeries":
        """Apply a linear map, given on position monomials, to the position factor."""
        cache: dict[tuple, NCElement] = {}
        out: dict[Key, QScalar] = {}
        for (mx, mp), c in self.terms.items():
            img = cache.get(mx)
            if img is None:
                img = cache[mx] = f(mx)
            for mx2, c2 in img.terms.items():
                _acc(out, (mx2, mp), c * c2)
        return TensorSeries(self.geometry, out)

    def times_momentum(self, e: NCElement) -> "TensorSeries":
        """u ⊛ e for unconjugate waves, e ⊛ u for conjugate ones (momentum factor multiplied on its outer side)."""
        if self.geometry.conjugate:
            return self.map_momentum(lambda m: e * m)
        return self.map_momentum(lambda m: m * e)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kc: (sum(kc[0][0]), kc[0][0], sum(kc[0][1]), kc[0][1]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (mx, mp), c in self.sorted_terms():
            xs, ps = monomial_str(self.pos, mx), monomial_str(self.mom, mp)
            body = f"{ps} ⊗ {xs}" if self.geometry.conjugate else f"{xs} ⊗ {ps}"
            parts.append(f"[{c}] {body}")
        return " + ".join(parts)

    def __repr__(self):
        return f"TensorSeries<{self.geometry.tag}>({len(self.terms)} terms)"

    def first_term(self):
        if not self.terms:
            return None
        (mx, mp), c = self.sorted_terms()[0]
        return f"[{c}] {monomial_str(self.pos, mx)} ⊗ {monomial_str(self.mom, mp)}"


def _acc(d, k, v):
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


# ---------------------------------------------------------------- building blocks

def _time_mono(alg: AlgebraSpec, n0: int) -> tuple:
    e = [0] * alg.width
    e[alg.ngens] = n0
    return tuple(e)


def _mass(alg: AlgebraSpec, n: int) -> NCElement:
    return NCElement.gen(alg, "(2m)", -n) if n else NCElement.scalar(alg)


def _spatial_indices(space: str, N: int):
    if space == "line":
        for n in range(N + 1):
            yield (n,)
        return
    for d in range(N + 1):
        for a in range(d + 1):
            for b in range(d - a + 1):
                yield (a, b, d - a - b)  # (n+, n3, n-)


def _bases(g: GeometrySpec):
    s = g.sign
    return (s,) if g.space == "line" else (4 * s, 2 * s, 4 * s)


def _pos_factor(g: GeometrySpec, n: tuple) -> NCElement:
    alg = g.pos
    if g.space == "line":
        return NCElement.gen(alg, "x1", n[0])
    npl, n3, nmi = n
    word = ["x+"] * npl + ["x3"] * n3 + ["x-"] * nmi
    if g.hatted:
        word = ["x-"] * nmi + ["x3"] * n3 + ["x+"] * npl
    return normal_order(alg, word)


def _mom_factor(g: GeometrySpec, n: tuple) -> NCElement:
    """Momentum monomial paired with position exponents n, in the geometry's ordering."""
    alg = g.mom
    if g.space == "line":
        return NCElement.gen(alg, "p1", n[0])
    npl, n3, nmi = n
    word = ["p-"] * nmi + ["p3"] * n3 + ["p+"] * npl
    if g.hatted:
        word = ["p+"] * npl + ["p3"] * n3 + ["p-"] * nmi
    return normal_order(alg, word)


def _qfact(n: tuple, bases: tuple) -> QScalar:
    r = ONE
    for k, a in zip(n, bases):
        r = r * qfactorial(k, a)
    return r


# ---------------------------------------------------------------- plane waves

def plane_wave_line(geometry: GeometrySpec, N: int, K: int, printed_phase: bool = False) -> TensorSeries:
    """Braided-line plane wave to position degree N and time order K.

    The phase of the (n0, n1) term is (i^-1)^(n0+n1) (conjugate: i^(n0+n1)),
    the one consistent with the exponential form and the Schroedinger
    equation.  ``printed_phase=True`` gives (i^-1)^(2 n0 + n1) instead, kept
    only to document that this variant fails the equation.
    """
    g = geometry
    if g.space != "line":
        raise ValueError("plane_wave_line needs a line geometry")
    pos, mom = g.pos, g.mom
    u = g.phase_unit
    out: dict[Key, QScalar] = {}
    for n0 in range(K + 1):
        for n1 in range(N + 1):
            ph = u ** (2 * n0 + n1) if printed_phase else u ** (n0 + n1)
            c = ph / (qfactorial(n1, g.sign) * factorial(n0))
            x = list(_time_mono(pos, n0))
            x[0] = n1
            p = [0] * mom.width
            p[0] = 2 * n0 + n1
            p[mom.ngens + 1] = -n0
            out[(tuple(x), tuple(p))] = c
    return TensorSeries(g, out)


def plane_wave_3d_offshell(geometry: GeometrySpec, N: int) -> TensorSeries:
    """x0 = 0 slice of the q-exponential on q-deformed Euclidean space."""
    g = geometry
    if g.space != "euclid3":
        raise ValueError("plane_wave_3d_offshell needs a euclid3 geometry")
    u = g.phase_unit
    acc = TensorSeries(g)
    for n in _spatial_indices("euclid3", N):
        c = u ** sum(n) / _qfact(n, _bases(g))
        acc = acc + TensorSeries.tensor(g, _pos_factor(g, n), _mom_factor(g, n), c)
    return acc


def offshell_wave(geometry: GeometrySpec, N: int) -> TensorSeries:
    if geometry.space == "line":
        return plane_wave_line(geometry, N, 0)
    return plane_wave_3d_offshell(geometry, N)


def energy(g: GeometrySpec) -> NCElement:
    """p^2 (2m)^-1 in the momentum algebra of g."""
    mom = g.mom
    p2 = NCElement.gen(mom, "p1", 2) if g.space == "line" else p_squared(mom)
    return p2 * _mass(mom, 1)


def onshell_substitute(series: TensorSeries, K: int) -> TensorSeries:
    """Replace (p0)^n0 by the n0-fold star power of p^2 (2m)^-1, placed left of the spatial momenta."""
    g = series.geometry
    if any(series.time_degree(k) for k in series.terms):
        raise ValueError("onshell_substitute expects an x0 = 0 series")
    E = energy(g)
    u = g.phase_unit
    acc = TensorSeries(g)
    power = NCElement.scalar(g.mom)
    for n0 in range(K + 1):
        c = u ** n0 / factorial(n0)
        shifted = series.map_position(lambda mx, n0=n0: NCElement.monomial(g.pos, _add_t(mx, g.pos, n0)))
        acc = acc + shifted.map_momentum(lambda m, pw=power: pw * m).scale(c)
        power = power * E
    return acc


def _add_t(mx, alg, n0):
    e = list(mx)
    e[alg.ngens] += n0
    return tuple(e)


def plane_wave_3d_closed(geometry: GeometrySpec, N: int, K: int, *, printed_phase: bool = False,
                         k_upper: str = "n0", n3_sign: int = 1) -> TensorSeries:
    """Closed-form on-shell plane wave on q-deformed Euclidean space.

    Coefficient of the (n0, n+, n3, n-, k) term:
    c^n0 (-λ₊)^(n0-k) q^(s(-2k + 2 n3 (n0-k))) [n0 choose k]_{q^4s} / (n0! [[n+]]! [[n3]]! [[n-]]!)
    times u^(n- + n3 + n+ + 2 n0), u the phase unit, s = ±1 for the two calculi,
    and c = u^-1 so the total phase is u^(n0 + spatial degree).  Keyword
    switches reproduce the literal printed variants for comparison.
    """
    g = geometry
    if g.space != "euclid3":
        raise ValueError("plane_wave_3d_closed needs a euclid3 geometry")
    s = g.sign
    u = g.phase_unit
    pre = MINUS_I if printed_phase else u.inv()
    mom = g.mom
    acc = TensorSeries(g)
    for n0 in range(K + 1):
        kmax = n0 if k_upper == "n0" else n0 - 1
        for n in _spatial_indices("euclid3", N):
            npl, n3, nmi = n
            x = _pos_factor(g, n)
            x = NCElement(g.pos, {_add_t(m, g.pos, n0): c for m, c in x.terms.items()})
            base = _qfact(n, _bases(g)) * factorial(n0)
            for k in range(kmax + 1):
                c = (pre ** n0 * (-lamp) ** (n0 - k) * qpow(s * (-2 * k + n3_sign * 2 * n3 * (n0 - k)))
                     * qbinomial(n0, k, 4 * s) / base * u ** (nmi + n3 + npl + 2 * n0))
                word_n = (npl + n0 - k, n3 + 2 * k, nmi + n0 - k)
                p = _mom_factor(g, word_n) * _mass(mom, n0)
                acc = acc + TensorSeries.tensor(g, x, p, c)
    return acc


def plane_wave(geometry: GeometrySpec, N: int, K: int) -> TensorSeries:
    if geometry.space == "line":
        return plane_wave_line(geometry, N, K)
    return onshell_substitute(plane_wave_3d_offshell(geometry, N), K)


# ---------------------------------------------------------------- phase factors

def phase_factor(direction: str, geometry: GeometrySpec, K: int, scale: QScalar = ONE) -> TensorSeries:
    """exp(-i t E) (forward) or exp(+i E t) (backward) to order K, with E = scale * p^2 (2m)^-1.

    The position factor carries only powers of t.  The euclid3 series is
    built from the closed (C_q) coefficients in the geometry's ordering.
    """
    g = geometry
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    sgn = MINUS_I if direction == "forward" else I
    pos, mom = g.pos, g.mom
    acc = TensorSeries(g)
    for n in range(K + 1):
        c = sgn ** n * QScalar(scale) ** n / factorial(n)
        x = NCElement.monomial(pos, _time_mono(pos, n))
        if g.space == "line":
            p = NCElement.gen(mom, "p1", 2 * n)
        else:
            s = g.sign
            p = NCElement(mom)
            for k in range(n + 1):
                ck = qpow(-2 * s * k) * (-lamp) ** (n - k) * qbinomial(n, k, 4 * s)
                p = p + _mom_factor(g, (n - k, 2 * k, n - k)).scale(ck)
        acc = acc + TensorSeries.tensor(g, x, p * _mass(mom, n), c)
    return acc


def series_product(a: TensorSeries, b: TensorSeries) -> TensorSeries:
    """a ⊛ b: position factors multiplied, momentum factors multiplied in the same order.

    Only used where one factor has a central (time-only) position part, so no
    braiding between the tensor legs arises.
    """
    g = a.geometry
    out: dict[Key, QScalar] = {}
    for (xa, pa), ca in a.terms.items():
        ea_x = NCElement.monomial(g.pos, xa)
        ea_p = NCElement.monomial(g.mom, pa)
        for (xb, pb), cb in b.terms.items():
            x = ea_x * NCElement.monomial(g.pos, xb)
            p = ea_p * NCElement.monomial(g.mom, pb)
            for mx, cx in x.terms.items():
                for mp, cp in p.terms.items():
                    _acc(out, (mx, mp), ca * cb * cx * cp)
    return TensorSeries(g, out)


def factorization_check(geometry: GeometrySpec, N: int, K: int) -> TensorSeries:
    """Residual of u = u|_{x0=0} ⊛ phase (unconjugate) or phase ⊛ u|_{x0=0} (conjugate)."""
    g = geometry
    u = plane_wave(g, N, K)
    slice0 = u.time_slice(0)
    if g.conjugate:
        rhs = series_product(phase_factor("backward", g, K), slice0)
    else:
        rhs = series_product(slice0, phase_factor("forward", g, K))
    return (u - rhs).truncate(N, K)


def phase_cancellation(geometry: GeometrySpec, K: int) -> TensorSeries:
    """Low-order residual of backward ⊛ forward phase minus 1."""
    g = geometry
    prod = series_product(phase_factor("backward", g, K), phase_factor("forward", g, K))
    one = TensorSeries.tensor(g, NCElement.scalar(g.pos), NCElement.scalar(g.mom))
    return (prod - one).truncate(None, K)


# ---------------------------------------------------------------- inverse momentum eigenfunctions

def theta_variant(g: GeometrySpec) -> str:
    """(R̄,L) families use the L-type inversion, (R,L̄) families the R-type one."""
    return "R" if g.hatted else "L"


def inverse_wave_line(geometry: GeometrySpec, N: int, K: int) -> TensorSeries:
    """Apply the braided-line momentum inversion to the momentum part of the on-shell wave."""
    if geometry.space != "line":
        raise UnsupportedOperation("inverse-momentum eigenfunctions are implemented on the braided line only")
    u = plane_wave_line(geometry, N, K)
    v = theta_variant(geometry)
    return u.map_momentum(lambda m: theta_minus(m, v))


def braided_momentum_product(series: TensorSeries, e: NCElement, s: int) -> TensorSeries:
    """Line momentum product with braiding ψ(p⊗p) = q^s p⊗p: p^a ⊛ p^b = q^(s a b) p^(a+b)."""
    out: dict[Key, QScalar] = {}
    for (mx, mp), c in series.terms.items():
        for me, ce in e.terms.items():
            m = tuple(x + y for x, y in zip(mp, me))
            _acc(out, (mx, m), c * ce * qpow(s * mp[0] * me[0]))
    return TensorSeries(series.geometry, out)


# ---------------------------------------------------------------- residuals

def _boundary_filter(res: TensorSeries, max_deg: int | None, max_t: int | None) -> TensorSeries:
    return res.truncate(max_deg, max_t)


def eigen_residual(wave: TensorSeries, observable, N: int, K: int | None = None) -> TensorSeries:
    """i∂_A acting on the wave minus the wave times p_A (observable = index), or the H0 analog (observable = "H0").

    Unconjugate waves use the left action, conjugate waves the right one; the
    calculus (hatted or not) follows the geometry.  Only terms strictly below
    the truncation boundary are returned.
    """
    from .qcalc import apply_momentum_operator, momentum_generator

    g = wave.geometry
    if observable == "H0":
        lhs = apply_momentum_operator(wave, energy(g))
        rhs = wave.times_momentum(energy(g))
        deg = 2
    else:
        lhs = apply_momentum_operator(wave, momentum_generator(g, observable))
        rhs = wave.times_momentum(momentum_generator(g, observable))
        deg = 1
    return _boundary_filter(lhs - rhs, N - deg, K)


def schrodinger_residual(wave: TensorSeries, N: int, K: int, hamiltonian_scale: QScalar = ONE) -> TensorSeries:
    """i∂0 ▷ u - H0 ▷ u (unconjugate) or u ◁ i∂0 - u ◁ H0 (conjugate), below the boundary."""
    from .qcalc import apply_momentum_operator, time_derivative

    g = wave.geometry
    side = "right" if g.conjugate else "left"
    dt = time_derivative(side)
    lhs = wave.map_position(lambda mx: dt(g.pos, mx)).scale(I)
    rhs = apply_momentum_operator(wave, energy(g)).scale(hamiltonian_scale)
    return _boundary_filter(lhs - rhs, N - 2, K - 1)


def inverse_energy_residual(geometry: GeometrySpec, N: int, K: int) -> TensorSeries:
    """H0 ▷ u - u ⊛ (q^(±zeta) p^2 (2m)^-1) for the inverted line wave, below the boundary.

    The eigenvalue picks up q^zeta for the unhatted families and q^-zeta for
    the hatted ones; the product on momentum space is braided with
    p ⊗ p -> q^(∓1) p ⊗ p, the same sign as the inversion variant.
    """
    from .qcalc import apply_momentum_operator

    g = geometry
    u = inverse_wave_line(g, N, K)
    s = 1 if g.hatted else -1
    E = energy(g)
    lhs = apply_momentum_operator(u, E)
    rhs = braided_momentum_product(u, E.scale(qpow(-s * g.zeta)), s)
    return _boundary_filter(lhs - rhs, N - 2, K)
