"""Hamiltonians with potentials, Heisenberg/Ehrenfest operator identities and Hermiticity.

Operators act on truncated windows of monomials.  Multiplication by a
potential V = v * a, with a a real central constant, is braided: passing a to
the far end rescales the coordinates it crosses (the ⊙ rules for a), so the
operator is f -> v σ(f) for left actions and σ(f) v for right actions.  The
inverse mass is treated the same way on momentum space.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .ncalg import (
    NCElement,
    UnsupportedOperation,
    conjugate_element,
    euclid_momentum,
    euclid_position,
    is_central,
    line_momentum,
    line_position,
    p_squared,
    r_squared,
    resolve_variant,
)
from .qcalc import (
    LinearOperator,
    as_operator,
    commutator,
    compose,
    derivative,
    momentum_indices,
    position_indices,
    raised_momentum,
    scaled_multiplication,
    window,
)
from .qcombi import qnum
from .qfield import I, ONE, ZERO, QScalar, qpow

ZETA = {"line": -1, "euclid3": 2}
FORMS = ("H", "H'", "H''")
CALCULI = ("unhatted", "hatted")
SIDES = ("left", "right")


# ---------------------------------------------------------------- reports

@dataclass
class CheckResult:
    check_id: str
    space: str
    geometry: str
    window: str
    status: str
    witness: str | None = None
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in ("pass", "unsupported")

    def as_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "space": self.space,
            "geometry": self.geometry,
            "window": self.window,
            "status": self.status,
            "witness": self.witness,
        }


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# ---------------------------------------------------------------- Hamiltonians

def _pos(space: str, variant=None):
    return line_position() if space == "line" else euclid_position(variant or resolve_variant())


def _mom(space: str, variant=None):
    return line_momentum() if space == "line" else euclid_momentum(variant or resolve_variant())


def free_kinetic(space: str, variant=None) -> NCElement:
    """p^2 (2m)^-1 in the momentum algebra."""
    mom = _mom(space, variant)
    p2 = NCElement.gen(mom, "p1", 2) if space == "line" else p_squared(mom)
    return p2 * NCElement.gen(mom, "(2m)", -1)


@dataclass(frozen=True)
class HamiltonianSpec:
    """H = c H0 + V with c = 1, q^-ζ or q^ζ for the forms H, H', H''.

    ``b`` is the exponent in the braiding rule of the constant carried by V
    (V = -a r^-b); polynomial potentials (r^2)^j use b = -2j.
    """

    space: str
    kinetic: NCElement
    potential: NCElement | None = None
    form: str = "H"
    b: int = 0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown Hamiltonian form {self.form!r}")
        if self.potential is not None and not is_central(self.potential):
            raise ValueError("the potential must be central in its position algebra")

    @property
    def prefactor(self) -> QScalar:
        z = ZETA[self.space]
        return {"H": ONE, "H'": qpow(-z), "H''": qpow(z)}[self.form]

    @property
    def variant(self):
        return self.kinetic.alg.variant if self.space == "euclid3" else None

    def with_form(self, form: str) -> "HamiltonianSpec":
        return replace(self, form=form)

    def with_potential(self, v: NCElement | None, b: int = 0) -> "HamiltonianSpec":
        return replace(self, potential=v, b=b)


def hamiltonian_free(space: str, variant=None) -> HamiltonianSpec:
    return HamiltonianSpec(space, free_kinetic(space, variant))


def potential_line(b: int) -> NCElement:
    """V = -a x^-b on the braided line."""
    if not isinstance(b, int) or b < 1:
        raise ValueError("potential_line needs an integer b >= 1")
    alg = line_position()
    return NCElement.monomial(alg, (-b, 0, 0, 1), -1)


def potential_euclid(j: int, variant=None) -> NCElement:
    """(r^2)^j, a polynomial central element of the q-deformed Euclidean position algebra."""
    if not isinstance(j, int) or j < 1:
        raise ValueError("potential_euclid needs an integer j >= 1")
    return r_squared(_pos("euclid3", variant)) ** j


def line_hamiltonian(b: int | None = None, form: str = "H") -> HamiltonianSpec:
    h = hamiltonian_free("line").with_form(form)
    return h if b is None else h.with_potential(potential_line(b), b)


def euclid_hamiltonian(j: int | None = None, form: str = "H", variant=None) -> HamiltonianSpec:
    h = hamiltonian_free("euclid3", variant).with_form(form)
    return h if j is None else h.with_potential(potential_euclid(j, variant), -2 * j)


# ---------------------------------------------------------------- braided constants

def constant_scaling(space: str, calculus: str, b: int) -> QScalar:
    """Per-degree coordinate rescaling when the constant a of V = -a r^-b crosses coordinates.

    Unhatted derivatives pair with the barred rule (x -> q^b x on the line,
    q^2b x in three dimensions), hatted ones with the unbarred rule.
    """
    k = b if space == "line" else 2 * b
    return qpow(k if calculus == "unhatted" else -k)


def mass_scaling(space: str, calculus: str) -> QScalar:
    """Per-degree momentum rescaling when (2m)^-1 crosses momenta (inverse of the m rule)."""
    k = 2 if space == "line" else 4
    return qpow(-k if calculus == "unhatted" else k)


def leibniz_scaling(space: str, calculus: str, side: str, sector: str, central: NCElement, N: int = 2):
    """The power k with ∂(c f) = (∂c) f + q^k c ∂f (central c placed as in the Ehrenfest checks).

    Returns None if no single power works on the window.
    """
    alg = central.alg
    labels = position_indices(space) if sector == "position" else momentum_indices(space)
    # position: central on the acting side; momentum: on the opposite side
    c_left = (side == "left") == (sector == "position")
    found = set()
    for A in labels:
        d = derivative(space, calculus, side, sector, A, alg.variant if space == "euclid3" else None)
        for m in window(alg, N, 1 if space == "euclid3" else -N):
            f = NCElement.monomial(alg, m)
            if c_left:
                lhs, base = d(central * f) - d(central) * f, central * d(f)
            else:
                lhs, base = d(f * central) - f * d(central), d(f) * central
            if not base:
                if lhs:
                    return None
                continue
            hit = [k for k in range(-12, 13) if lhs == base.scale(qpow(k))]
            if not hit:
                return None
            found.add(hit[0])
    return found.pop() if len(found) == 1 else None


# ---------------------------------------------------------------- operator realizations

def _i_derivative_ops(space, calculus, side, sector, variant):
    alg = _pos(space, variant) if sector == "position" else _mom(space, variant)
    labels = position_indices(space) if sector == "position" else momentum_indices(space)
    ops = {}
    for A in labels:
        d = derivative(space, calculus, side, sector, A, variant)
        ops[A] = as_operator(d, alg, side, f"i∂{A}").scale(I)
    return alg, ops


def _word_operator(alg, ops_by_gen, e: NCElement, side: str, extra_symbols=True) -> LinearOperator:
    """Realize e(P) from generator operators: sum over normal words, composed in word order."""
    n = alg.ngens
    terms = []
    for m, c in e.terms.items():
        word = [i for i in range(n) for _ in range(m[i])]
        sym = m[n:]
        terms.append((word, sym, c))

    def fn(mono):
        acc = NCElement(alg)
        for word, sym, c in terms:
            cur = NCElement.monomial(alg, mono)
            seq = list(reversed(word)) if side == "left" else word
            for i in seq:
                cur = ops_by_gen[i](cur)
            if any(sym) and extra_symbols:
                cur = NCElement(alg, {mm[:n] + tuple(a + b for a, b in zip(mm[n:], sym)): cc for mm, cc in cur.terms.items()})
            acc = acc + cur.scale(c)
        return acc

    return LinearOperator(alg, fn, side, "word")


def kinetic_operator(h: HamiltonianSpec, calculus: str, side: str) -> LinearOperator:
    """c (2m)^-1 P^2 acting on position space, P_A = i∂_A; the inverse mass stays a passive symbol."""
    v = h.variant
    alg, ops = _i_derivative_ops(h.space, calculus, side, "position", v)
    mom = h.kinetic.alg
    # momentum generator i  <->  position-sector derivative label i
    gen_ops = [ops[lab] for lab in position_indices(h.space)]
    kin = NCElement(mom, {m: c for m, c in h.kinetic.terms.items()})
    return _word_operator(alg, gen_ops, kin, side).scale(h.prefactor)


def potential_operator(h: HamiltonianSpec, calculus: str, side: str, v: NCElement | None = None) -> LinearOperator:
    alg = _pos(h.space, h.variant)
    v = h.potential if v is None else v
    if v is None:
        return LinearOperator(alg, lambda m: NCElement(alg), side, "0")
    return scaled_multiplication(alg, v, constant_scaling(h.space, calculus, h.b), side, "V")


def position_hamiltonian(h: HamiltonianSpec, calculus: str, side: str) -> LinearOperator:
    return kinetic_operator(h, calculus, side) + potential_operator(h, calculus, side)


def _window_for(h: HamiltonianSpec, N: int):
    alg = _pos(h.space, h.variant)
    if h.space == "line":
        return window(alg, N, -N)
    return window(alg, N)


def _witness(diff):
    if diff is None:
        return None
    m, a, b = diff
    return f"at {m}: {a} != {b}"


def _geom(calculus, side):
    return f"{calculus}:{side}"


# ---------------------------------------------------------------- Ehrenfest checks

def hp_commutator_check(h: HamiltonianSpec, N: int, calculus: str = "unhatted", side: str = "left") -> CheckResult:
    """[H0, P_A] = 0 as operators on the position window."""
    h0 = replace(h, potential=None)
    alg, ops = _i_derivative_ops(h.space, calculus, side, "position", h.variant)
    H0 = kinetic_operator(h0, calculus, side)
    win = _window_for(h, N)
    for A, P in ops.items():
        bad = commutator(H0, P).is_zero_on(win)
        if bad is not None:
            return CheckResult("comHP", h.space, _geom(calculus, side), f"N={N}", "fail", f"P{A} at {bad}")
    return CheckResult("comHP", h.space, _geom(calculus, side), f"N={N}", "pass")


def ehrenfest_force_check(h: HamiltonianSpec, N: int, calculus: str = "unhatted", side: str = "left") -> CheckResult:
    """i[H, P_A] = ∂_A ▷ V (left) and i[P_A, H] = V ◁ ∂_A (right), both as braided multiplications."""
    alg, ops = _i_derivative_ops(h.space, calculus, side, "position", h.variant)
    H = position_hamiltonian(h, calculus, side)
    win = _window_for(h, N)
    for A, P in ops.items():
        lhs = (commutator(H, P) if side == "left" else commutator(P, H)).scale(I)
        if h.potential is None:
            bad = lhs.is_zero_on(win)
            if bad is not None:
                return CheckResult("force", h.space, _geom(calculus, side), f"N={N}", "fail", f"∂{A} at {bad}")
            continue
        d = derivative(h.space, calculus, side, "position", A, h.variant)
        rhs = potential_operator(h, calculus, side, d(h.potential))
        diff = lhs.first_difference(rhs, win)
        if diff is not None:
            return CheckResult("force", h.space, _geom(calculus, side), f"N={N}", "fail", f"∂{A} " + _witness(diff))
    return CheckResult("force", h.space, _geom(calculus, side), f"N={N}", "pass")


def _mom_window(space, N, variant):
    return window(_mom(space, variant), N)


def momentum_side_hamiltonian(h: HamiltonianSpec, calculus: str, side: str, include_potential: bool = True):
    """H on momentum space: braided multiplication by c p^2 (2m)^-1 plus V(X) built from X^A = i∂_p^A."""
    mom = h.kinetic.alg
    place = "right" if side == "left" else "left"
    sig = mass_scaling(h.space, calculus)
    kin = h.kinetic.scale(h.prefactor)
    H0 = _placed_multiplication(mom, kin, sig, place, side)
    if not include_potential or h.potential is None:
        return H0
    _, xops = _i_derivative_ops(h.space, calculus, side, "momentum", h.variant)
    gen_ops = [xops[lab] for lab in momentum_indices(h.space)]
    V = h.potential
    if any(x < 0 for m in V.terms for x in m[: V.alg.ngens]):
        # Laurent potentials have no polynomial realization through X; V is central and drops out
        return H0
    return H0 + _potential_from_x(mom, gen_ops, V, side)


def _potential_from_x(alg, gen_ops, e: NCElement, side: str) -> LinearOperator:
    """The operator acting on waves as multiplication of the position factor by e.

    X^A ▷ (X^B ▷ u) = x^B x^A ⊛ u and (u ◁ X^A) ◁ X^B = u ⊛ x^B x^A, so left
    actions apply the letters of a normal word in order and right actions in
    reverse order.
    """
    n = e.alg.ngens
    k = alg.ngens

    def fn(mono):
        acc = NCElement(alg)
        for m, c in e.terms.items():
            word = [i for i in range(n) for _ in range(m[i])]
            if side == "right":
                word.reverse()
            cur = NCElement.monomial(alg, mono)
            for i in word:
                cur = gen_ops[i](cur)
            sym = m[n:]
            if any(sym):
                cur = NCElement(alg, {mm[:k] + tuple(a + b for a, b in zip(mm[k:], sym)): cc for mm, cc in cur.terms.items()})
            acc = acc + cur.scale(c)
        return acc

    return LinearOperator(alg, fn, side, "V(X)")


def _placed_multiplication(alg, v: NCElement, sig: QScalar, place: str, side: str) -> LinearOperator:
    n = alg.ngens

    def fn(m):
        d = sum(m[:n])
        f = NCElement.monomial(alg, m, sig ** d if d else ONE)
        return f * v if place == "right" else v * f

    return LinearOperator(alg, fn, side, "mult")


def ehrenfest_velocity_check(h: HamiltonianSpec, N: int, calculus: str = "unhatted", side: str = "left") -> CheckResult:
    """i[H, X^A] = ∂_p^A ▷ P^2(2m)^-1 (left) and i[X^A, H] = (2m)^-1 P^2 ◁ ∂_p^A (right) on momentum space."""
    mom = h.kinetic.alg
    _, xops = _i_derivative_ops(h.space, calculus, side, "momentum", h.variant)
    H = momentum_side_hamiltonian(h, calculus, side)
    win = _mom_window(h.space, N, h.variant)
    place = "right" if side == "left" else "left"
    sig = mass_scaling(h.space, calculus)
    for A, X in xops.items():
        lhs = (commutator(H, X) if side == "left" else commutator(X, H)).scale(I)
        d = derivative(h.space, calculus, side, "momentum", A, h.variant)
        rhs = _placed_multiplication(mom, d(h.kinetic.scale(h.prefactor)), sig, place, side)
        diff = lhs.first_difference(rhs, win)
        if diff is not None:
            return CheckResult("velocity", h.space, _geom(calculus, side), f"N={N}", "fail", f"X{A} " + _witness(diff))
    return CheckResult("velocity", h.space, _geom(calculus, side), f"N={N}", "pass")


def velocity_bracket(space: str, calculus: str, side: str, variant=None) -> QScalar:
    """The scalar c with ∂_p^A acting on P^2(2m)^-1 equal to c P^A (2m)^-1, the same for every A."""
    from .qcalc import act_on_p2

    mom = _mom(space, variant)
    mass = NCElement.gen(mom, "(2m)", -1)
    vals = set()
    for A in momentum_indices(space):
        r = act_on_p2(space, calculus, side, A if space == "euclid3" else None, variant)
        P = raised_momentum(space, A if space == "euclid3" else "1", variant, side) * mass
        m0 = next(iter(P.terms))
        c = r.coeff(m0) / P.coeff(m0)
        if r != P.scale(c):
            raise ArithmeticError(f"∂_p^{A} on P^2 is not proportional to P^{A}")
        vals.add(c)
    if len(vals) != 1:
        raise ArithmeticError("bracket factor depends on the index")
    return vals.pop()


def displayed_bracket(space: str, calculus: str, side: str) -> QScalar:
    """[[2]] at base q^(±1) (line) or q^(∓2) (euclid3), minus sign for right actions."""
    a = 1 if space == "line" else -2
    if calculus == "hatted":
        a = -a
    c = qnum(2, a)
    return c if side == "left" else -c


def raised_derivative_element(h: HamiltonianSpec, calculus: str, side: str, A: str, f: NCElement) -> NCElement:
    """∂^A acting on f: g^{AB} ∂_B ▷ f (left) or f ◁ ∂_B g^{BA} (right)."""
    if h.space == "line":
        return derivative("line", calculus, side, "position", "1")(f)
    mom = h.kinetic.alg
    labels = ("-", "3", "+")
    a = labels.index(A)
    acc = NCElement(f.alg)
    for (i, j), c in mom.metric().items():
        if side == "left" and i == a:
            acc = acc + derivative("euclid3", calculus, side, "position", labels[j], h.variant)(f).scale(c)
        elif side == "right" and j == a:
            acc = acc + derivative("euclid3", calculus, side, "position", labels[i], h.variant)(f).scale(c)
    return acc


def _raised_momentum_operator(h: HamiltonianSpec, calculus: str, side: str, A: str) -> LinearOperator:
    alg, ops = _i_derivative_ops(h.space, calculus, side, "position", h.variant)
    if h.space == "line":
        return ops["1"]
    labels = ("-", "3", "+")
    a = labels.index(A)
    acc = None
    for (i, j), c in h.kinetic.alg.metric().items():
        lab = None
        if side == "left" and i == a:
            lab = labels[j]
        elif side == "right" and j == a:
            lab = labels[i]
        if lab is None:
            continue
        term = ops[lab].scale(c)
        acc = term if acc is None else acc + term
    return acc


def newton_second_order_check(h: HamiltonianSpec, N: int, calculus: str = "unhatted", side: str = "left",
                              Nv: int | None = None) -> CheckResult:
    """Second time derivative of X^A from the two first-order identities.

    After the velocity identity, d X^A/dt = c P^A (2m)^-1, the second
    commutator with H is evaluated as an operator identity on position space:
    i[H, c P^A (2m)^-1] = c (∂^A ▷ V)(2m)^-1 (left), mirrored for right
    actions.  c must be the displayed bracket factor.
    """
    geo = _geom(calculus, side)
    win_s = f"N={N}"
    first = [
        ehrenfest_velocity_check(h, Nv if Nv is not None else min(N, 3), calculus, side),
        ehrenfest_force_check(h, N, calculus, side),
    ]
    for r in first:
        if r.status != "pass":
            return CheckResult("newton2", h.space, geo, win_s, "fail", f"first-order {r.check_id}: {r.witness}")
    c0 = velocity_bracket(h.space, calculus, side, h.variant)
    if c0 != displayed_bracket(h.space, calculus, side):
        return CheckResult("newton2", h.space, geo, win_s, "fail", f"bracket {c0}")
    c = c0 * h.prefactor
    alg = _pos(h.space, h.variant)
    H = position_hamiltonian(h, calculus, side)
    mass_sym = NCElement.gen(alg, "(2m)", -1)
    labels = momentum_indices(h.space) if h.space == "euclid3" else ["1"]
    win = _window_for(h, N)
    for A in labels:
        PA = _raised_momentum_operator(h, calculus, side, A)
        vel = compose(PA, as_operator(mass_sym, alg, side)).scale(c)
        lhs = (commutator(H, vel) if side == "left" else commutator(vel, H)).scale(I)
        if h.potential is None:
            bad = lhs.is_zero_on(win)
            if bad is not None:
                return CheckResult("newton2", h.space, geo, win_s, "fail", f"A={A} at {bad}")
            continue
        force = raised_derivative_element(h, calculus, side, A, h.potential)
        rhs = potential_operator(h, calculus, side, force * mass_sym).scale(c)
        diff = lhs.first_difference(rhs, win)
        if diff is not None:
            return CheckResult("newton2", h.space, geo, win_s, "fail", f"A={A} " + _witness(diff))
    return CheckResult("newton2", h.space, geo, win_s, "pass", detail={"bracket": str(c0)})


def printed_second_order_value(h: HamiltonianSpec, calculus: str, side: str, A: str = "1") -> NCElement:
    """The literal displayed right-hand side: -[[2]] (i∂ ▷ V)(2m)^-1 (left) or [[2]](2m)^-1 (V ◁ i∂) (right)."""
    if h.potential is None:
        return NCElement(_pos(h.space, h.variant))
    alg = h.potential.alg
    mass_sym = NCElement.gen(alg, "(2m)", -1)
    br = displayed_bracket(h.space, calculus, "left")
    force = raised_derivative_element(h, calculus, side, A, h.potential).scale(I)
    return (force * mass_sym).scale(-br if side == "left" else br)


def composed_second_order_value(h: HamiltonianSpec, calculus: str, side: str, A: str = "1") -> NCElement:
    """c (∂^A ▷ V)(2m)^-1 with c the velocity bracket (including the right-action sign)."""
    if h.potential is None:
        return NCElement(_pos(h.space, h.variant))
    alg = h.potential.alg
    mass_sym = NCElement.gen(alg, "(2m)", -1)
    c = velocity_bracket(h.space, calculus, side, h.variant)
    return (raised_derivative_element(h, calculus, side, A, h.potential) * mass_sym).scale(c)


# ---------------------------------------------------------------- Hermiticity

def hermiticity_check(h: HamiltonianSpec) -> bool:
    """conj(H) = H: kinetic term, form prefactor and potential all self-conjugate (line only)."""
    if h.space != "line":
        raise UnsupportedOperation("conjugation is implemented on the braided line only")
    if h.prefactor.conjugate() != h.prefactor:
        return False
    if conjugate_element(h.kinetic) != h.kinetic:
        return False
    if h.potential is not None and conjugate_element(h.potential) != h.potential:
        return False
    return True


# ---------------------------------------------------------------- continuity (line)
#
# A density or flux on the line is bilinear in two truncated plane waves, so
# it carries two momentum legs.  Terms are keyed (x, t, p_first, p_second, m)
# with m the total exponent of (2m); all masses are collected at the far
# right.  Wave functions are treated as scalars with trivial braiding, so the
# x,t-product of the two factors is the commutative one.

BKey = tuple


@dataclass
class Bilinear:
    terms: dict = field(default_factory=dict)

    def __add__(self, other: "Bilinear") -> "Bilinear":
        out = dict(self.terms)
        for k, v in other.terms.items():
            _acc_b(out, k, v)
        return Bilinear(out)

    def scale(self, c) -> "Bilinear":
        c = QScalar(c) if not isinstance(c, QScalar) else c
        return Bilinear({k: v * c for k, v in self.terms.items() if v * c})

    def conjugate(self) -> "Bilinear":
        """Coefficient conjugation with the two legs swapped (conjugation reverses products)."""
        return Bilinear({(x, t, b, a, m): v.conjugate() for (x, t, a, b, m), v in self.terms.items()})

    def with_mass(self, k: int) -> "Bilinear":
        return Bilinear({(x, t, a, b, m + k): v for (x, t, a, b, m), v in self.terms.items()})

    def interior(self, N: int, K: int) -> "Bilinear":
        """Terms strictly below the truncation boundary (x-degree <= N-2, t-degree <= K-1)."""
        return Bilinear({k: v for k, v in self.terms.items() if k[0] <= N - 2 and k[1] <= K - 1})

    def limit_q_to_1(self) -> dict:
        return {k: v.limit_q_to_1() for k, v in self.terms.items() if v.limit_q_to_1()}

    def first_term(self) -> str | None:
        if not self.terms:
            return None
        k = min(self.terms)
        x, t, a, b, m = k
        return f"[{self.terms[k]}] x^{x} t^{t} ⊗ p'^{a} ⊗ p^{b} (2m)^{m}"

    def __len__(self):
        return len(self.terms)


def _acc_b(d, k, v):
    if not v:
        return
    r = d.get(k, ZERO) + v
    if r:
        d[k] = r
    else:
        d.pop(k, None)


def _line_wave(calculus: str, conjugate: bool, N: int, K: int, time_scale=ONE, conj_coeffs=False) -> dict:
    """Plane wave on the line as {(x, t, p, m): c}, with t -> time_scale * t."""
    from .waves import GeometrySpec, plane_wave_line

    g = GeometrySpec("line", "RbarL" if calculus == "unhatted" else "RLbar", conjugate)
    s = QScalar(time_scale) if not isinstance(time_scale, QScalar) else time_scale
    out = {}
    for (mx, mp), c in plane_wave_line(g, N, K).terms.items():
        v = c * s ** mx[1]
        out[(mx[0], mx[1], mp[0], mp[2])] = v.conjugate() if conj_coeffs else v
    return out


def _pair(first: dict, second: dict) -> Bilinear:
    out: dict = {}
    for (x1, t1, p1, m1), c1 in first.items():
        for (x2, t2, p2, m2), c2 in second.items():
            _acc_b(out, (x1 + x2, t1 + t2, p1, p2, m1 + m2), c1 * c2)
    return Bilinear(out)


def _wave_dx(w: dict, calculus: str, side: str) -> dict:
    d = derivative("line", calculus, side, "position", "1")
    alg = line_position()
    out: dict = {}
    for (x, t, p, m), c in w.items():
        for mono, c2 in d.on_monomial(alg, (x, 0, 0, 0)).terms.items():
            _acc_b(out, (mono[0], t, p, m), c * c2)
    return out


def _bilinear_dx(b: Bilinear, calculus: str, side: str = "left") -> Bilinear:
    d = derivative("line", calculus, side, "position", "1")
    alg = line_position()
    out: dict = {}
    for (x, t, a, bb, m), c in b.terms.items():
        for mono, c2 in d.on_monomial(alg, (x, 0, 0, 0)).terms.items():
            _acc_b(out, (mono[0], t, a, bb, m), c * c2)
    return Bilinear(out)


def _bilinear_dt(b: Bilinear) -> Bilinear:
    out: dict = {}
    for (x, t, a, bb, m), c in b.terms.items():
        if t:
            _acc_b(out, (x, t - 1, a, bb, m), c * t)
    return Bilinear(out)


@dataclass
class DensityFlux:
    """Density rho and flux j of one continuity family on the line."""

    family: str
    rho: Bilinear
    j: Bilinear
    calculus: str
    flux: str


FAMILIES = ("1*", "2*", "1*'", "2*'")


def density_flux(family: str = "1*", N: int = 6, K: int = 3, flux: str = "printed") -> DensityFlux:
    """Build rho and j for a family of the line continuity equations.

    family "1*" / "2*": rho = conj(psi_i(-t)) ⊛ psi_i*(t) with psi_i* the
    unconjugate wave of the unhatted / hatted calculus and psi_i the
    conjugate wave evolved with H' / H''.  The primed families take the
    complex-conjugate waves with the factor order reversed.

    flux "printed" uses the displayed flux,
    j = i q^(-zeta) [(chi ◁ ∂) ⊛ psi] (2m)^-1 - i [chi ⊛ (∂ ▷ psi)] (2m)^-1
    (hatted: q^zeta, ◁̄ ∂̂ and ∂̂ ▷̄).  "corrected" flips the sign of the one
    term whose q -> 1 limit disagrees with the classical flux: the first
    term for unprimed families, the second for primed ones.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown continuity family {family!r}")
    if flux not in ("printed", "corrected"):
        raise ValueError(f"unknown flux variant {flux!r}")
    zeta = ZETA["line"]
    hatted = family.startswith("2")
    primed = family.endswith("'")
    calc = "hatted" if hatted else "unhatted"
    pref = qpow(zeta) if hatted else qpow(-zeta)
    # psi_i* solves i d/dt psi = H psi; psi_i solves the right-action equation with H' (H'')
    psi = _line_wave(calc, False, N, K)
    chi = _line_wave(calc, True, N, K, time_scale=-pref, conj_coeffs=True)
    unit = I
    if primed:
        psi = {k: v.conjugate() for k, v in psi.items()}
        chi = {k: v.conjugate() for k, v in chi.items()}
        unit = -I
    sgn = ONE if flux == "printed" else -ONE
    if primed:
        # j' = i^-1 q^(-zeta) [(psi' ◁ ∂) ⊛ chi'] - i^-1 [psi' ⊛ (∂ ▷ chi')], both times (2m)^-1
        rho = _pair(psi, chi)
        j = (_pair(_wave_dx(psi, calc, "right"), chi).scale(unit * pref)
             + _pair(psi, _wave_dx(chi, calc, "left")).scale(-unit * sgn)).with_mass(-1)
    else:
        rho = _pair(chi, psi)
        chi_r, psi_l = _wave_dx(chi, calc, "right"), _wave_dx(psi, calc, "left")
        j = (_pair(chi_r, psi).scale(unit * pref * sgn) + _pair(chi, psi_l).scale(-unit)).with_mass(-1)
    return DensityFlux(family, rho, j, calc, flux)


def continuity_residual(family: str = "1*", N: int = 6, K: int = 3, flux: str = "printed",
                        interior: bool = True) -> Bilinear:
    """∂_0 ▷ rho + ∂ ▷ j for a line family (hatted families use ∂̂ ▷̄)."""
    df = density_flux(family, N, K, flux)
    res = _bilinear_dt(df.rho) + _bilinear_dx(df.j, df.calculus, "left")
    return res.interior(N, K) if interior else res


def continuity_check(family: str = "1*", N: int = 6, K: int = 3, flux: str = "printed") -> CheckResult:
    res = continuity_residual(family, N, K, flux)
    partner = family[:-1] if family.endswith("'") else family + "'"
    a, b = density_flux(family, N, K, flux), density_flux(partner, N, K, flux)
    exch = {
        "density": b.rho.terms == a.rho.conjugate().terms,
        "flux": b.j.terms == a.j.conjugate().terms,
        "residual": continuity_residual(partner, N, K, flux).terms == res.conjugate().terms,
    }
    ok = not res.terms and all(exch.values())
    wit = None
    if not ok:
        wit = res.first_term() or "conjugate family mismatch: " + ", ".join(k for k, v in exch.items() if not v)
    return CheckResult(
        "continuity", "line", f"{family}:{flux}", f"N={N},K={K}", _status(ok), wit,
        {"residual_terms": len(res), "exchanged_by_conjugation": exch,
         "classical_limit_zero": not res.limit_q_to_1()},
    )


def continuity_unsupported(space: str) -> CheckResult:
    return CheckResult("continuity", space, "-", "-", "unsupported",
                       "continuity on euclid3 needs 3D conjugation, which is not implemented")


# ---------------------------------------------------------------- bilinear Leibniz rearrangements

def _line_el(n: int, c=ONE) -> NCElement:
    return NCElement(line_position(), {(n, 0, 0, 0): QScalar(c)})


def leibniz_bilinear_check(f: NCElement, g: NCElement, braided: bool = True) -> CheckResult:
    """The two rearrangements moving P^2 across f ⊛ g on the line (unhatted calculus).

    (a) -(F ◁ ∂) g = -(Λ F)(∂ ▷ g) - (F g) ◁ ∂         with F = f ◁ ∂
    (b) -(Λ f)(∂∂ ▷ g) = (∂ ▷ f)(∂ ▷ g) - ∂ ▷ [f (∂ ▷ g)]

    Λ scales x by q.  ``braided=False`` drops Λ, i.e. treats f as a scalar
    with trivial braiding; that version holds only for constant f.
    """
    alg = line_position()
    dl = derivative("line", "unhatted", "left", "position", "1")
    dr = derivative("line", "unhatted", "right", "position", "1")

    def lam(e: NCElement) -> NCElement:
        if not braided:
            return e
        return NCElement(alg, {m: c * qpow(m[0]) for m, c in e.terms.items()})

    F = dr(f)
    a_lhs = -(dr(F) * g)
    a_rhs = -(lam(F) * dl(g)) - dr(F * g)
    b_lhs = -(lam(f) * dl(dl(g)))
    b_rhs = dl(f) * dl(g) - dl(f * dl(g))
    da, db = a_lhs - a_rhs, b_lhs - b_rhs
    ok = da.is_zero() and db.is_zero()
    wit = None if ok else f"(a) {da}" if not da.is_zero() else f"(b) {db}"
    return CheckResult("leibniz_bilinear", "line", "unhatted", f"f={f},g={g}", _status(ok), wit,
                       {"braided": braided})
