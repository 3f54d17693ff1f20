"""Exact arithmetic in Q(i)(q).

A :class:`QScalar` is stored as ``(re + i*im) / den`` where ``re``, ``im`` and
``den`` are polynomials over Q (python-flint ``fmpq_poly``), ``den`` is monic
and ``gcd(re, im, den) = 1``.  This form is unique, so equality and hashing are
representation based.  Laurent powers of q live in ``den`` as factors of q.

The textual form reduces further over Q(i) and shifts powers of q into the
numerator so that the denominator is a polynomial with constant term 1.
"""
from __future__ import annotations

import re as _re
from fractions import Fraction
from numbers import Rational

from flint import fmpq, fmpq_poly

__all__ = [
    "GaussianRational",
    "PoleError",
    "QScalar",
    "add",
    "mul",
    "inv",
    "conjugate",
    "eval_at",
    "limit_q_to_1",
    "parse",
    "q",
    "I",
    "ONE",
    "ZERO",
    "lam",
    "lamp",
    "qpow",
]


class PoleError(ArithmeticError):
    """Evaluation hit a zero of the denominator."""


def _frac(x: fmpq) -> Fraction:
    return Fraction(int(x.p), int(x.q))


class GaussianRational:
    """Exact a + b*i with a, b rational."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(Fraction(x), 0)

    def __add__(self, o):
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return GaussianRational.coerce(o) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, o):
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = GaussianRational.coerce(o)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * GaussianRational(o.re / n, -o.im / n)

    def __rtruediv__(self, o):
        return GaussianRational.coerce(o) / self

    def __pow__(self, n: int):
        r = GaussianRational(1)
        b = self if n >= 0 else GaussianRational(1) / self
        for _ in range(abs(n)):
            r = r * b
        return r

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __eq__(self, o):
        try:
            o = GaussianRational.coerce(o)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im)) if self.im else hash(self.re)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        return _coef_str(self.re, self.im)


_ZP = fmpq_poly([])
_ONEP = fmpq_poly([1])
_QP = fmpq_poly([0, 1])


class QScalar:
    """Element of Q(i)(q).  Immutable."""

    __slots__ = ("_re", "_im", "_den", "_hash")

    def __init__(self, value=0):
        if isinstance(value, QScalar):
            self._re, self._im, self._den = value._re, value._im, value._den
        else:
            g = GaussianRational.coerce(value)
            self._re = fmpq_poly([fmpq(g.re.numerator, g.re.denominator)]) if g.re else _ZP
            self._im = fmpq_poly([fmpq(g.im.numerator, g.im.denominator)]) if g.im else _ZP
            self._den = _ONEP
        self._hash = None

    @classmethod
    def _raw(cls, re: fmpq_poly, im: fmpq_poly, den: fmpq_poly) -> "QScalar":
        obj = object.__new__(cls)
        obj._re, obj._im, obj._den = re, im, den
        obj._hash = None
        return obj

    @classmethod
    def _make(cls, re: fmpq_poly, im: fmpq_poly, den: fmpq_poly) -> "QScalar":
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if re == 0 and im == 0:
            return cls._raw(_ZP, _ZP, _ONEP)
        if den.degree() > 0:
            g = den.gcd(re) if re != 0 else den
            if im != 0 and g.degree() > 0:
                g = g.gcd(im)
            if g.degree() > 0:
                re, im, den = re // g, im // g, den // g
        lc = den[den.degree()]
        if lc != 1:
            re, im, den = re / lc, im / lc, den / lc
        return cls._raw(re, im, den)

    @classmethod
    def laurent(cls, coeffs: dict[int, object]) -> "QScalar":
        """Build sum c_k q^k from a {k: c_k} mapping."""
        coeffs = {k: GaussianRational.coerce(c) for k, c in coeffs.items() if c}
        if not coeffs:
            return cls(0)
        lo = min(min(coeffs), 0)
        hi = max(coeffs)
        re = [0] * (hi - lo + 1)
        im = [0] * (hi - lo + 1)
        for k, c in coeffs.items():
            re[k - lo] = fmpq(c.re.numerator, c.re.denominator)
            im[k - lo] = fmpq(c.im.numerator, c.im.denominator)
        den = fmpq_poly([0] * (-lo) + [1])
        return cls._make(fmpq_poly(re), fmpq_poly(im), den)

    # arithmetic
    def __add__(self, o):
        if not isinstance(o, QScalar):
            try:
                o = QScalar(o)
            except (TypeError, ValueError):
                return NotImplemented
        if self._den == o._den:
            return QScalar._make(self._re + o._re, self._im + o._im, self._den)
        if self._den == _ONEP:
            d = o._den
            return QScalar._make(self._re * d + o._re, self._im * d + o._im, d)
        if o._den == _ONEP:
            d = self._den
            return QScalar._make(self._re + o._re * d, self._im + o._im * d, d)
        g = self._den.gcd(o._den)
        a = o._den // g
        b = self._den // g
        return QScalar._make(self._re * a + o._re * b, self._im * a + o._im * b, self._den * a)

    __radd__ = __add__

    def __neg__(self):
        return QScalar._raw(-self._re, -self._im, self._den)

    def __sub__(self, o):
        if not isinstance(o, QScalar):
            try:
                o = QScalar(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        return QScalar(o) - self

    def __mul__(self, o):
        if not isinstance(o, QScalar):
            try:
                o = QScalar(o)
            except (TypeError, ValueError):
                return NotImplemented
        if self.is_zero() or o.is_zero():
            return ZERO
        re = self._re * o._re - self._im * o._im
        im = self._re * o._im + self._im * o._re
        return QScalar._make(re, im, self._den * o._den)

    __rmul__ = __mul__

    def inv(self) -> "QScalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero QScalar")
        # 1/((a+ib)/d) = d(a-ib)/(a^2+b^2)
        n = self._re * self._re + self._im * self._im
        return QScalar._make(self._den * self._re, -(self._den * self._im), n)

    def __truediv__(self, o):
        if not isinstance(o, QScalar):
            try:
                o = QScalar(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self * o.inv()

    def __rtruediv__(self, o):
        return QScalar(o) * self.inv()

    def __pow__(self, n: int) -> "QScalar":
        if not isinstance(n, int):
            return NotImplemented
        base = self if n >= 0 else self.inv()
        n = abs(n)
        if base._im == 0:
            if base._re == 0:
                return ONE if n == 0 else ZERO
            return QScalar._make(base._re ** n, _ZP, base._den ** n)
        r = ONE
        while n:
            if n & 1:
                r = r * base
            base = base * base
            n >>= 1
        return r

    def conjugate(self) -> "QScalar":
        return QScalar._raw(self._re, -self._im, self._den)

    def scale_q(self, k: int) -> "QScalar":
        """Substitute q -> q^k (k = -1 gives the q <-> 1/q mirror)."""
        if k == 1:
            return self
        return _subst_power(self._re, self._im, self._den, k)

    # predicates
    def is_zero(self) -> bool:
        return self._re == 0 and self._im == 0

    def __bool__(self):
        return not self.is_zero()

    def is_real(self) -> bool:
        return self._im == 0

    def is_laurent(self) -> bool:
        d = self._den
        return d.degree() == 0 or d == _QP ** d.degree()

    def __eq__(self, o):
        if not isinstance(o, QScalar):
            try:
                o = QScalar(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self._den == o._den and self._re == o._re and self._im == o._im

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((tuple(self._re.coeffs()), tuple(self._im.coeffs()), tuple(self._den.coeffs())))
        return self._hash

    def laurent_coeffs(self) -> dict[int, GaussianRational]:
        """Coefficients {k: c_k} when self is a Laurent polynomial."""
        if not self.is_laurent():
            raise ValueError("not a Laurent polynomial: " + str(self))
        shift = self._den.degree()
        out: dict[int, GaussianRational] = {}
        for k in range(max(self._re.degree(), self._im.degree()) + 1):
            c = GaussianRational(_frac(self._re[k]), _frac(self._im[k]))
            if c:
                out[k - shift] = c
        return out

    # evaluation
    def eval_at(self, q0):
        return eval_at(self, q0)

    def limit_q_to_1(self) -> GaussianRational:
        return limit_q_to_1(self)

    # text
    def _gaussian_parts(self):
        """Numerator and denominator as Gaussian coefficient lists, reduced over Q(i)."""
        num = [GaussianRational(_frac(self._re[k]), _frac(self._im[k]))
               for k in range(max(self._re.degree(), self._im.degree(), 0) + 1)]
        den = [GaussianRational(_frac(c), 0) for c in self._den.coeffs()]
        if not self.is_real() and self._den.degree() > 0:
            g = _gpoly_gcd(num, den)
            if len(g) > 1:
                num = _gpoly_divexact(num, g)
                den = _gpoly_divexact(den, g)
        return num, den

    def __str__(self):
        num, den = self._gaussian_parts()
        shift = next(k for k, c in enumerate(den) if c)
        den = den[shift:]
        unit = den[0]
        num = [c / unit for c in num]
        den = [c / unit for c in den]
        return f"({_poly_str(num, -shift)})/({_poly_str(den, 0)})"

    def __repr__(self):
        return f"QScalar('{self}')"


def _subst_power(re, im, den, k):
    def sub(p: fmpq_poly, k: int):
        cs = p.coeffs()
        if k > 0:
            out = [0] * (k * (len(cs) - 1) + 1) if cs else []
            for j, c in enumerate(cs):
                out[k * j] = c
            return fmpq_poly(out), 0
        m = -k
        deg = len(cs) - 1
        # sum c_j q^{-m j} = q^{-m deg} * sum c_j q^{m (deg - j)}
        out = [0] * (m * deg + 1) if cs else []
        for j, c in enumerate(cs):
            out[m * (deg - j)] = c
        return fmpq_poly(out), m * max(deg, 0)

    r, sr = sub(re, k)
    i_, si = sub(im, k)
    d, sd = sub(den, k)
    s = max(sr, si)
    r = r * _QP ** (s - sr) if r != 0 else r
    i_ = i_ * _QP ** (s - si) if i_ != 0 else i_
    # value = (r + i i_) q^{-s} / (d q^{-sd})
    e = sd - s
    if e >= 0:
        return QScalar._make(r * _QP ** e, i_ * _QP ** e, d)
    return QScalar._make(r, i_, d * _QP ** (-e))


# Gaussian polynomial helpers used only for the Q(i)-reduced text form.
def _gpoly_trim(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def _gpoly_divmod(a, b):
    a = _gpoly_trim(a)
    b = _gpoly_trim(b)
    qt = [GaussianRational(0)] * max(len(a) - len(b) + 1, 1)
    lb = b[-1]
    while len(a) >= len(b) and a:
        c = a[-1] / lb
        s = len(a) - len(b)
        qt[s] = c
        for j, bc in enumerate(b):
            a[s + j] = a[s + j] - c * bc
        a = _gpoly_trim(a[:-1])
    return qt, a


def _gpoly_gcd(a, b):
    a, b = _gpoly_trim(a), _gpoly_trim(b)
    while b:
        _, r = _gpoly_divmod(a, b)
        a, b = b, r
    return [c / a[-1] for c in a]


def _gpoly_divexact(a, b):
    qt, r = _gpoly_divmod(a, b)
    assert not r
    return _gpoly_trim(qt)


def _rat_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _coef_str(re: Fraction, im: Fraction) -> str:
    if not im:
        return _rat_str(re)
    return f"({_rat_str(re)}+{_rat_str(im)}*i)"


def _poly_str(cs, shift: int) -> str:
    terms = [f"{_coef_str(c.re, c.im)}*q^{k + shift}" for k, c in enumerate(cs) if c]
    return " + ".join(terms) if terms else "0"


_RAT = r"-?\d+(?:/\d+)?"
_TERM = _re.compile(rf"^(?:({_RAT})|\(({_RAT})\+({_RAT})\*i\))\*q\^(-?\d+)$")


def _parse_poly(s: str) -> QScalar:
    s = s.strip()
    if s == "0":
        return ZERO
    coeffs: dict[int, GaussianRational] = {}
    for t in s.split(" + "):
        m = _TERM.match(t.strip())
        if not m:
            raise ValueError(f"bad monomial {t!r}")
        if m.group(1) is not None:
            c = GaussianRational(Fraction(m.group(1)))
        else:
            c = GaussianRational(Fraction(m.group(2)), Fraction(m.group(3)))
        k = int(m.group(4))
        coeffs[k] = coeffs.get(k, GaussianRational(0)) + c
    return QScalar.laurent(coeffs)


def parse(text: str) -> QScalar:
    """Inverse of ``str`` on QScalar: ``"(<num>)/(<den>)"``."""
    m = _re.fullmatch(r"\s*\((.*)\)/\((.*)\)\s*", text)
    if not m:
        raise ValueError(f"not a QScalar text form: {text!r}")
    return _parse_poly(m.group(1)) / _parse_poly(m.group(2))


def _horner(p: fmpq_poly, x):
    acc = 0
    for c in reversed(p.coeffs()):
        acc = acc * x + c
    return acc


def eval_at(a: QScalar, q0):
    """Substitute q = q0.

    Exact for rational q0 (returns :class:`GaussianRational`); complex double
    otherwise.  Raises :class:`PoleError` if the denominator vanishes.
    """
    if isinstance(q0, (int, Fraction, Rational)) and not isinstance(q0, bool):
        x = fmpq(Fraction(q0).numerator, Fraction(q0).denominator)
        d = a._den(x)
        if d == 0:
            raise PoleError(f"denominator {QScalar._make(a._den, _ZP, _ONEP)} vanishes at q={q0}")
        return GaussianRational(_frac(a._re(x) / d), _frac(a._im(x) / d))
    x = complex(q0)
    fl = lambda p: [float(_frac(c)) for c in p.coeffs()]
    def h(cs):
        acc = 0j
        for c in reversed(cs):
            acc = acc * x + c
        return acc
    d = h(fl(a._den))
    if d == 0:
        raise PoleError(f"denominator {QScalar._make(a._den, _ZP, _ONEP)} vanishes at q={q0}")
    return (h(fl(a._re)) + 1j * h(fl(a._im))) / d


def limit_q_to_1(a: QScalar) -> GaussianRational:
    """Value at q=1 after cancelling common (q-1) factors."""
    # the stored form is already reduced over Q, so (q-1) is cancelled
    if a._den(fmpq(1)) == 0:
        raise PoleError(f"non-removable pole at q=1: denominator {QScalar._make(a._den, _ZP, _ONEP)}")
    return eval_at(a, 1)


def add(a: QScalar, b: QScalar) -> QScalar:
    return QScalar(a) + b


def mul(a: QScalar, b: QScalar) -> QScalar:
    return QScalar(a) * b


def inv(a: QScalar) -> QScalar:
    return QScalar(a).inv()


def conjugate(a: QScalar) -> QScalar:
    return QScalar(a).conjugate()


ZERO = QScalar(0)
ONE = QScalar(1)
I = QScalar(1j)
q = QScalar._make(_QP, _ZP, _ONEP)


def qpow(k: int) -> QScalar:
    """q**k for any integer k."""
    if k >= 0:
        return QScalar._raw(_QP ** k, _ZP, _ONEP)
    return QScalar._raw(_ONEP, _ZP, _QP ** (-k))


lam = q - q.inv()
lamp = q + q.inv()
