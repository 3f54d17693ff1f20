"""q-brackets, q-factorials, Gaussian binomials and the star-power coefficients (C_q)_k^n."""
from __future__ import annotations

from functools import lru_cache

from .qfield import ONE, ZERO, QScalar, lamp, qpow


@lru_cache(maxsize=None)
def qnum(n: int, a: int) -> QScalar:
    """[[n]]_{q^a} = 1 + q^a + ... + q^{a(n-1)}."""
    if a == 0:
        raise ValueError("bracket base exponent a must be nonzero")
    if n < 0:
        raise ValueError("qnum requires n >= 0")
    return QScalar.laurent({a * j: 1 for j in range(n)})


def qnum_signed(n: int, a: int) -> QScalar:
    """(q^{an} - 1)/(q^a - 1) for any integer n, negative n included."""
    if n >= 0:
        return qnum(n, a)
    # [[-m]]_{p} = -p^{-m} [[m]]_{p}
    return -qpow(-a * -n) * qnum(-n, a)


@lru_cache(maxsize=None)
def qfactorial(n: int, a: int) -> QScalar:
    if n < 0:
        raise ValueError("qfactorial requires n >= 0")
    r = ONE
    for k in range(1, n + 1):
        r = r * qnum(k, a)
    return r


@lru_cache(maxsize=None)
def qbinomial(n: int, k: int, a: int) -> QScalar:
    if k < 0 or k > n:
        return ZERO
    return qfactorial(n, a) / (qfactorial(k, a) * qfactorial(n - k, a))


@lru_cache(maxsize=None)
def cq_recursive(n: int, k: int) -> QScalar:
    if k < 0 or k > n or n < 0:
        return ZERO
    if n == 0:
        return ONE
    return qpow(4 * k) * (-lamp) * cq_recursive(n - 1, k) + qpow(-2) * cq_recursive(n - 1, k - 1)


def cq_closed(n: int, k: int) -> QScalar:
    if k < 0 or k > n:
        return ZERO
    return qpow(-2 * k) * (-lamp) ** (n - k) * qbinomial(n, k, 4)
