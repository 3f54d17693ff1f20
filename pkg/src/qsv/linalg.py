"""Exact dense linear algebra over QScalar (small matrices only)."""
from __future__ import annotations

from .qfield import ONE, ZERO, QScalar


class SingularMatrix(ArithmeticError):
    pass


def zeros(n: int, m: int) -> list[list[QScalar]]:
    return [[ZERO] * m for _ in range(n)]


def identity(n: int) -> list[list[QScalar]]:
    r = zeros(n, n)
    for i in range(n):
        r[i][i] = ONE
    return r


def matmul(a, b):
    n, k = len(a), len(b)
    m = len(b[0]) if b else 0
    out = zeros(n, m)
    for i in range(n):
        ai = a[i]
        row = out[i]
        for j in range(k):
            x = ai[j]
            if not x:
                continue
            bj = b[j]
            for c in range(m):
                y = bj[c]
                if y:
                    row[c] = row[c] + x * y
    return out


def transpose(a):
    return [list(r) for r in zip(*a)] if a else []


def scale(a, c: QScalar):
    return [[x * c for x in r] for r in a]


def inverse(a):
    """Gauss-Jordan inverse; raises SingularMatrix."""
    n = len(a)
    m = [list(r) + e for r, e in zip(a, identity(n))]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise SingularMatrix(f"matrix of size {n} is singular (column {col})")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col].inv()
        m[col] = [x * p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [r[n:] for r in m]
