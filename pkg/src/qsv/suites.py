"""Named verification suites assembled from the module checks.

Every check returns a :class:`CheckResult`; suites are lists of zero-argument
callables so the runner can time them individually and order results
deterministically.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from .dynamics import (
    FAMILIES,
    CheckResult,
    continuity_check,
    continuity_unsupported,
    displayed_bracket,
    ehrenfest_force_check,
    ehrenfest_velocity_check,
    euclid_hamiltonian,
    hermiticity_check,
    hp_commutator_check,
    line_hamiltonian,
    newton_second_order_check,
    velocity_bracket,
)
from .ncalg import (
    ALL_VARIANTS,
    ConventionMismatch,
    Variant,
    is_central,
    euclid_momentum,
    p_squared,
    power_expand_p2,
    resolve_variant,
)
from .qcombi import cq_closed, cq_recursive
from .waves import (
    GeometrySpec,
    all_geometries,
    eigen_residual,
    factorization_check,
    inverse_energy_residual,
    inverse_wave_line,
    offshell_wave,
    onshell_substitute,
    phase_cancellation,
    plane_wave,
    plane_wave_3d_closed,
    plane_wave_3d_offshell,
    schrodinger_residual,
)

SUITES = ("all", "coeffs", "planewave", "eigen", "phase", "ehrenfest", "continuity")
SPACES = ("line", "euclid3")
CALC_SIDES = (("unhatted", "left"), ("unhatted", "right"), ("hatted", "left"), ("hatted", "right"))


@dataclass(frozen=True)
class Orders:
    """Window sizes per space; the defaults are the acceptance orders."""

    line_N: int = 6
    line_K: int = 3
    euclid_N: int = 4
    euclid_K: int = 3
    line_phase_K: int = 8
    euclid_phase_K: int = 5

    def N(self, space: str) -> int:
        return self.line_N if space == "line" else self.euclid_N

    def K(self, space: str) -> int:
        return self.line_K if space == "line" else self.euclid_K

    def phase_K(self, space: str) -> int:
        return self.line_phase_K if space == "line" else self.euclid_phase_K


def variant_by_id(vid: str) -> Variant:
    for v in ALL_VARIANTS:
        if v.vid == vid:
            return v
    raise ValueError(f"unknown convention variant {vid!r}; known: {', '.join(v.vid for v in ALL_VARIANTS)}")


def _residual_result(check_id, space, geometry, window, res) -> CheckResult:
    ok = not res.terms
    return CheckResult(check_id, space, geometry, window, "pass" if ok else "fail",
                       None if ok else res.first_term(), {"residual_terms": len(res.terms)})


# ---------------------------------------------------------------- coefficient checks

def coefficient_table(nmax: int, variant: Variant | None = None) -> list[dict]:
    """(C_q)_k^n from the recursion, the closed form and the star-product oracle."""
    alg = euclid_momentum(variant or resolve_variant())
    rows = []
    for n in range(nmax + 1):
        try:
            oracle = power_expand_p2(n, alg)
        except ConventionMismatch:
            oracle = {}
        for k in range(n + 1):
            rec, closed = cq_recursive(n, k), cq_closed(n, k)
            orc = oracle.get(k)
            rows.append({"n": n, "k": k, "recursive": rec, "closed": closed, "oracle": orc,
                         "agree": rec == closed and orc == closed})
    return rows


def check_coefficients(nmax: int = 12) -> CheckResult:
    bad = [(n, k) for n in range(nmax + 1) for k in range(n + 1) if cq_closed(n, k) != cq_recursive(n, k)]
    return CheckResult("cq_closed_vs_recursive", "euclid3", "-", f"n<={nmax}", "fail" if bad else "pass",
                       f"(n,k)={bad[0]}" if bad else None)


def check_oracle(nmax: int = 6, variant: Variant | None = None) -> CheckResult:
    v = variant or resolve_variant()
    bad = [r for r in coefficient_table(nmax, v) if r["oracle"] != r["closed"]]
    return CheckResult("star_oracle", "euclid3", "-", f"n<={nmax}", "fail" if bad else "pass",
                       f"(n,k)=({bad[0]['n']},{bad[0]['k']})" if bad else None, {"variant": v.vid})


# ---------------------------------------------------------------- waves

def check_closed_form(geometry: GeometrySpec, N: int, K: int) -> CheckResult:
    oracle = onshell_substitute(plane_wave_3d_offshell(geometry, N), K)
    res = plane_wave_3d_closed(geometry, N, K) - oracle
    return _residual_result("closed_form_3d", geometry.space, geometry.tag, f"N={N},K={K}", res)


def check_schrodinger(geometry: GeometrySpec, N: int, K: int) -> CheckResult:
    res = schrodinger_residual(plane_wave(geometry, N, K), N, K)
    return _residual_result("schrodinger", geometry.space, geometry.tag, f"N={N},K={K}", res)


def check_inverse_wave(geometry: GeometrySpec, N: int, K: int) -> CheckResult:
    """The inverted wave solves the free equation and has energy q^(±zeta) p^2 (2m)^-1."""
    res = schrodinger_residual(inverse_wave_line(geometry, N, K), N, K) + inverse_energy_residual(geometry, N, K)
    return _residual_result("inverse_wave", "line", geometry.tag, f"N={N},K={K}", res)


def check_factorization(geometry: GeometrySpec, N: int, K: int) -> CheckResult:
    res = factorization_check(geometry, N, K)
    return _residual_result("factorization", geometry.space, geometry.tag, f"N={N},K={K}", res)


def check_phase(geometry: GeometrySpec, K: int) -> CheckResult:
    res = phase_cancellation(geometry, K)
    return _residual_result("phase_cancellation", geometry.space, geometry.tag, f"K={K}", res)


def check_eigen(geometry: GeometrySpec, N: int, K: int, observable) -> CheckResult:
    wave = plane_wave(geometry, N, K) if observable == "H0" else offshell_wave(geometry, N)
    res = eigen_residual(wave, observable, N, K if observable == "H0" else None)
    return _residual_result(f"eigen[{observable}]", geometry.space, geometry.tag, f"N={N}", res)


# ---------------------------------------------------------------- dynamics

def _hamiltonians(space: str, variant: Variant | None):
    if space == "line":
        return [("V=0", line_hamiltonian()), ("V=-a/x", line_hamiltonian(1)), ("V=-a/x^2", line_hamiltonian(2))]
    return [("V=0", euclid_hamiltonian(variant=variant)),
            ("V=(r^2)^1", euclid_hamiltonian(1, variant=variant)),
            ("V=(r^2)^2", euclid_hamiltonian(2, variant=variant))]


def _tag(r: CheckResult, label: str) -> CheckResult:
    r.geometry = f"{r.geometry}|{label}"
    return r


def check_centrality(variant: Variant | None = None) -> CheckResult:
    ok = is_central(p_squared(euclid_momentum(variant or resolve_variant())))
    return CheckResult("p2_central", "euclid3", "-", "-", "pass" if ok else "fail",
                       None if ok else "p^2 does not commute with every generator")


def check_wirparham(space: str, calculus: str, side: str, variant: Variant | None = None) -> CheckResult:
    got = velocity_bracket(space, calculus, side, variant)
    want = displayed_bracket(space, calculus, side)
    ok = got is not None and got == want
    return CheckResult("wirparham", space, f"{calculus}/{side}", "-", "pass" if ok else "fail",
                       None if ok else f"got {got}, displayed {want}", {"value": str(got)})


def check_hermiticity(space: str = "line") -> CheckResult:
    hs = [line_hamiltonian(b, form) for b in (None, 1, 2) for form in ("H", "H'", "H''")]
    bad = [h for h in hs if not hermiticity_check(h)]
    return CheckResult("hermiticity", space, "-", f"{len(hs)} Hamiltonians", "fail" if bad else "pass",
                       None if not bad else f"form {bad[0].form}")


# ---------------------------------------------------------------- suites

Check = Callable[[], CheckResult]


def suite_checks(suite: str, space: str | None = None, orders: Orders = Orders(),
                 variant: Variant | None = None) -> list[tuple[str, Check]]:
    """(sort key, thunk) pairs for a suite, restricted to one space if given."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    spaces = [space] if space else list(SPACES)
    out: list[tuple[str, Check]] = []

    def add(key, fn):
        out.append((key, fn))

    want = (lambda s: suite in ("all", s))
    if want("coeffs") and "euclid3" in spaces:
        add("coeffs/closed_vs_recursive", lambda: check_coefficients(12))
        add("coeffs/star_oracle", lambda: check_oracle(6, variant))
    for sp in spaces:
        N, K = orders.N(sp), orders.K(sp)
        geoms = all_geometries(sp) if sp == "line" else [
            GeometrySpec(sp, g.calculus, g.conjugate, variant) for g in all_geometries(sp)]
        # every thunk binds its loop values through default arguments
        if want("planewave"):
            for g in geoms:
                if sp == "euclid3":
                    add(f"planewave/{g.tag}/closed", lambda g=g, N=N, K=K: check_closed_form(g, N, K))
                add(f"planewave/{g.tag}/schrodinger", lambda g=g, N=N, K=K: check_schrodinger(g, N, K))
                add(f"planewave/{g.tag}/factorization", lambda g=g, N=N, K=K: check_factorization(g, N, K))
                if sp == "line":
                    add(f"planewave/{g.tag}/inverse", lambda g=g, N=N, K=K: check_inverse_wave(g, N, K))
        if want("eigen"):
            idx = ["1"] if sp == "line" else ["-", "3", "+"]
            for g in geoms:
                for o in idx + ["H0"]:
                    add(f"eigen/{g.tag}/{o}", lambda g=g, o=o, N=N, K=K: check_eigen(g, N, K, o))
        if want("phase"):
            for g in geoms:
                add(f"phase/{g.tag}", lambda g=g, Kp=orders.phase_K(sp): check_phase(g, Kp))
        if want("ehrenfest"):
            Ne = N
            Nv = N if sp == "line" else max(N - 1, 1)
            if sp == "euclid3":
                add("ehrenfest/euclid3/p2_central", lambda: check_centrality(variant))
            hams = _hamiltonians(sp, variant)
            for calc, side in CALC_SIDES:
                add(f"ehrenfest/{sp}/wirparham/{calc}/{side}",
                    lambda sp=sp, c=calc, s=side: check_wirparham(sp, c, s, variant))
                add(f"ehrenfest/{sp}/hp/{calc}/{side}",
                    lambda c=calc, s=side, h=hams[0][1], n=Ne: hp_commutator_check(h, n, c, s))
                for label, h in hams:
                    add(f"ehrenfest/{sp}/force/{label}/{calc}/{side}",
                        lambda h=h, c=calc, s=side, l=label, n=Ne: _tag(ehrenfest_force_check(h, n, c, s), l))
                    add(f"ehrenfest/{sp}/velocity/{label}/{calc}/{side}",
                        lambda h=h, c=calc, s=side, l=label, n=Nv: _tag(ehrenfest_velocity_check(h, n, c, s), l))
                    add(f"ehrenfest/{sp}/second/{label}/{calc}/{side}",
                        lambda h=h, c=calc, s=side, l=label, n=Ne, nv=Nv:
                        _tag(newton_second_order_check(h, n, c, s, nv), l))
            if sp == "line":
                add("ehrenfest/line/hermiticity", check_hermiticity)
        if want("continuity"):
            if sp == "line":
                for fam in FAMILIES:
                    add(f"continuity/{fam}", lambda f=fam, N=N, K=K: continuity_check(f, N, K, "printed"))
            else:
                add("continuity/euclid3", lambda: continuity_unsupported("euclid3"))
    return sorted(out, key=lambda kv: kv[0])


def run_checks(checks: list[tuple[str, Check]]) -> list[tuple[CheckResult, float]]:
    results = []
    for _, fn in checks:
        t0 = time.perf_counter()
        r = fn()
        results.append((r, time.perf_counter() - t0))
    return results
