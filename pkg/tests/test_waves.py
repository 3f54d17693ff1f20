from fractions import Fraction
from math import factorial

import pytest

from qsv.ncalg import DEFAULT_VARIANT, UnsupportedOperation
from qsv.qcombi import qfactorial
from qsv.qfield import I, ONE, lamp, limit_q_to_1, q, qpow
from qsv.waves import (
    GeometrySpec,
    TensorSeries,
    all_geometries,
    eigen_residual,
    factorization_check,
    inverse_energy_residual,
    inverse_wave_line,
    mirror_geometry,
    offshell_wave,
    onshell_substitute,
    phase_cancellation,
    phase_factor,
    plane_wave,
    plane_wave_3d_closed,
    plane_wave_3d_offshell,
    plane_wave_line,
    schrodinger_residual,
)

LINE = all_geometries("line")
EUCLID = all_geometries("euclid3")
RBARL = GeometrySpec("euclid3", "RbarL")


def line_key(n0, n1):
    return (n1, n0, 0, 0), (2 * n0 + n1, 0, -n0, 0)


def test_line_coefficients():
    u = plane_wave_line(GeometrySpec("line"), 4, 2)
    assert u.coeff(*line_key(0, 2)) == -1 / (1 + q)
    assert u.coeff(*line_key(0, 0)) == ONE
    assert u.coeff(*line_key(1, 1)) == -ONE
    for (x, p), c in u.terms.items():
        n1, n0 = x[0], x[1]
        assert limit_q_to_1(c / (-I) ** (n0 + n1)) == Fraction(1, factorial(n0) * factorial(n1))


@pytest.mark.parametrize("g", LINE, ids=lambda g: g.tag)
def test_mirror_maps_coefficient_tables(g):
    a = plane_wave_line(g, 6, 3)
    b = plane_wave_line(mirror_geometry(g), 6, 3)
    assert a.map_coeffs(lambda c: c.scale_q(-1)) == b
    assert mirror_geometry(mirror_geometry(g)) == g


def test_offshell_3d_coefficients():
    w = plane_wave_3d_offshell(RBARL, 3)
    assert w.coeff((0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 0)) == ONE
    assert w.coeff((1, 0, 0, 0, 0, 0), (0, 0, 1, 0, 0, 0)) == -I
    for (x, p), c in w.terms.items():
        if x[:3] == p[:3][::-1] and sum(x[:3]) == 2 and max(x[:3]) == 2:
            assert c == -qfactorial(2, 4 if x[1] == 0 else 2).inv()


def test_onshell_substitution_low_orders():
    w = plane_wave_3d_offshell(RBARL, 2)
    s = onshell_substitute(w, 2)
    assert s.time_slice(0) == w
    # n0 = 1 on the constant term: -i * p^2 (2m)^-1
    one_t = (0, 0, 0, 1, 0, 0)
    assert s.coeff(one_t, (1, 0, 1, 0, -1, 0)) == -I * -lamp
    assert s.coeff(one_t, (0, 2, 0, 0, -1, 0)) == -I * qpow(-2)


@pytest.mark.parametrize("g", EUCLID, ids=lambda g: g.tag)
def test_closed_form_equals_star_oracle(g):
    oracle = onshell_substitute(plane_wave_3d_offshell(g, 4), 3)
    assert plane_wave_3d_closed(g, 4, 3) == oracle
    assert plane_wave_3d_closed(g, 3, 0) == plane_wave_3d_offshell(g, 3)


def test_closed_form_negative_controls():
    oracle = onshell_substitute(plane_wave_3d_offshell(RBARL, 3), 2)
    assert plane_wave_3d_closed(RBARL, 3, 2, k_upper="n0-1") != oracle
    assert plane_wave_3d_closed(RBARL, 3, 2, n3_sign=-1) != oracle
    wrong = GeometrySpec("euclid3", "RbarL", variant=DEFAULT_VARIANT)
    wrong_oracle = onshell_substitute(plane_wave_3d_offshell(wrong, 3), 2)
    assert plane_wave_3d_closed(wrong, 3, 2) != wrong_oracle


def test_printed_phase_fails_schrodinger():
    g = GeometrySpec("line")
    assert not schrodinger_residual(plane_wave_line(g, 6, 3, printed_phase=True), 6, 3).is_zero()
    assert schrodinger_residual(plane_wave_line(g, 6, 3), 6, 3).is_zero()


@pytest.mark.parametrize("g", LINE + EUCLID, ids=lambda g: g.tag)
def test_schrodinger_and_factorization(g):
    N, K = (6, 4) if g.space == "line" else (4, 3)
    assert schrodinger_residual(plane_wave(g, N, K), N, K).is_zero()
    assert factorization_check(g, N, K).is_zero()


def test_zero_wave_and_degenerate_orders():
    g = GeometrySpec("line")
    assert schrodinger_residual(TensorSeries(g), 4, 2).is_zero()
    assert factorization_check(g, 4, 0).is_zero()
    assert phase_cancellation(g, 0).is_zero()


def test_phase_factor_slices():
    g = GeometrySpec("line")
    ph = phase_factor("forward", g, 3)
    assert ph.coeff((0, 0, 0, 0), (0, 0, 0, 0)) == ONE
    assert ph.coeff((0, 2, 0, 0), (4, 0, -2, 0)) == (-I) ** 2 / 2
    e = phase_factor("forward", RBARL, 2)
    assert e.coeff((0, 0, 0, 1, 0, 0), (1, 0, 1, 0, -1, 0)) == -I * -lamp
    assert e.coeff((0, 0, 0, 1, 0, 0), (0, 2, 0, 0, -1, 0)) == -I * qpow(-2)


@pytest.mark.parametrize("g,K", [(g, 8) for g in LINE] + [(g, 5) for g in EUCLID], ids=lambda x: getattr(x, "tag", str(x)))
def test_phase_cancellation(g, K):
    assert phase_cancellation(g, K).is_zero()


@pytest.mark.parametrize("g", LINE, ids=lambda g: g.tag)
def test_inverse_wave(g):
    w = inverse_wave_line(g, 6, 3)
    assert schrodinger_residual(w, 6, 3).is_zero()
    assert inverse_energy_residual(g, 6, 3).is_zero()
    assert len(inverse_wave_line(g, 0, 0)) == 1


def test_inverse_wave_unsupported_in_3d():
    with pytest.raises(UnsupportedOperation):
        inverse_wave_line(RBARL, 2, 1)


@pytest.mark.parametrize("g", LINE + EUCLID, ids=lambda g: g.tag)
def test_eigen_relations(g):
    N, K = (6, 3) if g.space == "line" else (4, 3)
    idx = ["1"] if g.space == "line" else ["-", "3", "+"]
    for o in idx:
        assert eigen_residual(offshell_wave(g, N), o, N).is_zero()
    assert eigen_residual(plane_wave(g, N, K), "H0", N, K).is_zero()


def test_eigen_residual_boundary_terms_survive_without_truncation():
    g = GeometrySpec("line")
    # the raw residual is nonzero at the top degree; the filtered one is empty
    res = eigen_residual(offshell_wave(g, 4), "1", 4)
    assert res.is_zero()
    assert not eigen_residual(offshell_wave(g, 4), "1", 5).is_zero()
