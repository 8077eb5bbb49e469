import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cweig.disk_analysis import (
    NOT_WEAK_MIN,
    WEAK_MIN,
    DeformationCoeffs,
    classify_disk,
    coeff_p1,
    coeff_pm,
    coeff_pm1_closed,
    coeff_q1,
    coeff_rm,
    first_derivative_disk,
    lemma_thresholds,
    p_simple,
    p_simple_recursive,
    second_derivative_at,
    second_derivative_double,
    second_derivative_m1,
    second_derivative_simple,
    unit_mode,
    weak_min_indices,
    wlm2_case,
)
from cweig.errors import PoleError
from cweig.special_functions import bessel_j, bessel_zero, disk_eigen_at, disk_spectrum

LISTDISK = [1, 2, 3, 4, 5, 7, 8, 11, 12, 16, 17, 27, 33, 34, 41, 42, 50]


def random_phi(rng, k_max=15):
    return DeformationCoeffs({k: complex(*rng.standard_normal(2)) for k in range(3, k_max + 1, 2)})


phis = st.dictionaries(
    st.sampled_from(list(range(3, 22, 2))),
    st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
    min_size=1, max_size=6,
).map(DeformationCoeffs)


def test_deformation_coeffs_conventions():
    phi = DeformationCoeffs.from_cos_sin({3: (1.0, 0.5)})
    assert phi.c(3) == complex(0.5, -0.25) and phi.c(-3) == complex(0.5, 0.25)
    assert phi.cos_sin() == {3: (1.0, 0.5)}
    th = np.linspace(0, 2 * np.pi, 7)
    assert np.allclose(phi(th), np.cos(3 * th) + 0.5 * np.sin(3 * th))
    # width preserving: phi(t) + phi(t + pi) = 0
    assert np.allclose(phi(th) + phi(th + np.pi), 0.0)
    with pytest.raises(ValueError):
        DeformationCoeffs({2: 1.0})
    with pytest.raises(ValueError):
        DeformationCoeffs({1: 1.0})
    assert DeformationCoeffs({3: 0.0}).is_zero


def test_p_simple_examples():
    for p in range(1, 5):
        assert abs(p_simple(1, bessel_zero(0, p))) <= 1e-9
    j02 = bessel_zero(0, 2)
    assert p_simple(3, j02) == pytest.approx(32 / (8 - j02**2), rel=1e-9)
    assert p_simple(3, j02) == pytest.approx(-1.4240, abs=1e-4)
    assert p_simple(3, bessel_zero(0, 1)) == pytest.approx(14.434, abs=2e-3)


def test_p_simple_pole():
    with pytest.raises(PoleError):
        p_simple(3, bessel_zero(3, 1))


def test_p_recursion_grid():
    checked = 0
    for N in range(1, 20):
        for x in np.linspace(0.7, 25.0, 70):
            try:
                direct = p_simple(N + 1, x)
                prev = p_simple(N, x)
            except PoleError:
                continue
            if min(abs(bessel_j(N, x)), abs(bessel_j(N + 1, x))) < 1e-6:
                continue
            rec = N * N + 4 * x * x / ((N + 1) ** 2 - prev)
            assert direct == pytest.approx(rec, rel=1e-8, abs=1e-8)
            checked += 1
    assert checked > 1000
    x = bessel_zero(0, 3)
    assert p_simple_recursive(9, x) == pytest.approx(p_simple(9, x), rel=1e-8)


def test_second_derivative_simple_examples():
    j02 = bessel_zero(0, 2)
    # j^2 P_3 (a^2 + b^2): a_3 = 1 gives j^2 P_3, while c_3 = 1 means a_3 = 2
    cos3 = DeformationCoeffs.from_cos_sin({3: (1.0, 0.0)})
    val = second_derivative_simple(2, cos3)
    assert val < 0
    assert val == pytest.approx(j02**2 * p_simple(3, j02), rel=1e-12)
    assert second_derivative_simple(2, unit_mode(3)) == pytest.approx(4 * val, rel=1e-12)
    assert second_derivative_simple(3, DeformationCoeffs()) == 0.0
    j01 = bessel_zero(0, 1)
    assert second_derivative_simple(1, cos3) == pytest.approx(j01**2 * 14.434, rel=2e-4)


def test_p1_q1_lemma():
    assert abs(coeff_p1(0, 1)) <= 1e-9
    assert abs(coeff_q1(0, 1)) <= 1e-9
    assert abs(coeff_q1(1, 1)) <= 1e-9
    j12 = bessel_zero(1, 2)
    assert coeff_p1(1, 2) == pytest.approx(192 / (24 - j12**2), rel=1e-9)
    assert coeff_p1(1, 2) == pytest.approx(-7.613, abs=2e-3)
    assert coeff_q1(2, 1) > 0
    for p in (1, 2, 3):
        for k in range(0, 20):
            assert coeff_p1(k, p) == pytest.approx(coeff_q1(k, p) + coeff_q1(k + 1, p), abs=1e-9)


def test_q_monotone():
    for k in range(1, 21):
        assert coeff_q1(k + 1, 1) >= coeff_q1(k, 1)


def test_pm_sign_thresholds():
    for m in range(3, 13):
        _, beta, gamma = lemma_thresholds(m)
        for p in range(1, 5):
            y2 = bessel_zero(m, p) ** 2
            val = coeff_pm(m, p, 1)
            assert val == pytest.approx(coeff_pm1_closed(m, p), rel=1e-8, abs=1e-8)
            assert (val < 0) == (y2 < beta or y2 > gamma)


def test_pm2_closed_form_sign():
    # P_{m,p}(2) < 0 for 9 <= m <= 12 when beta_m < j^2 < gamma_m
    for m in range(9, 13):
        _, beta, gamma = lemma_thresholds(m)
        for p in range(1, 6):
            if beta < bessel_zero(m, p) ** 2 < gamma:
                assert coeff_pm(m, p, 2) < 0


def test_rm_examples_and_relation():
    assert coeff_rm(7, 2, 0) < 0
    assert abs(coeff_pm(7, 1, 0)) <= 1e-9  # the translation mode
    assert all(coeff_pm(7, 1, k) > 0 for k in range(1, 11))
    with pytest.raises(PoleError):
        coeff_rm(3, 1, 3)
    for m in range(2, 10):
        for p in range(1, 4):
            for k in range(0, 21):
                n = 2 * k + 1
                if n in (m, -m) or abs(n - m) == m or n + m == m:
                    continue
                lhs = coeff_rm(m, p, n + m) + coeff_rm(m, p, n - m)
                assert lhs == pytest.approx(coeff_pm(m, p, k), rel=1e-9, abs=1e-9)


def test_double_examples():
    rng = np.random.default_rng(11)
    for _ in range(20):
        l1, l2 = second_derivative_double(1, 1, random_phi(rng))
        assert l2 >= 0 and l1 - l2 >= -1e-8 * (1 + abs(l1))
    for p in (2, 3, 4):
        l1, l2 = second_derivative_double(3, p, unit_mode(3))
        assert l1 - l2 < 0 and l1 + l2 < 0
    assert second_derivative_double(4, 1, DeformationCoeffs()) == (0.0, 0.0)
    with pytest.raises(ValueError):
        second_derivative_double(0, 1, unit_mode(3))


@settings(max_examples=60, deadline=None)
@given(phis, st.integers(1, 3))
def test_m1_two_routes_agree(phi, p):
    a = second_derivative_double(1, p, phi)
    b = second_derivative_m1(p, phi)
    scale = 1 + abs(a[0]) + abs(a[1])
    assert a[0] == pytest.approx(b[0], abs=1e-9 * scale)
    assert a[1] == pytest.approx(b[1], abs=1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(phis, st.integers(1, 9), st.integers(1, 3))
def test_split_ordering(phi, m, p):
    l1, l2 = second_derivative_double(m, p, phi)
    assert l2 >= 0
    e = next(e for e in disk_spectrum(200) if (e.m, e.p) == (m, p))
    lo, hi = e.h_indices
    assert second_derivative_at(e, lo, phi) <= second_derivative_at(e, hi, phi)


@settings(max_examples=40, deadline=None)
@given(phis, st.floats(0.1, 10.0))
def test_second_derivative_homogeneous(phi, s):
    a = second_derivative_double(2, 1, phi)
    b = second_derivative_double(2, 1, phi.scaled(s))
    assert b[0] == pytest.approx(s * s * a[0], rel=1e-9, abs=1e-9)
    assert b[1] == pytest.approx(s * s * a[1], rel=1e-9, abs=1e-9)


def test_m7_duality():
    e = disk_eigen_at(26)
    assert (e.m, e.p) == (7, 1)
    # a c_5, c_9 combination lowers lambda_26
    best = min(
        second_derivative_double(7, 1, DeformationCoeffs({5: 1.0, 9: complex(np.cos(t), np.sin(t))}))
        for t in np.linspace(0, 2 * np.pi, 73)
    )
    assert best[0] - best[1] < 0 or any(
        l1 - l2 < 0 for l1, l2 in (second_derivative_double(7, 1, DeformationCoeffs({5: 1.0, 9: s}))
                                   for s in np.linspace(-3, 3, 61))
    )
    rng = np.random.default_rng(7)
    for _ in range(100):
        l1, l2 = second_derivative_double(7, 1, random_phi(rng, 21))
        assert l1 + l2 >= 0


def test_first_derivative_vanishes():
    phi = unit_mode(3)
    assert abs(first_derivative_disk(disk_eigen_at(6), phi)) <= 1e-10
    M = first_derivative_disk(disk_eigen_at(2), phi)
    assert M.shape == (2, 2) and np.max(np.abs(M)) <= 1e-10
    assert first_derivative_disk(disk_eigen_at(1), DeformationCoeffs()) == 0.0
    rng = np.random.default_rng(2)
    for h in (4, 9, 16, 26):
        assert np.max(np.abs(first_derivative_disk(disk_eigen_at(h), random_phi(rng, 21)))) <= 1e-10


def test_classify_listdisk():
    verdicts = classify_disk(50)
    assert [v.h for v in verdicts] == list(range(1, 51))
    assert weak_min_indices(50) == LISTDISK
    by_h = {v.h: v for v in verdicts}
    assert by_h[26].status == NOT_WEAK_MIN and by_h[27].status == WEAK_MIN
    assert by_h[49].status == NOT_WEAK_MIN and by_h[50].status == WEAK_MIN
    assert by_h[26].case_tag == "case 7"
    assert "P_3" in by_h[6].witness
    assert classify_disk(1)[0].status == WEAK_MIN
    with pytest.raises(ValueError):
        classify_disk(0)


def test_witness_directions_are_descent():
    for v in classify_disk(50):
        if v.status == NOT_WEAK_MIN:
            assert v.direction is not None
            assert second_derivative_at(v.eigen, v.h, v.direction) < 0, v.h


def test_case_tags():
    assert wlm2_case(0, 3) == "simple"
    assert wlm2_case(1, 2) == "m=1"
    assert wlm2_case(2, 1) == "case 1"
    assert wlm2_case(7, 1) == "case 7"
