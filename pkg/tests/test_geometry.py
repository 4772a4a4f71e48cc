"""Moebius action, fundamental-domain reduction, Atkin-Lehner structure."""

import random

import pytest
from gmpy2 import mpfr, mpq

from maassforms import Ball, DomainError
from maassforms.geometry import (
    GroupElement,
    IDENTITY,
    S_INVERSION,
    T_SHIFT,
    UpperHalfPoint,
    al_matrix,
    cusp_classes,
    is_gamma0n,
    moebius,
    prime_divisors,
    pullback_gamma0n,
    pullback_sl2z,
)

from oracles import brute_force_reduction


def _pt(x, y):
    return UpperHalfPoint(Ball(x), Ball(y))


def test_moebius_identity():
    z = _pt("0.3", "0.5")
    w = moebius(IDENTITY, z)
    assert w.x.contains(mpq(3, 10)) and w.y.contains(mpq(1, 2))


def test_moebius_inversion_fixes_i():
    w = moebius(S_INVERSION, _pt(0, 1))
    assert w.x.contains(0) and w.y.contains(1)


def test_moebius_translation():
    w = moebius(T_SHIFT, _pt("0.3", "0.5"))
    assert w.x.contains(mpq(13, 10)) and w.y.contains(mpq(1, 2))


def test_moebius_imaginary_part_identity():
    rng = random.Random(5)
    for _ in range(50):
        g = _random_sl2z(rng)
        z = _pt(rng.uniform(-2, 2), rng.uniform(0.2, 3))
        w = moebius(g, z)
        den = (z.x * g.c + g.d).square() + (z.y * g.c).square()
        assert (w.y * den).intersects(z.y)


def test_moebius_composition_containment():
    rng = random.Random(6)
    for _ in range(1000):
        g, h = _random_sl2z(rng), _random_sl2z(rng)
        z = _pt(rng.uniform(-2, 2), rng.uniform(0.3, 2))
        lhs = moebius(g @ h, z)
        rhs = moebius(g, moebius(h, z))
        assert lhs.x.intersects(rhs.x) and lhs.y.intersects(rhs.y)


def _random_sl2z(rng, size=8):
    g = IDENTITY
    for _ in range(rng.randint(1, 6)):
        t = rng.randint(-size, size)
        g = g @ GroupElement(1, t, 0, 1)
        if rng.random() < 0.7:
            g = g @ S_INVERSION
    return g


def test_pullback_already_reduced():
    pb = pullback_sl2z(_pt("0.1", 2))
    assert pb.map.is_identity()
    assert pb.point.x.contains(mpq(1, 10))


def test_pullback_example_against_brute_force():
    pb = pullback_sl2z(_pt("2.3", "0.8"))
    ref = brute_force_reduction(2.3, 0.8)
    assert ref is not None
    assert abs(float(pb.point.x.c) - ref.real) < 1e-9
    assert abs(float(pb.point.y.c) - ref.imag) < 1e-9


def test_pullback_never_decreases_height():
    pb = pullback_sl2z(_pt("0.4", "0.01"))
    assert pb.point.y.lower() >= mpfr("0.01") - mpfr("1e-30")
    assert float(pb.point.y.c) >= 0.8


def test_pullback_round_trip_containment():
    rng = random.Random(7)
    for _ in range(100):
        z = _pt(rng.uniform(-3, 3), rng.uniform(0.05, 2.5))
        pb = pullback_sl2z(z)
        assert abs(float(pb.point.x.c)) <= 0.5 + 1e-12
        s = pb.point.x.square() + pb.point.y.square()
        assert s.upper() >= 1 - mpfr("1e-12")
        back = moebius(pb.map.inverse(), pb.point)
        assert back.x.intersects(z.x) and back.y.intersects(z.y)


def test_pullback_domain_error_on_bad_point():
    with pytest.raises(DomainError):
        UpperHalfPoint(Ball(0), Ball(0, 1))


def test_is_gamma0n():
    assert is_gamma0n(IDENTITY, 7)
    assert not is_gamma0n(GroupElement(1, 0, 1, 1), 2)
    assert is_gamma0n(GroupElement(1, 0, 6, 1), 3)
    with pytest.raises(DomainError):
        is_gamma0n(GroupElement(2, 0, 0, 1), 3)


def test_cusp_classes():
    assert cusp_classes(1) == [1]
    assert cusp_classes(6) == [1, 2, 3, 6]
    with pytest.raises(DomainError):
        cusp_classes(4)


def test_al_matrix_structure():
    assert al_matrix(1, 15).is_identity()
    fricke = al_matrix(15, 15)
    assert fricke.det() == 15
    assert (fricke.a, fricke.d) == (0, 0) and fricke.c == 15
    for level in (6, 10, 15, 30, 105):
        for q in cusp_classes(level):
            w = al_matrix(q, level)
            assert w.det() == q
            assert w.a % q == 0 and w.d % q == 0 and w.c % level == 0
            assert w.b >= 0 or q == level
    with pytest.raises(DomainError):
        al_matrix(4, 6)


def test_prime_divisors():
    assert prime_divisors(1) == []
    assert prime_divisors(30) == [2, 3, 5]


def test_pullback_gamma0n_level1_trivial():
    pb = pullback_gamma0n(_pt("0.3", "0.4"), 1)
    assert pb.al_divisor == 1 and pb.shift == 0


def test_pullback_gamma0n_decomposition_certified():
    rng = random.Random(8)
    for level in (2, 5, 6, 15):
        for _ in range(40):
            z = _pt(rng.uniform(-0.5, 0.5), rng.uniform(0.03, 0.7))
            pb = pullback_gamma0n(z, level)
            assert level % pb.al_divisor == 0
            assert 0 <= pb.shift < max(pb.al_divisor, 1)
            assert pb.witness.det() == 1
            assert pb.witness.c % level == 0
            w = pb.expansion_point()
            assert w.y.mig() > 0
            back = moebius(pb.map.inverse(), pb.point)
            assert back.x.intersects(z.x) and back.y.intersects(z.y)


def test_pullback_gamma0n_congruent_map_gives_divisor_one():
    # a point whose reduction happens to use a Gamma0(5) word
    z = moebius(GroupElement(1, 0, 5, 1), _pt("0.05", "1.9"))
    pb = pullback_gamma0n(z, 5)
    assert pb.al_divisor == 1


def test_mirrored_points_share_al_data():
    for level in (5, 6):
        z = _pt("0.23", "0.31")
        zm = _pt("-0.23", "0.31")
        a, b = pullback_gamma0n(z, level), pullback_gamma0n(zm, level)
        assert a.al_divisor == b.al_divisor
        assert (a.shift + b.shift) % a.al_divisor == 0
        assert a.point.y.intersects(b.point.y)
