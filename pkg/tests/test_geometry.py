import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab.errors import ChartPoleError, DomainError
from finslerlab.geometry import (PolarChartPoint, SpherePoint, SU2Element, UnitTangentPair,
                                 ambient_to_polar, antipodal_h_check, covector_from_polar,
                                 covector_to_polar, gmap, gmap_by_conjugation, gmap_inverse,
                                 gmap_point, gmap_pullback_check, p_phi_of_gmap,
                                 polar_to_ambient, pullback_ratio_samples, quasi_random_s3,
                                 random_s3)

quats = st.tuples(*[st.floats(-1, 1) for _ in range(4)]).filter(
    lambda q: 0.05 < np.linalg.norm(q))


def su2(q):
    q = np.asarray(q) / np.linalg.norm(q)
    return SU2Element(complex(q[0], q[1]), complex(q[2], q[3]))


def test_gmap_double_cover_on_many_samples():
    w1, w2 = random_s3(10_000, np.random.default_rng(0))
    xa, va = gmap(w1, w2)
    xb, vb = gmap(-w1, -w2)
    assert np.abs(xa - xb).max() == 0 and np.abs(va - vb).max() == 0


def test_gmap_lands_in_unit_tangent_bundle():
    w1, w2 = random_s3(2000, np.random.default_rng(1))
    x, v = gmap(w1, w2)
    assert np.abs(np.linalg.norm(x, axis=1) - 1).max() < 1e-14
    assert np.abs(np.linalg.norm(v, axis=1) - 1).max() < 1e-14
    assert np.abs(np.sum(x * v, axis=1)).max() < 1e-14


@settings(max_examples=60, deadline=None)
@given(quats)
def test_closed_form_matches_conjugation(q):
    a = su2(q)
    x, v = gmap(a.w1, a.w2)
    xc, vc = gmap_by_conjugation(a)
    assert np.allclose(x, xc, atol=1e-13) and np.allclose(v, vc, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(quats)
def test_inverse_is_a_preimage(q):
    a = su2(q)
    x, v = gmap(a.w1, a.w2)
    w1, w2 = gmap_inverse(x, v)
    d = min(abs(w1 - a.w1) + abs(w2 - a.w2), abs(w1 + a.w1) + abs(w2 + a.w2))
    assert d < 1e-10


def test_gmap_example_point():
    # (1/sqrt2, 1/sqrt2): closed form and conjugation both give x = (0, 1, 0), v = (-1, 0, 0)
    a = SU2Element(2 ** -0.5, 2 ** -0.5)
    pair = gmap_point(a)
    assert np.allclose(pair.x, [0, 1, 0], atol=1e-15)
    assert np.allclose(pair.v, [-1, 0, 0], atol=1e-15)
    assert np.allclose(gmap_by_conjugation(a)[0], pair.x)


def test_identity_maps_to_j_k():
    x, v = gmap(1.0 + 0j, 0.0 + 0j)
    assert np.allclose(x, [0, 1, 0]) and np.allclose(v, [0, 0, 1])


def test_pullback_ratio_sign():
    # the ratio is -2 with the stated conventions (see the decisions ledger)
    r = pullback_ratio_samples(100, seed=0)
    assert np.abs(r + 2).max() < 1e-6


def test_pullback_rejects_kernel_vectors():
    a = SU2Element(1.0, 0.0)
    with pytest.raises(DomainError):
        gmap_pullback_check(a, [(0.0, 1.0)])   # xi = (0, 1) lies in ker lambda0 at the identity


def test_hopf_fibre_moves_as_reversed_geodesic():
    s = np.linspace(0, 1, 7)
    w1, w2 = 0.6 + 0.0j, 0.8j
    x0, v0 = gmap(w1, w2)
    x, _ = gmap(np.exp(1j * s) * w1, np.exp(1j * s) * w2)
    expect = np.cos(2 * s)[:, None] * x0 - np.sin(2 * s)[:, None] * v0
    assert np.allclose(x, expect, atol=1e-14)


def test_p_phi_of_gmap_matches_cross_product():
    w1, w2 = random_s3(50, np.random.default_rng(4))
    x, v = gmap(w1, w2)
    assert np.allclose(p_phi_of_gmap(w1, w2), np.cross(x, v)[:, 0])


def test_antipodal_check():
    assert antipodal_h_check(lambda w1, w2: 1 + np.abs(w1) ** 2)
    assert not antipodal_h_check(lambda w1, w2: 2 + np.real(w1))


def test_quasi_random_is_deterministic_and_unit():
    a = quasi_random_s3(64)
    b = quasi_random_s3(64)
    assert np.array_equal(a[0], b[0])
    assert np.allclose(np.abs(a[0]) ** 2 + np.abs(a[1]) ** 2, 1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, np.pi - 0.01), st.floats(0, 2 * np.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_polar_round_trip(r, phi, pr, pphi):
    x, p = covector_from_polar(r, phi, pr, pphi)
    r2, phi2, pr2, pphi2 = covector_to_polar(x, p)
    assert r2 == pytest.approx(r, abs=1e-12)
    assert np.angle(np.exp(1j * (phi2 - phi))) == pytest.approx(0, abs=1e-12)
    assert pr2 == pytest.approx(pr, abs=1e-12) and pphi2 == pytest.approx(pphi, abs=1e-12)


def test_domain_types_validate():
    with pytest.raises(DomainError):
        SpherePoint(1.0, 1.0)
    with pytest.raises(DomainError):
        SU2Element(1.0, 1.0)
    with pytest.raises(ChartPoleError):
        PolarChartPoint(0.0, 1.0)
    with pytest.raises(DomainError):
        UnitTangentPair(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    assert np.allclose(ambient_to_polar(polar_to_ambient(0.4, 1.0)), (0.4, 1.0))
    assert np.allclose((-SU2Element(1.0, 0.0)).w1, -1)
