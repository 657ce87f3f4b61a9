import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab.contactlift import (EllipsoidParams, LiftBundle, dimple_g, ellipsoid_reeb_flow,
                                    g_from_metric, g_to_h, geodesic_via_ellipsoid, h_from_descriptor,
                                    h_from_metric, h_from_table, h_to_g, katok_ellipsoid_identity,
                                    lift_conjugacy_check, reeb_return_gap,
                                    starshaped_convexity_check)
from finslerlab.errors import DomainError
from finslerlab.finsler import katok, revolution, round_metric
from finslerlab.geodesics import cogeodesic_flow, shoot_state
from finslerlab.geometry import gmap, quasi_random_s3, random_s3


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.9, 0.9))
def test_katok_ellipsoid_identity(eps):
    d = katok_ellipsoid_identity(eps, n=300)
    assert d["p"] == pytest.approx((1 + eps) / 2) and d["q"] == pytest.approx((1 - eps) / 2)
    assert max(d["h_error"], d["g_error"], d["backward_error"]) < 1e-9


def test_round_case_is_trivial():
    ep = EllipsoidParams.from_katok(0.0)
    assert ep.p == ep.q == 0.5
    x, v = gmap(*random_s3(500, np.random.default_rng(0)))
    assert np.allclose(g_from_metric(round_metric())(x, v), 1.0, atol=1e-14)
    assert np.allclose(h_from_metric(round_metric())(*random_s3(50, np.random.default_rng(1))), 2.0)


@pytest.mark.parametrize("metric", [katok(0.4), revolution(0.6)], ids=["katok", "ellipsoid"])
def test_h_is_antipodal_and_round_trips(metric):
    w1, w2 = random_s3(1000, np.random.default_rng(2))
    h = h_from_metric(metric)
    assert np.abs(h(w1, w2) - h(-w1, -w2)).max() < 1e-12
    g = g_from_metric(metric)
    x, v = gmap(w1, w2)
    assert np.abs(h_to_g(h)(x, 3.0 * v) - g(x, v)).max() < 1e-12
    assert np.abs(g_to_h(h_to_g(h))(w1, w2) - h(w1, w2)).max() < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(0, 10_000))
def test_g_is_zero_homogeneous(s, seed):
    x, v = gmap(*random_s3(20, np.random.default_rng(seed)))
    g = g_from_metric(katok(0.5))
    assert np.allclose(g(x, s * v), g(x, v), rtol=1e-13)


def test_invariant_errors():
    inv = LiftBundle.from_metric(katok(0.3)).invariant_errors(500)
    assert inv["antipodal"] < 1e-12 and inv["homogeneity"] < 1e-12 and inv["g_min"] > 0


def test_table_h_reproduces_ellipsoid():
    ep = EllipsoidParams(0.7, 0.4)
    w1, w2 = quasi_random_s3(600)
    table = np.column_stack([w1.real, w1.imag, w2.real, w2.imag, ep.h(w1, w2)])
    h = h_from_table(table)
    a1, a2 = random_s3(200, np.random.default_rng(3))
    assert np.abs(h(a1, a2) - ep.h(a1, a2)).max() < 1e-2
    assert np.abs(h(a1, a2) - h(-a1, -a2)).max() < 1e-10
    # the interpolant feeds the same pipeline as analytic h
    assert LiftBundle.from_h(h).invariant_errors(200)["antipodal"] < 1e-10


def test_table_validation():
    with pytest.raises(DomainError):
        h_from_table(np.ones((4, 5)))
    bad = np.ones((20, 5))
    bad[:, 4] = -1
    with pytest.raises(DomainError):
        h_from_table(bad)


def test_h_to_g_checks():
    with pytest.raises(DomainError):
        h_to_g(lambda w1, w2: 2 + np.real(w1))
    with pytest.raises(DomainError):
        h_to_g(lambda w1, w2: np.abs(w1) ** 2 - 0.5)


def test_descriptors():
    h = h_from_descriptor({"kind": "ellipsoid", "p": 0.65, "q": 0.35})
    k = h_from_descriptor({"kind": "from-metric", "metric": {"family": "katok", "epsilon": 0.3}})
    w1, w2 = random_s3(100, np.random.default_rng(4))
    assert np.abs(h(w1, w2) - k(w1, w2)).max() < 1e-12
    with pytest.raises(DomainError):
        h_from_descriptor({"kind": "torus"})


@pytest.mark.parametrize("source", ["round", "katok", "ellipsoid21"])
def test_lift_conjugacy_up_to_orientation(source):
    if source == "ellipsoid21":
        res = lift_conjugacy_check(h=EllipsoidParams(2.0, 1.0).h)
    else:
        res = lift_conjugacy_check(round_metric() if source == "round" else katok(0.3))
    assert res["sign"] == -1.0
    assert res["sign_corrected_discrepancy"] < 1e-6
    assert res["raw_discrepancy"] == pytest.approx(2.0, abs=1e-6)


def test_lift_conjugacy_arguments():
    with pytest.raises(DomainError):
        lift_conjugacy_check()


def test_geodesic_via_ellipsoid_matches_flow():
    eps = 0.35
    m = katok(eps)
    s0 = shoot_state(m, np.array([0.3, 0.5, np.sqrt(1 - 0.34)]), 0.8)
    ts = np.linspace(0, 6, 13)
    traj = cogeodesic_flow(m, s0, 6.0).trajectory(ts).T
    x, p = geodesic_via_ellipsoid(eps, s0[:3], s0[3:], ts)
    assert np.abs(x - traj[:, :3]).max() < 1e-9
    assert np.abs(p - traj[:, 3:]).max() < 1e-9


def test_reeb_flow():
    ep = EllipsoidParams(2.0, 3.0)
    w1, w2 = ep.to_ellipsoid(*random_s3(1, np.random.default_rng(5)))
    a1, a2 = ellipsoid_reeb_flow(ep, (w1[0], w2[0]), np.linspace(0, 10, 50))
    assert ep.on_ellipsoid(a1, a2)
    T = ep.common_period()
    assert T == pytest.approx(2 * np.pi)
    b1, b2 = ellipsoid_reeb_flow(ep, (w1[0], w2[0]), T)
    assert abs(b1 - w1[0]) + abs(b2 - w2[0]) < 1e-12
    assert ep.orbit_periods() == pytest.approx((np.pi, 2 * np.pi / 3))


def test_irrational_ellipsoid_does_not_close():
    eps = (np.sqrt(5) - 1) / 2
    ep = EllipsoidParams.from_katok(eps)
    assert not ep.rational and ep.common_period() is None
    w1, w2 = ep.to_ellipsoid(np.array([0.6]), np.array([0.8j]))
    assert reeb_return_gap(ep, (w1[0], w2[0]), t_max=60.0) > 1e-2
    with pytest.raises(DomainError):
        ellipsoid_reeb_flow(ep, (2.0, 0.0), 1.0)
    with pytest.raises(DomainError):
        EllipsoidParams(0.0, 1.0)


def test_convexity_checks():
    for m in (round_metric(), katok(0.5), revolution(0.5)):
        res = starshaped_convexity_check(g_from_metric(m))
        assert res["starshaped"] and res["fibrewise_convex"]
    pts = np.array([[0.3, 0.8, 0.52], [-0.2, 0.4, 0.89]])
    res = starshaped_convexity_check(dimple_g(0.9, 4), points=pts)
    assert res["starshaped"] and not res["fibrewise_convex"]
    with pytest.raises(DomainError):
        dimple_g(1.2)
