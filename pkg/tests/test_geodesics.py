import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab.errors import DomainError
from finslerlab.finsler import katok, killing_perturbation, revolution, round_metric
from finslerlab.geodesics import (antipodal_distance_check, cogeodesic_flow, contractibility,
                                  equator_orbit, find_closed_geodesics, finsler_distance,
                                  focusing_check, quasi_antipode, shoot_state, shortest_loop,
                                  trajectory_table)
from finslerlab.numerics import IntegratorConfig


def test_round_flow_is_great_circle():
    m = round_metric()
    x0 = np.array([0.3, -0.4, np.sqrt(1 - 0.25)])
    s0 = shoot_state(m, x0, 0.7)
    v0 = s0[3:]
    fl = cogeodesic_flow(m, s0, 2 * np.pi)
    ts = np.linspace(0, 2 * np.pi, 40)
    x = fl.trajectory(ts)[:3].T
    expect = np.cos(ts)[:, None] * x0 + np.sin(ts)[:, None] * v0
    assert np.abs(x - expect).max() < 1e-9


def test_rk4_cross_check():
    m = katok(0.35)
    s0 = shoot_state(m, np.array([0.2, 0.9, np.sqrt(1 - 0.85)]), 1.1)
    a = cogeodesic_flow(m, s0, 3.0).trajectory.y_end
    b = cogeodesic_flow(m, s0, 3.0, IntegratorConfig(method="rk4", fixed_step=2e-3)).trajectory.y_end
    assert np.abs(a - b).max() < 1e-9


@pytest.mark.parametrize("m", [katok(0.3), revolution(0.5), revolution(1.4),
                               killing_perturbation(round_metric(), 0.3, [0.3, 0.4, 0.5])],
                         ids=["katok", "oblate", "prolate", "killing"])
def test_conservation(m):
    rng = np.random.default_rng(5)
    x = rng.normal(size=3)
    x /= np.linalg.norm(x)
    starts = np.array([shoot_state(m, x, th) for th in np.linspace(0, 2 * np.pi, 8, endpoint=False)])
    T = 15.0
    fl = cogeodesic_flow(m, starts, T)
    assert fl.fstar_drift < 1e-8 * T
    if m.axisymmetric:
        assert fl.pphi_drift < 1e-8 * T
    else:
        assert fl.pphi_drift is None


def test_flow_rejects_non_unit_state():
    m = katok(0.3)
    s0 = shoot_state(m, np.array([0.0, 1.0, 0.0]), 0.3)
    with pytest.raises(DomainError):
        cogeodesic_flow(m, np.concatenate([s0[:3], 2 * s0[3:]]), 1.0)


@settings(max_examples=12, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(0.1, np.pi - 0.1), st.floats(0, 2 * np.pi),
       st.floats(0.5, 4.0))
def test_reversal_duality(eps, r, theta, T):
    # a katok(eps) geodesic run backwards is a katok(-eps) geodesic
    fwd, bwd = katok(eps), katok(-eps)
    x0 = np.array([np.cos(r), np.sin(r), 0.0])
    s0 = shoot_state(fwd, x0, theta)
    end = cogeodesic_flow(fwd, s0, T).trajectory.y_end
    vel = fwd.hamiltonian_field(end)[:3]
    p = bwd.unit_covector(end[:3], -vel)
    back = cogeodesic_flow(bwd, np.concatenate([end[:3], p]), T).trajectory.y_end
    assert np.linalg.norm(back[:3] - x0) < 1e-8


@pytest.mark.parametrize("eps", [0.3, -0.3, 0.55])
def test_katok_equator_periods(eps):
    m = katok(eps)
    plus = equator_orbit(m, +1)
    minus = equator_orbit(m, -1)
    lengths = sorted([plus.period, minus.period])
    assert lengths[0] == pytest.approx(2 * np.pi / (1 + abs(eps)), abs=1e-10)
    assert lengths[1] == pytest.approx(2 * np.pi / (1 - abs(eps)), abs=1e-10)
    short = plus if plus.period < minus.period else minus
    assert short.label == "short-equator"


def test_equator_orbit_needs_symmetry():
    with pytest.raises(DomainError):
        equator_orbit(killing_perturbation(round_metric(), 0.3, [0, 1, 0]))


def test_trajectory_table():
    m = katok(0.3)
    o = equator_orbit(m)
    tab = trajectory_table(m, o.trajectory, np.linspace(0, o.period, 11))
    assert tab.shape == (11, 6)
    assert np.allclose(tab[:, 1], np.pi / 2, atol=1e-12)
    assert np.abs(tab[:, 5]).max() < 1e-10


def test_katok_closed_geodesics():
    orbits = find_closed_geodesics(katok(0.3), 10.0)
    assert len(orbits) == 2
    assert orbits[0].period == pytest.approx(2 * np.pi / 1.3, abs=1e-9)
    assert orbits[1].period == pytest.approx(2 * np.pi / 0.7, abs=1e-9)
    assert all(o.closure_residual < 1e-10 for o in orbits)


@pytest.mark.slow
def test_golden_katok_closed_geodesics():
    eps = (np.sqrt(5) - 1) / 2
    orbits = find_closed_geodesics(katok(eps), 20.0)
    assert [round(o.period, 6) for o in orbits] == [round(2 * np.pi / (1 + eps), 6),
                                                    round(2 * np.pi / (1 - eps), 6)]
    # cap 10 sees only the short equator
    assert len(find_closed_geodesics(katok(eps), 10.0)) == 1


def test_round_and_ellipsoid_search():
    r = find_closed_geodesics(round_metric(), 7.0)
    assert len(r) == 1 and r[0].period == pytest.approx(2 * np.pi, abs=1e-9)
    e = find_closed_geodesics(revolution(0.5), 4.0)
    assert len(e) == 1 and e[0].period == pytest.approx(np.pi, abs=1e-9)


def test_search_rejects_bad_cap():
    with pytest.raises(DomainError):
        find_closed_geodesics(katok(0.3), 0.0)


def test_contractibility_of_iterates():
    o = equator_orbit(round_metric())
    assert [contractibility(o.iterated(m)) for m in (1, 2, 3)] == [False, True, False]
    assert equator_orbit(katok(0.3)).iterated(2).contractible()


def test_focusing():
    assert focusing_check(katok(0.4), [0.3, 0.8, 0.5])["spread"] < 1e-5
    res = focusing_check(round_metric(), [0.0, 0.0, 1.0])
    assert res["passed"] and np.allclose(res["focal_point"], [0, 0, -1], atol=1e-8)
    assert not focusing_check(revolution(0.5), [1.0, 0.0, 0.0])["passed"]


def test_quasi_antipode_round():
    assert np.allclose(quasi_antipode(round_metric(), [0.6, 0.8, 0.0]), [-0.6, -0.8, 0], atol=1e-8)


def test_finsler_distance_round():
    d = finsler_distance(round_metric(), [1.0, 0, 0], [0.0, 1.0, 0.0], grid_density=32)
    assert d == pytest.approx(np.pi / 2, abs=1e-9)


def test_antipodal_distance_two_ways():
    res = antipodal_distance_check(0.3)
    assert res["sum_identity_error"] < 1e-10
    assert res["agreement"] < 1e-8


@pytest.mark.slow
def test_shortest_loops():
    assert shortest_loop(round_metric()).ell == pytest.approx(2 * np.pi, abs=1e-9)
    rep = shortest_loop(katok(0.3))
    assert rep.ell == pytest.approx(2 * np.pi / 1.3, abs=1e-9)
    assert rep.k1_bound_ok
    assert shortest_loop(revolution(0.5)).ell == pytest.approx(np.pi, abs=1e-8)
