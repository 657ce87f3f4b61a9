import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab.czindex import (LinearizedPath, _window_for, analytic_constant_spectrum,
                                analytic_mu, angular_velocity_check, certify_dynamical_convexity,
                                constant_k_monodromy, cz_spectrum, discretize,
                                inequality_taui_check, jacobi_flow, monodromy_defect,
                                orbit_spectrum, pinching_corollary_check)
from finslerlab.errors import DomainError, LabelingError
from finslerlab.finsler import katok, killing_perturbation, revolution, round_metric
from finslerlab.geodesics import equator_orbit, shortest_loop


def constant_k_spectrum(K, T, windings):
    """Periodic eigenvalues of -Jv' - diag(1, K)v - tau v = 0 by winding.

    Solutions rotate at frequency sqrt((1 + tau)(K + tau)) = 2 pi |m| / T; the
    root above -min(1, K) winds positively, the one below -max(1, K) negatively.
    """
    out = []
    for m in windings:
        if m == 0:
            out += sorted([-1.0, -K])
            continue
        w = 2 * np.pi * abs(m) / T
        disc = np.sqrt((1 - K) ** 2 + 4 * w * w)
        root = (-(1 + K) + np.sign(m) * disc) / 2
        out += [root, root]
    return np.array(out)


@pytest.mark.parametrize("T", [2 * np.pi, 4 * np.pi, 6 * np.pi])
def test_identity_spectrum(T):
    path = LinearizedPath.constant(1.0, T)
    spec = cz_spectrum(path, _window_for(path), 1024)
    assert np.abs(spec.tau - analytic_constant_spectrum(T, spec.winding)).max() < 1e-3
    assert spec.mu == analytic_mu(T)
    assert np.array_equal(spec.winding, spec.labels // 2)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 5.0), st.floats(1.0, 12.0))
def test_constant_k_oracle_and_labeling(K, T):
    path = LinearizedPath.constant(K, T)
    spec = cz_spectrum(path, _window_for(path), 512)
    exact = constant_k_spectrum(K, T, spec.winding[::2])
    assert np.abs(spec.tau - exact).max() < 5e-3
    for w in np.unique(spec.winding):
        assert np.sum(spec.winding == w) == 2
    assert np.array_equal(spec.winding, spec.labels // 2)
    assert np.all(np.diff(spec.tau) > -1e-8)


def test_second_order_convergence():
    path = LinearizedPath.constant(2.5, 7.0)
    errs = []
    for N in (256, 512, 1024):
        spec = cz_spectrum(path, 6, N, error_estimate=False)
        exact = constant_k_spectrum(2.5, 7.0, spec.winding[::2])
        errs.append(np.abs(spec.tau - exact).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2) < 0.1)


def test_dense_and_structured_routes_agree():
    path = jacobi_flow(equator_orbit(katok(0.3)).iterated(2))
    a = cz_spectrum(path, 6, 256, route="structured")
    b = cz_spectrum(path, 6, 256, route="dense")
    assert np.abs(a.tau - b.tau).max() < 1e-10
    assert np.array_equal(a.winding, b.winding)


def test_discretization_is_symmetric_cyclic():
    op = discretize(LinearizedPath.constant(1.0, 5.0), 64)
    m = op.dense()
    assert np.allclose(m, m.T)
    with pytest.raises(DomainError):
        discretize(LinearizedPath.constant(1.0, 5.0), 4)


@pytest.mark.parametrize("K,T", [(4.0, 3.0), (1.0, 2 * np.pi), (0.3, 7.0)])
def test_jacobi_flow_against_closed_form(K, T):
    path = jacobi_flow(LinearizedPath.constant(K, T))
    assert path.det_drift < 1e-9
    expect = np.array([constant_k_monodromy(K, t) for t in path.times])
    assert np.abs(path.Phi - expect).max() < 1e-9


def test_symplecticity_along_orbits():
    for m in (round_metric(), katok(0.3), revolution(0.5), revolution(0.7)):
        for d in (1, -1):
            path = jacobi_flow(equator_orbit(m, d).iterated(2))
            assert path.det_drift < 1e-7


def test_monodromy_defect_vanishes_at_eigenvalues():
    path = LinearizedPath.constant(2.0, 6.0)
    spec = cz_spectrum(path, 6, 1024)
    for tau in spec.tau:
        assert abs(monodromy_defect(path, float(tau))) < 1e-3
    assert abs(monodromy_defect(path, 0.37)) > 1e-2


def test_rescaling():
    a = LinearizedPath.constant(4.0, 3.0).rescaled(4.0)
    assert a.T == pytest.approx(6.0)
    assert np.allclose(a.K(np.linspace(0, 6, 5)), 1.0)


def test_angular_velocity():
    path = LinearizedPath.constant(1.0, 4 * np.pi)
    spec = cz_spectrum(path, 6, 1024)
    for k in (3, 5):
        assert angular_velocity_check(path, spec, k) < 1e-3


def test_window_errors():
    path = LinearizedPath.constant(1.0, 6 * np.pi)
    with pytest.raises(LabelingError):
        cz_spectrum(path, 6, 1024)        # no positive eigenvalue up to winding 3
    with pytest.raises(DomainError):
        cz_spectrum(path, 6, 32)
    with pytest.raises(DomainError):
        cz_spectrum(path, 2, 256)


def test_marginal_ellipsoid_doubled_equator():
    spec, _ = orbit_spectrum(equator_orbit(revolution(0.5)).iterated(2))
    assert spec.mu == 1 and spec.marginal and spec.marginal_tau3
    assert abs(spec.tau3) < 5e-3
    assert spec.to_dict()["mu"] == 1


def test_noncontractible_mu_is_null():
    spec, _ = orbit_spectrum(equator_orbit(katok(0.3)))
    assert spec.contractible is False
    assert spec.to_dict()["mu"] is None


def test_taui_inequality_on_katok():
    for d in (1, -1):
        for m in (1, 2, 3):
            spec, _ = orbit_spectrum(equator_orbit(katok(0.3), d).iterated(m), N=512)
            assert inequality_taui_check(spec)


@pytest.mark.slow
def test_certifier_ellipsoid_and_katok():
    m = revolution(0.5)
    orb = equator_orbit(m)
    rep = certify_dynamical_convexity(m, orbits=[orb], loop_report=shortest_loop(m))
    assert not rep.verdict_by_theorem and not rep.verdict_by_inspection
    row = [r for r in rep.rows if r.iterate == 2][0]
    assert row.mu == 1 and row.marginal
    k = katok(0.3)
    rep = certify_dynamical_convexity(k, orbits=[equator_orbit(k, 1), equator_orbit(k, -1)],
                                      loop_report=shortest_loop(k))
    assert rep.verdict_by_theorem and rep.verdict_by_inspection
    assert sorted(r.mu for r in rep.rows if r.contractible) == [3, 5]


def test_certifier_refuses_without_curvature():
    with pytest.raises(DomainError):
        certify_dynamical_convexity(killing_perturbation(revolution(0.8), 0.3, [1, 0, 0]))
    with pytest.raises(DomainError):
        certify_dynamical_convexity(katok(0.3), delta=2.0)


@pytest.mark.slow
def test_pinching_branches():
    r = pinching_corollary_check(round_metric())
    assert r.pinched and r.passed and r.rademacher_gap == pytest.approx(0, abs=1e-9)
    k = pinching_corollary_check(katok(0.3))
    assert k.pinched is None and k.passed
    with pytest.raises(DomainError):
        pinching_corollary_check(katok(0.3), require_reversible=True)
