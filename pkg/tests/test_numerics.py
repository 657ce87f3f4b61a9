import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from finslerlab import BACKEND
from finslerlab._core import _fallback
from finslerlab.errors import EigenError, IntegrationError, StepLimitExceeded, WindingError
from finslerlab.numerics import (IntegratorConfig, PeriodicTridiagonal, PlanarPath,
                                 central_difference, integrate_ode, quadrature,
                                 symmetric_eigen, unwrap_angle, winding_number)

try:
    from finslerlab._core import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def oscillator(t, y):
    return np.array([y[1], -y[0]])


# ---------------------------------------------------------------- ODEs

def test_adaptive_matches_closed_form():
    traj = integrate_ode(oscillator, [1.0, 0.0], (0, 10), IntegratorConfig(atol=1e-12, rtol=1e-12))
    ts = np.linspace(0, 10, 50)
    assert np.abs(traj(ts)[0] - np.cos(ts)).max() < 1e-9


def test_rk4_and_adaptive_agree():
    a = integrate_ode(oscillator, [0.3, 1.0], (0, 5), IntegratorConfig(atol=1e-12, rtol=1e-12))
    b = integrate_ode(oscillator, [0.3, 1.0], (0, 5), IntegratorConfig(method="rk4", fixed_step=1e-3))
    ts = np.linspace(0, 5, 37)
    assert np.abs(a(ts) - b(ts)).max() < 1e-9


def test_rk4_step_limit():
    with pytest.raises(StepLimitExceeded):
        integrate_ode(oscillator, [1.0, 0.0], (0, 10), IntegratorConfig(method="rk4", fixed_step=1e-3,
                                                                        max_steps=100))


def test_nonfinite_field_raises():
    with pytest.raises(IntegrationError):
        integrate_ode(lambda t, y: np.array([np.nan]), [1.0], (0, 1))


def test_bad_config():
    with pytest.raises(ValueError):
        IntegratorConfig(atol=-1)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")


# ---------------------------------------------------------- calculus

def test_quadrature_and_difference():
    assert quadrature(np.sin, 0, np.pi) == pytest.approx(2.0, abs=1e-12)
    assert central_difference(np.exp, 0.3) == pytest.approx(np.exp(0.3), abs=1e-10)


# ------------------------------------------------------------ winding

def test_winding_circle_twice():
    t = np.linspace(0, 1, 401)
    s = np.column_stack([np.cos(4 * np.pi * t), np.sin(4 * np.pi * t)])
    assert winding_number(PlanarPath(s, 1.0)) == 2
    assert winding_number(PlanarPath(s[:, ::-1], 1.0)) == -2


def test_winding_through_zero():
    t = np.linspace(-1, 1, 101)
    s = np.column_stack([t, 0 * t])
    with pytest.raises(WindingError):
        unwrap_angle(s)


def test_winding_coarse_grid():
    t = np.linspace(0, 1, 5)
    s = np.column_stack([np.cos(6 * np.pi * t), np.sin(6 * np.pi * t)])
    with pytest.raises(WindingError):
        winding_number(PlanarPath(s, 1.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(-5, 5), st.floats(0.2, 3.0))
def test_winding_of_integer_loops(k, amp):
    t = np.linspace(0, 1, 801)
    # k = 0: a small circle that does not enclose the origin
    z = amp * np.exp(2j * np.pi * k * t) if k else 1.0 + amp / 6 * np.exp(2j * np.pi * t)
    assert winding_number(PlanarPath(np.column_stack([z.real, z.imag]), 1.0)) == k


# --------------------------------------------------------------- eigen

sym_mats = arrays(np.float64, st.tuples(st.integers(2, 24), st.just(1)),
                  elements=st.floats(-1, 1)).flatmap(
    lambda v: arrays(np.float64, (v.shape[0], v.shape[0]), elements=st.floats(-10, 10)))


@settings(max_examples=40, deadline=None)
@given(sym_mats)
def test_dense_eigen_against_numpy(a):
    a = a + a.T
    w, v = symmetric_eigen(a)
    assert np.allclose(w, np.linalg.eigh(a)[0], atol=1e-9 * max(1, np.abs(a).max()))
    assert np.allclose(v.T @ v, np.eye(a.shape[0]), atol=1e-10)


def test_dense_eigen_rejects_nonsymmetric():
    with pytest.raises(EigenError):
        symmetric_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 60), st.integers(0, 10_000))
def test_periodic_tridiagonal_against_dense(n, seed):
    rng = np.random.default_rng(seed)
    op = PeriodicTridiagonal(rng.normal(size=n), rng.normal(size=n))
    ref = np.linalg.eigh(op.dense())[0]
    b = op.norm_bound + 1
    vals, vecs, idx = op.eigenpairs_in(-b, b)
    assert np.allclose(vals, ref, atol=1e-9)
    assert np.allclose(op.matvec(vecs), vecs * vals, atol=1e-8)
    assert np.array_equal(op.count_below(np.array([0.0])), [np.sum(ref < 0)])


def test_periodic_tridiagonal_clusters():
    # a free periodic chain has double eigenvalues
    n = 40
    op = PeriodicTridiagonal(np.zeros(n), np.ones(n))
    vals, vecs, _ = op.eigenpairs_in(-3, 3)
    assert np.allclose(np.sort(vals), np.sort(2 * np.cos(2 * np.pi * np.arange(n) / n)), atol=1e-12)
    assert np.allclose(vecs.T @ vecs, np.eye(n), atol=1e-9)


@pytest.mark.skipif(compiled is None, reason="compiled extension not built")
def test_backend_parity():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(30, 30))
    a = np.ascontiguousarray(a + a.T)
    w1, _ = _fallback.dense_eigh(a)
    w2, _ = compiled.dense_eigh(a)
    assert np.abs(np.asarray(w1) - np.asarray(w2)).max() < 1e-12
    d, e = rng.normal(size=50), rng.normal(size=50)
    sig = np.linspace(-3, 3, 17)
    assert np.array_equal(np.asarray(_fallback.periodic_count(d, e, sig, 1e-300)),
                          np.asarray(compiled.periodic_count(d, e, sig, 1e-300)))


def test_backend_name():
    assert BACKEND in ("cython", "python")
