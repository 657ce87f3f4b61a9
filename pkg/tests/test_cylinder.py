import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab.cylinder import (ModelTube, SectorGerm, build_cylinder, charge_integral,
                                 cr_convergence, cr_residual, energy_estimate, gauge_correction,
                                 sector_matching, sigmoid_family)
from finslerlab.errors import DomainError

GOLDEN = (np.sqrt(5) - 1) / 2


def monomial_charge(n, c, degree, r):
    # eta_hat(s) = s and F = z^{degree - nc} up to a unit: n + 2 pi e r^{4e}, e = degree - nc
    e = degree - n * c
    return n + 2 * np.pi * e * r ** (4 * e)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 0.95).filter(lambda c: abs(c * 120 - round(c * 120)) > 1e-3))
def test_sector_matching(n, c):
    germ = SectorGerm(n, c, (0,) * (n + 1) + (1.0, 0.3 - 0.2j, 0.05))
    res = sector_matching(germ)
    assert res["matching"] < 1e-12 and res["modulus_jump"] < 1e-12
    assert res["full_turn"] < 1e-12


def test_modulus_and_a_are_rotation_invariant():
    germ = SectorGerm.monomial(3, GOLDEN, 5)
    s = build_cylinder(germ, ModelTube.polynomial([0.0, 1.0]), 1e-2)
    assert np.ptp(np.abs(s.F), axis=1).max() < 1e-12
    assert np.ptp(s.a, axis=1).max() < 1e-12
    assert np.allclose(s.t[0], 3 * s.thetas / (2 * np.pi))


def test_flat_tube_is_holomorphic_log():
    germ = SectorGerm.monomial(2, GOLDEN, 3)
    s = build_cylinder(germ, ModelTube.flat(), 1e-3)
    assert np.allclose(s.a, -2 * np.log(s.radii)[:, None] / (2 * np.pi) * np.ones_like(s.a))
    res = cr_residual(s)
    assert res["axial"] < 1e-10
    ch = charge_integral(s)
    assert np.allclose(ch["values"], 2.0, atol=1e-12)


def test_cr_residual_converges_at_second_order():
    conv = cr_convergence(SectorGerm.monomial(2, GOLDEN, 3), ModelTube.polynomial([0.0, 1.0]))
    assert all(abs(o - 2) < 0.2 for o in conv["axial_orders"])
    assert all(abs(o - 2) < 0.2 for o in conv["transverse_orders"])


def fine_sample(**kw):
    germ = SectorGerm.monomial(2, GOLDEN, 3)
    return build_cylinder(germ, ModelTube.polynomial([0.0, 1.0]), 1e-2, 2 ** (-1 / 128), 1024, **kw)


def test_dbar_sign():
    res = cr_residual(fine_sample())
    # u solves dbar u = -G; the opposite sign leaves an O(1) residual
    assert res["axial"] < 1e-2 * res["axial_against_plus_G"]


def test_corrupted_a_is_detected():
    clean = cr_residual(fine_sample())
    bad = cr_residual(fine_sample(a_perturbation=lambda z: 0.05 * np.real(z)))
    # dbar of the perturbation is 0.025 everywhere
    assert bad["axial"] > 0.02 > 20 * clean["axial"]
    assert bad["transverse"] == pytest.approx(clean["transverse"])


@pytest.mark.parametrize("n,degree", [(2, 3), (1, 5), (3, 7)])
def test_charge_against_closed_form(n, degree):
    germ = SectorGerm.monomial(n, GOLDEN, degree)
    s = build_cylinder(germ, ModelTube.polynomial([0.0, 1.0]), 1e-3)
    radii = [r for r in (0.5, 1e-1, 1e-2, 1e-3) if r < s.disc_radius]
    ch = charge_integral(s, radii=radii)
    expect = [monomial_charge(n, GOLDEN, degree, r) for r in radii]
    assert np.allclose(ch["values"], expect, rtol=1e-10)
    assert ch["monotone"] and abs(ch["values"][-1] - n) < 1e-2


def test_charge_radii_must_descend():
    s = build_cylinder(SectorGerm.monomial(1, GOLDEN, 5), ModelTube.flat(), 1e-2)
    with pytest.raises(DomainError):
        charge_integral(s, radii=(1e-2, 1e-1))


def test_energy_is_finite_and_stable():
    s = build_cylinder(SectorGerm.monomial(2, GOLDEN, 3), ModelTube.polynomial([0.0, 1.0]), 1e-3)
    e = [energy_estimate(s, sigmoid_family(k)) for k in (20, 40, 80)]
    assert all(x["finite"] for x in e)
    assert abs(e[0]["energy"] - e[1]["energy"]) < 1e-6
    assert e[2]["energy"] >= e[1]["energy"] - 1e-12
    with pytest.raises(DomainError):
        energy_estimate(s, [lambda a: np.cos(a)])


def test_tube_shrinks_disc_to_fit():
    germ = SectorGerm(1, GOLDEN, (0, 0, 40.0), disc_radius=1.0)
    s = build_cylinder(germ, ModelTube.polynomial([0.0, 1.0], rho_max=1.5), 1e-3)
    assert s.disc_radius < 1.0 and np.abs(s.F).max() <= 1.5
    with pytest.raises(DomainError):
        build_cylinder(germ, ModelTube.flat(), 1e-3, shrink=False)


def test_csv_rows_shape():
    s = build_cylinder(SectorGerm.monomial(2, GOLDEN, 3), ModelTube.flat(), 0.1)
    rows = s.csv_rows()
    assert rows.shape == (s.radii.size * s.thetas.size, 7)
    assert set(np.unique(rows[:, 2])) == {0.0, 1.0}


def test_gauge_correction():
    tube, checks = gauge_correction(lambda r: r ** 2, lambda r: r)
    assert checks["exactness_error"] < 1e-6
    assert checks["angular_component"] < 1e-8
    assert checks["omega_dbar_error"] < 1e-6
    assert checks["gauge_at_half"] == pytest.approx(0.125, abs=1e-12)
    assert tube.Phi(np.array([0.64]))[0] == pytest.approx(0.64 ** 2 / 2, abs=1e-9)
    with pytest.raises(DomainError):
        gauge_correction(lambda r: 1.0 + r, lambda r: r)


def test_germ_validation():
    with pytest.raises(DomainError):
        SectorGerm(2, 0.5, (0, 0, 0, 1.0))          # resonant rotation
    with pytest.raises(DomainError):
        SectorGerm(2, GOLDEN, (0, 0, 1.0))           # order equals n
    with pytest.raises(DomainError):
        SectorGerm(0, GOLDEN, (0, 1.0))
    with pytest.raises(DomainError):
        ModelTube(lambda s: 1.0 + 0 * s)
    assert SectorGerm(2, GOLDEN, (0, 0, 0, 0, 2.0, 1.0)).order == 4
