import math

import pytest
import sympy as sp

from qdust.dispersion import Mode, mode_a_coefficients, mode_b_coefficients, omega_mode_a, omega_mode_b
from qdust.errors import IonResonance, ZeroFrequency
from qdust.params import UNIT, DustPolarity, PlasmaComposition, derived_scales
from qdust.response import density_responses, poisson_residual

from conftest import random_composition


def unit_comp(**kw):
    base = dict(n_e0=1.0, n_i0=1.0, m_i=1.0, T_i=1.0, n_d0=1.0, Z_d=1, m_d=1.0,
                polarity=DustPolarity.NEGATIVE)
    base.update(kw)
    return PlasmaComposition(**base)


def test_symbolic_identity_both_modes():
    k, w, phi, e, me, hb, ne, ni, nd, Zi, Zd, mi, md, Ti, eps = sp.symbols(
        "k omega phi e m_e hbar n_e n_i n_d Z_i Z_d m_i m_d T_i epsilon", positive=True)
    ne1 = 4 * me * ne * e * phi / (hb**2 * k**2)
    Kq4 = 16 * sp.pi * ne / (hb**2 / (me * e**2))
    wpi2 = 4 * sp.pi * ni * Zi**2 * e**2 / mi

    # mode A: eliminate v_i from continuity + momentum by hand and check it
    ni1, vi = sp.symbols("n_i1 v_i")
    cont = -sp.I * w * ni1 + ni * sp.I * k * vi
    mom = (-sp.I * w * mi * vi + Zi * e * sp.I * k * phi + Ti / ni * sp.I * k * ni1
           + hb**2 / (4 * mi * ni) * sp.I * k**3 * ni1)
    sol = sp.solve([cont, mom], [ni1, vi], dict=True)[0]
    closed = ni * Zi * e * k**2 * phi / (mi * (w**2 - k**2 * Ti / mi - hb**2 * k**4 / (4 * mi**2)))
    assert sp.simplify(sol[ni1] - closed) == 0
    assert sp.simplify(sol[vi] - w * closed / (ni * k)) == 0
    S = k**2 * phi + 4 * sp.pi * e * (ne1 - Zi * closed)
    w2 = k**2 * Ti / mi + hb**2 * k**4 / (4 * mi**2) + wpi2 * k**4 / (k**4 + Kq4)
    assert sp.simplify(S.subs(w, sp.sqrt(w2))) == 0

    # mode B: Boltzmann ions, inertial dust
    ni1 = -ni * Zi * e * phi / Ti
    nd1 = -eps * nd * Zd * e * k**2 * phi / (md * w**2)
    S = k**2 * phi + 4 * sp.pi * e * (ne1 - Zi * ni1 + eps * Zd * nd1)
    wpd2 = 4 * sp.pi * nd * Zd**2 * e**2 / md
    kD2 = 4 * sp.pi * ni * Zi**2 * e**2 / Ti
    w2 = wpd2 * k**4 / ((k**2 + kD2) * k**2 + Kq4)
    assert sp.simplify(S.subs(w, sp.sqrt(w2)).subs(eps, 1)) == 0
    assert sp.simplify(S.subs(w, sp.sqrt(w2)).subs(eps, -1)) == 0


def test_mode_b_unit_example():
    p = density_responses(Mode.B, 1.0, 1.0, 1.0, unit_comp(), UNIT)
    assert p.n_e1_hat == pytest.approx(4.0)
    assert p.n_i1_hat == pytest.approx(-1.0)
    assert p.n_d1_hat == pytest.approx(-1.0)
    assert p.v_i_hat is None


def test_zero_potential_gives_zero_amplitudes():
    for mode in (Mode.A, Mode.B):
        p = density_responses(mode, 0.0, 1.3, 0.7, unit_comp(), UNIT)
        assert p.n_e1_hat == 0 and p.n_i1_hat == 0
        assert (p.n_d1_hat or 0.0) == 0 and (p.v_i_hat or 0.0) == 0


def test_linearity(rng):
    for _ in range(50):
        comp = random_composition(rng)
        s = derived_scales(comp, UNIT)
        k = s.K_q * math.exp(rng.uniform(-3, 3))
        for mode, w in ((Mode.A, 1.7 * omega_mode_a(mode_a_coefficients(s), k)),
                        (Mode.B, omega_mode_b(mode_b_coefficients(s), k))):
            p1 = density_responses(mode, 1.0, k, w, comp, UNIT)
            p2 = density_responses(mode, 2.0, k, w, comp, UNIT)
            for name in ("n_e1_hat", "n_i1_hat", "n_d1_hat", "v_i_hat"):
                a, b = getattr(p1, name), getattr(p2, name)
                if a is not None:
                    assert b == 2.0 * a


def test_ion_resonance_detected():
    comp = unit_comp(T_i=0.3, m_i=2.0)
    k = 1.5
    w = math.sqrt(k**2 * 0.3 / 2.0 + k**4 / (4 * 2.0**2))
    with pytest.raises(IonResonance):
        density_responses(Mode.A, 1.0, k, w, comp, UNIT)


def test_zero_frequency_mode_b():
    with pytest.raises(ZeroFrequency):
        density_responses(Mode.B, 1.0, 1.0, 0.0, unit_comp(), UNIT)


def test_mode_a_velocity_from_continuity():
    comp = unit_comp(n_i0=2.0, T_i=0.1)
    p = density_responses(Mode.A, 1.0, 0.5, 3.0, comp, UNIT)
    assert p.v_i_hat == pytest.approx(3.0 * p.n_i1_hat / (2.0 * 0.5))


def test_residual_on_and_off_shell(rng):
    for _ in range(200):
        comp = random_composition(rng)
        s = derived_scales(comp, UNIT)
        k = s.K_q * math.exp(rng.uniform(-4, 4))
        wb = omega_mode_b(mode_b_coefficients(s), k)
        assert poisson_residual(Mode.B, 1.0, k, wb, comp, UNIT) <= 1e-12
        assert poisson_residual(Mode.B, 1.0, k, 0.9 * wb, comp, UNIT) > 1e-3
        wa = omega_mode_a(mode_a_coefficients(s), k)
        try:
            assert poisson_residual(Mode.A, 1.0, k, wa, comp, UNIT) <= 1e-12
            assert poisson_residual(Mode.A, 1.0, k, 0.9 * wa, comp, UNIT) > 1e-3
        except IonResonance:
            pass


def test_laplacian_normalisation_in_balanced_regime(rng):
    # k ~ K_q ~ k_Di and an electrostatic-dominated ion term: the literal
    # |S| / (k^2 |phi|) form is well conditioned here
    hits_a = hits_b = 0
    for _ in range(400):
        comp = random_composition(rng)
        s = derived_scales(comp, UNIT)
        kD = s.k_Di
        if not 0.5 <= kD / s.K_q <= 2.0:
            continue
        k = s.K_q * math.exp(rng.uniform(-0.7, 0.7))
        wb = omega_mode_b(mode_b_coefficients(s), k)
        assert poisson_residual(Mode.B, 1.0, k, wb, comp, UNIT, normalization="laplacian") <= 1e-12
        hits_b += 1
        cold = mode_a_coefficients(s)
        wa = omega_mode_a(cold, k)
        es_share = cold.omega_pi**2 * k**4 / (k**4 + cold.K_q**4) / wa**2
        if es_share > 0.1:
            assert poisson_residual(Mode.A, 1.0, k, wa, comp, UNIT, normalization="laplacian") <= 1e-12
            hits_a += 1
    assert hits_b >= 20 and hits_a >= 5, (hits_a, hits_b)


def test_mode_b_bracket_vanishes_on_shell(rng):
    for _ in range(200):
        comp = random_composition(rng)
        s = derived_scales(comp, UNIT)
        k = s.K_q * math.exp(rng.uniform(-3, 3))
        w = omega_mode_b(mode_b_coefficients(s), k)
        electron = s.K_q**4 / k**2
        dust = s.omega_pd**2 * k**2 / w**2
        bracket = k**2 + electron + s.k_Di**2 - dust
        assert abs(bracket) <= 1e-13 * dust
        # the k^2 term drops out for k << k_Di
        if k < 1e-4 * s.k_Di:
            assert abs(electron + s.k_Di**2 - dust) <= 1e-7 * dust
        p = density_responses(Mode.B, 1.0, k, w, comp, UNIT)
        # electron/ion response ratio from the plane-wave forms
        assert p.n_e1_hat / (-comp.Z_i * p.n_i1_hat) == pytest.approx(electron / s.k_Di**2, rel=1e-12)


def test_dust_polarity_does_not_change_on_shell_balance():
    neg = unit_comp(n_e0=1.0, n_i0=2.0, n_d0=1.0)
    pos = unit_comp(n_e0=3.0, n_i0=1.0, n_d0=1.0, Z_d=2, polarity=DustPolarity.POSITIVE)
    for comp in (neg, pos):
        s = derived_scales(comp, UNIT)
        w = omega_mode_b(mode_b_coefficients(s), 0.8)
        assert poisson_residual(Mode.B, 1.0, 0.8, w, comp, UNIT) <= 1e-14


def test_residual_rejects_zero_potential_and_bad_normalisation():
    with pytest.raises(ValueError):
        poisson_residual(Mode.B, 0.0, 1.0, 1.0, unit_comp(), UNIT)
    with pytest.raises(ValueError):
        poisson_residual(Mode.B, 1.0, 1.0, 1.0, unit_comp(), UNIT, normalization="bogus")
