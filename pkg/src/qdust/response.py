"""Linear density and velocity responses behind each mode, and the
Poisson-equation check that ties them back to the dispersion relations.

All amplitudes belong to a single plane wave exp(i k x - i omega t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dispersion import Mode
from .errors import IonResonance, MissingParameter, ZeroFrequency
from .params import CGS, PhysicalConstants, PlasmaComposition

RESONANCE_RTOL = 1e-12


@dataclass(frozen=True)
class PerturbationSet:
    mode: Mode
    phi_hat: float
    n_e1_hat: float
    n_i1_hat: float
    n_d1_hat: float | None = None
    v_i_hat: float | None = None


def _electron(phi_hat, k, comp, consts):
    # -k^2 n_e1 + (4 m_e n_e0 e / hbar^2) phi = 0
    return 4.0 * consts.m_e * comp.n_e0 * consts.e * phi_hat / (consts.hbar**2 * k * k)


def _ion_denominator(k, omega, comp, consts):
    """omega^2 - k^2 V_Ti^2 - hbar^2 k^4 / (4 m_i^2), plus the scale it is compared to."""
    k2 = k * k
    restoring = k2 * comp.T_i / comp.m_i + (consts.hbar * k2 / (2.0 * comp.m_i)) ** 2
    return omega * omega - restoring, max(omega * omega, restoring)


def density_responses(
    mode,
    phi_hat: float,
    k: float,
    omega: float,
    comp: PlasmaComposition,
    consts: PhysicalConstants = CGS,
) -> PerturbationSet:
    """Perturbation amplitudes driven by a potential amplitude ``phi_hat``.

    The composition is not checked for quasineutrality here; these are
    pure algebraic responses.

    Raises
    ------
    IonResonance
        mode A with omega^2 within 1e-12 (relative) of the ion acoustic-quantum
        resonance k^2 V_Ti^2 + hbar^2 k^4 / 4 m_i^2.
    ZeroFrequency
        mode B with omega = 0 (dust response diverges).
    """
    mode = Mode.parse(mode)
    if not k > 0:
        raise ValueError("density_responses needs k > 0")
    e = consts.e
    n_e1 = _electron(phi_hat, k, comp, consts)
    if mode is Mode.A:
        den, scale = _ion_denominator(k, omega, comp, consts)
        if abs(den) <= RESONANCE_RTOL * scale:
            raise IonResonance(f"omega={omega!r} sits on the ion resonance at k={k!r}")
        n_i1 = comp.n_i0 * comp.Z_i * e * k * k * phi_hat / (comp.m_i * den)
        # continuity: -i omega n_i1 + i k n_i0 v_i = 0
        v_i = omega * n_i1 / (comp.n_i0 * k)
        return PerturbationSet(mode, phi_hat, n_e1, n_i1, v_i_hat=v_i)

    if not comp.T_i > 0:
        raise MissingParameter("mobile-dust response needs T_i > 0 (Boltzmann ions)")
    if omega == 0:
        raise ZeroFrequency("mobile-dust response is singular at omega = 0")
    n_i1 = -comp.n_i0 * comp.Z_i * e * phi_hat / comp.T_i
    if comp.n_d0 > 0:
        n_d1 = -comp.epsilon * comp.n_d0 * comp.Z_d * e * k * k * phi_hat / (comp.m_d * omega * omega)
    else:
        n_d1 = 0.0
    return PerturbationSet(mode, phi_hat, n_e1, n_i1, n_d1_hat=n_d1)


def poisson_terms(p: PerturbationSet, k: float, comp: PlasmaComposition,
                  consts: PhysicalConstants = CGS) -> tuple[float, ...]:
    """Individual terms of k^2 phi + 4 pi e (n_e1 - Z_i n_i1 + eps Z_d n_d1)."""
    four_pi_e = 4.0 * math.pi * consts.e
    terms = (k * k * p.phi_hat, four_pi_e * p.n_e1_hat, -four_pi_e * comp.Z_i * p.n_i1_hat)
    if p.n_d1_hat is not None:
        terms += (four_pi_e * comp.epsilon * comp.Z_d * p.n_d1_hat,)
    return terms


def poisson_residual(
    mode,
    phi_hat: float,
    k: float,
    omega: float,
    comp: PlasmaComposition,
    consts: PhysicalConstants = CGS,
    normalization: str = "frequency",
) -> float:
    """Mismatch of the Poisson equation for the responses at (k, omega).

    normalization="frequency" (default)
        |S| / |omega dS/domega|, i.e. the relative frequency shift that
        would cancel the mismatch to first order. Zero exactly on the
        dispersion curve and well conditioned for floating-point omega.
    normalization="laplacian"
        |S| / (k^2 |phi_hat|). Also zero on-shell, but its condition
        number grows like K_q^4/k^4 + k_Di^2/k^2 (and like omega^2 over the
        ion electrostatic share in mode A), so it only resolves 1e-12 for
        well-balanced parameters.
    """
    mode = Mode.parse(mode)
    if phi_hat == 0:
        raise ValueError("the residual is undefined for phi_hat = 0")
    p = density_responses(mode, phi_hat, k, omega, comp, consts)
    terms = poisson_terms(p, k, comp, consts)
    mismatch = abs(math.fsum(terms))
    if normalization == "laplacian":
        return mismatch / (k * k * abs(phi_hat))
    if normalization != "frequency":
        raise ValueError(f"unknown normalization {normalization!r}")
    # only the inertial species' term depends on omega
    if mode is Mode.A:
        den, _ = _ion_denominator(k, omega, comp, consts)
        sensitivity = abs(terms[2]) * 2.0 * omega * omega / abs(den)
    else:
        sensitivity = 2.0 * abs(terms[3])
    if sensitivity == 0:
        return math.inf if mismatch > 0 else 0.0
    return mismatch / sensitivity
