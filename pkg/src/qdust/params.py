"""Physical constants, plasma compositions and the derived scales.

Everything here is Gaussian CGS: densities in cm^-3, masses in g,
temperatures in erg (k_B absorbed), charges in statcoulomb.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import (
    BadChargeState,
    NegativeTemperature,
    NonPositiveDensity,
    NonPositiveMass,
    QuasineutralityViolated,
)

QUASINEUTRALITY_RTOL = 1e-10

# CODATA-2018 (exact SI definitions where applicable), converted to CGS.
SPEED_OF_LIGHT = 2.99792458e10  # cm/s
ELEMENTARY_CHARGE = 1.602176634e-19 * SPEED_OF_LIGHT / 10.0  # statC
ELECTRON_MASS = 9.1093837015e-28  # g
PROTON_MASS = 1.67262192369e-24  # g
ATOMIC_MASS_UNIT = 1.66053906660e-24  # g
REDUCED_PLANCK = 6.62607015e-27 / (2.0 * math.pi)  # erg s
BOLTZMANN = 1.380649e-16  # erg/K
ELECTRONVOLT = 1.602176634e-12  # erg


@dataclass(frozen=True)
class PhysicalConstants:
    """Charge magnitude, electron mass and reduced Planck constant.

    The Bohr radius is derived from the other three so the set is always
    self-consistent.
    """

    e: float = ELEMENTARY_CHARGE
    m_e: float = ELECTRON_MASS
    hbar: float = REDUCED_PLANCK

    def __post_init__(self):
        for name in ("e", "m_e", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"physical constant {name} must be positive, got {value!r}")

    @property
    def a0(self) -> float:
        return self.hbar**2 / (self.m_e * self.e**2)


CGS = PhysicalConstants()
# e = m_e = hbar = 1; used for dimensionless checks.
UNIT = PhysicalConstants(e=1.0, m_e=1.0, hbar=1.0)


class DustPolarity(enum.IntEnum):
    """Sign factor for the dust charge: +1 for negative grains, -1 for positive."""

    NEGATIVE = 1
    POSITIVE = -1

    @classmethod
    def parse(cls, value) -> "DustPolarity":
        if isinstance(value, DustPolarity):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("negative", "neg", "-", "+1", "1"):
                return cls.NEGATIVE
            if key in ("positive", "pos", "+", "-1"):
                return cls.POSITIVE
            raise ValueError(f"unknown dust polarity {value!r}")
        return cls(int(value))


@dataclass(frozen=True)
class PlasmaComposition:
    """Equilibrium state of an electron-ion-dust plasma.

    ``m_d`` may be left as None for dust-free plasmas. ``T_eF`` is the
    electron Fermi temperature; when None it is computed from ``n_e0``.
    """

    n_e0: float
    n_i0: float
    m_i: float
    T_i: float = 0.0
    Z_i: int = 1
    n_d0: float = 0.0
    Z_d: int = 1
    polarity: DustPolarity = DustPolarity.NEGATIVE
    m_d: float | None = None
    T_eF: float | None = None

    @property
    def epsilon(self) -> int:
        return int(self.polarity)

    def quasineutrality_residual(self) -> float:
        ion_charge = self.Z_i * self.n_i0
        return abs(ion_charge - self.n_e0 - self.epsilon * self.Z_d * self.n_d0) / ion_charge


def validate_composition(comp: PlasmaComposition) -> PlasmaComposition:
    """Return ``comp`` unchanged if it is physically admissible, raise otherwise."""
    for name in ("n_e0", "n_i0"):
        value = getattr(comp, name)
        if not (math.isfinite(value) and value > 0):
            raise NonPositiveDensity(f"{name} must be > 0, got {value!r}")
    if not (math.isfinite(comp.n_d0) and comp.n_d0 >= 0):
        raise NonPositiveDensity(f"n_d0 must be >= 0, got {comp.n_d0!r}")
    if not (math.isfinite(comp.m_i) and comp.m_i > 0):
        raise NonPositiveMass(f"m_i must be > 0, got {comp.m_i!r}")
    if comp.m_d is not None and not (math.isfinite(comp.m_d) and comp.m_d > 0):
        raise NonPositiveMass(f"m_d must be > 0, got {comp.m_d!r}")
    if comp.n_d0 > 0 and comp.m_d is None:
        raise NonPositiveMass("m_d is required when n_d0 > 0")
    for name in ("Z_i", "Z_d"):
        value = getattr(comp, name)
        if int(value) != value or value < 1:
            raise BadChargeState(f"{name} must be a positive integer, got {value!r}")
    if not (math.isfinite(comp.T_i) and comp.T_i >= 0):
        raise NegativeTemperature(f"T_i must be >= 0, got {comp.T_i!r}")
    if comp.T_eF is not None and not (math.isfinite(comp.T_eF) and comp.T_eF > 0):
        raise NegativeTemperature(f"T_eF must be > 0, got {comp.T_eF!r}")

    residual = comp.quasineutrality_residual()
    if not residual <= QUASINEUTRALITY_RTOL:
        raise QuasineutralityViolated(residual, QUASINEUTRALITY_RTOL)
    return comp


def fermi_temperature(n_e0: float, consts: PhysicalConstants = CGS) -> float:
    """Fermi energy of a degenerate 3-D electron gas, (hbar^2/2m_e)(3 pi^2 n)^(2/3)."""
    return consts.hbar**2 / (2.0 * consts.m_e) * (3.0 * math.pi**2 * n_e0) ** (2.0 / 3.0)


@dataclass(frozen=True)
class DerivedScales:
    """Characteristic scales of a composition.

    ``k_Di`` is None for cold ions (T_i = 0); ``C_D`` is None whenever
    there is no dust or no ion Debye wavenumber.
    """

    K_q: float
    a0: float
    omega_pi: float
    omega_pd: float
    V_Ti: float
    k_Di: float | None
    C_D: float | None
    q_i: float
    T_eF: float
    T_eF_derived: bool

    def as_dict(self) -> dict:
        return {
            "K_q": self.K_q,
            "a0": self.a0,
            "omega_pi": self.omega_pi,
            "omega_pd": self.omega_pd,
            "V_Ti": self.V_Ti,
            "k_Di": self.k_Di,
            "C_D": self.C_D,
            "q_i": self.q_i,
            "T_eF": self.T_eF,
            "T_eF_derived": self.T_eF_derived,
        }


def derived_scales(comp: PlasmaComposition, consts: PhysicalConstants = CGS) -> DerivedScales:
    e2 = consts.e**2
    a0 = consts.a0
    K_q = (16.0 * math.pi * comp.n_e0 / a0) ** 0.25
    omega_pi = math.sqrt(4.0 * math.pi * comp.n_i0 * comp.Z_i**2 * e2 / comp.m_i)
    if comp.n_d0 > 0:
        omega_pd = math.sqrt(4.0 * math.pi * comp.n_d0 * comp.Z_d**2 * e2 / comp.m_d)
    else:
        omega_pd = 0.0
    V_Ti = math.sqrt(comp.T_i / comp.m_i)
    if comp.T_i > 0:
        k_Di = math.sqrt(4.0 * math.pi * comp.n_i0 * comp.Z_i**2 * e2 / comp.T_i)
    else:
        k_Di = None
    C_D = omega_pd / k_Di if (k_Di is not None and comp.n_d0 > 0) else None
    q_i = consts.hbar / (2.0 * comp.m_i)
    if comp.T_eF is None:
        T_eF, T_eF_derived = fermi_temperature(comp.n_e0, consts), True
    else:
        T_eF, T_eF_derived = comp.T_eF, False
    return DerivedScales(
        K_q=K_q,
        a0=a0,
        omega_pi=omega_pi,
        omega_pd=omega_pd,
        V_Ti=V_Ti,
        k_Di=k_Di,
        C_D=C_D,
        q_i=q_i,
        T_eF=T_eF,
        T_eF_derived=T_eF_derived,
    )
