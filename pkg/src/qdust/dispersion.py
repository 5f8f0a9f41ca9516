"""Dispersion relations of the two low-frequency quantum dust modes.

Mode A ("immobile-dust"): ions oscillate against the quantum-correlated
electron background, dust is a fixed neutralising species.

Mode B ("mobile-dust"): dust carries the inertia, ions follow a
Boltzmann response and electrons respond through the Bohm term.

Both relations are available in coefficient form (no physical constants
needed) and, through :func:`mode_a_coefficients` / :func:`mode_b_coefficients`,
from a :class:`~qdust.params.PlasmaComposition`.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import BadGrid, MissingParameter
from .params import CGS, DerivedScales, PhysicalConstants, PlasmaComposition, derived_scales

REGIME_THRESHOLD = 10.0


class Mode(str, enum.Enum):
    A = "immobile-dust"
    B = "mobile-dust"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        key = str(value).strip().lower()
        if key in ("a", "immobile-dust", "immobile"):
            return cls.A
        if key in ("b", "mobile-dust", "mobile"):
            return cls.B
        raise ValueError(f"unknown mode {value!r}; expected immobile-dust or mobile-dust")


@dataclass(frozen=True)
class ModeACoefficients:
    V_Ti: float
    q_i: float
    omega_pi: float
    K_q: float

    def __post_init__(self):
        for name in ("V_Ti", "q_i", "omega_pi"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.K_q > 0:
            raise ValueError("K_q must be > 0")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.V_Ti, self.q_i, self.omega_pi, self.K_q)


@dataclass(frozen=True)
class ModeBCoefficients:
    omega_pd: float
    k_Di: float
    K_q: float

    def __post_init__(self):
        for name in ("omega_pd", "k_Di"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.K_q > 0:
            raise ValueError("K_q must be > 0")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.omega_pd, self.k_Di, self.K_q)


def mode_a_coefficients(scales: DerivedScales) -> ModeACoefficients:
    return ModeACoefficients(V_Ti=scales.V_Ti, q_i=scales.q_i, omega_pi=scales.omega_pi, K_q=scales.K_q)


def mode_b_coefficients(scales: DerivedScales) -> ModeBCoefficients:
    if scales.k_Di is None:
        raise MissingParameter("mobile-dust mode needs a finite ion Debye wavenumber (T_i > 0)")
    return ModeBCoefficients(omega_pd=scales.omega_pd, k_Di=scales.k_Di, K_q=scales.K_q)


def coefficients_for(mode, scales: DerivedScales):
    mode = Mode.parse(mode)
    return mode_a_coefficients(scales) if mode is Mode.A else mode_b_coefficients(scales)


def omega_mode_a(c: ModeACoefficients, k):
    """Immobile-dust branch.

    omega^2 = k^2 V_Ti^2 + q_i^2 k^4 + omega_pi^2 k^4 / (k^4 + K_q^4)

    Accepts a scalar or an array of k >= 0 and returns the non-negative root.
    """
    k = np.asarray(k, dtype=float)
    # k is factored out of the root so tiny k does not underflow through k^2
    r = k / c.K_q
    with np.errstate(over="ignore"):
        shielding = r * r / (1.0 + r**4)
    out = k * np.sqrt(c.V_Ti**2 + (c.q_i * k) ** 2 + (c.omega_pi / c.K_q) ** 2 * shielding)
    return float(out) if out.ndim == 0 else out


def omega_mode_b(c: ModeBCoefficients, k):
    """Mobile-dust branch, omega = omega_pd k^2 / sqrt(k^4 + k_Di^2 k^2 + K_q^4)."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = c.k_Di / k
        b = c.K_q / k
        out = c.omega_pd / np.sqrt(1.0 + a * a + (b * b) ** 2)
    out = np.where(k > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def omega_full(mode, coeffs, k):
    return omega_mode_a(coeffs, k) if Mode.parse(mode) is Mode.A else omega_mode_b(coeffs, k)


class Limit(str, enum.Enum):
    A_QUANTUM = "ion_quantum"
    B_LONG = "long_wavelength"
    B_QUANTUM = "dust_quantum"
    B_ACOUSTIC = "dust_acoustic"

    @property
    def mode(self) -> Mode:
        return Mode.A if self is Limit.A_QUANTUM else Mode.B

    @property
    def column(self) -> str:
        return f"omega_{self.value}"


_LIMIT_PARAMS = {
    Limit.A_QUANTUM: ("Z_i", "density_ratio", "hbar", "m_e", "m_i"),
    Limit.B_LONG: ("omega_pd", "k_Di", "K_q"),
    Limit.B_QUANTUM: ("Z_d", "density_ratio", "hbar", "m_e", "m_d"),
    Limit.B_ACOUSTIC: ("C_D",),
}


def limits_for(mode) -> list[Limit]:
    mode = Mode.parse(mode)
    return [lim for lim in Limit if lim.mode is mode]


def omega_limit(limit: Limit, params: Mapping[str, float], k):
    """Closed-form asymptotic frequency.

    ``params`` must supply the symbols of the chosen limit:

    ============  ==========================================
    A_QUANTUM     Z_i, density_ratio (n_i0/n_e0), hbar, m_e, m_i
    B_LONG        omega_pd, k_Di, K_q
    B_QUANTUM     Z_d, density_ratio (n_d0/n_e0), hbar, m_e, m_d
    B_ACOUSTIC    C_D
    ============  ==========================================
    """
    limit = Limit(limit)
    missing = [name for name in _LIMIT_PARAMS[limit] if params.get(name) is None]
    if missing:
        raise MissingParameter(f"{limit.name} needs {', '.join(missing)}")
    p = params
    k = np.asarray(k, dtype=float)
    if limit is Limit.A_QUANTUM:
        out = 0.5 * p["Z_i"] * math.sqrt(p["density_ratio"]) * p["hbar"] * k**2 / math.sqrt(p["m_e"] * p["m_i"])
    elif limit is Limit.B_QUANTUM:
        out = 0.5 * p["Z_d"] * math.sqrt(p["density_ratio"]) * p["hbar"] * k**2 / math.sqrt(p["m_e"] * p["m_d"])
    elif limit is Limit.B_LONG:
        with np.errstate(divide="ignore"):
            b = p["K_q"] ** 2 / k
            out = p["omega_pd"] / np.sqrt((p["k_Di"] / k) ** 2 + (b / k) ** 2)
        out = np.where(k > 0, out, 0.0)
    else:
        out = p["C_D"] * k
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def limit_params(
    limit: Limit,
    comp: PlasmaComposition,
    scales: DerivedScales | None = None,
    consts: PhysicalConstants = CGS,
) -> dict[str, float | None]:
    """Build the parameter mapping :func:`omega_limit` needs from a composition."""
    limit = Limit(limit)
    if scales is None:
        scales = derived_scales(comp, consts)
    if limit is Limit.A_QUANTUM:
        return {"Z_i": comp.Z_i, "density_ratio": comp.n_i0 / comp.n_e0,
                "hbar": consts.hbar, "m_e": consts.m_e, "m_i": comp.m_i}
    if limit is Limit.B_QUANTUM:
        return {"Z_d": comp.Z_d, "density_ratio": comp.n_d0 / comp.n_e0,
                "hbar": consts.hbar, "m_e": consts.m_e, "m_d": comp.m_d}
    if limit is Limit.B_LONG:
        return {"omega_pd": scales.omega_pd, "k_Di": scales.k_Di, "K_q": scales.K_q}
    return {"C_D": scales.C_D}


# --- regime classification -------------------------------------------------


@dataclass(frozen=True)
class RegimeCheck:
    key: str
    label: str
    ratio: float
    threshold: float = REGIME_THRESHOLD

    @property
    def satisfied(self) -> bool:
        return self.ratio >= self.threshold


@dataclass(frozen=True)
class RegimeReport:
    mode: Mode
    k: float
    omega: float
    checks: tuple[RegimeCheck, ...]

    def __getitem__(self, key: str) -> RegimeCheck:
        for check in self.checks:
            if check.key == key or check.label == key:
                return check
        raise KeyError(key)

    def __iter__(self):
        return iter(self.checks)

    def flags(self) -> dict[str, bool]:
        return {c.key: c.satisfied for c in self.checks}

    def as_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "k": self.k,
            "omega": self.omega,
            "checks": [
                {"key": c.key, "label": c.label, "ratio": c.ratio,
                 "threshold": c.threshold, "satisfied": c.satisfied}
                for c in self.checks
            ],
        }


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf if num > 0 else 0.0
    return num / den


def classify_regime(
    mode,
    scales: DerivedScales,
    comp: PlasmaComposition,
    k: float,
    omega: float,
    consts: PhysicalConstants = CGS,
) -> RegimeReport:
    """Margins of every validity inequality behind a mode and its limits.

    Each ratio is (large side)/(small side) of a "much greater than"
    condition; a check counts as satisfied at a factor of
    ``REGIME_THRESHOLD``. The raw ratios are kept so callers can apply
    stricter cuts.
    """
    mode = Mode.parse(mode)
    if not k > 0:
        raise ValueError("classify_regime needs k > 0")
    hbar, m_e = consts.hbar, consts.m_e
    k2 = k * k
    checks = [
        # Bohm term dominates electron pressure; electron inertia negligible
        RegimeCheck("electron_dispersive", "hbar^2 k^2 / (T_eF m_e) >> 1",
                    hbar**2 * k2 / (scales.T_eF * m_e)),
        RegimeCheck("electron_quasistatic", "hbar^2 k^4 / (4 m_e^2 omega^2) >> 1",
                    _ratio(hbar**2 * k2 * k2, 4.0 * m_e**2 * omega**2)),
    ]
    K_q = scales.K_q
    if mode is Mode.A:
        mass_ratio = m_e / comp.m_i
        density_ratio = comp.n_i0 / comp.n_e0
        checks += [
            RegimeCheck("quantum_wavenumber", "K_q >> k", K_q / k),
            RegimeCheck("ion_density_ratio", "n_i0/n_e0 >> m_e/m_i", density_ratio / mass_ratio),
            RegimeCheck("ion_density_ratio_z2", "Z_i^2 n_i0/n_e0 >> m_e/m_i",
                        comp.Z_i**2 * density_ratio / mass_ratio),
        ]
    else:
        k_Di = scales.k_Di
        if k_Di is None:
            raise MissingParameter("mobile-dust regime checks need T_i > 0")
        checks += [
            RegimeCheck("ion_inertialess", "k^2 V_Ti^2 / omega^2 >> 1",
                        _ratio(k2 * scales.V_Ti**2, omega**2)),
            RegimeCheck("ion_local", "m_i T_i / (hbar^2 k^2) >> 1",
                        comp.m_i * comp.T_i / (hbar**2 * k2)),
            RegimeCheck("quantum_wavenumber", "K_q >> k", K_q / k),
            RegimeCheck("long_wavelength", "k_Di >> k", k_Di / k),
            RegimeCheck("dust_quantum", "K_q^2 >> k k_Di", K_q**2 / (k * k_Di)),
            RegimeCheck("dust_acoustic", "k k_Di >> K_q^2", k * k_Di / K_q**2),
        ]
    return RegimeReport(mode=mode, k=float(k), omega=float(omega), checks=tuple(checks))


def coefficient_regime_flags(mode, coeffs, k: float) -> dict[str, bool]:
    """The subset of regime checks computable from coefficients alone."""
    mode = Mode.parse(mode)
    flags = {"quantum_wavenumber": coeffs.K_q / k >= REGIME_THRESHOLD}
    if mode is Mode.B:
        kd = coeffs.k_Di
        flags["long_wavelength"] = kd / k >= REGIME_THRESHOLD
        flags["dust_quantum"] = coeffs.K_q**2 / (k * kd) >= REGIME_THRESHOLD if kd > 0 else True
        flags["dust_acoustic"] = k * kd / coeffs.K_q**2 >= REGIME_THRESHOLD
    return flags


# --- curve sampling ---------------------------------------------------------


@dataclass
class DispersionCurve:
    mode: Mode
    k: np.ndarray
    omega: np.ndarray
    flags: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.k)

    def samples(self):
        for i in range(len(self.k)):
            yield float(self.k[i]), float(self.omega[i]), {name: bool(v[i]) for name, v in self.flags.items()}


def k_grid(k_min: float, k_max: float, n_points: int, spacing: str = "log") -> np.ndarray:
    if int(n_points) != n_points or n_points < 2:
        raise BadGrid(f"need at least 2 points, got {n_points}")
    if not (math.isfinite(k_min) and math.isfinite(k_max)) or not k_min < k_max:
        raise BadGrid(f"need k_min < k_max, got [{k_min}, {k_max}]")
    if spacing == "log":
        if not k_min > 0:
            raise BadGrid("log spacing needs k_min > 0")
        k = np.geomspace(k_min, k_max, int(n_points))
    elif spacing == "linear":
        if k_min < 0:
            raise BadGrid("k_min must be >= 0")
        k = np.linspace(k_min, k_max, int(n_points))
    else:
        raise BadGrid(f"unknown spacing {spacing!r}")
    # geomspace endpoints can round; keep them exact
    k[0], k[-1] = k_min, k_max
    if np.any(np.diff(k) <= 0):
        raise BadGrid("grid is not strictly increasing at this resolution")
    return k


def sample_curve(
    mode,
    coeffs,
    k_min: float,
    k_max: float,
    n_points: int,
    spacing: str = "log",
    comp: PlasmaComposition | None = None,
    consts: PhysicalConstants = CGS,
) -> DispersionCurve:
    """Evaluate the full relation of ``mode`` on a k grid.

    With a composition the per-sample flags come from
    :func:`classify_regime`; otherwise only coefficient-level flags are
    attached. Flags at k = 0 are all False.
    """
    mode = Mode.parse(mode)
    k = k_grid(k_min, k_max, n_points, spacing)
    omega = np.asarray(omega_full(mode, coeffs, k), dtype=float)
    scales = derived_scales(comp, consts) if comp is not None else None
    flags: dict[str, list[bool]] = {}
    for i, (ki, wi) in enumerate(zip(k, omega)):
        if ki <= 0:
            row = None
        elif comp is not None:
            row = classify_regime(mode, scales, comp, ki, wi, consts).flags()
        else:
            row = coefficient_regime_flags(mode, coeffs, ki)
        if row is None:
            continue
        for name, value in row.items():
            flags.setdefault(name, [False] * len(k))[i] = value
    return DispersionCurve(mode=mode, k=k, omega=omega,
                           flags={name: np.array(v, dtype=bool) for name, v in flags.items()})
