"""Unit conversion at the input boundary. Internally everything is CGS."""

from __future__ import annotations

import re

from .errors import ConfigError
from .params import ATOMIC_MASS_UNIT, BOLTZMANN, ELECTRONVOLT, PROTON_MASS

# multiplicative factor taking a value in the given unit to CGS
FACTORS = {
    "density": {"cm^-3": 1.0, "m^-3": 1e-6},
    "mass": {"g": 1.0, "kg": 1e3, "amu": ATOMIC_MASS_UNIT, "m_p": PROTON_MASS},
    "energy": {"erg": 1.0, "J": 1e7, "eV": ELECTRONVOLT, "K": BOLTZMANN},
    "wavenumber": {"cm^-1": 1.0, "m^-1": 1e-2},
    "length": {"cm": 1.0, "m": 1e2},
    "time": {"s": 1.0},
    "frequency": {"rad/s": 1.0},
}
DEFAULT_UNIT = {
    "density": "cm^-3",
    "mass": "g",
    "energy": "erg",
    "wavenumber": "cm^-1",
    "length": "cm",
    "time": "s",
    "frequency": "rad/s",
}

_QUANTITY = re.compile(r"^\s*([-+0-9.eEinfINFnaN]+)\s*(\S*)\s*$")


def to_cgs(value: float, unit: str, kind: str) -> float:
    try:
        return value * FACTORS[kind][unit]
    except KeyError:
        allowed = ", ".join(FACTORS.get(kind, {}))
        raise ConfigError(f"unit {unit!r} not accepted for {kind} (allowed: {allowed})") from None


def from_cgs(value: float, unit: str, kind: str) -> float:
    try:
        return value / FACTORS[kind][unit]
    except KeyError:
        raise ConfigError(f"unit {unit!r} not accepted for {kind}") from None


def split_quantity(text: str) -> tuple[float, str]:
    """``"1e16 m^-3"`` -> ``(1e16, "m^-3")``; a bare number gets an empty unit."""
    match = _QUANTITY.match(text)
    if not match:
        raise ConfigError(f"cannot parse quantity {text!r}")
    try:
        value = float(match.group(1))
    except ValueError:
        raise ConfigError(f"cannot parse number in {text!r}") from None
    return value, match.group(2)


def parse_quantity(text: str, kind: str, relative: dict[str, float] | None = None) -> float:
    """Parse ``"<number> [unit]"`` into CGS.

    ``relative`` maps extra unit names (e.g. ``"K_q"``) to CGS scale values,
    so ``"0.01 K_q"`` can be written for wavenumbers.
    """
    value, unit = split_quantity(text)
    if not unit:
        unit = DEFAULT_UNIT[kind]
    if relative and unit in relative:
        scale = relative[unit]
        if scale is None:
            raise ConfigError(f"{unit} is undefined for this plasma")
        return value * scale
    return to_cgs(value, unit, kind)
