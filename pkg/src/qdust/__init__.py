"""Low-frequency electrostatic modes of quantum dusty plasmas.

Modules: :mod:`~qdust.params` (constants, compositions, derived scales),
:mod:`~qdust.dispersion` (both dispersion branches, limits, regimes),
:mod:`~qdust.response` (perturbation amplitudes, Poisson check),
:mod:`~qdust.simulator` (spectral time integration),
:mod:`~qdust.inversion` (fitting measured spectra) and :mod:`~qdust.cli`.
"""

__version__ = "0.1.0"

from .dispersion import (  # noqa: E402
    Limit,
    Mode,
    ModeACoefficients,
    ModeBCoefficients,
    classify_regime,
    omega_limit,
    omega_mode_a,
    omega_mode_b,
    sample_curve,
)
from .inversion import SpectrumSample, diagnostics_from_fit, fit_dispersion  # noqa: E402
from .params import (  # noqa: E402
    CGS,
    UNIT,
    DustPolarity,
    PhysicalConstants,
    PlasmaComposition,
    derived_scales,
    fermi_temperature,
    validate_composition,
)
