"""Exception hierarchy.

Every error carries a short upper-case ``code`` so the command line can
print a single greppable line, and an ``exit_code`` (2 for bad input,
3 for numerical failure).
"""

from __future__ import annotations


class QDustError(Exception):
    code = "ERROR"
    exit_code = 2


class InputError(QDustError, ValueError):
    code = "INPUT_ERROR"
    exit_code = 2


class NumericalError(QDustError, ArithmeticError):
    code = "NUMERICAL_FAILURE"
    exit_code = 3


class ConfigError(InputError):
    code = "CONFIG_ERROR"


class NonPositiveDensity(InputError):
    code = "NON_POSITIVE_DENSITY"


class NonPositiveMass(InputError):
    code = "NON_POSITIVE_MASS"


class NegativeTemperature(InputError):
    code = "NEGATIVE_TEMPERATURE"


class BadChargeState(InputError):
    code = "BAD_CHARGE_STATE"


class QuasineutralityViolated(InputError):
    code = "QUASINEUTRALITY_VIOLATED"

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"relative quasineutrality residual {residual:.3e} exceeds {tolerance:.1e}"
            " (|Z_i n_i0 - n_e0 - eps Z_d n_d0| / (Z_i n_i0))"
        )


class BadGrid(InputError):
    code = "BAD_GRID"


class MissingParameter(InputError):
    code = "MISSING_PARAMETER"


class IonResonance(InputError):
    code = "ION_RESONANCE"


class ZeroFrequency(InputError):
    code = "ZERO_FREQUENCY"


class ModeOutOfRange(InputError):
    code = "MODE_OUT_OF_RANGE"


class StepTooLarge(InputError):
    code = "STEP_TOO_LARGE"


class NoSignal(NumericalError):
    code = "NO_SIGNAL"


class TooShort(NumericalError):
    code = "TOO_SHORT"


class Underdetermined(InputError):
    code = "UNDERDETERMINED"


class DegenerateData(InputError):
    code = "DEGENERATE_DATA"


class MalformedSamples(InputError):
    code = "MALFORMED_SAMPLES"


class NoConvergence(NumericalError):
    code = "NO_CONVERGENCE"
