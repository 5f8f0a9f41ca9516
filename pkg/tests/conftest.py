import math

import numpy as np
import pytest

from qdust.params import DustPolarity, PlasmaComposition


def log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def random_composition(rng, spread=1e3, cold_ions=False):
    """Quasineutral composition with every free input log-uniform over
    [1/spread, spread] (meant for the unit constant set)."""
    Z_i = int(rng.integers(1, 4))
    Z_d = int(rng.integers(1, 200))
    n_e0 = log_uniform(rng, 1 / spread, spread)
    if rng.random() < 0.5:
        polarity = DustPolarity.NEGATIVE
        n_d0 = log_uniform(rng, 1 / spread, spread)
        n_i0 = (n_e0 + Z_d * n_d0) / Z_i
    else:
        polarity = DustPolarity.POSITIVE
        n_d0 = rng.uniform(0.01, 0.9) * n_e0 / Z_d
        n_i0 = (n_e0 - Z_d * n_d0) / Z_i
    return PlasmaComposition(
        n_e0=n_e0,
        n_i0=n_i0,
        m_i=log_uniform(rng, 1 / spread, spread),
        T_i=0.0 if cold_ions else log_uniform(rng, 1 / spread, spread),
        Z_i=Z_i,
        n_d0=n_d0,
        Z_d=Z_d,
        polarity=polarity,
        m_d=log_uniform(rng, 1 / spread, spread),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def hydrogen_dusty():
    """Hydrogen plasma at n_e0 = 1e16 cm^-3 with negatively charged dust."""
    from qdust.params import PROTON_MASS

    n_e0, n_d0, Z_d = 1e16, 1e10, 100
    return PlasmaComposition(
        n_e0=n_e0,
        n_i0=n_e0 + Z_d * n_d0,
        m_i=PROTON_MASS,
        T_i=1.602176634e-14,  # 0.01 eV
        n_d0=n_d0,
        Z_d=Z_d,
        m_d=1e-15,
    )
