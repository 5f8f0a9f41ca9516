import csv
import math

import numpy as np
import pytest

from qdust.dispersion import Mode, ModeACoefficients, ModeBCoefficients, omega_mode_a, omega_mode_b
from qdust.errors import BadGrid, ModeOutOfRange, NoSignal, StepTooLarge, TooShort
from qdust.simulator import (
    FieldState,
    build_operator,
    fit_sinusoid,
    init_plane_wave,
    measure_frequency,
    modal_energy,
    run,
)

TWO_PI = 2 * math.pi


def oscillator(omega=1.0):
    """Operator whose m = 1 mode has Omega = omega (mode A with only the thermal term)."""
    return build_operator(Mode.A, ModeACoefficients(V_Ti=omega, q_i=0.0, omega_pi=0.0, K_q=1.0), TWO_PI, 4)


def test_operator_examples():
    op = build_operator(Mode.B, ModeBCoefficients(1, 1, 1), TWO_PI, 8)
    assert op.omega2[0] == 0.0
    assert op.omega2[op.index_of(1)] == pytest.approx(1 / 3, rel=1e-15)
    assert op.omega2[op.index_of(-1)] == op.omega2[op.index_of(1)]


@pytest.mark.parametrize("mode, coeffs, fn", [
    (Mode.B, ModeBCoefficients(2.3, 0.4, 1.7), omega_mode_b),
    (Mode.A, ModeACoefficients(0.3, 0.02, 5.0, 2.2), omega_mode_a),
])
def test_operator_matches_dispersion_module(mode, coeffs, fn):
    op = build_operator(mode, coeffs, 3.7, 64)
    expected = fn(coeffs, np.abs(op.k)) ** 2
    np.testing.assert_allclose(op.omega2[1:], expected[1:], rtol=1e-14, atol=0)
    assert np.all(op.omega2 >= 0)


def test_operator_bad_grid():
    with pytest.raises(BadGrid):
        build_operator(Mode.B, ModeBCoefficients(1, 1, 1), 0.0, 8)
    with pytest.raises(BadGrid):
        build_operator(Mode.B, ModeBCoefficients(1, 1, 1), 1.0, 1)


def test_plane_wave_init():
    op = oscillator()
    st = init_plane_wave(op, [1], [1.0])
    nz = np.flatnonzero(st.phi_hat)
    assert sorted(op.mode_numbers[nz]) == [-1, 1]
    np.testing.assert_array_equal(st.dphi_hat, 0)
    x = np.arange(op.n_modes) * op.L / op.n_modes
    np.testing.assert_allclose(st.real_space().real, np.cos(TWO_PI / op.L * x), atol=1e-15)
    empty = init_plane_wave(op, [], [])
    assert not np.any(empty.phi_hat)
    with pytest.raises(ModeOutOfRange):
        init_plane_wave(op, [2], [1.0])


def test_free_mode_is_constant():
    op = build_operator(Mode.B, ModeBCoefficients(1, 1, 1), TWO_PI, 8)
    st = init_plane_wave(op, [0, 1], [0.7, 1.0])
    traj = run(op, st, 0.01, 2000, stride=100)
    np.testing.assert_array_equal(traj.phi[:, 0], 0.7)


def test_oscillator_returns_after_one_period():
    op = oscillator(1.0)
    n = 6283
    dt = TWO_PI / n  # ~1e-3 and lands exactly on t = 2 pi
    st = init_plane_wave(op, [1], [1.0])
    traj = run(op, st, dt, n, stride=n)
    assert traj.t[-1] == pytest.approx(TWO_PI, rel=1e-14)
    np.testing.assert_allclose(traj.phi[-1], st.phi_hat, atol=1e-10, rtol=0)
    np.testing.assert_allclose(traj.dphi[-1], st.dphi_hat, atol=1e-10, rtol=0)


def _phase_error(dt_fraction, periods=1):
    """|arg(phi - i phi'/Omega) - Omega t| after whole periods of the m = 1 mode."""
    op = oscillator(1.0)
    st = init_plane_wave(op, [1], [1.0])
    n = int(round(periods / dt_fraction))
    traj = run(op, st, TWO_PI * dt_fraction, n, stride=n)
    j = op.index_of(1)
    z = traj.phi[-1, j] - 1j * traj.dphi[-1, j]
    return abs(np.angle(z * np.exp(-1j * traj.t[-1])))


def test_richardson_order_four():
    e = [_phase_error(f) for f in (1 / 50, 1 / 100, 1 / 200)]
    orders = [math.log2(e[0] / e[1]), math.log2(e[1] / e[2])]
    for p in orders:
        assert abs(p - 4) <= 0.3, orders


def test_step_guard():
    op = oscillator(1.0)
    st = init_plane_wave(op, [1], [1.0])
    limit = 0.5 / math.sqrt(op.omega2.max())
    run(op, st, limit, 1)
    with pytest.raises(StepTooLarge):
        run(op, st, 1.01 * limit, 1)
    with pytest.raises(StepTooLarge):
        run(op, st, 0.0, 1)


def test_modal_energy():
    op = build_operator(Mode.B, ModeBCoefficients(1, 1, 1), TWO_PI, 8)
    assert not np.any(modal_energy(op, FieldState.empty(TWO_PI, 8)))
    st = init_plane_wave(op, [1], [0.6])
    e = modal_energy(op, st)
    assert e[1] == pytest.approx(op.omega2[1] * 0.3**2, rel=1e-15)


def test_energy_drift_over_hundred_periods():
    op = build_operator(Mode.B, ModeBCoefficients(1, 1, 1), TWO_PI, 8)
    st = init_plane_wave(op, [1, 3], [1.0, 0.5])
    T = TWO_PI / math.sqrt(op.omega2[op.index_of(1)])
    dt = TWO_PI / math.sqrt(op.omega2.max()) / 1000
    traj = run(op, st, dt, int(100 * T / dt), stride=10**9)
    e0, e1 = modal_energy(op, traj.state(0)), modal_energy(op, traj.state(len(traj) - 1))
    live = e0 > 0
    assert np.max(np.abs(e1[live] - e0[live]) / e0[live]) <= 1e-9


def test_reality_and_superposition():
    coeffs = ModeBCoefficients(1.5, 0.8, 1.2)
    op = build_operator(Mode.B, coeffs, TWO_PI, 16)
    dt = 0.4 / math.sqrt(op.omega2.max())
    both = run(op, init_plane_wave(op, [1, 3], [1.0, 0.3 + 0.2j]), dt, 3000, stride=100)
    one = run(op, init_plane_wave(op, [1], [1.0]), dt, 3000, stride=100)
    three = run(op, init_plane_wave(op, [3], [0.3 + 0.2j]), dt, 3000, stride=100)
    np.testing.assert_allclose(both.phi, one.phi + three.phi, atol=1e-12, rtol=0)
    for state in both.states():
        field = state.real_space()
        assert np.max(np.abs(field.imag)) <= 1e-13 * np.max(np.abs(field))


def test_measure_known_sinusoid():
    t = np.arange(10001) * 1e-3
    meas = measure_frequency(np.cos(TWO_PI * t), 1e-3)
    assert meas.omega[0] == pytest.approx(TWO_PI, rel=1e-8)
    w, res = fit_sinusoid(2.0 * np.sin(3.3 * t + 0.4), 1e-3)
    assert w == pytest.approx(3.3, rel=1e-8) and res < 1e-10


def test_measure_mode_b_run():
    op = build_operator(Mode.B, ModeBCoefficients(1, 1, 1), TWO_PI, 4)
    T = TWO_PI / math.sqrt(1 / 3)
    traj = run(op, init_plane_wave(op, [1], [1.0]), T / 1000, 20000)
    meas = measure_frequency(traj)
    assert list(meas.modes) == [1]
    assert meas.for_mode(1) == pytest.approx(0.577350, abs=1e-6)
    assert meas.for_mode(1) == pytest.approx(math.sqrt(1 / 3), rel=1e-6)


def test_measure_two_modes():
    coeffs = ModeBCoefficients(1, 1, 1)
    op = build_operator(Mode.B, coeffs, TWO_PI, 8)
    dt = TWO_PI / math.sqrt(op.omega2.max()) / 500
    n = int(10 * TWO_PI / math.sqrt(op.omega2[1]) / dt)
    meas = measure_frequency(run(op, init_plane_wave(op, [1, 3], [1.0, 1.0]), dt, n))
    assert list(meas.modes) == [1, 3]
    for m in (1, 3):
        assert meas.for_mode(m) == pytest.approx(omega_mode_b(coeffs, float(m)), rel=1e-7)


def test_measure_failures():
    op = oscillator()
    zero = run(op, FieldState.empty(TWO_PI, 4), 0.01, 100)
    with pytest.raises(NoSignal):
        measure_frequency(zero)
    short = run(op, init_plane_wave(op, [1], [1.0]), 0.01, int(2 * TWO_PI / 0.01))
    with pytest.raises(TooShort):
        measure_frequency(short)


def test_snapshot_csv(tmp_path):
    op = oscillator()
    traj = run(op, init_plane_wave(op, [1], [1.0]), 0.01, 10, stride=5)
    path = tmp_path / "snap.csv"
    traj.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "mode_index", "re_amp", "im_amp"]
    assert len(rows) == 1 + 3 * op.n_modes
    assert float(rows[1 + 1][2]) == 0.5
