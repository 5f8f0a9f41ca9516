"""Pseudo-spectral time integration of the linear evolution equations.

On a periodic 1-D domain of length L the potential is expanded as
phi(x, t) = sum_m phi_m(t) exp(i k_m x), k_m = 2 pi m / L. The fourth-order
operators of both modes are diagonal in this basis, so each Fourier
amplitude obeys phi_m'' = -Omega^2(k_m) phi_m. The amplitudes are advanced
with classical RK4 (not the exact rotation) so that comparing the measured
frequencies with the analytic relations is a genuine check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numba
import numpy as np
from scipy.optimize import least_squares

from .dispersion import Mode, ModeACoefficients, ModeBCoefficients
from .errors import BadGrid, ModeOutOfRange, NoSignal, StepTooLarge, TooShort

STABILITY_LIMIT = 0.5
NO_SIGNAL_RTOL = 1e-14
MIN_PERIODS = 5.0


@dataclass(frozen=True)
class SpectralOperator:
    mode: Mode
    L: float
    mode_numbers: np.ndarray  # signed, FFT ordering
    k: np.ndarray
    omega2: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.mode_numbers)

    def index_of(self, m: int) -> int:
        return int(m) % self.n_modes


def _symbol_omega2(mode: Mode, coeffs, k: np.ndarray) -> np.ndarray:
    """Solve the operator symbol for d^2/dt^2 -> -Omega^2.

    Mode A: (k^4 + K^4)(-Omega^2 + V^2 k^2 + q^2 k^4) + w_pi^2 k^4 = 0
    Mode B: ((k^2 + k_D^2) k^2 + K^4)(-Omega^2) + w_pd^2 k^4 = 0
    """
    k2 = k * k
    k4 = k2 * k2
    if mode is Mode.A:
        c: ModeACoefficients = coeffs
        weight = k4 + c.K_q**4
        return (weight * (c.V_Ti**2 * k2 + c.q_i**2 * k4) + c.omega_pi**2 * k4) / weight
    c: ModeBCoefficients = coeffs
    return c.omega_pd**2 * k4 / ((k2 + c.k_Di**2) * k2 + c.K_q**4)


def build_operator(mode, coeffs, L: float, n_modes: int) -> SpectralOperator:
    mode = Mode.parse(mode)
    if not L > 0:
        raise BadGrid(f"domain length must be > 0, got {L!r}")
    if int(n_modes) != n_modes or n_modes < 2:
        raise BadGrid(f"need at least 2 grid modes, got {n_modes!r}")
    n_modes = int(n_modes)
    m = np.rint(np.fft.fftfreq(n_modes) * n_modes).astype(np.int64)
    k = 2.0 * np.pi * m / L
    omega2 = _symbol_omega2(mode, coeffs, np.abs(k))
    omega2[0] = 0.0
    return SpectralOperator(mode=mode, L=float(L), mode_numbers=m, k=k, omega2=omega2)


@dataclass(frozen=True)
class FieldState:
    L: float
    phi_hat: np.ndarray
    dphi_hat: np.ndarray
    t: float = 0.0

    @classmethod
    def empty(cls, L: float, n_modes: int) -> "FieldState":
        z = np.zeros(int(n_modes), dtype=complex)
        return cls(L=float(L), phi_hat=z, dphi_hat=z.copy())

    @property
    def n_modes(self) -> int:
        return len(self.phi_hat)

    def real_space(self) -> np.ndarray:
        return np.fft.ifft(self.phi_hat) * self.n_modes


def init_plane_wave(template, mode_numbers, amplitudes) -> FieldState:
    """Standing-wave start: phi(x, 0) = sum_j Re(a_j exp(i k_j x)), zero velocity.

    ``template`` is a FieldState or a SpectralOperator supplying L and the
    grid size. Retained modes are |m| < n_modes / 2.
    """
    L, n = template.L, template.n_modes
    if len(mode_numbers) != len(amplitudes):
        raise ValueError("mode_numbers and amplitudes differ in length")
    phi = np.zeros(n, dtype=complex)
    for m, a in zip(mode_numbers, amplitudes):
        m = int(m)
        if 2 * abs(m) >= n:
            raise ModeOutOfRange(f"mode {m} outside retained band |m| < {n / 2:g}")
        if m == 0:
            phi[0] += complex(a).real
        else:
            phi[m % n] += 0.5 * complex(a)
            phi[-m % n] += 0.5 * complex(a).conjugate()
    return FieldState(L=float(L), phi_hat=phi, dphi_hat=np.zeros(n, dtype=complex))


@numba.njit(cache=True)
def _rk4_kernel(omega2, phi, dphi, dt, n_steps, stride, out_phi, out_dphi):
    n = phi.shape[0]
    snap = 0
    out_phi[0, :] = phi
    out_dphi[0, :] = dphi
    for step in range(1, n_steps + 1):
        for j in range(n):
            w2 = omega2[j]
            y = phi[j]
            v = dphi[j]
            k1y = v
            k1v = -w2 * y
            k2y = v + 0.5 * dt * k1v
            k2v = -w2 * (y + 0.5 * dt * k1y)
            k3y = v + 0.5 * dt * k2v
            k3v = -w2 * (y + 0.5 * dt * k2y)
            k4y = v + dt * k3v
            k4v = -w2 * (y + dt * k3y)
            phi[j] = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            dphi[j] = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if step % stride == 0:
            snap += 1
            out_phi[snap, :] = phi
            out_dphi[snap, :] = dphi


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of a run: ``phi[s, j]`` is the amplitude of grid mode j at ``t[s]``."""

    operator: SpectralOperator
    t: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray

    @property
    def sample_dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def __len__(self) -> int:
        return len(self.t)

    def state(self, s: int) -> FieldState:
        return FieldState(L=self.operator.L, phi_hat=self.phi[s].copy(), dphi_hat=self.dphi[s].copy(),
                          t=float(self.t[s]))

    def states(self):
        for s in range(len(self.t)):
            yield self.state(s)

    def to_csv(self, path) -> None:
        """Write rows ``t, mode_index, re_amp, im_amp`` (one per snapshot and grid mode)."""
        m = self.operator.mode_numbers
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "mode_index", "re_amp", "im_amp"])
            for s, t in enumerate(self.t):
                ts = format(t, ".17g")
                for j in range(len(m)):
                    z = self.phi[s, j]
                    writer.writerow([ts, int(m[j]), format(z.real, ".17g"), format(z.imag, ".17g")])


def max_stable_dt(operator: SpectralOperator) -> float:
    wmax = float(np.sqrt(operator.omega2.max()))
    return np.inf if wmax == 0 else STABILITY_LIMIT / wmax


def run(operator: SpectralOperator, initial: FieldState, dt: float, n_steps: int, stride: int = 1) -> Trajectory:
    """Advance every Fourier amplitude with RK4.

    Raises StepTooLarge unless dt * max_m Omega(k_m) <= 0.5. The k = 0
    amplitude is held frozen. Snapshots are taken every ``stride`` steps,
    including the initial state.
    """
    if initial.n_modes != operator.n_modes or initial.L != operator.L:
        raise BadGrid("initial state does not match the operator grid")
    if not dt > 0:
        raise StepTooLarge(f"dt must be > 0, got {dt!r}")
    limit = max_stable_dt(operator)
    if dt > limit:
        raise StepTooLarge(f"dt={dt:.6g} exceeds stability guard {limit:.6g} (dt * max Omega <= {STABILITY_LIMIT})")
    n_steps, stride = int(n_steps), int(stride)
    if n_steps < 0 or stride < 1:
        raise ValueError("n_steps must be >= 0 and stride >= 1")
    phi = initial.phi_hat.astype(complex).copy()
    dphi = initial.dphi_hat.astype(complex).copy()
    dphi[0] = 0.0
    n_snap = n_steps // stride + 1
    out_phi = np.empty((n_snap, operator.n_modes), dtype=complex)
    out_dphi = np.empty_like(out_phi)
    _rk4_kernel(operator.omega2, phi, dphi, float(dt), n_steps, stride, out_phi, out_dphi)
    t = initial.t + dt * stride * np.arange(n_snap)
    return Trajectory(operator=operator, t=t, phi=out_phi, dphi=out_dphi)


def modal_energy(operator: SpectralOperator, state: FieldState) -> np.ndarray:
    return np.abs(state.dphi_hat) ** 2 + operator.omega2 * np.abs(state.phi_hat) ** 2


# --- frequency measurement -------------------------------------------------


@dataclass(frozen=True)
class FrequencyMeasurement:
    modes: np.ndarray
    omega: np.ndarray
    residual: np.ndarray
    method: str = "periodogram-peak+least-squares"

    def for_mode(self, m: int) -> float:
        idx = np.flatnonzero(self.modes == m)
        if idx.size == 0:
            raise KeyError(m)
        return float(self.omega[idx[0]])


def _peak_estimate(x: np.ndarray, dt: float) -> float:
    """Angular frequency of the strongest periodogram peak, with parabolic refinement."""
    n = x.shape[0]
    nfft = 1 << int(np.ceil(np.log2(4 * n)))
    window = np.hanning(n)[:, None]
    power = (np.abs(np.fft.rfft((x - x.mean(axis=0)) * window, n=nfft, axis=0)) ** 2).sum(axis=1)
    power[0] = 0.0
    b = int(np.argmax(power))
    if 0 < b < len(power) - 1:
        a, c = np.log(power[b - 1] + 1e-300), np.log(power[b + 1] + 1e-300)
        mid = np.log(power[b] + 1e-300)
        denom = a - 2 * mid + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return 2.0 * np.pi * (b + shift) / (nfft * dt)


def fit_sinusoid(signal, dt: float) -> tuple[float, float]:
    """Least-squares angular frequency of a (possibly complex) single-tone signal.

    Model: x(t) = A cos(w t) + B sin(w t) with complex A, B (real and
    imaginary parts fitted jointly, sharing w). Returns (w, rms residual
    relative to the signal amplitude).
    """
    z = np.asarray(signal)
    n = z.shape[0]
    x = np.column_stack([z.real, z.imag]) if np.iscomplexobj(z) else z.astype(float)[:, None]
    amp = np.abs(x).max()
    if amp == 0:
        raise NoSignal("signal is identically zero")
    if n < 8:
        raise TooShort(f"need at least 8 samples, got {n}")
    w0 = _peak_estimate(x, dt)
    if not w0 > 0:
        raise NoSignal("no oscillating component found")
    span = dt * (n - 1)
    if span * w0 / (2 * np.pi) < MIN_PERIODS:
        raise TooShort(f"series spans {span * w0 / (2 * np.pi):.2f} periods, need {MIN_PERIODS:g}")

    # time in units of the estimated period keeps the Jacobian well scaled
    tau = np.arange(n) * (dt * w0)
    xs = x / amp

    def basis(s):
        return np.cos(s * tau), np.sin(s * tau)

    c, s_ = basis(1.0)
    coef, *_ = np.linalg.lstsq(np.column_stack([c, s_]), xs, rcond=None)
    p0 = np.concatenate([[1.0], coef.ravel()])
    ncol = xs.shape[1]

    def resid(p):
        c, s_ = basis(p[0])
        ab = p[1:].reshape(2, ncol)
        return (np.outer(c, ab[0]) + np.outer(s_, ab[1]) - xs).ravel()

    def jac(p):
        c, s_ = basis(p[0])
        ab = p[1:].reshape(2, ncol)
        j = np.zeros((n, ncol, 1 + 2 * ncol))
        j[:, :, 0] = np.outer(-tau * s_, ab[0]) + np.outer(tau * c, ab[1])
        for col in range(ncol):
            j[:, col, 1 + col] = c
            j[:, col, 1 + ncol + col] = s_
        return j.reshape(n * ncol, -1)

    sol = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return float(sol.x[0] * w0), rms


def measure_frequency(series, dt: float | None = None) -> FrequencyMeasurement:
    """Per-mode oscillation frequencies of a run (or of raw sample columns).

    For a :class:`Trajectory` every positive mode number carrying signal
    (peak amplitude above 1e-14 of the initial field maximum) is fitted;
    ``dt`` defaults to the snapshot spacing. A plain array is treated as
    columns of samples (1-D means a single column).
    """
    if isinstance(series, Trajectory):
        data = series.phi
        dt = series.sample_dt if dt is None else dt
        m = series.operator.mode_numbers
        columns = [j for j in range(len(m)) if m[j] > 0]
        labels = m
        reference = np.abs(data[0]).max()
    else:
        data = np.asarray(series)
        if data.ndim == 1:
            data = data[:, None]
        if dt is None:
            raise ValueError("dt is required for raw sample arrays")
        columns = list(range(data.shape[1]))
        labels = np.arange(data.shape[1])
        reference = np.abs(data[0]).max()
    if not dt or dt <= 0:
        raise TooShort("series has fewer than two samples")
    if reference == 0:
        reference = np.abs(data).max()
    modes, omegas, residuals = [], [], []
    for j in columns:
        col = data[:, j]
        if reference == 0 or np.abs(col).max() <= NO_SIGNAL_RTOL * reference:
            continue
        w, r = fit_sinusoid(col, dt)
        modes.append(int(labels[j]))
        omegas.append(abs(w))
        residuals.append(r)
    if not modes:
        raise NoSignal("no mode carries signal above 1e-14 of the initial amplitude")
    return FrequencyMeasurement(modes=np.array(modes), omega=np.array(omegas), residual=np.array(residuals))

