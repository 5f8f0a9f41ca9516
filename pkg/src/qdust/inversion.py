"""Recover dispersion coefficients from measured (k, omega) spectra.

The fit is a Levenberg-Marquardt (damped Gauss-Newton) iteration on the
logarithms of the coefficients, restarted from a log-spaced grid of
initial guesses derived from the data. Only parameter combinations that
the dispersion relations actually constrain are reported as diagnostics.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import Mode, ModeACoefficients, ModeBCoefficients
from .errors import DegenerateData, MalformedSamples, NoConvergence, Underdetermined
from .params import CGS, PhysicalConstants

PARAM_NAMES = {
    Mode.A: ("V_Ti", "q_i", "omega_pi", "K_q"),
    Mode.B: ("omega_pd", "k_Di", "K_q"),
}
DEFAULT_SIGMA_FRACTION = 0.01
MAX_LOG_STEP = 3.0  # at most a factor e^3 per iteration in any coefficient


@dataclass(frozen=True)
class SpectrumSample:
    k: float
    omega: float
    sigma: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValueError(f"sample k must be > 0, got {self.k!r}")
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ValueError(f"sample omega must be >= 0, got {self.omega!r}")
        if self.sigma is not None and not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sample sigma must be > 0, got {self.sigma!r}")


def read_samples(path) -> list[SpectrumSample]:
    """Read samples from a CSV with header ``k,omega[,sigma]`` (CGS).

    Columns are located by name, so the curve written by ``qdust dispersion``
    can be read directly: ``omega`` is preferred, ``omega_full`` accepted,
    and other columns are ignored. Errors name the offending line.
    """
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedSamples(f"{path}: empty file") from None
        omega_col = "omega" if "omega" in header else "omega_full"
        if "k" not in header or omega_col not in header:
            raise MalformedSamples(f"{path}:1: header must contain k,omega[,sigma], got {','.join(header)}")
        ik, iw = header.index("k"), header.index(omega_col)
        isig = header.index("sigma") if "sigma" in header else None
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise MalformedSamples(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                sigma = float(row[isig]) if isig is not None else None
                samples.append(SpectrumSample(float(row[ik]), float(row[iw]), sigma))
            except ValueError as exc:
                raise MalformedSamples(f"{path}:{line}: {exc}") from None
    if not samples:
        raise MalformedSamples(f"{path}: no data rows")
    return samples


def _arrays(samples):
    k = np.array([s.k for s in samples], dtype=float)
    w = np.array([s.omega for s in samples], dtype=float)
    if any(s.sigma is None for s in samples):
        sigma = np.full_like(w, DEFAULT_SIGMA_FRACTION * w.max() if w.max() > 0 else 1.0)
        explicit = False
    else:
        sigma = np.array([s.sigma for s in samples], dtype=float)
        explicit = True
    return k, w, sigma, explicit


def model_and_jacobian(mode, theta, k):
    """omega_model(k; theta) and d omega / d theta, shape (len(k), len(theta))."""
    mode = Mode.parse(mode)
    k = np.asarray(k, dtype=float)
    k2 = k * k
    k4 = k2 * k2
    if mode is Mode.B:
        w_pd, k_D, K = theta
        s2 = k4 + k_D**2 * k2 + K**4
        s = np.sqrt(s2)
        w = w_pd * k2 / s
        jac = np.column_stack([
            k2 / s,
            -w * k_D * k2 / s2,
            -w * 2.0 * K**3 / s2,
        ])
        return w, jac
    V, q, w_pi, K = theta
    denom = k4 + K**4
    frac = k4 / denom
    w = np.sqrt(k2 * V**2 + q**2 * k4 + w_pi**2 * frac)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(w > 0, 1.0 / w, 0.0)
    jac = np.column_stack([
        k2 * V * inv,
        q * k4 * inv,
        w_pi * frac * inv,
        -2.0 * w_pi**2 * k4 * K**3 / denom**2 * inv,
    ])
    return w, jac


def forward_residuals(mode, theta, samples):
    """Weighted residuals r_i = (omega_i - model_i)/sigma_i and dr/dtheta."""
    k, w, sigma, _ = _arrays(samples)
    model, jac = model_and_jacobian(mode, np.asarray(theta, dtype=float), k)
    return (w - model) / sigma, -jac / sigma[:, None]


@dataclass(frozen=True)
class FitOptions:
    fit_thermal_speed: bool = False  # mode A: V_Ti is held at 0 unless set
    max_iter: int = 200
    xtol: float = 1e-12
    ftol: float = 1e-15
    grid_factors: tuple[float, ...] = (0.1, 1.0, 10.0)


@dataclass
class FitResult:
    mode: Mode
    theta: dict[str, float]
    uncertainty: dict[str, float]
    residual_norm: float
    chi2: float
    converged: bool
    iterations: int
    starts_tried: int
    starts_converged: int
    initial_best_norm: float
    free: tuple[str, ...] = field(default=())

    def coefficients(self):
        if self.mode is Mode.B:
            return ModeBCoefficients(**self.theta)
        return ModeACoefficients(**self.theta)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "theta": dict(self.theta),
            "uncertainty": dict(self.uncertainty),
            "free_parameters": list(self.free),
            "residual_norm": self.residual_norm,
            "chi2": self.chi2,
            "converged": self.converged,
            "iterations": self.iterations,
            "starts_tried": self.starts_tried,
            "starts_converged": self.starts_converged,
            "initial_best_residual_norm": self.initial_best_norm,
        }


def _levenberg_marquardt(fun, u0, max_iter, xtol, ftol):
    """Minimise 0.5*|r(u)|^2. ``fun`` returns (r, J). Only decreasing steps are accepted."""
    u = np.array(u0, dtype=float)
    r, J = fun(u)
    cost = float(r @ r)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        JtJ = J.T @ J
        g = J.T @ r
        if not np.all(np.isfinite(JtJ)) or not np.all(np.isfinite(g)):
            return u, cost, it, False
        if cost == 0.0 or np.max(np.abs(g)) <= 1e-300:
            return u, cost, it, True
        diag = np.maximum(np.diag(JtJ), 1e-300)
        accepted = False
        while lam <= 1e16:
            A = JtJ + lam * np.diag(diag)
            try:
                step = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            longest = np.max(np.abs(step))
            if longest > MAX_LOG_STEP:
                step = step * (MAX_LOG_STEP / longest)
            u_new = u + step
            r_new, J_new = fun(u_new)
            with np.errstate(over="ignore"):
                cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no decrease possible at any damping: we are at a (numerical) minimum
            return u, cost, it, True
        reduction = (cost - cost_new) / cost
        u, r, J, cost = u_new, r_new, J_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if np.max(np.abs(step)) < xtol or reduction < ftol:
            return u, cost, it, True
    return u, cost, max_iter, False


def _initial_grid(mode: Mode, k, w, free, factors):
    kmin, kmax = float(k.min()), float(k.max())
    kmid = math.sqrt(kmin * kmax)
    wmax = float(w.max())
    if mode is Mode.B:
        axes = {
            "omega_pd": [wmax * f for f in (1.0, math.sqrt(10.0), 10.0)],
            "k_Di": [kmid * f for f in factors],
            "K_q": [kmid * f for f in factors],
        }
    else:
        positive = w > 0
        hi = int(np.argmax(k * positive))
        lo = int(np.argmin(np.where(positive, k, np.inf)))
        axes = {
            "V_Ti": [w[lo] / k[lo] * f for f in factors],
            "q_i": [w[hi] / k[hi] ** 2 * f for f in factors],
            "omega_pi": [wmax * f for f in factors],
            "K_q": [kmid * f for f in factors],
        }
    return [dict(zip(free, combo)) for combo in itertools.product(*(axes[name] for name in free))]


def fit_dispersion(mode, samples, options: FitOptions | None = None) -> FitResult:
    """Weighted least-squares fit of one dispersion branch.

    Minimises sum(((omega_i - model_i)/sigma_i)^2) over log-coefficients
    from every start of a 3^p grid; returns the lowest-residual solution
    (ties broken by the lexicographically smallest coefficient vector).
    Missing sigmas default to 1% of max(omega) for every sample.
    """
    mode = Mode.parse(mode)
    options = options or FitOptions()
    names = PARAM_NAMES[mode]
    if mode is Mode.A and not options.fit_thermal_speed:
        free = names[1:]
    else:
        free = names
    samples = list(samples)
    if len(samples) < len(free) + 1:
        raise Underdetermined(f"{len(samples)} samples for {len(free)} free parameters (need >= {len(free) + 1})")
    k, w, sigma, explicit = _arrays(samples)
    if np.all(w == 0) or np.all(w == w[0]) or np.all(k == k[0]):
        raise DegenerateData("samples carry no dispersion information (constant omega or k)")
    idx = [names.index(n) for n in free]

    def full_theta(u):
        theta = np.zeros(len(names))
        theta[idx] = np.exp(u)
        return theta

    def fun(u):
        with np.errstate(all="ignore"):
            theta = full_theta(u)
            model, jac = model_and_jacobian(mode, theta, k)
            r = (w - model) / sigma
            # chain rule for theta = exp(u)
            J = -jac[:, idx] * theta[idx] / sigma[:, None]
        return r, J

    starts = _initial_grid(mode, k, w, free, options.grid_factors)
    outcomes = []
    initial_best = math.inf
    for start in starts:
        u0 = np.log([start[n] for n in free])
        r0, _ = fun(u0)
        initial_best = min(initial_best, float(np.sqrt(r0 @ r0)))
        u, cost, iters, ok = _levenberg_marquardt(fun, u0, options.max_iter, options.xtol, options.ftol)
        outcomes.append((cost, tuple(full_theta(u)), u, iters, ok))
    n_ok = sum(1 for o in outcomes if o[4])
    if n_ok == 0:
        raise NoConvergence(f"none of {len(starts)} starts converged within {options.max_iter} iterations")
    cost, theta_t, u, iters, ok = min(outcomes, key=lambda o: (o[0], o[1]))
    theta = np.array(theta_t)

    _, J = fun(u)
    dof = len(samples) - len(free)
    chi2 = float(cost)
    # J is w.r.t. log-parameters; convert the covariance to linear parameters
    cov_u = np.linalg.pinv(J.T @ J)
    if not explicit:
        cov_u = cov_u * (chi2 / dof if dof > 0 else 1.0)
    std_u = np.sqrt(np.clip(np.diag(cov_u), 0.0, None))
    uncertainty = {name: 0.0 for name in names}
    for j, name in enumerate(free):
        uncertainty[name] = float(theta[names.index(name)] * std_u[j])
    return FitResult(
        mode=mode,
        theta={name: float(theta[i]) for i, name in enumerate(names)},
        uncertainty=uncertainty,
        residual_norm=float(math.sqrt(cost)),
        chi2=chi2,
        converged=bool(ok),
        iterations=int(iters),
        starts_tried=len(starts),
        starts_converged=n_ok,
        initial_best_norm=initial_best,
        free=tuple(free),
    )


@dataclass(frozen=True)
class DustDiagnostics:
    """Identifiable plasma combinations implied by a fit.

    Mode B gives n_d0 Z_d^2/m_d (from omega_pd), n_i0 Z_i^2/T_i (from k_Di)
    and n_e0 (from K_q). Mode A gives n_e0 plus the ion combination
    n_i0 Z_i^2/m_i (from omega_pi) and m_i (from q_i = hbar/2m_i); the
    dust-specific fields are then None.
    """

    n_e0: float
    n_e0_err: float
    dust_density_charge2_per_mass: float | None = None
    dust_density_charge2_per_mass_err: float | None = None
    ion_density_charge2_per_temperature: float | None = None
    ion_density_charge2_per_temperature_err: float | None = None
    ion_density_charge2_per_mass: float | None = None
    ion_density_charge2_per_mass_err: float | None = None
    ion_mass: float | None = None
    ion_mass_err: float | None = None

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def diagnostics_from_fit(fit: FitResult, consts: PhysicalConstants = CGS) -> DustDiagnostics:
    th, err = fit.theta, fit.uncertainty
    four_pi_e2 = 4.0 * math.pi * consts.e**2
    K, dK = th["K_q"], err["K_q"]
    n_e0 = K**4 * consts.a0 / (16.0 * math.pi)
    n_e0_err = 4.0 * K**3 * dK * consts.a0 / (16.0 * math.pi)
    if fit.mode is Mode.B:
        w, dw = th["omega_pd"], err["omega_pd"]
        kd, dkd = th["k_Di"], err["k_Di"]
        return DustDiagnostics(
            n_e0=n_e0,
            n_e0_err=n_e0_err,
            dust_density_charge2_per_mass=w**2 / four_pi_e2,
            dust_density_charge2_per_mass_err=2.0 * w * dw / four_pi_e2,
            ion_density_charge2_per_temperature=kd**2 / four_pi_e2,
            ion_density_charge2_per_temperature_err=2.0 * kd * dkd / four_pi_e2,
        )
    w, dw = th["omega_pi"], err["omega_pi"]
    q, dq = th["q_i"], err["q_i"]
    return DustDiagnostics(
        n_e0=n_e0,
        n_e0_err=n_e0_err,
        ion_density_charge2_per_mass=w**2 / four_pi_e2,
        ion_density_charge2_per_mass_err=2.0 * w * dw / four_pi_e2,
        ion_mass=consts.hbar / (2.0 * q) if q > 0 else None,
        ion_mass_err=consts.hbar * dq / (2.0 * q**2) if q > 0 else None,
    )
