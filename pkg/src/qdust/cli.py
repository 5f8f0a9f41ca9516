"""Command-line front end.

    qdust --config plasma.ini scales
    qdust --config plasma.ini dispersion --mode mobile-dust --points 100 --limits all
    qdust --config plasma.ini simulate --modes 1,3 --snapshots snaps.csv
    qdust --config plasma.ini invert samples.csv --mode mobile-dust
    qdust --config plasma.ini regimes --k "0.01 K_q" --format json

Exit codes: 0 ok, 2 input error, 3 numerical failure. Every failure prints
one line ``qdust: error: <CODE>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dispersion import (
    Mode,
    classify_regime,
    coefficients_for,
    limit_params,
    limits_for,
    Limit,
    omega_full,
    omega_limit,
    sample_curve,
)
from .errors import ConfigError, QDustError
from .inversion import FitOptions, diagnostics_from_fit, fit_dispersion, read_samples
from .params import CGS, DustPolarity, PlasmaComposition, derived_scales, validate_composition
from .simulator import build_operator, init_plane_wave, measure_frequency, modal_energy, run
from .units import parse_quantity

PLASMA_KEYS = {
    "n_e0": "density",
    "n_i0": "density",
    "n_d0": "density",
    "m_i": "mass",
    "m_d": "mass",
    "T_i": "energy",
    "T_eF": "energy",
    "Z_i": "int",
    "Z_d": "int",
    "polarity": "polarity",
}
SECTION_KEYS = {
    "plasma": set(PLASMA_KEYS),
    "dispersion": {"mode", "kmin", "kmax", "points", "spacing", "limits", "noise"},
    "simulate": {"mode", "L", "n_modes", "modes", "amplitudes", "periods", "steps_per_period",
                 "dt", "snapshot_stride"},
    "fit": {"mode", "fit_thermal_speed", "max_iter"},
    "regimes": {"mode", "k"},
}


@dataclass
class RunConfig:
    composition: PlasmaComposition | None
    sections: dict[str, dict[str, str]] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require_composition(self) -> PlasmaComposition:
        if self.composition is None:
            raise ConfigError("a [plasma] section is required for this command (use --config)")
        return self.composition


def _parse_composition(raw: dict[str, str]) -> PlasmaComposition:
    values = {}
    for key, text in raw.items():
        kind = PLASMA_KEYS[key]
        if kind == "int":
            try:
                number = float(text)
            except ValueError:
                raise ConfigError(f"{key} must be an integer, got {text!r}") from None
            if number != int(number):
                raise ConfigError(f"{key} must be an integer, got {text!r}")
            values[key] = int(number)
        elif kind == "polarity":
            try:
                values[key] = DustPolarity.parse(text)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        else:
            values[key] = parse_quantity(text, kind)
    for key in ("n_e0", "m_i"):
        if key not in values:
            raise ConfigError(f"[plasma] is missing {key}")
    if "n_i0" not in values:
        # close the charge balance when the ion density is not given
        eps = int(values.get("polarity", DustPolarity.NEGATIVE))
        values["n_i0"] = (values["n_e0"] + eps * values.get("Z_d", 1) * values.get("n_d0", 0.0)) / values.get("Z_i", 1)
    return validate_composition(PlasmaComposition(**values))


def load_config(path: str | None) -> RunConfig:
    """Parse a flat ``key = value`` INI file. Unknown sections or keys are errors."""
    if path is None:
        return RunConfig(composition=None)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {' '.join(str(exc).split())}") from None
    sections = {}
    for name in parser.sections():
        if name not in SECTION_KEYS:
            raise ConfigError(f"{path}: unknown section [{name}]")
        unknown = set(parser[name]) - SECTION_KEYS[name]
        if unknown:
            raise ConfigError(f"{path}: unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
        sections[name] = dict(parser[name])
    comp = _parse_composition(sections["plasma"]) if "plasma" in sections else None
    return RunConfig(composition=comp, sections=sections)


# --- output helpers ---------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(payload) -> str:
    return json.dumps(_jsonable(payload), indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _option(args, name, cfg: RunConfig, section, key, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(section, key, default)


def _relative_units(scales) -> dict:
    return {"K_q": scales.K_q, "k_Di": scales.k_Di}


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in str(text).replace(" ", "").split(",") if part]
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in str(text).replace(" ", "").split(",") if part]
    except ValueError:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}") from None


def _to_int(text, name) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None


def _to_float(text, name) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


# --- commands ---------------------------------------------------------------

SCALE_FIELDS = (
    ("K_q", "K_q_per_cm"),
    ("a0", "a0_cm"),
    ("omega_pi", "omega_pi_rad_per_s"),
    ("omega_pd", "omega_pd_rad_per_s"),
    ("V_Ti", "V_Ti_cm_per_s"),
    ("k_Di", "k_Di_per_cm"),
    ("C_D", "C_D_cm_per_s"),
    ("q_i", "q_i_cm2_per_s"),
    ("T_eF", "T_eF_erg"),
)


def cmd_scales(args, cfg: RunConfig) -> None:
    comp = cfg.require_composition()
    scales = derived_scales(comp, CGS)
    values = scales.as_dict()
    report = {label: values[name] for name, label in SCALE_FIELDS}
    report["T_eF_derived"] = scales.T_eF_derived
    if args.format == "csv":
        _emit(_csv_text(["quantity", "value"], list(report.items())), args.output)
    else:
        _emit(_json_text(report), args.output)


def _default_k_range(mode: Mode, scales) -> tuple[float, float]:
    if mode is Mode.A or scales.k_Di is None:
        return 1e-3 * scales.K_q, 10.0 * scales.K_q
    lo, hi = sorted((scales.K_q, scales.k_Di))
    return 1e-2 * lo, 1e2 * hi


def _select_limits(text: str | None, mode: Mode) -> list[Limit]:
    if text is None or text.strip().lower() in ("", "none"):
        return []
    if text.strip().lower() == "all":
        return limits_for(mode)
    chosen = []
    for name in text.split(","):
        name = name.strip()
        try:
            chosen.append(Limit(name))
        except ValueError:
            try:
                chosen.append(Limit[name.upper()])
            except KeyError:
                raise ConfigError(f"unknown limit {name!r}") from None
    return chosen


def cmd_dispersion(args, cfg: RunConfig) -> None:
    comp = cfg.require_composition()
    scales = derived_scales(comp, CGS)
    mode = Mode.parse(_option(args, "mode", cfg, "dispersion", "mode", Mode.B.value))
    coeffs = coefficients_for(mode, scales)
    rel = _relative_units(scales)
    default_lo, default_hi = _default_k_range(mode, scales)
    kmin = _option(args, "kmin", cfg, "dispersion", "kmin")
    kmax = _option(args, "kmax", cfg, "dispersion", "kmax")
    kmin = default_lo if kmin is None else parse_quantity(str(kmin), "wavenumber", rel)
    kmax = default_hi if kmax is None else parse_quantity(str(kmax), "wavenumber", rel)
    points = _to_int(_option(args, "points", cfg, "dispersion", "points", 200), "points")
    spacing = _option(args, "spacing", cfg, "dispersion", "spacing", "log")
    limits = _select_limits(_option(args, "limits", cfg, "dispersion", "limits"), mode)
    noise = _to_float(_option(args, "noise", cfg, "dispersion", "noise", 0.0), "noise")

    curve = sample_curve(mode, coeffs, kmin, kmax, points, spacing, comp=comp, consts=CGS)
    columns = {"k": curve.k, "omega_full": curve.omega}
    for lim in limits:
        columns[lim.column] = np.asarray(omega_limit(lim, limit_params(lim, comp, scales, CGS), curve.k), dtype=float)
    if noise > 0:
        rng = np.random.default_rng(args.seed)
        columns["omega"] = curve.omega * (1.0 + noise * rng.standard_normal(len(curve)))
        columns["sigma"] = np.maximum(noise * curve.omega, np.finfo(float).tiny)
    for name, values in curve.flags.items():
        columns[f"flag_{name}"] = values

    if args.format == "json":
        payload = {"mode": mode.value, "coefficients": dict(zip(_coefficient_names(mode), coeffs.as_tuple())),
                   "seed": args.seed, "columns": columns}
        _emit(_json_text(payload), args.output)
    else:
        header = list(columns)
        rows = zip(*(columns[h] for h in header))
        _emit(_csv_text(header, rows), args.output)


def _coefficient_names(mode: Mode):
    return ("V_Ti", "q_i", "omega_pi", "K_q") if mode is Mode.A else ("omega_pd", "k_Di", "K_q")


def cmd_simulate(args, cfg: RunConfig) -> None:
    comp = cfg.require_composition()
    scales = derived_scales(comp, CGS)
    mode = Mode.parse(_option(args, "mode", cfg, "simulate", "mode", Mode.B.value))
    coeffs = coefficients_for(mode, scales)
    modes = _int_list(_option(args, "modes", cfg, "simulate", "modes", "1,3"))
    if not modes or any(m <= 0 for m in modes):
        raise ConfigError("modes must be positive integers")
    amplitudes = _option(args, "amplitudes", cfg, "simulate", "amplitudes")
    amplitudes = _float_list(amplitudes) if amplitudes is not None else [1.0] * len(modes)
    if len(amplitudes) != len(modes):
        raise ConfigError("amplitudes and modes differ in length")
    L = _option(args, "L", cfg, "simulate", "L")
    if L is None:
        kref = scales.K_q if (mode is Mode.A or scales.k_Di is None) else min(scales.K_q, scales.k_Di)
        L = 2.0 * math.pi / kref
    else:
        L = parse_quantity(str(L), "length")
    n_modes = _to_int(_option(args, "n_modes", cfg, "simulate", "n_modes", 2 * max(modes) + 2), "n_modes")
    periods = _to_float(_option(args, "periods", cfg, "simulate", "periods", 50), "periods")
    steps_per_period = _to_int(_option(args, "steps_per_period", cfg, "simulate", "steps_per_period", 1000),
                               "steps_per_period")
    stride = _to_int(_option(args, "stride", cfg, "simulate", "snapshot_stride", 1), "snapshot_stride")

    op = build_operator(mode, coeffs, L, n_modes)
    state = init_plane_wave(op, modes, amplitudes)
    excited = np.array([math.sqrt(op.omega2[op.index_of(m)]) for m in modes])
    if np.any(excited <= 0):
        raise ConfigError("an excited mode has zero frequency; nothing to measure")
    dt = _option(args, "dt", cfg, "simulate", "dt")
    dt = 2.0 * math.pi / excited.max() / steps_per_period if dt is None else parse_quantity(str(dt), "time")
    n_steps = int(math.ceil(periods * 2.0 * math.pi / excited.min() / dt))
    traj = run(op, state, dt, n_steps, stride=1)
    meas = measure_frequency(traj)

    e0 = modal_energy(op, traj.state(0))
    e1 = modal_energy(op, traj.state(len(traj) - 1))
    rows = []
    for m in modes:
        j = op.index_of(m)
        analytic = float(omega_full(mode, coeffs, abs(op.k[j])))
        measured = meas.for_mode(m)
        idx = int(np.flatnonzero(meas.modes == m)[0])
        rows.append({
            "mode_index": m,
            "k": float(op.k[j]),
            "omega_measured": measured,
            "omega_analytic": analytic,
            "rel_error": abs(measured - analytic) / analytic,
            "fit_residual": float(meas.residual[idx]),
            "energy_drift": float(abs(e1[j] - e0[j]) / e0[j]),
        })
    if args.snapshots:
        snap = traj if stride == 1 else run(op, state, dt, n_steps, stride=stride)
        snap.to_csv(args.snapshots)

    if args.format == "csv":
        header = list(rows[0])
        _emit(_csv_text(header, ([r[h] for h in header] for r in rows)), args.output)
    else:
        payload = {"mode": mode.value, "L": L, "n_modes": n_modes, "dt": dt, "n_steps": n_steps,
                   "method": meas.method, "seed": args.seed, "modes": rows}
        _emit(_json_text(payload), args.output)


def cmd_invert(args, cfg: RunConfig) -> None:
    samples = read_samples(args.samples)
    mode = Mode.parse(_option(args, "mode", cfg, "fit", "mode", Mode.B.value))
    options = FitOptions(
        fit_thermal_speed=_bool(_option(args, "fit_thermal_speed", cfg, "fit", "fit_thermal_speed", False)),
        max_iter=_to_int(_option(args, "max_iter", cfg, "fit", "max_iter", 200), "max_iter"),
    )
    fit = fit_dispersion(mode, samples, options)
    diag = diagnostics_from_fit(fit, CGS)
    payload = {"n_samples": len(samples), "seed": args.seed, "fit": fit.as_dict(), "diagnostics": diag.as_dict()}
    if args.format == "csv":
        rows = [(f"theta.{k}", v) for k, v in fit.theta.items()]
        rows += [(f"uncertainty.{k}", v) for k, v in fit.uncertainty.items()]
        rows += [("residual_norm", fit.residual_norm), ("converged", fit.converged)]
        rows += [(f"diagnostics.{k}", v) for k, v in diag.as_dict().items()]
        _emit(_csv_text(["quantity", "value"], rows), args.output)
    else:
        _emit(_json_text(payload), args.output)


def cmd_regimes(args, cfg: RunConfig) -> None:
    comp = cfg.require_composition()
    scales = derived_scales(comp, CGS)
    mode = Mode.parse(_option(args, "mode", cfg, "regimes", "mode", Mode.B.value))
    k_text = _option(args, "k", cfg, "regimes", "k")
    if k_text is None:
        raise ConfigError("regimes needs --k (or k in [regimes])")
    k = parse_quantity(str(k_text), "wavenumber", _relative_units(scales))
    if not k > 0:
        raise ConfigError("k must be > 0")
    omega = float(omega_full(mode, coefficients_for(mode, scales), k))
    report = classify_regime(mode, scales, comp, k, omega, CGS)
    if args.format == "json":
        _emit(_json_text(report.as_dict()), args.output)
        return
    if args.format == "csv":
        rows = [(c.key, c.label, c.ratio, c.threshold, c.satisfied) for c in report]
        _emit(_csv_text(["key", "condition", "ratio", "threshold", "satisfied"], rows), args.output)
        return
    width = max(len(c.label) for c in report)
    lines = [f"mode {mode.value}  k = {k:.6g} cm^-1  omega = {omega:.6g} rad/s",
             f"{'condition':<{width}}  {'ratio':>12}  satisfied"]
    for c in report:
        lines.append(f"{c.label:<{width}}  {c.ratio:>12.4g}  {'yes' if c.satisfied else 'no'}")
    _emit("\n".join(lines) + "\n", args.output)


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [plasma] section")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("csv", "json", "table"), help="output format")
    common.add_argument("--seed", type=int, default=0, help="seed for any random draws (default 0)")

    parser = argparse.ArgumentParser(prog="qdust", description="Quantum dusty plasma low-frequency modes.",
                                     parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    modes = ("immobile-dust", "mobile-dust")

    p = sub.add_parser("scales", parents=[common], help="derived plasma scales")
    p.set_defaults(func=cmd_scales, default_format="json")

    p = sub.add_parser("dispersion", parents=[common], help="sample a dispersion curve")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--kmin", help="e.g. 1e3, '1e5 m^-1' or '0.01 K_q'")
    p.add_argument("--kmax")
    p.add_argument("--points", type=int)
    p.add_argument("--spacing", choices=("linear", "log"))
    p.add_argument("--limits", help="'all', 'none' or a comma list of limit names")
    p.add_argument("--noise", type=float, help="add relative Gaussian noise as an 'omega' column")
    p.set_defaults(func=cmd_dispersion, default_format="csv")

    p = sub.add_parser("simulate", parents=[common], help="spectral time integration check")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--modes", help="comma list of mode numbers to excite (default 1,3)")
    p.add_argument("--amplitudes")
    p.add_argument("--L", dest="L", help="domain length (default 2 pi / reference wavenumber)")
    p.add_argument("--n-modes", dest="n_modes", type=int)
    p.add_argument("--periods", type=float)
    p.add_argument("--steps-per-period", dest="steps_per_period", type=int)
    p.add_argument("--dt", help="explicit time step in s (overrides steps-per-period)")
    p.add_argument("--stride", type=int, help="snapshot stride for --snapshots")
    p.add_argument("--snapshots", help="write spectral snapshots (t, mode_index, re_amp, im_amp)")
    p.set_defaults(func=cmd_simulate, default_format="json")

    p = sub.add_parser("invert", parents=[common], help="fit coefficients to (k, omega) samples")
    p.add_argument("samples", help="CSV with header k,omega[,sigma]")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--fit-thermal-speed", dest="fit_thermal_speed", action="store_const", const=True)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.set_defaults(func=cmd_invert, default_format="json")

    p = sub.add_parser("regimes", parents=[common], help="validity margins at one wavenumber")
    p.add_argument("--mode", choices=modes)
    p.add_argument("--k", help="wavenumber, e.g. 1e4, '1e6 m^-1' or '0.01 K_q'")
    p.set_defaults(func=cmd_regimes, default_format="table")
    return parser


def _merge_globals(argv: list[str] | None) -> argparse.Namespace:
    # global flags may come before or after the subcommand; the subparser's
    # defaults must not clobber values given before it
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    head = argparse.ArgumentParser(add_help=False)
    for flag in ("--config", "--output", "--format"):
        head.add_argument(flag)
    head.add_argument("--seed", type=int)
    cut = next((i for i, a in enumerate(argv) if a in ("scales", "dispersion", "simulate", "invert", "regimes")),
               len(argv))
    pre, _ = head.parse_known_args(argv[:cut])
    args = parser.parse_args(argv)
    for name in ("config", "output", "format"):
        if getattr(args, name) is None and getattr(pre, name) is not None:
            setattr(args, name, getattr(pre, name))
    if pre.seed is not None and "--seed" not in argv[cut:]:
        args.seed = pre.seed
    if args.format is None:
        args.format = args.default_format
    return args


def main(argv: list[str] | None = None) -> int:
    args = _merge_globals(argv)
    try:
        cfg = load_config(args.config)
        args.func(args, cfg)
    except QDustError as exc:
        print(f"qdust: error: {exc.code}: {' '.join(str(exc).split())}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"qdust: error: INPUT_ERROR: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
