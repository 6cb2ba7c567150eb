"""Config-driven command-line front end.

Subcommands::

    cpmagnus decompose --config cfg.toml --out results/
    cpmagnus correct   --config cfg.toml --out results/ [--order n]...
    cpmagnus benchmark --config cfg.toml --out results/ [--omega-sweep lo:hi:steps]

Configs are TOML; physical quantities are given in units of the driving
frequency unless the key carries an ``_abs`` suffix.  Exit codes: 0 success,
2 config error, 3 correction impossible, 4 basis insufficient,
5 integrator failure.  Thread count is controlled only via the BLAS
environment (e.g. OMP_NUM_THREADS).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bench import (
    IntegratorFailure,
    SubspaceProjector,
    choi_min_eig,
    density_trajectory,
    deviation,
    exact_propagator,
    generator_propagator,
)
from .correction import CorrectionImpossible, corrected_generator
from .linalg import hs_norm
from .magnus import effective_series
from .models import PeriodicLindbladGenerator, oscillator_model, two_level_model
from .projection import BasisInsufficientError, project_series

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CORRECTION = 3
EXIT_BASIS = 4
EXIT_INTEGRATOR = 5


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (see configs/ for examples)."""

    kind: str
    omega: float
    params: dict
    orders: tuple
    n_periods: int
    samples_per_period: int
    initial_state: str
    initial_state_path: str | None
    subspace: int | None
    integrator_tol: float
    normalize_vectors: bool
    truncation: int = 12
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config is not valid TOML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            model = dict(data["model"])
            kind = model.pop("kind")
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc}") from exc
        if kind not in ("two_level", "oscillator"):
            raise ConfigError(f"unknown model kind {kind!r}")
        omega = float(model.pop("omega", 1.0))
        if omega <= 0:
            raise ConfigError("model.omega must be positive")

        def physical(name, default=None):
            # quantities are in units of omega unless the _abs variant is used
            if f"{name}_abs" in model:
                return float(model.pop(f"{name}_abs"))
            if name in model:
                return float(model.pop(name)) * omega
            if default is None:
                raise ConfigError(f"model.{name} is required for kind {kind!r}")
            return default * omega

        params = {"omega0": physical("omega0")}
        truncation = 12
        if kind == "two_level":
            params["omega_s"] = physical("omega_s", 0.0)
            params["omega_c"] = physical("omega_c", 0.0)
        else:
            params["amplitude"] = physical("amplitude")
            truncation = int(model.pop("truncation", 12))
        params["gamma"] = physical("gamma", 0.0)
        if params["gamma"] < 0:
            raise ConfigError("model.gamma must be nonnegative")
        if model:
            raise ConfigError(f"unknown model keys: {sorted(model)}")

        orders = tuple(int(n) for n in data.get("orders", (1, 2)))
        if list(orders) != sorted(orders) or any(n < 0 or n > 3 for n in orders):
            raise ConfigError("orders must be ascending integers within 0..3")

        times = data.get("times", {})
        n_periods = int(times.get("n_periods", 20))
        samples = int(times.get("samples_per_period", 1))
        if n_periods < 1 or samples < 1:
            raise ConfigError("times.n_periods and times.samples_per_period must be >= 1")

        init = data.get("initial_state", {"kind": "ground"})
        init_kind = str(init.get("kind", "ground"))
        init_path = init.get("path")
        if not (init_kind == "ground" or init_kind.startswith("fock:") or init_kind == "file"):
            raise ConfigError(f"unknown initial_state.kind {init_kind!r}")
        if init_kind == "file" and not init_path:
            raise ConfigError("initial_state.path required for kind = 'file'")

        subspace = data.get("subspace")
        subspace = int(subspace) if subspace else None

        tol = float(data.get("tolerances", {}).get("integrator", 1e-11))
        normalize = bool(data.get("normalize_vectors", False))
        return cls(
            kind=kind, omega=omega, params=params, orders=orders,
            n_periods=n_periods, samples_per_period=samples,
            initial_state=init_kind, initial_state_path=init_path,
            subspace=subspace, integrator_tol=tol,
            normalize_vectors=normalize, truncation=truncation, raw=data,
        )

    def build_model(self, omega: float | None = None) -> PeriodicLindbladGenerator:
        w = self.omega if omega is None else omega
        if self.kind == "two_level":
            return two_level_model(self.params["omega0"], self.params["omega_s"],
                                   self.params["omega_c"], self.params["gamma"], w)
        return oscillator_model(self.params["omega0"], self.params["amplitude"],
                                self.params["gamma"], w, self.truncation)

    def initial_density(self, dim: int) -> np.ndarray:
        if self.initial_state == "ground":
            rho = np.zeros((dim, dim), dtype=complex)
            rho[self.ground_index(dim), self.ground_index(dim)] = 1.0
            return rho
        if self.initial_state.startswith("fock:"):
            k = int(self.initial_state.split(":", 1)[1])
            if not 0 <= k < dim:
                raise ConfigError(f"fock index {k} out of range for dimension {dim}")
            rho = np.zeros((dim, dim), dtype=complex)
            rho[k, k] = 1.0
            return rho
        rho = np.load(self.initial_state_path)
        if rho.shape != (dim, dim):
            raise ConfigError(f"initial state file has shape {rho.shape}, expected {(dim, dim)}")
        return np.asarray(rho, dtype=complex)

    def ground_index(self, dim: int) -> int:
        # two-level ground state is the -1 eigenstate of sigma_z (index 1);
        # the oscillator ground state is Fock 0
        return 1 if self.kind == "two_level" else 0

    def echo(self) -> dict:
        return {
            "kind": self.kind, "omega": self.omega, "params": self.params,
            "orders": list(self.orders), "n_periods": self.n_periods,
            "samples_per_period": self.samples_per_period,
            "initial_state": self.initial_state, "subspace": self.subspace,
            "integrator_tol": self.integrator_tol,
            "normalize_vectors": self.normalize_vectors,
            "truncation": self.truncation if self.kind == "oscillator" else None,
        }


def _matrix_json(m: np.ndarray) -> dict:
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


def _assumptions(config: ExperimentConfig) -> list:
    notes = ["the resonance frequency omega0 is not stated for the published "
             f"figures; this run uses omega0 = {config.params['omega0']!r} "
             f"(omega = {config.omega!r})"]
    if abs(config.params["omega0"] - config.omega) < 1e-15:
        notes.append("omega0 = omega preset")
    if config.kind == "two_level" and config.params.get("omega_c") == 0.0:
        notes.append("single-quadrature driving: the strong-driving amplitude is "
                     "interpreted as the sine component with zero cosine component")
    return notes


def _decompositions(config: ExperimentConfig, model=None):
    model = model or config.build_model()
    out = {}
    for n in config.orders:
        series = effective_series(model, n)
        dec = project_series(series, model.projection_basis(n),
                             support=model.projection_support(n))
        out[n] = (series, dec)
    return model, out


def cmd_decompose(config: ExperimentConfig, out_dir: Path) -> int:
    model, decs = _decompositions(config)
    report = {"version": __version__, "config": config.echo(),
              "assumptions": _assumptions(config), "orders": {}}
    for n, (series, dec) in decs.items():
        report["orders"][str(n)] = {
            "h_series": [_matrix_json(c) for c in dec.h_series.coeffs],
            "c_series": [_matrix_json(c) for c in dec.c_series.coeffs],
            "residuals": list(dec.residuals),
            "basis_size": len(dec.basis_ops),
        }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "decomposition.json", "w") as fh:
        json.dump(report, fh, indent=1)
    print(f"wrote {out_dir / 'decomposition.json'}")
    return EXIT_OK


def cmd_correct(config: ExperimentConfig, out_dir: Path) -> int:
    model, decs = _decompositions(config)
    report = {"version": __version__, "config": config.echo(),
              "assumptions": _assumptions(config), "orders": {}}
    failed = False
    for n, (series, dec) in decs.items():
        entry = {}
        try:
            cg = corrected_generator(model, n, config.omega,
                                     normalize=config.normalize_vectors,
                                     series=series, decomposition=dec)
            coeff = cg.coefficient
            entry["lambda_series"] = coeff.eig_series.values.tolist()
            entry["lambda_tilde_x_coeffs"] = [p.to_x_coeffs().tolist()
                                              for p in coeff.lambda_polys]
            entry["lambda_tilde"] = list(coeff.lambda_tilde)
            entry["c_tilde"] = _matrix_json(coeff.c_tilde)
            entry["min_eigenvalue"] = coeff.min_eigenvalue
            entry["psd_certified"] = bool(
                coeff.min_eigenvalue >= -1e-12 * max(1.0, hs_norm(coeff.c_tilde)))
            if n == 0:
                entry["note"] = ("order 0 coefficient matrix is already positive "
                                 "semidefinite; no correction needed")
        except CorrectionImpossible as exc:
            failed = True
            entry["correction_impossible"] = {
                "eigen_index": exc.eigen_index,
                "order": exc.order,
                "leading_coefficient": exc.leading,
                "message": str(exc),
            }
        report["orders"][str(n)] = entry
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "correction.json", "w") as fh:
        json.dump(report, fh, indent=1)
    print(f"wrote {out_dir / 'correction.json'}")
    if failed:
        print("correction impossible for at least one requested order", file=sys.stderr)
        return EXIT_CORRECTION
    return EXIT_OK


def _fmt(x: float) -> str:
    return f"{x:.17g}"


TRUNCATION_GUARD_TOL = 1e-6


def _truncation_guard(config: ExperimentConfig, times) -> float:
    """Verify that the figure-level oscillator output is converged in the
    Fock-space truncation: the observable trajectory at N and N + 4 must
    agree to 1e-6, else the truncation is too small to trust."""
    series = []
    for extra in (0, 4):
        n_dim = config.truncation + extra
        model = oscillator_model(config.params["omega0"], config.params["amplitude"],
                                 config.params["gamma"], config.omega, n_dim)
        rho0 = np.zeros((n_dim, n_dim), dtype=complex)
        small0 = config.initial_density(config.truncation)
        rho0[: config.truncation, : config.truncation] = small0
        traj = density_trajectory(model, rho0, times, tol=config.integrator_tol)
        gidx = config.ground_index(n_dim)
        series.append(np.array([r[gidx, gidx].real for r in traj]))
    drift = float(np.max(np.abs(series[0] - series[1])))
    if drift >= TRUNCATION_GUARD_TOL:
        raise ConfigError(
            f"oscillator truncation {config.truncation} is not converged: "
            f"growing it by 4 states changes the output by {drift:.2e} "
            f"(allowed {TRUNCATION_GUARD_TOL:.0e}); increase model.truncation"
        )
    return drift


def cmd_benchmark(config: ExperimentConfig, out_dir: Path,
                  omega_sweep: tuple | None = None) -> int:
    t_start = time.time()
    if omega_sweep is not None:
        return _benchmark_sweep(config, out_dir, omega_sweep)
    model, decs = _decompositions(config)
    T = model.period
    times = np.array([
        (m + j / config.samples_per_period) * T
        for m in range(config.n_periods + 1) for j in range(config.samples_per_period)
        if m < config.n_periods or j == 0
    ])
    exact, info = exact_propagator(model, times, tol=config.integrator_tol,
                                   return_info=True)
    truncation_drift = None
    if config.kind == "oscillator":
        truncation_drift = _truncation_guard(config, times)
    rho0 = config.initial_density(model.dim)
    gidx = config.ground_index(model.dim)
    observable = np.zeros((model.dim, model.dim), dtype=complex)
    observable[gidx, gidx] = 1.0
    proj = None
    if config.subspace:
        proj = SubspaceProjector.lowest(model.dim, config.subspace)

    columns = {"t_over_T": times / T,
               "population_exact": [float(np.trace(observable @ v(rho0)).real)
                                    for v in exact]}
    corrections = {}
    for n in config.orders:
        series, dec = decs[n]
        cg = corrected_generator(model, n, config.omega,
                                 normalize=config.normalize_vectors,
                                 series=series, decomposition=dec)
        corrections[n] = cg
        vn = [generator_propagator(cg.uncorrected, t) for t in times]
        vtn = [generator_propagator(cg.corrected, t) for t in times]
        columns[f"population_magnus_{n}"] = [
            float(np.trace(observable @ v(rho0)).real) for v in vn]
        columns[f"population_corrected_{n}"] = [
            float(np.trace(observable @ v(rho0)).real) for v in vtn]
        columns[f"d_{n}"] = [deviation(v, a, proj) for v, a in zip(exact, vn)]
        columns[f"d_tilde_{n}"] = [deviation(v, a, proj) for v, a in zip(exact, vtn)]

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "benchmark.csv"
    headers = ["t_over_T", "population_exact"]
    for stem in ("population_magnus", "population_corrected", "d", "d_tilde"):
        headers.extend(f"{stem}_{n}" for n in config.orders)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for i in range(len(times)):
            writer.writerow([_fmt(float(columns[h][i])) for h in headers])

    sidecar = {
        "version": __version__,
        "config": config.echo(),
        "assumptions": _assumptions(config),
        "integrator": info,
        "truncation_guard_drift": truncation_drift,
        "choi_min_eig_corrected_at_final_time": {
            str(n): choi_min_eig(generator_propagator(cg.corrected, times[-1]))
            for n, cg in corrections.items()
        },
        "elapsed_seconds": time.time() - t_start,
    }
    with open(out_dir / "benchmark.json", "w") as fh:
        json.dump(sidecar, fh, indent=1)
    print(f"wrote {csv_path} and {out_dir / 'benchmark.json'}")
    return EXIT_OK


def _benchmark_sweep(config: ExperimentConfig, out_dir: Path, sweep: tuple) -> int:
    """One-period propagator deviations and coefficient-correction gaps over
    a geometric frequency sweep (columns per requested order)."""
    lo, hi, steps = sweep
    omegas = np.geomspace(lo, hi, steps)
    base = config.build_model()
    series = {}
    decs = {}
    for n in config.orders:
        series[n] = effective_series(base, n)
        decs[n] = project_series(series[n], base.projection_basis(n),
                                 support=base.projection_support(n))
    rows = []
    for w in omegas:
        model = config.build_model(omega=w)
        T = model.period
        vT = exact_propagator(model, [T], tol=config.integrator_tol)[0]
        row = {"omega": w}
        for n in config.orders:
            cg = corrected_generator(model, n, w, normalize=config.normalize_vectors,
                                     series=series[n], decomposition=decs[n])
            row[f"dev_magnus_{n}"] = hs_norm(
                vT.mat - generator_propagator(cg.uncorrected, T).mat)
            row[f"dev_corrected_{n}"] = hs_norm(
                vT.mat - generator_propagator(cg.corrected, T).mat)
            row[f"c_gap_{n}"] = hs_norm(
                cg.coefficient.c_tilde - cg.decomposition.c_series(w))
        rows.append(row)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep.csv"
    headers = list(rows[0])
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for row in rows:
            writer.writerow([_fmt(float(row[h])) for h in headers])
    with open(out_dir / "sweep.json", "w") as fh:
        json.dump({"version": __version__, "config": config.echo(),
                   "assumptions": _assumptions(config),
                   "omega_sweep": [lo, hi, steps]}, fh, indent=1)
    print(f"wrote {csv_path}")
    return EXIT_OK


def _parse_sweep(text: str) -> tuple:
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise ConfigError(f"--omega-sweep expects lo:hi:steps, got {text!r}") from exc
    if lo <= 0 or hi <= lo or steps < 2:
        raise ConfigError("--omega-sweep needs 0 < lo < hi and steps >= 2")
    return lo, hi, steps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpmagnus",
        description="Completely positive effective generators for driven Lindblad dynamics",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("decompose", "correct", "benchmark"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--order", action="append", type=int, default=None,
                       help="override config orders (repeatable)")
        if name == "benchmark":
            p.add_argument("--omega-sweep", default=None,
                           help="lo:hi:steps geometric frequency sweep")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        if args.order:
            orders = tuple(sorted(set(args.order)))
            if any(n < 0 or n > 3 for n in orders):
                raise ConfigError("orders must be within 0..3")
            config = ExperimentConfig(
                kind=config.kind, omega=config.omega, params=config.params,
                orders=orders, n_periods=config.n_periods,
                samples_per_period=config.samples_per_period,
                initial_state=config.initial_state,
                initial_state_path=config.initial_state_path,
                subspace=config.subspace, integrator_tol=config.integrator_tol,
                normalize_vectors=config.normalize_vectors,
                truncation=config.truncation, raw=config.raw,
            )
        out_dir = Path(args.out)
        if args.command == "decompose":
            return cmd_decompose(config, out_dir)
        if args.command == "correct":
            return cmd_correct(config, out_dir)
        sweep = _parse_sweep(args.omega_sweep) if args.omega_sweep else None
        return cmd_benchmark(config, out_dir, omega_sweep=sweep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BasisInsufficientError as exc:
        print(f"basis insufficient: {exc}", file=sys.stderr)
        return EXIT_BASIS
    except CorrectionImpossible as exc:
        print(f"correction impossible: {exc}", file=sys.stderr)
        return EXIT_CORRECTION
    except IntegratorFailure as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
