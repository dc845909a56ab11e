"""Experiment drivers: JSON configs, figure presets, sweeps, CSV output.

A config document fully determines the numbers that land in a CSV: rerunning
the same config with the same seed writes byte-identical CSV bodies.  The
only volatile output is the metadata sidecar, which records the resolved
config, the seed, the written file names, and a timestamp.  Monte Carlo
points use per-point seeds ``seed + point_index`` so that a sweep stays
reproducible point by point no matter how many workers evaluate it.

Theory columns always satisfy total = variance + bias; the simulation
columns come from realized draws (one dataset per replication), whose
spread is what an honest error bar on an overlay should show.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .exceptions import SchemaError, UnknownParameterError
from .montecarlo import McEstimate, SimConfig, replicate
from .risk import (
    RiskBreakdown,
    asymptotic_risk,
    golden_section,
    interpolation_optimality,
    optimal_lambda,
    strong_weak_risk,
)
from .spectral import (
    AtomicSpectrum,
    ProblemSpec,
    SourceFunction,
    make_atomic_spectrum,
    strong_weak_model,
)

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "mode": {
            "enum": ["risk-curve", "optimal-lambda", "mc-compare", "figure", "sweep"]
        },
        "label": {"type": "string", "minLength": 1},
        "figure": {"enum": ["fig1", "fig2", "fig3"]},
        "figure_params": {"type": "object"},
        "model": {
            "type": "object",
            "properties": {
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "noise_var": {"type": "number", "minimum": 0},
                "signal_var": {"type": "number", "exclusiveMinimum": 0},
                "atoms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "prefixItems": [{"type": "number"}, {"type": "number"}],
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
                "source": {
                    "type": "object",
                    "properties": {
                        "family": {"enum": ["constant", "power", "tabulated"]},
                        "value": {"type": "number"},
                        "alpha": {"type": "number"},
                        "values": {
                            "type": "array",
                            "items": {"type": "number"},
                            "minItems": 1,
                        },
                    },
                    "required": ["family"],
                    "additionalProperties": False,
                },
                "rho1": {"type": "number"},
                "rho2": {"type": "number"},
                "psi1": {"type": "number"},
                "phi1": {"type": "number"},
                "phi2": {"type": "number"},
            },
            "required": ["gamma"],
            "additionalProperties": False,
        },
        "lambda": {"type": "number", "minimum": 0},
        "lambda_grid": {
            "type": "object",
            "properties": {
                "min": {"type": "number", "minimum": 0},
                "max": {"type": "number", "minimum": 0},
                "count": {"type": "integer", "minimum": 1},
                "scale": {"enum": ["log", "linear"]},
            },
            "required": ["min", "max", "count"],
            "additionalProperties": False,
        },
        "simulation": {
            "type": "object",
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "replications": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "parameter": {"type": "string", "minLength": 1},
                "values": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 1,
                },
                "grid": {
                    "type": "object",
                    "properties": {
                        "min": {"type": "number"},
                        "max": {"type": "number"},
                        "count": {"type": "integer", "minimum": 1},
                        "scale": {"enum": ["log", "linear"]},
                    },
                    "required": ["min", "max", "count"],
                    "additionalProperties": False,
                },
            },
            "required": ["parameter"],
            "additionalProperties": False,
        },
    },
    "required": ["mode"],
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(CONFIG_SCHEMA)

SWEEPABLE = (
    "lambda",
    "gamma",
    "noise_var",
    "signal_var",
    "snr",
    "rho1",
    "rho2",
    "psi1",
    "phi1",
    "phi2",
)

_STRONG_WEAK_KEYS = ("rho1", "rho2", "psi1", "phi1", "phi2")

_DEFAULT_GRID = {"min": 1e-3, "max": 10.0, "count": 50, "scale": "log"}
_DEFAULT_SIMULATION = {"dim": 256, "replications": 0, "seed": 0}

# Figure presets freeze the grids the captions leave open.  Every preset is
# itself a valid config document, so it can be inspected, serialized, or
# partially overridden before parsing.
PRESETS: dict[str, dict[str, Any]] = {
    # Optimally tuned risk and penalty against the share of strong
    # eigenvalue mass, one curve per prior-alignment ratio phi1/phi2,
    # under the dual normalization (unit signal, unit parameter norm).
    "fig1": {
        "mode": "figure",
        "figure": "fig1",
        "label": "fig1",
        "figure_params": {
            "gamma": 3.5,
            "noise_var": 0.05,
            "signal_var": 1.0,
            "psi1": 0.5,
            "phi_ratios": [1.0, 4.0, 16.0, 64.0],
            "rho_share_grid": {"min": 0.55, "max": 0.95, "count": 15},
        },
        "simulation": {"dim": 1024, "replications": 40, "seed": 0},
    },
    # Ridgeless risk of the strong-plus-weak design against the eigenvalue
    # ratio rho2/rho1 (left file) and with per-point tuned rho2 against the
    # inverse strong fraction 1/psi1 (right file), with the optimally tuned
    # strong-features-only ridge as the floor being approached.
    "fig2": {
        "mode": "figure",
        "figure": "fig2",
        "label": "fig2",
        "figure_params": {
            "rho1": 0.5,
            "d1_over_n": 1.5,
            "noise_var": 1.0,
            "signal_var": 1.0,
            "inv_psi1_values": [1.5, 2.0, 3.0, 5.0, 8.0],
            "rho_ratio_grid": {"min": 1e-6, "max": 1.0, "count": 25, "scale": "log"},
            "dim_ratio_curves": 256,
            "dim_tuned": 1024,
        },
        "simulation": {"dim": 1024, "replications": 20, "seed": 0},
    },
    # Ridgeless bias and variance against the aspect ratio gamma for two-atom
    # models under the dual normalization; curves are (rho1/rho2, phi1/phi2)
    # pairs.  The large-eigenvalue-ratio curve shows the interior variance
    # peak and the small-phi-ratio (hard) curves the interior bias peak, both
    # near gamma = 1/psi1 where the sample count crosses the strong-block
    # dimension.
    "fig3": {
        "mode": "figure",
        "figure": "fig3",
        "label": "fig3",
        "figure_params": {
            "psi1": 0.35,
            "noise_var": 1.0,
            "signal_var": 1.0,
            "curves": [[4.0, 5.0], [25.0, 0.2], [100.0, 0.05], [400.0, 0.1]],
            "gamma_grid": {"min": 1.2, "max": 6.0, "count": 25},
        },
        "simulation": {"dim": 256, "replications": 20, "seed": 0},
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed, validated experiment: everything run_experiment needs.

    ``resolved`` is the config document with defaults filled in, kept for
    the metadata sidecar.  ``problem`` is None in figure mode, where the
    preset parameters build their own models.
    """

    mode: str
    label: str
    problem: ProblemSpec | None
    strong_weak: tuple[float, float, float, float, float] | None
    lam: float
    lam_grid: tuple[float, ...]
    dim: int
    replications: int
    seed: int
    figure: str | None = None
    figure_params: dict[str, Any] | None = None
    sweep_parameter: str | None = None
    sweep_values: tuple[float, ...] | None = None
    resolved: dict[str, Any] = field(default_factory=dict)


def _grid_values(spec: dict[str, Any], what: str) -> tuple[float, ...]:
    lo, hi, count = spec["min"], spec["max"], spec["count"]
    scale = spec.get("scale", "log")
    if hi < lo:
        raise ValueError(f"{what}: max {hi} is below min {lo}")
    if count == 1:
        return (float(lo),)
    if scale == "log":
        if lo <= 0.0:
            raise ValueError(f"{what}: log scale needs min > 0, got {lo}")
        return tuple(float(x) for x in np.geomspace(lo, hi, count))
    return tuple(float(x) for x in np.linspace(lo, hi, count))


def _build_source(
    spectrum: AtomicSpectrum, spec: dict[str, Any], atoms: list[list[float]]
) -> SourceFunction:
    family = spec["family"]
    if family == "constant":
        return SourceFunction.constant(spectrum, spec.get("value", 1.0))
    if family == "power":
        if "alpha" not in spec:
            raise ValueError("source family 'power' needs 'alpha'")
        return SourceFunction.power(spectrum, spec["alpha"])
    values = spec.get("values")
    if values is None:
        raise ValueError("source family 'tabulated' needs 'values'")
    if len(values) != len(atoms):
        raise ValueError(
            f"source 'values' has length {len(values)}, expected one per atom "
            f"({len(atoms)})"
        )
    table: dict[float, float] = {}
    for (tau, _), phi in zip(atoms, values):
        if table.get(tau, phi) != phi:
            raise ValueError(f"conflicting source values for eigenvalue {tau}")
        table[float(tau)] = float(phi)
    return SourceFunction.tabulated(table)


def _build_model(
    model: dict[str, Any]
) -> tuple[ProblemSpec, tuple[float, float, float, float, float] | None]:
    sw_present = [k for k in _STRONG_WEAK_KEYS if k in model]
    if "atoms" in model and sw_present:
        raise ValueError(
            f"model mixes 'atoms' with strong-weak parameters {sw_present}"
        )
    if sw_present and len(sw_present) != len(_STRONG_WEAK_KEYS):
        missing = sorted(set(_STRONG_WEAK_KEYS) - set(sw_present))
        raise ValueError(f"strong-weak model needs all of {list(_STRONG_WEAK_KEYS)}, missing {missing}")
    gamma = model["gamma"]
    noise_var = model.get("noise_var", 1.0)
    signal_var = model.get("signal_var", 1.0)
    strong_weak = None
    if sw_present:
        strong_weak = tuple(float(model[k]) for k in _STRONG_WEAK_KEYS)
        spectrum, source = strong_weak_model(*strong_weak)
    else:
        atoms = model.get("atoms", [[1.0, 1.0]])
        spectrum = make_atomic_spectrum([(t, w) for t, w in atoms])
        source = _build_source(
            spectrum, model.get("source", {"family": "constant"}), atoms
        )
    problem = ProblemSpec(
        spectrum=spectrum,
        source=source,
        aspect_ratio=float(gamma),
        noise_var=float(noise_var),
        signal_var=float(signal_var),
    )
    return problem, strong_weak


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config document.

    Schema violations raise SchemaError carrying the JSON path of the bad
    field; semantic violations (a value the schema cannot see is wrong)
    raise ValueError naming the offending value.  Figure configs expand
    their preset first, with user-provided keys taking precedence.
    """
    doc = json.loads(text)
    error = best_match(_VALIDATOR.iter_errors(doc))
    if error is not None:
        raise SchemaError(f"{error.json_path}: {error.message}")

    mode = doc["mode"]
    if mode == "figure":
        if "figure" not in doc:
            raise ValueError("figure mode needs a 'figure' name")
        preset = PRESETS[doc["figure"]]
        merged = dict(preset)
        for key, value in doc.items():
            if key in ("figure_params", "simulation") and key in preset:
                merged[key] = {**preset[key], **value}
            else:
                merged[key] = value
        doc = merged
    elif "figure" in doc:
        raise ValueError(f"'figure' is only valid in figure mode, not {mode!r}")

    simulation = {**_DEFAULT_SIMULATION, **doc.get("simulation", {})}
    label = doc.get("label", doc.get("figure", mode))

    problem = None
    strong_weak = None
    if "model" in doc:
        problem, strong_weak = _build_model(doc["model"])
    elif mode != "figure":
        raise ValueError(f"mode {mode!r} needs a 'model' block")

    grid_spec = doc.get("lambda_grid", dict(_DEFAULT_GRID))
    lam_grid = _grid_values(grid_spec, "lambda_grid")
    if problem is not None and problem.aspect_ratio <= 1.0 and 0.0 in lam_grid:
        raise ValueError(
            "lambda_grid contains 0 but gamma "
            f"{problem.aspect_ratio} <= 1 has no ridgeless limit"
        )
    lam = float(doc.get("lambda", 0.0))
    if (
        "lambda" in doc
        and problem is not None
        and problem.aspect_ratio <= 1.0
        and lam == 0.0
    ):
        raise ValueError("lambda = 0 needs gamma > 1")

    sweep_parameter = None
    sweep_values: tuple[float, ...] | None = None
    if mode == "sweep":
        block = doc.get("sweep")
        if block is None:
            raise ValueError("sweep mode needs a 'sweep' block")
        sweep_parameter = block["parameter"]
        if sweep_parameter not in SWEEPABLE:
            raise UnknownParameterError(
                f"unknown sweep parameter {sweep_parameter!r}, expected one of {SWEEPABLE}"
            )
        if "values" in block:
            sweep_values = tuple(float(x) for x in block["values"])
        elif "grid" in block:
            sweep_values = _grid_values(block["grid"], "sweep.grid")
        else:
            raise ValueError("sweep block needs 'values' or 'grid'")
    elif "sweep" in doc:
        raise ValueError(f"'sweep' block is only valid in sweep mode, not {mode!r}")

    if mode == "mc-compare" and simulation["replications"] < 2:
        raise ValueError(
            "mc-compare needs replications >= 2 to estimate a standard error, "
            f"got {simulation['replications']}"
        )

    resolved = dict(doc)
    resolved["simulation"] = simulation
    resolved["label"] = label
    if mode in ("risk-curve", "mc-compare"):
        resolved["lambda_grid"] = grid_spec

    return ExperimentConfig(
        mode=mode,
        label=label,
        problem=problem,
        strong_weak=strong_weak,
        lam=lam,
        lam_grid=lam_grid,
        dim=int(simulation["dim"]),
        replications=int(simulation["replications"]),
        seed=int(simulation["seed"]),
        figure=doc.get("figure"),
        figure_params=doc.get("figure_params"),
        sweep_parameter=sweep_parameter,
        sweep_values=sweep_values,
        resolved=resolved,
    )


def interior_local_maxima(values: Sequence[float]) -> list[int]:
    """Indices of strict interior local maxima of a sampled curve.

    A local maximum is where the first difference changes sign from
    positive to negative (equivalently the discrete second difference is
    negative across the point).  Endpoints never qualify, so a curve rising
    into the right edge reports no peak there.
    """
    y = np.asarray(values, dtype=float)
    d = np.diff(y)
    return [k for k in range(1, y.size - 1) if d[k - 1] > 0.0 and d[k] < 0.0]


def _fmt(cell: Any) -> str:
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    if isinstance(cell, (float, np.floating)):
        return format(float(cell), ".17g")
    return str(cell)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(cell) for cell in row])
    except BaseException:
        path.unlink(missing_ok=True)
        raise


def _sim_config(
    config: ExperimentConfig, problem: ProblemSpec, lam: float, seed: int, dim: int | None = None
) -> SimConfig:
    return SimConfig(
        dim=dim if dim is not None else config.dim,
        aspect_ratio=problem.aspect_ratio,
        spectrum=problem.spectrum,
        source=problem.source,
        noise_var=problem.noise_var,
        signal_var=problem.signal_var,
        lam=lam,
        replications=config.replications,
        seed=seed,
    )


def _mc_columns(
    estimates: tuple[McEstimate, McEstimate, McEstimate]
) -> list[float]:
    variance, bias, total = estimates
    return [
        variance.mean,
        variance.stderr,
        bias.mean,
        bias.stderr,
        total.mean,
        total.stderr,
    ]


_MC_HEADER = [
    "variance_mc",
    "variance_mc_stderr",
    "bias_mc",
    "bias_mc_stderr",
    "total_mc",
    "total_mc_stderr",
]


def _risk_curve_files(
    config: ExperimentConfig, max_workers: int
) -> list[tuple[str, list[str], list[list[Any]]]]:
    problem = config.problem
    assert problem is not None
    header = ["lambda", "v", "v_prime", "variance_theory", "bias_theory", "total_theory"]
    with_mc = config.replications > 0
    if with_mc:
        header += _MC_HEADER
    rows: list[list[Any]] = []
    for index, lam in enumerate(config.lam_grid):
        br = asymptotic_risk(problem, lam)
        row: list[Any] = [lam, br.companion.v, br.companion.v_prime, br.variance, br.bias, br.total]
        if with_mc:
            sim = _sim_config(config, problem, lam, config.seed + index)
            row += _mc_columns(replicate(sim, "decomposition-realized", max_workers))
        rows.append(row)
    return [(f"{config.label}.csv", header, rows)]


def _optimal_lambda_files(
    config: ExperimentConfig, max_workers: int
) -> list[tuple[str, list[str], list[list[Any]]]]:
    problem = config.problem
    assert problem is not None
    lam_star, br = optimal_lambda(problem)
    header = [
        "lambda_star",
        "v",
        "v_prime",
        "variance_theory",
        "bias_theory",
        "total_theory",
    ]
    row: list[Any] = [lam_star, br.companion.v, br.companion.v_prime, br.variance, br.bias, br.total]
    if config.replications > 0:
        header += ["total_mc", "total_mc_stderr"]
        sim = _sim_config(config, problem, lam_star, config.seed)
        est = replicate(sim, "risk-realized", max_workers)
        row += [est.mean, est.stderr]
    return [(f"{config.label}.csv", header, [row])]


def _mc_compare_files(
    config: ExperimentConfig, max_workers: int
) -> list[tuple[str, list[str], list[list[Any]]]]:
    problem = config.problem
    assert problem is not None
    header = ["lambda"]
    for name in ("variance", "bias", "total"):
        header += [f"{name}_theory", f"{name}_mc", f"{name}_mc_stderr", f"{name}_z"]
    rows: list[list[Any]] = []
    for index, lam in enumerate(config.lam_grid):
        br = asymptotic_risk(problem, lam)
        sim = _sim_config(config, problem, lam, config.seed + index)
        estimates = replicate(sim, "decomposition-realized", max_workers)
        row: list[Any] = [lam]
        for theory, est in zip((br.variance, br.bias, br.total), estimates):
            z = (est.mean - theory) / est.stderr if est.stderr > 0.0 else math.nan
            row += [theory, est.mean, est.stderr, z]
        rows.append(row)
    return [(f"{config.label}.csv", header, rows)]


def _sweep_problem(
    config: ExperimentConfig, parameter: str, value: float
) -> tuple[ProblemSpec, float]:
    """The problem and penalty obtained by moving one scalar of the baseline."""
    problem = config.problem
    assert problem is not None
    lam = config.lam
    if parameter == "lambda":
        return problem, float(value)
    if parameter == "gamma":
        return (
            ProblemSpec(
                spectrum=problem.spectrum,
                source=problem.source,
                aspect_ratio=float(value),
                noise_var=problem.noise_var,
                signal_var=problem.signal_var,
            ),
            lam,
        )
    if parameter in ("noise_var", "signal_var", "snr"):
        noise_var = problem.noise_var
        signal_var = problem.signal_var
        if parameter == "noise_var":
            noise_var = float(value)
        elif parameter == "signal_var":
            signal_var = float(value)
        else:
            # Sweeping the signal-to-noise ratio holds the noise floor fixed.
            signal_var = float(value) * noise_var
        return (
            ProblemSpec(
                spectrum=problem.spectrum,
                source=problem.source,
                aspect_ratio=problem.aspect_ratio,
                noise_var=noise_var,
                signal_var=signal_var,
            ),
            lam,
        )
    if config.strong_weak is None:
        raise ValueError(
            f"sweeping {parameter!r} needs the strong-weak model form "
            "(rho1, rho2, psi1, phi1, phi2)"
        )
    params = dict(zip(_STRONG_WEAK_KEYS, config.strong_weak))
    params[parameter] = float(value)
    spectrum, source = strong_weak_model(*(params[k] for k in _STRONG_WEAK_KEYS))
    return (
        ProblemSpec(
            spectrum=spectrum,
            source=source,
            aspect_ratio=problem.aspect_ratio,
            noise_var=problem.noise_var,
            signal_var=problem.signal_var,
        ),
        lam,
    )


def _interpolation_margin_inputs(
    config: ExperimentConfig, parameter: str
) -> tuple[float, float, float, float] | None:
    """(rho1, rho2, phi1, phi2) when the snr sweep sits in the regime the
    interpolation-optimality test covers, else None."""
    if parameter != "snr" or config.strong_weak is None or config.problem is None:
        return None
    rho1, rho2, psi1, phi1, phi2 = config.strong_weak
    if config.problem.aspect_ratio != 2.0 or psi1 != 0.5:
        return None
    if abs(phi1 / 2.0 + phi2 / 2.0 - 1.0) > 1e-12:
        return None
    return rho1, rho2, phi1, phi2


def sweep(
    config: ExperimentConfig,
    parameter: str | None = None,
    values: Sequence[float] | None = None,
    out_dir: str | Path = ".",
    max_workers: int = 1,
) -> list[Path]:
    """One CSV row per swept value; points are evaluated concurrently and
    written in sweep order.  parameter/values default to the config's sweep
    block."""
    parameter = parameter if parameter is not None else config.sweep_parameter
    if parameter is None:
        raise ValueError("no sweep parameter given")
    if parameter not in SWEEPABLE:
        raise UnknownParameterError(
            f"unknown sweep parameter {parameter!r}, expected one of {SWEEPABLE}"
        )
    if values is None:
        values = config.sweep_values
    if not values:
        raise ValueError("no sweep values given")
    if config.problem is None:
        raise ValueError("sweep needs a 'model' block")
    if parameter == "gamma" and config.lam == 0.0 and min(values) <= 1.0:
        raise ValueError(
            f"gamma sweep at lambda = 0 needs every value > 1, got min {min(values)}"
        )

    margin_inputs = _interpolation_margin_inputs(config, parameter)
    with_mc = config.replications > 0
    header = [parameter, "lambda", "variance_theory", "bias_theory", "total_theory"]
    if with_mc:
        header += _MC_HEADER
    if margin_inputs is not None:
        header += ["interpolation_margin", "interpolation_optimal"]

    def point(item: tuple[int, float]) -> list[Any]:
        index, value = item
        problem, lam = _sweep_problem(config, parameter, value)
        br = asymptotic_risk(problem, lam)
        row: list[Any] = [value, lam, br.variance, br.bias, br.total]
        if with_mc:
            sim = _sim_config(config, problem, lam, config.seed + index)
            row += _mc_columns(replicate(sim, "decomposition-realized"))
        if margin_inputs is not None:
            lhs, optimal = interpolation_optimality(*margin_inputs, snr=value)
            row += [lhs, optimal]
        return row

    items = list(enumerate(values))
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(point, items))
    else:
        rows = [point(it) for it in items]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [(f"{config.label}.csv", header, rows)]
    return _emit(config, files, out, {"per_point_seed": "seed + point_index"})


def _caption_normalized_pair(
    psi1: float, phi_ratio: float, rho_share: float
) -> tuple[float, float, float, float]:
    """(rho1, rho2, phi1, phi2) under the dual normalization, parameterized
    by the prior ratio phi1/phi2 and the share rho1/(rho1 + rho2)."""
    psi2 = 1.0 - psi1
    phi2 = 1.0 / (psi1 * phi_ratio + psi2)
    phi1 = phi_ratio * phi2
    scale = 1.0 / (psi1 * rho_share * phi1 + psi2 * (1.0 - rho_share) * phi2)
    return scale * rho_share, scale * (1.0 - rho_share), phi1, phi2


def _fig1_files(
    config: ExperimentConfig, max_workers: int
) -> tuple[list[tuple[str, list[str], list[list[Any]]]], dict[str, Any]]:
    params = config.figure_params or {}
    gamma = params["gamma"]
    noise_var = params["noise_var"]
    signal_var = params["signal_var"]
    psi1 = params["psi1"]
    shares = _grid_values({**params["rho_share_grid"], "scale": "linear"}, "rho_share_grid")
    with_mc = config.replications > 0

    risk_header = [
        "phi_ratio",
        "rho_share",
        "rho1",
        "rho2",
        "lambda_star",
        "total_theory",
    ]
    if with_mc:
        risk_header += ["total_mc", "total_mc_stderr"]
    risk_rows: list[list[Any]] = []
    lam_rows: list[list[Any]] = []
    index = 0
    for phi_ratio in params["phi_ratios"]:
        for share in shares:
            rho1, rho2, phi1, phi2 = _caption_normalized_pair(psi1, phi_ratio, share)
            spectrum, source = strong_weak_model(rho1, rho2, psi1, phi1, phi2)
            problem = ProblemSpec(
                spectrum=spectrum,
                source=source,
                aspect_ratio=gamma,
                noise_var=noise_var,
                signal_var=signal_var,
            )
            lam_star, br = optimal_lambda(problem)
            row: list[Any] = [phi_ratio, share, rho1, rho2, lam_star, br.total]
            if with_mc:
                sim = _sim_config(config, problem, lam_star, config.seed + index)
                est = replicate(sim, "risk-realized", max_workers)
                row += [est.mean, est.stderr]
            risk_rows.append(row)
            lam_rows.append([phi_ratio, share, lam_star])
            index += 1
    files = [
        ("optimal-risk-vs-eigenvalue-ratio.csv", risk_header, risk_rows),
        (
            "optimal-lambda-vs-eigenvalue-ratio.csv",
            ["phi_ratio", "rho_share", "lambda_star"],
            lam_rows,
        ),
    ]
    return files, {"per_point_seed": "seed + point_index over (phi_ratio, rho_share)"}


def _fig2_strong_only_reference(
    rho1: float, d1_over_n: float, noise_var: float, signal_var: float
) -> tuple[float, RiskBreakdown]:
    spectrum = make_atomic_spectrum([(rho1, 1.0)])
    problem = ProblemSpec(
        spectrum=spectrum,
        source=SourceFunction.constant(spectrum),
        aspect_ratio=d1_over_n,
        noise_var=noise_var,
        signal_var=signal_var,
    )
    return optimal_lambda(problem)


def _fig2_files(
    config: ExperimentConfig, max_workers: int
) -> tuple[list[tuple[str, list[str], list[list[Any]]]], dict[str, Any]]:
    params = config.figure_params or {}
    rho1 = params["rho1"]
    d1_over_n = params["d1_over_n"]
    noise_var = params["noise_var"]
    signal_var = params["signal_var"]
    inv_values = params["inv_psi1_values"]
    ratios = _grid_values(params["rho_ratio_grid"], "rho_ratio_grid")
    with_mc = config.replications > 0
    _, reference = _fig2_strong_only_reference(rho1, d1_over_n, noise_var, signal_var)

    def ridgeless_problem(inv: float, rho2: float) -> ProblemSpec:
        psi1 = 1.0 / inv
        spectrum, source = strong_weak_model(rho1, rho2, psi1, inv, 0.0)
        return ProblemSpec(
            spectrum=spectrum,
            source=source,
            aspect_ratio=d1_over_n * inv,
            noise_var=noise_var,
            signal_var=signal_var,
        )

    curve_header = ["inv_psi1", "rho_ratio", "rho2", "total_theory"]
    if with_mc:
        curve_header += ["total_mc", "total_mc_stderr"]
    curve_rows: list[list[Any]] = []
    index = 0
    for inv in inv_values:
        for ratio in ratios:
            problem = ridgeless_problem(inv, ratio * rho1)
            br = asymptotic_risk(problem, 0.0)
            row: list[Any] = [inv, ratio, ratio * rho1, br.total]
            if with_mc:
                sim = _sim_config(
                    config, problem, 0.0, config.seed + index, dim=params["dim_ratio_curves"]
                )
                est = replicate(sim, "risk-realized", max_workers)
                row += [est.mean, est.stderr]
            curve_rows.append(row)
            index += 1

    tuned_header = ["inv_psi1", "rho2_tuned", "total_theory", "reference_total"]
    if with_mc:
        tuned_header += ["total_mc", "total_mc_stderr"]
    tuned_rows: list[list[Any]] = []
    log_lo = math.log(ratios[0])
    for inv in inv_values:
        def tuned_risk(log_ratio: float, inv: float = inv) -> float:
            return asymptotic_risk(
                ridgeless_problem(inv, math.exp(log_ratio) * rho1), 0.0
            ).total

        log_star, _ = golden_section(tuned_risk, log_lo, 0.0)
        rho2_star = math.exp(log_star) * rho1
        problem = ridgeless_problem(inv, rho2_star)
        br = asymptotic_risk(problem, 0.0)
        row: list[Any] = [inv, rho2_star, br.total, reference.total]
        if with_mc:
            sim = _sim_config(
                config, problem, 0.0, config.seed + index, dim=params["dim_tuned"]
            )
            est = replicate(sim, "risk-realized", max_workers)
            row += [est.mean, est.stderr]
        tuned_rows.append(row)
        index += 1

    files = [
        ("ridgeless-risk-vs-weak-to-strong-ratio.csv", curve_header, curve_rows),
        ("tuned-risk-vs-inverse-strong-fraction.csv", tuned_header, tuned_rows),
    ]
    notes = {
        "per_point_seed": "seed + point_index, running across both files",
        "tuning": "golden section over log(rho2/rho1) on the rho_ratio_grid range",
        "reference": "optimally tuned ridge on the strong-only spectrum at aspect d1_over_n",
    }
    return files, notes


def _fig3_files(
    config: ExperimentConfig, max_workers: int
) -> tuple[list[tuple[str, list[str], list[list[Any]]]], dict[str, Any]]:
    params = config.figure_params or {}
    psi1 = params["psi1"]
    noise_var = params["noise_var"]
    signal_var = params["signal_var"]
    gammas = _grid_values({**params["gamma_grid"], "scale": "linear"}, "gamma_grid")
    with_mc = config.replications > 0

    header = ["rho_ratio", "phi_ratio", "gamma", "v0", "bias_theory", "variance_theory"]
    if with_mc:
        header += ["bias_mc", "bias_mc_stderr", "variance_mc", "variance_mc_stderr"]
    rows: list[list[Any]] = []
    index = 0
    for rho_ratio, phi_ratio in params["curves"]:
        psi2 = 1.0 - psi1
        phi2 = 1.0 / (psi1 * phi_ratio + psi2)
        phi1 = phi_ratio * phi2
        rho2 = 1.0 / (psi1 * rho_ratio * phi1 + psi2 * phi2)
        rho1 = rho_ratio * rho2
        spectrum, source = strong_weak_model(rho1, rho2, psi1, phi1, phi2)
        for gamma in gammas:
            problem = ProblemSpec(
                spectrum=spectrum,
                source=source,
                aspect_ratio=gamma,
                noise_var=noise_var,
                signal_var=signal_var,
            )
            br = asymptotic_risk(problem, 0.0)
            row: list[Any] = [rho_ratio, phi_ratio, gamma, br.companion.v, br.bias, br.variance]
            if with_mc:
                sim = _sim_config(config, problem, 0.0, config.seed + index)
                estimates = replicate(sim, "decomposition-realized", max_workers)
                variance, bias, _ = estimates
                row += [bias.mean, bias.stderr, variance.mean, variance.stderr]
            rows.append(row)
            index += 1
    files = [("ridgeless-bias-variance-vs-aspect-ratio.csv", header, rows)]
    notes = {
        "per_point_seed": "seed + point_index over (curve, gamma)",
        "normalization": "unit signal and unit parameter norm on every curve",
    }
    return files, notes


_FIGURES = {"fig1": _fig1_files, "fig2": _fig2_files, "fig3": _fig3_files}


def _emit(
    config: ExperimentConfig,
    files: list[tuple[str, list[str], list[list[Any]]]],
    out: Path,
    notes: dict[str, Any],
) -> list[Path]:
    written: list[Path] = []
    try:
        for name, header, rows in files:
            path = out / name
            _write_csv(path, header, rows)
            written.append(path)
        sidecar = out / f"{config.label}.metadata.json"
        payload = {
            "config": config.resolved,
            "seed": config.seed,
            "outputs": [p.name for p in written],
            "notes": notes,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        written.append(sidecar)  # before open: a failed dump still creates the file
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path = ".", max_workers: int = 1
) -> list[Path]:
    """Run one experiment and return the written paths (CSV files, then the
    metadata sidecar).  Partial output is removed on failure; rerunning the
    same config and seed rewrites byte-identical CSV bodies."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.mode == "sweep":
        return sweep(config, out_dir=out, max_workers=max_workers)
    notes: dict[str, Any] = {"per_point_seed": "seed + point_index"}
    if config.mode == "risk-curve":
        files = _risk_curve_files(config, max_workers)
    elif config.mode == "optimal-lambda":
        files = _optimal_lambda_files(config, max_workers)
    elif config.mode == "mc-compare":
        files = _mc_compare_files(config, max_workers)
    elif config.mode == "figure":
        assert config.figure is not None
        files, notes = _FIGURES[config.figure](config, max_workers)
    else:
        raise ValueError(f"unknown mode {config.mode!r}")
    return _emit(config, files, out, notes)
