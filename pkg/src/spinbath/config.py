"""Scenario configuration: strict key = value files, presets, canonical form.

The file format is flat ``key = value`` with ``#`` comments; dots in keys act
as section prefixes (``reservoir.eta = 5``).  Lists are comma separated.
Unknown keys, duplicate keys, and type errors all fail loudly with
ConfigError: batch runs should never silently ignore a typo.

Every parsed scenario resolves to the same dataclass regardless of whether it
came from a file or a named preset, and ``canonical_text`` regenerates a
normalized rendering of it; the sha256 of that text is stamped into output
headers so results stay traceable to their inputs.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .reservoir import LabParams, ReservoirParams, lab_units_to_dimensionless

OUTPUT_KINDS = ("xi2", "qfi", "fidelity", "kernels", "spectral_density")
METROLOGY_OUTPUTS = ("xi2", "qfi", "fidelity")
SWEEP_PARAMETERS = ("epsilon_dd", "theta", "eta", "n_atoms", "gamma_loss_rel")

_RESERVOIR_KEYS = {
    "reservoir.eta": float,
    "reservoir.epsilon_dd": float,
    "reservoir.theta": float,
    "reservoir.ell_ratio": float,
    "reservoir.temperature": float,
}
_LAB_KEYS = {
    "lab.density": float,
    "lab.a_bath": float,
    "lab.a_cross": float,
    "lab.mass_spin_u": float,
    "lab.mass_bath_u": float,
    "lab.omega_perp": float,
    "lab.omega_spin": float,
    "lab.magnetic_moment_mub": float,
    "lab.tilt_angle": float,
    "lab.dipole_length": float,
}
_SCALAR_KEYS = {
    "scenario.gamma_loss_rel": float,
    "scenario.gamma_loss_abs": float,
    "scenario.lambda_prime": float,
    "time_grid.t_min": float,
    "time_grid.t_max": float,
    "time_grid.n_points": int,
    "time_grid.spacing": str,
    "sweep.parameter": str,
    "quadrature.abs_tol": float,
    "quadrature.k_max_sigma": float,
}
_LIST_KEYS = {"scenario.n_atoms", "sweep.values", "outputs"}
_ALL_KEYS = (set(_RESERVOIR_KEYS) | set(_LAB_KEYS) | set(_SCALAR_KEYS) | _LIST_KEYS)


@dataclass(frozen=True)
class TimeGrid:
    """Evaluation grid for kernels and metrology time series."""

    t_min: float = 1e-2
    t_max: float = 1e3
    n_points: int = 400
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in ("log", "linear"):
            raise ConfigError(f"time_grid.spacing must be log or linear, got {self.spacing!r}")
        if self.n_points < 2:
            raise ConfigError("time_grid.n_points must be at least 2")
        if not self.t_min < self.t_max:
            raise ConfigError("time_grid.t_min must be smaller than t_max")
        if self.t_min <= 0.0:
            raise ConfigError("time_grid.t_min must be positive")

    def build(self):
        if self.spacing == "log":
            return np.geomspace(self.t_min, self.t_max, self.n_points)
        return np.linspace(self.t_min, self.t_max, self.n_points)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved description of one batch run."""

    reservoir: ReservoirParams
    n_atoms: tuple = ()
    gamma_loss_rel: float = 0.0
    gamma_loss_abs: float = None
    lambda_prime: float = 0.0
    time_grid: TimeGrid = TimeGrid()
    sweep_parameter: str = None
    sweep_values: tuple = ()
    outputs: tuple = ()
    abs_tol: float = 1e-10
    k_max_sigma: float = 9.0

    def __post_init__(self):
        if not self.outputs:
            raise ConfigError("outputs must name at least one product")
        for kind in self.outputs:
            if kind not in OUTPUT_KINDS:
                raise ConfigError(f"unknown output kind {kind!r}")
        wants_metrology = any(k in METROLOGY_OUTPUTS for k in self.outputs)
        if wants_metrology and not self.n_atoms and self.sweep_parameter != "n_atoms":
            raise ConfigError("metrology outputs need scenario.n_atoms")
        for n in self.n_atoms:
            if not (isinstance(n, int) and n >= 1):
                raise ConfigError(f"n_atoms entries must be positive integers, got {n!r}")
        if self.sweep_parameter is not None:
            if self.sweep_parameter not in SWEEP_PARAMETERS:
                raise ConfigError(f"unknown sweep parameter {self.sweep_parameter!r}")
            if not self.sweep_values:
                raise ConfigError("sweep.values must be non-empty when sweeping")
            if self.sweep_parameter == "n_atoms":
                for v in self.sweep_values:
                    if v != int(v) or v < 1:
                        raise ConfigError("n_atoms sweep values must be positive integers")
        elif self.sweep_values:
            raise ConfigError("sweep.values given without sweep.parameter")
        if self.gamma_loss_rel < 0.0:
            raise ConfigError("gamma_loss_rel must be >= 0")
        if self.gamma_loss_abs is not None and self.gamma_loss_abs < 0.0:
            raise ConfigError("gamma_loss_abs must be >= 0")
        if not self.abs_tol > 0.0:
            raise ConfigError("quadrature.abs_tol must be positive")
        if not self.k_max_sigma > 0.0:
            raise ConfigError("quadrature.k_max_sigma must be positive")


def _parse_lines(text):
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        seen[key] = value
    return seen


def _convert(key, value, kind):
    try:
        if kind is float:
            return float(value)
        if kind is int:
            out = int(value)
            return out
        return value
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {value!r} as {kind.__name__}") from None


def _float_list(key, value):
    try:
        return tuple(float(part.strip()) for part in value.split(","))
    except ValueError:
        raise ConfigError(f"key {key!r}: expected comma-separated numbers, got {value!r}") from None


def _int_list(key, value):
    try:
        return tuple(int(part.strip()) for part in value.split(","))
    except ValueError:
        raise ConfigError(f"key {key!r}: expected comma-separated integers, got {value!r}") from None


def parse_config(text):
    """Parse scenario text into a ScenarioConfig; raises ConfigError on any issue."""
    raw = _parse_lines(text)
    has_reservoir = any(k in raw for k in _RESERVOIR_KEYS)
    has_lab = any(k in raw for k in _LAB_KEYS)
    if has_reservoir and has_lab:
        raise ConfigError("give either reservoir.* or lab.* keys, not both")
    if not has_reservoir and not has_lab:
        raise ConfigError("missing reservoir parameters (reservoir.* or lab.*)")

    level_shift = 0.0
    try:
        if has_reservoir:
            for req in ("reservoir.eta", "reservoir.epsilon_dd", "reservoir.theta"):
                if req not in raw:
                    raise ConfigError(f"missing required key {req!r}")
            reservoir = ReservoirParams(
                eta=_convert("reservoir.eta", raw.pop("reservoir.eta"), float),
                epsilon_dd=_convert("reservoir.epsilon_dd", raw.pop("reservoir.epsilon_dd"), float),
                theta=_convert("reservoir.theta", raw.pop("reservoir.theta"), float),
                ell_ratio=_convert("reservoir.ell_ratio", raw.pop("reservoir.ell_ratio", "1.0"), float),
                temperature=_convert("reservoir.temperature", raw.pop("reservoir.temperature", "0.0"), float),
            )
        else:
            required = [k for k in _LAB_KEYS
                        if k not in ("lab.tilt_angle", "lab.dipole_length")]
            for req in required:
                if req not in raw:
                    raise ConfigError(f"missing required key {req!r}")
            kwargs = {}
            for key in list(raw):
                if key in _LAB_KEYS:
                    kwargs[key.split(".", 1)[1]] = _convert(key, raw.pop(key), float)
            lab = LabParams(**kwargs)
            reservoir, level_shift = lab_units_to_dimensionless(lab)
    except ValueError as exc:
        raise ConfigError(f"invalid reservoir parameters: {exc}") from None

    grid_kwargs = {}
    for field in ("t_min", "t_max", "spacing"):
        key = f"time_grid.{field}"
        if key in raw:
            grid_kwargs[field] = _convert(key, raw.pop(key), _SCALAR_KEYS[key])
    if "time_grid.n_points" in raw:
        grid_kwargs["n_points"] = _convert(
            "time_grid.n_points", raw.pop("time_grid.n_points"), int
        )
    time_grid = TimeGrid(**grid_kwargs)

    sweep_parameter = raw.pop("sweep.parameter", None)
    sweep_values = ()
    if "sweep.values" in raw:
        sweep_values = _float_list("sweep.values", raw.pop("sweep.values"))
    n_atoms = ()
    if "scenario.n_atoms" in raw:
        n_atoms = _int_list("scenario.n_atoms", raw.pop("scenario.n_atoms"))
    if "outputs" not in raw:
        raise ConfigError("missing required key 'outputs'")
    outputs = tuple(part.strip() for part in raw.pop("outputs").split(","))

    gamma_loss_abs = None
    if "scenario.gamma_loss_abs" in raw:
        gamma_loss_abs = _convert(
            "scenario.gamma_loss_abs", raw.pop("scenario.gamma_loss_abs"), float
        )
    lambda_prime = level_shift
    if "scenario.lambda_prime" in raw:
        lambda_prime = _convert(
            "scenario.lambda_prime", raw.pop("scenario.lambda_prime"), float
        )

    cfg = ScenarioConfig(
        reservoir=reservoir,
        n_atoms=n_atoms,
        gamma_loss_rel=_convert(
            "scenario.gamma_loss_rel", raw.pop("scenario.gamma_loss_rel", "0.0"), float
        ),
        gamma_loss_abs=gamma_loss_abs,
        lambda_prime=lambda_prime,
        time_grid=time_grid,
        sweep_parameter=sweep_parameter,
        sweep_values=sweep_values,
        outputs=outputs,
        abs_tol=_convert(
            "quadrature.abs_tol", raw.pop("quadrature.abs_tol", "1e-10"), float
        ),
        k_max_sigma=_convert(
            "quadrature.k_max_sigma", raw.pop("quadrature.k_max_sigma", "9.0"), float
        ),
    )
    if raw:
        raise ConfigError(f"unused keys: {sorted(raw)}")
    return cfg


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(x):
    return f"{x:.12g}"


def canonical_text(cfg):
    """Normalized key = value rendering; equal configs render identically."""
    lines = {
        "reservoir.eta": _fmt(cfg.reservoir.eta),
        "reservoir.epsilon_dd": _fmt(cfg.reservoir.epsilon_dd),
        "reservoir.theta": _fmt(cfg.reservoir.theta),
        "reservoir.ell_ratio": _fmt(cfg.reservoir.ell_ratio),
        "reservoir.temperature": _fmt(cfg.reservoir.temperature),
        "scenario.gamma_loss_rel": _fmt(cfg.gamma_loss_rel),
        "scenario.lambda_prime": _fmt(cfg.lambda_prime),
        "time_grid.t_min": _fmt(cfg.time_grid.t_min),
        "time_grid.t_max": _fmt(cfg.time_grid.t_max),
        "time_grid.n_points": str(cfg.time_grid.n_points),
        "time_grid.spacing": cfg.time_grid.spacing,
        "outputs": ",".join(cfg.outputs),
        "quadrature.abs_tol": _fmt(cfg.abs_tol),
        "quadrature.k_max_sigma": _fmt(cfg.k_max_sigma),
    }
    if cfg.gamma_loss_abs is not None:
        lines["scenario.gamma_loss_abs"] = _fmt(cfg.gamma_loss_abs)
    if cfg.n_atoms:
        lines["scenario.n_atoms"] = ",".join(str(n) for n in cfg.n_atoms)
    if cfg.sweep_parameter is not None:
        lines["sweep.parameter"] = cfg.sweep_parameter
        lines["sweep.values"] = ",".join(_fmt(v) for v in cfg.sweep_values)
    return "".join(f"{k} = {lines[k]}\n" for k in sorted(lines))


def config_sha256(cfg):
    return hashlib.sha256(canonical_text(cfg).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# named presets reproducing the reference sweeps
# ---------------------------------------------------------------------------

_BASE = dict(eta=5.0, epsilon_dd=-1.0, theta=0.015, ell_ratio=1.0, temperature=0.0)
_EPS_SCAN = (-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0)
_LOSS_SCAN = (0.0, 0.001, 0.002, 0.005)


def _preset_fig2():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        outputs=("kernels", "spectral_density"),
        sweep_parameter="epsilon_dd",
        sweep_values=(-1.0, 0.0, 1.0),
        time_grid=TimeGrid(1e-2, 1e3, 400, "log"),
    )


def _preset_fig3a():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(100,),
        outputs=("xi2",),
        sweep_parameter="epsilon_dd",
        sweep_values=(-1.0, 0.0, 1.0),
        time_grid=TimeGrid(0.1, 100.0, 240, "log"),
    )


def _preset_fig3b():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(100,),
        outputs=("xi2",),
        sweep_parameter="gamma_loss_rel",
        sweep_values=(0.0, 0.002, 0.01),
        time_grid=TimeGrid(0.1, 100.0, 240, "log"),
    )


def _preset_fig4a():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(10, 30, 50),
        outputs=("qfi",),
        time_grid=TimeGrid(0.1, 1e3, 300, "log"),
    )


def _preset_fig4b():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        outputs=("qfi",),
        sweep_parameter="n_atoms",
        sweep_values=(4.0, 8.0, 16.0, 32.0, 64.0),
        time_grid=TimeGrid(0.1, 1e3, 300, "log"),
    )


def _preset_fig4c():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(100,),
        outputs=("qfi",),
        sweep_parameter="epsilon_dd",
        sweep_values=_EPS_SCAN,
        time_grid=TimeGrid(0.1, 1e3, 240, "log"),
    )


def _preset_fig5a():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(2,),
        outputs=("qfi",),
        sweep_parameter="gamma_loss_rel",
        sweep_values=_LOSS_SCAN,
        time_grid=TimeGrid(1.0, 1e3, 300, "log"),
    )


def _preset_fig5b():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(2, 4, 6, 8, 12, 16, 24, 32, 48),
        outputs=("qfi",),
        sweep_parameter="gamma_loss_rel",
        sweep_values=_LOSS_SCAN,
        time_grid=TimeGrid(1.0, 1e3, 240, "log"),
    )


def _preset_fig6a():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=(10, 30, 50),
        outputs=("fidelity",),
        sweep_parameter="epsilon_dd",
        sweep_values=_EPS_SCAN,
        time_grid=TimeGrid(1e-2, 1e3, 400, "log"),
    )


def _preset_fig6b():
    return ScenarioConfig(
        reservoir=ReservoirParams(**_BASE),
        n_atoms=tuple(range(2, 51, 4)),
        outputs=("fidelity",),
        sweep_parameter="gamma_loss_rel",
        sweep_values=_LOSS_SCAN,
        time_grid=TimeGrid(1e-2, 1e3, 400, "log"),
    )


_PRESETS = {
    "fig2": _preset_fig2,
    "fig3a": _preset_fig3a,
    "fig3b": _preset_fig3b,
    "fig4a": _preset_fig4a,
    "fig4b": _preset_fig4b,
    "fig4c": _preset_fig4c,
    "fig5a": _preset_fig5a,
    "fig5b": _preset_fig5b,
    "fig5c": _preset_fig5b,  # panels (b) and (c) come from the same dataset
    "fig6a": _preset_fig6a,
    "fig6b": _preset_fig6b,
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def figure_preset(name):
    """ScenarioConfig for a named reference sweep; see PRESET_NAMES."""
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
    return builder()
