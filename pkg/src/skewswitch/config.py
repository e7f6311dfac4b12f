"""TOML run configuration: one structured file describes model and commands.

A config has a required ``[model]`` table (transition matrix, per-regime
function triples, innovation laws) and optional per-command tables
``[simulate]``, ``[check]``, ``[diagnose]`` and ``[density]``. Regime
indices are 1-based everywhere in the file, matching the public API.

Example
-------
::

    [model]
    transition_matrix = [[0.9, 0.1], [0.2, 0.8]]
    eps = "standard-normal"
    iota = { family = "standardized-student-t", nu = 10 }

    [[model.regimes]]
    m = { family = "affine", intercept = 0.0, slope = 0.3 }
    sigma = { family = "constant", value = 1.0 }
    a = { family = "constant", value = 0.1 }

    [[model.regimes]]
    m = { family = "affine", intercept = 0.0, slope = 1.1 }
    sigma = { family = "constant", value = 1.0 }
    a = { family = "constant", value = 0.1 }

    [simulate]
    n = 1000
    replications = 2
    init_regime = 1
    init_x = 0.0
    seed = 42

Every semantic failure raises :class:`ConfigError` carrying the dotted
field path (and the parser's line/column for syntax errors), so the CLI
can exit with a located message instead of a traceback.
"""

from dataclasses import dataclass, field
import hashlib
import math
from typing import Optional, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, SkewSwitchError
from .markov import validate_transition_matrix
from .model import (
    FAMILIES,
    INNOVATION_FAMILIES,
    InnovationSpec,
    ModelSpec,
    Regime,
    RegimeFunction,
)

_FUNCTION_PARAMS = {
    "constant": ("value",),
    "affine": ("intercept", "slope"),
    "affine-abs": ("intercept", "slope"),
    "saturating": ("scale", "offset"),
}


def _require_table(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"expected a table, got {type(value).__name__}", path)
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path)
    if not math.isfinite(float(value)):
        raise ConfigError(f"value must be finite, got {value!r}", path)
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path)
    return value


def _reject_unknown(table: dict, known: Tuple[str, ...], path: str) -> None:
    for key in table:
        if key not in known:
            raise ConfigError(
                f"unknown key {key!r} (expected one of {', '.join(known)})", path
            )


def _parse_regime_function(value, path: str) -> RegimeFunction:
    table = _require_table(value, path)
    family = table.get("family")
    if family not in FAMILIES:
        raise ConfigError(
            f"family must be one of {', '.join(FAMILIES)}, got {family!r}",
            f"{path}.family",
        )
    param_names = _FUNCTION_PARAMS[family]
    _reject_unknown(table, ("family",) + param_names, path)
    params = []
    for name in param_names:
        if name not in table:
            raise ConfigError(f"{family} needs a {name!r} parameter", f"{path}.{name}")
        params.append(_number(table[name], f"{path}.{name}"))
    try:
        return RegimeFunction(family, tuple(params))
    except ValueError as exc:
        raise ConfigError(str(exc), path) from exc


def _parse_innovation(value, path: str) -> InnovationSpec:
    if isinstance(value, str):
        value = {"family": value}
    table = _require_table(value, path)
    family = table.get("family")
    if family not in INNOVATION_FAMILIES:
        raise ConfigError(
            f"family must be one of {', '.join(INNOVATION_FAMILIES)}, got {family!r}",
            f"{path}.family",
        )
    _reject_unknown(table, ("family", "nu"), path)
    nu = table.get("nu")
    if nu is not None:
        nu = _number(nu, f"{path}.nu")
    try:
        return InnovationSpec(family, nu)
    except ValueError as exc:
        raise ConfigError(str(exc), path) from exc


def _parse_model(value, path: str = "model") -> ModelSpec:
    table = _require_table(value, path)
    _reject_unknown(table, ("transition_matrix", "regimes", "eps", "iota"), path)
    for key in ("transition_matrix", "regimes", "eps", "iota"):
        if key not in table:
            raise ConfigError(f"missing required key {key!r}", f"{path}.{key}")
    try:
        tm = validate_transition_matrix(table["transition_matrix"])
    except (SkewSwitchError, ValueError) as exc:
        raise ConfigError(str(exc), f"{path}.transition_matrix") from exc
    regimes_value = table["regimes"]
    if not isinstance(regimes_value, list) or not regimes_value:
        raise ConfigError(
            "regimes must be a nonempty array of tables ([[model.regimes]])",
            f"{path}.regimes",
        )
    regimes = []
    for idx, entry in enumerate(regimes_value):
        rpath = f"{path}.regimes[{idx + 1}]"
        rtable = _require_table(entry, rpath)
        _reject_unknown(rtable, ("m", "sigma", "a"), rpath)
        parts = {}
        for role in ("m", "sigma", "a"):
            if role not in rtable:
                raise ConfigError(f"missing function {role!r}", f"{rpath}.{role}")
            parts[role] = _parse_regime_function(rtable[role], f"{rpath}.{role}")
        try:
            regimes.append(Regime(parts["m"], parts["sigma"], parts["a"]))
        except ValueError as exc:
            raise ConfigError(str(exc), rpath) from exc
    eps = _parse_innovation(table["eps"], f"{path}.eps")
    iota = _parse_innovation(table["iota"], f"{path}.iota")
    try:
        return ModelSpec(tm, tuple(regimes), eps, iota)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), path) from exc


def _parse_grid(value, path: str, spacing: str = "linear") -> np.ndarray:
    """A grid is either an explicit number array or {start, stop, count}.

    Table form supports ``spacing = "linear" | "log"`` (log requires
    positive endpoints and spaces the points in log10).
    """
    if isinstance(value, list):
        if not value:
            raise ConfigError("grid list must be nonempty", path)
        return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])
    table = _require_table(value, path)
    _reject_unknown(table, ("start", "stop", "count", "spacing"), path)
    for key in ("start", "stop", "count"):
        if key not in table:
            raise ConfigError(f"grid table needs {key!r}", f"{path}.{key}")
    start = _number(table["start"], f"{path}.start")
    stop = _number(table["stop"], f"{path}.stop")
    count = _integer(table["count"], f"{path}.count")
    if count < 2:
        raise ConfigError("count must be at least 2", f"{path}.count")
    spacing = table.get("spacing", spacing)
    if spacing == "linear":
        return np.linspace(start, stop, count)
    if spacing == "log":
        if start <= 0.0 or stop <= 0.0:
            raise ConfigError("log spacing needs positive endpoints", path)
        return np.logspace(math.log10(start), math.log10(stop), count)
    raise ConfigError(
        f"spacing must be 'linear' or 'log', got {spacing!r}", f"{path}.spacing"
    )


@dataclass(frozen=True)
class SimulateConfig:
    n: int
    replications: int = 1
    init_regime: int = 1
    init_x: float = 0.0
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class CheckConfig:
    magnitudes: Optional[np.ndarray] = None
    margin: float = 0.01


@dataclass(frozen=True)
class DiagnoseConfig:
    lags: np.ndarray = field(default_factory=lambda: np.arange(0, 41))
    replications: int = 2000
    x0: Tuple[float, ...] = (50.0,)
    seed: int = 0
    reference_length: int = 10**6
    burn_in: int = 10**5
    slack: float = 0.05
    max_lag: int = 50
    n_batches: int = 25
    workers: int = 1


@dataclass(frozen=True)
class DensityConfig:
    regime: int
    x: float
    u: np.ndarray


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: the model plus optional per-command blocks."""

    model: ModelSpec
    simulate: Optional[SimulateConfig]
    check: CheckConfig
    diagnose: DiagnoseConfig
    density: Optional[DensityConfig]
    sha256: str
    source: Optional[str] = None


def _parse_simulate(value, path: str = "simulate") -> SimulateConfig:
    table = _require_table(value, path)
    _reject_unknown(
        table, ("n", "replications", "init_regime", "init_x", "seed", "workers"), path
    )
    if "n" not in table:
        raise ConfigError("simulate needs the path length 'n'", f"{path}.n")
    n = _integer(table["n"], f"{path}.n")
    if n < 1:
        raise ConfigError("n must be at least 1", f"{path}.n")
    replications = _integer(table.get("replications", 1), f"{path}.replications")
    if replications < 1:
        raise ConfigError("replications must be at least 1", f"{path}.replications")
    init_regime = _integer(table.get("init_regime", 1), f"{path}.init_regime")
    init_x = _number(table.get("init_x", 0.0), f"{path}.init_x")
    seed = _integer(table.get("seed", 0), f"{path}.seed")
    workers = _integer(table.get("workers", 1), f"{path}.workers")
    if workers < 1:
        raise ConfigError("workers must be at least 1", f"{path}.workers")
    return SimulateConfig(n, replications, init_regime, init_x, seed, workers)


def _parse_check(value, path: str = "check") -> CheckConfig:
    table = _require_table(value, path)
    _reject_unknown(table, ("magnitudes", "margin"), path)
    magnitudes = None
    if "magnitudes" in table:
        magnitudes = _parse_grid(table["magnitudes"], f"{path}.magnitudes", "log")
    margin = _number(table.get("margin", 0.01), f"{path}.margin")
    if not 0.0 < margin < 1.0:
        raise ConfigError("margin must be in (0, 1)", f"{path}.margin")
    return CheckConfig(magnitudes, margin)


def _parse_diagnose(value, path: str = "diagnose") -> DiagnoseConfig:
    table = _require_table(value, path)
    _reject_unknown(
        table,
        (
            "lags",
            "replications",
            "x0",
            "seed",
            "reference_length",
            "burn_in",
            "slack",
            "max_lag",
            "n_batches",
            "workers",
        ),
        path,
    )
    defaults = DiagnoseConfig()
    if "lags" in table:
        lags_value = table["lags"]
        if isinstance(lags_value, list):
            lags = np.array(
                [_integer(v, f"{path}.lags[{i}]") for i, v in enumerate(lags_value)],
                dtype=np.int64,
            )
        else:
            ltable = _require_table(lags_value, f"{path}.lags")
            _reject_unknown(ltable, ("start", "stop"), f"{path}.lags")
            start = _integer(ltable.get("start", 0), f"{path}.lags.start")
            stop = _integer(ltable.get("stop", 40), f"{path}.lags.stop")
            if stop < start:
                raise ConfigError("lags stop must be >= start", f"{path}.lags")
            lags = np.arange(start, stop + 1, dtype=np.int64)
        if lags.size == 0 or lags.min() < 0:
            raise ConfigError("lags must be nonnegative and nonempty", f"{path}.lags")
    else:
        lags = defaults.lags
    replications = _integer(
        table.get("replications", defaults.replications), f"{path}.replications"
    )
    if replications < 2:
        raise ConfigError("replications must be at least 2", f"{path}.replications")
    x0_value = table.get("x0", list(defaults.x0))
    if not isinstance(x0_value, list) or not x0_value:
        raise ConfigError("x0 must be a nonempty list of numbers", f"{path}.x0")
    x0 = tuple(_number(v, f"{path}.x0[{i}]") for i, v in enumerate(x0_value))
    seed = _integer(table.get("seed", defaults.seed), f"{path}.seed")
    reference_length = _integer(
        table.get("reference_length", defaults.reference_length),
        f"{path}.reference_length",
    )
    burn_in = _integer(table.get("burn_in", defaults.burn_in), f"{path}.burn_in")
    if reference_length < 1000:
        raise ConfigError(
            "reference_length must be at least 1000", f"{path}.reference_length"
        )
    if burn_in < 0:
        raise ConfigError("burn_in must be nonnegative", f"{path}.burn_in")
    slack = _number(table.get("slack", defaults.slack), f"{path}.slack")
    if not 0.0 < slack < 1.0:
        raise ConfigError("slack must be in (0, 1)", f"{path}.slack")
    max_lag = _integer(table.get("max_lag", defaults.max_lag), f"{path}.max_lag")
    if max_lag < 1:
        raise ConfigError("max_lag must be at least 1", f"{path}.max_lag")
    n_batches = _integer(table.get("n_batches", defaults.n_batches), f"{path}.n_batches")
    workers = _integer(table.get("workers", defaults.workers), f"{path}.workers")
    if workers < 1:
        raise ConfigError("workers must be at least 1", f"{path}.workers")
    return DiagnoseConfig(
        lags,
        replications,
        x0,
        seed,
        reference_length,
        burn_in,
        slack,
        max_lag,
        n_batches,
        workers,
    )


def _parse_density(value, path: str = "density") -> DensityConfig:
    table = _require_table(value, path)
    _reject_unknown(table, ("regime", "x", "u"), path)
    if "regime" not in table:
        raise ConfigError("density needs a 1-based 'regime' index", f"{path}.regime")
    if "x" not in table:
        raise ConfigError("density needs the conditioning value 'x'", f"{path}.x")
    if "u" not in table:
        raise ConfigError("density needs an evaluation grid 'u'", f"{path}.u")
    regime = _integer(table["regime"], f"{path}.regime")
    if regime < 1:
        raise ConfigError("regime indices are 1-based", f"{path}.regime")
    x = _number(table["x"], f"{path}.x")
    u = _parse_grid(table["u"], f"{path}.u")
    return DensityConfig(regime, x, u)


def parse_run_config(data: dict, sha256: str = "", source: Optional[str] = None) -> RunConfig:
    """Build a RunConfig from already-decoded TOML data."""
    table = _require_table(data, "<root>")
    _reject_unknown(
        table, ("model", "simulate", "check", "diagnose", "density"), "<root>"
    )
    if "model" not in table:
        raise ConfigError("config needs a [model] table", "model")
    model = _parse_model(table["model"])
    regime_bound = model.n_regimes
    simulate = _parse_simulate(table["simulate"]) if "simulate" in table else None
    if simulate is not None and not 1 <= simulate.init_regime <= regime_bound:
        raise ConfigError(
            f"init_regime must be in 1..{regime_bound}", "simulate.init_regime"
        )
    check = _parse_check(table["check"]) if "check" in table else CheckConfig()
    diagnose = (
        _parse_diagnose(table["diagnose"]) if "diagnose" in table else DiagnoseConfig()
    )
    density = _parse_density(table["density"]) if "density" in table else None
    if density is not None and not 1 <= density.regime <= regime_bound:
        raise ConfigError(
            f"regime must be in 1..{regime_bound}", "density.regime"
        )
    return RunConfig(model, simulate, check, diagnose, density, sha256, source)


def loads(text: str, source: Optional[str] = None) -> RunConfig:
    """Parse TOML text into a RunConfig (syntax errors become ConfigError)."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}", source or "<string>") from exc
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return parse_run_config(data, digest, source)


def load_config(path: str) -> RunConfig:
    """Read and parse a TOML config file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not valid UTF-8: {exc}", path) from exc
    return loads(text, source=path)
