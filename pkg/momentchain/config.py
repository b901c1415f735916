__all__ = [
    "ExperimentConfig",
    "COMMANDS",
    "DEFAULTS",
    "parse_config",
    "parse_dict",
]

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from momentchain.exceptions import (
    ConfigFileError,
    ConfigValidationError,
    MomentChainError,
    ParameterError,
)
from momentchain.gbm import CoefficientSchedule, GbmParams, gbm_kernel
from momentchain.grid import Grid, grid_from_json
from momentchain.heat import HeatParams, heat_kernel
from momentchain.kernel import MomentSpec, TransitionKernel
from momentchain.stats import NormalLaw
from momentchain.typings import FloatArray, Json

logger = logging.getLogger(__name__)

COMMANDS = ("feasibility", "propagate", "simulate", "heat", "gbm", "wasserstein")

DEFAULTS: Json = {
    "seed": 0,
    "threads": 1,
    "chunk_size": 1024,
    "nodes": 4096,
    "feasibility_slack": 0.0,
    "price_paths": 20,
    "out": "results",
}

# Settings that change how a run executes but never what it writes.
EXECUTION_KEYS = ("threads", "chunk_size", "out")

_GRID_KEYS = {
    "uniform": ("h",),
    "two_sided": ("slope_neg", "slope_pos"),
    "explicit": ("points", "h_left", "h_right"),
}

_TOP_LEVEL = frozenset(
    [
        "grid",
        "grids",
        "moments",
        "heat",
        "gbm",
        "schedule",
        "n",
        "k",
        "k_max",
        "paths",
        "record_every",
        "index_range",
        "histogram",
        "snapshots",
        *DEFAULTS,
    ]
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters.

    ``resolved`` holds the config as JSON with defaults and overrides
    applied; it is what output files record.
    """

    command: Optional[str] = None
    grid: Optional[Grid] = None
    grids: Tuple[Tuple[str, Grid], ...] = ()
    moments: Optional[MomentSpec] = None
    heat: Optional[HeatParams] = None
    base_gap: Optional[float] = None
    schedule: Optional[CoefficientSchedule] = None
    n: Optional[int] = None
    k: Tuple[int, ...] = ()
    k_max: Optional[int] = None
    paths: Optional[int] = None
    record_every: Optional[int] = None
    index_range: Optional[Tuple[int, int]] = None
    histogram: Optional[FloatArray] = None
    snapshots: Tuple[Tuple[str, int], ...] = ()
    seed: int = 0
    threads: int = 1
    chunk_size: int = 1024
    nodes: int = 4096
    feasibility_slack: float = 0.0
    price_paths: int = 20
    out: str = "results"
    resolved: Json = field(default_factory=dict, compare=False)

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Return a copy with global settings replaced (None values skipped).

        :return: Updated config.
        :rtype: momentchain.config.ExperimentConfig
        :raise momentchain.exceptions.ConfigValidationError: If an override
            is invalid.
        """
        given = {key: value for key, value in overrides.items() if value is not None}
        if not given:
            return self
        checker = _Checker()
        checker.check_globals(given)
        checker.raise_errors()
        return replace(self, resolved={**self.resolved, **given}, **given)

    def recorded(self) -> Json:
        """Return the resolved config without execution-only settings."""
        return {k: v for k, v in self.resolved.items() if k not in EXECUTION_KEYS}

    @property
    def source(self) -> str:
        """Return which block drives the chain: moments, gbm or heat."""
        if self.moments is not None:
            return "moments"
        if self.schedule is not None:
            return "gbm"
        if self.heat is not None:
            return "heat"
        raise ParameterError("config has no moments, gbm or heat block", "moments")

    def kernel_segments(self, grid: Grid) -> List[Tuple[int, TransitionKernel]]:
        """Return the ``(start_step, kernel)`` segments driving the chain."""
        source = self.source
        if source == "moments":
            assert self.moments is not None
            return [(0, TransitionKernel(grid, self.moments))]
        if source == "gbm":
            assert self.schedule is not None
            return [(start, gbm_kernel(grid, p)) for start, p in self.schedule.segments]
        assert self.heat is not None
        return [(0, heat_kernel(grid, self.heat))]

    def law(self, k: int) -> NormalLaw:
        """Return the exact normal law the chain approximates after k steps."""
        source = self.source
        if source == "moments":
            assert self.moments is not None
            return NormalLaw(self.moments.M * k, self.moments.V * k)
        if source == "gbm":
            assert self.schedule is not None
            return self.schedule.law(k)
        assert self.heat is not None
        return self.heat.law(k)

    @property
    def last_step(self) -> int:
        """Return k_max, or the largest requested step if k_max is not set."""
        if self.k_max is not None:
            return self.k_max
        return max(self.k, default=0)

    def record_steps(self) -> List[int]:
        """Return the steps to store during a simulation."""
        steps = set(self.k)
        if self.record_every is not None:
            steps.update(range(0, self.last_step + 1, self.record_every))
        return sorted(steps)


class _Checker:
    """Collects validation errors while converting config blocks."""

    def __init__(self) -> None:
        self.errors: List[Tuple[str, str]] = []

    def fail(self, path: str, message: str) -> None:
        self.errors.append((path, message))

    def raise_errors(self) -> None:
        if self.errors:
            raise ConfigValidationError(self.errors)

    def block(self, value: Any, path: str, allowed: Sequence[str]) -> Optional[Json]:
        if not isinstance(value, dict):
            self.fail(path, "must be an object")
            return None
        for key in value:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else key, "unknown key")
        return value

    def require(self, data: Json, path: str, keys: Sequence[str]) -> bool:
        missing = [key for key in keys if key not in data]
        for key in missing:
            self.fail(f"{path}.{key}" if path else key, "missing required key")
        return not missing

    def real(self, value: Any, path: str, minimum: Optional[float] = None) -> bool:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, "must be a number")
            return False
        if not np.isfinite(value):
            self.fail(path, "must be finite")
            return False
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum!r}")
            return False
        return True

    def integer(self, value: Any, path: str, minimum: int = 0) -> bool:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, "must be an integer")
            return False
        if value < minimum:
            self.fail(path, f"must be >= {minimum}")
            return False
        return True

    def build(self, path: str, factory: Any, *args: Any) -> Any:
        """Call factory, turning parameter errors into field errors."""
        try:
            return factory(*args)
        except ParameterError as err:
            leaf = path.rsplit(".", 1)[-1]
            where = f"{path}.{err.field}" if err.field not in (None, leaf) else path
            self.fail(where, err.message)
        except MomentChainError as err:
            self.fail(path, err.message)
        return None

    def check_globals(self, data: Json) -> None:
        for key in ("seed", "threads", "chunk_size", "nodes", "price_paths"):
            if key in data:
                minimum = {"threads": 1, "chunk_size": 1, "nodes": 2}.get(key, 0)
                if self.integer(data[key], key, minimum) and key == "seed":
                    if data[key] >= 1 << 64:
                        self.fail("seed", "must fit in 64 unsigned bits")
        if "feasibility_slack" in data:
            self.real(data["feasibility_slack"], "feasibility_slack", 0.0)
        if "out" in data and not (isinstance(data["out"], str) and data["out"]):
            self.fail("out", "must be a non-empty string")

    def grid(self, value: Any, path: str, extra: Sequence[str] = ()) -> Optional[Grid]:
        spec = self.block(value, path, ("kind", *extra, *sum(_GRID_KEYS.values(), ())))
        if spec is None:
            return None
        kind = spec.get("kind")
        if kind not in _GRID_KEYS:
            self.fail(f"{path}.kind", f"must be one of {sorted(_GRID_KEYS)}")
            return None
        for key in spec:
            if key not in ("kind", *extra, *_GRID_KEYS[kind]):
                self.fail(f"{path}.{key}", f"not a parameter of {kind} grids")
        if not self.require(spec, path, _GRID_KEYS[kind]):
            return None
        grid: Optional[Grid] = self.build(path, grid_from_json, spec)
        return grid

    def steps(self, value: Any, path: str) -> Tuple[int, ...]:
        if not isinstance(value, list) or not value:
            self.fail(path, "must be a non-empty list of steps")
            return ()
        good = [self.integer(k, f"{path}[{j}]") for j, k in enumerate(value)]
        return tuple(sorted(set(value))) if all(good) else ()


def _read(path: str) -> Json:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise ConfigFileError(f"cannot read config {path}: {err.strerror}")
    except json.JSONDecodeError as err:
        raise ConfigFileError(
            f"config {path} is not valid JSON (line {err.lineno}): {err.msg}"
        )
    if not isinstance(data, dict):
        raise ConfigFileError(f"config {path} must hold a JSON object")
    return data


def _parse_moments(checker: _Checker, value: Any) -> Optional[MomentSpec]:
    block = checker.block(value, "moments", ("M", "V"))
    if block is None or not checker.require(block, "moments", ("M", "V")):
        return None
    if checker.real(block["M"], "moments.M") and checker.real(block["V"], "moments.V"):
        spec: Optional[MomentSpec] = checker.build(
            "moments", MomentSpec, block["M"], block["V"]
        )
        return spec
    return None


def _parse_heat(
    checker: _Checker, value: Any
) -> Tuple[Optional[HeatParams], Optional[float]]:
    block = checker.block(value, "heat", ("alpha", "tau", "points", "base_gap"))
    if block is None or not checker.require(block, "heat", ("alpha", "tau")):
        return None, None
    points = block.get("points", [])
    if not isinstance(points, list):
        checker.fail("heat.points", "must be a list of numbers")
        points = []
    ok = all(checker.real(p, f"heat.points[{j}]") for j, p in enumerate(points))
    base_gap = block.get("base_gap")
    if base_gap is not None:
        if not checker.real(base_gap, "heat.base_gap"):
            base_gap = None
        elif base_gap <= 0:
            checker.fail("heat.base_gap", "must be positive")
            base_gap = None
    if not ok:
        return None, base_gap
    params = checker.build(
        "heat", HeatParams, block["alpha"], block["tau"], tuple(points)
    )
    return params, base_gap


def _parse_schedule(
    checker: _Checker, gbm: Any, changes: Any
) -> Optional[CoefficientSchedule]:
    block = checker.block(gbm, "gbm", ("mu", "sigma2", "s0", "tau"))
    required = ("mu", "sigma2", "s0", "tau")
    if block is None or not checker.require(block, "gbm", required):
        return None
    first = checker.build(
        "gbm", GbmParams, block["mu"], block["sigma2"], block["s0"], block["tau"]
    )
    if first is None:
        return None

    segments: List[Tuple[int, GbmParams]] = [(0, first)]
    if changes is not None:
        if not isinstance(changes, list):
            checker.fail("schedule", "must be a list of coefficient changes")
            return None
        for j, entry in enumerate(changes):
            path = f"schedule[{j}]"
            change = checker.block(entry, path, ("start", "mu", "sigma2"))
            if change is None or not checker.require(change, path, ("start",)):
                continue
            if not checker.integer(change["start"], f"{path}.start", 1):
                continue
            params = checker.build(
                path,
                GbmParams,
                change.get("mu", first.mu),
                change.get("sigma2", first.sigma2),
                first.s0,
                first.tau,
            )
            if params is not None:
                segments.append((change["start"], params))
    schedule: Optional[CoefficientSchedule] = checker.build(
        "schedule", CoefficientSchedule, segments
    )
    return schedule


def _parse_histogram(checker: _Checker, value: Any) -> Optional[FloatArray]:
    block = checker.block(value, "histogram", ("low", "high", "bins"))
    required = ("low", "high", "bins")
    if block is None or not checker.require(block, "histogram", required):
        return None
    ok = checker.real(block["low"], "histogram.low")
    ok = checker.real(block["high"], "histogram.high") and ok
    ok = checker.integer(block["bins"], "histogram.bins", 1) and ok
    if not ok:
        return None
    if block["high"] <= block["low"]:
        checker.fail("histogram.high", "must exceed histogram.low")
        return None
    edges: FloatArray = np.linspace(block["low"], block["high"], block["bins"] + 1)
    return edges


def _parse_grids(checker: _Checker, value: Any) -> Tuple[Tuple[str, Grid], ...]:
    if not isinstance(value, list) or not value:
        checker.fail("grids", "must be a non-empty list of named grids")
        return ()
    grids = []
    names = set()
    for j, entry in enumerate(value):
        path = f"grids[{j}]"
        name = entry.get("name") if isinstance(entry, dict) else None
        if not isinstance(name, str) or not name:
            checker.fail(f"{path}.name", "must be a non-empty string")
            continue
        if name in names:
            checker.fail(f"{path}.name", f"duplicate grid name {name!r}")
        names.add(name)
        grid = checker.grid(entry, path, extra=("name",))
        if grid is not None:
            grids.append((name, grid))
    return tuple(grids)


def _parse_snapshots(checker: _Checker, value: Any) -> Tuple[Tuple[str, int], ...]:
    if not isinstance(value, list) or not value:
        checker.fail("snapshots", "must be a non-empty list")
        return ()
    result = []
    for j, entry in enumerate(value):
        path = f"snapshots[{j}]"
        block = checker.block(entry, path, ("path", "k"))
        if block is None or not checker.require(block, path, ("path", "k")):
            continue
        if not isinstance(block["path"], str):
            checker.fail(f"{path}.path", "must be a string")
        elif checker.integer(block["k"], f"{path}.k"):
            result.append((block["path"], block["k"]))
    return tuple(result)


_REQUIRED = {
    "feasibility": ("grid",),
    "propagate": ("grid", "n"),
    "simulate": ("grid", "paths", "k"),
    "heat": ("n", "k"),
    "gbm": ("grid", "gbm", "paths", "k"),
    "wasserstein": (),
}


def _check_command(checker: _Checker, data: Json, command: str) -> None:
    for key in _REQUIRED[command]:
        if key not in data:
            checker.fail(key, f"required by the {command} command")

    if command in ("feasibility", "propagate", "simulate", "wasserstein"):
        if not any(key in data for key in ("moments", "gbm", "heat")):
            checker.fail("moments", f"{command} needs a moments, gbm or heat block")
    if command == "heat":
        if "heat" not in data:
            checker.fail("heat", "required by the heat command")
        elif "grid" not in data and not (
            isinstance(data["heat"], dict) and "base_gap" in data["heat"]
        ):
            checker.fail("grid", "heat needs a grid or heat.base_gap")
    if command == "wasserstein":
        if "grid" not in data and "grids" not in data and "snapshots" not in data:
            checker.fail("grids", "wasserstein needs grid, grids or snapshots")
        if "snapshots" not in data:
            for key in ("paths", "k"):
                if key not in data:
                    checker.fail(key, "required to simulate inline")


def parse_dict(data: Json, command: Optional[str] = None) -> ExperimentConfig:
    """Validate a decoded config.

    :param data: Decoded JSON object.
    :type data: dict
    :param command: Subcommand whose required blocks are enforced; None
        checks the blocks present only.
    :type command: str | None
    :return: Validated config.
    :rtype: momentchain.config.ExperimentConfig
    :raise momentchain.exceptions.ConfigValidationError: Listing every
        invalid field.
    """
    checker = _Checker()
    if command is not None and command not in COMMANDS:
        checker.fail("command", f"must be one of {list(COMMANDS)}")
        checker.raise_errors()

    for key in data:
        if key not in _TOP_LEVEL:
            checker.fail(key, "unknown key")
    checker.check_globals(data)
    if command is not None:
        _check_command(checker, data, command)

    values: Dict[str, Any] = {}
    if "grid" in data:
        values["grid"] = checker.grid(data["grid"], "grid")
    if "grids" in data:
        values["grids"] = _parse_grids(checker, data["grids"])
    if "moments" in data:
        values["moments"] = _parse_moments(checker, data["moments"])
    if "heat" in data:
        values["heat"], values["base_gap"] = _parse_heat(checker, data["heat"])
    if "gbm" in data:
        values["schedule"] = _parse_schedule(checker, data["gbm"], data.get("schedule"))
    elif "schedule" in data:
        checker.fail("schedule", "needs a gbm block with the initial coefficients")
    for key, minimum in (("n", 1), ("k_max", 0), ("paths", 1), ("record_every", 1)):
        if key in data and checker.integer(data[key], key, minimum):
            values[key] = data[key]
    if "k" in data:
        values["k"] = checker.steps(data["k"], "k")
    if "index_range" in data:
        window = data["index_range"]
        if (
            isinstance(window, list)
            and len(window) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in window)
        ):
            if window[0] > window[1]:
                checker.fail("index_range", "low must not exceed high")
            values["index_range"] = (window[0], window[1])
        else:
            checker.fail("index_range", "must be a [low, high] pair of integers")
    if "histogram" in data:
        values["histogram"] = _parse_histogram(checker, data["histogram"])
    if "snapshots" in data:
        values["snapshots"] = _parse_snapshots(checker, data["snapshots"])

    k_values = values.get("k", ())
    n = values.get("n")
    if command == "heat" and n is not None and k_values and max(k_values) > n:
        checker.fail("k", f"steps must not exceed n={n}")

    checker.raise_errors()

    resolved = {**DEFAULTS, **data}
    settings = {key: resolved[key] for key in DEFAULTS}
    return ExperimentConfig(
        command=command,
        resolved=resolved,
        **settings,
        **{key: value for key, value in values.items() if value is not None},
    )


def parse_config(path: str, command: Optional[str] = None) -> ExperimentConfig:
    """Read and validate a JSON config file.

    :param path: Config file path.
    :type path: str
    :param command: Subcommand whose required blocks are enforced.
    :type command: str | None
    :return: Validated config with defaults filled in.
    :rtype: momentchain.config.ExperimentConfig
    :raise momentchain.exceptions.ConfigFileError: If the file is missing or
        is not a JSON object.
    :raise momentchain.exceptions.ConfigValidationError: Listing every
        invalid field.
    """
    data = _read(path)
    config = parse_dict(data, command)
    logger.debug("parsed config %s for %s", path, command)
    return config
