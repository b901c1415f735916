__all__ = ["main", "run", "build_parser", "build_id", "RunOutputs"]

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from contextlib import ExitStack
from importlib import metadata
from types import TracebackType
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type

from momentchain.config import COMMANDS, ExperimentConfig, parse_config
from momentchain.exact import build_truncated, moment_series, propagate
from momentchain.exceptions import (
    ConfigFileError,
    ConfigValidationError,
    FeasibilityError,
    MomentChainError,
    ParameterError,
    error_payload,
)
from momentchain.formatter import (
    Table,
    format_feasibility,
    format_histogram,
    format_history,
    format_moments,
    format_price_mean,
    format_prices,
    format_profile,
    format_row,
    format_series,
    format_snapshot,
    format_summary,
)
from momentchain.gbm import price_paths, simulate_schedule, wasserstein_series
from momentchain.grid import Grid
from momentchain.heat import (
    embed_points,
    heat_feasibility,
    point_history,
    temperature_profile,
)
from momentchain.kernel import TransitionKernel
from momentchain.simulate import TrajectoryBatch, simulate_segments, snapshot
from momentchain.stats import EmpiricalDistribution, histogram, wasserstein1
from momentchain.utils import suppress_warning

logger = logging.getLogger(__name__)

DISTRIBUTION = "python-momentchain"


def build_id() -> str:
    """Return the installed package version, or "unknown" from a source tree."""
    try:
        return metadata.version(DISTRIBUTION)
    except metadata.PackageNotFoundError:
        return "unknown"


class RunOutputs:
    """Stages CSV files in the output directory and publishes them together.

    :param out: Output directory, created if missing.
    :type out: str
    :param comment: Text of the first comment line of every file.
    :type comment: str
    """

    def __init__(self, out: str, comment: str) -> None:
        self._out = out
        self._comment = comment
        self._staged: List[Tuple[str, str]] = []
        self.written: List[str] = []

    def __enter__(self) -> "RunOutputs":
        os.makedirs(self._out, exist_ok=True)
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        if exc_type is None:
            self.commit()
        else:
            self.discard()

    def write(self, name: str, table: Table) -> None:
        header, rows = table
        fd, temp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=self._out)
        self._staged.append((temp, os.path.join(self._out, name)))
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            handle.write(f"# {self._comment}\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        logger.debug("staged %s (%d rows)", name, len(rows))

    def commit(self) -> None:
        for temp, final in self._staged:
            os.replace(temp, final)
            self.written.append(final)
            logger.info("wrote %s", final)
        self._staged = []

    def discard(self) -> None:
        for temp, _ in self._staged:
            try:
                os.remove(temp)
            except FileNotFoundError:  # pragma: no cover
                pass
        self._staged = []


def _comment(config: ExperimentConfig) -> str:
    recorded = json.dumps(config.recorded(), sort_keys=True, separators=(",", ":"))
    return f"momentchain {build_id()} {config.command} {recorded}"


def _grid(config: ExperimentConfig) -> Grid:
    if config.grid is None:
        raise ParameterError(f"{config.command} needs a grid", "grid")
    return config.grid


def _single_kernel(config: ExperimentConfig, grid: Grid) -> TransitionKernel:
    segments = config.kernel_segments(grid)
    if len(segments) > 1:
        raise ParameterError(
            f"{config.command} runs a single kernel, the schedule has "
            f"{len(segments)} segments",
            "schedule",
        )
    return segments[0][1]


def _simulate(config: ExperimentConfig, grid: Grid) -> TrajectoryBatch:
    assert config.paths is not None
    return simulate_segments(
        grid,
        config.kernel_segments(grid),
        config.last_step,
        config.paths,
        config.seed,
        record=config.record_steps(),
        threads=config.threads,
        chunk_size=config.chunk_size,
        slack=config.feasibility_slack,
    )


def _write_snapshots(
    outputs: RunOutputs, config: ExperimentConfig, batch: TrajectoryBatch, prefix: str
) -> None:
    for k in config.k:
        outputs.write(f"{prefix}snapshot_k{k}.csv", format_snapshot(batch, k))
        if config.histogram is not None:
            hist = histogram(snapshot(batch, k), config.histogram)
            outputs.write(
                f"{prefix}histogram_k{k}.csv", format_histogram(hist, config.law(k))
            )
    laws = [config.law(k) for k in config.k]
    outputs.write(f"{prefix}summary.csv", format_summary(batch, laws, config.k))


def run_feasibility(config: ExperimentConfig, outputs: RunOutputs) -> int:
    grid = _grid(config)
    window = config.index_range or grid.index_window()
    reports = [
        (start, kernel.feasibility(window, config.feasibility_slack))
        for start, kernel in config.kernel_segments(grid)
    ]
    body = format_feasibility(reports)
    sys.stdout.write(json.dumps(body, sort_keys=True) + "\n")
    return 0 if all(r.feasible for _, r in reports) else 1


def run_propagate(config: ExperimentConfig, outputs: RunOutputs) -> int:
    grid = _grid(config)
    assert config.n is not None
    kernel = _single_kernel(config, grid)
    chain = build_truncated(grid, kernel, config.n)
    k_max = config.k_max if config.k_max is not None else config.n

    series = moment_series(chain, k_max)
    outputs.write("propagate.csv", format_moments(series, kernel.spec))
    for k in config.k:
        dist = propagate(chain, k)
        rows = [format_row(r) for r in zip(dist.indices, dist.support, dist.mass)]
        outputs.write(f"propagate_k{k}.csv", (["i", "x", "mass"], rows))
    return 0


def run_simulate(config: ExperimentConfig, outputs: RunOutputs) -> int:
    grid = _grid(config)
    batch = _simulate(config, grid)
    _write_snapshots(outputs, config, batch, "")
    return 0


def run_heat(config: ExperimentConfig, outputs: RunOutputs) -> int:
    params, n = config.heat, config.n
    assert params is not None and n is not None
    if config.grid is not None:
        grid = config.grid
    else:
        assert config.base_gap is not None
        grid = embed_points(params.points_of_interest, config.base_gap)

    report = heat_feasibility(grid, params, (-(n - 1), n - 1), config.feasibility_slack)
    if not report.feasible:
        raise FeasibilityError(report)

    for k in config.k:
        profile = temperature_profile(grid, params, n, k)
        if k > 0:
            logger.info("k=%d total variation %r", k, profile.tv_distance)
        outputs.write(f"heat_k{k}.csv", format_profile(profile))
    if params.points_of_interest:
        outputs.write("heat_points.csv", format_history(point_history(grid, params, n)))
    return 0


def run_gbm(config: ExperimentConfig, outputs: RunOutputs) -> int:
    grid, schedule = _grid(config), config.schedule
    assert schedule is not None and config.paths is not None
    batch = simulate_schedule(
        grid,
        schedule,
        config.last_step,
        config.paths,
        config.seed,
        record=config.record_steps(),
        threads=config.threads,
        chunk_size=config.chunk_size,
        slack=config.feasibility_slack,
    )
    _write_snapshots(outputs, config, batch, "gbm_")

    prices = price_paths(batch, schedule, paths=config.price_paths)
    outputs.write("gbm_prices.csv", format_prices(prices))
    outputs.write("gbm_price_mean.csv", format_price_mean(prices))
    return 0


def read_snapshot(path: str) -> EmpiricalDistribution:
    """Read the ``x`` column of a snapshot CSV, skipping comment lines.

    :param path: Snapshot CSV written by ``simulate`` or ``gbm``.
    :type path: str
    :return: Empirical distribution of the column.
    :rtype: momentchain.stats.EmpiricalDistribution
    :raise momentchain.exceptions.ConfigFileError: If the file cannot be
        read or has no ``x`` column.
    """
    try:
        with open(path, "r", newline="", encoding="utf-8") as handle:
            lines = (line for line in handle if not line.startswith("#"))
            reader = csv.DictReader(lines)
            if reader.fieldnames is None or "x" not in reader.fieldnames:
                raise ConfigFileError(f"snapshot {path} has no x column")
            samples = [float(row["x"]) for row in reader]
    except OSError as err:
        raise ConfigFileError(f"cannot read snapshot {path}: {err.strerror}")
    except ValueError as err:
        raise ConfigFileError(f"snapshot {path} holds a non-numeric value: {err}")
    return EmpiricalDistribution(samples)


def run_wasserstein(config: ExperimentConfig, outputs: RunOutputs) -> int:
    if config.snapshots:
        series = [
            (k, wasserstein1(read_snapshot(path), config.law(k), config.nodes))
            for path, k in config.snapshots
        ]
        outputs.write("wasserstein.csv", format_series(series))
        return 0

    # Every recorded step is evaluated; step 0 only when asked for.
    steps = [k for k in config.record_steps() if k > 0 or k in config.k]
    grids = config.grids or (("grid", _grid(config)),)
    for name, grid in grids:
        batch = _simulate(config, grid)
        series = wasserstein_series(batch, config.law, steps, config.nodes)
        outputs.write(f"wasserstein_{name}.csv", format_series(series))
    return 0


RUNNERS: Dict[str, Callable[[ExperimentConfig, RunOutputs], int]] = {
    "feasibility": run_feasibility,
    "propagate": run_propagate,
    "simulate": run_simulate,
    "heat": run_heat,
    "gbm": run_gbm,
    "wasserstein": run_wasserstein,
}


def run(config: ExperimentConfig) -> Tuple[int, List[str]]:
    """Run the config's subcommand and publish its output files.

    :param config: Validated config with a command.
    :type config: momentchain.config.ExperimentConfig
    :return: Exit status and the paths written.
    :rtype: (int, [str])
    :raise momentchain.exceptions.MomentChainError: If the run fails; no
        file is written in that case.
    """
    if config.command not in RUNNERS:
        raise ParameterError(f"unknown command {config.command!r}", "command")
    with RunOutputs(config.out, _comment(config)) as outputs:
        status = RUNNERS[config.command](config, outputs)
    return status, outputs.written


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}")
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with one subparser per experiment."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--seed", type=_seed, help="unsigned 64-bit seed")
    common.add_argument("--threads", type=_positive, help="worker threads")
    common.add_argument("--out", help="output directory")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="log level on standard error",
    )
    common.add_argument(
        "--quiet", action="store_true", help="silence library log messages"
    )

    parser = argparse.ArgumentParser(
        prog="momentchain",
        description="Moment-matched Markov chains on nonuniform grids",
    )
    parser.add_argument("--version", action="version", version=build_id())
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    helps = {
        "feasibility": "check the kernel inequalities on an index window",
        "propagate": "propagate the exact distribution of a truncated chain",
        "simulate": "simulate chain paths and write snapshots",
        "heat": "compare the chain to the free-space heat kernel",
        "gbm": "simulate log-returns of geometric Brownian motion",
        "wasserstein": "measure W1 to the exact law per step",
    }
    for name in COMMANDS:
        commands.add_parser(name, parents=[common], help=helps[name])
    return parser


def _emit_error(err: BaseException) -> None:
    sys.stderr.write(json.dumps(error_payload(err), sort_keys=True) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``momentchain`` command.

    :param argv: Arguments without the program name; None reads sys.argv.
    :type argv: [str] | None
    :return: Exit status.
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    with ExitStack() as stack:
        if args.quiet:
            stack.enter_context(suppress_warning("momentchain"))
        try:
            config = parse_config(args.config, args.command).with_overrides(
                seed=args.seed, threads=args.threads, out=args.out
            )
        except (ConfigFileError, ConfigValidationError) as err:
            _emit_error(err)
            return 2
        try:
            status, written = run(config)
        except (MomentChainError, OSError) as err:
            _emit_error(err)
            return 1
        logger.info("%s finished with %d files", args.command, len(written))
        return status
