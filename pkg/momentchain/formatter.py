from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from momentchain.exact import MomentSeries
from momentchain.gbm import PricePaths
from momentchain.heat import HeatProfile, PointHistory
from momentchain.kernel import FeasibilityReport, MomentSpec
from momentchain.simulate import TrajectoryBatch, snapshot
from momentchain.stats import Histogram, NormalLaw, normal_pdf
from momentchain.typings import Json

Row = List[str]
Table = Tuple[Row, List[Row]]


def format_real(value: Any) -> str:
    """Format a real with the shortest repr that round-trips exactly.

    :param value: Real number.
    :type value: float
    :return: Decimal text (``nan`` and ``inf`` kept as is).
    :rtype: str
    """
    return repr(float(value))


def format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_real(value)


def format_row(values: Iterable[Any]) -> Row:
    return [format_cell(v) for v in values]


def format_feasibility(
    reports: Sequence[Tuple[int, FeasibilityReport]]
) -> Json:
    """Format feasibility reports of one or more kernel segments.

    :param reports: ``(start_step, report)`` pairs.
    :type reports: [(int, momentchain.kernel.FeasibilityReport)]
    :return: Report body; a single segment is reported flat.
    :rtype: dict
    """
    if len(reports) == 1:
        return reports[0][1].to_json()
    return {
        "feasible": all(r.feasible for _, r in reports),
        "segments": [{"start": start, **r.to_json()} for start, r in reports],
    }


def format_moments(series: MomentSeries, spec: MomentSpec) -> Table:
    """Format exact propagation moments, one row per step."""
    header = ["k", "mean", "variance", "mass_at_boundary", "max_recurrence_residual"]
    residuals = series.step_residuals(spec)
    rows = [
        format_row((k, mean, var, boundary, residual))
        for k, (mean, var, boundary, residual) in enumerate(
            zip(series.mean, series.variance, series.boundary, residuals)
        )
    ]
    return header, rows


def format_profile(profile: HeatProfile) -> Table:
    """Format a heat profile, one row per state."""
    header = [
        "i",
        "x",
        "mass",
        "density_estimate",
        "analytic_density",
        "analytic_cell_mass",
        "abs_error",
    ]
    columns = zip(
        profile.indices,
        profile.x,
        profile.mass,
        profile.density_estimate,
        profile.analytic_density,
        profile.analytic_cell_mass,
        profile.abs_error,
    )
    return header, [format_row(c) for c in columns]


def format_history(history: PointHistory) -> Table:
    """Format the mass at each point of interest over time."""
    header = ["k", "time"] + [f"x={format_real(p)}" for p in history.points]
    rows = [
        format_row((k, t, *masses))
        for k, (t, masses) in enumerate(zip(history.times, history.mass))
    ]
    return header, rows


def format_snapshot(batch: TrajectoryBatch, k: int) -> Table:
    """Format the state of every path at step k."""
    indices = batch.indices_at(k)
    coordinates = batch.grid.points(indices)
    rows = [format_row((p, i, x)) for p, (i, x) in enumerate(zip(indices, coordinates))]
    return ["path", "i", "x"], rows


def format_histogram(hist: Histogram, law: Optional[NormalLaw] = None) -> Table:
    """Format histogram bins, with the analytic density at bin centers."""
    header = ["lower", "upper", "count", "density"]
    columns: List[Any] = [hist.edges[:-1], hist.edges[1:], hist.counts, hist.density]
    if law is not None and law.variance > 0.0:
        header.append("analytic_density")
        columns.append(normal_pdf(hist.centers, law))
    rows = [
        format_row((lo, hi, int(count), *rest))
        for lo, hi, count, *rest in zip(*columns)
    ]
    return header, rows


def format_summary(
    batch: TrajectoryBatch,
    laws: Sequence[NormalLaw],
    steps: Sequence[int],
) -> Table:
    """Format the sample mean and variance next to the exact law per step."""
    header = ["k", "mean", "variance", "analytic_mean", "analytic_variance"]
    rows = []
    for k, law in zip(steps, laws):
        dist = snapshot(batch, k)
        rows.append(format_row((k, dist.mean, dist.variance, law.mean, law.variance)))
    return header, rows


def format_prices(prices: PricePaths) -> Table:
    """Format price trajectories as (path, k, price) rows."""
    rows = [
        format_row((p, k, price))
        for p, trajectory in enumerate(prices.prices)
        for k, price in zip(prices.steps, trajectory)
    ]
    return ["path", "k", "price"], rows


def format_price_mean(prices: PricePaths) -> Table:
    """Format the average price against its expectation per step."""
    rows = [
        format_row(values)
        for values in zip(prices.steps, prices.mean, prices.expected)
    ]
    return ["k", "mean_price", "expected_price"], rows


def format_series(series: Sequence[Tuple[int, float]]) -> Table:
    """Format a W1 series as (k, W1) rows."""
    return ["k", "W1"], [format_row(pair) for pair in series]
