__all__ = [
    "EmpiricalDistribution",
    "NormalLaw",
    "Histogram",
    "empirical_quantile",
    "standard_normal_quantile",
    "normal_quantile",
    "normal_cdf",
    "normal_pdf",
    "normal_cell_mass",
    "wasserstein1",
    "wasserstein1_empirical",
    "histogram",
    "DEFAULT_NODES",
]

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.special import erfc

from momentchain.exceptions import (
    BinEdgesError,
    ParameterError,
    QuantileLevelError,
    SampleSizeError,
)
from momentchain.typings import FloatArray, Json

DEFAULT_NODES = 4096

ArrayLike = Union[float, Sequence[float], FloatArray]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's coefficients.
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


class EmpiricalDistribution:
    """Sorted sample set with a left-continuous quantile function.

    :param samples: Real samples (any order, repeats allowed).
    :type samples: [float] | numpy.ndarray
    """

    __slots__ = ("_samples",)

    def __init__(self, samples: ArrayLike) -> None:
        values = np.sort(np.asarray(samples, dtype=np.float64).ravel())
        if values.size == 0:
            raise SampleSizeError("empirical distribution needs at least one sample")
        values.setflags(write=False)
        self._samples = values

    def __len__(self) -> int:
        return int(self._samples.size)

    def __repr__(self) -> str:
        return f"<EmpiricalDistribution N={self._samples.size}>"

    @property
    def samples(self) -> FloatArray:
        """Return the sorted (read-only) samples."""
        return self._samples

    @property
    def mean(self) -> float:
        return math.fsum(self._samples) / self._samples.size

    @property
    def variance(self) -> float:
        """Return the unbiased sample variance (0 for a single sample)."""
        if self._samples.size < 2:
            return 0.0
        return float(np.var(self._samples, ddof=1))

    def quantiles(self, q: ArrayLike) -> FloatArray:
        """Return the order statistic ceil(q N) (1-based) for each level q.

        :param q: Levels in (0, 1).
        :type q: float | numpy.ndarray
        :return: Quantiles, same shape as **q**.
        :rtype: numpy.ndarray
        :raise momentchain.exceptions.QuantileLevelError: If a level is
            outside (0, 1).
        """
        levels = _check_levels(q)
        size = self._samples.size
        rank = np.clip(np.ceil(levels * size).astype(np.int64) - 1, 0, size - 1)
        result: FloatArray = self._samples[rank]
        return result


@dataclass(frozen=True)
class NormalLaw:
    """Normal distribution given by mean and variance.

    Unpacks as ``mean, variance = law``.
    """

    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.mean):
            raise ParameterError("mean must be finite", "mean")
        if not (math.isfinite(self.variance) and self.variance >= 0):
            raise ParameterError("variance must be a nonnegative number", "variance")

    def __iter__(self) -> Iterator[float]:
        return iter((self.mean, self.variance))

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def to_json(self) -> Json:
        return {"mean": self.mean, "variance": self.variance}


@dataclass(frozen=True)
class Histogram:
    """Bin counts and normalized densities of a sample set."""

    edges: FloatArray
    counts: FloatArray
    density: FloatArray

    @property
    def centers(self) -> FloatArray:
        result: FloatArray = 0.5 * (self.edges[:-1] + self.edges[1:])
        return result


def _check_levels(q: ArrayLike) -> FloatArray:
    levels = np.asarray(q, dtype=np.float64)
    if np.any(~((levels > 0.0) & (levels < 1.0))):
        raise QuantileLevelError("quantile levels must lie in (0, 1)", "q")
    return levels


def empirical_quantile(dist: EmpiricalDistribution, q: float) -> float:
    """Return the left-continuous empirical quantile at level q.

    :param dist: Empirical distribution.
    :type dist: momentchain.stats.EmpiricalDistribution
    :param q: Level in (0, 1).
    :type q: float
    :return: Sample of 1-based rank ceil(q N).
    :rtype: float
    :raise momentchain.exceptions.QuantileLevelError: If q is outside (0, 1).
    """
    return float(dist.quantiles(q))


def _acklam(p: FloatArray) -> FloatArray:
    # p in (0, 0.5]
    tail = p < _P_LOW
    z = np.empty_like(p)

    r = np.sqrt(-2.0 * np.log(p[tail]))
    num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
    den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
    z[tail] = num / den

    s = p[~tail] - 0.5
    t = s * s
    num = ((((_A[0] * t + _A[1]) * t + _A[2]) * t + _A[3]) * t + _A[4]) * t + _A[5]
    den = ((((_B[0] * t + _B[1]) * t + _B[2]) * t + _B[3]) * t + _B[4]) * t + 1.0
    z[~tail] = s * num / den
    return z


def standard_normal_quantile(q: ArrayLike) -> FloatArray:
    """Return the standard normal inverse CDF at level(s) q.

    Computed on min(q, 1 - q) and mirrored, so ``z(q) == -z(1 - q)``.

    :param q: Levels in (0, 1).
    :type q: float | numpy.ndarray
    :return: Standard normal quantiles, same shape as **q**.
    :rtype: numpy.ndarray
    :raise momentchain.exceptions.QuantileLevelError: If a level is outside
        (0, 1).
    """
    levels = np.atleast_1d(_check_levels(q))
    upper = levels > 0.5
    p = np.where(upper, 1.0 - levels, levels)

    z = _acklam(p)
    # One Halley step on Phi(z) - p; z <= 0 so erfc is evaluated on its
    # accurate side.
    e = 0.5 * erfc(-z / _SQRT2) - p
    u = e * _SQRT2PI * np.exp(0.5 * z * z)
    z = z - u / (1.0 + 0.5 * z * u)

    z = np.where(upper, -z, z)
    result: FloatArray = z.reshape(np.shape(q))
    return result


def normal_quantile(law: NormalLaw, q: ArrayLike) -> FloatArray:
    """Return the quantile of a normal law at level(s) q.

    :param law: Normal law; variance 0 yields the mean for every level.
    :type law: momentchain.stats.NormalLaw
    :param q: Levels in (0, 1).
    :type q: float | numpy.ndarray
    :return: Quantiles, same shape as **q**.
    :rtype: numpy.ndarray
    :raise momentchain.exceptions.QuantileLevelError: If a level is outside
        (0, 1).
    """
    z = standard_normal_quantile(q)
    if law.variance == 0.0:
        return np.full_like(z, law.mean)
    result: FloatArray = law.mean + law.std * z
    return result


def normal_cdf(x: ArrayLike, law: NormalLaw) -> FloatArray:
    """Return the CDF of a normal law, computed through erfc.

    :param x: Points.
    :type x: float | numpy.ndarray
    :param law: Normal law with positive variance.
    :type law: momentchain.stats.NormalLaw
    :return: CDF values.
    :rtype: numpy.ndarray
    """
    z = (np.asarray(x, dtype=np.float64) - law.mean) / law.std
    result: FloatArray = 0.5 * erfc(-z / _SQRT2)
    return result


def normal_pdf(x: ArrayLike, law: NormalLaw) -> FloatArray:
    """Return the density of a normal law with positive variance.

    :param x: Points.
    :type x: float | numpy.ndarray
    :param law: Normal law.
    :type law: momentchain.stats.NormalLaw
    :return: Density values.
    :rtype: numpy.ndarray
    """
    z = (np.asarray(x, dtype=np.float64) - law.mean) / law.std
    result: FloatArray = np.exp(-0.5 * z * z) / (law.std * _SQRT2PI)
    return result


def normal_cell_mass(lower: ArrayLike, upper: ArrayLike, law: NormalLaw) -> FloatArray:
    """Return the probability a normal law assigns to each cell [lower, upper).

    Cells right of the mean are computed from upper-tail probabilities so far
    tails do not cancel to zero.

    :param lower: Cell lower bounds.
    :type lower: float | numpy.ndarray
    :param upper: Cell upper bounds.
    :type upper: float | numpy.ndarray
    :param law: Normal law.
    :type law: momentchain.stats.NormalLaw
    :return: Cell probabilities.
    :rtype: numpy.ndarray
    """
    a = np.asarray(lower, dtype=np.float64)
    b = np.asarray(upper, dtype=np.float64)
    if law.variance == 0.0:
        return ((a <= law.mean) & (law.mean < b)).astype(np.float64)

    za = (a - law.mean) / (law.std * _SQRT2)
    zb = (b - law.mean) / (law.std * _SQRT2)
    right_side = 0.5 * (erfc(za) - erfc(zb))
    left_side = 0.5 * (erfc(-zb) - erfc(-za))
    result: FloatArray = np.where(za > 0.0, right_side, left_side)
    return result


def wasserstein1(
    dist: EmpiricalDistribution, law: NormalLaw, nodes: int = DEFAULT_NODES
) -> float:
    """Return the Wasserstein-1 distance between samples and a normal law.

    Integrates ``|F1^-1(q) - F2^-1(q)|`` over (0, 1) with the midpoint rule on
    q_j = (j - 0.5) / nodes, which never evaluates the quantiles at 0 or 1.

    :param dist: Empirical distribution.
    :type dist: momentchain.stats.EmpiricalDistribution
    :param law: Normal law.
    :type law: momentchain.stats.NormalLaw
    :param nodes: Number of midpoint nodes (at least 2).
    :type nodes: int
    :return: Approximate W1 distance.
    :rtype: float
    """
    if isinstance(nodes, bool) or not isinstance(nodes, int) or nodes < 2:
        raise ParameterError(f"nodes must be an integer >= 2, got {nodes!r}", "nodes")
    q = (np.arange(1, nodes + 1, dtype=np.float64) - 0.5) / nodes
    integrand = np.abs(dist.quantiles(q) - normal_quantile(law, q))
    return float(np.sum(integrand) / nodes)


def wasserstein1_empirical(
    dist_a: EmpiricalDistribution, dist_b: EmpiricalDistribution
) -> float:
    """Return the exact W1 distance between two equal-size sample sets.

    :param dist_a: First empirical distribution.
    :type dist_a: momentchain.stats.EmpiricalDistribution
    :param dist_b: Second empirical distribution.
    :type dist_b: momentchain.stats.EmpiricalDistribution
    :return: Mean absolute difference of the sorted samples.
    :rtype: float
    :raise momentchain.exceptions.SampleSizeError: If sizes differ.
    """
    if len(dist_a) != len(dist_b):
        raise SampleSizeError(
            f"sample sizes differ: {len(dist_a)} != {len(dist_b)}", "dist_b"
        )
    return float(np.sum(np.abs(dist_a.samples - dist_b.samples)) / len(dist_a))


def histogram(dist: EmpiricalDistribution, bin_edges: ArrayLike) -> Histogram:
    """Bin the samples.

    Bins are half-open [a, b) except the last, which includes its right
    edge. Densities are normalized by the total sample count, so they
    integrate to less than 1 when samples fall outside the edges.

    :param dist: Empirical distribution.
    :type dist: momentchain.stats.EmpiricalDistribution
    :param bin_edges: Strictly increasing edges (at least two).
    :type bin_edges: [float] | numpy.ndarray
    :return: Histogram.
    :rtype: momentchain.stats.Histogram
    :raise momentchain.exceptions.BinEdgesError: If edges are not strictly
        increasing.
    """
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise BinEdgesError("bin edges must be strictly increasing", "bin_edges")
    counts, _ = np.histogram(dist.samples, bins=edges)
    density = counts / (len(dist) * np.diff(edges))
    return Histogram(edges, counts.astype(np.float64), density)
