import math

import numpy as np


def solve_moment_system(x_prev, x_i, x_next, M, V):
    """Solve for the three-point law with mean M and variance V directly.

    Finds probabilities (l, c, r) of the moves to x_prev, x_i and x_next with
    l + c + r = 1, first moment M and second moment M^2 + V, by solving the
    linear system from raw coordinates.

    :return: Probabilities (l, c, r).
    :rtype: (float, float, float)
    """
    d = np.array([x_prev - x_i, 0.0, x_next - x_i])
    system = np.vstack([np.ones(3), d, d * d])
    rhs = np.array([1.0, M, M * M + V])
    return tuple(float(p) for p in np.linalg.solve(system, rhs))


def bisection_quantile(q, tol=1e-15):
    """Return the standard normal quantile by bisection on the erfc CDF.

    :param q: Level in (0, 1).
    :type q: float
    :return: z with Phi(z) = q.
    :rtype: float
    """
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def dense_propagate(chain, k):
    """Return the distribution after k steps using dense matrix powers."""
    return chain.initial @ np.linalg.matrix_power(chain.dense_matrix(), k)


def mean_and_variance(x, mass):
    mean = float(np.dot(x, mass))
    return mean, float(np.dot((x - mean) ** 2, mass))


def count_true(results):
    return sum(1 for r in results if r)


def read_csv(path):
    """Return the comment line, header and rows of a CSV output file."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    assert lines[0].startswith("# ")
    rows = [line.split(",") for line in lines[1:]]
    return lines[0], rows[0], rows[1:]
