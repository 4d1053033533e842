"""Utils functions."""
import numpy as np
from scipy.spatial.distance import cdist

MACHINE_EPS = np.finfo(float).eps


def FiniteDifferenceStep(coord):
    """Returns the central-difference step for one coordinate.

    Args:
        coord: Float, the coordinate value the step is taken around.
    Returns:
        Float, cbrt(machine epsilon) * max(1, |coord|).
    """
    return np.cbrt(MACHINE_EPS) * max(1.0, abs(coord))


def CentralDifference(func, x):
    """Differentiates an array-valued field by central differences.

    Args:
        func: Callable, x -> numpy array of any shape S.
        x: numpy array (n,), the point.
    Returns:
        numpy array of shape (n,) + S, entry [k, ...] = d func / d x^k.
    """
    x = np.asarray(x, dtype=float)
    columns = []
    for k in range(x.shape[0]):
        h = FiniteDifferenceStep(x[k])
        forward = x.copy()
        backward = x.copy()
        forward[k] += h
        backward[k] -= h
        # Recompute the actual step to cancel representation error.
        h2 = forward[k] - backward[k]
        columns.append((np.asarray(func(forward)) - np.asarray(func(backward))) / h2)
    return np.array(columns)


def Symmetrize(a, b):
    """Returns the symmetric product sym(a (x) b) = (a b^T + b a^T) / 2."""
    return 0.5 * (np.outer(a, b) + np.outer(b, a))


def ResampleByArcLength(points, count, arc=None):
    """Resamples a polyline at equal arc-length spacing.

    Args:
        points: numpy array (m, n), ordered polyline vertices.
        count: Int, the number of output points (>= 2).
        arc: Float, optional arc length to stop at. Defaults to the full length.
    Returns:
        numpy array (count, n) of points equally spaced in arc length.
    """
    points = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cumulative = np.concatenate(([0.0], np.cumsum(seg)))
    total = cumulative[-1] if arc is None else min(arc, cumulative[-1])
    targets = np.linspace(0.0, total, count)
    return np.column_stack([
        np.interp(targets, cumulative, points[:, j]) for j in range(points.shape[1])])


def ArcLength(points):
    """Returns the chord length of a polyline."""
    points = np.asarray(points, dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def DiscreteFrechet(first, second):
    """Returns the discrete Frechet distance between two polylines.

    Eiter-Mannila dynamic program over the coupling table.

    Args:
        first: numpy array (p, n).
        second: numpy array (q, n).
    Returns:
        Float, the discrete Frechet distance.
    Raises:
        ValueError: If either polyline is empty.
    """
    if len(first) == 0 or len(second) == 0:
        raise ValueError('Vertices must not be empty.')
    dist = cdist(np.asarray(first, dtype=float), np.asarray(second, dtype=float))
    p, q = dist.shape
    ret = np.empty((p, q))
    ret[0, 0] = dist[0, 0]
    for i in range(1, p):
        ret[i, 0] = max(ret[i - 1, 0], dist[i, 0])
    for j in range(1, q):
        ret[0, j] = max(ret[0, j - 1], dist[0, j])
    for i in range(1, p):
        prev = ret[i - 1]
        row = ret[i]
        d = dist[i]
        for j in range(1, q):
            row[j] = max(min(prev[j], row[j - 1], prev[j - 1]), d[j])
    return float(ret[-1, -1])
