# -*- coding: utf-8 -*-
"""Base Kropina structure wrapping the pair (g, omega) and its first derivatives.

Points and tangent vectors are plain numpy arrays of chart coordinates; every
operation validates its inputs against the structure dimension. A structure is
immutable after construction and safe to share between threads.
"""

import logging

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtri
from scipy.stats import qmc

from kropina_geodesics.common.utils import CentralDifference, Symmetrize

LOGGER = logging.getLogger(__name__)

EPS_OMEGA_REL = 1e-12  # Kernel-direction guard, relative to |omega| |v|.
EPS_DET_REL = 1e-10  # Bordered-determinant guard, relative to |B|_F^(n+1).
EPS_SINGULAR_REL = 1e-13  # Smallest/largest singular value of an invertible g.
SYMMETRY_TOL = 1e-12
DEFAULT_CAP_FRACTION = 1e-6  # Indicatrix cap, fraction of omega(2W).
DEFAULT_SAMPLE_ATTEMPTS = 100


class Error(Exception):
    """Base class for exceptions."""


class InvalidStructure(Error):
    """The supplied fields violate the structure invariants."""


class KernelDirection(Error):
    """F is undefined: the vector lies (numerically) in ker omega."""


class DegenerateMetric(Error):
    """An operation that inverts g met a singular g."""


class NonCompactIndicatrix(Error):
    """The indicatrix is not a sphere because g is indefinite."""


class ScalarField(object):
    """A scalar field f with gradient and optional Hessian suppliers."""

    def __init__(self, value, gradient, hessian=None):
        self._value = value
        self._gradient = gradient
        self._hessian = hessian

    @classmethod
    def zero(cls, dim):
        return cls(lambda x: 0.0, lambda x: np.zeros(dim), lambda x: np.zeros((dim, dim)))

    @classmethod
    def linear(cls, coeffs, origin=None):
        """Returns f(x) = coeffs . (x - origin)."""
        coeffs = np.array(coeffs, dtype=float)
        origin = np.zeros_like(coeffs) if origin is None else np.array(origin, dtype=float)
        dim = coeffs.shape[0]
        return cls(lambda x: float(np.dot(coeffs, np.asarray(x, dtype=float) - origin)),
                   lambda x: coeffs.copy(),
                   lambda x: np.zeros((dim, dim)))

    @property
    def has_hessian(self):
        return self._hessian is not None

    def value(self, x):
        return float(self._value(x))

    def gradient(self, x):
        return np.asarray(self._gradient(x), dtype=float)

    def hessian(self, x):
        if self._hessian is None:
            return CentralDifference(self.gradient, x)
        return np.asarray(self._hessian(x), dtype=float)

    def differential(self):
        """Returns df as a OneFormField."""
        return OneFormField(self._gradient, self._hessian)


class OneFormField(object):
    """A 1-form field beta with an optional derivative supplier d_k beta_j."""

    def __init__(self, value, derivative=None):
        self._value = value
        self._derivative = derivative

    def at(self, x):
        return np.asarray(self._value(x), dtype=float)

    def derivative(self, x):
        if self._derivative is None:
            return CentralDifference(self.at, x)
        return np.asarray(self._derivative(x), dtype=float)

    def exterior_defect(self, x):
        """Returns max |d_k beta_j - d_j beta_k| at x."""
        d = self.derivative(x)
        return float(np.max(np.abs(d - d.T))) if d.size else 0.0


class KropinaStructure(object):
    """The pair (g, omega) of a Kropina metric F = g / omega on one chart."""

    def __init__(self, dim, metric, oneform, dmetric=None, doneform=None, label=''):
        """Initializes KropinaStructure object.

        Args:
            dim: Int, the chart dimension n.
            metric: Callable, x -> symmetric (n, n) array g_ij(x).
            oneform: Callable, x -> (n,) array omega_i(x).
            dmetric: Callable, optional x -> (n, n, n) array, [k, i, j] = d_k g_ij.
                Central differences are used when omitted.
            doneform: Callable, optional x -> (n, n) array, [k, j] = d_k omega_j.
                Central differences are used when omitted.
            label: Str, a human readable name used in run metadata.
        Raises:
            InvalidStructure: If dim is not a positive integer.
        """
        if int(dim) != dim or dim < 1:
            raise InvalidStructure('dimension must be a positive integer, got %r' % (dim,))
        self._dim = int(dim)
        self._metric = metric
        self._oneform = oneform
        self._dmetric = dmetric
        self._doneform = doneform
        self._label = label

    @property
    def dim(self):
        return self._dim

    @property
    def label(self):
        return self._label

    @property
    def derivative_mode(self):
        if self._dmetric is not None and self._doneform is not None:
            return 'analytic'
        return 'finite-difference'

    def point(self, x):
        """Validates and returns chart coordinates as a float array."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self._dim,):
            raise InvalidStructure('expected a point of dimension %d, got shape %s'
                                   % (self._dim, x.shape))
        if not np.all(np.isfinite(x)):
            raise InvalidStructure('point has non-finite coordinates: %s' % (x,))
        return x

    vector = point

    def g(self, x):
        g = np.asarray(self._metric(self.point(x)), dtype=float)
        if g.shape != (self._dim, self._dim) or not np.all(np.isfinite(g)):
            raise InvalidStructure('metric at %s is not a finite %dx%d matrix' % (x, self._dim, self._dim))
        scale = max(1.0, float(np.max(np.abs(g))))
        if np.max(np.abs(g - g.T)) > SYMMETRY_TOL * scale:
            raise InvalidStructure('metric at %s is not symmetric' % (x,))
        return g

    def omega(self, x):
        w = np.asarray(self._oneform(self.point(x)), dtype=float)
        if w.shape != (self._dim,) or not np.all(np.isfinite(w)):
            raise InvalidStructure('oneform at %s is not a finite %d-covector' % (x, self._dim))
        if not np.any(w):
            raise InvalidStructure('oneform vanishes at %s' % (x,))
        return w

    def dg(self, x):
        x = self.point(x)
        if self._dmetric is None:
            return CentralDifference(self.g, x)
        return np.asarray(self._dmetric(x), dtype=float)

    def domega(self, x):
        x = self.point(x)
        if self._doneform is None:
            return CentralDifference(self.omega, x)
        return np.asarray(self._doneform(x), dtype=float)

    def __repr__(self):
        return 'KropinaStructure(dim=%d, label=%r, derivatives=%s)' % (
            self._dim, self._label, self.derivative_mode)


class Indicatrix(object):
    """The g-sphere {g(v - W, v - W) = g(W, W)} through 0 at a base point."""

    def __init__(self, base, center, radius_sq):
        self.base = base
        self.center = center
        self.radius_sq = radius_sq

    def __repr__(self):
        return 'Indicatrix(base=%s, center=%s, radius_sq=%r)' % (
            self.base, self.center, self.radius_sq)


def omega_threshold(omega_x, v):
    """Returns the kernel guard eps_omega for a covector and a vector."""
    return EPS_OMEGA_REL * np.linalg.norm(omega_x) * np.linalg.norm(v)


def invert_metric(g):
    """Returns g^{-1}.

    Raises:
        DegenerateMetric: If g is numerically singular.
    """
    sv = np.linalg.svd(g, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= EPS_SINGULAR_REL * sv[0]:
        raise DegenerateMetric('metric is singular (singular values %s)' % (sv,))
    return np.linalg.inv(g)


def structure_diagnostics(s, x, xi):
    """Returns (F, omega(xi)) without raising; F is nan on ker omega."""
    g = s.g(x)
    w = float(np.dot(s.omega(x), xi))
    q = float(np.dot(xi, g.dot(xi)))
    return (q / w if w != 0.0 else float('nan')), w


def eval_F(s, x, v):
    """Evaluates the Kropina function F = g(v, v) / omega(v).

    Args:
        s: KropinaStructure.
        x: Point.
        v: TangentVector at x.
    Returns:
        Float, g_x(v, v) / omega_x(v).
    Raises:
        KernelDirection: If |omega_x(v)| is below the kernel guard.
    """
    x = s.point(x)
    v = s.vector(v)
    omega_x = s.omega(x)
    w = float(np.dot(omega_x, v))
    if abs(w) < omega_threshold(omega_x, v) or w == 0.0:
        raise KernelDirection('omega(v) = %r at %s is within the kernel guard' % (w, x))
    return float(np.dot(v, s.g(x).dot(v))) / w


def indicatrix_of(s, x):
    """Returns the indicatrix at x, centered at W^i = g^{ij} omega_j / 2.

    Raises:
        DegenerateMetric: If g_x is singular; apply modify_metric first.
    """
    x = s.point(x)
    g = s.g(x)
    center = 0.5 * invert_metric(g).dot(s.omega(x))
    return Indicatrix(x, center, float(np.dot(center, g.dot(center))))


def _positive_factor(g):
    """Returns the lower Cholesky factor of g or raises the matching error."""
    try:
        return np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        eig = np.linalg.eigvalsh(g)
        scale = max(abs(eig[0]), abs(eig[-1]))
        if scale == 0.0 or np.min(np.abs(eig)) <= EPS_SINGULAR_REL * scale:
            raise DegenerateMetric('metric is singular (eigenvalues %s)' % (eig,))
        raise NonCompactIndicatrix('metric is indefinite (eigenvalues %s)' % (eig,))


def sample_indicatrix(s, x, m, delta_cap=None):
    """Samples m unit vectors F(v) = 1 quasi-uniformly on the indicatrix.

    Directions come from an unscrambled Halton sequence pushed through the
    inverse normal CDF, so the first m samples are a prefix of the first m + 1.

    Args:
        s: KropinaStructure with g_x positive definite.
        x: Point.
        m: Int, the number of vectors.
        delta_cap: Float, samples with omega(v) < delta_cap are skipped.
            Defaults to DEFAULT_CAP_FRACTION * omega(2W).
    Returns:
        [numpy array], m vectors with |F(v) - 1| <= 1e-10.
    Raises:
        DegenerateMetric: If g_x is singular.
        NonCompactIndicatrix: If g_x is indefinite.
    """
    x = s.point(x)
    if m <= 0:
        return []
    g = s.g(x)
    factor = _positive_factor(g)
    ind = indicatrix_of(s, x)
    omega_x = s.omega(x)
    radius = np.sqrt(ind.radius_sq)
    if delta_cap is None:
        delta_cap = DEFAULT_CAP_FRACTION * float(np.dot(omega_x, 2.0 * ind.center))

    sampler = qmc.Halton(d=s.dim, scramble=False)
    sampler.fast_forward(1)  # Skip the corner point 0.
    samples = []
    attempts = 0
    while len(samples) < m:
        if attempts > DEFAULT_SAMPLE_ATTEMPTS * m:
            raise NonCompactIndicatrix('could not place %d samples outside the cap %r' % (m, delta_cap))
        attempts += 1
        direction = ndtri(sampler.random(1)[0])
        direction /= np.linalg.norm(direction)
        v = ind.center + radius * solve_triangular(factor.T, direction, lower=False)
        w = float(np.dot(omega_x, v))
        if w < delta_cap or w <= 0.0:
            continue
        # Homogeneity pulls the sample exactly onto F = 1.
        samples.append(v / (float(np.dot(v, g.dot(v))) / w))
    LOGGER.debug('Sampled %d indicatrix vectors at %s in %d draws', m, x, attempts)
    return samples


def check_nondegenerate_on_kernel(s, x):
    """Tests nondegeneracy of g on ker omega via the bordered determinant.

    Returns:
        {'ok': bool, 'bordered_det': float}, ok iff |det [[0, w], [w^T, g]]|
        exceeds EPS_DET_REL * |B|_F^(n+1).
    """
    x = s.point(x)
    bordered = bordered_matrix(s.g(x), s.omega(x))
    det = float(np.linalg.det(bordered))
    scale = np.linalg.norm(bordered) ** (s.dim + 1)
    return {'ok': bool(abs(det) > EPS_DET_REL * scale), 'bordered_det': det}


def bordered_matrix(g, omega_x):
    """Returns [[0, omega], [omega^T, g]]."""
    n = g.shape[0]
    bordered = np.zeros((n + 1, n + 1))
    bordered[0, 1:] = omega_x
    bordered[1:, 0] = omega_x
    bordered[1:, 1:] = g
    return bordered


def check_contact(s, x):
    """Returns det [[0, w], [-w^T, dw]]; nonzero iff w ^ (dw)^k != 0 (n = 2k+1).

    Raises:
        InvalidStructure: If the dimension is even.
    """
    if s.dim % 2 == 0:
        raise InvalidStructure('contact test needs an odd dimension, got %d' % s.dim)
    x = s.point(x)
    d = s.domega(x)
    skew = bordered_matrix(d - d.T, s.omega(x))
    skew[1:, 0] *= -1.0
    return float(np.linalg.det(skew))


def modify_metric(s, f):
    """Returns the structure with g' = g + sym(omega (x) df).

    F changes by the closed form df, so unparameterized geodesics are unchanged.

    Args:
        s: KropinaStructure.
        f: ScalarField.
    Returns:
        KropinaStructure.
    """
    def metric(x):
        return s.g(x) + Symmetrize(s.omega(x), f.gradient(x))

    dmetric = None
    if s.derivative_mode == 'analytic' and f.has_hessian:
        def dmetric(x):
            term = (np.einsum('ki,j->kij', s.domega(x), f.gradient(x))
                    + np.einsum('i,kj->kij', s.omega(x), f.hessian(x)))
            return s.dg(x) + 0.5 * (term + term.transpose(0, 2, 1))

    return KropinaStructure(s.dim, metric, s.omega, dmetric, s.domega if dmetric else None,
                            label='%s+df' % s.label)


def backward_structure(s):
    """Returns (g, -omega), whose forward geodesics are reversed ones of s."""
    doneform = None
    if s.derivative_mode == 'analytic':
        doneform = lambda x: -s.domega(x)
    return KropinaStructure(s.dim, s.g, lambda x: -s.omega(x),
                            s.dg if doneform else None, doneform,
                            label='%s[backward]' % s.label)
