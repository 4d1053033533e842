# -*- coding: utf-8 -*-
"""Kropina structures of the Heisenberg CR model and its conformal rescalings.

Real coordinates on R^(2n+1) are ordered (x1..xn, y1..yn, t) with
z^a = x^a + i y^a. The model contact form is
theta0 = dt + 2 sum(x^a dy^a - y^a dx^a), the frame is
Z_a = d/dz^a + i conj(z^a) d/dt and the Levi form is 2 delta. With this
frame the pseudo-Hermitian connection and torsion of theta0 vanish, so
covariant derivatives of functions are iterated frame derivatives.
"""

import logging
import warnings

import numpy as np

from kropina_geodesics import expressions
from kropina_geodesics import kropina_base
from kropina_geodesics.common.utils import CentralDifference

LOGGER = logging.getLogger(__name__)

PLURIHARMONIC_TOL = 1e-6

UPSILON_CATALOG = {
    'zero': lambda n: '0',
    'const': lambda n: '0.5',
    're-z': lambda n: 'x1',
    'abs-z2': lambda n: _abs_z2(n),
    'log-rho': lambda n: '-0.5 * log((%s)^2 + t^2)' % _abs_z2(n),
    't2': lambda n: 't^2',
}


class SingularPoint(kropina_base.Error):
    """The conformal factor or its derivatives are not finite at the point."""


class OriginExcluded(kropina_base.Error):
    """The Heisenberg norm vanishes at the point."""


class NotPluriharmonic(UserWarning):
    """The conformal factor is not CR pluriharmonic at a probe point."""


def _abs_z2(n):
    return ' + '.join('x%d^2 + y%d^2' % (a, a) for a in range(1, n + 1))


def coordinate_names(n):
    return (['x%d' % a for a in range(1, n + 1)] + ['y%d' % a for a in range(1, n + 1)] + ['t'])


def coordinate_aliases(n):
    return {'x': 'x1', 'y': 'y1'} if n == 1 else {}


def z_of(X, n):
    X = np.asarray(X, dtype=float)
    return X[:n] + 1j * X[n:2 * n]


class CRModelSpec(object):
    """CR data of a conformal rescaling theta = exp(upsilon) theta0.

    Attributes:
        cr_dim: Int n; the manifold has dimension 2n + 1.
        upsilon: Object with value(X), gradient(X) and hessian(X), e.g. an
            expressions.Expression or a kropina_base.ScalarField.
        label: Str.
    """

    def __init__(self, cr_dim, upsilon=None, label=None):
        if int(cr_dim) != cr_dim or cr_dim < 1:
            raise kropina_base.InvalidStructure('CR dimension must be >= 1, got %r' % (cr_dim,))
        self.cr_dim = int(cr_dim)
        if upsilon is None:
            upsilon = expressions.Expression.constant(0.0, coordinate_names(self.cr_dim))
        self.upsilon = upsilon
        self.label = label or 'rescaled:%d' % self.cr_dim

    @classmethod
    def from_text(cls, n, text, label=None):
        """Builds a spec whose conformal factor is an expression in x1.., y1.., t."""
        upsilon = expressions.Expression.parse(text, coordinate_names(n),
                                               aliases=coordinate_aliases(n))
        return cls(n, upsilon, label or 'rescaled:%d:%s' % (n, upsilon.to_text()))

    @classmethod
    def from_catalog(cls, n, upsilon_id, label=None):
        if upsilon_id not in UPSILON_CATALOG:
            raise KeyError('unknown conformal factor %r, expected one of %s'
                           % (upsilon_id, sorted(UPSILON_CATALOG)))
        return cls.from_text(n, UPSILON_CATALOG[upsilon_id](n),
                             label or 'rescaled:%d:%s' % (n, upsilon_id))

    @property
    def dim(self):
        return 2 * self.cr_dim + 1

    def derivatives(self, X):
        """Returns (value, gradient, hessian) of upsilon at X.

        Raises:
            SingularPoint: If any of them is not finite.
            InvalidStructure: If upsilon is not real at X.
        """
        try:
            with np.errstate(divide='raise', invalid='raise', over='raise'):
                value = self.upsilon.value(X)
                grad = np.asarray(self.upsilon.gradient(X), dtype=float)
                hess = np.asarray(self.upsilon.hessian(X), dtype=float)
        except (ZeroDivisionError, FloatingPointError, ValueError, OverflowError) as e:
            raise SingularPoint('conformal factor singular at %s: %s' % (X, e))
        except TypeError:
            raise kropina_base.InvalidStructure('conformal factor is not real at %s' % (X,))
        if not (np.isfinite(value) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
            raise SingularPoint('conformal factor not finite at %s' % (X,))
        return value, grad, hess

    def third_derivatives(self, X):
        """Returns [i, j, k] = d_i d_j d_k upsilon by differencing the Hessian."""
        return CentralDifference(lambda Y: self.derivatives(Y)[2], X)

    def __repr__(self):
        return 'CRModelSpec(cr_dim=%d, label=%r)' % (self.cr_dim, self.label)


class FrameCalculus(object):
    """Iterated derivatives along Z_a and Z_abar at a point.

    Each frame field is stored as its complex coefficient vector c and the
    constant matrix Dc[i, j] = d_i c^j.
    """

    def __init__(self, n, X):
        self.n = n
        self.X = np.asarray(X, dtype=float)

    def field(self, a, conjugate=False):
        n = self.n
        dim = 2 * n + 1
        c = np.zeros(dim, dtype=complex)
        Dc = np.zeros((dim, dim), dtype=complex)
        c[a] = 0.5
        c[n + a] = -0.5j
        c[2 * n] = self.X[n + a] + 1j * self.X[a]
        Dc[a, 2 * n] = 1j
        Dc[n + a, 2 * n] = 1.0
        if conjugate:
            return np.conj(c), np.conj(Dc)
        return c, Dc

    def holomorphic(self):
        return [self.field(a) for a in range(self.n)]

    def antiholomorphic(self):
        return [self.field(a, True) for a in range(self.n)]

    @staticmethod
    def first(V, grad):
        return V[0].dot(grad)

    @staticmethod
    def second(V, W, grad, hess):
        """Returns V(W upsilon)."""
        return V[0].dot(hess).dot(W[0]) + V[0].dot(W[1]).dot(grad)

    @staticmethod
    def third(V, W, U, grad, hess, third):
        """Returns V(W(U upsilon)); frame coefficients are affine."""
        cV, cW, DW, cU, DU = V[0], W[0], W[1], U[0], U[1]
        return (np.einsum('i,ij,k,jk->', cV, DW, cU, hess)
                + np.einsum('i,j,ik,jk->', cV, cW, DU, hess)
                + np.einsum('i,j,k,ijk->', cV, cW, cU, third)
                + np.einsum('i,ij,jk,k->', cV, DW, DU, grad)
                + np.einsum('i,j,jk,ik->', cV, cW, DU, hess))


def heisenberg_oneform(n, X):
    X = np.asarray(X, dtype=float)
    w = np.empty(2 * n + 1)
    w[:n] = -2.0 * X[n:2 * n]
    w[n:2 * n] = 2.0 * X[:n]
    w[2 * n] = 1.0
    return w


def heisenberg_doneform(n):
    d = np.zeros((2 * n + 1, 2 * n + 1))
    for a in range(n):
        d[a, n + a] = 2.0
        d[n + a, a] = -2.0
    return d


def heisenberg_kropina(n):
    """Returns the flat model structure on R^(2n+1).

    omega = dt + 2 sum(x dy - y dx) and g = 2 sum(dx^2 + dy^2); g is
    degenerate along d/dt.

    Args:
        n: Int, the CR dimension.
    Returns:
        KropinaStructure with analytic derivatives.
    """
    if int(n) != n or n < 1:
        raise kropina_base.InvalidStructure('CR dimension must be >= 1, got %r' % (n,))
    dim = 2 * n + 1
    metric = np.diag([2.0] * (2 * n) + [0.0])
    doneform = heisenberg_doneform(n)
    return kropina_base.KropinaStructure(
        dim, lambda X: metric.copy(), lambda X: heisenberg_oneform(n, X),
        lambda X: np.zeros((dim, dim, dim)), lambda X: doneform.copy(),
        label='heisenberg:%d' % n)


def _curvature_terms(spec, X):
    n = spec.cr_dim
    value, grad, hess = spec.derivatives(X)
    frames = FrameCalculus(n, X)
    Z = frames.holomorphic()
    Zbar = frames.antiholomorphic()
    laplacian = -0.5 * sum(FrameCalculus.second(Z[a], Zbar[a], grad, hess)
                           + FrameCalculus.second(Zbar[a], Z[a], grad, hess) for a in range(n))
    z_derivs = np.array([FrameCalculus.first(Za, grad) for Za in Z])
    return value, grad, laplacian.real, z_derivs


def tw_scalar_curvature(spec, point):
    """Scalar curvature of exp(upsilon) theta0 by the transformation formula.

    R = exp(-upsilon) [(n + 1) lap_b upsilon - n (n + 1) upsilon_a upsilon^a]
    with upsilon^a = conj(Z_a upsilon) / 2 and lap_b = -(Z_a Z_abar + Z_abar Z_a) / 2.

    Args:
        spec: CRModelSpec.
        point: Real coordinates (x, y, t).
    Returns:
        Float.
    Raises:
        SingularPoint: If upsilon is singular at the point.
    """
    n = spec.cr_dim
    value, _, laplacian, z_derivs = _curvature_terms(spec, point)
    contraction = 0.5 * float(np.sum(np.abs(z_derivs) ** 2))
    return float(np.exp(-value) * ((n + 1) * laplacian - n * (n + 1) * contraction))


def burns_shnider_scalar(n, z, t):
    """Closed form n (n + 1) |z|^2 / (2 rho^2), rho = (|z|^4 + t^2)^(1/4).

    Raises:
        OriginExcluded: At (z, t) = (0, 0).
    """
    r2 = float(np.sum(np.abs(np.atleast_1d(np.asarray(z, dtype=complex))) ** 2))
    rho2 = np.sqrt(r2 ** 2 + float(t) ** 2)
    if rho2 == 0.0:
        raise OriginExcluded('the Heisenberg norm vanishes at the origin')
    return n * (n + 1) * r2 / (2.0 * rho2)


def pluriharmonic_residual(spec, point):
    """Defects of the two pseudo-Einstein preserving conditions on upsilon.

    Returns:
        Dict with res1 = |M - tr(M)/n I|_F for M_ab = Z_a Z_bbar upsilon
        (0 when n = 1) and res2 = |sum_b Z_a Z_b upsilon^b|.
    Raises:
        SingularPoint: If upsilon is singular at the point.
    """
    n = spec.cr_dim
    _, grad, hess = spec.derivatives(point)
    third = spec.third_derivatives(point)
    frames = FrameCalculus(n, point)
    Z = frames.holomorphic()
    Zbar = frames.antiholomorphic()
    res1 = 0.0
    if n > 1:
        M = np.array([[FrameCalculus.second(Z[a], Zbar[b], grad, hess) for b in range(n)]
                      for a in range(n)])
        res1 = float(np.linalg.norm(M - np.trace(M) / n * np.eye(n)))
    defect = np.array([0.5 * sum(FrameCalculus.third(Z[a], Z[b], Zbar[b], grad, hess, third)
                                 for b in range(n)) for a in range(n)])
    return {'res1': res1, 'res2': float(np.linalg.norm(defect))}


def default_probe(n):
    X = np.zeros(2 * n + 1)
    X[0] = 1.0
    X[2 * n] = 0.5
    return X


def rescaled_kropina(spec, probes=None):
    """Kropina structure of the pseudo-Einstein form theta = exp(upsilon) theta0.

    omega = exp(upsilon) theta0 and
    g = 2 exp(upsilon) Re sum(th^a (x) conj th^a) + R / (n (n + 1)) theta (x) theta
    with the transported coframe th^a = dz^a + i upsilon^a theta0.

    Args:
        spec: CRModelSpec.
        probes: Points where pluriharmonicity is checked. Defaults to
            default_probe(n).
    Returns:
        KropinaStructure; g derivatives by central differences.
    """
    n = spec.cr_dim
    dim = spec.dim
    if probes is None:
        probes = [default_probe(n)]
    for X in probes:
        try:
            residual = pluriharmonic_residual(spec, X)
        except SingularPoint:
            continue
        if max(residual['res1'], residual['res2']) > PLURIHARMONIC_TOL:
            message = ('%s is not CR pluriharmonic at %s (res1=%.3g, res2=%.3g)'
                       % (spec.label, np.asarray(X).tolist(), residual['res1'], residual['res2']))
            LOGGER.warning(message)
            warnings.warn(message, NotPluriharmonic)

    dz = np.zeros((n, dim), dtype=complex)
    for a in range(n):
        dz[a, a] = 1.0
        dz[a, n + a] = 1j
    dtheta0 = heisenberg_doneform(n)

    def oneform(X):
        value, _, _ = spec.derivatives(X)
        return np.exp(value) * heisenberg_oneform(n, X)

    def doneform(X):
        value, grad, _ = spec.derivatives(X)
        return np.exp(value) * (np.outer(grad, heisenberg_oneform(n, X)) + dtheta0)

    def metric(X):
        value, grad, laplacian, z_derivs = _curvature_terms(spec, X)
        theta0 = heisenberg_oneform(n, X)
        coframe = dz + 1j * np.outer(0.5 * np.conj(z_derivs), theta0)
        levi = 2.0 * np.exp(value) * np.real(np.einsum('ai,aj->ij', coframe, np.conj(coframe)))
        contraction = 0.5 * float(np.sum(np.abs(z_derivs) ** 2))
        scalar = np.exp(-value) * ((n + 1) * laplacian - n * (n + 1) * contraction)
        theta = np.exp(value) * theta0
        g = levi + scalar / (n * (n + 1)) * np.outer(theta, theta)
        return 0.5 * (g + g.T)

    return kropina_base.KropinaStructure(dim, metric, oneform, None, doneform, label=spec.label)


def burns_shnider_kropina(n):
    """Returns the rescaled structure of theta = rho^-2 theta0."""
    return rescaled_kropina(CRModelSpec.from_catalog(n, 'log-rho', 'burns-shnider:%d' % n))
