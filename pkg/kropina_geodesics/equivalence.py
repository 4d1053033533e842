# -*- coding: utf-8 -*-
"""Numerical checks of projective equivalence and of kernel blow-up.

For a closed omega the Kropina geodesics are pregeodesics of an affine
connection; adding a closed form and rescaling F leaves unparameterized
geodesics unchanged; off the exceptional set the particular acceleration
grows like 1 / omega(xi) as xi approaches ker omega.
"""

import logging

import numpy as np

from kropina_geodesics import euler_lagrange
from kropina_geodesics import kropina_base
from kropina_geodesics import ode
from kropina_geodesics.common.utils import ArcLength, DiscreteFrechet, ResampleByArcLength, Symmetrize

LOGGER = logging.getLogger(__name__)

CLOSED_TOL = 1e-8
EXCEPTIONAL_TOL = 1e-10
NULL_OMEGA_REL = 1e-14
DEFAULT_DENSE_POINTS = 4000
DEFAULT_TRACE_POINTS = 400
DEFAULT_SUP_POINTS = 201
DEFAULT_S_VALUES = tuple(10.0 ** -k for k in np.linspace(1.0, 4.0, 13))
MIN_S_VALUES = 8
MIN_S_SPAN = 100.0


class NotClosed(kropina_base.Error):
    """A 1-form required to be closed has d beta != 0."""


class NullOmega(kropina_base.Error):
    """|omega|_g^2 vanishes, so the connection term is undefined."""


class NotInKernel(kropina_base.Error):
    """The direction is not tangent to ker omega."""


class InExceptionalSet(kropina_base.Error):
    """The kernel direction lies in the exceptional set; no blow-up is expected."""


class BlowupReport(object):
    """Probe table of |eta*| against omega(xi_s) and its log-log slope."""

    def __init__(self, probes, fitted_exponent, constant, xi0_in_exceptional_set=False):
        self.probes = probes
        self.fitted_exponent = fitted_exponent
        self.constant = constant
        self.xi0_in_exceptional_set = xi0_in_exceptional_set

    def to_dict(self):
        return {'probes': [list(p) for p in self.probes],
                'fitted_exponent': self.fitted_exponent,
                'constant': self.constant,
                'xi0_in_exceptional_set': self.xi0_in_exceptional_set}

    def __repr__(self):
        return 'BlowupReport(%d probes, exponent=%.4f)' % (len(self.probes), self.fitted_exponent)


def _exterior(d):
    return d - d.T


def closed_form_connection(s, x):
    """Christoffel symbols of the affine connection of a closed-omega structure.

    Gamma_ij^k = Gamma^g_ij^k + (nabla_i omega_j) omega^k / |omega|_g^2.

    Args:
        s: KropinaStructure with d omega = 0 at x.
        x: Point.
    Returns:
        numpy array (n, n, n), [i, j, k] = Gamma_ij^k.
    Raises:
        NotClosed: If d omega exceeds CLOSED_TOL at x.
        NullOmega: If |omega|_g^2 vanishes.
        DegenerateMetric: If g is singular.
    """
    x = s.point(x)
    domega = s.domega(x)
    defect = float(np.max(np.abs(_exterior(domega))))
    if defect > CLOSED_TOL:
        raise NotClosed('d omega = %.3g at %s' % (defect, x))
    omega_x = s.omega(x)
    ginv = kropina_base.invert_metric(s.g(x))
    omega_up = ginv.dot(omega_x)
    norm_sq = float(np.dot(omega_x, omega_up))
    if abs(norm_sq) <= NULL_OMEGA_REL * np.linalg.norm(ginv) * np.dot(omega_x, omega_x):
        raise NullOmega('|omega|_g^2 = %r at %s' % (norm_sq, x))
    gamma = euler_lagrange.levi_civita_symbols(s, x)
    nabla_omega = domega - np.einsum('ijk,k->ij', gamma, omega_x)
    return gamma + np.einsum('ij,k->ijk', nabla_omega, omega_up) / norm_sq


def pregeodesic_residual(traj, symbols_at):
    """Max defect of x'' + Gamma(x', x') transverse to x' along the samples.

    Args:
        traj: Trajectory carrying xi_dot.
        symbols_at: Callable, x -> (n, n, n) Christoffel array.
    Returns:
        Float.
    """
    if traj.xi_dot is None:
        raise ValueError('pregeodesic check needs accelerations along the trajectory')
    worst = 0.0
    for xk, vk, ak in zip(traj.x, traj.xi, traj.xi_dot):
        r = ak + np.einsum('ijk,i,j->k', symbols_at(xk), vk, vk)
        r = r - (np.dot(r, vk) / np.dot(vk, vk)) * vk
        worst = max(worst, float(np.linalg.norm(r)))
    return worst


def projective_shift(s, c, beta, check_at=None):
    """Returns the structure with F^ = c F + beta, i.e. g^ = c g + sym(beta (x) omega).

    Args:
        s: KropinaStructure.
        c: Nonzero float.
        beta: OneFormField, closed.
        check_at: Points where closedness is tested. Defaults to the origin.
    Returns:
        KropinaStructure.
    Raises:
        NotClosed: If d beta exceeds CLOSED_TOL at a checked point.
        InvalidStructure: If c = 0.
    """
    if c == 0:
        raise kropina_base.InvalidStructure('projective shift needs c != 0')
    if check_at is None:
        check_at = [np.zeros(s.dim)]
    for x in check_at:
        defect = beta.exterior_defect(x)
        if defect > CLOSED_TOL:
            raise NotClosed('d beta = %.3g at %s' % (defect, np.asarray(x).tolist()))

    def metric(x):
        return c * s.g(x) + Symmetrize(beta.at(x), s.omega(x))

    def dmetric(x):
        term = (np.einsum('ki,j->kij', beta.derivative(x), s.omega(x))
                + np.einsum('i,kj->kij', beta.at(x), s.domega(x)))
        return c * s.dg(x) + 0.5 * (term + term.transpose(0, 2, 1))

    analytic = s.derivative_mode == 'analytic'
    return kropina_base.KropinaStructure(
        s.dim, metric, s.omega, dmetric if analytic else None, s.domega if analytic else None,
        label='%s*%g+beta' % (s.label, c))


def in_exceptional_set(s, x, xi0, tol=EXCEPTIONAL_TOL):
    """Tests whether a kernel direction has |xi0|_g^2 = 0 or (xi0 _| d omega)|_H = 0.

    Raises:
        NotInKernel: If omega(xi0) is not within the kernel guard.
    """
    x = s.point(x)
    xi0 = s.vector(xi0)
    omega_x = s.omega(x)
    w = float(np.dot(omega_x, xi0))
    if abs(w) > kropina_base.omega_threshold(omega_x, xi0):
        raise NotInKernel('omega(xi0) = %r is not zero' % w)
    scale = max(1.0, float(np.dot(xi0, xi0)))
    if abs(float(xi0.dot(s.g(x)).dot(xi0))) <= tol * scale:
        return True
    contraction = xi0.dot(_exterior(s.domega(x)))
    restricted = contraction.dot(euler_lagrange.kernel_complement(omega_x))
    return bool(np.linalg.norm(restricted) <= tol * scale)


def blowup_probe(s, x, xi0, v, s_values=DEFAULT_S_VALUES):
    """Probes |eta*| along xi_s = xi0 + s v as s decreases to 0.

    Args:
        s: KropinaStructure.
        x: Point.
        xi0: Kernel direction outside the exceptional set.
        v: Vector with omega(v) = 1.
        s_values: Positive floats, at least 8 spanning two decades.
    Returns:
        BlowupReport with probes sorted by s descending.
    Raises:
        InExceptionalSet: If xi0 is exceptional.
        ValueError: If omega(v) != 1 or s_values is too short or too narrow.
    """
    steps = np.asarray(s_values, dtype=float)
    if steps.size < MIN_S_VALUES or np.any(steps <= 0.0):
        raise ValueError('need at least %d positive s values, got %r' % (MIN_S_VALUES, s_values))
    if steps.max() / steps.min() < MIN_S_SPAN:
        raise ValueError('s values must span a factor of %g' % MIN_S_SPAN)
    x = s.point(x)
    xi0 = s.vector(xi0)
    v = s.vector(v)
    if abs(float(np.dot(s.omega(x), v)) - 1.0) > 1e-10:
        raise ValueError('probe direction must have omega(v) = 1')
    if in_exceptional_set(s, x, xi0):
        raise InExceptionalSet('%s at %s is in the exceptional set' % (xi0, x))
    probes = []
    for step in sorted(s_values, reverse=True):
        xi = xi0 + step * v
        eta = euler_lagrange.min_norm_acceleration(euler_lagrange.assemble_el_system(s, x, xi))
        probes.append((float(step), float(np.dot(s.omega(x), xi)), float(np.linalg.norm(eta))))
    logs = np.log(np.abs(np.array([p[1:] for p in probes])))
    slope, intercept = np.polyfit(logs[:, 0], logs[:, 1], 1)
    LOGGER.info('Blow-up exponent %.4f over %d probes', slope, len(probes))
    return BlowupReport(probes, float(slope), float(np.exp(intercept)))


def _dense_points(traj, count=DEFAULT_DENSE_POINTS):
    if traj.solution is None:
        return traj.x
    return ode.positions_at(traj, np.linspace(traj.t[0], traj.t[-1], count))


def trace_distance(first, second, count=DEFAULT_TRACE_POINTS, arc=None, reverse=False):
    """Discrete Frechet distance of two traces over their common arc.

    Both traces are densified from their dense output and resampled at
    equal arc-length spacing from their starting points.

    Args:
        first: Trajectory.
        second: Trajectory.
        count: Int, samples per resampled trace.
        arc: Float, optional arc length to compare over.
        reverse: Bool, compare against the second trace walked backwards
            from its end point.
    Returns:
        Float.
    """
    a = _dense_points(first)
    b = _dense_points(second)
    if reverse:
        b = b[::-1]
    common = min(ArcLength(a), ArcLength(b))
    if arc is not None:
        common = min(common, arc)
    return DiscreteFrechet(ResampleByArcLength(a, count, common), ResampleByArcLength(b, count, common))


def sup_distance(first, second, count=DEFAULT_SUP_POINTS):
    """Max |x_first(t) - x_second(t)| on a uniform grid of the common span."""
    lo = max(first.t[0], second.t[0])
    hi = min(first.t[-1], second.t[-1])
    times = np.linspace(lo, hi, count)
    return float(np.max(np.linalg.norm(ode.positions_at(first, times) - ode.positions_at(second, times),
                                       axis=1)))
