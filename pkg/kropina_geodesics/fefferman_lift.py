# -*- coding: utf-8 -*-
"""Lifted metric on M x R and its null geodesics.

The lift carries g~ = g_ij dx^i dx^j + 2 omega_i dx^i dx^0. The coordinate
field K = d/dx^0 is a null Killing field, so p0 = omega(x') is conserved along
lift geodesics, and null lift geodesics with p0 != 0 project to Kropina
geodesics parameterized with omega(xi) constant.
"""

import logging

import numpy as np

from kropina_geodesics import euler_lagrange
from kropina_geodesics import kropina_base
from kropina_geodesics import ode

LOGGER = logging.getLogger(__name__)


class DegenerateOnKernel(kropina_base.Error):
    """g restricted to ker omega is degenerate, so g~ is singular."""


class KernelApproach(kropina_base.Error):
    """A projected sample has omega(xi) within the kernel guard."""


class LiftMetric(object):
    """The block metric [[0, omega], [omega^T, g]] in coordinates (x^0, x)."""

    def __init__(self, structure):
        self.structure = structure

    @property
    def dim(self):
        return self.structure.dim + 1

    def gtilde(self, y):
        x = np.asarray(y, dtype=float)[1:]
        return kropina_base.bordered_matrix(self.structure.g(x), self.structure.omega(x))

    def dgtilde(self, y):
        """Returns [a, b, c] = d_a g~_bc; the x^0 slice vanishes."""
        x = np.asarray(y, dtype=float)[1:]
        n = self.structure.dim
        d = np.zeros((n + 1, n + 1, n + 1))
        domega = self.structure.domega(x)
        d[1:, 0, 1:] = domega
        d[1:, 1:, 0] = domega
        d[1:, 1:, 1:] = self.structure.dg(x)
        return d

    def norm_sq(self, y, v):
        return float(np.dot(v, self.gtilde(y).dot(v)))

    def __repr__(self):
        return 'LiftMetric(dim=%d, label=%r)' % (self.dim, self.structure.label)


class LiftState(object):
    """State (x0, x, xi0, xi) on the lift chart."""

    def __init__(self, x0, x, xi0, xi):
        self.x0 = float(x0)
        self.x = np.asarray(x, dtype=float)
        self.xi0 = float(xi0)
        self.xi = np.asarray(xi, dtype=float)

    @classmethod
    def from_flat(cls, y):
        n = (len(y) - 2) // 2
        return cls(y[0], y[1:n + 1], y[n + 1], y[n + 2:])

    def position(self):
        return np.concatenate(([self.x0], self.x))

    def velocity(self):
        return np.concatenate(([self.xi0], self.xi))

    def flat(self):
        return np.concatenate((self.position(), self.velocity()))

    def __repr__(self):
        return 'LiftState(x0=%r, x=%s, xi0=%r, xi=%s)' % (self.x0, self.x, self.xi0, self.xi)


def lift_metric(s, check_at=()):
    """Builds the lift of s.

    Args:
        s: KropinaStructure.
        check_at: Sequence of points where nondegeneracy on ker omega is tested.
    Returns:
        LiftMetric.
    Raises:
        DegenerateOnKernel: If the bordered determinant vanishes at a checked point.
    """
    for x in check_at:
        report = kropina_base.check_nondegenerate_on_kernel(s, x)
        if not report['ok']:
            raise DegenerateOnKernel('g is degenerate on ker omega at %s (det %r)'
                                     % (x, report['bordered_det']))
    return LiftMetric(s)


def null_initial_lift(s, st, x0_start=0.0):
    """Completes (x, xi) to a null lift vector with xi0 = -g(xi, xi) / (2 omega(xi)).

    Raises:
        KernelDirection: If omega(xi) is within the kernel guard.
    """
    x = s.point(st.x)
    xi = s.vector(st.xi)
    omega_x = s.omega(x)
    w = float(np.dot(omega_x, xi))
    if w == 0.0 or abs(w) < kropina_base.omega_threshold(omega_x, xi):
        raise kropina_base.KernelDirection('omega(xi) = %r at %s' % (w, x))
    return LiftState(x0_start, x, -float(xi.dot(s.g(x)).dot(xi)) / (2.0 * w), xi)


def lift_geodesic_rhs(L, st):
    """Affine geodesic equation of g~.

    Args:
        L: LiftMetric.
        st: LiftState.
    Returns:
        Pair (position rate, velocity rate), each of length n + 1.
    Raises:
        DegenerateMetric: If g~ is singular at the state.
    """
    y = st.position()
    v = st.velocity()
    d = L.dgtilde(y)
    # g~_ad acc^d = -(d_b g~_ad v^b v^d - 1/2 d_a g~_bd v^b v^d)
    force = np.einsum('bac,b,c->a', d, v, v) - 0.5 * np.einsum('abc,b,c->a', d, v, v)
    try:
        acc = np.linalg.solve(L.gtilde(y), -force)
    except np.linalg.LinAlgError as e:
        raise kropina_base.DegenerateMetric('lift metric singular at %s: %s' % (y, e))
    return v, acc


class LiftTrajectory(object):
    """Integrated lift geodesic with conservation diagnostics."""

    def __init__(self, structure, solution, meta):
        self.structure = structure
        self.solution = solution
        self.meta = meta
        n = structure.dim
        self.t = solution.t
        self.x0 = solution.y[:, 0]
        self.x = solution.y[:, 1:n + 1]
        self.xi0 = solution.y[:, n + 1]
        self.xi = solution.y[:, n + 2:]

    def momenta(self):
        """Returns p0 = omega(xi) at the knots."""
        return np.array([float(np.dot(self.structure.omega(xk), vk))
                         for xk, vk in zip(self.x, self.xi)])

    def momentum_drift(self):
        p = self.momenta()
        return float(np.max(np.abs(p - p[0])))

    def null_residual(self):
        """Returns max |g(xi, xi) + 2 omega(xi) xi0| over the knots."""
        s = self.structure
        return float(max(abs(float(vk.dot(s.g(xk)).dot(vk)) + 2.0 * float(np.dot(s.omega(xk), vk)) * v0)
                         for xk, vk, v0 in zip(self.x, self.xi, self.xi0)))

    def __len__(self):
        return self.t.shape[0]


def make_lift_rhs(L):
    def rhs(unused_t, y):
        v, acc = lift_geodesic_rhs(L, LiftState.from_flat(y))
        return np.concatenate((v, acc))
    return rhs


def integrate_lift(s, st, t_max, x0_start=0.0, rel_tol=ode.DEFAULT_REL_TOL,
                   abs_tol=ode.DEFAULT_ABS_TOL, box=None, t0=0.0):
    """Integrates the null lift geodesic through the lift of (x, xi).

    Args:
        s: KropinaStructure.
        st: GeodesicState, the base seed.
        t_max: Float, the affine parameter length.
        x0_start: Float, the initial fiber coordinate.
        rel_tol: Float.
        abs_tol: Float.
        box: Pair (lower, upper) bounding x, optional.
        t0: Float, the initial parameter.
    Returns:
        LiftTrajectory.
    """
    L = lift_metric(s, check_at=(st.x,))
    start = null_initial_lift(s, st, x0_start)
    n = s.dim
    events = []
    if box is not None:
        lower, upper = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
        events.append(ode.Event(
            'LeftBox', lambda t, y: float(np.min(np.minimum(y[1:n + 1] - lower, upper - y[1:n + 1]))),
            direction=-1))
    solution = ode.integrate_adaptive(make_lift_rhs(L), start.flat(), (t0, t0 + t_max),
                                      rel_tol, abs_tol, events)
    meta = {'label': s.label, 'gauge': 'LiftAffine', 'rel_tol': rel_tol, 'abs_tol': abs_tol,
            'seed_x': start.x.tolist(), 'seed_xi': start.xi.tolist(), 'x0_start': x0_start,
            'termination': solution.status, 'accepted': solution.n_accepted,
            'rejected': solution.n_rejected}
    traj = LiftTrajectory(s, solution, meta)
    LOGGER.debug('Lift geodesic from %s: momentum drift %r, null residual %r',
                 start.x, traj.momentum_drift(), traj.null_residual())
    return traj


def project_and_check(lift_traj):
    """Projects a lift trajectory to M, dropping (x0, xi0).

    Returns:
        Trajectory with diagnostics recomputed on the base structure.
    Raises:
        KernelApproach: If any sample has |omega(xi)| below the kernel guard.
    """
    s = lift_traj.structure
    n = s.dim
    for tk, xk, vk in zip(lift_traj.t, lift_traj.x, lift_traj.xi):
        omega_x = s.omega(xk)
        w = float(np.dot(omega_x, vk))
        if w == 0.0 or abs(w) < kropina_base.omega_threshold(omega_x, vk):
            raise KernelApproach('omega(xi) = %r at t=%r' % (w, tk))
    meta = dict(lift_traj.meta)
    meta['gauge'] = str(euler_lagrange.OMEGA_CONSTANT)
    meta['projected_from'] = 'lift'
    return ode.trajectory_from_solution(s, lift_traj.solution, meta,
                                        slice(1, n + 1), slice(n + 2, 2 * n + 2))
