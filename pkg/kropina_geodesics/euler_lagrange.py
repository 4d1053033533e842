# -*- coding: utf-8 -*-
"""Singular Euler-Lagrange system of unparameterized Kropina geodesics.

At a state (x, xi) the geodesic equation reads A(xi) eta = b(xi), where
eta = d xi / dt. A is symmetric with kernel spanned by xi, so the solution
set is a line eta* + R xi; the gauge picks one point of that line.
"""

import logging

import numpy as np

from kropina_geodesics import kropina_base
from kropina_geodesics import ode

LOGGER = logging.getLogger(__name__)

RESIDUAL_REL_TOL = 1e-10
GAUGE_SINGULAR_REL = 1e-12
DEFAULT_ACCEL_CAP = 1e8
DEFAULT_KERNEL_FLOOR_REL = 1e-9


class InconsistentSystem(kropina_base.Error):
    """A eta = b has no solution to tolerance; the structure or xi is broken."""


class GaugeSingular(kropina_base.Error):
    """The gauge cannot fix the kernel component at this state."""


class Gauge(object):
    """Parameterization gauge of an unparameterized geodesic.

    OmegaConstant keeps omega(xi) constant; FArclength keeps
    g(xi, xi) - omega(xi) constant, i.e. F(xi) = 1 along unit-speed seeds.
    """

    OMEGA_CONSTANT = 'OmegaConstant'
    F_ARCLENGTH = 'FArclength'
    _ALIASES = {
        'omegaconstant': OMEGA_CONSTANT,
        'omega-const': OMEGA_CONSTANT,
        'farclength': F_ARCLENGTH,
        'f-arclength': F_ARCLENGTH,
        'arclength': F_ARCLENGTH,
    }

    def __init__(self, kind):
        if kind not in (self.OMEGA_CONSTANT, self.F_ARCLENGTH):
            raise ValueError('unknown gauge %r' % (kind,))
        self.kind = kind

    @classmethod
    def parse(cls, name):
        if isinstance(name, Gauge):
            return name
        try:
            return cls(cls._ALIASES[str(name).lower()])
        except KeyError:
            raise ValueError('unknown gauge %r, expected one of %s'
                             % (name, sorted(cls._ALIASES)))

    def __eq__(self, other):
        return isinstance(other, Gauge) and other.kind == self.kind

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.kind)

    def __str__(self):
        return self.kind

    __repr__ = __str__


OMEGA_CONSTANT = Gauge(Gauge.OMEGA_CONSTANT)
F_ARCLENGTH = Gauge(Gauge.F_ARCLENGTH)


class GeodesicState(object):
    """Initial or current data (x, xi) with omega_x(xi) != 0."""

    def __init__(self, x, xi):
        self.x = np.asarray(x, dtype=float)
        self.xi = np.asarray(xi, dtype=float)

    def flat(self):
        return np.concatenate((self.x, self.xi))

    def __repr__(self):
        return 'GeodesicState(x=%s, xi=%s)' % (self.x, self.xi)


class ELSystem(object):
    """The matrix A(xi) and vector b(xi) at a base point."""

    def __init__(self, A, b, base, velocity):
        self.A = A
        self.b = b
        self.base = base
        self.velocity = velocity

    @property
    def dim(self):
        return self.b.shape[0]

    def __repr__(self):
        return 'ELSystem(base=%s, velocity=%s)' % (self.base, self.velocity)


def levi_civita_symbols(s, x):
    """Returns the Christoffel symbols of g.

    Args:
        s: KropinaStructure.
        x: Point.
    Returns:
        numpy array (n, n, n), [i, j, k] = Gamma_ij^k, symmetric in i, j.
    Raises:
        DegenerateMetric: If g_x is singular.
    """
    x = s.point(x)
    ginv = kropina_base.invert_metric(s.g(x))
    dg = s.dg(x)
    # lowered[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = dg + np.einsum('jil->ijl', dg) - np.einsum('lij->ijl', dg)
    return 0.5 * np.einsum('kl,ijl->ijk', ginv, lowered)


def assemble_el_system(s, x, xi):
    """Assembles A(xi) and b(xi) in the chart coordinates.

    Args:
        s: KropinaStructure.
        x: Point.
        xi: TangentVector at x.
    Returns:
        ELSystem with A xi = 0.
    Raises:
        KernelDirection: If omega_x(xi) is within the kernel guard.
    """
    x = s.point(x)
    xi = s.vector(xi)
    g = s.g(x)
    omega_x = s.omega(x)
    w = float(np.dot(omega_x, xi))
    if w == 0.0 or abs(w) < kropina_base.omega_threshold(omega_x, xi):
        raise kropina_base.KernelDirection('omega(xi) = %r at %s' % (w, x))
    dg = s.dg(x)
    domega = s.domega(x)

    g_xi = g.dot(xi)
    q = float(np.dot(xi, g_xi))
    dw_xixi = float(xi.dot(domega).dot(xi))
    dg_xixixi = float(np.einsum('mij,m,i,j->', dg, xi, xi, xi))

    A = (g - (np.outer(g_xi, omega_x) + np.outer(omega_x, g_xi)) / w
         + q * np.outer(omega_x, omega_x) / w ** 2)
    twice_b = (-2.0 * np.einsum('mkj,m,j->k', dg, xi, xi)
               + np.einsum('kij,i,j->k', dg, xi, xi)
               + (omega_x * dg_xixixi + 2.0 * g_xi * dw_xixi
                  + q * xi.dot(domega) - q * domega.dot(xi)) / w
               - 2.0 * q * omega_x * dw_xixi / w ** 2)
    return ELSystem(0.5 * (A + A.T), 0.5 * twice_b, x, xi)


def kernel_complement(xi):
    """Returns an orthonormal basis (n, n-1) of the complement of xi.

    Taken from the complete Householder QR of the single column xi.
    """
    n = xi.shape[0]
    Q, _ = np.linalg.qr(xi.reshape(n, 1), mode='complete')
    return Q[:, 1:]


def min_norm_acceleration(sys, aux_metric=None):
    """Solves A eta = b modulo the kernel R xi.

    Args:
        sys: ELSystem.
        aux_metric: numpy array (n, n), optional positive definite inner
            product; the returned eta is orthogonal to xi in it. Defaults to
            the coordinate identity.
    Returns:
        numpy array, the particular solution eta*.
    Raises:
        InconsistentSystem: If the solve residual exceeds
            1e-10 * max(|b|, |A| |eta|) or the deflated matrix is singular.
    """
    A, b, xi = sys.A, sys.b, sys.velocity
    n = b.shape[0]
    if n == 1:
        return np.zeros(1)
    Q = kernel_complement(xi)
    try:
        y = np.linalg.solve(Q.T.dot(A).dot(Q), Q.T.dot(b))
    except np.linalg.LinAlgError as e:
        raise InconsistentSystem('deflated system at %s is singular: %s' % (sys.base, e))
    eta = Q.dot(y)
    residual = float(np.linalg.norm(A.dot(eta) - b))
    bound = RESIDUAL_REL_TOL * max(np.linalg.norm(b), np.linalg.norm(A) * np.linalg.norm(eta))
    if not np.isfinite(residual) or residual > bound:
        raise InconsistentSystem('residual %r exceeds %r at %s' % (residual, bound, sys.base))
    if aux_metric is not None:
        M = np.asarray(aux_metric, dtype=float)
        eta = eta - (xi.dot(M).dot(eta) / xi.dot(M).dot(xi)) * xi
    return eta


def gauge_fix(s, x, xi, eta_particular, gauge=OMEGA_CONSTANT):
    """Shifts eta_particular along xi so the gauge quantity stays constant.

    Args:
        s: KropinaStructure.
        x: Point.
        xi: TangentVector.
        eta_particular: numpy array, any solution of A eta = b.
        gauge: Gauge or alias string.
    Returns:
        numpy array eta = eta_particular + lambda xi.
    Raises:
        KernelDirection: If omega(xi) is within the kernel guard.
        GaugeSingular: If FArclength is requested with g(xi, xi) <= 0.
    """
    gauge = Gauge.parse(gauge)
    x = s.point(x)
    xi = s.vector(xi)
    omega_x = s.omega(x)
    w = float(np.dot(omega_x, xi))
    if w == 0.0 or abs(w) < kropina_base.omega_threshold(omega_x, xi):
        raise kropina_base.KernelDirection('omega(xi) = %r at %s' % (w, x))
    dw_xixi = float(xi.dot(s.domega(x)).dot(xi))
    omega_eta = float(np.dot(omega_x, eta_particular))

    if gauge.kind == Gauge.OMEGA_CONSTANT:
        lam = -(omega_eta + dw_xixi) / w
    else:
        g = s.g(x)
        q = float(xi.dot(g).dot(xi))
        coeff = 2.0 * q - w
        if q <= 0.0 or abs(coeff) <= GAUGE_SINGULAR_REL * (abs(q) + abs(w)):
            raise GaugeSingular('FArclength needs g(xi, xi) > 0, got %r at %s' % (q, x))
        dg_xixixi = float(np.einsum('mij,m,i,j->', s.dg(x), xi, xi, xi))
        lam = (omega_eta + dw_xixi - 2.0 * float(xi.dot(g).dot(eta_particular)) - dg_xixixi) / coeff
    return eta_particular + lam * xi


def geodesic_rhs(s, st, gauge=OMEGA_CONSTANT, aux_metric=None):
    """Returns (dx, dxi) = (xi, gauge-fixed eta) at a GeodesicState."""
    system = assemble_el_system(s, st.x, st.xi)
    eta = min_norm_acceleration(system, aux_metric)
    return system.velocity.copy(), gauge_fix(s, system.base, system.velocity, eta, gauge)


def make_rhs(s, gauge=OMEGA_CONSTANT, aux_metric=None):
    """Returns the flat first-order rhs (t, [x, xi]) -> [dx, dxi]."""
    gauge = Gauge.parse(gauge)
    n = s.dim

    def rhs(unused_t, y):
        dx, dxi = geodesic_rhs(s, GeodesicState(y[:n], y[n:]), gauge, aux_metric)
        return np.concatenate((dx, dxi))

    return rhs


def normalize_seed(s, x, xi):
    """Rescales xi to F(xi) = 1, i.e. g(xi, xi) = omega(xi).

    Raises:
        GaugeSingular: If F(xi) <= 0.
    """
    F = kropina_base.eval_F(s, x, xi)
    if F <= 0.0:
        raise GaugeSingular('cannot normalize a seed with F = %r' % F)
    return np.asarray(xi, dtype=float) / F


def kernel_event(s, floor_rel=DEFAULT_KERNEL_FLOOR_REL):
    """Event stopping a run when |omega(xi)| falls to the kernel floor."""
    n = s.dim

    def distance(unused_t, y):
        omega_x = s.omega(y[:n])
        return abs(float(np.dot(omega_x, y[n:]))) - floor_rel * np.linalg.norm(omega_x) * np.linalg.norm(y[n:])

    return ode.Event('KernelApproach', distance, direction=-1)


def box_event(lower, upper, dim):
    """Event stopping a run when x leaves the box [lower, upper]."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return ode.Event('LeftBox', lambda t, y: float(np.min(np.minimum(y[:dim] - lower, upper - y[:dim]))),
                     direction=-1)


def acceleration_cap(n, cap=DEFAULT_ACCEL_CAP, start=None):
    """Returns the predicate |d xi / dt| > cap * max(1, |state|)."""
    start = n if start is None else start

    def exceeded(y, dy):
        return np.linalg.norm(dy[start:start + n]) > cap * max(1.0, np.linalg.norm(y))

    return exceeded


def integrate_geodesic(s, x, xi, t_max, gauge=OMEGA_CONSTANT, rel_tol=ode.DEFAULT_REL_TOL,
                       abs_tol=ode.DEFAULT_ABS_TOL, box=None, accel_cap=DEFAULT_ACCEL_CAP,
                       aux_metric=None, t0=0.0):
    """Integrates the geodesic of s through (x, xi) over [t0, t0 + t_max].

    Args:
        s: KropinaStructure.
        x: Point, the seed point.
        xi: TangentVector, the seed velocity with omega(xi) != 0.
        t_max: Float, the parameter length.
        gauge: Gauge or alias string.
        rel_tol: Float.
        abs_tol: Float.
        box: Pair (lower, upper) of arrays, optional working box.
        accel_cap: Float or None, the acceleration cap factor.
        aux_metric: Optional auxiliary inner product for the particular solution.
        t0: Float, the initial parameter.
    Returns:
        Trajectory; meta carries the termination reason.
    Raises:
        KernelDirection: If the seed lies in ker omega.
        GaugeSingular: If FArclength is requested for a seed with g(xi, xi) <= 0.
        StepSizeUnderflow: If the integrator collapses.
    """
    gauge = Gauge.parse(gauge)
    x = s.point(x)
    xi = s.vector(xi)
    n = s.dim
    events = [kernel_event(s)]
    if box is not None:
        events.append(box_event(box[0], box[1], n))
    cap = acceleration_cap(n, accel_cap) if accel_cap else None
    solution = ode.integrate_adaptive(make_rhs(s, gauge, aux_metric), np.concatenate((x, xi)),
                                      (t0, t0 + t_max), rel_tol, abs_tol, events, cap)
    meta = {'label': s.label, 'gauge': str(gauge), 'rel_tol': rel_tol, 'abs_tol': abs_tol,
            'seed_x': x.tolist(), 'seed_xi': xi.tolist()}
    traj = ode.trajectory_from_solution(s, solution, meta, slice(0, n), slice(n, 2 * n))
    if traj.termination != ode.COMPLETED:
        LOGGER.warning('Geodesic from %s truncated at t=%r: %s', x, traj.t[-1], traj.termination)
    return traj
