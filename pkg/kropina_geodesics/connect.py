# -*- coding: utf-8 -*-
"""Two-point connection of Kropina geodesics by shooting.

Initial directions are points of the indicatrix, written in stereographic
coordinates a in R^(n-1) from the pole v = 0 in a g-orthonormal frame, so
that omega(v) = 4 r^2 / (1 + |a|^2). Shots run in the F-arclength gauge,
which needs g positive definite; a structure that is not is first modified
by a closed form that leaves the traces unchanged. A found connection is a
critical point selected by least length, not a certified minimizer.
"""

import logging
from concurrent import futures

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_triangular
from scipy.optimize import root
from scipy.special import ndtri
from scipy.stats import qmc

from kropina_geodesics import euler_lagrange
from kropina_geodesics import kropina_base
from kropina_geodesics import ode

LOGGER = logging.getLogger(__name__)

DEFAULT_CAP_FRACTION = 0.05
DEFAULT_T_MAX = 2.0
DEFAULT_ENDPOINT_TOL = 1e-6
DEFAULT_BUDGET = 32
DEFAULT_APPROACH_FACTOR = 0.75
DEFAULT_BOX_FACTOR = 4.0
DEFAULT_BOX_FLOOR = 0.25
DEFAULT_SHOOT_REL_TOL = 1e-10
DEFAULT_SHOOT_ABS_TOL = 1e-12
DEFAULT_SCAN_REL_TOL = 1e-8
DEFAULT_SCAN_ABS_TOL = 1e-10
DEFAULT_FD_STEP = 1e-5
DEFAULT_LM_MAX_EVALS = 40
DEFAULT_SCAN_POINTS = 400
DEFAULT_MAX_DOUBLINGS = 40
DISTINCT_DIRECTION_TOL = 1e-6


class InvalidProblem(kropina_base.Error):
    """The shooting problem violates its preconditions."""


class ShotFailed(kropina_base.Error):
    """A shot stopped before reaching its parameter time.

    Attributes:
        reason: Str, the termination reason of the shot.
    """

    def __init__(self, message, reason=None):
        super(ShotFailed, self).__init__(message)
        self.reason = reason


class NotFound(kropina_base.Error):
    """No connecting geodesic was found; this does not prove non-existence.

    Attributes:
        best_residual: Float, the smallest endpoint residual reached.
    """

    def __init__(self, message, best_residual=np.inf):
        super(NotFound, self).__init__(message)
        self.best_residual = best_residual


class NotAdmissible(kropina_base.Error):
    """A curve sample has omega(xi) <= 0."""


class ShootingProblem(object):
    """Data of a two-point connection problem."""

    def __init__(self, structure, p, q, delta_cap=None, t_max=DEFAULT_T_MAX,
                 endpoint_tol=DEFAULT_ENDPOINT_TOL, box=None):
        """Initializes ShootingProblem object.

        Args:
            structure: KropinaStructure.
            p: Point, the start.
            q: Point, the target.
            delta_cap: Float, shots need omega(xi) >= delta_cap. Defaults to
                DEFAULT_CAP_FRACTION * |W|_g^2 at p.
            t_max: Float, the longest shot.
            endpoint_tol: Float, the success threshold on |endpoint - q|.
            box: Pair (lower, upper) bounding the shots. Defaults to a cube
                around p scaled by |q - p|.
        Raises:
            InvalidProblem: If p == q or delta_cap <= 0.
        """
        self.structure = structure
        self.p = structure.point(p)
        self.q = structure.point(q)
        if np.array_equal(self.p, self.q):
            raise InvalidProblem('p and q coincide at %s' % (self.p,))
        if delta_cap is not None and not delta_cap > 0:
            raise InvalidProblem('delta_cap must be positive, got %r' % (delta_cap,))
        self.delta_cap = delta_cap
        self.t_max = t_max
        self.endpoint_tol = endpoint_tol
        if box is None:
            half = DEFAULT_BOX_FACTOR * max(np.linalg.norm(self.q - self.p), DEFAULT_BOX_FLOOR)
            box = (self.p - half, self.p + half)
        self.box = box

    def __repr__(self):
        return 'ShootingProblem(p=%s, q=%s, label=%r)' % (self.p, self.q, self.structure.label)


class ConnectResult(object):
    """A connecting geodesic with its length and run record.

    Attributes:
        traj: Trajectory integrated on `structure` in the F-arclength gauge.
        length: Float, the length for the original structure.
        T: Float, the shot time (the length for `structure`).
        residual: Float, |endpoint - q|.
        direction: numpy array, the stereographic parameters of the shot.
        xi0: numpy array, the initial velocity.
        structure: KropinaStructure the shot was integrated on.
        potential: ScalarField or None, the closed-form modification used.
        omega_min: Float, min omega(xi) along the result.
        decay_rate: Float, observed max of -d/dt log omega(xi).
        shots: List of dicts, every coarse shot (seeds for reproduction).
        multiplicity: Int, distinct connecting directions found.
    """

    def __init__(self, **kwargs):
        self.__dict__.update(kwargs)

    def to_dict(self):
        return {'length': self.length, 'T': self.T, 'residual': self.residual,
                'direction': list(self.direction), 'xi0': list(self.xi0),
                'omega_min': self.omega_min, 'decay_rate': self.decay_rate,
                'multiplicity': self.multiplicity, 'shots': self.shots}


def positive_modification(s, center, points=()):
    """Makes g positive definite by g' = g + sym(omega (x) df).

    f = kappa omega_center . (x - center), so ker df = H at the center;
    kappa doubles from 1 until g' is positive definite at the center and at
    every given point.

    Returns:
        Pair (structure, potential); the input and None when g is already
        positive definite.
    Raises:
        InvalidProblem: If no kappa works.
    """
    center = s.point(center)
    checks = [center] + [s.point(x) for x in points]

    def positive(structure):
        try:
            for x in checks:
                np.linalg.cholesky(structure.g(x))
        except np.linalg.LinAlgError:
            return False
        return True

    if positive(s):
        return s, None
    direction = s.omega(center)
    kappa = 1.0
    for _ in range(DEFAULT_MAX_DOUBLINGS):
        f = kropina_base.ScalarField.linear(kappa * direction, center)
        modified = kropina_base.modify_metric(s, f)
        if positive(modified):
            LOGGER.info('Modified %s with kappa=%g for a positive definite metric', s.label, kappa)
            return modified, f
        kappa *= 2.0
    raise InvalidProblem('no positive definite modification of %s near %s' % (s.label, center))


class _Frame(object):
    """g-orthonormal stereographic chart of the indicatrix at a point."""

    def __init__(self, s, x):
        g = s.g(x)
        try:
            self.factor = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise kropina_base.NonCompactIndicatrix('metric at %s is not positive definite' % (x,))
        center = kropina_base.indicatrix_of(s, x).center
        c = self.factor.T.dot(center)
        self.radius = float(np.linalg.norm(c))
        self.normal = c / self.radius
        self.tangent = euler_lagrange.kernel_complement(self.normal)

    def direction(self, a):
        a = np.asarray(a, dtype=float)
        u = 2.0 * self.radius * (self.normal + self.tangent.dot(a)) / (1.0 + a.dot(a))
        return solve_triangular(self.factor.T, u, lower=False)

    def params(self, v):
        u = self.factor.T.dot(v)
        return self.tangent.T.dot(u) / self.normal.dot(u)

    def omega_scale(self):
        """omega(2W) = 4 r^2."""
        return 4.0 * self.radius ** 2


def direction_from_params(s, x, a):
    """Returns the indicatrix vector (F = 1) with stereographic parameters a."""
    x = s.point(x)
    v = _Frame(s, x).direction(a)
    return v / kropina_base.eval_F(s, x, v)


def params_from_direction(s, x, v):
    """Returns the stereographic parameters of the ray through v."""
    x = s.point(x)
    v = s.vector(v)
    return _Frame(s, x).params(v / kropina_base.eval_F(s, x, v))


def _shot(s, p, xi, T, rel_tol, abs_tol, box):
    traj = euler_lagrange.integrate_geodesic(s, p, xi, T, euler_lagrange.F_ARCLENGTH,
                                             rel_tol, abs_tol, box=box)
    if traj.termination != ode.COMPLETED:
        raise ShotFailed('shot stopped at t=%r: %s' % (traj.t[-1], traj.termination),
                         traj.termination)
    return traj


def shoot_endpoint(s, p, dir_params, T, jacobian=True, rel_tol=DEFAULT_SHOOT_REL_TOL,
                   abs_tol=DEFAULT_SHOOT_ABS_TOL, box=None, fd_step=DEFAULT_FD_STEP,
                   delta_cap=None):
    """Shoots from p along the indicatrix direction dir_params for time T.

    Args:
        s: KropinaStructure with g positive definite at p.
        p: Point.
        dir_params: Stereographic parameters, n - 1 floats.
        T: Float > 0, the F-arclength of the shot.
        jacobian: Bool, also return d endpoint / d (dir_params, T).
        rel_tol: Float.
        abs_tol: Float.
        box: Optional working box.
        fd_step: Float, central-difference step in dir_params.
        delta_cap: Float, optional; directions with omega(xi) < delta_cap fail.
    Returns:
        Dict with 'endpoint', 'jac' (n x n or None), 'xi0' and 'traj'.
    Raises:
        ShotFailed: If the shot stops early, T <= 0 or the direction is in the cap.
    """
    p = s.point(p)
    a = np.atleast_1d(np.asarray(dir_params, dtype=float))
    if not T > 0:
        raise ShotFailed('shot time must be positive, got %r' % (T,), 'NonPositiveTime')
    xi0 = direction_from_params(s, p, a)
    if delta_cap is not None and float(np.dot(s.omega(p), xi0)) < delta_cap:
        raise ShotFailed('direction %s lies in the cap omega < %r' % (a, delta_cap), 'Cap')
    traj = _shot(s, p, xi0, T, rel_tol, abs_tol, box)
    result = {'endpoint': traj.x[-1].copy(), 'xi0': xi0, 'traj': traj, 'jac': None}
    if not jacobian:
        return result
    columns = []
    for i in range(a.shape[0]):
        h = fd_step * max(1.0, abs(a[i]))
        plus, minus = a.copy(), a.copy()
        plus[i] += h
        minus[i] -= h
        forward = _shot(s, p, direction_from_params(s, p, plus), T, rel_tol, abs_tol, box).x[-1]
        backward = _shot(s, p, direction_from_params(s, p, minus), T, rel_tol, abs_tol, box).x[-1]
        columns.append((forward - backward) / (plus[i] - minus[i]))
    columns.append(traj.xi[-1].copy())
    result['jac'] = np.column_stack(columns)
    return result


def path_length(s, traj):
    """Integrates F(x, x') dt along a trajectory.

    Simpson's rule on each step when dense output is attached, the
    trapezoidal rule on the samples otherwise.

    Raises:
        NotAdmissible: If any sample has omega(xi) <= 0.
    """
    for tk, xk, vk in zip(traj.t, traj.x, traj.xi):
        if float(np.dot(s.omega(xk), vk)) <= 0.0:
            raise NotAdmissible('omega(xi) <= 0 at t=%r' % tk)
    if len(traj) < 2:
        return 0.0
    F = np.array([kropina_base.eval_F(s, xk, vk) for xk, vk in zip(traj.x, traj.xi)])
    if traj.solution is None:
        return float(trapezoid(F, traj.t))
    total = 0.0
    for i in range(len(traj) - 1):
        mid = 0.5 * (traj.t[i] + traj.t[i + 1])
        state = traj.solution(mid)
        xm, vm = state[traj.x_index], state[traj.xi_index]
        if float(np.dot(s.omega(xm), vm)) <= 0.0:
            raise NotAdmissible('omega(xi) <= 0 at t=%r' % mid)
        Fm = kropina_base.eval_F(s, xm, vm)
        total += (traj.t[i + 1] - traj.t[i]) / 6.0 * (F[i] + 4.0 * Fm + F[i + 1])
    return float(total)


def omega_monitor(s, traj):
    """Returns (min omega(xi), observed decay rate max(0, -d/dt log omega(xi)))."""
    w = np.array([float(np.dot(s.omega(xk), vk)) for xk, vk in zip(traj.x, traj.xi)])
    if len(w) < 2 or np.any(w <= 0.0):
        return float(np.min(w)), float('nan')
    rates = -np.diff(np.log(w)) / np.diff(traj.t)
    return float(np.min(w)), float(max(0.0, np.max(rates)))


def candidate_directions(dim, budget, a_max):
    """Nested quasi-random stereographic parameters inside |a| <= a_max.

    The first candidate is a = 0; the first k candidates of a larger budget
    are the candidates of budget k.
    """
    candidates = [np.zeros(dim - 1)]
    if budget <= 1:
        return candidates[:budget]
    sampler = qmc.Halton(d=dim, scramble=False)
    sampler.fast_forward(1)
    for u in sampler.random(budget - 1):
        if dim == 1:
            break
        direction = ndtri(u[:-1])
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            direction = np.zeros(dim - 1)
            direction[0] = 1.0
            norm = 1.0
        candidates.append(a_max * u[-1] ** (1.0 / (dim - 1)) * direction / norm)
    return candidates


def _scan(s, prob, a, rel_tol=DEFAULT_SCAN_REL_TOL, abs_tol=DEFAULT_SCAN_ABS_TOL):
    """Coarse shot; returns (closest approach, time of approach, status)."""
    try:
        xi0 = direction_from_params(s, prob.p, a)
        traj = euler_lagrange.integrate_geodesic(s, prob.p, xi0, prob.t_max,
                                                 euler_lagrange.F_ARCLENGTH, rel_tol, abs_tol,
                                                 box=prob.box)
    except kropina_base.Error as e:
        return np.inf, None, type(e).__name__
    times = np.linspace(traj.t[0], traj.t[-1], DEFAULT_SCAN_POINTS)
    distance = np.linalg.norm(ode.positions_at(traj, times) - prob.q, axis=1)
    k = int(np.argmin(distance))
    return float(distance[k]), float(times[k]), traj.termination


def connect_points(prob, budget=DEFAULT_BUDGET, max_refine=None, workers=1,
                   rel_tol=DEFAULT_SHOOT_REL_TOL, abs_tol=DEFAULT_SHOOT_ABS_TOL):
    """Finds a geodesic from prob.p to prob.q by shooting.

    Coarse shots over nested candidate directions are followed by
    Levenberg-Marquardt refinement of (direction, T) for every candidate whose
    closest approach to q is within DEFAULT_APPROACH_FACTOR |q - p|. Every
    qualifying candidate is refined unless max_refine caps them, so a larger
    budget never returns a longer path.

    Args:
        prob: ShootingProblem.
        budget: Int, the number of coarse candidate directions.
        max_refine: Int or None, the most candidates refined in candidate order;
            None refines all of them.
        workers: Int, threads for the shots and refinements; results do not
            depend on it.
        rel_tol: Float, integrator tolerance of the shots.
        abs_tol: Float.
    Returns:
        ConnectResult, the least-length success.
    Raises:
        NotFound: If no refinement reaches endpoint_tol.
    """
    original = prob.structure
    s, potential = positive_modification(original, prob.p, [prob.q])
    frame = _Frame(s, prob.p)
    delta_cap = prob.delta_cap
    if delta_cap is None:
        delta_cap = DEFAULT_CAP_FRACTION * frame.radius ** 2
    a_max_sq = frame.omega_scale() / delta_cap - 1.0
    if a_max_sq <= 0.0:
        raise InvalidProblem('delta_cap %r excludes the whole indicatrix' % delta_cap)
    n = s.dim
    approach_radius = DEFAULT_APPROACH_FACTOR * float(np.linalg.norm(prob.q - prob.p))

    shots = []
    seeds = []
    candidates = candidate_directions(n, budget, np.sqrt(a_max_sq))
    if workers > 1:
        with futures.ThreadPoolExecutor(max_workers=workers) as pool:
            scans = list(pool.map(lambda a: _scan(s, prob, a), candidates))
    else:
        scans = [_scan(s, prob, a) for a in candidates]
    for a, (distance, t_hit, status) in zip(candidates, scans):
        shots.append({'a': a.tolist(), 'approach': distance, 'T': t_hit, 'status': status})
        capped = max_refine is not None and len(seeds) >= max_refine
        if t_hit and distance <= approach_radius and not capped:
            seeds.append(np.concatenate((a, [t_hit])))
    LOGGER.debug('%d of %d coarse shots qualify for refinement', len(seeds), len(shots))

    def attempt(seed):
        try:
            return _refine(s, prob, seed, delta_cap, rel_tol, abs_tol)
        except kropina_base.Error as e:
            LOGGER.debug('Refinement from %s failed: %s', seed, e)
            return None

    if workers > 1 and len(seeds) > 1:
        with futures.ThreadPoolExecutor(max_workers=workers) as pool:
            refined = list(pool.map(attempt, seeds))
    else:
        refined = [attempt(seed) for seed in seeds]
    successes = []
    best_residual = min([shot['approach'] for shot in shots] + [np.inf])
    for found in refined:
        if found is None:
            continue
        best_residual = min(best_residual, found['residual'])
        if found['residual'] <= prob.endpoint_tol:
            successes.append(found)

    if not successes:
        LOGGER.warning('No geodesic from %s to %s found (best residual %.3g)',
                       prob.p, prob.q, best_residual)
        raise NotFound('no geodesic from %s to %s within %r' % (prob.p, prob.q, prob.endpoint_tol),
                       best_residual)

    for found in successes:
        found['length'] = path_length(original, found['traj'])
    successes.sort(key=lambda found: found['length'])
    distinct = []
    for found in successes:
        if all(np.linalg.norm(found['xi0'] - other) > DISTINCT_DIRECTION_TOL for other in distinct):
            distinct.append(found['xi0'])
    best = successes[0]
    omega_min, decay = omega_monitor(s, best['traj'])
    LOGGER.info('Connected %s to %s: length %.12g, residual %.3g, %d distinct',
                prob.p, prob.q, best['length'], best['residual'], len(distinct))
    return ConnectResult(traj=best['traj'], length=best['length'], T=best['T'],
                         residual=best['residual'], direction=best['a'], xi0=best['xi0'],
                         structure=s, potential=potential, omega_min=omega_min, decay_rate=decay,
                         shots=shots, multiplicity=len(distinct))


def _refine(s, prob, seed, delta_cap, rel_tol, abs_tol):
    n = s.dim

    def residual(z):
        shot = shoot_endpoint(s, prob.p, z[:n - 1], z[n - 1], True, rel_tol, abs_tol, prob.box)
        return shot['endpoint'] - prob.q, shot['jac']

    solution = root(residual, seed, jac=True, method='lm',
                    options={'xtol': 1e-10, 'ftol': 1e-10, 'gtol': 1e-12, 'maxiter': DEFAULT_LM_MAX_EVALS})
    a, T = solution.x[:n - 1], float(solution.x[n - 1])
    shot = shoot_endpoint(s, prob.p, a, T, False, rel_tol, abs_tol, prob.box, delta_cap=delta_cap)
    return {'a': a, 'T': T, 'xi0': shot['xi0'], 'traj': shot['traj'],
            'residual': float(np.linalg.norm(shot['endpoint'] - prob.q))}


def quasi_distance_report(s, p, q, budget=DEFAULT_BUDGET, max_refine=None, **kwargs):
    """Returns {'distance', 'multiplicity', 'result'} for p -> q."""
    result = connect_points(ShootingProblem(s, p, q, **kwargs), budget, max_refine)
    return {'distance': result.length, 'multiplicity': result.multiplicity, 'result': result}


def quasi_distance(s, p, q, budget=DEFAULT_BUDGET, max_refine=None, **kwargs):
    """Upper bound on the non-symmetric distance d(p, q).

    Raises:
        NotFound: If no connecting geodesic is found within budget.
    """
    return quasi_distance_report(s, p, q, budget, max_refine, **kwargs)['distance']
