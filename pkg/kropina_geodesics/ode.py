# -*- coding: utf-8 -*-
"""Explicit Runge-Kutta integration shared by the geodesic and lift integrators.

The adaptive integrator is the Dormand-Prince 5(4) pair with PI step-size
control and the quartic dense output of the same pair. Events are scalar
functions of (t, y); every event is terminal and is localized on the dense
output. A terminated run is a normal outcome, recorded in the termination
reason as 'EventStop:<name>'.
"""

import logging

import numpy as np
from scipy.optimize import brentq

from kropina_geodesics import kropina_base

LOGGER = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_STEPS = 200000
DEFAULT_EVENT_XTOL = 1e-12
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
PI_BETA = 0.04
PI_ALPHA = 0.2 - 0.75 * PI_BETA

COMPLETED = 'Completed'
MAX_STEPS = 'MaxSteps'

# Dormand-Prince tableau.
C = np.array([0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0])
A = [
    np.array([]),
    np.array([1.0 / 5]),
    np.array([3.0 / 40, 9.0 / 40]),
    np.array([44.0 / 45, -56.0 / 15, 32.0 / 9]),
    np.array([19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729]),
    np.array([9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656]),
]
B = np.array([35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84])
# Fifth minus fourth order weights, last entry for the FSAL stage.
E = np.array([71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
              22.0 / 525, -1.0 / 40])
# Quartic dense output: y(t + x h) = y + h K^T P [x, x^2, x^3, x^4].
P = np.array([
    [1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608,
     -12715105075.0 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933,
     87487479700.0 / 32700410799],
    [0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304,
     -10690763975.0 / 1880347072],
    [0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408,
     701980252875.0 / 199316789632],
    [0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883,
     -1453857185.0 / 822651844],
    [0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423],
])


class StepSizeUnderflow(kropina_base.Error):
    """The step size fell below the floating point resolution of t.

    Attributes:
        result: OdeSolution up to the last accepted state.
    """

    def __init__(self, message, result=None):
        super(StepSizeUnderflow, self).__init__(message)
        self.result = result


class OutOfSpan(kropina_base.Error):
    """A resampling time lies outside the integrated span."""


class Event(object):
    """A terminal event g(t, y) = 0.

    Attributes:
        name: Str, recorded as 'EventStop:<name>' when the event fires.
        fun: Callable, (t, y) -> float.
        direction: Int, 0 for any crossing, -1 for + to -, +1 for - to +.
    """

    def __init__(self, name, fun, direction=0):
        self.name = name
        self.fun = fun
        self.direction = direction

    def __call__(self, t, y):
        return float(self.fun(t, y))

    def crossed(self, g_old, g_new):
        if self.direction <= 0 and g_old > 0.0 >= g_new:
            return True
        if self.direction >= 0 and g_old < 0.0 <= g_new:
            return True
        return False


class OdeSolution(object):
    """Knots, knot derivatives and piecewise polynomial dense output.

    Segment i covers [t[i], t[i+1]] and is stored as (t_left, h, y_left, Q)
    with y(t_left + x h) = y_left + h Q [x, x^2, ...].
    """

    def __init__(self, t, y, dy, segments, status, n_accepted, n_rejected, event_time=None):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.dy = np.asarray(dy, dtype=float)
        self.segments = segments
        self.status = status
        self.n_accepted = n_accepted
        self.n_rejected = n_rejected
        self.event_time = event_time

    @property
    def t_min(self):
        return float(self.t[0])

    @property
    def t_max(self):
        return float(self.t[-1])

    def _locate(self, s):
        if not self.segments:
            raise OutOfSpan('solution has a single knot at t=%r' % self.t_min)
        index = int(np.searchsorted(self.t, s, side='right')) - 1
        return min(max(index, 0), len(self.segments) - 1)

    def __call__(self, s):
        s = float(s)
        exact = np.flatnonzero(self.t == s)
        if exact.size:
            return self.y[exact[0]].copy()
        t_left, h, y_left, Q = self.segments[self._locate(s)]
        x = (s - t_left) / h
        powers = np.cumprod(np.full(Q.shape[1], x))
        return y_left + h * Q.dot(powers)

    def derivative(self, s):
        s = float(s)
        exact = np.flatnonzero(self.t == s)
        if exact.size:
            return self.dy[exact[0]].copy()
        t_left, h, _, Q = self.segments[self._locate(s)]
        x = (s - t_left) / h
        k = Q.shape[1]
        powers = np.arange(1, k + 1) * np.concatenate(([1.0], np.cumprod(np.full(k - 1, x))))
        return Q.dot(powers)


def _rms(values):
    return float(np.sqrt(np.mean(np.square(values)))) if values.size else 0.0


def _initial_step(rhs, t0, y0, f0, rel_tol, abs_tol, t_bound):
    """Starting-step heuristic of Hairer, Norsett and Wanner."""
    scale = abs_tol + np.abs(y0) * rel_tol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_bound - t0)
    f1 = np.asarray(rhs(t0 + h0, y0 + h0 * f0), dtype=float)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def _dopri_stages(rhs, t, y, f, h):
    """Returns (y_new, f_new, K) for one Dormand-Prince step."""
    K = np.empty((7, y.shape[0]))
    K[0] = f
    for i in range(1, 6):
        dy = K[:i].T.dot(A[i]) * h
        K[i] = rhs(t + C[i] * h, y + dy)
    y_new = y + h * K[:6].T.dot(B)
    f_new = np.asarray(rhs(t + h, y_new), dtype=float)
    K[6] = f_new
    return y_new, f_new, K


def integrate_adaptive(rhs, state0, t_span, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                       events=(), accel_cap=None, first_step=None, max_step=np.inf,
                       max_steps=DEFAULT_MAX_STEPS):
    """Integrates y' = rhs(t, y) with the adaptive Dormand-Prince 5(4) pair.

    A stage whose rhs raises a kropina_base.Error rejects the step and shrinks
    it, so the integrator backs away from points where the rhs is undefined.

    Args:
        rhs: Callable, (t, y) -> dy/dt as a numpy array.
        state0: Array-like, the initial state.
        t_span: Pair (t0, t1) with t1 > t0.
        rel_tol: Float, relative tolerance.
        abs_tol: Float, absolute tolerance.
        events: Sequence of Event; the first crossing stops the run.
        accel_cap: Callable, optional (y, dy) -> bool evaluated at accepted
            knots; True stops the run with 'EventStop:AccelerationCap'.
        first_step: Float, optional initial step. Defaults to the starting-step
            heuristic.
        max_step: Float, the largest allowed step.
        max_steps: Int, the budget of attempted steps.
    Returns:
        OdeSolution.
    Raises:
        StepSizeUnderflow: If the step collapses; .result holds the partial run.
        ValueError: If the span is empty.
    """
    t0, t_end = float(t_span[0]), float(t_span[1])
    if not t_end > t0:
        raise ValueError('t_span must be increasing, got %r' % (t_span,))
    y = np.array(state0, dtype=float)
    f = np.asarray(rhs(t0, y), dtype=float)
    knots_t, knots_y, knots_dy, segments = [t0], [y], [f], []

    if first_step is None:
        h = _initial_step(rhs, t0, y, f, rel_tol, abs_tol, t_end)
    else:
        h = float(first_step)
    g_old = [event(t0, y) for event in events]

    t = t0
    err_prev = 1e-4
    n_accepted = n_rejected = 0
    status = COMPLETED
    event_time = None
    rejected_last = False

    def partial():
        return OdeSolution(knots_t, knots_y, knots_dy, segments, status,
                           n_accepted, n_rejected, event_time)

    while t < t_end:
        if n_accepted + n_rejected >= max_steps:
            status = MAX_STEPS
            LOGGER.warning('Step budget %d exhausted at t=%r', max_steps, t)
            break
        min_step = 10 * abs(np.nextafter(t, np.inf) - t)
        h = min(h, max_step)
        if h < min_step:
            raise StepSizeUnderflow('step size %r below %r at t=%r' % (h, min_step, t), partial())
        t_new = t + h
        if t_new >= t_end - min_step:
            t_new = t_end
        h = t_new - t

        try:
            y_new, f_new, K = _dopri_stages(rhs, t, y, f, h)
        except kropina_base.Error as e:
            LOGGER.debug('Stage failed at t=%r with h=%r: %s', t, h, e)
            n_rejected += 1
            rejected_last = True
            h *= 0.25
            continue

        scale = abs_tol + np.maximum(np.abs(y), np.abs(y_new)) * rel_tol
        err = _rms(h * K.T.dot(E) / scale)
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            n_rejected += 1
            rejected_last = True
            h *= 0.25
            continue

        if err > 1.0:
            n_rejected += 1
            rejected_last = True
            h *= max(MIN_FACTOR, SAFETY * err ** -PI_ALPHA)
            continue

        n_accepted += 1
        if err == 0.0:
            factor = MAX_FACTOR
        else:
            factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -PI_ALPHA * err_prev ** PI_BETA))
        if rejected_last:
            factor = min(1.0, factor)
        rejected_last = False
        err_prev = max(err, 1e-4)
        segment = (t, h, y, K.T.dot(P))
        segments.append(segment)

        hit = None
        g_new = []
        for event, g0 in zip(events, g_old):
            g1 = event(t_new, y_new)
            g_new.append(g1)
            if event.crossed(g0, g1):
                tau = _localize(event, segment, t, t_new)
                if hit is None or tau < hit[0]:
                    hit = (tau, event)
        g_old = g_new

        if hit is not None:
            tau, event = hit
            local = OdeSolution([t, t_new], [y, y_new], [f, f_new], [segment], status, 0, 0)
            knots_t.append(tau)
            knots_y.append(local(tau))
            knots_dy.append(local.derivative(tau))
            status = 'EventStop:%s' % event.name
            event_time = tau
            LOGGER.info('Event %s at t=%r', event.name, tau)
            break

        knots_t.append(t_new)
        knots_y.append(y_new)
        knots_dy.append(f_new)
        t, y, f = t_new, y_new, f_new
        h *= factor

        if accel_cap is not None and accel_cap(y, f):
            status = 'EventStop:AccelerationCap'
            event_time = t
            LOGGER.info('Acceleration cap reached at t=%r', t)
            break

    LOGGER.debug('Integration finished: %s, %d accepted, %d rejected',
                 status, n_accepted, n_rejected)
    return partial()


def _localize(event, segment, t_left, t_right):
    """Returns the event root inside an accepted step."""
    t_seg, h, y_left, Q = segment

    def value(s):
        x = (s - t_seg) / h
        return event(s, y_left + h * Q.dot(np.cumprod(np.full(Q.shape[1], x))))

    g_left, g_right = value(t_left), value(t_right)
    if g_left == 0.0:
        return t_left
    if np.sign(g_left) == np.sign(g_right):
        return t_right
    return brentq(value, t_left, t_right, xtol=DEFAULT_EVENT_XTOL)


def _rk4_step(rhs, t, y, f, h):
    k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * f), dtype=float)
    k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
    return y + h / 6.0 * (f + 2 * k2 + 2 * k3 + k4)


def _hermite(y, y_new, f, f_new, h):
    delta = (y_new - y) / h
    return np.column_stack([f, 3 * delta - 2 * f - f_new, f + f_new - 2 * delta])


def integrate_fixed(rhs, state0, t_span, n_steps, method='rk4'):
    """Integrates with a fixed step.

    Args:
        rhs: Callable, (t, y) -> dy/dt.
        state0: Array-like, the initial state.
        t_span: Pair (t0, t1).
        n_steps: Int, the number of equal steps.
        method: Str, 'rk4' (classical, cubic Hermite output) or 'dopri5'.
    Returns:
        OdeSolution.
    """
    if method not in ('rk4', 'dopri5'):
        raise ValueError('unknown method %r' % (method,))
    t0, t_end = float(t_span[0]), float(t_span[1])
    h = (t_end - t0) / n_steps
    y = np.array(state0, dtype=float)
    f = np.asarray(rhs(t0, y), dtype=float)
    knots_t, knots_y, knots_dy, segments = [t0], [y], [f], []
    for i in range(n_steps):
        t = t0 + i * h
        if method == 'rk4':
            y_new = _rk4_step(rhs, t, y, f, h)
            f_new = np.asarray(rhs(t + h, y_new), dtype=float)
            Q = _hermite(y, y_new, f, f_new, h)
        else:
            y_new, f_new, K = _dopri_stages(rhs, t, y, f, h)
            Q = K.T.dot(P)
        segments.append((t, h, y, Q))
        knots_t.append(t0 + (i + 1) * h)
        knots_y.append(y_new)
        knots_dy.append(f_new)
        y, f = y_new, f_new
    return OdeSolution(knots_t, knots_y, knots_dy, segments, COMPLETED, n_steps, 0)


def convergence_order(rhs, state0, t_span, n_steps=8, halvings=4, method='rk4'):
    """Self-convergence study of a fixed-step method.

    The step is halved `halvings` times; errors at t1 are taken against a run
    with four times the finest step count.

    Returns:
        Dict with 'slope' (least-squares order), 'steps' and 'errors'.
    """
    steps = [n_steps * 2 ** k for k in range(halvings + 1)]
    reference = integrate_fixed(rhs, state0, t_span, steps[-1] * 4, method).y[-1]
    errors = [float(np.linalg.norm(integrate_fixed(rhs, state0, t_span, m, method).y[-1] - reference))
              for m in steps]
    sizes = (float(t_span[1]) - float(t_span[0])) / np.array(steps, dtype=float)
    slope = float(np.polyfit(np.log(sizes), np.log(errors), 1)[0])
    LOGGER.info('Observed order %.3f for %s over %d halvings', slope, method, halvings)
    return {'slope': slope, 'steps': steps, 'errors': errors}


class Trajectory(object):
    """Time-stamped samples of (x, xi) with recomputed diagnostics.

    Attributes:
        t: numpy array (m,), strictly increasing.
        x: numpy array (m, n).
        xi: numpy array (m, n).
        F: numpy array (m,), F(x, xi); nan where omega(xi) = 0.
        omega_xi: numpy array (m,).
        xi_dot: numpy array (m, n) or None, d xi / dt at the samples.
        meta: Dict, run metadata (label, gauge, tolerances, termination,
            accepted and rejected step counts).
        solution: OdeSolution or None, the dense output the samples came from.
        structure: KropinaStructure or None, used to recompute diagnostics.
    """

    def __init__(self, t, x, xi, F, omega_xi, meta, xi_dot=None, solution=None,
                 structure=None, x_index=None, xi_index=None):
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.xi = np.asarray(xi, dtype=float)
        self.F = np.asarray(F, dtype=float)
        self.omega_xi = np.asarray(omega_xi, dtype=float)
        self.meta = dict(meta)
        self.xi_dot = None if xi_dot is None else np.asarray(xi_dot, dtype=float)
        self.solution = solution
        self.structure = structure
        self.x_index = x_index
        self.xi_index = xi_index

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def termination(self):
        return self.meta.get('termination', COMPLETED)

    def __len__(self):
        return self.t.shape[0]

    def __repr__(self):
        return 'Trajectory(%d samples, t in [%r, %r], %s)' % (
            len(self), self.t[0], self.t[-1], self.termination)


def diagnostics(s, x, xi):
    """Returns (F, omega_xi) arrays recomputed sample by sample."""
    pairs = [kropina_base.structure_diagnostics(s, xk, vk) for xk, vk in zip(x, xi)]
    if not pairs:
        return np.zeros(0), np.zeros(0)
    F, w = zip(*pairs)
    return np.array(F), np.array(w)


def trajectory_from_solution(s, solution, meta, x_index, xi_index):
    """Builds a Trajectory from the knots of an OdeSolution.

    Args:
        s: KropinaStructure the diagnostics are evaluated with.
        solution: OdeSolution.
        meta: Dict, run metadata; termination and step counts are added.
        x_index: Slice of the state holding x.
        xi_index: Slice of the state holding xi.
    Returns:
        Trajectory.
    """
    meta = dict(meta)
    meta.update({'termination': solution.status,
                 'accepted': solution.n_accepted,
                 'rejected': solution.n_rejected})
    if solution.event_time is not None:
        meta['event_time'] = solution.event_time
    x = solution.y[:, x_index]
    xi = solution.y[:, xi_index]
    F, w = diagnostics(s, x, xi)
    return Trajectory(solution.t, x, xi, F, w, meta, xi_dot=solution.dy[:, xi_index],
                      solution=solution, structure=s, x_index=x_index, xi_index=xi_index)


def resample_dense(traj, times, structure=None):
    """Resamples a trajectory at the given times.

    Knot times reproduce the stored samples exactly. Without a dense solution
    (e.g. a trajectory read back from CSV) x is interpolated by cubic Hermite
    using x' = xi and xi linearly.

    Args:
        traj: Trajectory.
        times: Sequence of floats within the trajectory span.
        structure: KropinaStructure, optional; defaults to traj.structure.
    Returns:
        Trajectory.
    Raises:
        OutOfSpan: If a time lies outside [t0, t_end].
        ValueError: If no structure is available for the diagnostics.
    """
    times = np.asarray(times, dtype=float)
    s = structure if structure is not None else traj.structure
    if s is None:
        raise ValueError('resampling needs a structure to recompute diagnostics')
    lo, hi = traj.t[0], traj.t[-1]
    bad = times[(times < lo) | (times > hi)]
    if bad.size:
        raise OutOfSpan('times %s outside [%r, %r]' % (bad, lo, hi))

    if traj.solution is not None:
        states = np.array([traj.solution(tk) for tk in times])
        rates = np.array([traj.solution.derivative(tk) for tk in times])
        x = states[:, traj.x_index]
        xi = states[:, traj.xi_index]
        xi_dot = rates[:, traj.xi_index]
    else:
        x, xi = _interpolate_samples(traj, times)
        xi_dot = None
    F, w = diagnostics(s, x, xi)
    return Trajectory(times, x, xi, F, w, traj.meta, xi_dot=xi_dot, solution=traj.solution,
                      structure=s, x_index=traj.x_index, xi_index=traj.xi_index)


def _interpolate_samples(traj, times):
    xs, xis = [], []
    for tk in times:
        exact = np.flatnonzero(traj.t == tk)
        if exact.size:
            xs.append(traj.x[exact[0]])
            xis.append(traj.xi[exact[0]])
            continue
        i = min(int(np.searchsorted(traj.t, tk, side='right')) - 1, len(traj.t) - 2)
        h = traj.t[i + 1] - traj.t[i]
        u = (tk - traj.t[i]) / h
        Q = _hermite(traj.x[i], traj.x[i + 1], traj.xi[i], traj.xi[i + 1], h)
        xs.append(traj.x[i] + h * Q.dot([u, u * u, u ** 3]))
        xis.append((1 - u) * traj.xi[i] + u * traj.xi[i + 1])
    return np.array(xs), np.array(xis)


def positions_at(traj, times):
    """Returns x at the given times from the dense output, or by Hermite
    interpolation of the samples when no dense output is attached."""
    times = np.asarray(times, dtype=float)
    if traj.solution is not None:
        return np.array([traj.solution(tk)[traj.x_index] for tk in times])
    return _interpolate_samples(traj, times)[0]
