"""Tests for ode.py."""

import numpy as np
from mox3 import mox

from kropina_geodesics import cr_models
from kropina_geodesics import euler_lagrange
from kropina_geodesics import kropina_base
from kropina_geodesics import ode
from kropina_geodesics.model_config import euclidean_kropina


def decay(unused_t, y):
    return -y


def oscillator(unused_t, y):
    return np.array([y[1], -y[0]])


class OdeTest(mox.MoxTestBase):
    """Testing the adaptive and fixed-step integrators."""

    def test_starting_step_heuristic_used(self):
        """Without first_step the starting-step heuristic picks h."""
        self.mox.StubOutWithMock(ode, '_initial_step')
        ode._initial_step(mox.IgnoreArg(), 0.0, mox.IgnoreArg(), mox.IgnoreArg(),
                          ode.DEFAULT_REL_TOL, ode.DEFAULT_ABS_TOL, 1.0).AndReturn(0.01)
        self.mox.ReplayAll()

        solution = ode.integrate_adaptive(decay, [1.0], (0.0, 1.0))
        self.assertEqual(ode.COMPLETED, solution.status)
        self.assertAlmostEqual(np.exp(-1.0), solution.y[-1][0], delta=1e-8)

    def test_first_step_skips_heuristic(self):
        """An explicit first step never calls the heuristic."""
        self.mox.StubOutWithMock(ode, '_initial_step')
        self.mox.ReplayAll()

        solution = ode.integrate_adaptive(decay, [2.0], (0.0, 0.5), first_step=0.01)
        self.assertEqual(0.5, solution.t_max)
        self.assertAlmostEqual(2.0 * np.exp(-0.5), solution.y[-1][0], delta=1e-8)

    def test_dense_output(self):
        """Dense output follows the exact oscillator between knots."""
        solution = ode.integrate_adaptive(oscillator, [1.0, 0.0], (0.0, 3.0), rel_tol=1e-11, abs_tol=1e-13)
        for s in (0.37, 1.234, 2.9):
            np.testing.assert_allclose([np.cos(s), -np.sin(s)], solution(s), atol=1e-7)
            np.testing.assert_allclose([-np.sin(s), -np.cos(s)], solution.derivative(s), atol=1e-6)
        np.testing.assert_array_equal(solution.y[1], solution(solution.t[1]))

    def test_terminal_event(self):
        """A crossing stops the run at the localized root."""
        half = ode.Event('half', lambda t, y: y[0] - 0.5)
        solution = ode.integrate_adaptive(lambda t, y: np.ones(1), [0.0], (0.0, 2.0), events=[half])
        self.assertEqual('EventStop:half', solution.status)
        self.assertAlmostEqual(0.5, solution.event_time, delta=1e-10)
        self.assertEqual(solution.event_time, solution.t_max)
        self.assertAlmostEqual(0.5, solution.y[-1][0], delta=1e-10)

    def test_event_direction(self):
        """A decreasing crossing does not trigger an increasing-only event."""
        rising = ode.Event('rising', lambda t, y: y[0] - 0.5, direction=1)
        solution = ode.integrate_adaptive(lambda t, y: -np.ones(1), [1.0], (0.0, 1.0), events=[rising])
        self.assertEqual(ode.COMPLETED, solution.status)
        self.assertIsNone(solution.event_time)

    def test_kernel_approach_localized(self):
        """omega(xi) = exp(-10 t) reaches the kernel floor at ln(1e9) / 10."""
        s = euclidean_kropina(2)
        solution = ode.integrate_adaptive(lambda t, y: np.array([y[2], y[3], -10.0 * y[2], 0.0]),
                                          [0.0, 0.0, 1.0, 1.0], (0.0, 3.0), rel_tol=1e-12, abs_tol=1e-22,
                                          events=[euler_lagrange.kernel_event(s)])
        self.assertEqual('EventStop:KernelApproach', solution.status)
        self.assertAlmostEqual(np.log(1e9) / 10.0, solution.event_time, delta=1e-9)

    def test_step_size_underflow(self):
        """An rhs undefined past t = 0.5 collapses the step and keeps the partial run."""
        def rhs(t, y):
            if t > 0.5:
                raise kropina_base.KernelDirection('undefined past 0.5')
            return np.ones(1)

        with self.assertRaises(ode.StepSizeUnderflow) as context:
            ode.integrate_adaptive(rhs, [0.0], (0.0, 1.0))
        partial = context.exception.result
        self.assertLessEqual(partial.t_max, 0.5)
        self.assertGreater(partial.t_max, 0.5 - 1e-6)

    def test_max_steps(self):
        """The step budget ends the run with MaxSteps."""
        solution = ode.integrate_adaptive(oscillator, [1.0, 0.0], (0.0, 100.0), max_steps=5)
        self.assertEqual(ode.MAX_STEPS, solution.status)
        self.assertLess(solution.t_max, 100.0)

    def test_empty_span(self):
        """The span must be increasing."""
        self.assertRaises(ValueError, ode.integrate_adaptive, decay, [1.0], (1.0, 1.0))

    def test_rk4_order(self):
        """Classical Runge-Kutta converges with order four."""
        report = ode.convergence_order(oscillator, [1.0, 0.0], (0.0, 1.0), n_steps=8, halvings=4)
        self.assertEqual([8, 16, 32, 64, 128], report['steps'])
        self.assertGreater(report['slope'], 3.8)
        self.assertLess(report['slope'], 4.2)

    def test_fixed_dopri5(self):
        """Fixed-step Dormand-Prince is accurate on the oscillator."""
        solution = ode.integrate_fixed(oscillator, [1.0, 0.0], (0.0, 1.0), 50, method='dopri5')
        np.testing.assert_allclose([np.cos(1.0), -np.sin(1.0)], solution.y[-1], atol=1e-9)
        self.assertRaises(ValueError, ode.integrate_fixed, oscillator, [1.0, 0.0], (0.0, 1.0), 5, 'euler')


class TrajectoryTest(mox.MoxTestBase):
    """Testing trajectory resampling."""

    def setUp(self):
        super(TrajectoryTest, self).setUp()
        self.structure = euclidean_kropina(1)
        self.traj = ode.Trajectory([0.0, 1.0], [[0.0], [1.0]], [[1.0], [1.0]], [1.0, 1.0],
                                   [1.0, 1.0], {'label': 'line'}, x_index=slice(0, 1),
                                   xi_index=slice(1, 2))

    def test_resample_samples(self):
        """Hermite interpolation of samples without dense output."""
        resampled = ode.resample_dense(self.traj, [0.0, 0.5, 1.0], self.structure)
        np.testing.assert_allclose([[0.0], [0.5], [1.0]], resampled.x)
        np.testing.assert_allclose([1.0, 1.0, 1.0], resampled.F)
        self.assertEqual('line', resampled.meta['label'])
        np.testing.assert_allclose([[0.25]], ode.positions_at(self.traj, [0.25]))

    def test_resample_out_of_span(self):
        """Times outside the run are rejected."""
        self.assertRaises(ode.OutOfSpan, ode.resample_dense, self.traj, [1.5], self.structure)

    def test_resample_needs_structure(self):
        """Diagnostics need a structure."""
        self.assertRaises(ValueError, ode.resample_dense, self.traj, [0.5])

    def test_resample_dense_heisenberg(self):
        """Dense resampling keeps the knots and matches fresh runs in between."""
        s = cr_models.heisenberg_kropina(1)
        traj = euler_lagrange.integrate_geodesic(s, np.zeros(3), [1.0, 0.0, 1.0], 1.0,
                                                 rel_tol=1e-12, abs_tol=1e-14)
        knots = ode.resample_dense(traj, traj.t)
        np.testing.assert_array_equal(traj.x, knots.x)
        np.testing.assert_array_equal(traj.xi, knots.xi)
        middles = [0.5 * (traj.t[k] + traj.t[k + 1]) for k in (0, len(traj.t) // 2, len(traj.t) - 2)]
        resampled = ode.resample_dense(traj, middles)
        for tk, xk in zip(middles, resampled.x):
            fresh = euler_lagrange.integrate_geodesic(s, np.zeros(3), [1.0, 0.0, 1.0], tk,
                                                      rel_tol=1e-12, abs_tol=1e-14)
            np.testing.assert_allclose(fresh.x[-1], xk, atol=1e-7)
