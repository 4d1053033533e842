"""Tests for utils.py."""

import numpy as np
from mox3 import mox

from kropina_geodesics.common import utils


class UtilsTest(mox.MoxTestBase):
    """Testing utils functions."""

    def test_central_difference_uses_step(self):
        """Central differences take the per-coordinate step and are exact on quadratics."""
        self.mox.StubOutWithMock(utils, 'FiniteDifferenceStep')
        utils.FiniteDifferenceStep(1.0).AndReturn(0.5)
        utils.FiniteDifferenceStep(2.0).AndReturn(0.25)
        self.mox.ReplayAll()

        grad = utils.CentralDifference(lambda x: np.array([x[0] ** 2 + x[1] ** 2]), np.array([1.0, 2.0]))
        self.assertEqual((2, 1), grad.shape)
        np.testing.assert_allclose([[2.0], [4.0]], grad, rtol=1e-14)

    def test_central_difference_matrix_valued(self):
        """The derivative index comes first."""
        grad = utils.CentralDifference(
            lambda x: np.array([[np.sin(x[0]), x[0] * x[1]], [0.0, x[1] ** 3]]), np.array([0.3, -1.2]))
        self.assertEqual((2, 2, 2), grad.shape)
        np.testing.assert_allclose([[np.cos(0.3), -1.2], [0.0, 0.0]], grad[0], atol=1e-9)
        np.testing.assert_allclose([[0.0, 0.3], [0.0, 3 * 1.44]], grad[1], atol=1e-9)

    def test_finite_difference_step_scales(self):
        """The step grows with the coordinate magnitude."""
        self.assertEqual(utils.FiniteDifferenceStep(0.0), utils.FiniteDifferenceStep(1.0))
        self.assertAlmostEqual(100.0 * utils.FiniteDifferenceStep(1.0), utils.FiniteDifferenceStep(-100.0))

    def test_symmetrize(self):
        """Symmetric product of two basis vectors."""
        np.testing.assert_array_equal([[0.0, 0.5], [0.5, 0.0]], utils.Symmetrize([1.0, 0.0], [0.0, 1.0]))

    def test_arc_length(self):
        """Chord length of an L-shaped polyline."""
        self.assertAlmostEqual(2.0, utils.ArcLength([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))

    def test_resample_by_arc_length(self):
        """Equal arc-length samples, optionally stopping early."""
        points = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(points, utils.ResampleByArcLength(points, 3))
        np.testing.assert_allclose([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]],
                                   utils.ResampleByArcLength(points, 3, arc=1.0))

    def test_discrete_frechet_parallel_segments(self):
        """Parallel segments at unit offset are at distance one."""
        first = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])
        second = first + [0.0, 1.0]
        self.assertAlmostEqual(1.0, utils.DiscreteFrechet(first, second))
        self.assertEqual(0.0, utils.DiscreteFrechet(first, first))

    def test_discrete_frechet_empty(self):
        """Empty polylines are rejected."""
        self.assertRaises(ValueError, utils.DiscreteFrechet, np.empty((0, 2)), [[0.0, 0.0]])
