"""Tests for kropina_base.py."""

import numpy as np
from mox3 import mox

from kropina_geodesics import connect
from kropina_geodesics import cr_models
from kropina_geodesics import kropina_base
from kropina_geodesics import model_config
from kropina_geodesics.model_config import closed_kropina, euclidean_kropina


def indefinite_kropina():
    return kropina_base.KropinaStructure(
        3, lambda x: np.diag([1.0, 1.0, -1.0]), lambda x: np.array([1.0, 0.0, 0.0]))


class KropinaBaseTest(mox.MoxTestBase):
    """Testing KropinaStructure and the pointwise operations."""

    def setUp(self):
        super(KropinaBaseTest, self).setUp()
        self.euclidean = euclidean_kropina(3)
        self.heisenberg = cr_models.heisenberg_kropina(1)
        self.origin = np.zeros(3)

    def test_eval_f(self):
        """F = |v|^2 / v1 on the Euclidean model."""
        self.assertAlmostEqual(6.0 / 1.0, kropina_base.eval_F(self.euclidean, self.origin, [1.0, 1.0, 2.0]))
        self.assertAlmostEqual(-1.5, kropina_base.eval_F(self.euclidean, self.origin, [-0.5, 0.5, 0.5]))

    def test_eval_f_kernel_direction(self):
        """Vectors in ker omega have no F value."""
        self.assertRaises(kropina_base.KernelDirection,
                          kropina_base.eval_F, self.euclidean, self.origin, [0.0, 1.0, 0.0])
        self.assertRaises(kropina_base.KernelDirection,
                          kropina_base.eval_F, self.euclidean, self.origin, [1e-14, 1.0, 0.0])

    def test_f_homogeneous_and_odd(self):
        """F(c v) = c F(v) for c > 0 and F(-v) = -F(v)."""
        rng = np.random.RandomState(99)
        structures = [self.heisenberg, self.euclidean, closed_kropina(3)]
        for k in range(100):
            s = structures[k % len(structures)]
            x = rng.uniform(-0.5, 0.5, 3)
            v = rng.normal(size=3)
            if abs(np.dot(s.omega(x), v)) < 0.1:
                continue
            c = rng.uniform(0.1, 10.0)
            F = kropina_base.eval_F(s, x, v)
            self.assertAlmostEqual(c * F, kropina_base.eval_F(s, x, c * v), delta=1e-12 * max(1.0, abs(c * F)))
            self.assertEqual(-F, kropina_base.eval_F(s, x, -v))

    def test_heisenberg_values(self):
        """At the origin F(1, 0, 1) = 2 and the Reeb direction has F = 0."""
        self.assertEqual(2.0, kropina_base.eval_F(self.heisenberg, self.origin, [1.0, 0.0, 1.0]))
        self.assertEqual(0.0, kropina_base.eval_F(self.heisenberg, self.origin, [0.0, 0.0, 1.0]))

    def test_indicatrix_after_modification(self):
        """Every model samples 100 unit vectors once its metric is made positive."""
        cases = [('closed:3', [0.2, -0.4, 1.0]), ('euclidean:3', [0.0, 0.0, 0.0]),
                 ('heisenberg:1', [1.0, 0.0, 0.5]), ('heisenberg:2', [1.0, 0.0, 0.0, 0.0, 0.5]),
                 ('burns-shnider:1', [1.0, 0.0, 0.5])]
        for name, point in cases:
            x = np.array(point)
            modified, _ = connect.positive_modification(model_config.structure_from_name(name), x)
            ind = kropina_base.indicatrix_of(modified, x)
            g = modified.g(x)
            self.assertAlmostEqual(ind.radius_sq, ind.center.dot(g).dot(ind.center))
            samples = kropina_base.sample_indicatrix(modified, x, 100)
            self.assertEqual(100, len(samples))
            for v in samples:
                self.assertLessEqual(abs(kropina_base.eval_F(modified, x, v) - 1.0), 1e-10)
                offset = v - ind.center
                self.assertAlmostEqual(ind.radius_sq, offset.dot(g).dot(offset), delta=1e-9 * ind.radius_sq)

    def test_eval_f_bad_shapes(self):
        """Points and vectors are checked against the dimension."""
        self.assertRaises(kropina_base.InvalidStructure,
                          kropina_base.eval_F, self.euclidean, [0.0, 0.0], [1.0, 0.0, 0.0])
        self.assertRaises(kropina_base.InvalidStructure,
                          kropina_base.eval_F, self.euclidean, [np.nan, 0.0, 0.0], [1.0, 0.0, 0.0])

    def test_invalid_dimension(self):
        """The dimension must be a positive integer."""
        self.assertRaises(kropina_base.InvalidStructure, kropina_base.KropinaStructure,
                          0, lambda x: np.eye(1), lambda x: np.ones(1))

    def test_vanishing_oneform(self):
        """omega must not vanish."""
        s = kropina_base.KropinaStructure(2, lambda x: np.eye(2), lambda x: np.zeros(2))
        self.assertRaises(kropina_base.InvalidStructure, s.omega, [0.0, 0.0])

    def test_asymmetric_metric(self):
        """g must be symmetric."""
        s = kropina_base.KropinaStructure(2, lambda x: np.array([[1.0, 0.5], [0.0, 1.0]]),
                                          lambda x: np.array([1.0, 0.0]))
        self.assertRaises(kropina_base.InvalidStructure, s.g, [0.0, 0.0])

    def test_finite_difference_derivatives(self):
        """Derivatives fall back to central differences."""
        s = closed_kropina(2)
        fd = kropina_base.KropinaStructure(2, s.g, s.omega)
        self.assertEqual('finite-difference', fd.derivative_mode)
        self.assertEqual('analytic', s.derivative_mode)
        x = np.array([0.1, 0.7])
        np.testing.assert_allclose(s.domega(x), fd.domega(x), atol=1e-8)
        np.testing.assert_allclose(s.dg(x), fd.dg(x), atol=1e-8)

    def test_indicatrix_center(self):
        """W = g^-1 omega / 2 and |W|^2 = 1/4 for the Euclidean model."""
        ind = kropina_base.indicatrix_of(self.euclidean, self.origin)
        np.testing.assert_allclose([0.5, 0.0, 0.0], ind.center)
        self.assertAlmostEqual(0.25, ind.radius_sq)

    def test_sample_indicatrix(self):
        """Samples are unit vectors outside the cap and prefix-stable."""
        s = closed_kropina(3)
        x = np.array([0.2, -0.4, 1.0])
        samples = kropina_base.sample_indicatrix(s, x, 20)
        self.assertEqual(20, len(samples))
        for v in samples:
            self.assertAlmostEqual(1.0, kropina_base.eval_F(s, x, v), delta=1e-10)
            self.assertGreater(np.dot(s.omega(x), v), 0.0)
        shorter = kropina_base.sample_indicatrix(s, x, 5)
        for first, second in zip(shorter, samples):
            np.testing.assert_array_equal(first, second)

    def test_sample_indicatrix_respects_cap(self):
        """No sample has omega(v) below the cap."""
        cap = 0.3
        for v in kropina_base.sample_indicatrix(self.euclidean, self.origin, 30, delta_cap=cap):
            self.assertGreaterEqual(v[0], cap)

    def test_sample_indicatrix_empty(self):
        """Zero samples requested gives an empty list."""
        self.assertEqual([], kropina_base.sample_indicatrix(self.euclidean, self.origin, 0))

    def test_sample_indicatrix_degenerate(self):
        """The Heisenberg metric is singular, an indefinite one is non-compact."""
        self.assertRaises(kropina_base.DegenerateMetric,
                          kropina_base.sample_indicatrix, self.heisenberg, self.origin, 3)
        self.assertRaises(kropina_base.NonCompactIndicatrix,
                          kropina_base.sample_indicatrix, indefinite_kropina(), self.origin, 3)

    def test_nondegenerate_on_kernel(self):
        """Bordered determinants of the Euclidean and Heisenberg models."""
        report = kropina_base.check_nondegenerate_on_kernel(self.euclidean, self.origin)
        self.assertTrue(report['ok'])
        self.assertAlmostEqual(-1.0, report['bordered_det'])
        report = kropina_base.check_nondegenerate_on_kernel(self.heisenberg, self.origin)
        self.assertTrue(report['ok'])
        self.assertAlmostEqual(-4.0, report['bordered_det'])

    def test_degenerate_on_kernel(self):
        """g vanishing on ker omega fails the bordered test."""
        s = kropina_base.KropinaStructure(2, lambda x: np.diag([1.0, 0.0]),
                                          lambda x: np.array([1.0, 0.0]))
        self.assertFalse(kropina_base.check_nondegenerate_on_kernel(s, [0.0, 0.0])['ok'])

    def test_check_contact(self):
        """The Heisenberg form is contact, a closed form is not."""
        self.assertAlmostEqual(16.0, kropina_base.check_contact(self.heisenberg, self.origin))
        self.assertAlmostEqual(0.0, kropina_base.check_contact(closed_kropina(3), [0.1, 0.2, 0.3]))
        self.assertRaises(kropina_base.InvalidStructure,
                          kropina_base.check_contact, euclidean_kropina(2), [0.0, 0.0])

    def test_modify_metric(self):
        """The modification adds df(v) to F."""
        f = kropina_base.ScalarField.linear([0.0, 3.0, -1.0], origin=[1.0, 1.0, 1.0])
        modified = kropina_base.modify_metric(self.euclidean, f)
        self.assertEqual('analytic', modified.derivative_mode)
        x = np.array([0.3, 0.1, -0.2])
        v = np.array([0.8, 0.5, 0.25])
        self.assertAlmostEqual(kropina_base.eval_F(self.euclidean, x, v) + 3.0 * 0.5 - 0.25,
                               kropina_base.eval_F(modified, x, v))

    def test_backward_structure(self):
        """F_backward(-v) = F(v)."""
        s = closed_kropina(2)
        back = kropina_base.backward_structure(s)
        x = np.array([0.4, 0.9])
        v = np.array([1.0, 0.3])
        self.assertAlmostEqual(kropina_base.eval_F(s, x, v), kropina_base.eval_F(back, x, -v))
        np.testing.assert_allclose(-s.domega(x), back.domega(x))

    def test_invert_metric(self):
        """Singular metrics are rejected."""
        np.testing.assert_allclose(np.diag([0.5, 2.0]), kropina_base.invert_metric(np.diag([2.0, 0.5])))
        self.assertRaises(kropina_base.DegenerateMetric, kropina_base.invert_metric, np.diag([2.0, 2.0, 0.0]))

    def test_scalar_field_differential(self):
        """A linear field has a closed, constant differential."""
        beta = kropina_base.ScalarField.linear([1.0, -2.0]).differential()
        np.testing.assert_array_equal([1.0, -2.0], beta.at([5.0, 5.0]))
        self.assertEqual(0.0, beta.exterior_defect([5.0, 5.0]))
