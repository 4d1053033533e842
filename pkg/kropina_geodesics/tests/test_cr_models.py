"""Tests for cr_models.py."""

import warnings

import numpy as np
from mox3 import mox

from kropina_geodesics import cr_models
from kropina_geodesics import kropina_base
from kropina_geodesics.common.utils import CentralDifference

RANDOM_SEED = 42


def heisenberg_point(rng, n, rho):
    """Returns a random real point (x, y, t) with Heisenberg norm rho."""
    phi = rng.uniform(0.0, 0.5 * np.pi)
    r = rho * np.cos(phi) ** 0.5
    t = rho ** 2 * np.sin(phi) * rng.choice([-1.0, 1.0])
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    z *= r / np.linalg.norm(z)
    return np.concatenate((z.real, z.imag, [t])), z, t


class CRModelsTest(mox.MoxTestBase):
    """Testing the Heisenberg model and its rescalings."""

    def setUp(self):
        super(CRModelsTest, self).setUp()
        self.rng = np.random.RandomState(RANDOM_SEED)

    def test_heisenberg_structure(self):
        """omega = dt + 2(x dy - y dx) and g = 2(dx^2 + dy^2)."""
        s = cr_models.heisenberg_kropina(1)
        self.assertEqual(3, s.dim)
        np.testing.assert_array_equal([-1.0, 0.5, 1.0], s.omega([0.25, 0.5, 9.0]))
        np.testing.assert_array_equal(np.diag([2.0, 2.0, 0.0]), s.g([0.25, 0.5, 9.0]))
        np.testing.assert_allclose(s.domega([0.25, 0.5, 9.0]),
                                   CentralDifference(s.omega, np.array([0.25, 0.5, 9.0])), atol=1e-9)
        self.assertRaises(kropina_base.InvalidStructure, cr_models.heisenberg_kropina, 0)

    def test_burns_shnider_curvature(self):
        """The transformation formula matches the closed form away from the origin."""
        for n in (1, 2):
            spec = cr_models.CRModelSpec.from_catalog(n, 'log-rho')
            for _ in range(25):
                X, z, t = heisenberg_point(self.rng, n, self.rng.uniform(0.5, 2.0))
                self.assertAlmostEqual(cr_models.burns_shnider_scalar(n, z, t),
                                       cr_models.tw_scalar_curvature(spec, X), delta=1e-6)

    def test_burns_shnider_vanishes_on_axis(self):
        """The curvature vanishes on the t-axis."""
        spec = cr_models.CRModelSpec.from_catalog(1, 'log-rho')
        for t in (-2.0, -0.3, 0.7, 1.5):
            self.assertAlmostEqual(0.0, cr_models.tw_scalar_curvature(spec, [0.0, 0.0, t]), delta=1e-8)
        self.assertEqual(0.0, cr_models.burns_shnider_scalar(1, 0.0, 0.7))

    def test_origin_excluded(self):
        """The closed form and the factor are singular at the origin."""
        self.assertRaises(cr_models.OriginExcluded, cr_models.burns_shnider_scalar, 1, 0.0, 0.0)
        spec = cr_models.CRModelSpec.from_catalog(1, 'log-rho')
        self.assertRaises(cr_models.SingularPoint, cr_models.tw_scalar_curvature, spec, np.zeros(3))

    def test_complex_factor_is_refused(self):
        """A factor that evaluates to a complex number is refused."""
        spec = cr_models.CRModelSpec.from_text(1, '(-1)^0.5')
        self.assertRaises(kropina_base.InvalidStructure, spec.derivatives, np.array([0.5, 0.0, 1.0]))
        spec = cr_models.CRModelSpec.from_text(1, 'x1^0.5')
        self.assertRaises(cr_models.SingularPoint, spec.derivatives, np.array([-1.0, 0.0, 1.0]))

    def test_abs_z2_curvature(self):
        """upsilon = |z|^2 has R = -n (n + 1) exp(-|z|^2) (1 + |z|^2 / 2)."""
        spec = cr_models.CRModelSpec.from_catalog(1, 'abs-z2')
        self.assertAlmostEqual(-2.0, cr_models.tw_scalar_curvature(spec, [0.0, 0.0, 0.3]), delta=1e-12)
        self.assertAlmostEqual(-3.0 / np.e, cr_models.tw_scalar_curvature(spec, [1.0, 0.0, -4.0]), delta=1e-12)
        self.assertEqual(0.0, cr_models.tw_scalar_curvature(cr_models.CRModelSpec(1), [0.3, 0.1, 0.2]))

    def test_pluriharmonic_residuals(self):
        """Pluriharmonic factors have zero residuals, t^2 does not."""
        point = cr_models.default_probe(1)
        for upsilon_id in ('zero', 'const', 're-z', 'abs-z2', 'log-rho'):
            residual = cr_models.pluriharmonic_residual(cr_models.CRModelSpec.from_catalog(1, upsilon_id), point)
            self.assertEqual(0.0, residual['res1'])
            self.assertAlmostEqual(0.0, residual['res2'], delta=1e-7)
        residual = cr_models.pluriharmonic_residual(cr_models.CRModelSpec.from_catalog(1, 't2'), point)
        self.assertAlmostEqual(2.0, residual['res2'], delta=1e-6)

    def test_pluriharmonic_trace_free(self):
        """For n = 2 the trace-free part of Z_a Z_bbar t^2 is diag(1, -1) at z = (1, 0)."""
        point = cr_models.default_probe(2)
        residual = cr_models.pluriharmonic_residual(cr_models.CRModelSpec.from_catalog(2, 't2'), point)
        self.assertAlmostEqual(np.sqrt(2.0), residual['res1'], delta=1e-9)
        residual = cr_models.pluriharmonic_residual(cr_models.CRModelSpec.from_catalog(2, 'abs-z2'), point)
        self.assertAlmostEqual(0.0, residual['res1'], delta=1e-9)

    def test_rescaled_zero_is_heisenberg(self):
        """upsilon = 0 reproduces the flat model."""
        heisenberg = cr_models.heisenberg_kropina(1)
        rescaled = cr_models.rescaled_kropina(cr_models.CRModelSpec.from_catalog(1, 'zero'))
        for X in ([0.0, 0.0, 0.0], [0.4, -0.7, 1.1]):
            np.testing.assert_allclose(heisenberg.g(X), rescaled.g(X), atol=1e-14)
            np.testing.assert_allclose(heisenberg.omega(X), rescaled.omega(X), atol=1e-14)
            np.testing.assert_allclose(heisenberg.domega(X), rescaled.domega(X), atol=1e-14)

    def test_burns_shnider_oneform(self):
        """omega = theta0 / rho^2 with an exact differential."""
        s = cr_models.burns_shnider_kropina(1)
        np.testing.assert_allclose([0.0, 2.0, 1.0], s.omega([1.0, 0.0, 0.0]), atol=1e-14)
        np.testing.assert_allclose([0.0, 0.0, 0.5], s.omega([0.0, 0.0, 2.0]), atol=1e-14)
        X = np.array([0.3, -0.6, 0.8])
        np.testing.assert_allclose(CentralDifference(s.omega, X), s.domega(X), atol=1e-8)
        self.assertTrue(kropina_base.check_nondegenerate_on_kernel(s, X)['ok'])

    def test_rescaled_warns_when_not_pluriharmonic(self):
        """A non-pluriharmonic factor builds a structure with a warning."""
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            s = cr_models.rescaled_kropina(cr_models.CRModelSpec.from_catalog(1, 't2'))
        self.assertTrue(any(issubclass(w.category, cr_models.NotPluriharmonic) for w in caught))
        self.assertEqual('rescaled:1:t2', s.label)

    def test_unknown_catalog_entry(self):
        """Unknown conformal factors are rejected."""
        self.assertRaises(KeyError, cr_models.CRModelSpec.from_catalog, 1, 'nope')

    def test_from_text_aliases(self):
        """For n = 1, x and y alias x1 and y1."""
        spec = cr_models.CRModelSpec.from_text(1, 'x^2 + y^2')
        self.assertAlmostEqual(-2.0, cr_models.tw_scalar_curvature(spec, [0.0, 0.0, 1.0]), delta=1e-12)
