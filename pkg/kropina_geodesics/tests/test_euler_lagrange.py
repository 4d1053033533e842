"""Tests for euler_lagrange.py."""

import numpy as np
from mox3 import mox

from kropina_geodesics import cr_models
from kropina_geodesics import equivalence
from kropina_geodesics import euler_lagrange
from kropina_geodesics import kropina_base
from kropina_geodesics import ode
from kropina_geodesics.model_config import closed_kropina, euclidean_kropina

RANDOM_SEED = 20161
MIN_OMEGA = 0.2


def random_seed(rng, s, spread=0.5):
    """Returns (x, xi) with |omega_x(xi)| >= MIN_OMEGA."""
    while True:
        x = rng.uniform(-spread, spread, s.dim)
        xi = rng.normal(size=s.dim)
        if abs(np.dot(s.omega(x), xi)) >= MIN_OMEGA and np.linalg.norm(xi) <= 2.0:
            return x, xi


def curved_structure(rng, analytic=True):
    """g = 3 I + 0.3 S tanh(c.x) and the non-closed omega = a + E x on R^3."""
    B = rng.normal(size=(3, 3))
    S = 0.3 * (B + B.T)
    c = rng.normal(size=3)
    a = np.array([1.0, 0.0, 0.0]) + 0.2 * rng.normal(size=3)
    E = 0.5 * rng.normal(size=(3, 3))

    def metric(x):
        return 3.0 * np.eye(3) + S * np.tanh(np.dot(c, x))

    def dmetric(x):
        return np.einsum('k,ij->kij', c, S) * (1.0 - np.tanh(np.dot(c, x)) ** 2)

    def oneform(x):
        return a + E.dot(x)

    if not analytic:
        return kropina_base.KropinaStructure(3, metric, oneform)
    return kropina_base.KropinaStructure(3, metric, oneform, dmetric, lambda x: E.T.copy())


def normal_chart(s, p):
    """Pulls s back along x = p + y - Gamma(y, y) / 2, whose symbols vanish at y = 0."""
    p = np.asarray(p, dtype=float)
    gamma = euler_lagrange.levi_civita_symbols(s, p)

    def jacobian(y):
        return np.eye(3) - np.einsum('i,ilk->kl', y, gamma)

    def position(y):
        return p + y - 0.5 * np.einsum('i,j,ijk->k', y, y, gamma)

    def metric(y):
        J = jacobian(y)
        h = J.T.dot(s.g(position(y))).dot(J)
        return 0.5 * (h + h.T)

    def oneform(y):
        return jacobian(y).T.dot(s.omega(position(y)))

    return kropina_base.KropinaStructure(3, metric, oneform), gamma


class EulerLagrangeTest(mox.MoxTestBase):
    """Testing the singular Euler-Lagrange system and its integration."""

    def setUp(self):
        super(EulerLagrangeTest, self).setUp()
        self.heisenberg = cr_models.heisenberg_kropina(1)
        self.rng = np.random.RandomState(RANDOM_SEED)

    def test_algebraic_identities(self):
        """A xi = 0, rank A = n - 1 and the deflated solve is consistent."""
        structures = [self.heisenberg, cr_models.heisenberg_kropina(2), euclidean_kropina(3),
                      closed_kropina(3)]
        for k in range(100):
            s = structures[k % len(structures)]
            x, xi = random_seed(self.rng, s)
            system = euler_lagrange.assemble_el_system(s, x, xi)
            A_norm = np.linalg.norm(system.A)
            self.assertLessEqual(np.linalg.norm(system.A.dot(xi)), 1e-12 * A_norm * np.linalg.norm(xi))
            self.assertEqual(s.dim - 1, np.linalg.matrix_rank(system.A, tol=1e-8 * A_norm))
            eta = euler_lagrange.min_norm_acceleration(system)
            residual = np.linalg.norm(system.A.dot(eta) - system.b)
            self.assertLessEqual(residual, 1e-10 * max(np.linalg.norm(system.b), A_norm * np.linalg.norm(eta)))
            self.assertAlmostEqual(0.0, np.dot(eta, xi), delta=1e-12 * max(1.0, np.linalg.norm(eta)))

    def test_aux_metric_orthogonality(self):
        """The particular solution is orthogonal to xi in the auxiliary metric."""
        M = np.diag([1.0, 2.0, 3.0])
        x, xi = np.array([0.1, -0.2, 0.3]), np.array([0.5, 0.4, 1.0])
        system = euler_lagrange.assemble_el_system(self.heisenberg, x, xi)
        eta = euler_lagrange.min_norm_acceleration(system, M)
        self.assertAlmostEqual(0.0, xi.dot(M).dot(eta), delta=1e-12)
        np.testing.assert_allclose(system.b, system.A.dot(eta), atol=1e-10)

    def test_kernel_seed(self):
        """A seed in ker omega is rejected."""
        self.assertRaises(kropina_base.KernelDirection, euler_lagrange.assemble_el_system,
                          self.heisenberg, np.zeros(3), [1.0, 0.0, 0.0])
        self.assertRaises(kropina_base.KernelDirection, euler_lagrange.integrate_geodesic,
                          euclidean_kropina(3), np.zeros(3), [0.0, 1.0, 0.0], 1.0)

    def test_gauge_parse(self):
        """Gauge aliases resolve, unknown names fail."""
        self.assertEqual(euler_lagrange.F_ARCLENGTH, euler_lagrange.Gauge.parse('f-arclength'))
        self.assertEqual(euler_lagrange.OMEGA_CONSTANT, euler_lagrange.Gauge.parse('OmegaConstant'))
        self.assertRaises(ValueError, euler_lagrange.Gauge.parse, 'proper-time')

    def test_farclength_singular(self):
        """FArclength cannot normalize a seed with g(xi, xi) = 0."""
        self.assertRaises(euler_lagrange.GaugeSingular, euler_lagrange.integrate_geodesic,
                          self.heisenberg, np.zeros(3), [0.0, 0.0, 1.0], 1.0, gauge='FArclength')

    def test_euclidean_lines(self):
        """Constant coefficients give straight geodesics."""
        xi = np.array([1.0, 0.5, -0.25])
        traj = euler_lagrange.integrate_geodesic(euclidean_kropina(3), np.zeros(3), xi, 2.0)
        self.assertEqual(ode.COMPLETED, traj.termination)
        np.testing.assert_allclose(2.0 * xi, traj.x[-1], atol=1e-12)
        np.testing.assert_allclose(traj.F, traj.F[0])

    def test_gauge_fix_shifts_along_velocity(self):
        """The gauge shifts eta* along xi until d/dt omega(xi) vanishes."""
        x, xi = np.array([0.3, -0.2, 0.1]), np.array([1.0, 0.5, 1.0])
        eta = euler_lagrange.min_norm_acceleration(euler_lagrange.assemble_el_system(self.heisenberg, x, xi))
        fixed = euler_lagrange.gauge_fix(self.heisenberg, x, xi, eta, 'omega-const')
        rate = np.dot(self.heisenberg.omega(x), fixed) + xi.dot(self.heisenberg.domega(x)).dot(xi)
        self.assertAlmostEqual(0.0, rate, delta=1e-12)
        np.testing.assert_allclose(np.zeros(3), np.cross(fixed - eta, xi), atol=1e-12)
        dx, dxi = euler_lagrange.geodesic_rhs(self.heisenberg, euler_lagrange.GeodesicState(x, xi))
        np.testing.assert_array_equal(xi, dx)
        np.testing.assert_allclose(fixed, dxi, atol=1e-12)

    def test_reeb_orbit(self):
        """The Reeb seed stays on the t-axis."""
        traj = euler_lagrange.integrate_geodesic(self.heisenberg, np.zeros(3), [0.0, 0.0, 1.0], 1.0)
        self.assertEqual(ode.COMPLETED, traj.termination)
        self.assertLessEqual(np.max(np.abs(traj.x[:, :2])), 1e-9)
        self.assertAlmostEqual(1.0, traj.x[-1, 2], delta=1e-9)

    def test_omega_constant_gauge(self):
        """omega(xi) stays constant and doubling the seed doubles the speed."""
        x, xi = np.array([0.1, 0.0, -0.1]), np.array([1.0, 0.5, 0.8])
        traj = euler_lagrange.integrate_geodesic(self.heisenberg, x, xi, 1.0, rel_tol=1e-11, abs_tol=1e-13)
        np.testing.assert_allclose(traj.omega_xi, traj.omega_xi[0], rtol=1e-8)
        fast = euler_lagrange.integrate_geodesic(self.heisenberg, x, 2.0 * xi, 0.5, rel_tol=1e-11, abs_tol=1e-13)
        np.testing.assert_allclose(traj.x[-1], fast.x[-1], atol=1e-8)

    def test_farclength_gauge(self):
        """F stays at one along a normalized FArclength run."""
        s = closed_kropina(3)
        x = np.array([0.2, 0.4, -0.1])
        xi = euler_lagrange.normalize_seed(s, x, [1.0, 0.3, 0.6])
        self.assertAlmostEqual(1.0, kropina_base.eval_F(s, x, xi), delta=1e-14)
        traj = euler_lagrange.integrate_geodesic(s, x, xi, 1.0, gauge='FArclength', rel_tol=1e-12, abs_tol=1e-14)
        self.assertEqual(ode.COMPLETED, traj.termination)
        np.testing.assert_allclose(traj.F, 1.0, atol=1e-8)

    def test_normalize_negative_seed(self):
        """A seed with F < 0 cannot be normalized."""
        self.assertRaises(euler_lagrange.GaugeSingular, euler_lagrange.normalize_seed,
                          euclidean_kropina(2), np.zeros(2), [-1.0, 0.0])

    def test_box_event(self):
        """Leaving the working box stops the run."""
        box = (-np.ones(3), 0.5 * np.ones(3))
        traj = euler_lagrange.integrate_geodesic(euclidean_kropina(3), np.zeros(3), [1.0, 0.0, 0.0], 2.0, box=box)
        self.assertEqual('EventStop:LeftBox', traj.termination)
        self.assertAlmostEqual(0.5, traj.meta['event_time'], delta=1e-10)

    def test_chain_convergence_order(self):
        """Fixed-step RK4 on a Heisenberg chain converges with order four."""
        state0 = euler_lagrange.GeodesicState(np.zeros(3), [1.0, 0.0, 1.0]).flat()
        report = ode.convergence_order(euler_lagrange.make_rhs(self.heisenberg), state0, (0.0, 1.0),
                                       n_steps=32, halvings=4)
        self.assertGreaterEqual(report['slope'], 3.9)

    def test_levi_civita_flat(self):
        """Constant metrics have vanishing symbols."""
        np.testing.assert_array_equal(np.zeros((3, 3, 3)),
                                      euler_lagrange.levi_civita_symbols(euclidean_kropina(3), np.ones(3)))
        self.assertRaises(kropina_base.DegenerateMetric, euler_lagrange.levi_civita_symbols,
                          self.heisenberg, np.zeros(3))

    def test_levi_civita_exponential(self):
        """g = diag(exp(2 x1), 1) has Gamma_11^1 = 1 and nothing else."""
        s = kropina_base.KropinaStructure(
            2, lambda x: np.diag([np.exp(2.0 * x[0]), 1.0]), lambda x: np.array([0.0, 1.0]),
            lambda x: np.array([[[2.0 * np.exp(2.0 * x[0]), 0.0], [0.0, 0.0]], np.zeros((2, 2))]),
            lambda x: np.zeros((2, 2)))
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 0] = 1.0
        np.testing.assert_allclose(expected, euler_lagrange.levi_civita_symbols(s, [0.3, -0.2]), atol=1e-14)

    def test_levi_civita_symmetric(self):
        """Gamma_ij^k is symmetric in i, j and agrees with differenced derivatives."""
        for _ in range(20):
            state = self.rng.get_state()
            s = curved_structure(self.rng)
            self.rng.set_state(state)
            differenced = curved_structure(self.rng, analytic=False)
            for _ in range(5):
                x = self.rng.uniform(-1.0, 1.0, 3)
                gamma = euler_lagrange.levi_civita_symbols(s, x)
                np.testing.assert_allclose(gamma, gamma.transpose(1, 0, 2), atol=1e-14)
                np.testing.assert_allclose(gamma, euler_lagrange.levi_civita_symbols(differenced, x), atol=1e-7)

    def test_covariant_form_in_normal_chart(self):
        """Where the symbols vanish, g^-1 A and g^-1 b are the covariant expressions."""
        for _ in range(5):
            s = curved_structure(self.rng)
            p = self.rng.uniform(-0.5, 0.5, 3)
            chart, gamma = normal_chart(s, p)
            np.testing.assert_allclose(np.zeros((3, 3, 3)), chart.dg(np.zeros(3)), atol=1e-8)
            while True:
                xi = self.rng.normal(size=3)
                if abs(np.dot(s.omega(p), xi)) >= 0.5 and np.linalg.norm(xi) <= 2.0:
                    break
            g = s.g(p)
            ginv = np.linalg.inv(g)
            omega_x = s.omega(p)
            omega_g = ginv.dot(omega_x)
            w = float(np.dot(omega_x, xi))
            q = float(xi.dot(g).dot(xi))
            # nabla[i, j] = d_i omega_j - Gamma_ij^k omega_k
            nabla = s.domega(p) - np.einsum('ijk,k->ij', gamma, omega_x)
            nabla_xixi = float(xi.dot(nabla).dot(xi))
            curl = 0.5 * (nabla.T - nabla).dot(xi)
            expected_A = (np.eye(3) - np.outer(xi, omega_x) / w - np.outer(omega_g, g.dot(xi)) / w
                          + q * np.outer(omega_g, omega_x) / w ** 2)
            expected_b = (nabla_xixi * xi / w + q / w * ginv.dot(curl)
                          - q * nabla_xixi * omega_g / w ** 2)
            system = euler_lagrange.assemble_el_system(chart, np.zeros(3), xi)
            np.testing.assert_allclose(expected_A, ginv.dot(system.A), atol=1e-7)
            np.testing.assert_allclose(expected_b, ginv.dot(system.b), atol=1e-7)

    def test_farclength_heisenberg(self):
        """F stays at one along a normalized Heisenberg seed."""
        xi = euler_lagrange.normalize_seed(self.heisenberg, np.zeros(3), [1.0, 0.0, 0.5])
        np.testing.assert_allclose([0.25, 0.0, 0.125], xi, atol=1e-15)
        traj = euler_lagrange.integrate_geodesic(self.heisenberg, np.zeros(3), xi, 1.0, gauge='FArclength',
                                                 rel_tol=1e-10, abs_tol=1e-12)
        self.assertEqual(ode.COMPLETED, traj.termination)
        self.assertLessEqual(np.max(np.abs((traj.F - 1.0) * traj.omega_xi)), 1e-8)
        np.testing.assert_allclose(traj.F, 1.0, atol=1e-8)

    def test_modified_metric_keeps_geodesics(self):
        """Adding df to F leaves the omega-constant geodesics in place."""
        f = kropina_base.ScalarField.linear([0.2, -0.1, 0.5])
        modified = kropina_base.modify_metric(self.heisenberg, f)
        for _ in range(3):
            x, xi = random_seed(self.rng, self.heisenberg, spread=0.3)
            first = euler_lagrange.integrate_geodesic(self.heisenberg, x, xi, 1.0, rel_tol=1e-10)
            second = euler_lagrange.integrate_geodesic(modified, x, xi, 1.0, rel_tol=1e-10)
            self.assertLessEqual(equivalence.trace_distance(first, second), 1e-6)

    def test_constant_rescaling_keeps_geodesics(self):
        """theta = exp(0.5) theta0 scales g and omega together, so geodesics agree."""
        rescaled = cr_models.rescaled_kropina(cr_models.CRModelSpec.from_catalog(1, 'const'))
        for _ in range(3):
            x, xi = random_seed(self.rng, self.heisenberg, spread=0.3)
            first = euler_lagrange.integrate_geodesic(self.heisenberg, x, xi, 1.0, rel_tol=1e-10)
            second = euler_lagrange.integrate_geodesic(rescaled, x, xi, 1.0, rel_tol=1e-10)
            self.assertLessEqual(equivalence.sup_distance(first, second), 1e-6)
