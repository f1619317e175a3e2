import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from abp.constants import (
    codim1_factors,
    codim1_gamma,
    general_factors,
    general_gamma,
    projection_factor,
    savin_reference,
)
from abp.verifier import (
    HOLDS,
    HYPOTHESIS_VIOLATED,
    abp_codim1,
    abp_general,
    fiber_arc_length,
    fiber_measure,
    fibers_by_foot,
    projection_inequality_check,
    savin_ratio,
)
from normalbundle.viscosity import viscosity_test
from paraboloids.engine import CenterGrid, contact_set
from setmodel.scenes import SceneSpec, build_scene


def scene(tag, n, rho, **params):
    return build_scene(SceneSpec(tag, n, rho, params, scene_id=tag))


class ConstantsTest(SimpleTestCase):
    def test_codimension_one_chain(self):
        self.assertEqual(codim1_gamma(2, 0.0), 16.0)
        f1, f2 = codim1_factors(2, 0.0, 1.0)
        self.assertEqual(f1, 4.0)
        self.assertAlmostEqual(f2, math.sqrt(5.0))
        self.assertAlmostEqual(1.0 / savin_reference(2, 0.0, 1.0), 143.108, places=3)

    def test_general_chain(self):
        self.assertEqual(general_gamma(2, 1, 0.0), 8.0)
        self.assertEqual(general_factors(2, 1, 0.0, 1.0), (3.0, 2.0))
        # m = n reduces to the codimension-one constant
        self.assertEqual(general_gamma(3, 3, 0.5), codim1_gamma(3, 0.5))

    @settings(max_examples=50)
    @given(a=st.floats(min_value=1e-3, max_value=1e3))
    def test_projection_factor_is_at_least_one(self, a):
        self.assertGreaterEqual(projection_factor(a), 1.0)
        self.assertGreaterEqual(projection_factor(a), 2.0 * a)


class FiberTest(SimpleTestCase):
    def test_point_fibers_count_clusters(self):
        up = np.array([0.0, 0.0, 1.0])
        tilted = np.array([0.0, math.sin(1e-4), math.cos(1e-4)])
        self.assertEqual(fiber_measure(np.stack([up, tilted]), 0, 0.01).value, 1.0)
        self.assertEqual(fiber_measure(np.stack([up, -up]), 0, 0.01).value, 2.0)
        self.assertEqual(fiber_measure(np.empty((0, 3)), 0, 0.01).value, 0.0)

    def test_arc_length(self):
        angles = np.linspace(0.0, 0.2, 21)
        arc = np.stack([np.zeros_like(angles), np.sin(angles), np.cos(angles)], axis=1)
        self.assertAlmostEqual(fiber_arc_length(arc), 0.2, places=9)


class AbpCodim1Test(SimpleTestCase):
    def test_flat_disk(self):
        gamma = scene('plane', 2, 1 / 64)
        report = abp_codim1(gamma, 0.0, 1.0, CenterGrid.ball(2, 1 / 64), rho_box=1 / 32)
        self.assertAlmostEqual(report.lhs.value, math.pi, delta=0.3)
        self.assertAlmostEqual(report.measure.value, math.pi, delta=0.3)
        self.assertAlmostEqual(report.rhs_constant, 64.0 * math.sqrt(5.0))
        self.assertGreater(report.margin, 0.0)
        self.assertEqual(report.verdict, HOLDS)
        self.assertIn('boundary-touch', report.flags)

    def test_one_dimensional_plane(self):
        gamma = scene('plane', 1, 1 / 128)
        report = abp_codim1(gamma, 0.0, 1.0, CenterGrid.ball(1, 1 / 128))
        self.assertAlmostEqual(report.lhs.value, 2.0, delta=0.05)
        self.assertEqual(report.verdict, HOLDS)

    def test_single_point_is_not_admissible(self):
        gamma = scene('point-union', 2, 1 / 16, points=[[0.0, 0.0, 0.0]], m=2)
        viscosity = viscosity_test(gamma, 2, 0.0, 40, seed=1)
        self.assertEqual(viscosity.verdict, 'rejects')
        report = abp_codim1(gamma, 0.0, 1.0, CenterGrid.ball(2, 1 / 16), viscosity=viscosity)
        self.assertEqual(report.verdict, HYPOTHESIS_VIOLATED)
        self.assertIn('viscosity-rejects', report.flags)

    def test_sphere_cap_at_two_resolutions(self):
        for rho in (1 / 64, 1 / 128):
            gamma = scene('sphere-cap', 2, rho, radius=0.5)
            report = abp_codim1(gamma, gamma.mc_bound, 1.0, CenterGrid.ball(2, rho, radius=0.25))
            with self.subTest(rho=rho):
                self.assertAlmostEqual(report.rhs_constant, 400.0 * 36.0 * math.sqrt(5.0))
                self.assertAlmostEqual(report.lhs.value, math.pi / 16, delta=0.05)
                self.assertGreater(report.measure.value, 0.0)
                self.assertGreater(report.margin, 0.0)
                self.assertEqual(report.verdict, HOLDS)

    def test_catenoid_at_two_resolutions(self):
        for rho in (1 / 32, 1 / 64):
            gamma = scene('graph-of-function', 2, rho, kind='catenoid')
            for a in (0.5, 1.0):
                report = abp_codim1(gamma, 0.0, a, CenterGrid.ball(2, rho))
                with self.subTest(rho=rho, a=a):
                    self.assertGreater(report.measure.value, 1.0)
                    self.assertGreater(report.margin, 0.0)
                    self.assertEqual(report.verdict, HOLDS)


class AbpGeneralTest(SimpleTestCase):
    def test_circle_in_space(self):
        gamma = scene('curve-in-R3', 2, 1 / 16, radius=0.5, height=-0.1)
        report = abp_general(
            gamma, 1, 2.0, 1.0, CenterGrid.ball(2, 1 / 16), stratum_radius=1.0, direction_resolution=0.2,
        )
        self.assertEqual(report.kind, 'general')
        self.assertEqual(report.rhs_constant, 40.0 * 3.0 * 4.0)
        self.assertGreater(report.measure.value, 0.0)
        self.assertEqual(report.verdict, HOLDS)

    def test_circle_in_space_at_a_finer_resolution(self):
        gamma = scene('curve-in-R3', 2, 1 / 32, radius=0.5, height=-0.1)
        report = abp_general(
            gamma, 1, 2.0, 1.0, CenterGrid.ball(2, 1 / 16), stratum_radius=1.0, direction_resolution=0.2,
        )
        self.assertGreater(report.measure.value, 0.0)
        self.assertGreater(report.margin, 0.0)
        self.assertEqual(report.verdict, HOLDS)

    def test_circle_fiber_is_a_great_circle_arc(self):
        a, radius = 1.0, 0.5
        gamma = scene('curve-in-R3', 2, 1 / 16, radius=radius, height=-0.1)
        foot = gamma.points[0]
        radial = np.array([foot[0], foot[1]]) / np.linalg.norm(foot[:2])
        reach = np.linspace(0.05, 1.0, 40)
        contacts = contact_set(gamma, a, reach[:, None] * radial, merge=False)
        fibers = fibers_by_foot(contacts)
        self.assertEqual(list(fibers), [0])
        tangent = np.array([-radial[1], radial[0], 0.0])
        self.assertTrue(np.allclose(fibers[0] @ tangent, 0.0, atol=1e-12))
        analytic = math.atan(a * (1.0 - radius)) - math.atan(a * (0.05 - radius))
        self.assertAlmostEqual(fiber_arc_length(fibers[0]), analytic, delta=0.05 * analytic)

    def test_no_foot_in_the_requested_stratum(self):
        gamma = scene('plane', 2, 1 / 16)
        report = abp_general(
            gamma, 1, 0.0, 1.0, CenterGrid.ball(2, 1 / 8), stratum_radius=0.5, direction_resolution=0.2,
        )
        self.assertEqual(report.verdict, HYPOTHESIS_VIOLATED)
        self.assertIn('no-stratum-contacts', report.flags)


class ProjectionTest(SimpleTestCase):
    def test_tilted_plane(self):
        gamma = scene('graph-of-function', 2, 1 / 64, kind='linear', slope=1.0)
        report = projection_inequality_check(gamma, 1.0, CenterGrid.ball(2, 1 / 64))
        self.assertAlmostEqual(report.factor, math.sqrt(5.0))
        self.assertLessEqual(report.ratio, report.factor)
        # graph area factor of a slope-one plane
        self.assertAlmostEqual(report.ratio, math.sqrt(2.0), delta=0.12)
        self.assertEqual(report.verdict, HOLDS)


class SavinTest(SimpleTestCase):
    def test_cap_stays_inside(self):
        gamma = scene('sphere-cap', 2, 1 / 32, radius=0.5)
        report = savin_ratio(gamma, 1.0, CenterGrid.ball(2, 1 / 32), h=gamma.mc_bound)
        self.assertTrue(report.contained)
        self.assertEqual(report.verdict, 'reported')
        self.assertGreater(report.ratio, report.reference)

    def test_boundary_contact_is_flagged(self):
        gamma = scene('plane', 2, 1 / 32)
        report = savin_ratio(gamma, 1.0, CenterGrid.ball(2, 1 / 32))
        self.assertFalse(report.contained)
        self.assertEqual(report.verdict, HYPOTHESIS_VIOLATED)
        self.assertAlmostEqual(report.ratio, 1.0, delta=0.1)
