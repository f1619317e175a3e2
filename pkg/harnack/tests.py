import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from geoanalysis.exceptions.exceptions import GeometryDomainError
from harnack.barrier import (
    BarrierSpec,
    admissible_opening,
    barrier_certificate,
    barrier_depth,
    barrier_phi,
    barrier_psi,
    calibrate_gamma,
    calibrate_theta,
    calibration_expression,
    graph_trace_Q,
)
from harnack.sliding import (
    FAILS,
    HOLDS,
    HYPOTHESIS_VIOLATED,
    ladder_drops,
    measure_to_point,
    slide_to_touch,
    weak_harnack_check,
)
from paraboloids.engine import Paraboloid, eval_paraboloid, touching_offset
from setmodel.scenes import SceneSpec, build_scene


def plane(n, rho, height=0.0):
    return build_scene(SceneSpec('plane', n, rho, {'height': height}, scene_id='plane'))


def graph(kind, n, rho, **params):
    return build_scene(SceneSpec('graph-of-function', n, rho, dict(kind=kind, **params), scene_id=kind))


def flat_opening(n, r):
    gamma_b = calibrate_gamma(n).gamma
    theta = calibrate_theta(gamma_b, r)
    return min(1.0 / (theta + 1.0), admissible_opening(gamma_b))


class BarrierPhiTest(SimpleTestCase):
    def test_zero_beyond_unit_radius(self):
        self.assertEqual(barrier_phi(3.0, 1.0), 0.0)
        self.assertEqual(barrier_phi(3.0, 2.5), 0.0)

    def test_direct_value(self):
        self.assertAlmostEqual(barrier_phi(2.0, 0.5), -1.5, places=14)

    def test_inner_plateau_is_the_depth(self):
        self.assertAlmostEqual(barrier_phi(2.0, 0.0), -barrier_depth(2.0), places=12)
        self.assertAlmostEqual(barrier_phi(2.0, 1.0 / 16.0), -barrier_depth(2.0), places=12)

    def test_continuity_at_the_joints(self):
        for gamma_b in (1.5, 4.0, 18.0):
            left = barrier_phi(gamma_b, np.nextafter(1.0 / 16.0, 0.0))
            right = barrier_phi(gamma_b, np.nextafter(1.0 / 16.0, 1.0))
            self.assertLess(abs(left - right), 1e-15 * barrier_depth(gamma_b) * 1e3)
            self.assertLess(abs(barrier_phi(gamma_b, np.nextafter(1.0, 0.0))), 1e-15 * gamma_b * 10)

    def test_rejects_small_exponent_and_negative_radius(self):
        with self.assertRaises(ValueError):
            barrier_phi(1.0, 0.5)
        with self.assertRaises(ValueError):
            barrier_phi(2.0, -0.1)

    @given(
        gamma_b=st.floats(min_value=1.01, max_value=30.0),
        s=st.floats(min_value=0.0, max_value=2.0),
        t=st.floats(min_value=0.0, max_value=2.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_non_decreasing(self, gamma_b, s, t):
        low, high = min(s, t), max(s, t)
        self.assertLessEqual(barrier_phi(gamma_b, low), barrier_phi(gamma_b, high) + 1e-12 * barrier_depth(gamma_b))


class BarrierPsiTest(SimpleTestCase):
    def setUp(self):
        self.spec = BarrierSpec(gamma_b=3.0, a=0.01, x1=np.array([0.1, -0.2]), x0=np.array([0.2, 0.1]), r=0.3, offset=0.05)

    def test_equals_paraboloid_outside_the_ball(self):
        x = np.array([[0.6, 0.1], [0.2, -0.25]])
        np.testing.assert_allclose(barrier_psi(self.spec, x), eval_paraboloid(self.spec.paraboloid, x), rtol=0, atol=1e-15)

    def test_deepest_point(self):
        expected = eval_paraboloid(self.spec.paraboloid, self.spec.x0) - self.spec.a * self.spec.r ** 2 * self.spec.depth
        self.assertAlmostEqual(barrier_psi(self.spec, self.spec.x0)[0], expected, places=15)

    def test_composition(self):
        x = np.array([[0.3, 0.2]])
        radial = np.linalg.norm(x[0] - self.spec.x0) / self.spec.r
        expected = eval_paraboloid(self.spec.paraboloid, x[0]) + self.spec.a * self.spec.r ** 2 * barrier_phi(3.0, radial)
        self.assertAlmostEqual(barrier_psi(self.spec, x)[0], expected, delta=1e-15)


class GraphTraceTest(SimpleTestCase):
    def test_flat_graph(self):
        trace, _ = graph_trace_Q(lambda x: np.zeros(len(x)), np.zeros((1, 2)), 0.01)
        self.assertEqual(trace[0], 0.0)

    def test_paraboloid_at_its_vertex(self):
        a = 0.7
        trace, slope = graph_trace_Q(lambda x: 0.5 * a * np.sum(x * x, axis=1), np.zeros((1, 3)), 0.01)
        self.assertAlmostEqual(trace[0], 3 * a, places=8)
        self.assertAlmostEqual(slope[0], 0.0, places=12)

    def test_downward_normal_flips_sign(self):
        psi = lambda x: 0.5 * np.sum(x * x, axis=1)  # noqa: E731
        up, _ = graph_trace_Q(psi, np.zeros((1, 2)), 0.01)
        down, _ = graph_trace_Q(psi, np.zeros((1, 2)), 0.01, normal='down')
        self.assertAlmostEqual(up[0], -down[0], places=12)

    def test_coarse_grid_is_rejected(self):
        with self.assertRaises(GeometryDomainError):
            graph_trace_Q(lambda x: np.zeros(len(x)), np.zeros((1, 2)), 0.1, r=1.0)

    def test_calibrated_barrier_is_strict_on_the_annulus(self):
        gamma_b = calibrate_gamma(2).gamma
        a = admissible_opening(gamma_b)
        spec = BarrierSpec(gamma_b=gamma_b, a=a, x1=np.array([0.05, 0.0]), x0=np.zeros(2), r=0.25)
        result = barrier_certificate(spec, h=0.9 * a)
        self.assertTrue(result.passes)
        self.assertGreater(result.points, 1000)

    @given(
        a_fraction=st.floats(min_value=0.01, max_value=1.0),
        h_fraction=st.floats(min_value=0.0, max_value=0.99),
    )
    @settings(max_examples=10, deadline=None)
    def test_strict_for_every_admissible_pair(self, a_fraction, h_fraction):
        gamma_b = calibrate_gamma(1).gamma
        a = a_fraction * admissible_opening(gamma_b)
        spec = BarrierSpec(gamma_b=gamma_b, a=a, x1=np.array([0.1]), x0=np.array([0.2]), r=0.5)
        self.assertTrue(barrier_certificate(spec, h=h_fraction * a).passes)


class CalibrationTest(SimpleTestCase):
    def test_one_dimension(self):
        result = calibrate_gamma(1, safety=2.0)
        self.assertGreaterEqual(result.gamma, 18.0)
        self.assertAlmostEqual(result.gamma, 2.0 ** (67 / 16), places=12)
        self.assertEqual(result.t_worst, 1.0)

    def test_two_dimensions(self):
        result = calibrate_gamma(2, safety=2.0)
        self.assertAlmostEqual(result.gamma, 2.0 ** (82 / 16), places=12)
        self.assertGreater(result.margin, 0.0)

    @given(n=st.integers(min_value=1, max_value=5), safety=st.floats(min_value=1.1, max_value=10.0))
    @settings(max_examples=30, deadline=None)
    def test_post_condition_replay(self, n, safety):
        result = calibrate_gamma(n, safety)
        t = np.linspace(1.0 / 16.0, 1.0, 1000)
        self.assertTrue(np.all(calibration_expression(n, result.gamma, t) <= -1.0 / safety))

    def test_theta_is_the_smallest_power_of_two(self):
        gamma_b, r = 18.0, 0.3
        theta = calibrate_theta(gamma_b, r)
        gap = 0.5 * ((3 * r / 64) ** 2 - (r / 64) ** 2)
        needed = barrier_depth(gamma_b) * r ** 2
        self.assertEqual(math.log2(theta), round(math.log2(theta)))
        self.assertGreater(theta * gap, needed)
        self.assertLessEqual(theta / 2 * gap, needed)


class SlideTest(SimpleTestCase):
    def test_flat_surface_over_lower_plane(self):
        gamma = plane(1, 1 / 64, height=-0.2)
        result = slide_to_touch(gamma, lambda x: np.zeros(len(x)))
        self.assertAlmostEqual(result.t, -0.2, places=15)
        self.assertEqual(len(result.indices), len(gamma.points))

    def test_paraboloid_reproduces_touching_offset(self):
        gamma = graph('quadratic', 2, 1 / 32, curvature=0.5)
        x = np.array([0.2, -0.1])
        result = slide_to_touch(gamma, lambda y: eval_paraboloid(Paraboloid(center=x, opening=2.0), y))
        self.assertAlmostEqual(result.t, touching_offset(gamma, 2.0, x), places=12)

    def test_region_mismatch(self):
        gamma = plane(1, 1 / 64)
        with self.assertRaises(GeometryDomainError):
            slide_to_touch(gamma, lambda x: np.zeros(len(x)), region=(np.zeros(1), 0.5))


class MeasureToPointTest(SimpleTestCase):
    def test_flat_sheet_reaches_the_ball_fraction(self):
        r = 0.5
        gamma = plane(1, 1 / 1024)
        report = measure_to_point(gamma, h=0.0, a=flat_opening(1, r), x0=[0.0], r=r)
        self.assertEqual(report.verdict, HOLDS)
        self.assertTrue(report.localized)
        self.assertTrue(report.sweep_contained)
        self.assertGreater(report.min_slack, 0.0)
        self.assertGreater(report.slide_t, 0.0)
        self.assertLessEqual(report.slide_t, report.slide_bound + 1e-12)
        self.assertAlmostEqual(report.beta, report.flat_reference, delta=0.01)

    def test_shallow_bump(self):
        r = 0.5
        gamma = graph('bump', 1, 1 / 1024, depth=0.05, width=0.5, h=0.0)
        report = measure_to_point(gamma, h=0.0, a=flat_opening(1, r), x0=[0.0], r=r)
        self.assertEqual(report.verdict, HOLDS)
        self.assertGreater(report.beta, 0.2)

    def test_beta_is_stable_under_refinement(self):
        r = 0.5
        a = flat_opening(1, r)
        cases = (
            ('plane', lambda rho: plane(1, rho)),
            ('bump', lambda rho: graph('bump', 1, rho, depth=0.05, width=0.5, h=0.0)),
        )
        for label, build in cases:
            betas = [measure_to_point(build(rho), h=0.0, a=a, x0=[0.0], r=r).beta for rho in (1 / 512, 1 / 1024)]
            with self.subTest(scene=label):
                self.assertGreater(min(betas), 0.0)
                self.assertAlmostEqual(betas[0], betas[1], delta=0.2 * betas[1])

    def test_corner_fails_localization(self):
        r = 0.4
        gamma = graph('abs', 1, 1 / 512, slope=1.0)
        report = measure_to_point(gamma, h=0.0, a=flat_opening(1, r), x0=[0.3], r=r)
        self.assertEqual(report.verdict, HYPOTHESIS_VIOLATED)
        self.assertEqual(report.hypothesis, 'localization')
        self.assertTrue(math.isnan(report.beta))

    def test_opening_above_one_over_alpha(self):
        report = measure_to_point(plane(1, 1 / 256), h=0.0, a=0.5, x0=[0.0], r=0.5)
        self.assertEqual(report.verdict, HYPOTHESIS_VIOLATED)
        self.assertEqual(report.hypothesis, 'opening')

    def test_ball_must_fit_the_cylinder(self):
        report = measure_to_point(plane(1, 1 / 256), h=0.0, a=1e-30, x0=[0.7], r=0.5)
        self.assertEqual(report.hypothesis, 'ball')


class WeakHarnackTest(SimpleTestCase):
    def test_flat_sheet_leaves_nothing_uncovered(self):
        alpha, k = 2.0, 3
        gamma = plane(1, 1 / 512, height=-alpha ** (-k - 1) / 96)
        report = weak_harnack_check(gamma, h=0.0, alpha=alpha, k=k, mu=0.5)
        self.assertEqual(report.verdict, HOLDS)
        self.assertEqual(report.residual, 0.0)
        self.assertTrue(report.monotone)
        self.assertTrue(report.touching_contained)
        self.assertEqual(len(report.levels), k + 1)
        self.assertGreater(report.levels[0], 0.0)
        self.assertAlmostEqual(report.eps, 1.0 / (48 * 16))
        self.assertAlmostEqual(report.beta1, 1.0 - 0.5 ** (1.0 / 3.0))

    def test_too_deep_scene_violates_the_slab(self):
        report = weak_harnack_check(plane(1, 1 / 256, height=-0.1), h=0.0, alpha=2.0, k=3, mu=0.5)
        self.assertEqual(report.verdict, HYPOTHESIS_VIOLATED)
        self.assertEqual(report.hypothesis, 'slab')
        self.assertEqual(report.levels, ())

    def test_positive_heights_are_rejected(self):
        report = weak_harnack_check(plane(1, 1 / 256, height=0.01), h=0.0, alpha=2.0, k=3, mu=0.5)
        self.assertEqual(report.hypothesis, 'nonpositive-height')

    def test_mean_curvature_bound(self):
        report = weak_harnack_check(plane(1, 1 / 256, height=-1e-4), h=0.5, alpha=2.0, k=3, mu=0.5)
        self.assertEqual(report.hypothesis, 'mean-curvature')

    def test_verdicts_are_known(self):
        report = weak_harnack_check(plane(1, 1 / 256, height=-1e-4), h=0.0, alpha=2.0, k=2, mu=0.9)
        self.assertIn(report.verdict, (HOLDS, FAILS, 'residual-exceeds-mu'))


class LadderTest(SimpleTestCase):
    def test_drop_inside_the_error_bars_is_noise(self):
        drops = ladder_drops([0.5, 0.49, 0.6], [0.01, 0.01, 0.0], 1 / 256)
        self.assertEqual(drops, [(0, drops[0][1], False)])
        self.assertAlmostEqual(drops[0][1], 0.01)

    def test_drop_of_one_box_is_noise(self):
        drops = ladder_drops([0.5, 0.5 - 1 / 256, 0.6], [0.0, 0.0, 0.0], 1 / 256)
        self.assertFalse(drops[0][2])

    def test_real_drop_is_significant(self):
        drops = ladder_drops([0.5, 0.3, 0.6], [0.02, 0.02, 0.0], 1 / 256)
        self.assertEqual([(j, significant) for j, _, significant in drops], [(0, True)])

    def test_increasing_ladder_has_no_drops(self):
        self.assertEqual(ladder_drops([0.1, 0.2, 0.3], [0.0, 0.0, 0.0], 0.01), [])

    @settings(max_examples=40)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=6))
    def test_drops_within_the_cell_never_count(self, measures):
        errors = [0.0] * len(measures)
        self.assertFalse(any(significant for _, _, significant in ladder_drops(measures, errors, 1.0)))
