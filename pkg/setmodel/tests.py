import math
from pathlib import Path
import tempfile

import numpy as np
import pandas as pd
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from geoanalysis.exceptions.exceptions import ConfigurationError, EmptySetError, SceneError
from geoanalysis.utils.config_reader import ConfigReader
from setmodel.measure import box_count_measure, unit_ball_volume
from setmodel.scenes import ClosedSetSample, SceneSpec, build_scene, cantor_function, cantor_primitive
from setmodel.utils.point_io import dump_points
from setmodel.utils.scene_config import read_scene_specs


def scene(tag, n, rho, **params):
    return build_scene(SceneSpec(tag, n, rho, params, scene_id=tag))


class SceneBuildTest(SimpleTestCase):
    def test_plane_lattice_stays_inside_the_cylinder(self):
        gamma = scene('plane', 1, 1 / 128)
        self.assertEqual(len(gamma.points), 255)
        self.assertTrue(np.all(gamma.heights == 0.0))
        self.assertTrue(np.all(np.abs(gamma.horizontal) < 1.0))
        self.assertEqual(gamma.intrinsic_dim, 1)

    def test_plane_height(self):
        gamma = scene('plane', 2, 1 / 16, height=-0.25)
        self.assertTrue(np.allclose(gamma.heights, -0.25))
        self.assertEqual(gamma.ambient_dim, 3)

    def test_sphere_cap_reports_its_mean_curvature(self):
        gamma = scene('sphere-cap', 2, 1 / 32, radius=0.5)
        self.assertEqual(gamma.mc_bound, 4.0)
        radii = np.linalg.norm(gamma.points - np.array([0.0, 0.0, -0.5]), axis=1)
        self.assertTrue(np.allclose(radii, 0.5))

    def test_curve_is_one_dimensional(self):
        gamma = scene('curve-in-R3', 2, 1 / 64, radius=0.5, height=-0.1)
        self.assertEqual(gamma.intrinsic_dim, 1)
        self.assertEqual(len(gamma.points), math.ceil(math.pi * 64))

    def test_point_union_outside_the_cylinder(self):
        with self.assertRaises(SceneError):
            scene('point-union', 2, 0.1, points=[[2.0, 0.0, 0.0]])

    def test_point_union_with_wrong_arity(self):
        with self.assertRaises(SceneError):
            scene('point-union', 2, 0.1, points=[[0.0, 0.0]])

    def test_invalid_specs(self):
        with self.assertRaises(SceneError):
            scene('torus', 2, 0.1)
        with self.assertRaises(SceneError):
            scene('plane', 2, 0.0)
        with self.assertRaises(SceneError):
            scene('cantor-primitive-graph', 2, 0.1)
        with self.assertRaises(SceneError):
            build_scene(SceneSpec('graph-of-function', 1, 0.1, {'kind': 'spiral'}))

    def test_empty_sample_set(self):
        gamma = ClosedSetSample(points=np.empty((0, 3)), intrinsic_dim=2, resolution=0.1)
        with self.assertRaises(EmptySetError):
            gamma.distance(np.zeros(3))


class CantorTest(SimpleTestCase):
    def test_primitive_values_at_the_thirds(self):
        sigma = np.array([1 / 3, 2 / 3, 1.0])
        for depth in (0, 3, 6):
            values = cantor_primitive(sigma, depth)
            if depth:
                self.assertTrue(np.allclose(values, [1 / 12, 0.25, 0.5]))
            else:
                self.assertTrue(np.allclose(values, 0.5 * sigma ** 2))

    def test_cantor_function_is_monotone(self):
        sigma = np.linspace(0.0, 1.0, 2001)
        values = cantor_function(sigma, 6)
        self.assertTrue(np.all(np.diff(values) >= 0.0))
        self.assertEqual(values[0], 0.0)
        self.assertAlmostEqual(values[-1], 1.0, places=12)


class NearestPointTest(SimpleTestCase):
    def test_ties_return_every_nearest_sample(self):
        gamma = scene('point-union', 1, 0.1, points=[[-0.5, 0.0], [0.5, 0.0]], m=1)
        self.assertEqual(len(gamma.nearest_points(np.array([0.0, 0.3]))), 2)
        self.assertEqual(len(gamma.nearest_points(np.array([0.1, 0.3]))), 1)

    def test_fiber_diameter(self):
        gamma = scene('point-union', 1, 0.1, points=[[-0.5, 0.0], [0.5, 0.0]], m=1)
        self.assertAlmostEqual(gamma.nearest_fiber_diameter(np.array([0.0, 0.3]), 0.0), 1.0)
        self.assertEqual(gamma.nearest_fiber_diameter(np.array([0.1, 0.3]), 0.0), 0.0)

    def test_negative_tolerance(self):
        gamma = scene('plane', 1, 0.1)
        with self.assertRaises(ValueError):
            gamma.nearest_points(np.zeros(2), tol=-1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        x=st.floats(min_value=-0.6, max_value=0.6),
        y=st.floats(min_value=-0.6, max_value=0.6),
        z=st.floats(min_value=-1.0, max_value=1.0),
    )
    def test_sample_distance_brackets_the_exact_distance(self, x, y, z):
        gamma = scene('plane', 2, 1 / 64)
        p = np.array([x, y, z])
        exact = gamma.exact_distance(p)
        sampled = float(gamma.distance(p))
        self.assertGreaterEqual(sampled, exact - 1e-12)
        self.assertLessEqual(sampled, exact + gamma.resolution)


class CapDistanceTest(SimpleTestCase):
    def test_hemisphere_distance_inside_and_beyond_the_cap(self):
        gamma = scene('sphere-cap', 2, 1 / 16, radius=0.5)
        probes = np.array([[0.0, 0.0, 0.25], [0.8, 0.0, -0.5], [0.5, 0.0, -1.0], [0.0, 0.0, -0.5]])
        self.assertTrue(np.allclose(gamma.exact_distance(probes), [0.25, 0.3, 0.5, 0.5]))

    def test_full_circle_uses_the_sphere_distance(self):
        gamma = scene('sphere-cap', 1, 1 / 64, radius=0.5, cap_angle=math.pi)
        self.assertAlmostEqual(gamma.exact_distance(np.array([0.0, -1.5])), 0.5)
        self.assertLessEqual(float(gamma.distance(np.array([0.0, -1.5]))), 0.5 + 1 / 64)


class BoxCountTest(SimpleTestCase):
    def test_unit_segment(self):
        t = np.arange(0.0, 1.0, 1e-3)
        points = np.stack([t, np.zeros_like(t)], axis=1)
        estimate = box_count_measure(points, 1, 1 / 64)
        self.assertAlmostEqual(estimate.value, 1.0, places=12)
        self.assertAlmostEqual(estimate.error_bound, 0.0, places=12)

    def test_rotated_segment_keeps_its_length(self):
        t = np.arange(0.0, 1.0, 1e-3)
        direction = np.array([math.cos(0.3), math.sin(0.3)])
        points = 0.01 + t[:, None] * direction
        estimate = box_count_measure(points, 1, 1 / 64)
        self.assertAlmostEqual(estimate.value, 1.0, delta=0.05)

    def test_full_dimension_counts_volume(self):
        axis = (np.arange(64) + 0.5) / 64
        points = np.stack(np.meshgrid(axis, axis, indexing='ij'), axis=-1).reshape(-1, 2)
        self.assertAlmostEqual(box_count_measure(points, 2, 1 / 64).value, 1.0, places=12)

    def test_counting_measure(self):
        points = np.array([[0.0, 0.0], [0.5, 0.5], [0.51, 0.5]])
        self.assertEqual(box_count_measure(points, 0, 1 / 4).value, 2.0)

    def test_box_below_the_resolution_is_unreliable(self):
        estimate = box_count_measure(np.zeros((1, 2)), 1, 0.01, resolution=0.1)
        self.assertFalse(estimate.reliable)
        self.assertTrue(math.isinf(estimate.error_bound))

    def test_empty_and_invalid(self):
        self.assertEqual(box_count_measure(np.empty((0, 2)), 1, 0.1).value, 0.0)
        with self.assertRaises(ValueError):
            box_count_measure(np.zeros((1, 2)), -1, 0.1)
        with self.assertRaises(ValueError):
            box_count_measure(np.zeros((1, 2)), 1, 0.0)

    def test_unit_ball_volume(self):
        self.assertAlmostEqual(unit_ball_volume(1), 2.0)
        self.assertAlmostEqual(unit_ball_volume(2), math.pi)
        self.assertAlmostEqual(unit_ball_volume(3), 4.0 * math.pi / 3.0)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=50))
    def test_counting_never_exceeds_the_sample_count(self, raw):
        value = box_count_measure(np.array(raw), 0, 0.1).value
        self.assertGreaterEqual(value, 1.0)
        self.assertLessEqual(value, len(raw))


class SceneConfigTest(SimpleTestCase):
    def test_sections_become_specs(self):
        reader = ConfigReader(
            "[scene:corner]\ngenerator = graph-of-function\nkind = abs\nn = 1\nresolution = 1/256\n"
            "[scene:pts]\ngenerator = point-union\nn = 2\nm = 2\npoints = 0,0,0; 0.5, 0, -0.25\nresolution = 0.1\n"
        )
        corner, pts = read_scene_specs(reader)
        self.assertEqual(corner.scene_id, 'corner')
        self.assertEqual(corner.params, {'kind': 'abs'})
        self.assertEqual(corner.resolution, 1 / 256)
        self.assertEqual(pts.params['m'], 2)
        self.assertEqual(pts.params['points'], [[0.0, 0.0, 0.0], [0.5, 0.0, -0.25]])

    def test_unknown_generator_is_positioned(self):
        reader = ConfigReader("[scene:x]\nn = 1\ngenerator = torus\nresolution = 0.1\n")
        with self.assertRaises(ConfigurationError) as ctx:
            read_scene_specs(reader)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (3, 13))

    def test_missing_resolution(self):
        reader = ConfigReader("[scene:x]\ngenerator = plane\nn = 1\n")
        with self.assertRaises(ConfigurationError):
            read_scene_specs(reader)


class PointDumpTest(SimpleTestCase):
    def test_dump_and_reload(self):
        gamma = scene('curve-in-R3', 2, 1 / 16)
        with tempfile.TemporaryDirectory() as tmp:
            path = dump_points(gamma, Path(tmp) / 'curve.csv')
            self.assertEqual(path.read_text(encoding='utf-8').splitlines()[0], 'z1,z2,z3')
            loaded = pd.read_csv(path, encoding='utf-8').to_numpy(dtype=float)
        self.assertEqual(loaded.shape, gamma.points.shape)
        self.assertTrue(np.allclose(loaded, gamma.points, atol=1e-11))
