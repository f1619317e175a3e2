import math
import time

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from geoanalysis.exceptions.exceptions import EmptySetError, GeometryDomainError
from paraboloids.engine import (
    CenterGrid,
    Paraboloid,
    brute_force_field,
    contact_normal,
    contact_points,
    contact_set,
    eval_paraboloid,
    opening_monotonicity_check,
    project_contact_set,
    touching_offset,
    touching_offset_field,
    vertex_map,
)
from paraboloids.envelope import upper_envelope_1d
from paraboloids.utils.contact_io import contact_columns, contact_frame
from setmodel.scenes import ClosedSetSample, SceneSpec, build_scene


def scene(tag, n, rho, **params):
    return build_scene(SceneSpec(tag, n, rho, params, scene_id=tag))


coordinate = st.floats(min_value=-0.7, max_value=0.7, allow_nan=False)
height = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


class ParaboloidTest(SimpleTestCase):
    def test_evaluation(self):
        p = Paraboloid(center=np.array([0.5, 0.0]), opening=2.0, offset=-1.0)
        self.assertAlmostEqual(p(np.array([0.5, 1.0])), 0.0)
        self.assertAlmostEqual(eval_paraboloid(p, np.array([0.5, 0.0])), -1.0)

    def test_touching_offset_on_a_plane(self):
        gamma = scene('plane', 1, 1 / 64, height=-0.25)
        self.assertAlmostEqual(touching_offset(gamma, 1.0, [0.0]), -0.25, places=14)
        self.assertAlmostEqual(touching_offset(gamma, 1.0, [1 / 128]), -0.25 - 0.5 * (1 / 128) ** 2, places=14)

    def test_tiny_openings(self):
        gamma = scene('plane', 1, 1 / 64)
        t = touching_offset(gamma, 1e-9, [1 / 128])
        self.assertAlmostEqual(t, -0.5e-9 * (1 / 128) ** 2, delta=1e-28)

    def test_invalid_inputs(self):
        gamma = scene('plane', 1, 1 / 8)
        with self.assertRaises(GeometryDomainError):
            touching_offset(gamma, 0.0, [0.0])
        with self.assertRaises(GeometryDomainError):
            contact_set(gamma, 1.0, CenterGrid.single([1.5]))
        with self.assertRaises(GeometryDomainError):
            CenterGrid.ball(1, 0.1, radius=0.5, center=[0.75])
        empty = ClosedSetSample(points=np.empty((0, 2)), intrinsic_dim=1, resolution=0.1)
        with self.assertRaises(EmptySetError):
            touching_offset(empty, 1.0, [0.0])


class VertexMapTest(SimpleTestCase):
    @settings(max_examples=60, deadline=None)
    @given(
        a=st.floats(min_value=0.01, max_value=50.0),
        x=st.tuples(coordinate, coordinate),
        z=st.tuples(coordinate, coordinate, height),
    )
    def test_vertex_map_inverts_the_contact_normal(self, a, x, z):
        x, z = np.array(x), np.array(z)
        eta = contact_normal(a, x, z)
        self.assertAlmostEqual(float(np.linalg.norm(eta)), 1.0, places=12)
        self.assertTrue(np.allclose(vertex_map(a, z, eta), x, atol=1e-9))

    def test_downward_normal_is_outside_the_domain(self):
        with self.assertRaises(GeometryDomainError):
            vertex_map(1.0, np.zeros(2), np.array([0.0, -1.0]))

    def test_vertex_map_recovers_the_centers_of_contact_pairs(self):
        rho = 1 / 128
        scenes = (
            scene('plane', 2, rho),
            scene('graph-of-function', 2, rho, kind='linear', slope=1.0),
            scene('sphere-cap', 2, rho, radius=0.5),
        )
        grid = CenterGrid.ball(2, 1 / 32)
        for gamma in scenes:
            for a in (0.5, 1.0, 2.0):
                bound = 3.0 * rho * (1.0 + a) * math.sqrt(1.0 + 4.0 * a * a) / a
                pairs = contact_set(gamma, a, grid, merge=False)
                merged = contact_set(gamma, a, grid)
                with self.subTest(scene=gamma.scene_id, a=a):
                    self.assertGreaterEqual(len(pairs), 1000)
                    self.assertTrue(np.allclose(vertex_map(a, pairs.z, pairs.eta), pairs.centers, atol=1e-9))
                    recovered = vertex_map(a, merged.z, merged.eta)
                    self.assertLessEqual(float(np.max(np.linalg.norm(recovered - merged.centers, axis=1))), bound)


class EnvelopeTest(SimpleTestCase):
    def test_one_dimensional_envelope(self):
        positions = np.array([0.0, 1.0, 0.5])
        values = np.array([0.0, 0.0, -1.0])
        queries = np.array([-0.5, 0.25, 0.4, 0.75, 1.5])
        env, win = upper_envelope_1d(positions, values, queries, 2.0)
        brute = np.max(values[None, :] - (queries[:, None] - positions[None, :]) ** 2, axis=1)
        self.assertTrue(np.allclose(env, brute))
        self.assertEqual(win.tolist(), [0, 0, 0, 1, 1])

    @settings(max_examples=40, deadline=None)
    @given(
        samples=st.lists(st.tuples(coordinate, coordinate, height), min_size=1, max_size=40),
        a=st.floats(min_value=0.05, max_value=20.0),
    )
    def test_envelope_matches_brute_force(self, samples, a):
        gamma = ClosedSetSample(points=np.array(samples), intrinsic_dim=2, resolution=0.1)
        grid = CenterGrid.ball(2, 0.25)
        field = touching_offset_field(gamma, a, grid)
        brute, _ = brute_force_field(gamma, a, grid.points)
        self.assertEqual(field.method, 'envelope')
        self.assertTrue(np.allclose(field.values, brute, rtol=0.0, atol=1e-9))

    def test_sphere_cap_envelope_is_exact_and_faster(self):
        gamma = scene('sphere-cap', 2, 1 / 64, radius=0.5)
        grid = CenterGrid.ball(2, 1 / 64)
        started = time.perf_counter()
        field = touching_offset_field(gamma, 1.0, grid)
        envelope_time = time.perf_counter() - started
        started = time.perf_counter()
        brute, _ = brute_force_field(gamma, 1.0, grid.points)
        brute_time = time.perf_counter() - started
        self.assertEqual(field.method, 'envelope')
        self.assertLessEqual(float(np.max(np.abs(field.values - brute))), 1e-12)
        self.assertLess(envelope_time, brute_time)

    def test_scattered_centers_fall_back_to_brute_force(self):
        gamma = scene('plane', 1, 1 / 16)
        field = touching_offset_field(gamma, 1.0, np.array([[0.0], [0.3], [0.77]]))
        self.assertEqual(field.method, 'brute-force')
        self.assertTrue(field.warning)


class ContactSetTest(SimpleTestCase):
    def test_plane_contacts_everywhere(self):
        gamma = scene('plane', 1, 1 / 128)
        contacts = contact_set(gamma, 1.0, CenterGrid.ball(1, 1 / 128))
        self.assertEqual(len(contacts.feet()), 255)
        self.assertTrue(contacts.boundary_touch)
        self.assertTrue(np.allclose(project_contact_set(contacts)[:, 0], np.sort(gamma.horizontal[:, 0])))

    def test_ties_keep_every_maximizer(self):
        gamma = scene('point-union', 1, 0.1, points=[[-0.5, 0.0], [0.5, 0.0]], m=1)
        contacts = contact_set(gamma, 1.0, CenterGrid.single([0.0]))
        self.assertEqual(len(contacts), 2)
        self.assertTrue(np.allclose(np.abs(contacts.eta[:, 0]), 0.5 / math.sqrt(1.25)))

    def test_contact_points_within_tolerance(self):
        gamma = scene('plane', 1, 1 / 64)
        self.assertEqual(len(contact_points(gamma, 1.0, [0.0], tol=0.0)), 1)
        self.assertEqual(len(contact_points(gamma, 1.0, [1 / 128], tol=1e-12)), 2)
        with self.assertRaises(ValueError):
            contact_points(gamma, 1.0, [0.0], tol=-1.0)

    def test_contact_set_grows_with_the_opening(self):
        gamma = scene('sphere-cap', 1, 1 / 256, radius=0.5)
        grid = CenterGrid.ball(1, 1 / 64)
        small = project_contact_set(contact_set(gamma, 0.5, grid))
        large = project_contact_set(contact_set(gamma, 4.0, grid))
        self.assertLess(np.ptp(small[:, 0]), np.ptp(large[:, 0]))
        self.assertAlmostEqual(small[:, 0].max(), 0.187, delta=0.02)
        holds, worst, uncovered = opening_monotonicity_check(gamma, 0.5, 4.0, grid)
        self.assertTrue(holds)
        self.assertEqual(uncovered, 0)

    def test_frame_columns_and_order(self):
        gamma = scene('plane', 2, 1 / 8)
        contacts = contact_set(gamma, 1.0, CenterGrid.ball(2, 1 / 4))
        frame = contact_frame(contacts)
        self.assertEqual(list(frame.columns), contact_columns(2))
        self.assertEqual(list(frame.columns[:3]), ['z1', 'z2', 'z3'])
        self.assertTrue(frame['x1'].is_monotonic_increasing)
