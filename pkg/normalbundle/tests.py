import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from geoanalysis.exceptions.exceptions import AmbiguousProjectionError, GeometryDomainError
from normalbundle.bundle import NormalSample, sample_normal_bundle, stratum_dimension
from normalbundle.curvature import (
    check_curvature_bounds_at_contacts,
    check_trace_bound,
    curvature_records,
    principal_curvatures,
    sentinel_band,
)
from normalbundle.directions import direction_net, max_pairwise_angle
from normalbundle.utils.record_io import record_columns, record_frame
from normalbundle.viscosity import (
    QuadraticGraph,
    TestFunction,
    barrier_eigen_check,
    trace_m,
    viscosity_test,
)
from paraboloids.engine import CenterGrid, contact_set
from setmodel.scenes import SceneSpec, build_scene


def scene(tag, n, rho, **params):
    return build_scene(SceneSpec(tag, n, rho, params, scene_id=tag))


def origin_index(gamma):
    return int(np.argmin(np.linalg.norm(gamma.points, axis=1)))


def top_sample(gamma, direction=None):
    """Sample nearest the top of a sphere cap, with its outward normal."""
    index = int(np.argmax(gamma.heights)) if direction is None else int(
        np.argmin(np.linalg.norm(gamma.points - direction, axis=1))
    )
    z = gamma.points[index]
    return z, gamma.oracle.outward_normal(z)[0], index


class DirectionNetTest(SimpleTestCase):
    def test_circle_net(self):
        net = direction_net(2, 0.2)
        self.assertEqual(len(net), 32)
        self.assertTrue(np.allclose(np.linalg.norm(net, axis=1), 1.0))

    @settings(max_examples=20, deadline=None)
    @given(dim=st.integers(min_value=2, max_value=5), resolution=st.floats(min_value=0.3, max_value=1.0))
    def test_nets_are_unit_vectors(self, dim, resolution):
        net = direction_net(dim, resolution, seed=7)
        self.assertEqual(net.shape[1], dim)
        self.assertTrue(np.allclose(np.linalg.norm(net, axis=1), 1.0))

    def test_invalid_nets(self):
        with self.assertRaises(ValueError):
            direction_net(1, 0.2)
        with self.assertRaises(ValueError):
            direction_net(3, 0.0)

    def test_max_pairwise_angle(self):
        arc = np.array([[math.cos(t), math.sin(t)] for t in (0.0, 0.1, 0.25)])
        self.assertAlmostEqual(max_pairwise_angle(arc), 0.25, places=12)
        self.assertEqual(max_pairwise_angle(arc[:1]), 0.0)


class NormalBundleTest(SimpleTestCase):
    def test_plane_normals_are_nearly_vertical(self):
        gamma = scene('plane', 1, 1 / 64)
        index = origin_index(gamma)
        samples = sample_normal_bundle(gamma, 0.25, 0.1, indices=[index])
        self.assertTrue(samples)
        self.assertTrue(all(abs(s.eta[1]) >= 0.8 for s in samples))
        self.assertTrue(any(s.eta[1] > 0 for s in samples))
        self.assertTrue(any(s.eta[1] < 0 for s in samples))
        self.assertTrue(all(s.index == index and s.r == 0.25 for s in samples))

    def test_invalid_reach(self):
        with self.assertRaises(ValueError):
            sample_normal_bundle(scene('plane', 1, 0.1), 0.0, 0.2)

    def test_accepted_pairs_shrink_as_the_reach_grows(self):
        gamma = scene('sphere-cap', 1, 1 / 128, radius=1.0, cap_angle=math.pi)
        accepted = [
            {(s.index, tuple(s.eta)) for s in sample_normal_bundle(gamma, r, 0.2)}
            for r in (0.1, 0.25, 0.4)
        ]
        self.assertTrue(accepted[2])
        self.assertLessEqual(accepted[2], accepted[1])
        self.assertLessEqual(accepted[1], accepted[0])

    def test_stratum_of_a_plane(self):
        gamma = scene('plane', 2, 1 / 64)
        self.assertEqual(stratum_dimension(gamma, gamma.points[origin_index(gamma)], 0.5, 0.2).dimension, 2)

    def test_stratum_of_a_curve(self):
        gamma = scene('curve-in-R3', 2, 1 / 16, radius=0.5, height=-0.1)
        self.assertEqual(stratum_dimension(gamma, gamma.points[0], 1.0, 0.2).dimension, 1)

    def test_stratum_of_a_corner(self):
        gamma = scene('graph-of-function', 1, 1 / 256, kind='abs')
        self.assertEqual(stratum_dimension(gamma, gamma.points[origin_index(gamma)], 0.25, 0.2).dimension, 0)


class CurvatureTest(SimpleTestCase):
    def test_unit_circle_from_both_sides(self):
        gamma = scene('sphere-cap', 1, 1 / 128, radius=1.0)
        z, eta, index = top_sample(gamma)
        outside = principal_curvatures(gamma, NormalSample(z=z, eta=eta, r=0.25, index=index), 1 / 64)
        inside = principal_curvatures(gamma, NormalSample(z=z, eta=-eta, r=0.25, index=index), 1 / 64)
        self.assertEqual(outside.tangent_dim, 1)
        self.assertAlmostEqual(outside.kappas[0], 1.0, delta=0.02)
        self.assertAlmostEqual(inside.kappas[0], -1.0, delta=0.02)

    def test_curvature_does_not_depend_on_the_reach(self):
        gamma = scene('sphere-cap', 1, 1 / 128, radius=1.0)
        z, eta, index = top_sample(gamma)
        for sign in (1.0, -1.0):
            kappas = []
            for r in (1 / 8, 1 / 4):
                record = principal_curvatures(gamma, NormalSample(z=z, eta=sign * eta, r=r, index=index), 1 / 64)
                self.assertFalse(record.has_sentinel)
                kappas.append(record.kappas[0])
            self.assertAlmostEqual(kappas[0], kappas[1], delta=0.02)
            self.assertAlmostEqual(kappas[0], sign, delta=0.02)

    def test_sentinel_band_is_capped(self):
        self.assertAlmostEqual(sentinel_band(1 / 4, 1 / 128), 0.3125)
        self.assertEqual(sentinel_band(1 / 8, 1 / 64), 0.625)
        self.assertEqual(sentinel_band(1 / 4, 1 / 16), 0.625)

    def test_sphere_cap_traces_from_both_sides(self):
        for rho, stride in ((1 / 128, 16), (1 / 256, 64)):
            gamma = scene('sphere-cap', 2, rho, radius=0.5)
            step = max(2.0 * rho, 0.25 / 16)
            indices = np.arange(0, len(gamma.points), stride)
            normals = gamma.oracle.outward_normal(gamma.points[indices])
            for sign, target in ((1.0, 4.0), (-1.0, -4.0)):
                samples = [
                    NormalSample(z=gamma.points[i], eta=sign * normal, r=0.25, index=int(i))
                    for i, normal in zip(indices, normals)
                ]
                records, _ = curvature_records(gamma, samples, step)
                close = sum(
                    1 for record in records
                    if not record.has_sentinel and abs(record.finite_trace - target) <= 0.05 * abs(target)
                )
                with self.subTest(rho=rho, side=sign):
                    self.assertGreaterEqual(close, 0.9 * len(samples))

    def test_plane_is_flat_at_the_working_resolution(self):
        rho = 1 / 128
        gamma = scene('plane', 2, rho)
        sample = NormalSample(z=gamma.points[origin_index(gamma)], eta=np.array([0.0, 0.0, 1.0]), r=0.25)
        record = principal_curvatures(gamma, sample, 1 / 64)
        self.assertEqual(record.tangent_dim, 2)
        self.assertTrue(all(abs(k) <= 10.0 * rho / 0.25 for k in record.kappas[:2]))

    def test_cantor_sentinels_appear_with_depth(self):
        fractions = []
        for depth in (0, 2, 6):
            gamma = scene('cantor-primitive-graph', 1, 1 / 1024, depth=depth, lam=4.0)
            indices = np.flatnonzero(np.abs(gamma.horizontal[:, 0]) <= 0.9)[::2]
            normals = gamma.oracle.upward_normal(gamma.horizontal[indices])
            samples = [
                NormalSample(z=gamma.points[i], eta=normal, r=0.25, index=int(i))
                for i, normal in zip(indices, normals)
            ]
            records, skipped = curvature_records(gamma, samples, 1 / 64)
            self.assertEqual(skipped, 0)
            fractions.append(check_trace_bound(gamma, 1, 0.0, records, 1 / 64).sentinel_fraction)
        self.assertEqual(fractions[:2], [0.0, 0.0])
        self.assertGreater(fractions[2], 0.05)
        self.assertEqual(fractions, sorted(fractions))

    def test_sphere_trace(self):
        gamma = scene('sphere-cap', 2, 1 / 256, radius=1.0, sampling='fibonacci')
        target = np.array([math.sin(math.pi / 4), 0.0, -1.0 + math.cos(math.pi / 4)])
        z, eta, index = top_sample(gamma, target)
        record = principal_curvatures(gamma, NormalSample(z=z, eta=eta, r=0.5, index=index), 1 / 32)
        self.assertEqual(record.tangent_dim, 2)
        self.assertFalse(record.has_sentinel)
        self.assertAlmostEqual(record.finite_trace, 2.0, delta=0.15)

    def test_step_outside_the_stencil_range(self):
        gamma = scene('plane', 1, 1 / 64)
        sample = NormalSample(z=gamma.points[origin_index(gamma)], eta=np.array([0.0, 1.0]), r=0.25)
        with self.assertRaises(GeometryDomainError):
            principal_curvatures(gamma, sample, 1 / 128)
        with self.assertRaises(GeometryDomainError):
            principal_curvatures(gamma, sample, 0.1)

    def test_probe_at_the_center_is_ambiguous(self):
        gamma = scene('sphere-cap', 1, 1 / 1024, radius=0.25)
        z, eta, index = top_sample(gamma)
        inward = NormalSample(z=z, eta=-eta, r=0.25, index=index)
        with self.assertRaises(AmbiguousProjectionError):
            principal_curvatures(gamma, inward, 1 / 64)
        records, skipped = curvature_records(gamma, [inward, NormalSample(z=z, eta=eta, r=0.25, index=index)], 1 / 64)
        self.assertEqual((len(records), skipped), (1, 1))

    def test_trace_bound_against_the_mean_curvature(self):
        gamma = scene('sphere-cap', 1, 1 / 1024, radius=1.0)
        z, eta, index = top_sample(gamma)
        records, _ = curvature_records(gamma, [NormalSample(z=z, eta=eta, r=0.5, index=index)], 1 / 64)
        self.assertAlmostEqual(records[0].kappas[0], 1.0, delta=0.03)
        tight = check_trace_bound(gamma, 1, 0.0, records, 1 / 64)
        self.assertEqual(tight.violations, 1)
        self.assertFalse(tight.holds)
        loose = check_trace_bound(gamma, 1, gamma.mc_bound, records, 1 / 64)
        self.assertTrue(loose.holds)
        self.assertLess(loose.varifold_residual, 0.05)

    def test_corner_tip_carries_the_sentinel(self):
        gamma = scene('graph-of-function', 1, 1 / 1024, kind='abs')
        tip = NormalSample(z=gamma.points[origin_index(gamma)], eta=np.array([0.0, 1.0]), r=0.25)
        record = principal_curvatures(gamma, tip, 1 / 64)
        self.assertTrue(record.has_sentinel)
        self.assertEqual(record.finite_trace, 0.0)
        report = check_trace_bound(gamma, 1, 0.0, [record], 1 / 64)
        self.assertEqual(report.sentinel_fraction, 1.0)
        frame = record_frame([record], gamma.ambient_dim)
        self.assertEqual(list(frame.columns), record_columns(2))
        self.assertEqual(frame.loc[0, 'kappas'], 'inf')

    def test_flat_plane_has_no_sentinel(self):
        gamma = scene('plane', 1, 1 / 1024)
        sample = NormalSample(z=gamma.points[origin_index(gamma)], eta=np.array([0.0, 1.0]), r=0.25)
        record = principal_curvatures(gamma, sample, 1 / 64)
        self.assertFalse(record.has_sentinel)
        self.assertAlmostEqual(record.finite_trace, 0.0, delta=0.01)


class ContactCurvatureTest(SimpleTestCase):
    def test_flat_contact_meets_both_bounds(self):
        gamma = scene('plane', 1, 1 / 64)
        contacts = contact_set(gamma, 1.0, CenterGrid.single([0.0]))
        report = check_curvature_bounds_at_contacts(gamma, contacts, 1, 0.0, 1 / 16)
        self.assertEqual((report.pairs, report.checked, report.skipped), (1, 1, 0))
        self.assertEqual(report.pass_fraction, 1.0)
        self.assertAlmostEqual(report.worst_lower, 1.0, places=12)
        self.assertAlmostEqual(report.worst_upper, 0.0, places=12)

    def test_pairs_are_subsampled(self):
        gamma = scene('plane', 1, 1 / 64)
        contacts = contact_set(gamma, 1.0, CenterGrid.ball(1, 1 / 64))
        report = check_curvature_bounds_at_contacts(gamma, contacts, 1, 0.0, 1 / 16, max_pairs=5)
        self.assertEqual(report.pairs, len(contacts))
        self.assertEqual(report.checked + report.skipped, 5)


class ViscosityTest(SimpleTestCase):
    def test_trace_m(self):
        self.assertEqual(trace_m(np.diag([3.0, 1.0, 2.0]), 2), 3.0)

    def test_zero_gradient_is_rejected(self):
        with self.assertRaises(GeometryDomainError):
            TestFunction(gradient=np.zeros(2), hessian=np.eye(2), base=np.zeros(2))

    def test_plane_passes(self):
        report = viscosity_test(scene('plane', 1, 1 / 64), 1, 0.0, 40, seed=1)
        self.assertGreater(report.admissible, 0)
        self.assertEqual(report.verdict, 'passes')

    def test_corner_rejects_with_witnesses(self):
        gamma = scene('graph-of-function', 1, 1 / 256, kind='abs')
        report = viscosity_test(gamma, 1, 0.0, 200, seed=3)
        self.assertEqual(report.verdict, 'rejects')
        witness = report.witnesses[0]
        self.assertGreater(witness.trace, witness.bound)
        self.assertLess(witness.margin, 0.0)

    def test_trials_must_be_positive(self):
        with self.assertRaises(ValueError):
            viscosity_test(scene('plane', 1, 0.1), 1, 0.0, 0, seed=1)


class BarrierEigenTest(SimpleTestCase):
    def test_convex_graph_over_a_plane(self):
        report = barrier_eigen_check(QuadraticGraph(np.array([[1.0]])), scene('plane', 1, 1 / 64), 1, 0.0)
        self.assertEqual(report.verdict, 'holds')

    def test_graph_below_the_samples(self):
        report = barrier_eigen_check(QuadraticGraph(np.array([[-1.0]])), scene('plane', 1, 1 / 64), 1, 0.0)
        self.assertEqual(report.verdict, 'inadmissible')

    def test_concave_graph_over_a_corner(self):
        gamma = scene('graph-of-function', 1, 1 / 256, kind='abs')
        report = barrier_eigen_check(QuadraticGraph(np.array([[-1.0]])), gamma, 1, 0.0)
        self.assertEqual(report.verdict, 'fails')

    def test_origin_must_be_a_sample(self):
        report = barrier_eigen_check(QuadraticGraph(np.array([[1.0]])), scene('plane', 1, 1 / 64, height=-0.5), 1, 0.0)
        self.assertFalse(report.admissible)
        self.assertEqual(report.reason, 'origin is not a sample')
