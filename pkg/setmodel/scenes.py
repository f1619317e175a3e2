"""
Discretized closed subsets of the open unit cylinder and the test-scene suite.

A scene is a finite rho-net of a relatively closed set inside
C_1(0) = {z in R^{n+1} : |z'| < 1}; z' denotes the first n coordinates and
the last coordinate is the height.
"""
from dataclasses import dataclass, field
from functools import cached_property
import logging
import math

import numpy as np
from scipy.spatial import cKDTree

from geoanalysis.exceptions.exceptions import EmptySetError, SceneError
from setmodel.oracles import (
    CircleCurveOracle,
    GraphOracle,
    PlaneOracle,
    PointSetOracle,
    SphereOracle,
)

logger = logging.getLogger(__name__)

SCENE_TAGS = (
    'plane',
    'graph-of-function',
    'sphere-cap',
    'cantor-primitive-graph',
    'curve-in-R3',
    'point-union',
)

GRAPH_KINDS = ('linear', 'quadratic', 'abs', 'catenoid', 'bump')

# Points this close to the cylinder wall are dropped rather than rejected.
CYLINDER_TOL = 1e-12

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class SceneSpec:
    tag: str
    n: int
    resolution: float
    params: dict = field(default_factory=dict)
    scene_id: str = ''

    @property
    def label(self):
        return self.scene_id or self.tag


@dataclass(eq=False)
class ClosedSetSample:
    points: np.ndarray
    intrinsic_dim: int
    resolution: float
    mc_bound: float = 0.0
    oracle: object = None
    scene_id: str = ''

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    @property
    def n(self):
        return self.points.shape[1] - 1

    @property
    def horizontal(self):
        return self.points[:, :-1]

    @property
    def heights(self):
        return self.points[:, -1]

    @property
    def height_bound(self):
        if len(self.points) == 0:
            return 0.0
        return float(np.max(np.abs(self.heights)))

    @cached_property
    def tree(self):
        return cKDTree(self.points)

    @cached_property
    def horizontal_tree(self):
        return cKDTree(self.horizontal)

    def require_points(self):
        if len(self.points) == 0:
            raise EmptySetError(f"scene '{self.scene_id}' has no samples")

    def distance(self, p):
        """Distance from p (a point or an array of points) to the sample set."""
        self.require_points()
        p = np.asarray(p, dtype=float)
        dist, _ = self.tree.query(p)
        return dist

    def nearest_points(self, p, tol=0.0):
        """All samples within distance(p) + tol of p, as an array of points."""
        if tol < 0:
            raise ValueError("tol must be non-negative")
        return self.points[self.nearest_indices(p, tol)]

    def nearest_indices(self, p, tol=0.0):
        self.require_points()
        p = np.asarray(p, dtype=float)
        dist = float(self.tree.query(p)[0])
        # guard against rounding in the tree's distance evaluation
        radius = dist + tol + 1e-12 * max(1.0, dist)
        candidates = np.asarray(self.tree.query_ball_point(p, radius), dtype=int)
        exact = np.linalg.norm(self.points[candidates] - p, axis=1)
        keep = candidates[exact <= dist + tol + 1e-15 * max(1.0, dist)]
        return np.sort(keep)

    def nearest_fiber_diameter(self, p, tol):
        """Diameter of the set of samples realizing the distance from p within tol."""
        fiber = self.nearest_points(p, tol)
        if len(fiber) < 2:
            return 0.0
        centered = fiber - fiber.mean(axis=0)
        # the diameter is at most twice the largest deviation from the mean
        spread = np.linalg.norm(centered, axis=1)
        if len(fiber) > 64:
            return float(2.0 * spread.max())
        diff = fiber[:, None, :] - fiber[None, :, :]
        return float(np.max(np.linalg.norm(diff, axis=2)))

    def exact_distance(self, p):
        """Oracle distance when available, sample distance otherwise."""
        if self.oracle is not None:
            value = self.oracle.distance(p)
            if value is not None:
                return value if np.ndim(p) > 1 else float(value[0])
        return self.distance(p)


def lattice(n, rho, radius=1.0):
    """The lattice rho Z^n intersected with the open ball of the given radius."""
    k = int(math.floor(radius / rho))
    axis = np.arange(-k, k + 1, dtype=float) * rho
    grid = np.stack(np.meshgrid(*([axis] * n), indexing='ij'), axis=-1).reshape(-1, n)
    return grid[np.linalg.norm(grid, axis=1) < radius - CYLINDER_TOL]


def cantor_primitive(sigma, depth):
    """
    Primitive F_k of the depth-k Cantor-function approximant on [0, 1].

    F_0 = sigma^2 / 2 and each level rescales the previous one onto the outer
    thirds; F_k(1/3) = 1/12, F_k(2/3) = 1/4 and F_k(1) = 1/2 for every k.
    """
    sigma = np.asarray(sigma, dtype=float)
    if depth == 0:
        return 0.5 * sigma ** 2
    out = np.empty_like(sigma)
    left = sigma <= 1.0 / 3.0
    right = sigma >= 2.0 / 3.0
    middle = ~(left | right)
    out[left] = cantor_primitive(3.0 * sigma[left], depth - 1) / 6.0
    out[middle] = 1.0 / 12.0 + 0.5 * (sigma[middle] - 1.0 / 3.0)
    out[right] = 0.25 + 0.5 * (sigma[right] - 2.0 / 3.0) + cantor_primitive(3.0 * sigma[right] - 2.0, depth - 1) / 6.0
    return out


def cantor_function(sigma, depth):
    """Derivative c_k of cantor_primitive."""
    sigma = np.asarray(sigma, dtype=float)
    if depth == 0:
        return sigma.copy()
    out = np.empty_like(sigma)
    left = sigma <= 1.0 / 3.0
    right = sigma >= 2.0 / 3.0
    middle = ~(left | right)
    out[left] = 0.5 * cantor_function(3.0 * sigma[left], depth - 1)
    out[middle] = 0.5
    out[right] = 0.5 + 0.5 * cantor_function(3.0 * sigma[right] - 2.0, depth - 1)
    return out


def cantor_slope(sigma, depth):
    """Derivative of cantor_function; (3/2)^k on the surviving intervals, 0 elsewhere."""
    sigma = np.asarray(sigma, dtype=float)
    if depth == 0:
        return np.ones_like(sigma)
    out = np.zeros_like(sigma)
    left = sigma < 1.0 / 3.0
    right = sigma > 2.0 / 3.0
    out[left] = 1.5 * cantor_slope(3.0 * sigma[left], depth - 1)
    out[right] = 1.5 * cantor_slope(3.0 * sigma[right] - 2.0, depth - 1)
    return out


class GraphFunctions:
    """Vectorized (u, grad, hessian, kinks) quadruples for the graph generators."""

    @staticmethod
    def linear(n, params):
        slope = float(params.get('slope', 1.0))
        height = float(params.get('height', 0.0))
        direction = np.zeros(n)
        direction[0] = 1.0

        def u(x):
            return height + slope * x[:, 0]

        def grad(x):
            return np.tile(slope * direction, (x.shape[0], 1))

        def hessian(x):
            return np.zeros((x.shape[0], n, n))

        return u, grad, hessian, None

    @staticmethod
    def quadratic(n, params):
        c = float(params.get('curvature', 1.0))
        height = float(params.get('height', 0.0))

        def u(x):
            return height - 0.5 * c * np.sum(x * x, axis=1)

        def grad(x):
            return -c * x

        def hessian(x):
            return np.tile(-c * np.eye(n), (x.shape[0], 1, 1))

        return u, grad, hessian, None

    @staticmethod
    def abs(n, params):
        slope = float(params.get('slope', 1.0))
        height = float(params.get('height', 0.0))

        def u(x):
            return height - slope * np.linalg.norm(x, axis=1)

        def kinks(x):
            return np.linalg.norm(x, axis=1) < CYLINDER_TOL

        def grad(x):
            norm = np.linalg.norm(x, axis=1, keepdims=True)
            safe = np.where(norm < CYLINDER_TOL, 1.0, norm)
            return np.where(norm < CYLINDER_TOL, 0.0, -slope * x / safe)

        def hessian(x):
            norm = np.linalg.norm(x, axis=1)
            safe = np.where(norm < CYLINDER_TOL, 1.0, norm)
            unit = x / safe[:, None]
            proj = np.eye(n)[None, :, :] - np.einsum('ki,kj->kij', unit, unit)
            out = -slope * proj / safe[:, None, None]
            out[norm < CYLINDER_TOL] = 0.0
            return out

        return u, grad, hessian, kinks

    @staticmethod
    def catenoid(n, params):
        if n != 2:
            raise SceneError("catenoid graphs are defined for n = 2 only")
        scale = float(params.get('scale', 1.0))
        axis_point = np.asarray(params.get('axis', [-10.0, 0.0]), dtype=float)
        height = float(params.get('height', 0.0))
        if np.linalg.norm(axis_point) - 1.0 <= scale:
            raise SceneError("catenoid axis must stay farther than its neck scale from the unit disk")
        offset = scale * np.arccosh(np.linalg.norm(axis_point) / scale)

        def u(x):
            r = np.linalg.norm(x - axis_point, axis=1)
            return height + scale * np.arccosh(r / scale) - offset

        def radial_parts(x):
            d = x - axis_point
            r = np.linalg.norm(d, axis=1)
            root = np.sqrt(r * r - scale * scale)
            return d / r[:, None], r, scale / root, -scale * r / root ** 3

        def grad(x):
            unit, r, f1, _ = radial_parts(x)
            return f1[:, None] * unit

        def hessian(x):
            unit, r, f1, f2 = radial_parts(x)
            outer = np.einsum('ki,kj->kij', unit, unit)
            return f2[:, None, None] * outer + (f1 / r)[:, None, None] * (np.eye(2)[None] - outer)

        return u, grad, hessian, None

    @staticmethod
    def bump(n, params):
        depth = float(params.get('depth', 0.05))
        width = float(params.get('width', 0.5))
        height = float(params.get('height', 0.0))

        def u(x):
            return height + depth * (np.exp(-np.sum(x * x, axis=1) / (2.0 * width ** 2)) - 1.0)

        def grad(x):
            e = np.exp(-np.sum(x * x, axis=1) / (2.0 * width ** 2))
            return -(depth * e / width ** 2)[:, None] * x

        def hessian(x):
            e = np.exp(-np.sum(x * x, axis=1) / (2.0 * width ** 2))
            outer = np.einsum('ki,kj->kij', x, x) / width ** 4
            return (depth * e)[:, None, None] * (outer - np.eye(n)[None] / width ** 2)

        return u, grad, hessian, None


class SceneBuilder:
    """One static generator per scene tag; each returns (points, intrinsic_dim, mc_bound, oracle)."""

    @staticmethod
    def plane(spec):
        height = float(spec.params.get('height', 0.0))
        x = lattice(spec.n, spec.resolution)
        points = np.concatenate([x, np.full((len(x), 1), height)], axis=1)
        return points, spec.n, 0.0, PlaneOracle(spec.n, height)

    @staticmethod
    def graph(spec):
        kind = spec.params.get('kind', 'quadratic')
        if kind not in GRAPH_KINDS:
            raise SceneError(f"unknown graph kind '{kind}' (expected one of {', '.join(GRAPH_KINDS)})")
        u, grad, hessian, kinks = getattr(GraphFunctions, kind)(spec.n, spec.params)
        oracle = GraphOracle(spec.n, u, grad, hessian, kinks)
        x = lattice(spec.n, spec.resolution)
        points = np.concatenate([x, u(x)[:, None]], axis=1)
        if 'h' in spec.params:
            mc_bound = float(spec.params['h'])
        elif kind in ('linear', 'catenoid', 'abs'):
            mc_bound = 0.0
        else:
            mc_bound = float(np.max(np.abs(oracle.divergence_term(x)))) if len(x) else 0.0
        return points, spec.n, mc_bound, oracle

    @staticmethod
    def sphere_cap(spec):
        n = spec.n
        radius = float(spec.params.get('radius', 0.5))
        center = np.asarray(spec.params.get('center', [0.0] * n + [-radius]), dtype=float)
        if center.shape != (n + 1,):
            raise SceneError(f"sphere-cap center must have {n + 1} coordinates")
        if radius <= 0:
            raise SceneError("sphere-cap radius must be positive")
        cap_angle = float(spec.params.get('cap_angle', math.pi / 2.0))
        sampling = spec.params.get('sampling', 'lattice' if n >= 2 else 'arc')
        rho = spec.resolution

        if n == 1 and sampling != 'lattice':
            if cap_angle >= math.pi - 1e-9:
                count = int(math.ceil(2.0 * math.pi * radius / rho))
                angles = 2.0 * math.pi * np.arange(count) / count
            else:
                count = int(math.ceil(2.0 * cap_angle * radius / rho)) + 1
                angles = np.linspace(-cap_angle, cap_angle, count)
            # angles measured from the top of the circle
            points = center + radius * np.stack([np.sin(angles), np.cos(angles)], axis=1)
        elif sampling == 'fibonacci':
            if n != 2:
                raise SceneError("fibonacci sphere-cap sampling is defined for n = 2 only")
            area = 2.0 * math.pi * radius ** 2 * (1.0 - math.cos(cap_angle))
            count = max(1, int(math.ceil(area / rho ** 2)))
            index = np.arange(count, dtype=float)
            cos_polar = 1.0 - (1.0 - math.cos(cap_angle)) * (index + 0.5) / count
            sin_polar = np.sqrt(np.maximum(0.0, 1.0 - cos_polar ** 2))
            azimuth = index * GOLDEN_ANGLE
            unit = np.stack([sin_polar * np.cos(azimuth), sin_polar * np.sin(azimuth), cos_polar], axis=1)
            points = center + radius * unit
        elif sampling == 'lattice':
            if cap_angle > math.pi / 2.0 + 1e-12:
                raise SceneError("lattice sphere-cap sampling covers at most the upper hemisphere")
            x = lattice(n, rho)
            offset = np.linalg.norm(x - center[:-1], axis=1)
            keep = offset < radius * math.sin(cap_angle) - CYLINDER_TOL
            if cap_angle >= math.pi / 2.0 - 1e-12:
                keep = offset < radius
            x = x[keep]
            heights = center[-1] + np.sqrt(radius ** 2 - np.sum((x - center[:-1]) ** 2, axis=1))
            points = np.concatenate([x, heights[:, None]], axis=1)
        else:
            raise SceneError(f"unknown sphere-cap sampling '{sampling}'")
        return points, n, n / radius, SphereOracle(n, center, radius, cap_angle)

    @staticmethod
    def cantor(spec):
        if spec.n != 1:
            raise SceneError("the Cantor-primitive graph is defined for n = 1 only")
        depth = int(spec.params.get('depth', 8))
        if depth < 0:
            raise SceneError("Cantor depth must be non-negative")
        lam = float(spec.params.get('lam', 4.0))
        height = float(spec.params.get('height', 0.0))

        def u(x):
            sigma = 0.5 * (x[:, 0] + 1.0)
            return height - lam * (cantor_primitive(sigma, depth) - 0.5 * sigma)

        def grad(x):
            sigma = 0.5 * (x[:, 0] + 1.0)
            return (-0.5 * lam * (cantor_function(sigma, depth) - 0.5))[:, None]

        def hessian(x):
            sigma = 0.5 * (x[:, 0] + 1.0)
            return (-0.25 * lam * cantor_slope(sigma, depth))[:, None, None]

        oracle = GraphOracle(1, u, grad, hessian)
        x = lattice(1, spec.resolution)
        points = np.concatenate([x, u(x)[:, None]], axis=1)
        return points, 1, float(spec.params.get('h', 0.0)), oracle

    @staticmethod
    def curve(spec):
        if spec.n != 2:
            raise SceneError("curve-in-R3 scenes live in R^3 (n = 2)")
        radius = float(spec.params.get('radius', 0.5))
        height = float(spec.params.get('height', -0.1))
        count = int(math.ceil(2.0 * math.pi * radius / spec.resolution))
        angles = 2.0 * math.pi * np.arange(count) / count
        points = np.stack([radius * np.cos(angles), radius * np.sin(angles), np.full(count, height)], axis=1)
        return points, 1, 1.0 / radius, CircleCurveOracle(radius, height)

    @staticmethod
    def point_union(spec):
        raw = spec.params.get('points')
        if not raw:
            raise SceneError("point-union scenes need at least one point")
        points = np.atleast_2d(np.asarray(raw, dtype=float))
        if points.shape[1] != spec.n + 1:
            raise SceneError(f"point-union points must have {spec.n + 1} coordinates")
        intrinsic_dim = int(spec.params.get('m', spec.n))
        return points, intrinsic_dim, float(spec.params.get('h', 0.0)), PointSetOracle(points, intrinsic_dim)


GENERATORS = {
    'plane': SceneBuilder.plane,
    'graph-of-function': SceneBuilder.graph,
    'sphere-cap': SceneBuilder.sphere_cap,
    'cantor-primitive-graph': SceneBuilder.cantor,
    'curve-in-R3': SceneBuilder.curve,
    'point-union': SceneBuilder.point_union,
}


def clip_to_cylinder(points, label):
    """Drops samples on the cylinder wall; rejects scenes that leave the cylinder."""
    radial = np.linalg.norm(points[:, :-1], axis=1)
    if np.any(radial > 1.0 + CYLINDER_TOL):
        worst = float(radial.max())
        raise SceneError(f"scene '{label}' escapes the unit cylinder (|z'| reaches {worst:.6g})")
    return points[radial < 1.0 - CYLINDER_TOL]


def build_scene(spec):
    """
    Builds the sample net of a scene.

    :raises SceneError: On an unknown tag, a non-positive resolution, a scene
                        leaving the cylinder or an unbounded height.
    """
    if spec.tag not in GENERATORS:
        raise SceneError(f"unknown scene tag '{spec.tag}' (expected one of {', '.join(SCENE_TAGS)})")
    if not spec.resolution > 0:
        raise SceneError(f"scene '{spec.label}': resolution must be positive, got {spec.resolution}")
    if spec.n < 1:
        raise SceneError(f"scene '{spec.label}': n must be at least 1")

    points, intrinsic_dim, mc_bound, oracle = GENERATORS[spec.tag](spec)
    points = clip_to_cylinder(np.asarray(points, dtype=float), spec.label)
    if not np.all(np.isfinite(points)):
        raise SceneError(f"scene '{spec.label}' has unbounded heights")
    if not 1 <= intrinsic_dim <= spec.n:
        raise SceneError(f"scene '{spec.label}': intrinsic dimension {intrinsic_dim} outside [1, {spec.n}]")

    gamma = ClosedSetSample(
        points=points,
        intrinsic_dim=intrinsic_dim,
        resolution=spec.resolution,
        mc_bound=mc_bound,
        oracle=oracle,
        scene_id=spec.label,
    )
    logger.debug("built scene %s: %d samples, h=%.6g", spec.label, len(points), mc_bound)
    return gamma
