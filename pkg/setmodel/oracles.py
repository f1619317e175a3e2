"""
Analytic descriptors attached to generated scenes.

An oracle knows the exact set a sample net approximates: exact distance
where a closed form exists, normal spaces, the mean curvature vector and,
for graphs, the area factor sqrt(1 + |grad u|^2). Sign convention: the
trace of the second fundamental form in direction eta equals -H . eta, so a
sphere seen with its outward normal has trace n/R.
"""
import math

import numpy as np


class SceneOracle:
    intrinsic_dim = None

    def distance(self, p):
        """Exact distance to the underlying set, or None when no closed form exists."""
        return None

    def normal_space(self, z):
        """Orthonormal basis (rows) of the normal space at z, or None at singular points."""
        return None

    def mean_curvature_vector(self, z):
        return None

    def area_factor(self, x):
        return np.ones(np.atleast_2d(x).shape[0])


class PlaneOracle(SceneOracle):
    def __init__(self, n, height=0.0):
        self.n = n
        self.height = float(height)
        self.intrinsic_dim = n

    def distance(self, p):
        p = np.atleast_2d(p)
        radial = np.linalg.norm(p[:, :-1], axis=1)
        outside = np.maximum(radial - 1.0, 0.0)
        return np.hypot(outside, p[:, -1] - self.height)

    def normal_space(self, z):
        basis = np.zeros((1, self.n + 1))
        basis[0, -1] = 1.0
        return basis

    def mean_curvature_vector(self, z):
        return np.zeros(self.n + 1)


class GraphOracle(SceneOracle):
    """
    Graph of u over the unit ball.

    ``u``, ``grad`` and ``hessian`` are vectorized callables over (k, n)
    arrays; ``kinks`` returns a boolean mask of points where u is not C^1.
    """

    def __init__(self, n, u, grad, hessian, kinks=None):
        self.n = n
        self.intrinsic_dim = n
        self._u = u
        self._grad = grad
        self._hessian = hessian
        self._kinks = kinks

    def height(self, x):
        return self._u(np.atleast_2d(x))

    def gradient(self, x):
        return self._grad(np.atleast_2d(x))

    def is_kink(self, x):
        x = np.atleast_2d(x)
        if self._kinks is None:
            return np.zeros(x.shape[0], dtype=bool)
        return self._kinks(x)

    def upward_normal(self, x):
        g = self.gradient(x)
        nu = np.concatenate([-g, np.ones((g.shape[0], 1))], axis=1)
        return nu / np.linalg.norm(nu, axis=1, keepdims=True)

    def normal_space(self, z):
        z = np.asarray(z, dtype=float)
        x = z[:-1][None, :]
        if self.is_kink(x)[0]:
            return None
        return self.upward_normal(x)

    def divergence_term(self, x):
        """div(grad u / W) with W = sqrt(1 + |grad u|^2)."""
        x = np.atleast_2d(x)
        g = self._grad(x)
        hess = self._hessian(x)
        w2 = 1.0 + np.sum(g * g, axis=1)
        laplace = np.trace(hess, axis1=1, axis2=2)
        ghg = np.einsum('ki,kij,kj->k', g, hess, g)
        return (laplace - ghg / w2) / np.sqrt(w2)

    def mean_curvature_vector(self, z):
        z = np.asarray(z, dtype=float)
        x = z[:-1][None, :]
        if self.is_kink(x)[0]:
            return None
        return self.divergence_term(x)[0] * self.upward_normal(x)[0]

    def area_factor(self, x):
        g = self.gradient(x)
        return np.sqrt(1.0 + np.sum(g * g, axis=1))


class SphereOracle(SceneOracle):
    """
    Cap of the round sphere of radius R around the top axis, up to polar
    angle cap_angle; cap_angle >= pi is the whole sphere. Points whose polar
    angle exceeds the cap are nearest to the rim circle.
    """

    def __init__(self, n, center, radius, cap_angle=math.pi):
        self.n = n
        self.intrinsic_dim = n
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.cap_angle = float(cap_angle)

    def distance(self, p):
        v = np.atleast_2d(p) - self.center
        norm = np.linalg.norm(v, axis=1)
        sphere = np.abs(norm - self.radius)
        if self.cap_angle >= math.pi - 1e-9:
            return sphere
        polar = np.arccos(np.clip(v[:, -1] / np.maximum(norm, 1e-300), -1.0, 1.0))
        beyond = np.maximum(polar - self.cap_angle, 0.0)
        rim = np.sqrt(np.maximum(norm ** 2 + self.radius ** 2 - 2.0 * self.radius * norm * np.cos(beyond), 0.0))
        return np.where((polar <= self.cap_angle) | (norm == 0.0), sphere, rim)

    def outward_normal(self, z):
        z = np.atleast_2d(z)
        return (z - self.center) / np.linalg.norm(z - self.center, axis=1, keepdims=True)

    def normal_space(self, z):
        return self.outward_normal(z)

    def mean_curvature_vector(self, z):
        return -(self.n / self.radius) * self.outward_normal(z)[0]


class CircleCurveOracle(SceneOracle):
    """Round circle {|x'| = radius, x_3 = height} in R^3."""

    intrinsic_dim = 1

    def __init__(self, radius, height):
        self.n = 2
        self.radius = float(radius)
        self.height = float(height)

    def distance(self, p):
        p = np.atleast_2d(p)
        planar = np.linalg.norm(p[:, :2], axis=1)
        return np.hypot(planar - self.radius, p[:, 2] - self.height)

    def radial(self, z):
        z = np.asarray(z, dtype=float)
        direction = np.array([z[0], z[1], 0.0])
        return direction / np.linalg.norm(direction)

    def normal_space(self, z):
        return np.stack([self.radial(z), np.array([0.0, 0.0, 1.0])])

    def mean_curvature_vector(self, z):
        return -self.radial(z) / self.radius


class PointSetOracle(SceneOracle):
    def __init__(self, points, intrinsic_dim):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.intrinsic_dim = intrinsic_dim

    def distance(self, p):
        p = np.atleast_2d(p)
        diff = p[:, None, :] - self.points[None, :, :]
        return np.min(np.linalg.norm(diff, axis=2), axis=1)
