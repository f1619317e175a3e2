"""
Quasi-uniform direction nets on the unit sphere S^n of R^{n+1}.
"""
import math

import numpy as np

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def sphere_area(dim):
    """Surface area of S^{dim-1} in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def direction_net(ambient_dim, angular_resolution, seed=0):
    """
    Unit directions spaced about ``angular_resolution`` apart.

    Equally spaced angles on S^1, a Fibonacci spiral on S^2 and a seeded
    normalized Gaussian cloud of matching density above that.
    """
    if not angular_resolution > 0:
        raise ValueError("angular resolution must be positive")
    if ambient_dim < 2:
        raise ValueError("direction nets need ambient dimension at least 2")

    if ambient_dim == 2:
        count = max(4, int(math.ceil(2.0 * math.pi / angular_resolution)))
        angles = 2.0 * math.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)

    count = max(8, int(math.ceil(sphere_area(ambient_dim) / angular_resolution ** (ambient_dim - 1))))
    if ambient_dim == 3:
        index = np.arange(count, dtype=float)
        cos_polar = 1.0 - 2.0 * (index + 0.5) / count
        sin_polar = np.sqrt(np.maximum(0.0, 1.0 - cos_polar ** 2))
        azimuth = index * GOLDEN_ANGLE
        return np.stack([sin_polar * np.cos(azimuth), sin_polar * np.sin(azimuth), cos_polar], axis=1)

    rng = np.random.default_rng(seed)
    cloud = rng.standard_normal((count, ambient_dim))
    return cloud / np.linalg.norm(cloud, axis=1, keepdims=True)


def max_pairwise_angle(directions):
    """Largest angle between two directions of the set (0 for fewer than two)."""
    directions = np.atleast_2d(directions)
    if len(directions) < 2:
        return 0.0
    cosines = np.clip(directions @ directions.T, -1.0, 1.0)
    return float(np.arccos(cosines.min()))
