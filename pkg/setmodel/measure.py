"""
Dyadic box counting for d-dimensional Hausdorff and Lebesgue measure.

Boxes are anchored at the origin, except that the weighted counts shift the
last axis by ANCHOR_SHIFT box sides. For 0 < d < D every occupied box is
weighted by the reciprocal of the l1 Grassmann norm of the local d-frame,
sum over coordinate d-subsets I of |det F_I|, which is the expected number of
boxes of unit side a unit d-volume of a d-plane crosses. The unit d-cube and
rotated rectifiable pieces then report their d-volume up to boundary effects.
"""
from dataclasses import dataclass
from itertools import combinations, product
import math

import numpy as np


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    dimension: int
    resolution: float
    error_bound: float
    reliable: bool = True

    @property
    def lower(self):
        return self.value - self.error_bound

    @property
    def upper(self):
        return self.value + self.error_bound

    def scaled(self, factor):
        factor = float(factor)
        return MeasureEstimate(
            value=self.value * factor,
            dimension=self.dimension,
            resolution=self.resolution,
            error_bound=self.error_bound * abs(factor),
            reliable=self.reliable,
        )


# Last-axis anchor shift, in box sides, for the weighted counts. Lattice
# sets tilted at 45 degrees through box corners otherwise cross half the boxes.
ANCHOR_SHIFT = (3.0 - math.sqrt(5.0)) / 2.0


def box_indices(points, rho_box, shift_last=False):
    scaled = np.asarray(points, dtype=float) / rho_box
    if shift_last:
        scaled = scaled.copy()
        scaled[:, -1] -= ANCHOR_SHIFT
    return np.floor(scaled).astype(np.int64)


def _encode(cells, low, extent):
    """Injective int64 code of integer cells inside the box [low, low + extent)."""
    shifted = cells - low
    code = np.zeros(len(cells), dtype=np.int64)
    for axis in range(cells.shape[1]):
        code = code * extent[axis] + shifted[:, axis]
    return code


def grassmann_l1_weights(points, cells, occupied, inverse, d):
    """
    l1 Grassmann norm of the PCA d-frame fitted on each occupied box's 3^D
    neighbourhood. Boxes whose neighbourhood does not determine a d-frame get
    weight 1.
    """
    count_boxes, dim = occupied.shape
    sums = np.zeros((count_boxes, dim))
    squares = np.zeros((count_boxes, dim, dim))
    counts = np.zeros(count_boxes)
    np.add.at(sums, inverse, points)
    np.add.at(squares, inverse, np.einsum('ki,kj->kij', points, points))
    np.add.at(counts, inverse, 1.0)

    low = occupied.min(axis=0) - 1
    extent = occupied.max(axis=0) - low + 2
    codes = _encode(occupied, low, extent)
    order = np.argsort(codes)
    sorted_codes = codes[order]

    hood_sums = np.zeros_like(sums)
    hood_squares = np.zeros_like(squares)
    hood_counts = np.zeros_like(counts)
    for offset in product((-1, 0, 1), repeat=dim):
        neighbour = _encode(occupied + np.asarray(offset), low, extent)
        slot = np.searchsorted(sorted_codes, neighbour)
        slot = np.minimum(slot, len(sorted_codes) - 1)
        found = sorted_codes[slot] == neighbour
        source = order[slot[found]]
        hood_sums[found] += sums[source]
        hood_squares[found] += squares[source]
        hood_counts[found] += counts[source]

    weights = np.ones(count_boxes)
    enough = hood_counts > d
    if not np.any(enough):
        return weights
    mean = hood_sums[enough] / hood_counts[enough, None]
    cov = hood_squares[enough] / hood_counts[enough, None, None] - np.einsum('ki,kj->kij', mean, mean)
    eigvals, eigvecs = np.linalg.eigh(cov)
    frame = eigvecs[:, :, dim - d:]
    # a d-frame needs d clearly positive directions
    determined = eigvals[:, dim - d] > 1e-9 * np.maximum(eigvals[:, -1], 1e-300)
    norm = np.zeros(frame.shape[0])
    for subset in combinations(range(dim), d):
        norm += np.abs(np.linalg.det(frame[:, list(subset), :]))
    norm = np.clip(norm, 1.0, math.sqrt(math.comb(dim, d)))
    weights[np.flatnonzero(enough)[determined]] = norm[determined]
    return weights


def _raw_box_measure(points, d, rho_box):
    weighted = 0 < d < points.shape[1]
    cells = box_indices(points, rho_box, shift_last=weighted)
    occupied, inverse = np.unique(cells, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    if d == 0:
        return float(len(occupied))
    volume = rho_box ** d
    if not weighted:
        return float(len(occupied)) * volume
    weights = grassmann_l1_weights(points, cells, occupied, inverse, d)
    return float(np.sum(volume / weights))


def box_count_measure(points, d, rho_box, resolution=None):
    """
    Estimates the d-dimensional measure of a point set by box counting.

    The error bound is the two-level difference between side rho_box and
    2 rho_box. A box side below the sample resolution cannot resolve the
    set; the estimate is then flagged unreliable with an infinite error bound.
    """
    if d < 0:
        raise ValueError("d must be non-negative")
    if not rho_box > 0:
        raise ValueError("rho_box must be positive")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        return MeasureEstimate(value=0.0, dimension=d, resolution=rho_box, error_bound=0.0)

    value = _raw_box_measure(points, d, rho_box)
    if resolution is not None and rho_box < resolution * (1.0 - 1e-12):
        return MeasureEstimate(value=value, dimension=d, resolution=rho_box, error_bound=math.inf, reliable=False)

    coarse = _raw_box_measure(points, d, 2.0 * rho_box)
    return MeasureEstimate(value=value, dimension=d, resolution=rho_box, error_bound=abs(value - coarse))


def unit_ball_volume(n):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
