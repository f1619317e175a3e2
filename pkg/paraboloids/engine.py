"""
Touching paraboloids from above, contact pairs and contact sets.

P_{a,x}(y) = (a/2)|y - x|^2 + t touches the sample set from above when t is
the smallest offset keeping every sample on or below its graph. A contact
pair (z, eta) records a touching point and the upward unit normal of the
paraboloid there; the vertex map recovers the center from the pair.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from django.conf import settings
from scipy.spatial import cKDTree

from geoanalysis.exceptions.exceptions import EmptySetError, GeometryDomainError
from geoanalysis.utils.thread_manager import ThreadManager
from paraboloids.envelope import OffsetField, separable_envelope

logger = logging.getLogger(__name__)

# Above this many first-pass rows the envelope loses to chunked brute force.
ENVELOPE_ROW_LIMIT = 20_000_000


@dataclass(frozen=True)
class Paraboloid:
    center: np.ndarray
    opening: float
    offset: float = 0.0

    def __call__(self, y):
        return eval_paraboloid(self, y)


def eval_paraboloid(paraboloid, y):
    y = np.asarray(y, dtype=float)
    diff = y - np.asarray(paraboloid.center, dtype=float)
    return 0.5 * paraboloid.opening * np.sum(diff * diff, axis=-1) + paraboloid.offset


@dataclass(frozen=True)
class CenterGrid:
    """
    Centers x in a closed subset of B^n(0,1).

    Lattice grids keep their per-axis coordinates and a mask; scattered center
    sets keep ``points`` only and take the brute-force path.
    """
    points: np.ndarray
    axes: tuple = None
    mask: np.ndarray = None
    spacing: float = None

    @property
    def is_lattice(self):
        return self.axes is not None

    @property
    def n(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @classmethod
    def ball(cls, n, spacing, radius=1.0, center=None):
        """Lattice points of spacing ``spacing`` in the closed ball B^n(center, radius)."""
        center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        if np.linalg.norm(center) + radius > 1.0 + 1e-12:
            raise GeometryDomainError("center set must lie in the closed unit ball")
        k = int(math.floor(radius / spacing + 1e-9))
        axes = tuple(center[i] + np.arange(-k, k + 1, dtype=float) * spacing for i in range(n))
        mesh = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)
        mask = np.linalg.norm(mesh - center, axis=-1) <= radius + 1e-12 * max(1.0, radius)
        return cls(points=mesh[mask], axes=axes, mask=mask, spacing=spacing)

    @classmethod
    def single(cls, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        axes = tuple(np.array([value]) for value in x)
        mask = np.ones((1,) * len(x), dtype=bool)
        return cls(points=x[None, :], axes=axes, mask=mask, spacing=0.0)

    @classmethod
    def from_points(cls, points):
        """Recognizes a regular lattice among the given centers, else keeps them scattered."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if len(points) == 1:
            return cls.single(points[0])
        axes = []
        spacing = None
        for column in points.T:
            values = np.unique(column)
            if len(values) > 1:
                steps = np.diff(values)
                step = steps.min()
                multiples = np.round((values - values[0]) / step)
                if np.max(np.abs(values[0] + multiples * step - values)) > 1e-9 * step:
                    return cls(points=points)
                if spacing is not None and abs(step - spacing) > 1e-9 * step:
                    return cls(points=points)
                spacing = step
                values = values[0] + np.arange(int(multiples[-1]) + 1) * step
            axes.append(values)
        index = tuple(np.searchsorted(axis, points[:, i]) for i, axis in enumerate(axes))
        mask = np.zeros(tuple(len(axis) for axis in axes), dtype=bool)
        mask[index] = True
        mesh = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)
        # lattice coordinates are regenerated from the step; keep the caller's values
        lattice_points = mesh[mask]
        if lattice_points.shape != points.shape or np.max(np.abs(np.sort(lattice_points, axis=0) - np.sort(points, axis=0))) > 1e-9:
            return cls(points=points)
        return cls(points=lattice_points, axes=tuple(axes), mask=mask, spacing=spacing or 0.0)


@dataclass(frozen=True)
class ContactPair:
    z: np.ndarray
    eta: np.ndarray
    center: np.ndarray
    opening: float
    sample_index: int = -1


@dataclass
class ContactSet:
    opening: float
    grid: CenterGrid
    z: np.ndarray
    eta: np.ndarray
    centers: np.ndarray
    sample_index: np.ndarray
    resolution: float
    boundary_touch: bool = False
    method: str = 'envelope'
    warning: str = ''
    offsets: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.z)

    @property
    def is_empty(self):
        return len(self.z) == 0

    @property
    def pairs(self):
        return [
            ContactPair(z=self.z[i], eta=self.eta[i], center=self.centers[i], opening=self.opening, sample_index=int(self.sample_index[i]))
            for i in range(len(self.z))
        ]

    def feet(self):
        """Distinct contact points, ordered by sample index."""
        _, first = np.unique(self.sample_index, return_index=True)
        return self.z[np.sort(first)] if len(first) else self.z[:0]


def _require(gamma):
    if len(gamma.points) == 0:
        raise EmptySetError(f"scene '{gamma.scene_id}' has no samples")


def _values_at(gamma, a, centers):
    """
    Matrix of h_z - (a/2)|z' - x|^2 - h_max, one row per center.

    Heights are taken relative to the highest sample so that the quadratic
    term is not lost against the heights when a is very small.
    """
    horizontal = gamma.horizontal
    squared = np.zeros((len(centers), len(horizontal)))
    for axis in range(horizontal.shape[1]):
        diff = horizontal[None, :, axis] - centers[:, axis, None]
        squared += diff * diff
    return (gamma.heights - gamma.heights.max())[None, :] - 0.5 * a * squared


def touching_offset(gamma, a, x):
    """t* = max_z (z_h - (a/2)|z' - x|^2)."""
    if not a > 0:
        raise GeometryDomainError("opening must be positive")
    _require(gamma)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.max(_values_at(gamma, a, x[None, :])[0])) + float(gamma.heights.max())


def brute_force_field(gamma, a, centers, chunk=None, workers=1):
    chunk = chunk or settings.BRUTE_FORCE_CHUNK
    top = float(gamma.heights.max())
    blocks = [centers[s:s + chunk] for s in range(0, len(centers), chunk)]

    def run(block):
        values = _values_at(gamma, a, block)
        best = np.argmax(values, axis=1)
        return values[np.arange(len(block)), best] + top, best

    results = ThreadManager(workers).map(run, blocks)
    if not results:
        return np.empty(0), np.empty(0, dtype=np.int64)
    return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])


def touching_offset_field(gamma, a, grid, workers=1):
    """
    Touching offsets for every center of the grid, in grid order.

    Lattice grids use the separable envelope; scattered center sets fall back
    to brute force and say so in the warning.
    """
    if not a > 0:
        raise GeometryDomainError("opening must be positive")
    _require(gamma)
    if not isinstance(grid, CenterGrid):
        grid = CenterGrid.from_points(grid)

    if not grid.is_lattice:
        values, argmax = brute_force_field(gamma, a, grid.points, workers=workers)
        return OffsetField(values=values, argmax=argmax, method='brute-force', warning='non-lattice center grid')

    first_rows = len(np.unique(gamma.horizontal[:, 1:], axis=0)) if gamma.n > 1 else 1
    if first_rows * len(grid.axes[0]) > ENVELOPE_ROW_LIMIT:
        values, argmax = brute_force_field(gamma, a, grid.points, workers=workers)
        return OffsetField(values=values, argmax=argmax, method='brute-force')

    top = float(gamma.heights.max())
    values, argmax = separable_envelope(gamma.horizontal, gamma.heights - top, grid.axes, a, workers=workers)
    return OffsetField(values=values[grid.mask] + top, argmax=argmax[grid.mask], method='envelope')


def default_contact_tol(a, rho):
    return 0.5 * a * rho ** 2 + 2.0 * rho


def contact_points(gamma, a, x, tol=None):
    """Samples within ``tol`` below the touching paraboloid P_{a,x}."""
    if not a > 0:
        raise GeometryDomainError("opening must be positive")
    _require(gamma)
    if tol is None:
        tol = default_contact_tol(a, gamma.resolution)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    values = _values_at(gamma, a, x[None, :])[0]
    return gamma.points[values >= values.max() - tol]


def contact_normal(a, x, z):
    """Upward unit normal (-a(z' - x), 1)/sqrt(1 + a^2|z' - x|^2) of P_{a,x} at z."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    slope = -a * (z[..., :-1] - x)
    eta = np.concatenate([slope, np.ones(slope.shape[:-1] + (1,))], axis=-1)
    return eta / np.linalg.norm(eta, axis=-1, keepdims=True)


def vertex_map(a, w, eta):
    """x = w' + eta' / (a eta_{n+1})."""
    eta = np.asarray(eta, dtype=float)
    w = np.asarray(w, dtype=float)
    if not a > 0:
        raise GeometryDomainError("opening must be positive")
    if np.any(eta[..., -1] <= 0):
        raise GeometryDomainError("vertex map needs eta_{n+1} > 0")
    return w[..., :-1] + eta[..., :-1] / (a * eta[..., -1:])


def tie_tolerance(gamma, a, offsets, rtol=None):
    rtol = settings.CONTACT_TIE_RTOL if rtol is None else rtol
    scale = np.maximum(np.abs(offsets), max(gamma.height_bound, 2.0 * a))
    return rtol * scale


def _maximizers(gamma, a, centers, offsets, tol):
    """All sample indices within ``tol`` of the touching value, per center."""
    reach = np.sqrt(np.maximum(2.0 * (gamma.heights.max() - offsets + tol) / a, 0.0)) + 1e-12
    horizontal = gamma.horizontal
    heights = gamma.heights - gamma.heights.max()
    if np.all(reach > 2.0):
        candidates = [None] * len(centers)
    else:
        candidates = gamma.horizontal_tree.query_ball_point(centers, reach)
    found = []
    for i, x in enumerate(centers):
        idx = np.arange(len(heights)) if not candidates[i] else np.asarray(candidates[i], dtype=np.int64)
        diff = horizontal[idx] - x
        values = heights[idx] - 0.5 * a * np.sum(diff * diff, axis=1)
        best = values.max()
        found.append(np.sort(idx[values >= best - tol[i]]))
    return found


def _merge_pairs(gamma, a, sample_index, eta, order_key):
    """
    Keeps a pair unless an earlier kept pair has its foot on the same sample
    or strictly within rho, and a normal within 2 a rho.
    """
    rho = gamma.resolution
    cos_tol = math.cos(min(2.0 * a * rho, math.pi))
    feet = np.unique(sample_index)
    near = gamma.tree.query_ball_point(gamma.points[feet], rho * (1.0 - 1e-9))
    near = {int(foot): group for foot, group in zip(feet, near)}
    kept = {}
    keep = np.zeros(len(sample_index), dtype=bool)
    for m in np.argsort(order_key, kind='stable'):
        s = int(sample_index[m])
        duplicate = any(
            float(eta[r] @ eta[m]) >= cos_tol
            for t in near[s]
            for r in kept.get(t, ())
        )
        if not duplicate:
            keep[m] = True
            kept.setdefault(s, []).append(m)
    return keep


def contact_set(gamma, a, grid, tie_rtol=None, workers=1, merge=True):
    """
    A_a(Gamma; C) over the centers of ``grid``.

    Ties between maximizers within the relative tie tolerance all become
    pairs; pairs are merged at resolution rho; boundary_touch flags contacts
    with |z'| >= 1 - 2 rho.
    """
    if not isinstance(grid, CenterGrid):
        grid = CenterGrid.from_points(grid)
    if len(grid) and np.any(np.linalg.norm(grid.points, axis=1) > 1.0 + 1e-12):
        raise GeometryDomainError("center set must lie in the closed unit ball")
    offset_field = touching_offset_field(gamma, a, grid, workers=workers)
    centers = grid.points
    tol = tie_tolerance(gamma, a, offset_field.values, tie_rtol)

    chunk = max(1, int(math.ceil(len(centers) / max(1, workers * 4)))) if len(centers) else 1
    blocks = [(s, min(s + chunk, len(centers))) for s in range(0, len(centers), chunk)]
    found = []
    for part in ThreadManager(workers).map(
        lambda b: _maximizers(gamma, a, centers[b[0]:b[1]], offset_field.values[b[0]:b[1]], tol[b[0]:b[1]]), blocks
    ):
        found.extend(part)

    center_index = np.concatenate([np.full(len(f), i, dtype=np.int64) for i, f in enumerate(found)]) if found else np.empty(0, dtype=np.int64)
    sample_index = np.concatenate(found) if found else np.empty(0, dtype=np.int64)
    z = gamma.points[sample_index]
    pair_centers = centers[center_index]
    eta = contact_normal(a, pair_centers, z) if len(z) else np.empty((0, gamma.ambient_dim))

    if merge and len(z):
        keep = _merge_pairs(gamma, a, sample_index, eta, center_index)
        z, eta, pair_centers, sample_index = z[keep], eta[keep], pair_centers[keep], sample_index[keep]

    rho = gamma.resolution
    boundary_touch = bool(len(z)) and bool(np.any(np.linalg.norm(z[:, :-1], axis=1) >= 1.0 - 2.0 * rho))
    if boundary_touch:
        logger.info("scene %s: contact near the cylinder wall at opening %.6g", gamma.scene_id, a)
    return ContactSet(
        opening=a,
        grid=grid,
        z=z,
        eta=eta,
        centers=pair_centers,
        sample_index=sample_index,
        resolution=rho,
        boundary_touch=boundary_touch,
        method=offset_field.method,
        warning=offset_field.warning,
        offsets=offset_field.values,
    )


def project_contact_set(contacts):
    """A'_a: distinct horizontal projections of the contact feet."""
    if contacts.is_empty:
        return np.empty((0, contacts.grid.n if contacts.grid is not None else 0))
    return contacts.feet()[:, :-1]


def opening_monotonicity_check(gamma, a, a_larger, grid, dilation=None, workers=1):
    """
    Checks A'_a within a rho-dilation of A'_{a'} for a < a'.

    :return: (holds, worst gap, number of uncovered points)
    """
    dilation = 2.0 * gamma.resolution if dilation is None else dilation
    small = project_contact_set(contact_set(gamma, a, grid, workers=workers))
    large = project_contact_set(contact_set(gamma, a_larger, grid, workers=workers))
    if len(small) == 0:
        return True, 0.0, 0
    if len(large) == 0:
        return False, math.inf, len(small)
    gaps, _ = cKDTree(large).query(small)
    uncovered = int(np.sum(gaps > dilation))
    return uncovered == 0, float(gaps.max()), uncovered
