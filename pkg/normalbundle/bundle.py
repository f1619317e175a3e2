"""
Sampling of the generalized normal bundle N_r(Gamma) and stratum estimates.

(z, eta) belongs to N_r when the open ball of radius r centred at z + r eta
misses the set, i.e. delta(z + r eta) = r; on a rho-net the identity holds
up to a multiple of rho.
"""
from dataclasses import dataclass
import logging

import numpy as np

from geoanalysis.utils.thread_manager import ThreadManager
from normalbundle.directions import direction_net

logger = logging.getLogger(__name__)

# Probes evaluated per distance query block.
PROBE_BLOCK = 500_000


@dataclass(frozen=True)
class NormalSample:
    z: np.ndarray
    eta: np.ndarray
    r: float
    index: int = -1

    @property
    def probe(self):
        return self.z + self.r * self.eta


@dataclass(frozen=True)
class StratumEstimate:
    dimension: int
    accepted: int
    low_confidence: bool = False


def reach_tolerance(gamma):
    return 3.0 * gamma.resolution


def _accepted_mask(gamma, feet, directions, r, tol):
    probes = feet[:, None, :] + r * directions[None, :, :]
    dist = gamma.distance(probes.reshape(-1, feet.shape[1])).reshape(len(feet), len(directions))
    return np.abs(dist - r) <= tol


def sample_normal_bundle(gamma, r, direction_resolution, indices=None, directions=None, workers=1, seed=0):
    """
    Elements (z, eta, r) of N_r(Gamma) over the samples ``indices`` (all by
    default) and a direction net of the given angular resolution.

    Output is ordered by sample index, then direction index.
    """
    if not r > 0:
        raise ValueError("reach radius must be positive")
    gamma.require_points()
    if directions is None:
        directions = direction_net(gamma.ambient_dim, direction_resolution, seed=seed)
    indices = np.arange(len(gamma.points)) if indices is None else np.asarray(indices, dtype=np.int64)
    tol = reach_tolerance(gamma)

    per_block = max(1, PROBE_BLOCK // max(1, len(directions)))
    blocks = [indices[s:s + per_block] for s in range(0, len(indices), per_block)]
    masks = ThreadManager(workers).map(lambda block: _accepted_mask(gamma, gamma.points[block], directions, r, tol), blocks)

    samples = []
    for block, mask in zip(blocks, masks):
        rows, cols = np.nonzero(mask)
        for row, col in zip(rows, cols):
            index = int(block[row])
            samples.append(NormalSample(z=gamma.points[index], eta=directions[col], r=float(r), index=index))
    logger.debug("scene %s: %d normal samples at r=%.6g", gamma.scene_id, len(samples), r)
    return samples


def accepted_directions(gamma, z, r, directions, tol):
    z = np.asarray(z, dtype=float)
    return directions[_accepted_mask(gamma, z[None, :], directions, r, tol)[0]]


def stratum_dimension(gamma, z, r, direction_resolution, directions=None, seed=0):
    """
    m = (n + 1) - rank of the directions from which a ball of radius r
    touches the set at z.

    Directions are accepted with the second-order tolerance
    max(rho^2 / r, r dtheta^2 / 2) so that a net direction next to a true
    normal still counts; the rank keeps singular values above 10 rho / r
    times the largest.
    """
    if not r > 0:
        raise ValueError("reach radius must be positive")
    gamma.require_points()
    if directions is None:
        directions = direction_net(gamma.ambient_dim, direction_resolution, seed=seed)
    rho = gamma.resolution
    tol = max(rho ** 2 / r, 0.5 * r * direction_resolution ** 2)
    accepted = accepted_directions(gamma, z, r, directions, tol)
    if len(accepted) == 0:
        return StratumEstimate(dimension=gamma.ambient_dim, accepted=0, low_confidence=True)
    singular = np.linalg.svd(accepted, compute_uv=False)
    rank = int(np.sum(singular / singular[0] > 10.0 * rho / r))
    return StratumEstimate(dimension=gamma.ambient_dim - rank, accepted=len(accepted))


def stratum_map(gamma, indices, r, direction_resolution, workers=1, seed=0):
    """Stratum dimension per sample index, as an integer array."""
    directions = direction_net(gamma.ambient_dim, direction_resolution, seed=seed)
    estimates = ThreadManager(workers).map(
        lambda index: stratum_dimension(gamma, gamma.points[index], r, direction_resolution, directions=directions),
        [int(i) for i in indices],
    )
    return np.asarray([e.dimension for e in estimates], dtype=np.int64)
