"""
Separable upper envelope of equal-opening paraboloids.

T(x) = max_z (h_z - (a/2)|z' - x|^2) is computed one axis at a time: samples
sharing every coordinate but the current axis form a row, each row's 1D
envelope of parabolas is evaluated at the grid axis, and the evaluated rows
become the sources of the next axis. Source positions are arbitrary, so the
result equals the brute-force maximum up to rounding; cost is linear in the
number of rows times (sources + queries) per pass, which is small when the
samples lie on a lattice.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np

from geoanalysis.utils.thread_manager import ThreadManager

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OffsetField:
    values: np.ndarray
    argmax: np.ndarray
    method: str
    warning: str = ''


def upper_envelope_1d(positions, values, queries, a):
    """
    Evaluates max_j values[j] - (a/2)(q - positions[j])^2 at every query.

    :return: (envelope values, index of the winning source per query)
    """
    order = np.lexsort((-values, positions))
    positions = positions[order]
    values = values[order]
    # duplicate positions: the highest value wins
    first = np.ones(len(positions), dtype=bool)
    first[1:] = positions[1:] != positions[:-1]
    positions, values, order = positions[first], values[first], order[first]

    pos = positions.tolist()
    val = values.tolist()
    hull = [0]
    starts = [-math.inf]
    for k in range(1, len(pos)):
        pk, vk = pos[k], val[k]
        while True:
            j = hull[-1]
            cross = 0.5 * (pk + pos[j]) - (vk - val[j]) / (a * (pk - pos[j]))
            if cross > starts[-1]:
                break
            hull.pop()
            starts.pop()
            if not hull:
                # k dominates every earlier parabola
                cross = -math.inf
                break
        hull.append(k)
        starts.append(cross)

    hull = np.asarray(hull)
    slot = np.searchsorted(np.asarray(starts), queries, side='right') - 1
    winner = hull[np.maximum(slot, 0)]
    out = values[winner] - 0.5 * a * (queries - positions[winner]) ** 2
    return out, order[winner]


def _envelope_pass(positions, values, source_ids, axis, queries, a, workers):
    """One axis pass; returns the evaluated rows as the next pass's sources."""
    others = np.delete(positions, axis, axis=1)
    if others.shape[1]:
        keys, inverse = np.unique(others, axis=0, return_inverse=True)
    else:
        keys, inverse = np.zeros((1, 0)), np.zeros(len(positions), dtype=int)
    inverse = np.asarray(inverse).reshape(-1)
    order = np.argsort(inverse, kind='stable')
    bounds = np.searchsorted(inverse[order], np.arange(len(keys) + 1))

    def run_rows(row_range):
        start, stop = row_range
        block_values = np.empty((stop - start, len(queries)))
        block_ids = np.empty((stop - start, len(queries)), dtype=np.int64)
        for local, row in enumerate(range(start, stop)):
            members = order[bounds[row]:bounds[row + 1]]
            env, win = upper_envelope_1d(positions[members, axis], values[members], queries, a)
            block_values[local] = env
            block_ids[local] = source_ids[members[win]]
        return block_values, block_ids

    chunk = max(1, int(math.ceil(len(keys) / max(1, workers * 4))))
    ranges = [(s, min(s + chunk, len(keys))) for s in range(0, len(keys), chunk)]
    blocks = ThreadManager(workers).map(run_rows, ranges)
    row_values = np.concatenate([b[0] for b in blocks], axis=0)
    row_ids = np.concatenate([b[1] for b in blocks], axis=0)

    count_rows, count_queries = row_values.shape
    new_positions = np.empty((count_rows * count_queries, positions.shape[1]))
    other_axes = [i for i in range(positions.shape[1]) if i != axis]
    for column, target in enumerate(other_axes):
        new_positions[:, target] = np.repeat(keys[:, column], count_queries)
    new_positions[:, axis] = np.tile(queries, count_rows)
    return new_positions, row_values.reshape(-1), row_ids.reshape(-1)


def separable_envelope(horizontal, heights, axes, a, workers=1):
    """
    Upper envelope field over the full tensor grid spanned by ``axes``.

    :return: (values, argmax) arrays shaped like the grid, argmax holding
             sample indices.
    """
    positions = np.asarray(horizontal, dtype=float)
    values = np.asarray(heights, dtype=float)
    ids = np.arange(len(values), dtype=np.int64)
    for axis, queries in enumerate(axes):
        positions, values, ids = _envelope_pass(positions, values, ids, axis, np.asarray(queries, dtype=float), a, workers)

    shape = tuple(len(q) for q in axes)
    # rows come out ordered by the remaining coordinates; sort back to grid order
    index = np.zeros(len(values), dtype=np.int64)
    for axis, queries in enumerate(axes):
        step = np.searchsorted(np.asarray(queries, dtype=float), positions[:, axis])
        index = index * len(queries) + step
    grid_values = np.empty(len(values))
    grid_ids = np.empty(len(values), dtype=np.int64)
    grid_values[index] = values
    grid_ids[index] = ids
    return grid_values.reshape(shape), grid_ids.reshape(shape)
