"""
Empirical checks of the (m, h) condition with quadratic test functions.

A set is (m, h) when every C^2 function with non-zero gradient that attains
a local maximum on it satisfies trace_m D^2 f <= h |grad f| there, trace_m
being the sum of the m lowest eigenvalues. Only quadratics are drawn.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from geoanalysis.exceptions.exceptions import GeometryDomainError
from normalbundle.bundle import accepted_directions, reach_tolerance
from normalbundle.directions import direction_net

logger = logging.getLogger(__name__)

LOCAL_MAX_TOL = 1e-12
MAX_REDRAWS = 50


@dataclass(frozen=True)
class TestFunction:
    """f(y) = g . (y - x0) + (y - x0)^T H (y - x0) / 2."""
    gradient: np.ndarray
    hessian: np.ndarray
    base: np.ndarray

    # keep unittest discovery away from this class
    __test__ = False

    def __post_init__(self):
        if not np.linalg.norm(self.gradient) > 0:
            raise GeometryDomainError("test functions need a non-zero gradient")

    def __call__(self, y):
        d = np.atleast_2d(np.asarray(y, dtype=float)) - self.base
        return d @ self.gradient + 0.5 * np.einsum('ki,ij,kj->k', d, self.hessian, d)


@dataclass(frozen=True)
class QuadraticGraph:
    """Graph of x -> x^T A x / 2 over R^n, with value and gradient 0 at the origin."""
    hessian: np.ndarray

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return 0.5 * np.einsum('ki,ij,kj->k', x, self.hessian, x)


@dataclass(frozen=True)
class TestOutcome:
    admissible: bool
    trace: float = 0.0
    bound: float = 0.0
    margin: float = 0.0

    __test__ = False

    @property
    def passes(self):
        return self.admissible and self.margin >= 0.0


@dataclass(frozen=True)
class Witness:
    base: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray
    trace: float
    bound: float
    margin: float


@dataclass
class ViscosityReport:
    trials: int
    admissible: int = 0
    skipped: int = 0
    passed: int = 0
    worst_margin: float = 0.0
    witnesses: list = field(default_factory=list)

    @property
    def pass_rate(self):
        return self.passed / self.admissible if self.admissible else 0.0

    @property
    def verdict(self):
        if self.admissible == 0:
            return 'inadmissible'
        return 'rejects' if self.witnesses else 'passes'


@dataclass(frozen=True)
class BarrierEigenReport:
    admissible: bool
    eigen_sum: float = 0.0
    threshold: float = 0.0
    reason: str = ''

    @property
    def passes(self):
        return self.admissible and self.eigen_sum >= self.threshold

    @property
    def verdict(self):
        if not self.admissible:
            return 'inadmissible'
        return 'holds' if self.passes else 'fails'


def trace_m(matrix, m):
    """Sum of the m lowest eigenvalues of a symmetric matrix."""
    return float(np.sum(np.linalg.eigvalsh(np.asarray(matrix, dtype=float))[:m]))


def is_local_max(gamma, f, radius=0.1):
    """f restricted to the samples within ``radius`` of the base point is maximal there."""
    near = np.asarray(gamma.tree.query_ball_point(f.base, radius), dtype=np.int64)
    if len(near) == 0:
        return True
    values = f(gamma.points[near])
    return bool(np.all(values <= f(f.base[None, :])[0] + LOCAL_MAX_TOL))


def check_test_function(gamma, f, m, h, radius=0.1):
    """trace_m D^2 f <= h |grad f| + |D^2 f| rho, when f has a local max on the samples."""
    if not is_local_max(gamma, f, radius):
        return TestOutcome(admissible=False)
    trace = trace_m(f.hessian, m)
    bound = h * float(np.linalg.norm(f.gradient)) + float(np.linalg.norm(f.hessian, 2)) * gamma.resolution
    return TestOutcome(admissible=True, trace=trace, bound=bound, margin=bound - trace)


def singular_indices(gamma):
    """Samples the scene's oracle flags as kinks."""
    oracle = gamma.oracle
    if oracle is None or not hasattr(oracle, 'is_kink'):
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(oracle.is_kink(gamma.horizontal))


def _normal_directions(gamma, z, radius, directions):
    """Orthonormal normal space rows from the oracle, else net directions touching at z."""
    if gamma.oracle is not None:
        basis = gamma.oracle.normal_space(z)
        if basis is not None:
            return np.atleast_2d(basis), True
    return accepted_directions(gamma, z, radius, directions, reach_tolerance(gamma)), False


def viscosity_test(gamma, m, h, trials, seed, radius=0.1, direction_resolution=0.1):
    """
    Draws ``trials`` quadratic test functions with a local max on the samples.

    Every other trial is based at a kink when the scene has any. Gradients
    point along a normal direction with |g| in [0.5, 2]; Hessians are redrawn
    up to 50 times until admissible, otherwise the trial is skipped.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    gamma.require_points()
    rng = np.random.default_rng(seed)
    dim = gamma.ambient_dim
    directions = direction_net(dim, direction_resolution, seed=seed)
    kinks = singular_indices(gamma)
    report = ViscosityReport(trials=trials, worst_margin=np.inf)

    for trial in range(trials):
        if len(kinks) and trial % 2 == 0:
            index = int(kinks[rng.integers(len(kinks))])
        else:
            index = int(rng.integers(len(gamma.points)))
        z = gamma.points[index]
        normals, from_oracle = _normal_directions(gamma, z, radius, directions)
        if len(normals) == 0:
            report.skipped += 1
            continue
        if from_oracle:
            eta = rng.standard_normal(len(normals)) @ normals
            eta /= np.linalg.norm(eta)
        else:
            eta = normals[rng.integers(len(normals))]
        gradient = rng.uniform(0.5, 2.0) * eta
        scale = float(np.linalg.norm(gradient)) * max(1.0, h)

        outcome = None
        for _ in range(MAX_REDRAWS):
            raw = rng.standard_normal((dim, dim)) * scale
            f = TestFunction(gradient=gradient, hessian=0.5 * (raw + raw.T), base=z)
            candidate = check_test_function(gamma, f, m, h, radius)
            if candidate.admissible:
                outcome = candidate
                break
        if outcome is None:
            report.skipped += 1
            continue

        report.admissible += 1
        report.worst_margin = min(report.worst_margin, outcome.margin)
        if outcome.passes:
            report.passed += 1
        else:
            report.witnesses.append(
                Witness(base=z, gradient=gradient, hessian=f.hessian, trace=outcome.trace, bound=outcome.bound, margin=outcome.margin)
            )

    if report.admissible == 0:
        report.worst_margin = 0.0
    logger.info(
        "scene %s: viscosity (%d, %.6g) %d/%d admissible trials pass, %d skipped",
        gamma.scene_id, m, h, report.passed, report.admissible, report.skipped,
    )
    return report


def barrier_eigen_check(fspec, gamma, m, h, radius=0.1):
    """
    Sum of the m largest eigenvalues of D^2 f(0) >= -h - |D^2 f| rho, for a
    quadratic graph through a sample at the origin lying above the samples
    within ``radius``.
    """
    hessian = np.asarray(fspec.hessian, dtype=float)
    hessian = 0.5 * (hessian + hessian.T)
    rho = gamma.resolution
    origin = np.zeros(gamma.ambient_dim)
    if float(gamma.distance(origin)) > rho:
        return BarrierEigenReport(admissible=False, reason='origin is not a sample')
    near = np.asarray(gamma.tree.query_ball_point(origin, radius), dtype=np.int64)
    points = gamma.points[near]
    if np.any(points[:, -1] > fspec(points[:, :-1]) + LOCAL_MAX_TOL):
        return BarrierEigenReport(admissible=False, reason='graph is not above the samples near 0')
    eigenvalues = np.sort(np.linalg.eigvalsh(hessian))[::-1]
    return BarrierEigenReport(
        admissible=True,
        eigen_sum=float(np.sum(eigenvalues[:m])),
        threshold=-h - float(np.linalg.norm(hessian, 2)) * rho,
    )
