"""
Both sides of the ABP inequalities, the projection lemma and the Savin ratio.

Measures are box counts; every verdict tolerates the combined box-counting
error of both sides, so discretization noise alone never produces "fails".
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from abp.constants import (
    codim1_factors,
    codim1_gamma,
    general_factors,
    general_gamma,
    projection_factor,
    savin_reference,
)
from normalbundle.bundle import stratum_map
from normalbundle.directions import max_pairwise_angle
from paraboloids.engine import contact_set, project_contact_set
from setmodel.measure import MeasureEstimate, box_count_measure

logger = logging.getLogger(__name__)

HOLDS = 'holds'
FAILS = 'fails'
HYPOTHESIS_VIOLATED = 'hypothesis-violated'
INSUFFICIENT_RESOLUTION = 'insufficient-resolution'
VERDICTS = (HOLDS, FAILS, HYPOTHESIS_VIOLATED, INSUFFICIENT_RESOLUTION)


@dataclass
class AbpReport:
    scene: str
    n: int
    m: int
    h: float
    a: float
    rho: float
    lhs: MeasureEstimate
    gamma: float
    factor1: float
    factor2: float
    measure: MeasureEstimate
    kind: str = 'codim1'
    flags: list = field(default_factory=list)
    verdict: str = ''

    @property
    def rhs_constant(self):
        return self.gamma * self.factor1 * self.factor2

    @property
    def rhs(self):
        return self.rhs_constant * self.measure.value

    @property
    def rhs_err(self):
        return self.rhs_constant * self.measure.error_bound

    @property
    def margin(self):
        return self.rhs - self.lhs.value


@dataclass(frozen=True)
class ProjectionReport:
    scene: str
    a: float
    rho: float
    feet: MeasureEstimate
    projection: MeasureEstimate
    factor: float
    verdict: str

    @property
    def ratio(self):
        if self.projection.value == 0:
            return math.inf
        return self.feet.value / self.projection.value


@dataclass(frozen=True)
class SavinReport:
    scene: str
    a: float
    rho: float
    ratio: float
    ratio_err: float
    reference: float
    contained: bool
    verdict: str


def default_box(gamma, rho_box=None):
    return 2.0 * gamma.resolution if rho_box is None else rho_box


def _measure_resolution(gamma, grid):
    return max(gamma.resolution, grid.spacing or 0.0)


def decide_verdict(report, empty, viscosity=None, boundary_touch=False):
    """
    Verdict precedence: empty contact set, viscosity rejection, unreliable
    measures, the inequality with error bars, then boundary touching.
    """
    if empty:
        report.flags.append('empty-contact-set')
        return HYPOTHESIS_VIOLATED
    if viscosity is not None and viscosity.verdict == 'rejects':
        report.flags.append('viscosity-rejects')
        return HYPOTHESIS_VIOLATED
    if not (report.lhs.reliable and report.measure.reliable):
        return INSUFFICIENT_RESOLUTION
    if report.margin >= -(report.lhs.error_bound + report.rhs_err):
        return HOLDS
    if boundary_touch:
        return HYPOTHESIS_VIOLATED
    return FAILS


def _contact_flags(contacts):
    flags = []
    if contacts.boundary_touch:
        flags.append('boundary-touch')
    if contacts.warning:
        flags.append(contacts.warning.replace(' ', '-'))
    return flags


def abp_codim1(gamma, h, a, grid, rho_box=None, viscosity=None, workers=1, contacts=None):
    """H^n(C) <= (2n + 4h)^n (1 + a + h/a)^n sqrt(1 + 4a^2) H^n(A'_a(Gamma; C))."""
    n = gamma.n
    rho_box = default_box(gamma, rho_box)
    if contacts is None:
        contacts = contact_set(gamma, a, grid, workers=workers)
    resolution = _measure_resolution(gamma, grid)
    lhs = box_count_measure(grid.points, n, rho_box, resolution=resolution)
    projected = project_contact_set(contacts)
    measure = box_count_measure(projected, n, rho_box, resolution=resolution)
    factor1, factor2 = codim1_factors(n, h, a)
    report = AbpReport(
        scene=gamma.scene_id, n=n, m=n, h=h, a=a, rho=gamma.resolution, lhs=lhs,
        gamma=codim1_gamma(n, h), factor1=factor1, factor2=factor2, measure=measure,
        kind='codim1', flags=_contact_flags(contacts),
    )
    report.verdict = decide_verdict(report, contacts.is_empty, viscosity, contacts.boundary_touch)
    logger.info("scene %s: abp codim1 a=%.6g lhs=%.6g rhs=%.6g -> %s", gamma.scene_id, a, lhs.value, report.rhs, report.verdict)
    return report


def fiber_measure(directions, d, box):
    """
    H^d of a fiber of unit normals: a cluster count for d = 0, a box count
    in R^{n+1} at side ``box`` for d >= 1.
    """
    directions = np.atleast_2d(directions)
    if len(directions) == 0:
        return MeasureEstimate(value=0.0, dimension=d, resolution=box, error_bound=0.0)
    if d == 0:
        kept = []
        cos_tol = math.cos(box)
        for eta in directions:
            if not any(float(eta @ other) >= cos_tol for other in kept):
                kept.append(eta)
        return MeasureEstimate(value=float(len(kept)), dimension=0, resolution=box, error_bound=0.0)
    return box_count_measure(directions, d, box)


def fiber_arc_length(directions):
    """Great-circle extent of a one-dimensional fiber: the largest pairwise angle."""
    return max_pairwise_angle(directions)


def fibers_by_foot(contacts):
    """Unit normals grouped by contact foot, feet in sample-index order."""
    order = np.argsort(contacts.sample_index, kind='stable')
    indices = contacts.sample_index[order]
    feet, starts = np.unique(indices, return_index=True)
    bounds = list(starts) + [len(indices)]
    return {int(foot): contacts.eta[order[bounds[i]:bounds[i + 1]]] for i, foot in enumerate(feet)}


def abp_general(gamma, m, h, a, grid, rho_box=None, viscosity=None, stratum_radius=0.25,
                direction_resolution=0.2, workers=1, contacts=None):
    """
    H^n(C) <= 4^(n-m) (2m + 4h)^m (1 + a + 1/a)^(n-m) (1 + a + h/a)^m
              * sum over stratum-m feet z of H^(n-m)(fiber at z) rho^m J(z).

    Fibers are taken from the unmerged contact pairs; box counting absorbs
    repeated directions. J is the oracle's graph area factor, else 1.
    """
    n = gamma.n
    rho = gamma.resolution
    rho_box = default_box(gamma, rho_box)
    if contacts is None:
        contacts = contact_set(gamma, a, grid, workers=workers, merge=False)
    lhs = box_count_measure(grid.points, n, rho_box, resolution=_measure_resolution(gamma, grid))
    factor1, factor2 = general_factors(n, m, h, a)
    report = AbpReport(
        scene=gamma.scene_id, n=n, m=m, h=h, a=a, rho=rho, lhs=lhs,
        gamma=general_gamma(n, m, h), factor1=factor1, factor2=factor2,
        measure=MeasureEstimate(value=0.0, dimension=n - m, resolution=rho, error_bound=0.0),
        kind='general', flags=_contact_flags(contacts),
    )
    if contacts.is_empty:
        report.verdict = decide_verdict(report, True)
        return report

    fibers = fibers_by_foot(contacts)
    feet = np.asarray(sorted(fibers), dtype=np.int64)
    strata = stratum_map(gamma, feet, stratum_radius, direction_resolution, workers=workers)
    selected = feet[strata == m]
    if len(selected) == 0:
        report.flags.extend(['no-stratum-contacts', 'low-confidence'])
        report.verdict = HYPOTHESIS_VIOLATED
        logger.info("scene %s: no contact foot in stratum %d", gamma.scene_id, m)
        return report

    area = np.ones(len(selected))
    if gamma.oracle is not None and gamma.oracle.intrinsic_dim == n:
        area = gamma.oracle.area_factor(gamma.points[selected, :-1])
    fiber_box = max(2.0 * a * (grid.spacing or rho), 1e-12)
    total = 0.0
    error = 0.0
    for foot, weight in zip(selected, area):
        estimate = fiber_measure(fibers[int(foot)], n - m, fiber_box)
        total += estimate.value * rho ** m * weight
        error += estimate.error_bound * rho ** m * weight
    report.measure = MeasureEstimate(value=total, dimension=n - m, resolution=fiber_box, error_bound=error)
    if len(selected) < len(feet):
        report.flags.append(f"lower-strata-feet={len(feet) - len(selected)}")
    report.verdict = decide_verdict(report, False, viscosity, contacts.boundary_touch)
    logger.info("scene %s: abp general m=%d a=%.6g lhs=%.6g rhs=%.6g -> %s", gamma.scene_id, m, a, lhs.value, report.rhs, report.verdict)
    return report


def projection_inequality_check(gamma, a, grid, rho_box=None, workers=1, contacts=None):
    """H^n(B) <= sqrt(1 + 4a^2) H^n(A'), B being the contact feet in R^{n+1}."""
    n = gamma.n
    rho_box = default_box(gamma, rho_box)
    if contacts is None:
        contacts = contact_set(gamma, a, grid, workers=workers)
    feet = contacts.feet()
    feet_measure = box_count_measure(feet, n, rho_box, resolution=gamma.resolution)
    projection = box_count_measure(project_contact_set(contacts), n, rho_box, resolution=gamma.resolution)
    factor = projection_factor(a)
    if contacts.is_empty:
        verdict = HYPOTHESIS_VIOLATED
    elif not (feet_measure.reliable and projection.reliable):
        verdict = INSUFFICIENT_RESOLUTION
    elif feet_measure.value <= factor * projection.value + feet_measure.error_bound + factor * projection.error_bound:
        verdict = HOLDS
    else:
        verdict = FAILS
    return ProjectionReport(
        scene=gamma.scene_id, a=a, rho=gamma.resolution, feet=feet_measure,
        projection=projection, factor=factor, verdict=verdict,
    )


def savin_ratio(gamma, a, grid, h=0.0, rho_box=None, workers=1, contacts=None):
    """H^n(A'_a) / H^n(C), reported against the reciprocal codimension-one constant."""
    n = gamma.n
    rho_box = default_box(gamma, rho_box)
    if contacts is None:
        contacts = contact_set(gamma, a, grid, workers=workers)
    resolution = _measure_resolution(gamma, grid)
    lhs = box_count_measure(grid.points, n, rho_box, resolution=resolution)
    projection = box_count_measure(project_contact_set(contacts), n, rho_box, resolution=resolution)
    ratio = projection.value / lhs.value if lhs.value > 0 else 0.0
    ratio_err = 0.0
    if lhs.value > 0 and projection.value > 0:
        ratio_err = ratio * (projection.error_bound / projection.value + lhs.error_bound / lhs.value)
    contained = not contacts.boundary_touch and not contacts.is_empty
    verdict = 'reported' if contained and 0 < a <= 1 and ratio > 0 else HYPOTHESIS_VIOLATED
    return SavinReport(
        scene=gamma.scene_id, a=a, rho=gamma.resolution, ratio=ratio, ratio_err=ratio_err,
        reference=savin_reference(n, h, a), contained=contained, verdict=verdict,
    )
