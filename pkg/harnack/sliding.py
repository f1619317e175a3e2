"""
Sliding barriers and paraboloids against a sample set.

measure_to_point runs the barrier argument end to end on one scene and
measures how much of A'_{alpha a} lands in U(x0, r/8); weak_harnack_check
builds the ladder F_j = B(0, 1/3) cap A'_{alpha^(j-k-1)} and the residual
fraction left uncovered at the top opening.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np
from django.conf import settings

from geoanalysis.exceptions.exceptions import GeometryDomainError, HypothesisError
from geoanalysis.utils.thread_manager import ThreadManager
from harnack.barrier import (
    BarrierSpec,
    admissible_opening,
    barrier_certificate,
    barrier_depth,
    barrier_psi,
    calibrate_gamma,
    calibrate_theta,
)
from normalbundle.directions import direction_net
from paraboloids.engine import (
    CenterGrid,
    Paraboloid,
    contact_set,
    eval_paraboloid,
    project_contact_set,
    tie_tolerance,
    touching_offset,
)
from setmodel.measure import box_count_measure, unit_ball_volume

logger = logging.getLogger(__name__)

HOLDS = 'holds'
FAILS = 'fails'
HYPOTHESIS_VIOLATED = 'hypothesis-violated'
RESIDUAL_EXCEEDS_MU = 'residual-exceeds-mu'

HARNACK_BALL = 1.0 / 3.0
SLAB_RADIUS = 0.25
HEIGHT_TOL = 1e-12
# x1 search: centers at most this many steps per radius
ANCHOR_STEPS = 16


@dataclass(frozen=True)
class SlideResult:
    t: float
    contacts: np.ndarray
    indices: np.ndarray


@dataclass
class MeasureToPointReport:
    scene: str
    n: int
    h: float
    a: float
    x0: tuple
    r: float
    alpha: float = math.nan
    theta: float = math.nan
    gamma_b: float = math.nan
    depth: float = math.nan
    x1: tuple = ()
    certificate_worst: float = math.nan
    slide_t: float = math.nan
    slide_bound: float = math.nan
    slide_contacts: int = 0
    localized: bool = False
    height_gap: float = math.nan
    sweep_points: int = 0
    sweep_contained: bool = False
    min_slack: float = math.nan
    beta: float = math.nan
    beta_err: float = math.nan
    verdict: str = HYPOTHESIS_VIOLATED
    hypothesis: str = ''
    diagnostic: str = ''

    @property
    def flat_reference(self):
        """omega_n / 8^n, the value a flat sheet reaches."""
        return unit_ball_volume(self.n) / 8.0 ** self.n


@dataclass
class HarnackReport:
    scene: str
    alpha: float
    k: int
    mu: float
    eps: float
    openings: tuple = ()
    levels: tuple = ()
    level_errors: tuple = ()
    monotone: bool = False
    touching_contained: bool = False
    residual: float = math.nan
    beta1: float = math.nan
    verdict: str = HYPOTHESIS_VIOLATED
    hypothesis: str = ''
    diagnostic: str = ''
    flags: list = field(default_factory=list)


def slide_to_touch(gamma, psi, region=None, tol=None):
    """
    Smallest shift t with psi + t above every sample: t = max (z_h - psi(z')).

    :param psi: Vectorized callable over horizontal points.
    :param region: Optional (center, radius); samples must project inside it.
    :raises GeometryDomainError: If a sample lies outside the region.
    """
    gamma.require_points()
    horizontal = gamma.horizontal
    if region is not None:
        center, radius = region
        spread = np.linalg.norm(horizontal - np.asarray(center, dtype=float), axis=1)
        if np.any(spread > radius + 1e-12):
            raise GeometryDomainError(f"samples reach {spread.max():.6g} outside the surface region of radius {radius:.6g}")
    surface = np.asarray(psi(horizontal), dtype=float)
    values = gamma.heights - surface
    t = float(values.max())
    if tol is None:
        scale = max(abs(t), gamma.height_bound, float(np.max(np.abs(surface))))
        tol = settings.CONTACT_TIE_RTOL * scale
    indices = np.flatnonzero(values >= t - tol)
    return SlideResult(t=t, contacts=gamma.points[indices], indices=indices)


def _check(condition, hypothesis, message):
    if not condition:
        raise HypothesisError(hypothesis, message)


def _anchor_candidates(x0, r, n):
    """x0 first, then centers of a ball grid around it ordered by distance."""
    grid = CenterGrid.ball(n, r / ANCHOR_STEPS, radius=r, center=x0).points
    order = np.lexsort(tuple(grid[:, i] for i in reversed(range(n))) + (np.linalg.norm(grid - x0, axis=1),))
    return [x0] + [grid[i] for i in order if np.linalg.norm(grid[i] - x0) > 0]


def find_anchor(gamma, a, x0, r):
    """
    A center x1 whose touching paraboloid P_{a,x1} has a contact in C_r(x0).

    :return: (x1, touching offset)
    :raises HypothesisError: If A'_a meets no point of U(x0, r).
    """
    for x1 in _anchor_candidates(x0, r, gamma.n):
        slide = slide_to_touch(gamma, lambda y: eval_paraboloid(Paraboloid(center=x1, opening=a), y))
        feet = slide.contacts[:, :-1]
        if np.min(np.linalg.norm(feet - x0, axis=1)) < r:
            return np.asarray(x1, dtype=float), slide.t
    raise HypothesisError('contact-in-ball', f"A'_a misses U(x0, r) for r={r:.6g}")


def _sweep_point(gamma, spec, theta, z_foot, y, ring):
    """Contact containment of Q_y and its slack over P_{a,x1} on the ring |x - z'| = r/16."""
    opening = (theta + 1.0) * spec.a
    center = (theta * y + spec.x1) / (1.0 + theta)
    offset = touching_offset(gamma, opening, center)
    values = gamma.heights - eval_paraboloid(Paraboloid(center=center, opening=opening), gamma.horizontal)
    tol = float(tie_tolerance(gamma, opening, np.array([offset]))[0])
    feet = gamma.horizontal[values >= values.max() - tol]
    contained = bool(np.all(np.linalg.norm(feet - spec.x0, axis=1) < spec.r / 8.0))
    ring_points = z_foot + ring
    slack = 0.5 * theta * (
        np.sum((ring_points - y) ** 2, axis=1) - float(np.sum((z_foot - y) ** 2))
    ) - spec.depth * spec.r ** 2
    return contained, float(slack.min())


def _ring_directions(n):
    if n == 1:
        return np.array([[-1.0], [1.0]])
    return direction_net(n, 0.1)


def measure_to_point(gamma, h, a, x0, r, alpha=None, theta=None, gamma_b=None, safety=2.0, rho_box=None,
                     center_spacing=None, workers=1):
    """
    Runs the barrier argument at x0 and measures beta = Leb(A'_{alpha a} cap U(x0, r/8)) / r^n.

    Hypothesis failures never raise; the report names the violated
    hypothesis and carries no beta.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = gamma.n
    report = MeasureToPointReport(scene=gamma.scene_id, n=n, h=h, a=a, x0=tuple(x0.tolist()), r=r)
    try:
        _check(len(x0) == n, 'ball', f"x0 has {len(x0)} coordinates, expected {n}")
        _check(r > 0 and np.linalg.norm(x0) + r < 1.0, 'ball', "B(x0, r) must lie in U(0, 1)")
        gamma_b = calibrate_gamma(n, safety).gamma if gamma_b is None else gamma_b
        theta = calibrate_theta(gamma_b, r) if theta is None else theta
        alpha = theta + 1.0 if alpha is None else alpha
        report.gamma_b, report.theta, report.alpha = gamma_b, theta, alpha
        report.depth = barrier_depth(gamma_b)
        _check(alpha >= theta + 1.0, 'amplification', f"alpha={alpha:.6g} below theta + 1 = {theta + 1.0:.6g}")
        _check(0.0 <= h < a <= 1.0 / alpha * (1.0 + 1e-12), 'opening', f"need 0 <= h < a <= 1/alpha, got h={h:.6g}, a={a:.6g}")
        _check(a <= admissible_opening(gamma_b) * (1.0 + 1e-12), 'barrier-admissibility',
               f"a={a:.6g} exceeds (16^(g+1) + 2)^-1 = {admissible_opening(gamma_b):.6g}")

        x1, offset = find_anchor(gamma, a, x0, r)
        spec = BarrierSpec(gamma_b=gamma_b, a=a, x1=x1, x0=x0, r=r, theta=theta, offset=offset)
        report.x1 = tuple(x1.tolist())

        certificate = barrier_certificate(spec, h)
        report.certificate_worst = certificate.worst
        _check(certificate.passes, 'barrier-inequality', f"trace bound reaches {certificate.worst:.6g} on the annulus")

        slide = slide_to_touch(gamma, lambda y: barrier_psi(spec, y))
        bound = a * r ** 2 * spec.depth
        report.slide_t, report.slide_bound, report.slide_contacts = slide.t, bound, len(slide.indices)
        _check(0.0 < slide.t <= bound + HEIGHT_TOL, 'slide-bound', f"shift {slide.t:.6g} outside (0, {bound:.6g}]")

        feet = slide.contacts[:, :-1]
        spread = np.linalg.norm(feet - x0, axis=1)
        report.localized = bool(np.all(spread <= r / 16.0 + HEIGHT_TOL))
        _check(report.localized, 'localization', f"barrier contact at |z' - x0| = {spread.max():.6g} > r/16")

        z = slide.contacts[int(np.argmin(spread))]
        z_foot = z[:-1]
        gap = float(eval_paraboloid(spec.paraboloid, z_foot) - z[-1])
        report.height_gap = gap
        _check(-HEIGHT_TOL <= gap <= bound + HEIGHT_TOL, 'height-gap', f"P(z') - z_h = {gap:.6g} outside [0, {bound:.6g}]")

        sweep = CenterGrid.ball(n, r / 256.0, radius=r / 64.0, center=np.zeros(n)).points + z_foot
        ring = (r / 16.0) * _ring_directions(n)
        outcomes = ThreadManager(workers).map(lambda y: _sweep_point(gamma, spec, theta, z_foot, y, ring), list(sweep))
        report.sweep_points = len(outcomes)
        report.sweep_contained = all(contained for contained, _ in outcomes)
        report.min_slack = min(slack for _, slack in outcomes)

        rho = gamma.resolution
        rho_box = 2.0 * rho if rho_box is None else rho_box
        grid = CenterGrid.ball(n, center_spacing or rho)
        projected = project_contact_set(contact_set(gamma, alpha * a, grid, workers=workers))
        inside = projected[np.linalg.norm(projected - x0, axis=1) < r / 8.0] if len(projected) else projected
        estimate = box_count_measure(inside, n, rho_box, resolution=rho)
        report.beta = estimate.value / r ** n
        report.beta_err = estimate.error_bound / r ** n
    except HypothesisError as exc:
        report.verdict = HYPOTHESIS_VIOLATED
        report.hypothesis = exc.hypothesis
        report.diagnostic = str(exc)
        logger.info("measure-to-point on %s: %s", gamma.scene_id, exc)
        return report

    passes = report.beta > 0 and report.sweep_contained and report.min_slack > 0
    report.verdict = HOLDS if passes else FAILS
    logger.debug("measure-to-point on %s: beta=%.6g verdict %s", gamma.scene_id, report.beta, report.verdict)
    return report


def _level_points(gamma, opening, grid, workers):
    projected = project_contact_set(contact_set(gamma, opening, grid, workers=workers))
    if len(projected) == 0:
        return projected
    return projected[np.linalg.norm(projected, axis=1) <= HARNACK_BALL]


def _cells(points, rho_box):
    if len(points) == 0:
        return set()
    return set(map(tuple, np.floor(points / rho_box).astype(np.int64).tolist()))


def ladder_drops(measures, errors, cell):
    """
    Level-to-level drops of the weak Harnack ladder.

    A drop is significant when it exceeds the joint error bars of both levels
    plus one box volume; smaller drops are box-counting noise.

    :return: list of (level, drop, significant) for every decreasing step
    """
    drops = []
    for j in range(len(measures) - 1):
        drop = measures[j] - measures[j + 1]
        if drop > 0:
            drops.append((j, drop, drop > errors[j] + errors[j + 1] + cell + 1e-12))
    return drops


def weak_harnack_check(gamma, h, alpha, k, mu, rho_box=None, center_spacing=None, workers=1):
    """
    Weak Harnack ladder at openings alpha^(j-k-1), j = 0..k.

    Levels run in order; each measure must not drop below the previous one
    beyond their joint error bars and one box volume (see ladder_drops).
    The residual is the fraction of the rho_box cells of B(0, 1/3) that the
    top level leaves uncovered.
    """
    n = gamma.n
    eps = 1.0 / (48.0 * alpha ** (k + 1))
    report = HarnackReport(scene=gamma.scene_id, alpha=alpha, k=k, mu=mu, eps=eps)
    try:
        _check(alpha > 1 and k >= 1 and 0 < mu < 1, 'parameters', "need alpha > 1, k >= 1, 0 < mu < 1")
        gamma.require_points()
        base = alpha ** (-k - 1)
        _check(float(gamma.heights.max()) <= HEIGHT_TOL, 'nonpositive-height', f"samples rise to {gamma.heights.max():.6g} above 0")
        slab = (np.linalg.norm(gamma.horizontal, axis=1) <= SLAB_RADIUS) & (gamma.heights >= -base / 48.0)
        _check(bool(np.any(slab)), 'slab', f"no sample in |x'| <= 1/4, x_h >= -{base / 48.0:.6g}")
        _check(0.0 <= h < base, 'mean-curvature', f"h={h:.6g} must be below alpha^(-k-1) = {base:.6g}")
    except HypothesisError as exc:
        report.hypothesis = exc.hypothesis
        report.diagnostic = str(exc)
        logger.info("weak harnack on %s: %s", gamma.scene_id, exc)
        return report

    rho = gamma.resolution
    rho_box = 2.0 * rho if rho_box is None else rho_box
    grid = CenterGrid.ball(n, center_spacing or rho)

    probe = slide_to_touch(gamma, lambda y: eval_paraboloid(Paraboloid(center=np.zeros(n), opening=base), y))
    report.touching_contained = bool(np.all(np.linalg.norm(probe.contacts[:, :-1], axis=1) < HARNACK_BALL))
    if not report.touching_contained:
        report.flags.append('touching-outside-C1/3')

    openings, measures, errors = [], [], []
    top = None
    for j in range(k + 1):
        opening = alpha ** (j - k - 1)
        points = _level_points(gamma, opening, grid, workers)
        estimate = box_count_measure(points, n, rho_box, resolution=rho)
        openings.append(opening)
        measures.append(estimate.value)
        errors.append(estimate.error_bound)
        top = points
        logger.debug("weak harnack on %s: level %d opening %.6g measure %.6g", gamma.scene_id, j, opening, estimate.value)
    report.openings, report.levels, report.level_errors = tuple(openings), tuple(measures), tuple(errors)
    drops = ladder_drops(measures, errors, rho_box ** n)
    report.monotone = not any(significant for _, _, significant in drops)
    if drops and report.monotone:
        report.flags.append('ladder-noise')

    ball_cells = _cells(grid.points[np.linalg.norm(grid.points, axis=1) <= HARNACK_BALL], rho_box)
    covered = _cells(top, rho_box)
    report.residual = len(ball_cells - covered) / len(ball_cells) if ball_cells else 0.0

    if measures[0] <= 0:
        report.flags.append('F0-empty')
        report.verdict = FAILS
    elif not report.monotone:
        report.flags.append('non-monotone')
        report.verdict = FAILS
    elif report.residual <= mu:
        report.verdict = HOLDS
        report.beta1 = 1.0 - mu ** (1.0 / k)
    else:
        report.verdict = RESIDUAL_EXCEEDS_MU
    logger.info("weak harnack on %s: residual %.6g, verdict %s", gamma.scene_id, report.residual, report.verdict)
    return report
