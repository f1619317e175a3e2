"""
Principal curvatures from the offset level set and the trace bound.

At x = z + r eta the distance function is smooth when the nearest point is
unique; its Hessian restricted to eta^perp has eigenvalues chi_i, the
curvatures of the level set {delta = r}. They transfer back to the set by
kappa = chi / (1 - r chi), with +inf where the denominator vanishes.
The distance is differenced exactly where the scene has a closed form;
sample distances carry an error of order rho^2 / (r step^2) otherwise.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.linalg import null_space

from geoanalysis.exceptions.exceptions import AmbiguousProjectionError, GeometryDomainError
from geoanalysis.utils.thread_manager import ThreadManager
from normalbundle.bundle import NormalSample

logger = logging.getLogger(__name__)

SENTINEL = math.inf

# Ceiling of the sentinel band |1 - r chi| <= 10 step / r, the value it takes at
# the default step r/16. Coarser steps would otherwise flag flat points.
SENTINEL_BAND_MAX = 0.625


@dataclass(frozen=True)
class CurvatureRecord:
    sample: NormalSample
    tangent_dim: int
    kappas: tuple
    finite_trace: float
    chis: tuple = ()

    @property
    def has_sentinel(self):
        return any(math.isinf(k) for k in self.kappas[:self.tangent_dim])


@dataclass(frozen=True)
class TraceReport:
    count: int
    violations: int
    worst_margin: float
    sentinel_fraction: float
    dimension_mismatch: int
    varifold_residual: float = None
    residuals: tuple = ()

    @property
    def holds(self):
        return self.violations == 0


@dataclass(frozen=True)
class ContactCurvatureReport:
    pairs: int
    checked: int
    skipped: int
    lower_pass: int
    upper_pass: int
    both_pass: int
    worst_lower: float
    worst_upper: float

    @property
    def pass_fraction(self):
        if self.checked == 0:
            return 0.0
        return self.both_pass / self.checked


def curvature_tolerance(rho, r, step):
    return 5.0 * step / r + 10.0 * rho / r


def sentinel_band(r, step):
    return min(10.0 * step / r, SENTINEL_BAND_MAX)


def _stencil(x, basis, step):
    """x, x +- s b_i and x +- s b_i +- s b_j for i < j, in a fixed order."""
    k = basis.shape[1]
    points = [x]
    for i in range(k):
        points.append(x + step * basis[:, i])
        points.append(x - step * basis[:, i])
    for i in range(k):
        for j in range(i + 1, k):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                points.append(x + step * (si * basis[:, i] + sj * basis[:, j]))
    return np.asarray(points)


def _hessian(values, k, step):
    hessian = np.zeros((k, k))
    centre = values[0]
    for i in range(k):
        hessian[i, i] = (values[1 + 2 * i] - 2.0 * centre + values[2 + 2 * i]) / step ** 2
    cursor = 1 + 2 * k
    for i in range(k):
        for j in range(i + 1, k):
            pp, pm, mp, mm = values[cursor:cursor + 4]
            hessian[i, j] = hessian[j, i] = (pp - pm - mp + mm) / (4.0 * step ** 2)
            cursor += 4
    return 0.5 * (hessian + hessian.T)


def principal_curvatures(gamma, sample, step):
    """
    CurvatureRecord of a normal sample.

    :raises GeometryDomainError: If step lies outside [2 rho, r/4].
    :raises AmbiguousProjectionError: If the nearest-point fiber at z + r eta
                                      is wider than the stencil resolves.
    """
    rho = gamma.resolution
    r = float(sample.r)
    if step < 2.0 * rho * (1.0 - 1e-12) or step > 0.25 * r * (1.0 + 1e-12):
        raise GeometryDomainError(f"step {step:.6g} outside [2 rho, r/4] = [{2.0 * rho:.6g}, {0.25 * r:.6g}]")

    x = sample.probe
    diameter = gamma.nearest_fiber_diameter(x, rho ** 2 / (2.0 * r))
    if diameter > 2.0 * step + 2.0 * rho:
        raise AmbiguousProjectionError(f"nearest-point fiber of diameter {diameter:.6g} at r={r:.6g}", diameter=diameter)

    eta = np.asarray(sample.eta, dtype=float)
    basis = null_space(eta[None, :])
    k = basis.shape[1]
    values = np.asarray(gamma.exact_distance(_stencil(x, basis, step)), dtype=float)
    chis = np.linalg.eigvalsh(_hessian(values, k, step))

    r_eff = float(values[0])
    denominator = 1.0 - r_eff * chis
    sentinel = np.abs(denominator) <= sentinel_band(r, step)
    kappas = np.sort(np.where(sentinel, SENTINEL, chis / np.where(sentinel, 1.0, denominator)))

    oracle_dim = getattr(gamma.oracle, 'intrinsic_dim', None) if gamma.oracle is not None else None
    tangent_dim = int(oracle_dim) if oracle_dim is not None else int(np.sum(np.isfinite(kappas)))
    tangent = kappas[:tangent_dim]
    finite_trace = float(np.sum(tangent[np.isfinite(tangent)]))
    return CurvatureRecord(
        sample=sample,
        tangent_dim=tangent_dim,
        kappas=tuple(float(v) for v in kappas),
        finite_trace=finite_trace,
        chis=tuple(float(v) for v in chis),
    )


def curvature_records(gamma, samples, step, workers=1):
    """
    Records for every sample whose projection is unambiguous.

    :return: (records in sample order, number of skipped samples)
    """
    def run(sample):
        try:
            return principal_curvatures(gamma, sample, step)
        except AmbiguousProjectionError as exc:
            logger.debug("skipping sample %s: %s", sample.index, exc)
            return None

    results = ThreadManager(workers).map(run, samples)
    records = [record for record in results if record is not None]
    skipped = len(results) - len(records)
    if skipped:
        logger.info("scene %s: %d of %d samples skipped for ambiguous projection", gamma.scene_id, skipped, len(results))
    return records, skipped


def check_trace_bound(gamma, m, h, records, step):
    """
    Margins h - finite_trace against 5 step / r + 10 rho / r, plus the
    residual |trace + H . eta| where the scene knows its mean curvature.
    """
    rho = gamma.resolution
    violations = 0
    worst = math.inf
    sentinels = 0
    mismatch = 0
    residuals = []
    for record in records:
        margin = h - record.finite_trace
        worst = min(worst, margin)
        if margin < -curvature_tolerance(rho, record.sample.r, step):
            violations += 1
        if record.has_sentinel:
            sentinels += 1
        if record.tangent_dim != m:
            mismatch += 1
        if gamma.oracle is not None:
            mean_curvature = gamma.oracle.mean_curvature_vector(record.sample.z)
            if mean_curvature is not None:
                residuals.append(abs(record.finite_trace + float(np.dot(mean_curvature, record.sample.eta))))

    count = len(records)
    return TraceReport(
        count=count,
        violations=violations,
        worst_margin=worst if count else 0.0,
        sentinel_fraction=sentinels / count if count else 0.0,
        dimension_mismatch=mismatch,
        varifold_residual=max(residuals) if residuals else None,
        residuals=tuple(residuals),
    )


def check_curvature_bounds_at_contacts(gamma, contacts, m, h, step, max_pairs=None, workers=1):
    """
    Two-sided curvature bounds at contact pairs promoted to normal samples
    with r = 1 / (a eta_{n+1}):
    kappa_i >= -a eta_{n+1} and kappa_i <= (m - 1) a eta_{n+1} + h.
    """
    a = contacts.opening
    rho = gamma.resolution
    indices = np.arange(len(contacts))
    if max_pairs is not None and len(indices) > max_pairs:
        indices = indices[np.linspace(0, len(indices) - 1, max_pairs).round().astype(np.int64)]

    def run(i):
        eta = contacts.eta[i]
        reach = 1.0 / (a * eta[-1])
        local_step = min(max(step, 2.0 * rho), 0.25 * reach)
        if local_step < 2.0 * rho:
            return None
        sample = NormalSample(z=contacts.z[i], eta=eta, r=reach, index=int(contacts.sample_index[i]))
        try:
            record = principal_curvatures(gamma, sample, local_step)
        except AmbiguousProjectionError:
            return None
        finite = np.asarray([k for k in record.kappas if math.isfinite(k)])
        tol = curvature_tolerance(rho, reach, local_step)
        lower = -a * eta[-1]
        upper = (m - 1) * a * eta[-1] + h
        low_gap = float(finite.min() - lower) if len(finite) else math.inf
        high_gap = float(upper - finite.max()) if len(finite) else math.inf
        return low_gap >= -tol, high_gap >= -tol, low_gap, high_gap

    results = [r for r in ThreadManager(workers).map(run, [int(i) for i in indices]) if r is not None]
    return ContactCurvatureReport(
        pairs=len(contacts),
        checked=len(results),
        skipped=len(indices) - len(results),
        lower_pass=sum(1 for r in results if r[0]),
        upper_pass=sum(1 for r in results if r[1]),
        both_pass=sum(1 for r in results if r[0] and r[1]),
        worst_lower=min((r[2] for r in results), default=0.0),
        worst_upper=min((r[3] for r in results), default=0.0),
    )
