"""
The radial barrier glued to a touching paraboloid.

phi(t) = -(16^g - 1)/g on [0, 1/16], -(t^-g - 1)/g on [1/16, 1], 0 beyond;
psi(x) = P_{a,x1}(x) + a r^2 phi(|x - x0| / r). With g calibrated for n and
h < a <= (16^(g+1) + 2)^-1 the graph of psi is a strict barrier on the
annulus r/16 < |x - x0| < r:
trace Q(psi) . (-grad psi, 1) + h sqrt(1 + |grad psi|^2) < 0.
"""
from dataclasses import dataclass, replace
import logging
import math

import numpy as np

from geoanalysis.exceptions.exceptions import GeometryDomainError
from paraboloids.engine import Paraboloid, eval_paraboloid

logger = logging.getLogger(__name__)

# Exponent search grid 2^(k/16), k >= 1.
GAMMA_GRID_STEPS = 16
GAMMA_GRID_MAX = 256.0
CALIBRATION_POINTS = 1000
INNER = 1.0 / 16.0


@dataclass(frozen=True)
class BarrierSpec:
    gamma_b: float
    a: float
    x1: np.ndarray
    x0: np.ndarray
    r: float
    t: float = 0.0
    theta: float = None
    offset: float = 0.0

    @property
    def n(self):
        return len(np.atleast_1d(self.x0))

    @property
    def depth(self):
        """(16^g - 1)/g, so that min psi - P = -a r^2 depth."""
        return barrier_depth(self.gamma_b)

    @property
    def paraboloid(self):
        return Paraboloid(center=np.atleast_1d(np.asarray(self.x1, dtype=float)), opening=self.a, offset=self.offset)

    def shifted(self, t):
        return replace(self, t=t)


@dataclass(frozen=True)
class CalibrationResult:
    gamma: float
    worst_value: float
    margin: float
    t_worst: float


@dataclass(frozen=True)
class CertificateResult:
    worst: float
    points: int
    step: float

    @property
    def passes(self):
        return self.points > 0 and self.worst < 0.0


def barrier_depth(gamma_b):
    return (16.0 ** gamma_b - 1.0) / gamma_b


def admissible_opening(gamma_b):
    """Largest opening the barrier admits: (16^(g+1) + 2)^-1."""
    return 1.0 / (16.0 ** (gamma_b + 1.0) + 2.0)


def barrier_phi(gamma_b, t):
    if not gamma_b > 1:
        raise ValueError("barrier exponent must exceed 1")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("barrier_phi is defined for t >= 0")
    out = np.zeros_like(t)
    inner = t <= INNER
    middle = (t > INNER) & (t < 1.0)
    out[inner] = -(16.0 ** gamma_b - 1.0) / gamma_b
    out[middle] = -(t[middle] ** (-gamma_b) - 1.0) / gamma_b
    return out if out.ndim else float(out)


def barrier_psi(spec, x, with_offset=True):
    """P_{a,x1}(x) + a r^2 phi(|x - x0| / r); ``with_offset=False`` drops the paraboloid offset."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    paraboloid = spec.paraboloid if with_offset else replace(spec.paraboloid, offset=0.0)
    radial = np.linalg.norm(x - np.asarray(spec.x0, dtype=float), axis=1) / spec.r
    return eval_paraboloid(paraboloid, x) + spec.a * spec.r ** 2 * barrier_phi(spec.gamma_b, radial)


def _derivatives(psi, x, step):
    """Central-difference gradient and Hessian of psi at every row of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    count, n = x.shape
    eye = np.eye(n) * step
    centre = psi(x)
    gradient = np.zeros((count, n))
    hessian = np.zeros((count, n, n))
    for i in range(n):
        plus = psi(x + eye[i])
        minus = psi(x - eye[i])
        gradient[:, i] = (plus - minus) / (2.0 * step)
        hessian[:, i, i] = (plus - 2.0 * centre + minus) / step ** 2
        for j in range(i + 1, n):
            mixed = (
                psi(x + eye[i] + eye[j]) - psi(x + eye[i] - eye[j])
                - psi(x - eye[i] + eye[j]) + psi(x - eye[i] - eye[j])
            ) / (4.0 * step ** 2)
            hessian[:, i, j] = hessian[:, j, i] = mixed
    return gradient, hessian


def graph_trace_Q(psi, x, step, r=None, normal='up'):
    """
    Trace of the second fundamental form of the graph of psi paired with
    (-grad psi, 1): Laplacian psi - p^T D^2 psi p / (1 + |p|^2), p = grad psi.

    :param psi: Vectorized callable over (k, n) arrays.
    :param r: Barrier radius; the step must not exceed r/64.
    :param normal: 'up' or 'down' (the latter flips the sign).
    :return: (trace values, gradient norms)
    """
    if r is not None and step > r / 64.0 * (1.0 + 1e-12):
        raise GeometryDomainError(f"grid step {step:.6g} coarser than r/64 = {r / 64.0:.6g}")
    gradient, hessian = _derivatives(psi, x, step)
    laplace = np.trace(hessian, axis1=1, axis2=2)
    w2 = 1.0 + np.sum(gradient * gradient, axis=1)
    trace = laplace - np.einsum('ki,kij,kj->k', gradient, hessian, gradient) / w2
    if normal == 'down':
        trace = -trace
    return trace, np.sqrt(w2 - 1.0)


def annulus_points(spec, step):
    """Grid points whose full difference stencil lies in r/16 < |x - x0| < r."""
    x0 = np.asarray(spec.x0, dtype=float)
    k = int(math.ceil(spec.r / step))
    axis = np.arange(-k, k + 1, dtype=float) * step
    mesh = np.stack(np.meshgrid(*([axis] * spec.n), indexing='ij'), axis=-1).reshape(-1, spec.n)
    radial = np.linalg.norm(mesh, axis=1)
    reach = step * math.sqrt(2.0) if spec.n > 1 else step
    keep = (radial > spec.r * INNER + reach) & (radial < spec.r - reach)
    return x0 + mesh[keep]


def barrier_certificate(spec, h, step=None):
    """
    Worst value of trace Q + h sqrt(1 + |grad psi|^2) over the annulus grid.

    The touching offset does not affect derivatives and is left out.
    """
    step = spec.r / 64.0 if step is None else step
    points = annulus_points(spec, step)
    if len(points) == 0:
        return CertificateResult(worst=math.inf, points=0, step=step)
    trace, slope = graph_trace_Q(lambda y: barrier_psi(spec, y, with_offset=False), points, step, r=spec.r)
    values = trace + h * np.sqrt(1.0 + slope ** 2)
    worst = float(values.max())
    logger.debug("barrier certificate: %d points, worst %.6g", len(points), worst)
    return CertificateResult(worst=worst, points=len(points), step=step)


def calibration_expression(n, gamma_b, t):
    """n(1 + t^(-g-2)) - (g + 2) t^(-g-2) / 8, the barrier bound divided by a."""
    t = np.asarray(t, dtype=float)
    coefficient = n - (gamma_b + 2.0) / 8.0
    with np.errstate(over='ignore', invalid='ignore'):
        power = t ** (-gamma_b - 2.0)
        values = n + coefficient * power
    if coefficient == 0:
        values = np.full_like(t, float(n))
    return values


def calibrate_gamma(n, safety=2.0):
    """
    Smallest exponent on the grid 2^(k/16) whose expression stays below
    -1/safety on [1/16, 1]; t = 1 binds, i.e. g >= 16n - 2 + 8/safety.

    :raises GeometryDomainError: If the grid is exhausted.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not safety > 1:
        raise ValueError("safety must exceed 1")
    t = np.linspace(INNER, 1.0, CALIBRATION_POINTS)
    target = -1.0 / safety
    k = 1
    while 2.0 ** (k / GAMMA_GRID_STEPS) <= GAMMA_GRID_MAX:
        gamma_b = 2.0 ** (k / GAMMA_GRID_STEPS)
        k += 1
        if gamma_b <= 1.0:
            continue
        values = calibration_expression(n, gamma_b, t)
        if np.all(values <= target):
            worst = int(np.argmax(values))
            return CalibrationResult(
                gamma=gamma_b,
                worst_value=float(values[worst]),
                margin=float(target - values[worst]),
                t_worst=float(t[worst]),
            )
    raise GeometryDomainError(f"no barrier exponent up to {GAMMA_GRID_MAX} calibrates n={n}")


def calibrate_theta(gamma_b, r, slack=0.0):
    """
    Smallest power of two with theta/2 ((3r/64)^2 - (r/64)^2) > depth r^2 (1 + slack),
    so every Q_y dominates P_{a,x1} outside B(z', r/16).
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    needed = barrier_depth(gamma_b) * r ** 2 * (1.0 + slack)
    gap = 0.5 * ((3.0 * r / 64.0) ** 2 - (r / 64.0) ** 2)
    theta = 2.0 ** math.floor(math.log2(needed / gap))
    while theta * gap <= needed:
        theta *= 2.0
    return theta
