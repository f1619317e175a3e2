"""
The [run] section of a suite configuration.

Every key is optional. Lists are comma separated and accept fractions:

    [run]
    operation = abp
    scenes = plane, sphere
    openings = 1/2, 1
    radii = 1/4
    resolutions = 1/64, 1/128
    seeds = 7
    m = 1
    h = 0
    trials = 200
    samples = 400
    direction_resolution = 0.2
    center_radius = 1
    center_spacing = 1/64
    step = 1/64
    box_factor = 2
    abp_mode = auto
    stratum_radius = 0.25
    alpha = 2
    k = 3
    mu = 0.1
    x0 = 0, 0
    harnack_radius = 0.5
    safety = 2
    threads = 4
    svg = false
    out = output
"""
from dataclasses import dataclass, field, replace
import hashlib
from pathlib import Path

from django.conf import settings

from geoanalysis.exceptions.exceptions import ConfigurationError
from geoanalysis.utils.config_reader import ConfigReader
from setmodel.utils.scene_config import read_scene_specs

OPERATIONS = ('contact', 'curvature', 'viscosity', 'abp', 'harnack')
OPERATION_CHOICES = OPERATIONS + ('all',)
ABP_MODES = ('auto', 'codim1', 'general')
RUN_SECTION = 'run'


@dataclass(frozen=True)
class HarnackParams:
    alpha: float = 2.0
    k: int = 3
    mu: float = 0.1
    x0: tuple = None
    radius: float = 0.5
    safety: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    operation: str
    scenes: tuple
    config_hash: str
    openings: tuple = (1.0,)
    radii: tuple = (0.25,)
    resolutions: tuple = ()
    seeds: tuple = ()
    m: int = None
    h: float = None
    trials: int = 200
    samples: int = 400
    direction_resolution: float = 0.2
    center_radius: float = 1.0
    center_spacing: float = None
    step: float = None
    box_factor: float = 2.0
    abp_mode: str = 'auto'
    stratum_radius: float = 0.25
    harnack: HarnackParams = field(default_factory=HarnackParams)
    threads: int = 1
    svg: bool = False
    out: Path = None
    source: str = '<config>'

    @property
    def operations(self):
        return OPERATIONS if self.operation == 'all' else (self.operation,)

    @property
    def seed_list(self):
        return self.seeds or (settings.ENGINE_SEED,)

    def with_overrides(self, **overrides):
        """Command-line flags win over the file; ``None`` leaves a value alone."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})


def config_hash(text):
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _positive_list(section, key, default):
    values = section.reals(key)
    if values is None:
        return default
    if any(not v > 0 for v in values):
        section.fail(key, f"'{key}' values must be positive")
    return tuple(values)


def _positive(section, key, default):
    value = section.real(key)
    if value is None:
        return default
    if not value > 0:
        section.fail(key, f"'{key}' must be positive, got {value}")
    return value


def parse_run_config(text, source='<config>'):
    """
    Parses a suite configuration into a RunConfig.

    :raises ConfigurationError: With line and column of the offending key.
    """
    reader = ConfigReader(text, source=source)
    specs = read_scene_specs(reader)
    if not specs:
        raise ConfigurationError("no [scene:<id>] section found", line=1, column=1)
    if RUN_SECTION not in reader.sections():
        return RunConfig(operation='all', scenes=tuple(specs), config_hash=config_hash(text), source=source,
                         threads=settings.ENGINE_THREADS, out=Path(settings.REPORT_OUTPUT_DIR))

    run = reader.section(RUN_SECTION)
    operation = run.raw('operation', default='all')
    if operation not in OPERATION_CHOICES:
        run.fail('operation', f"unknown operation '{operation}' (expected one of {', '.join(OPERATION_CHOICES)})")

    selected = run.raw('scenes')
    if selected:
        by_id = {spec.scene_id: spec for spec in specs}
        names = [name.strip() for name in selected.split(',') if name.strip()]
        missing = [name for name in names if name not in by_id]
        if missing:
            run.fail('scenes', f"unknown scene id(s): {', '.join(missing)}")
        specs = [by_id[name] for name in names]

    resolutions = _positive_list(run, 'resolutions', ())
    if any(later >= earlier for earlier, later in zip(resolutions, resolutions[1:])):
        run.fail('resolutions', "'resolutions' must be strictly decreasing")

    seeds = run.integers('seeds', default=())
    if any(seed < 0 for seed in seeds):
        run.fail('seeds', "'seeds' must be non-negative")

    m = run.integer('m')
    if m is not None and m < 1:
        run.fail('m', "'m' must be at least 1")
    h = run.real('h')
    if h is not None and h < 0:
        run.fail('h', "'h' must be non-negative")

    trials = run.integer('trials', default=200)
    if trials < 1:
        run.fail('trials', "'trials' must be at least 1")
    samples = run.integer('samples', default=400)
    if samples < 1:
        run.fail('samples', "'samples' must be at least 1")
    center_radius = _positive(run, 'center_radius', 1.0)
    if center_radius > 1.0:
        run.fail('center_radius', "'center_radius' must not exceed 1")
    abp_mode = run.raw('abp_mode', default='auto')
    if abp_mode not in ABP_MODES:
        run.fail('abp_mode', f"unknown abp_mode '{abp_mode}' (expected one of {', '.join(ABP_MODES)})")

    k = run.integer('k', default=3)
    if k < 1:
        run.fail('k', "'k' must be at least 1")
    mu = run.real('mu', default=0.1)
    if not 0 < mu < 1:
        run.fail('mu', "'mu' must lie in (0, 1)")
    alpha = run.real('alpha', default=2.0)
    if not alpha > 1:
        run.fail('alpha', "'alpha' must exceed 1")
    safety = run.real('safety', default=2.0)
    if not safety > 1:
        run.fail('safety', "'safety' must exceed 1")
    x0 = run.reals('x0')

    threads = run.integer('threads', default=settings.ENGINE_THREADS)
    if threads < 1:
        run.fail('threads', "'threads' must be at least 1")

    return RunConfig(
        operation=operation,
        scenes=tuple(specs),
        config_hash=config_hash(text),
        openings=_positive_list(run, 'openings', (1.0,)),
        radii=_positive_list(run, 'radii', (0.25,)),
        resolutions=resolutions,
        seeds=tuple(seeds),
        m=m,
        h=h,
        trials=trials,
        samples=samples,
        direction_resolution=_positive(run, 'direction_resolution', 0.2),
        center_radius=center_radius,
        center_spacing=_positive(run, 'center_spacing', None),
        step=_positive(run, 'step', None),
        box_factor=_positive(run, 'box_factor', 2.0),
        abp_mode=abp_mode,
        stratum_radius=_positive(run, 'stratum_radius', 0.25),
        harnack=HarnackParams(
            alpha=alpha, k=k, mu=mu, x0=tuple(x0) if x0 else None,
            radius=_positive(run, 'harnack_radius', 0.5), safety=safety,
        ),
        threads=threads,
        svg=run.boolean('svg', default=False),
        out=Path(run.raw('out') or settings.REPORT_OUTPUT_DIR),
        source=source,
    )


def load_run_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
    return parse_run_config(text, source=str(path))
