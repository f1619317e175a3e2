"""
Run orchestration: scenes, task plan, parallel execution, emission.

Every scene is built before any task runs and nothing is written before
every task has finished. Tasks are enumerated in a fixed order and numbered
<hash8>-<seq>, so the run ids, and therefore the sorted tables, do not
depend on the thread count.
"""
from collections import Counter
from dataclasses import dataclass, field, replace
import logging
import time

import numpy as np

from abp.verifier import abp_codim1, abp_general, projection_inequality_check, savin_ratio
from geoanalysis.exceptions.exceptions import EmptySetError, GeometryDomainError
from geoanalysis.utils.number_formatter import NumberConverter
from geoanalysis.utils.thread_manager import ThreadManager
from harnack.barrier import admissible_opening, calibrate_gamma, calibrate_theta
from harnack.sliding import measure_to_point, weak_harnack_check
from normalbundle.bundle import sample_normal_bundle
from normalbundle.curvature import check_curvature_bounds_at_contacts, check_trace_bound, curvature_records
from normalbundle.utils.record_io import record_frame
from normalbundle.viscosity import viscosity_test
from paraboloids.engine import CenterGrid, contact_set, opening_monotonicity_check, project_contact_set
from paraboloids.utils.contact_io import contact_frame
from reports import rows
from reports.emit import emit_svg, emit_table
from setmodel.measure import box_count_measure
from setmodel.scenes import build_scene

logger = logging.getLogger(__name__)

HOLDS = 'holds'
FAILS = 'fails'
HYPOTHESIS_VIOLATED = 'hypothesis-violated'
INSUFFICIENT_RESOLUTION = 'insufficient-resolution'
DOMAIN_ERROR = 'domain-error'
# Share of contact pairs that must meet both curvature bounds.
CONTACT_BOUND_FRACTION = 0.95
MAX_CONTACT_PAIRS = 500


@dataclass(frozen=True)
class Task:
    run_id: str
    kind: str
    scene: int
    params: dict


@dataclass
class TaskResult:
    run_id: str
    tables: dict = field(default_factory=dict)
    runs: list = field(default_factory=list)
    dumps: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)

    def add(self, family, row, config_hash):
        self.tables.setdefault(family, []).append(row)
        self.runs.append(rows.result_row(self.run_id, family, row['scene'], row['rho'], config_hash, row['verdict']))


@dataclass
class RunOutcome:
    config: object
    tables: dict
    dumps: dict
    plots: dict
    paths: list = field(default_factory=list)

    @property
    def verdicts(self):
        return Counter(row['verdict'] for row in self.tables.get('runs', []))

    @property
    def failed(self):
        return self.verdicts[FAILS] > 0

    @property
    def exit_code(self):
        return 1 if self.failed else 0


def build_scenes(config):
    """
    One sample set per scene and resolution, in configuration order.

    :raises SceneError: On the first invalid scene.
    """
    scenes = []
    for spec in config.scenes:
        for rho in config.resolutions or (spec.resolution,):
            scenes.append(build_scene(replace(spec, resolution=rho)))
    return scenes


def plan(config, scenes):
    """Task list in canonical order: operation, scene, resolution, then parameters."""
    entries = []
    for operation in config.operations:
        for index, gamma in enumerate(scenes):
            if operation == 'contact':
                entries += [('contact', index, {'a': a}) for a in config.openings]
                ordered = sorted(set(config.openings))
                entries += [('monotonicity', index, {'a': a, 'a_larger': b}) for a, b in zip(ordered, ordered[1:])]
            elif operation == 'curvature':
                entries += [('curvature', index, {'r': r, 'seed': s}) for r in config.radii for s in config.seed_list]
                entries += [('curvature_bounds', index, {'a': a}) for a in config.openings]
            elif operation == 'viscosity':
                entries += [('viscosity', index, {'seed': s}) for s in config.seed_list]
            elif operation == 'abp':
                entries += [('abp', index, {'a': a}) for a in config.openings]
            elif operation == 'harnack':
                entries.append(('measure_to_point', index, {'r': config.harnack.radius}))
                entries.append(('harnack', index, {}))
    prefix = config.config_hash[:8]
    return [Task(run_id=f"{prefix}-{seq:04d}", kind=kind, scene=index, params=params)
            for seq, (kind, index, params) in enumerate(entries, start=1)]


def _dims(config, gamma):
    m = config.m if config.m is not None else gamma.intrinsic_dim
    h = config.h if config.h is not None else gamma.mc_bound
    return m, h


def _grid(config, gamma):
    return CenterGrid.ball(gamma.n, config.center_spacing or gamma.resolution, radius=config.center_radius)


def _rho_box(config, gamma):
    return config.box_factor * gamma.resolution


def _step(config, gamma, r):
    return config.step or max(2.0 * gamma.resolution, r / 16.0)


def _admission(config, gamma, m, h):
    """Viscosity classification of the scene with the first seed."""
    return viscosity_test(gamma, m, h, config.trials, config.seed_list[0])


def _scene_label(gamma):
    return f"{gamma.scene_id} rho={gamma.resolution:.6g}"


class TaskRunner:
    """Executes one task against its scene; each method fills a TaskResult."""

    def __init__(self, config, scenes):
        self.config = config
        self.scenes = scenes

    def __call__(self, task):
        gamma = self.scenes[task.scene]
        result = TaskResult(run_id=task.run_id)
        started = time.perf_counter()
        try:
            getattr(self, f"run_{task.kind}")(gamma, result, **task.params)
        except (GeometryDomainError, EmptySetError) as exc:
            logger.warning("%s %s on %s: %s", task.run_id, task.kind, gamma.scene_id, exc)
            result.runs.append(rows.result_row(
                task.run_id, task.kind, gamma.scene_id, gamma.resolution, self.config.config_hash, DOMAIN_ERROR,
            ))
        logger.info("%s %s on %s finished in %.3fs", task.run_id, task.kind, _scene_label(gamma), time.perf_counter() - started)
        return result

    def run_contact(self, gamma, result, a):
        contacts = contact_set(gamma, a, _grid(self.config, gamma))
        projected = project_contact_set(contacts)
        measure = box_count_measure(projected, gamma.n, _rho_box(self.config, gamma), resolution=gamma.resolution)
        result.add('contact', rows.contact_row(result.run_id, gamma, contacts, measure), self.config.config_hash)
        result.dumps[('contacts', f"{gamma.scene_id}-{result.run_id}.csv")] = contact_frame(contacts)
        result.plots[('contacts', gamma.scene_id, f"a={a:.6g} rho={gamma.resolution:.6g}")] = projected

    def run_monotonicity(self, gamma, result, a, a_larger):
        holds, worst, uncovered = opening_monotonicity_check(gamma, a, a_larger, _grid(self.config, gamma))
        row = rows.monotonicity_row(result.run_id, gamma, a, a_larger, holds, worst, uncovered)
        result.add('monotonicity', row, self.config.config_hash)

    def run_curvature(self, gamma, result, r, seed):
        m, h = _dims(self.config, gamma)
        step = _step(self.config, gamma, r)
        count = min(len(gamma.points), self.config.samples)
        indices = np.unique(np.linspace(0, len(gamma.points) - 1, count).round().astype(np.int64))
        samples = sample_normal_bundle(gamma, r, self.config.direction_resolution, indices=indices, seed=seed)
        flags = []
        if not 2.0 * gamma.resolution <= step <= 0.25 * r:
            records, skipped = [], len(samples)
            flags.append('step-out-of-range')
        else:
            records, skipped = curvature_records(gamma, samples, step)
        report = check_trace_bound(gamma, m, h, records, step)
        if not records:
            verdict = INSUFFICIENT_RESOLUTION
        elif report.holds:
            verdict = HOLDS
        elif _admission(self.config, gamma, m, h).verdict == 'rejects':
            flags.append('viscosity-rejects')
            verdict = HYPOTHESIS_VIOLATED
        else:
            verdict = FAILS
        row = rows.curvature_row(result.run_id, gamma, m, h, r, step, seed, report, skipped, flags, verdict)
        result.add('curvature', row, self.config.config_hash)
        result.dumps[('curvature', f"{gamma.scene_id}-{result.run_id}.csv")] = record_frame(records, gamma.ambient_dim)

    def run_curvature_bounds(self, gamma, result, a):
        m, h = _dims(self.config, gamma)
        contacts = contact_set(gamma, a, _grid(self.config, gamma))
        step = self.config.step or 2.0 * gamma.resolution
        report = check_curvature_bounds_at_contacts(gamma, contacts, m, h, step, max_pairs=MAX_CONTACT_PAIRS)
        if report.checked == 0:
            verdict = INSUFFICIENT_RESOLUTION
        elif report.pass_fraction >= CONTACT_BOUND_FRACTION:
            verdict = HOLDS
        elif _admission(self.config, gamma, m, h).verdict == 'rejects':
            verdict = HYPOTHESIS_VIOLATED
        else:
            verdict = FAILS
        row = rows.curvature_bounds_row(result.run_id, gamma, m, h, a, report, verdict)
        result.add('curvature_bounds', row, self.config.config_hash)

    def run_viscosity(self, gamma, result, seed):
        m, h = _dims(self.config, gamma)
        report = viscosity_test(gamma, m, h, self.config.trials, seed)
        row, witnesses = rows.viscosity_rows(result.run_id, gamma, m, h, seed, report)
        result.add('viscosity', row, self.config.config_hash)
        result.tables.setdefault('viscosity_witnesses', []).extend(witnesses)

    def run_abp(self, gamma, result, a):
        config = self.config
        m, h = _dims(config, gamma)
        grid = _grid(config, gamma)
        rho_box = _rho_box(config, gamma)
        viscosity = _admission(config, gamma, m, h)
        merged = contact_set(gamma, a, grid)
        general = config.abp_mode == 'general' or (config.abp_mode == 'auto' and m < gamma.n)
        if general:
            report = abp_general(
                gamma, m, h, a, grid, rho_box=rho_box, viscosity=viscosity,
                stratum_radius=config.stratum_radius, direction_resolution=config.direction_resolution,
            )
        else:
            report = abp_codim1(gamma, h, a, grid, rho_box=rho_box, viscosity=viscosity, contacts=merged)
        result.add('abp', rows.abp_row(result.run_id, report), config.config_hash)
        projection = projection_inequality_check(gamma, a, grid, rho_box=rho_box, contacts=merged)
        result.add('projection', rows.projection_row(result.run_id, projection), config.config_hash)
        savin = savin_ratio(gamma, a, grid, h=h, rho_box=rho_box, contacts=merged)
        result.add('savin', rows.savin_row(result.run_id, savin), config.config_hash)
        result.plots[('margin', None, f"{gamma.scene_id} a={a:.6g}")] = [(gamma.resolution, report.margin)]

    def run_measure_to_point(self, gamma, result, r):
        config = self.config
        _, h = _dims(config, gamma)
        gamma_b = calibrate_gamma(gamma.n, config.harnack.safety).gamma
        theta = calibrate_theta(gamma_b, r)
        alpha = theta + 1.0
        a = min(1.0 / alpha, admissible_opening(gamma_b))
        x0 = config.harnack.x0 if config.harnack.x0 is not None else (0.0,) * gamma.n
        report = measure_to_point(
            gamma, h, a, x0, r, alpha=alpha, theta=theta, gamma_b=gamma_b,
            rho_box=_rho_box(config, gamma), center_spacing=config.center_spacing,
        )
        result.add('measure_to_point', rows.measure_to_point_row(result.run_id, gamma.resolution, report), config.config_hash)

    def run_harnack(self, gamma, result):
        config = self.config
        _, h = _dims(config, gamma)
        params = config.harnack
        report = weak_harnack_check(
            gamma, h, params.alpha, params.k, params.mu,
            rho_box=_rho_box(config, gamma), center_spacing=config.center_spacing,
        )
        result.add('harnack', rows.harnack_row(result.run_id, gamma.resolution, report), config.config_hash)
        if report.levels:
            result.plots[('ladder', None, _scene_label(gamma))] = list(report.levels)


def run(config, scenes=None):
    """
    Executes the configured operations and collects every table in memory.

    :return: RunOutcome; call write_outputs to emit it.
    """
    scenes = build_scenes(config) if scenes is None else scenes
    tasks = plan(config, scenes)
    logger.info("run %s: %d scenes, %d tasks, %d threads", config.config_hash[:8], len(scenes), len(tasks), config.threads)
    results = ThreadManager(config.threads).map(TaskRunner(config, scenes), tasks)

    families = ['runs'] + [family for operation in config.operations for family in rows.OPERATION_TABLES[operation]]
    tables = {family: [] for family in families}
    dumps, plots = {}, {}
    for result in results:
        tables['runs'].extend(result.runs)
        for family, family_rows in result.tables.items():
            tables[family].extend(family_rows)
        dumps.update(result.dumps)
        for (kind, group, label), data in result.plots.items():
            series = plots.setdefault((kind, group), {})
            if kind == 'margin':
                series.setdefault(label, []).extend(data)
            else:
                series[label] = data
    return RunOutcome(config=config, tables=tables, dumps=dumps, plots=plots)


def write_outputs(outcome):
    """Writes every table, dump and (when enabled) plot below the output directory."""
    out_dir = outcome.config.out
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [emit_table(family_rows, family, out_dir) for family, family_rows in outcome.tables.items()]
    for (folder, name), frame in sorted(outcome.dumps.items()):
        (out_dir / folder).mkdir(exist_ok=True)
        path = out_dir / folder / name
        frame.to_csv(path, index=False, lineterminator='\n', encoding='utf-8', float_format=NumberConverter.FLOAT_FORMAT)
        paths.append(path)
    if outcome.config.svg:
        for (kind, group), series in sorted(outcome.plots.items(), key=lambda item: (item[0][0], item[0][1] or '')):
            name = f"{kind}-{group}.svg" if group else f"{kind}.svg"
            paths.append(emit_svg(series, kind, out_dir / name))
    outcome.paths = paths
    return paths
