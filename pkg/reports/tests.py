from io import StringIO
from pathlib import Path
import tempfile
from unittest import mock

import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from geoanalysis.exceptions.exceptions import ConfigurationError
from reports.config import parse_run_config
from reports.emit import emit_svg, emit_table
from reports.rows import TABLES, result_row
from reports.runner import RunOutcome, build_scenes, plan, run, write_outputs

PLANE_1D = """
[run]
operation = {operation}
openings = {openings}
trials = 40
samples = 60
threads = {threads}
svg = {svg}
out = {out}

[scene:plane]
generator = plane
n = 1
resolution = 1/128
"""

CORNER = """
[run]
operation = viscosity
m = 1
h = 0
trials = 200
seeds = 3
out = {out}

[scene:corner]
generator = graph-of-function
kind = abs
slope = 1
n = 1
resolution = 1/256
"""


def plane_config(out, operation='abp', openings='1', threads=1, svg='false'):
    return PLANE_1D.format(operation=operation, openings=openings, threads=threads, svg=svg, out=out)


class WorkspaceTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, text, name='suite.ini'):
        path = self.root / name
        path.write_text(text, encoding='utf-8')
        return path

    def call(self, command, config, **options):
        out = StringIO()
        call_command(command, config=str(config), stdout=out, **options)
        return out.getvalue()


class RunConfigTest(SimpleTestCase):
    def test_defaults_and_fractions(self):
        config = parse_run_config(plane_config('out', openings='1/2, 1'))
        self.assertEqual(config.operation, 'abp')
        self.assertEqual(config.openings, (0.5, 1.0))
        self.assertEqual(config.radii, (0.25,))
        self.assertEqual(config.scenes[0].resolution, 1 / 128)
        self.assertEqual(len(config.config_hash), 64)

    def test_missing_run_section_runs_everything(self):
        config = parse_run_config("[scene:plane]\ngenerator = plane\nn = 1\nresolution = 0.1\n")
        self.assertEqual(config.operation, 'all')
        self.assertEqual(len(config.operations), 5)

    def test_unknown_operation_reports_position(self):
        text = "[scene:p]\ngenerator = plane\nn = 1\nresolution = 0.1\n[run]\noperation = sweep\n"
        with self.assertRaises(ConfigurationError) as ctx:
            parse_run_config(text)
        self.assertEqual(ctx.exception.line, 6)
        self.assertEqual(ctx.exception.column, 13)

    def test_resolutions_must_decrease(self):
        text = "[scene:p]\ngenerator = plane\nn = 1\nresolution = 0.1\n[run]\nresolutions = 1/64, 1/32\n"
        with self.assertRaises(ConfigurationError):
            parse_run_config(text)

    def test_unknown_scene_selection(self):
        text = "[scene:p]\ngenerator = plane\nn = 1\nresolution = 0.1\n[run]\nscenes = p, q\n"
        with self.assertRaises(ConfigurationError):
            parse_run_config(text)

    def test_no_scenes(self):
        with self.assertRaises(ConfigurationError):
            parse_run_config("[run]\noperation = abp\n")

    def test_flags_override_the_file(self):
        config = parse_run_config(plane_config('out')).with_overrides(threads=3, seeds=(5,), svg=None)
        self.assertEqual(config.threads, 3)
        self.assertEqual(config.seed_list, (5,))
        self.assertFalse(config.svg)


class PlanTest(SimpleTestCase):
    def test_run_ids_follow_the_enumeration(self):
        config = parse_run_config(plane_config('out', operation='contact', openings='1, 1/2'))
        tasks = plan(config, build_scenes(config))
        self.assertEqual([t.kind for t in tasks], ['contact', 'contact', 'monotonicity'])
        self.assertEqual([t.run_id for t in tasks], [f"{config.config_hash[:8]}-{i:04d}" for i in (1, 2, 3)])
        self.assertEqual(tasks[2].params, {'a': 0.5, 'a_larger': 1.0})

    def test_refinement_builds_one_scene_per_resolution(self):
        text = plane_config('out').replace('[run]', '[run]\nresolutions = 1/32, 1/64')
        config = parse_run_config(text)
        scenes = build_scenes(config)
        self.assertEqual([g.resolution for g in scenes], [1 / 32, 1 / 64])


class EmitTest(WorkspaceTestCase):
    def test_empty_rows_give_a_header_only_file(self):
        path = emit_table([], 'harnack', self.root)
        self.assertEqual(path.read_text(encoding='utf-8'), ','.join(TABLES['harnack']) + '\n')

    def test_abp_columns(self):
        expected = [
            'run_id', 'scene', 'n', 'm', 'h', 'a', 'rho', 'lhs', 'lhs_err', 'gamma', 'factor1', 'factor2',
            'measure_term', 'measure_err', 'rhs', 'margin', 'flags', 'verdict',
        ]
        path = emit_table([], 'abp', self.root)
        self.assertEqual(path.read_text(encoding='utf-8').strip().split(','), expected)

    def test_numbers_use_twelve_significant_digits(self):
        row = result_row('abcd1234-0001', 'abp', 'plane', 1 / 3, 'abcd', 'holds')
        path = emit_table([row], 'runs', self.root)
        lines = path.read_bytes().split(b'\n')
        self.assertEqual(lines[1], b'abcd1234-0001,abp-verifier,abp,plane,0.333333333333,abcd,holds')

    def test_svg_is_reproducible(self):
        series = {'plane': [0.1, 0.2, 0.3]}
        first = emit_svg(series, 'ladder', self.root / 'a.svg').read_bytes()
        second = emit_svg(series, 'ladder', self.root / 'b.svg').read_bytes()
        self.assertEqual(first, second)

    def test_unknown_plot_kind(self):
        with self.assertRaises(ValueError):
            emit_svg({}, 'histogram', self.root / 'x.svg')


class RunTest(WorkspaceTestCase):
    def test_plane_abp_holds(self):
        out = self.root / 'out'
        self.call('abp', self.write_config(plane_config(out)))
        frame = pd.read_csv(out / 'abp.csv')
        self.assertEqual(len(frame), 1)
        self.assertEqual(frame.loc[0, 'verdict'], 'holds')
        self.assertTrue((out / 'projection.csv').exists())
        self.assertTrue((out / 'runs.csv').exists())

    def test_corner_viscosity_reports_witnesses_without_failing(self):
        out = self.root / 'out'
        self.call('viscosity', self.write_config(CORNER.format(out=out)))
        frame = pd.read_csv(out / 'viscosity.csv')
        self.assertEqual(frame.loc[0, 'verdict'], 'rejects')
        self.assertGreater(len(pd.read_csv(out / 'viscosity_witnesses.csv')), 0)

    def test_malformed_config_exits_with_status_two(self):
        out = self.root / 'out'
        path = self.write_config(f"[run]\nout = {out}\nopenings = 1, x\n[scene:p]\ngenerator = plane\nn = 1\nresolution = 0.1\n")
        with self.assertRaises(CommandError) as ctx:
            self.call('report', path)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('line 3', str(ctx.exception))
        self.assertFalse(out.exists())

    def test_invalid_scene_exits_with_status_two(self):
        out = self.root / 'out'
        path = self.write_config(
            f"[run]\nout = {out}\n[scene:far]\ngenerator = point-union\nn = 2\npoints = 2, 0, 0\nresolution = 0.1\n"
        )
        with self.assertRaises(CommandError) as ctx:
            self.call('report', path)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertFalse(out.exists())

    def test_fails_verdict_exits_with_status_one(self):
        out = self.root / 'out'
        path = self.write_config(plane_config(out))
        config = parse_run_config(path.read_text(encoding='utf-8'))

        def failing_run(config, scenes):
            row = result_row(f"{config.config_hash[:8]}-0001", 'abp', 'plane', 1 / 128, config.config_hash, 'fails')
            return RunOutcome(config=config, tables={'runs': [row]}, dumps={}, plots={})

        with mock.patch('geoanalysis.utils.base_command.run', side_effect=failing_run):
            with self.assertRaises(CommandError) as ctx:
                self.call('abp', path)
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertTrue((out / 'runs.csv').exists())
        self.assertIn(config.config_hash[:8], (out / 'runs.csv').read_text(encoding='utf-8'))

    def test_scene_command_dumps_points(self):
        out = self.root / 'out'
        self.call('scene', self.write_config(plane_config(out)))
        frame = pd.read_csv(out / 'scenes' / 'plane-rho0.0078125.csv')
        self.assertEqual(list(frame.columns), ['z1', 'z2'])
        self.assertEqual(len(frame), 255)


class DeterminismTest(WorkspaceTestCase):
    def outputs(self, name, threads):
        text = plane_config('output', operation='all', openings='1/2, 1', svg='true')
        base = self.root / name
        config = parse_run_config(text).with_overrides(out=base, threads=threads)
        write_outputs(run(config))
        return {path.relative_to(base).as_posix(): path.read_bytes() for path in sorted(base.rglob('*')) if path.is_file()}

    def test_identical_runs_are_byte_identical(self):
        first = self.outputs('first', threads=1)
        second = self.outputs('second', threads=3)
        self.assertEqual(sorted(first), sorted(second))
        for name in first:
            self.assertEqual(first[name], second[name], name)
        self.assertIn('abp.csv', first)
        self.assertIn('harnack.csv', first)
        self.assertIn('ladder.svg', first)
