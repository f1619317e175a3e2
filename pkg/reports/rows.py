"""
Column orders of every emitted table, and the row builders that fill them.

Tables are keyed by family name; each file is <family>.csv in the output
directory. Rows are plain dicts so the emitter can sort them canonically.
"""
import math

from geoanalysis.utils.number_formatter import NumberConverter

TABLES = {
    'runs': ['run_id', 'module', 'operation', 'scene', 'rho', 'config_hash', 'verdict'],
    'contact': [
        'run_id', 'scene', 'n', 'rho', 'a', 'centers', 'pairs', 'feet',
        'projection_measure', 'projection_err', 'boundary_touch', 'method', 'verdict',
    ],
    'monotonicity': ['run_id', 'scene', 'rho', 'a', 'a_larger', 'worst_gap', 'uncovered', 'verdict'],
    'curvature': [
        'run_id', 'scene', 'n', 'm', 'h', 'rho', 'r', 'step', 'seed', 'samples', 'skipped', 'violations',
        'worst_margin', 'sentinel_fraction', 'dimension_mismatch', 'varifold_residual', 'flags', 'verdict',
    ],
    'curvature_bounds': [
        'run_id', 'scene', 'm', 'h', 'rho', 'a', 'pairs', 'checked', 'skipped', 'lower_pass', 'upper_pass',
        'pass_fraction', 'worst_lower', 'worst_upper', 'verdict',
    ],
    'viscosity': [
        'run_id', 'scene', 'n', 'm', 'h', 'rho', 'seed', 'trials', 'admissible', 'skipped', 'passed',
        'pass_rate', 'worst_margin', 'verdict',
    ],
    'viscosity_witnesses': ['run_id', 'scene', 'witness', 'base', 'gradient', 'trace', 'bound', 'margin'],
    'abp': [
        'run_id', 'scene', 'n', 'm', 'h', 'a', 'rho', 'lhs', 'lhs_err', 'gamma', 'factor1', 'factor2',
        'measure_term', 'measure_err', 'rhs', 'margin', 'flags', 'verdict',
    ],
    'projection': ['run_id', 'scene', 'a', 'rho', 'feet_measure', 'projection_measure', 'ratio', 'factor', 'verdict'],
    'savin': ['run_id', 'scene', 'a', 'rho', 'ratio', 'ratio_err', 'reference', 'contained', 'verdict'],
    'measure_to_point': [
        'run_id', 'scene', 'n', 'rho', 'h', 'a', 'r', 'x0', 'gamma_b', 'theta', 'alpha', 'slide_t',
        'slide_bound', 'localized', 'min_slack', 'beta', 'beta_err', 'hypothesis', 'verdict',
    ],
    'harnack': [
        'run_id', 'scene', 'rho', 'alpha', 'k', 'mu', 'eps', 'levels', 'residual', 'beta1', 'flags', 'verdict',
    ],
}

# Families each operation writes, in emission order.
OPERATION_TABLES = {
    'contact': ('contact', 'monotonicity'),
    'curvature': ('curvature', 'curvature_bounds'),
    'viscosity': ('viscosity', 'viscosity_witnesses'),
    'abp': ('abp', 'projection', 'savin'),
    'harnack': ('measure_to_point', 'harnack'),
}

MODULES = {
    'contact': 'paraboloid-engine',
    'monotonicity': 'paraboloid-engine',
    'curvature': 'normal-bundle',
    'curvature_bounds': 'normal-bundle',
    'viscosity': 'normal-bundle',
    'abp': 'abp-verifier',
    'projection': 'abp-verifier',
    'savin': 'abp-verifier',
    'measure_to_point': 'harnack-lab',
    'harnack': 'harnack-lab',
}


def flags_text(flags):
    return '|'.join(flags)


def result_row(run_id, family, scene, rho, config_hash, verdict):
    return {
        'run_id': run_id,
        'module': MODULES[family],
        'operation': family,
        'scene': scene,
        'rho': rho,
        'config_hash': config_hash,
        'verdict': verdict,
    }


def contact_row(run_id, gamma, contacts, projection):
    verdict = 'reported' if not contacts.is_empty else 'empty'
    return {
        'run_id': run_id, 'scene': gamma.scene_id, 'n': gamma.n, 'rho': gamma.resolution,
        'a': contacts.opening, 'centers': len(contacts.grid), 'pairs': len(contacts),
        'feet': len(contacts.feet()), 'projection_measure': projection.value,
        'projection_err': projection.error_bound, 'boundary_touch': contacts.boundary_touch,
        'method': contacts.method, 'verdict': verdict,
    }


def monotonicity_row(run_id, gamma, a, a_larger, holds, worst_gap, uncovered):
    return {
        'run_id': run_id, 'scene': gamma.scene_id, 'rho': gamma.resolution, 'a': a, 'a_larger': a_larger,
        'worst_gap': worst_gap, 'uncovered': uncovered, 'verdict': 'holds' if holds else 'fails',
    }


def curvature_row(run_id, gamma, m, h, r, step, seed, report, skipped, flags, verdict):
    return {
        'run_id': run_id, 'scene': gamma.scene_id, 'n': gamma.n, 'm': m, 'h': h, 'rho': gamma.resolution,
        'r': r, 'step': step, 'seed': seed, 'samples': report.count, 'skipped': skipped,
        'violations': report.violations, 'worst_margin': report.worst_margin,
        'sentinel_fraction': report.sentinel_fraction, 'dimension_mismatch': report.dimension_mismatch,
        'varifold_residual': report.varifold_residual, 'flags': flags_text(flags), 'verdict': verdict,
    }


def curvature_bounds_row(run_id, gamma, m, h, a, report, verdict):
    return {
        'run_id': run_id, 'scene': gamma.scene_id, 'm': m, 'h': h, 'rho': gamma.resolution, 'a': a,
        'pairs': report.pairs, 'checked': report.checked, 'skipped': report.skipped,
        'lower_pass': report.lower_pass, 'upper_pass': report.upper_pass,
        'pass_fraction': report.pass_fraction, 'worst_lower': report.worst_lower,
        'worst_upper': report.worst_upper, 'verdict': verdict,
    }


def viscosity_rows(run_id, gamma, m, h, seed, report):
    row = {
        'run_id': run_id, 'scene': gamma.scene_id, 'n': gamma.n, 'm': m, 'h': h, 'rho': gamma.resolution,
        'seed': seed, 'trials': report.trials, 'admissible': report.admissible, 'skipped': report.skipped,
        'passed': report.passed, 'pass_rate': report.pass_rate, 'worst_margin': report.worst_margin,
        'verdict': report.verdict,
    }
    witnesses = [
        {
            'run_id': run_id, 'scene': gamma.scene_id, 'witness': i,
            'base': NumberConverter.joined(w.base), 'gradient': NumberConverter.joined(w.gradient),
            'trace': w.trace, 'bound': w.bound, 'margin': w.margin,
        }
        for i, w in enumerate(report.witnesses)
    ]
    return row, witnesses


def abp_row(run_id, report):
    return {
        'run_id': run_id, 'scene': report.scene, 'n': report.n, 'm': report.m, 'h': report.h,
        'a': report.a, 'rho': report.rho, 'lhs': report.lhs.value, 'lhs_err': report.lhs.error_bound,
        'gamma': report.gamma, 'factor1': report.factor1, 'factor2': report.factor2,
        'measure_term': report.measure.value, 'measure_err': report.measure.error_bound,
        'rhs': report.rhs, 'margin': report.margin, 'flags': flags_text(report.flags),
        'verdict': report.verdict,
    }


def projection_row(run_id, report):
    return {
        'run_id': run_id, 'scene': report.scene, 'a': report.a, 'rho': report.rho,
        'feet_measure': report.feet.value, 'projection_measure': report.projection.value,
        'ratio': report.ratio, 'factor': report.factor, 'verdict': report.verdict,
    }


def savin_row(run_id, report):
    return {
        'run_id': run_id, 'scene': report.scene, 'a': report.a, 'rho': report.rho, 'ratio': report.ratio,
        'ratio_err': report.ratio_err, 'reference': report.reference, 'contained': report.contained,
        'verdict': report.verdict,
    }


def measure_to_point_row(run_id, rho, report):
    return {
        'run_id': run_id, 'scene': report.scene, 'n': report.n, 'rho': rho, 'h': report.h, 'a': report.a,
        'r': report.r, 'x0': NumberConverter.joined(report.x0), 'gamma_b': report.gamma_b,
        'theta': report.theta, 'alpha': report.alpha, 'slide_t': report.slide_t,
        'slide_bound': report.slide_bound, 'localized': report.localized, 'min_slack': report.min_slack,
        'beta': report.beta, 'beta_err': report.beta_err, 'hypothesis': report.hypothesis,
        'verdict': report.verdict,
    }


def harnack_row(run_id, rho, report):
    return {
        'run_id': run_id, 'scene': report.scene, 'rho': rho, 'alpha': report.alpha, 'k': report.k,
        'mu': report.mu, 'eps': report.eps, 'levels': NumberConverter.joined(report.levels),
        'residual': report.residual, 'beta1': report.beta1,
        'flags': flags_text(report.flags + ([report.hypothesis] if report.hypothesis else [])),
        'verdict': report.verdict,
    }


def render(value):
    """Cell text of one value; floats use 12 significant digits, booleans are lower case."""
    if value is None:
        return ''
    if isinstance(value, float) and math.isnan(value):
        return 'nan'
    if isinstance(value, (bool, int, float)):
        return NumberConverter.fixed(value)
    return str(value)
