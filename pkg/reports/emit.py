"""
Deterministic table and SVG emission.

Tables: comma separated, header row, 12 significant digits, LF newlines,
UTF-8. SVGs: Agg backend, fixed hash salt and no creation date, so that
identical inputs give identical bytes.
"""
import logging

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from django.conf import settings  # noqa: E402

from reports.rows import TABLES, render  # noqa: E402

logger = logging.getLogger(__name__)

SVG_KINDS = ('contacts', 'ladder', 'margin')


def table_frame(rows, family):
    """Rows rendered to text in the family's column order, sorted by run id."""
    columns = TABLES[family]
    frame = pd.DataFrame([[render(row.get(column)) for column in columns] for row in rows], columns=columns)
    if len(frame):
        frame = frame.sort_values('run_id', kind='mergesort').reset_index(drop=True)
    return frame


def emit_table(rows, family, out_dir):
    """Writes <family>.csv; an empty row set gives a header-only file."""
    path = out_dir / f"{family}.csv"
    table_frame(rows, family).to_csv(path, index=False, lineterminator='\n', encoding='utf-8')
    logger.debug("wrote %s (%d rows)", path, len(rows))
    return path


def _figure():
    plt.rcParams['svg.hashsalt'] = settings.SVG_HASH_SALT
    plt.rcParams['svg.fonttype'] = 'none'
    return plt.subplots(figsize=(6, 6))


def _contacts_plot(ax, series):
    """series: {label: (k, n) array of A' points}."""
    for label, points in series.items():
        points = np.atleast_2d(points)
        if points.size == 0:
            continue
        if points.shape[1] == 1:
            ax.scatter(points[:, 0], np.zeros(len(points)), s=2, label=label)
        else:
            ax.scatter(points[:, 0], points[:, 1], s=2, label=label)
    angles = np.linspace(0.0, 2.0 * np.pi, 361)
    ax.plot(np.cos(angles), np.sin(angles), color='black', linewidth=0.5)
    ax.set_aspect('equal')
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_title("A'_a over B(0,1)")


def _ladder_plot(ax, series):
    """series: {label: sequence of F_j measures}."""
    for label, levels in series.items():
        ax.plot(range(len(levels)), levels, marker='o', label=label)
    ax.set_xlabel('level j')
    ax.set_ylabel('measure of F_j')
    ax.set_title('weak Harnack ladder')


def _margin_plot(ax, series):
    """series: {label: [(rho, margin), ...]}."""
    for label, points in series.items():
        points = sorted(points)
        ax.plot([p[0] for p in points], [p[1] for p in points], marker='o', label=label)
    ax.set_xscale('log', base=2)
    ax.set_xlabel('resolution rho')
    ax.set_ylabel('rhs - lhs')
    ax.set_title('ABP margin against resolution')


PLOTTERS = {
    'contacts': _contacts_plot,
    'ladder': _ladder_plot,
    'margin': _margin_plot,
}


def emit_svg(series, kind, path):
    """
    Writes one diagnostic plot.

    :param series: Ordered mapping from legend label to the kind's data.
    :param kind: One of 'contacts', 'ladder', 'margin'.
    """
    if kind not in PLOTTERS:
        raise ValueError(f"unknown plot kind '{kind}' (expected one of {', '.join(SVG_KINDS)})")
    fig, ax = _figure()
    try:
        PLOTTERS[kind](ax, series)
        if series:
            ax.legend(loc='best', fontsize='small')
        fig.savefig(path, format='svg', metadata={'Date': None})
    finally:
        plt.close(fig)
    logger.debug("wrote %s", path)
    return path
