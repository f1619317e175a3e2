import pandas as pd

from geoanalysis.utils.number_formatter import NumberConverter


def point_columns(dim):
    return [f"z{i + 1}" for i in range(dim)]


def dump_points(gamma, path):
    """One point per line, 12 significant digits, LF newlines."""
    frame = pd.DataFrame(gamma.points, columns=point_columns(gamma.ambient_dim))
    frame.to_csv(path, index=False, float_format=NumberConverter.FLOAT_FORMAT, lineterminator='\n', encoding='utf-8')
    return path
