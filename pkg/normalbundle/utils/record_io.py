import pandas as pd

from geoanalysis.utils.number_formatter import NumberConverter


def record_columns(dim):
    return (
        [f"z{i + 1}" for i in range(dim)]
        + [f"eta{i + 1}" for i in range(dim)]
        + ['r', 'tangent_dim', 'kappas', 'finite_trace']
    )


def record_frame(records, dim):
    """Curvature records as text cells; kappas are ';'-joined with 'inf' for the sentinel."""
    rows = [
        [NumberConverter.fixed(float(v)) for v in record.sample.z]
        + [NumberConverter.fixed(float(v)) for v in record.sample.eta]
        + [
            NumberConverter.fixed(record.sample.r),
            str(record.tangent_dim),
            NumberConverter.joined(record.kappas),
            NumberConverter.fixed(record.finite_trace),
        ]
        for record in records
    ]
    return pd.DataFrame(rows, columns=record_columns(dim))
