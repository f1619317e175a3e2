import numpy as np
import pandas as pd


def contact_columns(n):
    dim = n + 1
    return (
        [f"z{i + 1}" for i in range(dim)]
        + [f"eta{i + 1}" for i in range(dim)]
        + [f"x{i + 1}" for i in range(n)]
        + ['a']
    )


def contact_frame(contacts):
    n = contacts.grid.n
    if contacts.is_empty:
        return pd.DataFrame(columns=contact_columns(n))
    data = np.concatenate(
        [contacts.z, contacts.eta, contacts.centers, np.full((len(contacts), 1), contacts.opening)], axis=1
    )
    frame = pd.DataFrame(data, columns=contact_columns(n))
    # canonical order: lexicographic by center, then by foot
    keys = [f"x{i + 1}" for i in range(n)] + [f"z{i + 1}" for i in range(n + 1)]
    return frame.sort_values(keys, kind='mergesort').reset_index(drop=True)
