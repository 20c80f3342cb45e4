"""Canonical JSON helpers shared by the file formats.

Every artifact (gate sets, designs, estimates, reports) is written through
:func:`dumps` so that identical payloads produce identical bytes: sorted keys,
fixed separators, two-space indent, trailing newline, floats via Python repr
(shortest round-trip).  Infinities are mapped to null on save and back on load
where a field supports them.
"""

import json
from pathlib import Path


def dumps(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def save(path, payload) -> None:
    Path(path).write_text(dumps(payload))


def load(path):
    return json.loads(Path(path).read_text())


def complex_matrix_to_json(m) -> list:
    """3x3 complex matrix -> nested [re, im] pairs (row-major)."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def complex_matrix_from_json(rows):
    import numpy as np

    return np.array([[complex(re, im) for re, im in row] for row in rows])


def real_matrix_to_json(m) -> list:
    """Real matrix -> row-major flat list of floats."""
    import numpy as np

    return [float(x) for x in np.asarray(m, dtype=float).ravel()]


def real_matrix_from_json(flat, shape):
    import numpy as np

    return np.array(flat, dtype=float).reshape(shape)
