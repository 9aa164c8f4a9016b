"""Counter-based standard-normal streams.

Each stream is keyed by ``(seed, stream)`` and produced by the Philox-4x64
bit generator; raw 64-bit words become uniforms on the open interval (0, 1)
from their top 53 bits (offset by half an ulp) and normals via the inverse
normal CDF.  Columns of a sample matrix use ``stream = column index`` so
draws do not depend on how many columns are requested or in which order
they are computed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

GENERATOR = "philox4x64+ndtri/v1"
_MASK64 = (1 << 64) - 1


def uniform_stream(seed: int, stream: int, size: int) -> np.ndarray:
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    raw = np.random.Philox(key=key).random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normal(seed: int, stream: int, size: int) -> np.ndarray:
    """``size`` standard normals from stream ``stream`` of ``seed``."""
    return ndtri(uniform_stream(seed, stream, size))


def standard_normal_matrix(seed: int, n: int, n_samples: int) -> np.ndarray:
    """(n, n_samples) array; column c is ``standard_normal(seed, c, n)``."""
    out = np.empty((n, n_samples))
    for c in range(n_samples):
        out[:, c] = standard_normal(seed, c, n)
    return out
