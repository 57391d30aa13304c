"""Deterministic low-discrepancy point sets shared by the audits."""
from __future__ import annotations

import numpy as np
from scipy.stats import qmc


def sobol(d: int, n: int, seed: int = 0) -> np.ndarray:
    """First ``n`` points of a scrambled Sobol sequence in ``[0, 1)^d``, shape ``(n, d)``.

    Draws the next power of two and truncates, which keeps scipy's balance
    warning quiet without changing the prefix.
    """
    if n <= 0:
        return np.empty((0, d))
    k = int(np.ceil(np.log2(n)))
    return qmc.Sobol(d=d, scramble=True, seed=seed).random_base2(k)[:n]


def corners(d: int, hi=1.0) -> np.ndarray:
    """All ``2^d`` vertices of ``[0, hi]^d``, shape ``(2^d, d)``."""
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,))
    grid = np.array(np.meshgrid(*[[0.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
    return grid * hi
