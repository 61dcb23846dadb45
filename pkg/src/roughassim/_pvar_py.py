"""Pure-numpy fallback for the p-variation dynamic program.

Same contract as the compiled kernel in ``_pvar_cy.pyx``: given node values
of shape (n_nodes, d), return the maximum over all grid dissections of the
sum of |increment|^p (the p-th power is NOT undone here).
"""

import numpy as np


def pvar_max_sum(values: np.ndarray, p: float) -> float:
    values = np.ascontiguousarray(values, dtype=float)
    n = values.shape[0]
    if n < 2:
        return 0.0
    best = np.zeros(n)
    for j in range(1, n):
        dist = np.linalg.norm(values[:j] - values[j], axis=1)
        best[j] = np.max(best[:j] + dist**p)
    return float(best[n - 1])
