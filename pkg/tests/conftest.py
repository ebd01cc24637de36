"""Shared helpers: an independent finite-difference gradient checker."""

import numpy as np


def central_fd(fn, x, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.shape[0]):
        step = h * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (fn(xp) - fn(xm)) / (2.0 * step)
    return g


def fd_matches(fn, grad_fn, x, rtol: float = 1e-6) -> bool:
    """Check an analytic gradient against central differences."""
    g = np.asarray(grad_fn(x), dtype=float)
    fd = central_fd(fn, x)
    return float(np.linalg.norm(g - fd)) <= rtol * max(1.0, float(np.linalg.norm(g)))
