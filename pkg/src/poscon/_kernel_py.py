"""Pure-Python (numpy) RK4 stepping kernel.

Fallback for the compiled extension; same contract, same math, vectorized
per step through BLAS matvecs. See ``poscon.kernel`` for backend selection.
"""

from __future__ import annotations

import numpy as np


def rk4_span(drift, input_mat, dist_half, state0, step, guard, out):
    """Advance ``z' = M z + E d(t)`` with classical RK4 over a uniform grid.

    Parameters
    ----------
    drift : (n, n) ndarray
        Constant drift matrix M for this span.
    input_mat : (n, q) ndarray
        Disturbance input matrix E.
    dist_half : (2*steps + 1, q) ndarray
        Disturbance samples on the half-step grid ``t0 + j*step/2``.
    state0 : (n,) ndarray
        State at the start of the span.
    step : float
        Step size h.
    guard : float
        Divergence guard; any state entry with ``|z| > guard`` (or NaN)
        aborts the span.
    out : (steps + 1, n) ndarray
        Filled with the state at every grid point, ``out[0] = state0``.

    Returns
    -------
    int
        -1 on success, otherwise the index of the first sample that
        tripped the guard (samples beyond it are unspecified).
    """
    n_steps = out.shape[0] - 1
    z = np.array(state0, dtype=float)
    out[0] = z
    h = float(step)
    for k in range(n_steps):
        d0 = dist_half[2 * k]
        dh = dist_half[2 * k + 1]
        d1 = dist_half[2 * k + 2]
        k1 = drift @ z + input_mat @ d0
        k2 = drift @ (z + (0.5 * h) * k1) + input_mat @ dh
        k3 = drift @ (z + (0.5 * h) * k2) + input_mat @ dh
        k4 = drift @ (z + h * k3) + input_mat @ d1
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = z
        if not np.all(np.abs(z) <= guard):
            return k + 1
    return -1
