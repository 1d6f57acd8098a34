"""Fixed-step fourth-order Runge-Kutta kernel for linear generators.

The integrators here advance ``dy/dt = A @ y`` for a constant sparse
generator ``A``. Intervals are split into an integer number of equal steps
no longer than the requested ``dt`` so that sample times are hit exactly.
"""

import math
from collections.abc import Callable

import numpy as np
import scipy.sparse as sp

from quditsim.core.exceptions import InvalidInputError


def check_step(dt: float, duration: float) -> None:
    if not dt > 0:
        raise InvalidInputError(f"Time step must be positive, got dt={dt}")
    if duration < 0:
        raise InvalidInputError(f"Duration must be non-negative, got {duration}")
    if duration > 0 and dt > duration:
        raise InvalidInputError(f"Time step dt={dt} exceeds segment duration {duration}")


def split_interval(span: float, dt: float) -> tuple[int, float]:
    """Number of steps and the shortened step that exactly cover ``span``."""
    if span <= 0:
        return 0, 0.0
    n = max(1, math.ceil(span / dt - 1e-9))
    return n, span / n


def rk4_step(generator: sp.csr_matrix, y: np.ndarray, h: float) -> np.ndarray:
    k1 = generator @ y
    k2 = generator @ (y + 0.5 * h * k1)
    k3 = generator @ (y + 0.5 * h * k2)
    k4 = generator @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_linear(
    generator: sp.csr_matrix,
    y0: np.ndarray,
    sample_times: np.ndarray,
    dt: float,
    after_step: Callable[[np.ndarray], np.ndarray] | None = None,
    on_sample: Callable[[int, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Integrate from t=0 through every sample time; returns the final vector.

    ``sample_times`` must be sorted, start at or after zero and end at the
    segment duration. ``after_step`` may project the vector back onto the
    physical manifold (renormalise, symmetrise); ``on_sample`` receives each
    sample index with the current vector.
    """
    y = np.array(y0, dtype=complex)
    t = 0.0
    for k, t_sample in enumerate(sample_times):
        n, h = split_interval(float(t_sample) - t, dt)
        for _ in range(n):
            y = rk4_step(generator, y, h)
            if after_step is not None:
                y = after_step(y)
        t = float(t_sample)
        if on_sample is not None:
            on_sample(k, y)
    return y
