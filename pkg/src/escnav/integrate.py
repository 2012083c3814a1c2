"""Fixed-step classical Runge-Kutta stepping for small state vectors.

Deterministic by construction: no adaptivity, no error control.  State is a
plain numpy array so the same core serves the coupled controller loop and
the reference flows.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["rk4_step"]


def rk4_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    y: np.ndarray,
    h: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance y by one RK4 step of size h; returns (y_next, k1).

    k1 = f(t, y) is handed back so callers can log the instantaneous
    derivative without a redundant evaluation.
    """
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y_next, k1
