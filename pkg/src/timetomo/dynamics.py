"""Single-qubit unitary evolution driving the rotating measurement frame.

The evolution is a three-axis rotation Z(beta) Y(gamma) Z(delta) whose angles
grow linearly in time, each with its own period.  Time is dimensionless
throughout the package: one unit equals the base period of the middle (Y)
rotation, and the default periods are (4, 1, 2) in those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import require_finite


@dataclass(frozen=True)
class DynamicsParams:
    """Rotation periods of the three-axis evolution, in base-period units."""

    period_1: float = 4.0
    period_2: float = 1.0
    period_3: float = 2.0

    def __post_init__(self):
        for name in ("period_1", "period_2", "period_3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def angular_frequencies(self) -> tuple[float, float, float]:
        return (
            2.0 * math.pi / self.period_1,
            2.0 * math.pi / self.period_2,
            2.0 * math.pi / self.period_3,
        )


def general_unitary(alpha: float, beta: float, gamma: float, delta: float) -> np.ndarray:
    """2x2 unitary e^{i alpha} Z(beta) Y(gamma) Z(delta).

    Z(x) = diag(e^{-ix/2}, e^{ix/2}) and Y(x) is the real rotation by x/2.
    Any 2x2 unitary can be written this way.
    """
    angles = np.array([alpha, beta, gamma, delta], dtype=float)
    require_finite(angles, "angles")
    zb = np.exp(-0.5j * beta)
    zd = np.exp(-0.5j * delta)
    c = np.cos(0.5 * gamma)
    s = np.sin(0.5 * gamma)
    u = np.array(
        [
            [zb * c * zd, -zb * s * np.conj(zd)],
            [np.conj(zb) * s * zd, np.conj(zb) * c * np.conj(zd)],
        ]
    )
    return np.exp(1j * alpha) * u


def evolution_unitaries(params: DynamicsParams, times) -> np.ndarray:
    """Evolution unitaries at many instants at once.

    Returns an array of shape ``times.shape + (2, 2)``.  Negative times are
    legitimate inputs: the jitter convolution integrates through them.
    """
    times = np.asarray(times, dtype=float)
    require_finite(times, "times")
    w1, w2, w3 = params.angular_frequencies
    z1 = np.exp(-0.5j * w1 * times)
    z3 = np.exp(-0.5j * w3 * times)
    c = np.cos(0.5 * w2 * times)
    s = np.sin(0.5 * w2 * times)
    u = np.empty(times.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = z1 * c * z3
    u[..., 0, 1] = -z1 * s * np.conj(z3)
    u[..., 1, 0] = np.conj(z1) * s * z3
    u[..., 1, 1] = np.conj(z1) * c * np.conj(z3)
    return u


def evolution_unitary(params: DynamicsParams, t: float) -> np.ndarray:
    """Evolution unitary at a single instant (alpha = 0 in general_unitary)."""
    return evolution_unitaries(params, float(t))
