"""Input-state constructors and the deterministic sample grids.

Single qubits are parametrised by Bloch coordinates (r, theta, phi), photon
pairs by the relative phase of a maximally entangled superposition, and
reconstruction candidates by a real Cholesky-style vector that maps onto a
physical density matrix for any parameter values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BlochParams:
    """Bloch-ball coordinates: radius r, polar theta, azimuth phi."""

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.r <= 1.0):
            raise ValueError(f"r must lie in [0, 1], got {self.r}")
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not (0.0 <= self.phi < TWO_PI):
            raise ValueError(f"phi must lie in [0, 2 pi), got {self.phi}")


@dataclass(frozen=True)
class BellParams:
    """Relative phase of the entangled superposition (|00> + e^{i alpha}|11>)/sqrt(2)."""

    alpha: float

    def __post_init__(self):
        if not (0.0 <= self.alpha < TWO_PI):
            raise ValueError(f"alpha must lie in [0, 2 pi), got {self.alpha}")


def bloch_state(b: BlochParams) -> DensityMatrix:
    """Density matrix with Bloch vector r (sin t cos p, sin t sin p, cos t)."""
    rz = b.r * math.cos(b.theta)
    cross = b.r * (math.sin(b.theta) * math.cos(b.phi) - 1j * math.sin(b.theta) * math.sin(b.phi))
    mat = 0.5 * np.array([[1.0 + rz, cross], [np.conj(cross), 1.0 - rz]])
    return DensityMatrix(mat)


def bell_state(b: BellParams) -> DensityMatrix:
    """Projector onto (|00> + e^{i alpha} |11>)/sqrt(2)."""
    ket = np.zeros(4, dtype=complex)
    ket[0] = 1.0 / math.sqrt(2.0)
    ket[3] = np.exp(1j * b.alpha) / math.sqrt(2.0)
    return DensityMatrix(np.outer(ket, ket.conj()))


# Lower-triangular fill order of the Cholesky-style factor.  Diagonal slots
# come first (real), then each off-diagonal entry consumes a (real, imag)
# pair of parameters.  Keyed by parameter-vector length.
_W_LAYOUT = {
    4: {
        "rows": np.array([0, 1, 1]),
        "cols": np.array([0, 1, 0]),
        "re": np.array([0, 1, 2]),
        "im": np.array([0, 0, 3]),
        "mask": np.array([0.0, 0.0, 1.0]),
    },
    16: {
        "rows": np.array([0, 1, 2, 3, 1, 2, 3, 2, 3, 3]),
        "cols": np.array([0, 1, 2, 3, 0, 1, 2, 0, 1, 0]),
        "re": np.array([0, 1, 2, 3, 4, 6, 8, 10, 12, 14]),
        "im": np.array([0, 0, 0, 0, 5, 7, 9, 11, 13, 15]),
        "mask": np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
    },
}


def cholesky_factor(w) -> np.ndarray:
    """Lower-triangular factor of the candidate state, from a real vector.

    Accepts length-4 (qubit) or length-16 (pair) vectors.  The first ``d``
    entries fill the diagonal; the rest fill the lower triangle column by
    column as (real, imaginary) pairs.
    """
    w = np.asarray(w, dtype=float)
    if w.shape not in ((4,), (16,)):
        raise ValueError(f"parameter vector must have length 4 or 16, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("parameter vector contains non-finite entries")
    if not np.any(w):
        raise ValueError("parameter vector must not be all zero")
    layout = _W_LAYOUT[w.size]
    dim = 2 if w.size == 4 else 4
    mat = np.zeros((dim, dim), dtype=complex)
    mat[layout["rows"], layout["cols"]] = w[layout["re"]] + 1j * (w[layout["im"]] * layout["mask"])
    return mat


def cholesky_to_density(w) -> DensityMatrix:
    """Map a real parameter vector to the density matrix W^dag W / tr(W^dag W).

    Physical (Hermitian, PSD, unit trace) by construction for every
    nonzero parameter vector.
    """
    factor = cholesky_factor(w)
    gram = factor.conj().T @ factor
    return DensityMatrix(gram / gram.trace().real)


def _polar_grid(n: int, stop: float) -> np.ndarray:
    if n < 1:
        raise ValueError("grid size must be at least 1")
    return np.linspace(0.0, stop, n) if n > 1 else np.array([0.0])


def _azimuth_grid(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("grid size must be at least 1")
    return TWO_PI * np.arange(n) / n


def sample_mixed_qubits(n_r: int = 21, n_theta: int = 21, n_phi: int = 20) -> list[BlochParams]:
    """Deterministic Bloch-ball grid: r and theta inclusive, phi periodic.

    The default grid has 8820 points.
    """
    return [
        BlochParams(float(r), float(theta), float(phi))
        for r in _polar_grid(n_r, 1.0)
        for theta in _polar_grid(n_theta, math.pi)
        for phi in _azimuth_grid(n_phi)
    ]


def sample_pure_qubits(n_theta: int = 21, n_phi: int = 20) -> list[BlochParams]:
    """Bloch-sphere surface grid (r = 1); 420 points at the default sizes."""
    return [
        BlochParams(1.0, float(theta), float(phi))
        for theta in _polar_grid(n_theta, math.pi)
        for phi in _azimuth_grid(n_phi)
    ]


def orthogonal_partner(b: BlochParams) -> BlochParams:
    """Antipodal pure state, orthogonal to the pure state at (theta, phi)."""
    return BlochParams(1.0, math.pi - b.theta, (b.phi + math.pi) % TWO_PI)


def orthogonal_pairs(n_theta: int = 21, n_phi: int = 20) -> list[tuple[BlochParams, BlochParams]]:
    """Pair up the pure-state grid into antipodal (orthogonal) couples.

    Requires even ``n_phi`` so every antipode lands back on the grid.
    The default grid gives 210 pairs.
    """
    if n_phi % 2 != 0:
        raise ValueError("n_phi must be even so antipodes stay on the grid")
    thetas = _polar_grid(n_theta, math.pi)
    phis = _azimuth_grid(n_phi)
    half = n_phi // 2
    pairs = []
    for j, theta in enumerate(thetas):
        j_mate = n_theta - 1 - j
        if j > j_mate:
            continue
        for k, phi in enumerate(phis):
            k_mate = (k + half) % n_phi
            if j == j_mate and k >= half:
                continue
            first = BlochParams(1.0, float(theta), float(phi))
            second = BlochParams(1.0, float(thetas[j_mate]), float(phis[k_mate]))
            pairs.append((first, second))
    return pairs


def sample_bell_states(n: int = 200) -> list[BellParams]:
    """Evenly spaced entangled-phase sample alpha = 2 pi k / n."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    return [BellParams(TWO_PI * k / n) for k in range(n)]
