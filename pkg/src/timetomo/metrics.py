"""State-comparison metrics and their sweep-level aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, hermitian_eigensystem, psd_sqrt

# Pauli sigma_y tensored with itself; fixed matrix used by the concurrence.
_SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)

CHSH_THRESHOLD = 1.0 / math.sqrt(2.0)


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2, clipped to [0, 1]."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    root = psd_sqrt(a.matrix)
    inner = root @ b.matrix @ root
    values, _ = hermitian_eigensystem(inner)
    total = np.sqrt(np.clip(values, 0.0, None)).sum()
    return float(np.clip(total * total, 0.0, 1.0))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the sum of absolute eigenvalues of (a - b)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    values, _ = hermitian_eigensystem(a.matrix - b.matrix)
    return float(0.5 * np.abs(values).sum())


def concurrence(rho: DensityMatrix) -> float:
    """Two-qubit concurrence via the spin-flipped spectrum.

    C = max(0, l1 - l2 - l3 - l4) with l_i the decreasing square roots of
    the eigenvalues of rho (sy x sy) rho* (sy x sy).
    """
    if rho.dim != 4:
        raise ValueError("concurrence is defined for two-qubit states")
    m = rho.matrix
    product = m @ _SPIN_FLIP @ m.conj() @ _SPIN_FLIP
    # The product is similar to a PSD matrix, so its spectrum is real and
    # nonnegative up to rounding; |.| guards the square roots.
    values = np.sort(np.abs(np.linalg.eigvals(product)))[::-1]
    roots = np.sqrt(values)
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


@dataclass(frozen=True)
class MetricsSummary:
    """Mean and sample standard deviation of one metric over a state sample."""

    mean: float
    sd: float
    n: int
    metric_name: str

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("summary needs at least one value")

    @property
    def stderr(self) -> float:
        return self.sd / math.sqrt(self.n)


def aggregate(values, metric_name: str = "metric") -> MetricsSummary:
    """Summarise metric values: mean plus (n-1)-normalised standard deviation."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty value list")
    if not np.all(np.isfinite(arr)):
        raise ValueError("metric values contain non-finite entries")
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return MetricsSummary(mean=float(np.mean(arr)), sd=sd, n=int(arr.size), metric_name=metric_name)


def chsh_guarantee(summary: MetricsSummary) -> bool:
    """Whether the whole three-sigma band clears the CHSH-violation bound.

    True when mean - 3 sd > 1/sqrt(2), i.e. effectively every state in the
    batch retains enough entanglement to violate the inequality.
    """
    return bool(summary.mean - 3.0 * summary.sd > CHSH_THRESHOLD)
