"""State constructors, Cholesky-style parametrization, sample grids."""

import math

import numpy as np
import pytest

from timetomo.core import max_abs
from timetomo.states import (
    BellParams,
    BlochParams,
    bell_state,
    bloch_state,
    cholesky_factor,
    cholesky_to_density,
    orthogonal_pairs,
    orthogonal_partner,
    sample_bell_states,
    sample_mixed_qubits,
    sample_pure_qubits,
)

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1j], [1j, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def test_bloch_params_validation():
    BlochParams(0.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        BlochParams(1.1, 1.0, 2.0)
    with pytest.raises(ValueError):
        BlochParams(0.5, -0.1, 2.0)
    with pytest.raises(ValueError):
        BlochParams(0.5, 1.0, 2.0 * math.pi)


def test_bell_params_validation():
    BellParams(0.0)
    with pytest.raises(ValueError):
        BellParams(-0.1)
    with pytest.raises(ValueError):
        BellParams(2.0 * math.pi)


def test_bloch_state_reproduces_its_coordinates():
    rng = np.random.default_rng(7)
    for _ in range(50):
        r = rng.uniform(0.0, 1.0)
        theta = rng.uniform(0.0, math.pi)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        rho = bloch_state(BlochParams(r, theta, phi)).matrix
        vec = np.array(
            [
                r * math.sin(theta) * math.cos(phi),
                r * math.sin(theta) * math.sin(phi),
                r * math.cos(theta),
            ]
        )
        recovered = np.array([np.trace(rho @ PAULI[a]).real for a in "xyz"])
        assert np.abs(recovered - vec).max() < 1e-14


def test_bloch_state_purity_tracks_radius():
    assert bloch_state(BlochParams(0.0, 0.0, 0.0)).purity() == pytest.approx(0.5)
    assert bloch_state(BlochParams(1.0, 1.2, 3.4)).purity() == pytest.approx(1.0)
    assert bloch_state(BlochParams(0.6, 1.2, 3.4)).purity() == pytest.approx(
        0.5 * (1.0 + 0.36)
    )


def test_bell_state_structure():
    rho = bell_state(BellParams(math.pi / 3)).matrix
    assert rho.shape == (4, 4)
    assert rho[0, 0] == pytest.approx(0.5)
    assert rho[3, 3] == pytest.approx(0.5)
    assert rho[0, 3] == pytest.approx(0.5 * np.exp(-1j * math.pi / 3))
    assert np.trace(rho @ rho).real == pytest.approx(1.0)
    # middle block untouched
    assert max_abs(rho[1:3, :]) == 0.0


def test_cholesky_factor_layout():
    w = cholesky_factor([1.0, 2.0, 3.0, 4.0])
    expect = np.array([[1.0, 0.0], [3.0 + 4.0j, 2.0]])
    assert max_abs(w - expect) == 0.0
    with pytest.raises(ValueError):
        cholesky_factor([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        cholesky_factor(np.zeros(4))
    with pytest.raises(ValueError):
        cholesky_factor([1.0, np.inf, 0.0, 0.0])


def test_cholesky_density_is_physical_for_random_vectors():
    rng = np.random.default_rng(11)
    for size in (4, 16):
        for _ in range(25):
            rho = cholesky_to_density(rng.normal(size=size)).matrix
            assert np.trace(rho).real == pytest.approx(1.0)
            assert max_abs(rho - rho.conj().T) < 1e-14
            assert np.linalg.eigvalsh(rho).min() > -1e-14


def test_cholesky_roundtrip_hits_target_state():
    # the factor of a known state maps back to that state
    rho = bloch_state(BlochParams(0.8, 1.1, 0.7)).matrix
    # W^dag W with W lower triangular: flip, factor, flip back
    flip = np.eye(2)[::-1]
    chol = np.linalg.cholesky(flip @ rho @ flip)
    factor = flip @ chol.conj().T @ flip
    w = np.array([factor[0, 0].real, factor[1, 1].real, factor[1, 0].real, factor[1, 0].imag])
    assert max_abs(cholesky_to_density(w).matrix - rho) < 1e-14


def test_pair_parametrization_spans_entangled_states():
    target = bell_state(BellParams(0.0)).matrix
    flip = np.eye(4)[::-1]
    # mix in a sliver of identity so the factorization is well posed
    safe = 0.999999 * target + (1e-6 / 4.0) * np.eye(4)
    chol = np.linalg.cholesky(flip @ safe @ flip)
    factor = flip @ chol.conj().T @ flip
    w = np.zeros(16)
    w[[0, 1, 2, 3]] = np.diag(factor).real
    w[4], w[5] = factor[1, 0].real, factor[1, 0].imag
    w[6], w[7] = factor[2, 1].real, factor[2, 1].imag
    w[8], w[9] = factor[3, 2].real, factor[3, 2].imag
    w[10], w[11] = factor[2, 0].real, factor[2, 0].imag
    w[12], w[13] = factor[3, 1].real, factor[3, 1].imag
    w[14], w[15] = factor[3, 0].real, factor[3, 0].imag
    assert max_abs(cholesky_to_density(w).matrix - target) < 1e-5


def test_mixed_grid_size_and_coverage():
    grid = sample_mixed_qubits(3, 3, 4)
    assert len(grid) == 36
    assert {b.r for b in grid} == {0.0, 0.5, 1.0}
    default = sample_mixed_qubits()
    assert len(default) == 21 * 21 * 20


def test_pure_grid_and_validation():
    grid = sample_pure_qubits(5, 4)
    assert len(grid) == 20
    assert all(b.r == 1.0 for b in grid)
    with pytest.raises(ValueError):
        sample_mixed_qubits(0, 3, 4)


def test_orthogonal_partner_is_antipodal():
    b = BlochParams(1.0, 0.7, 1.3)
    mate = orthogonal_partner(b)
    overlap = bloch_state(b).matrix @ bloch_state(mate).matrix
    assert max_abs(overlap) < 1e-14


def test_orthogonal_pairs_cover_grid_once():
    pairs = orthogonal_pairs(5, 4)
    assert len(pairs) == 10
    seen = set()
    for a, b in pairs:
        overlap = bloch_state(a).matrix @ bloch_state(b).matrix
        assert max_abs(overlap) < 1e-12
        seen.add((round(a.theta, 12), round(a.phi, 12)))
        seen.add((round(b.theta, 12), round(b.phi, 12)))
    assert len(seen) == 20
    with pytest.raises(ValueError):
        orthogonal_pairs(5, 3)


def test_bell_sample_is_even_phase_grid():
    sample = sample_bell_states(8)
    assert [b.alpha for b in sample] == pytest.approx(
        [2.0 * math.pi * k / 8 for k in range(8)]
    )
    with pytest.raises(ValueError):
        sample_bell_states(0)
