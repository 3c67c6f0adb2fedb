"""Shared fixtures: seeded generators and small state factories."""

import numpy as np
import pytest

from src.linalg import sample_haar_unitary, sample_random_density


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def random_state(rng):
    """Factory for Ginibre-induced states; full-rank by default."""
    def make(dim=4, full_rank=True):
        return sample_random_density(dim, rng, require_full_rank=full_rank, floor=1e-6)
    return make


@pytest.fixture
def rotated_diagonal(rng):
    """Factory for V·diag(p)·V† with a Haar-random V."""
    def make(probs):
        probs = np.asarray(probs, dtype=float)
        v = sample_haar_unitary(len(probs), rng)
        return (v * probs) @ v.conj().T
    return make


@pytest.fixture
def bell_state():
    """|Φ⁺⟩⟨Φ⁺| on two qubits."""
    phi = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)
    return np.outer(phi, phi.conj())
