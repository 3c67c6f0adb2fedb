"""Classical and quantum entropy functionals, all in bits.

Conventions:
- x·log₂x := 0 at x = 0.
- A support violation (mass where the reference has none) gives ``math.inf``,
  which stays distinguishable from any large finite value.
- Values in [−1e-10, 0) that come from cancellation are clamped to 0 and
  counted in an optional :class:`EntropyDiagnostics` tally.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import entr, rel_entr

from .errors import DomainError
from .linalg import ComplexMatrix, eig_hermitian

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
SUM_TOL = 1e-10
NEGATIVE_CLAMP = 1e-12
ROUNDOFF_SLACK = 1e-10
DEFAULT_SUPPORT_TOL = 1e-12


@dataclass
class EntropyDiagnostics:
    """Running tally of numerical clean-ups."""
    clamped_negatives: int = 0
    support_violations: int = 0


@dataclass(frozen=True)
class Spectrum:
    """A probability vector, stored in the given order, with sorted views."""
    probs: tuple = field()

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError(f"spectrum must be a non-empty vector, got shape {p.shape}")
        if np.any(p < -NEGATIVE_CLAMP):
            raise DomainError(f"spectrum has negative entries: {p.tolist()}")
        total = float(p.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise DomainError(f"spectrum must sum to 1 within {SUM_TOL}, sums to {total!r}")
        p = np.where(p < 0.0, 0.0, p)
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    @classmethod
    def from_eigenvalues(cls, values: Sequence[float]) -> "Spectrum":
        """Spectrum of a density matrix; tiny negative round-off is clipped."""
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        return cls(tuple(v / v.sum()))

    @classmethod
    def of(cls, rho: ComplexMatrix) -> "Spectrum":
        return cls.from_eigenvalues(eig_hermitian(rho).eigenvalues)

    @property
    def dim(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def sorted_desc(self) -> np.ndarray:
        return np.sort(self.as_array())[::-1]

    def sorted_asc(self) -> np.ndarray:
        return np.sort(self.as_array())


def _as_probs(p) -> np.ndarray:
    return p.as_array() if isinstance(p, Spectrum) else np.asarray(p, dtype=float)


def _clamp(value: float, diagnostics: Optional[EntropyDiagnostics]) -> float:
    if -ROUNDOFF_SLACK <= value < 0.0:
        if diagnostics is not None:
            diagnostics.clamped_negatives += 1
        return 0.0
    return value


def shannon_entropy(p) -> float:
    """H(p) = −Σ p_i log₂ p_i in bits."""
    return float(np.sum(entr(_as_probs(p))) / LN2)


def relative_entropy_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise H(p‖q) in bits for stacked vectors of shape (..., d).

    Rows with a support violation come back as ``inf``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"relative entropy needs equal shapes, got {p.shape} and {q.shape}")
    return np.sum(rel_entr(p, q), axis=-1) / LN2


def relative_entropy_classical(
    p,
    q,
    diagnostics: Optional[EntropyDiagnostics] = None,
) -> float:
    """H(p‖q) = Σ p_i (log₂ p_i − log₂ q_i); ``inf`` if p_i > 0 where q_i = 0."""
    pa, qa = _as_probs(p), _as_probs(q)
    if pa.shape != qa.shape:
        raise DomainError(f"relative entropy needs equal dimensions, got {pa.size} and {qa.size}")
    value = float(relative_entropy_rows(pa, qa))
    if math.isinf(value):
        if diagnostics is not None:
            diagnostics.support_violations += 1
        return math.inf
    return _clamp(value, diagnostics)


def von_neumann_entropy(rho: ComplexMatrix) -> float:
    """S(ρ) = H(λ(ρ))."""
    return shannon_entropy(Spectrum.of(rho))


def relative_entropy_quantum(
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
    support_tol: float = DEFAULT_SUPPORT_TOL,
    diagnostics: Optional[EntropyDiagnostics] = None,
) -> float:
    """S(ρ‖σ) = Tr ρ(log₂ρ − log₂σ), or ``inf`` when supp ρ ⊄ supp σ.

    Computed in the two eigenbases: with ρ = Σ r_i |r_i⟩⟨r_i| and
    σ = Σ s_j |s_j⟩⟨s_j|, S = Σ r_i log₂ r_i − Σ_ij r_i |⟨r_i|s_j⟩|² log₂ s_j.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DomainError(f"states must share a dimension, got {rho.shape} and {sigma.shape}")

    er = eig_hermitian(rho)
    es = eig_hermitian(sigma)
    r = np.clip(er.eigenvalues, 0.0, None)
    s = es.eigenvalues

    overlap = np.abs(er.eigenvectors.conj().T @ es.eigenvectors) ** 2
    kernel = s <= support_tol
    occupied = r > support_tol
    # squared overlap of each occupied ρ eigenvector with the whole kernel of σ
    if np.any(kernel) and np.any(overlap[occupied][:, kernel].sum(axis=1) > support_tol):
        logger.debug("support of rho is not contained in support of sigma")
        if diagnostics is not None:
            diagnostics.support_violations += 1
        return math.inf

    support = ~kernel
    log_s = np.log2(s[support])
    cross = overlap[:, support] @ log_s
    value = float(-np.sum(entr(r)) / LN2 - np.dot(r, cross))
    return _clamp(value, diagnostics)
