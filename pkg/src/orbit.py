"""Extremes of S(UρU†‖σ) over the unitary orbit of ρ.

For invertible σ the orbit values fill exactly the interval
[H(λ↓(ρ)‖λ↓(σ)), H(λ↓(ρ)‖λ↑(σ))]; the ends are reached when UρU† commutes
with σ and the two spectra are paired in the same (minimum) or opposite
(maximum) order.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np

from .entropy import Spectrum, relative_entropy_classical, relative_entropy_quantum, shannon_entropy
from .errors import DomainError, InvariantViolation
from .linalg import ComplexMatrix, dagger, eig_hermitian, matrix_log2, sample_haar_unitaries

logger = logging.getLogger(__name__)

INTERVAL_SLACK = 1e-9
HAAR_BATCH = 1024


@dataclass(frozen=True)
class OrbitExtremes:
    min_value: float
    max_value: float

    @property
    def width(self) -> float:
        return self.max_value - self.min_value


def orbit_extremes(rho_spec: Spectrum, sigma_spec: Spectrum) -> OrbitExtremes:
    """Analytic min and max of the orbit relative entropy.

    Raises:
        DomainError: dimensions differ or σ has a zero eigenvalue.
    """
    if rho_spec.dim != sigma_spec.dim:
        raise DomainError(f"spectra differ in dimension: {rho_spec.dim} vs {sigma_spec.dim}")
    if np.any(sigma_spec.as_array() <= 0.0):
        raise DomainError("sigma must be invertible (strictly positive spectrum)")
    r = rho_spec.sorted_desc()
    lo = relative_entropy_classical(r, sigma_spec.sorted_desc())
    hi = relative_entropy_classical(r, sigma_spec.sorted_asc())
    if lo > hi + 1e-12:
        raise InvariantViolation(
            f"rearrangement bound broken: min {lo!r} > max {hi!r}",
            digest={"rho": list(rho_spec.probs), "sigma": list(sigma_spec.probs)},
        )
    return OrbitExtremes(min_value=lo, max_value=max(lo, hi))


def aligned_unitaries(rho: ComplexMatrix, sigma: ComplexMatrix) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """(U_min, U_max) with U = W·P·V†.

    V diagonalises ρ and W diagonalises σ, both non-increasing; P is the
    identity for the minimum and the order-reversing permutation for the
    maximum. Ties in σ's spectrum keep index order.
    """
    v = eig_hermitian(rho).eigenvectors
    w = eig_hermitian(sigma).eigenvectors
    reverse = np.eye(v.shape[0])[::-1]
    return w @ dagger(v), w @ reverse @ dagger(v)


class OrbitObjective:
    """f(U) = S(UρU†‖σ) = −S(ρ) − Tr(UρU† log₂σ) with σ fixed and invertible."""

    def __init__(self, rho: ComplexMatrix, sigma: ComplexMatrix):
        rho = np.asarray(rho, dtype=complex)
        sigma = np.asarray(sigma, dtype=complex)
        if rho.shape != sigma.shape:
            raise DomainError(f"states must share a dimension, got {rho.shape} and {sigma.shape}")
        self.rho = rho
        self.sigma = sigma
        self.log_sigma = matrix_log2(sigma)
        self.neg_entropy = -shannon_entropy(Spectrum.of(rho))

    def __call__(self, u: ComplexMatrix) -> float:
        moved = u @ self.rho @ dagger(u)
        return float(self.neg_entropy - np.real(np.trace(moved @ self.log_sigma)))

    def batch(self, us: np.ndarray) -> np.ndarray:
        """Objective for a stack of unitaries, shape (n, d, d) -> (n,)."""
        moved = us @ self.rho @ dagger(us)
        cross = np.real(np.einsum("nij,ji->n", moved, self.log_sigma))
        return self.neg_entropy - cross


@dataclass
class IntervalReport:
    """Outcome of sampling the orbit against the analytic interval."""
    dim: int
    n_samples: int
    min_value: float
    max_value: float
    observed_min: float
    observed_max: float
    violations: int
    aligned_min: float
    aligned_max: float
    attained: bool

    @property
    def coverage(self) -> float:
        width = self.max_value - self.min_value
        if width <= 0.0:
            return 1.0
        return (self.observed_max - self.observed_min) / width

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["coverage"] = self.coverage
        return data


def verify_orbit_interval(
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
    n_samples: int,
    rng: np.random.Generator,
    slack: float = INTERVAL_SLACK,
) -> IntervalReport:
    """Sample Haar unitaries and check every orbit value lies in the interval.

    Also evaluates the two aligned unitaries, which must hit the interval's
    ends within ``slack``.
    """
    objective = OrbitObjective(rho, sigma)
    extremes = orbit_extremes(Spectrum.of(rho), Spectrum.of(sigma))
    dim = objective.rho.shape[0]

    observed_min, observed_max = np.inf, -np.inf
    violations = 0
    remaining = n_samples
    while remaining > 0:
        n = min(HAAR_BATCH, remaining)
        remaining -= n
        values = objective.batch(sample_haar_unitaries(dim, n, rng))
        observed_min = min(observed_min, float(values.min()))
        observed_max = max(observed_max, float(values.max()))
        outside = (values < extremes.min_value - slack) | (values > extremes.max_value + slack)
        violations += int(np.count_nonzero(outside))

    u_min, u_max = aligned_unitaries(rho, sigma)
    aligned_min = relative_entropy_quantum(u_min @ rho @ dagger(u_min), sigma)
    aligned_max = relative_entropy_quantum(u_max @ rho @ dagger(u_max), sigma)
    attained = (
        abs(aligned_min - extremes.min_value) <= slack
        and abs(aligned_max - extremes.max_value) <= slack
    )
    if violations or not attained:
        logger.warning(
            "orbit check failed: %d values outside [%.12g, %.12g], aligned (%.12g, %.12g)",
            violations, extremes.min_value, extremes.max_value, aligned_min, aligned_max,
        )

    return IntervalReport(
        dim=dim,
        n_samples=n_samples,
        min_value=extremes.min_value,
        max_value=extremes.max_value,
        observed_min=observed_min,
        observed_max=observed_max,
        violations=violations,
        aligned_min=aligned_min,
        aligned_max=aligned_max,
        attained=attained,
    )
