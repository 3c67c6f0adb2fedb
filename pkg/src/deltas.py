"""The Δ differences between joint and marginal relative-entropy bounds.

With λ-side spectra from ρ and μ-side spectra from σ, margins written as
[1 − x, x] (non-increasing) or [x, 1 − x] (non-decreasing):

    Δ_min = H(λ↓AB‖μ↓AB) − H(λ↓A‖μ↓A) − H(λ↓B‖μ↓B)
    Δ_max = H(λ↓AB‖μ↑AB) − H(λ↓A‖μ↑A) − H(λ↓B‖μ↑B)
    Δ_mix = H(λ↓AB‖μ↑AB) − H(λ↓A‖μ↑A) − H(λ↓B‖μ↓B)
    Δ     = H(λ↓AB‖μ↑AB) − H(λ↓A‖μ↓A) − H(λ↓B‖μ↓B)
    Δ̄     = H(λ↓AB‖μ↓AB) − H(λ↓A‖μ↑A) − H(λ↓B‖μ↑B)

Rearrangement gives Δ̄ ≤ Δ_min, Δ̄ ≤ Δ_max ≤ Δ_mix ≤ Δ, and for actual
states Δ̄ ≤ △S ≤ Δ with △S = S(ρ_AB‖σ_AB) − S(ρ_A‖σ_A) − S(ρ_B‖σ_B).
Δ ≥ 0 is exactly the statement that some global U_AB and local U_A, U_B
satisfy the modified superadditivity inequality for the pair.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .entropy import DEFAULT_SUPPORT_TOL, EntropyDiagnostics, relative_entropy_quantum, relative_entropy_rows
from .errors import DomainError, InvariantViolation
from .linalg import ComplexMatrix, Subsystem, partial_trace
from .marginal import QubitMarginTriple, margins_of_state

logger = logging.getLogger(__name__)

QUANTITIES = ("delta_min", "delta_max", "delta_mix", "delta", "delta_bar")
ORDERING_SLACK = 1e-10
SANDWICH_SLACK = 1e-9

# (smaller, larger) pairs that must hold for every report.
ORDERING_CHAIN = (
    ("delta_bar", "delta_min"),
    ("delta_bar", "delta_max"),
    ("delta_max", "delta_mix"),
    ("delta_mix", "delta"),
)


def _two_point(x: np.ndarray) -> np.ndarray:
    """Stack [1 − x, x] along a trailing axis."""
    return np.stack([1.0 - x, x], axis=-1)


@dataclass
class DeltaBatch:
    """Δ quantities for n spectral pairs as parallel arrays."""
    delta_min: np.ndarray
    delta_max: np.ndarray
    delta_mix: np.ndarray
    delta: np.ndarray
    delta_bar: np.ndarray

    def __len__(self) -> int:
        return len(self.delta)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def as_matrix(self) -> np.ndarray:
        """Shape (n, 5) in ``QUANTITIES`` order."""
        return np.column_stack([self.column(q) for q in QUANTITIES])

    def ordering_violations(self, slack: float = ORDERING_SLACK) -> np.ndarray:
        """Boolean mask of rows breaking the ordering chain."""
        bad = np.zeros(len(self), dtype=bool)
        for lower, upper in ORDERING_CHAIN:
            bad |= self.column(lower) > self.column(upper) + slack
        return bad


def compute_deltas_batch(
    lam: np.ndarray,
    lam_a: np.ndarray,
    lam_b: np.ndarray,
    mu: np.ndarray,
    mu_a: np.ndarray,
    mu_b: np.ndarray,
) -> DeltaBatch:
    """Vectorised Δ quantities.

    Args:
        lam, mu: (n, 4) joint spectra sorted non-increasing.
        lam_a, lam_b, mu_a, mu_b: (n,) minimal margin eigenvalues.

    Raises:
        DomainError: a μ-side entry is not strictly positive.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    mu_a = np.atleast_1d(np.asarray(mu_a, dtype=float))
    mu_b = np.atleast_1d(np.asarray(mu_b, dtype=float))
    if np.any(mu <= 0.0) or np.any(mu_a <= 0.0) or np.any(mu_b <= 0.0):
        raise DomainError("reference spectra must be strictly positive (full-rank sigma)")

    mu_up = mu[:, ::-1]
    joint_dd = relative_entropy_rows(lam, mu)
    joint_du = relative_entropy_rows(lam, mu_up)

    la, lb = _two_point(np.atleast_1d(lam_a)), _two_point(np.atleast_1d(lam_b))
    ma, mb = _two_point(mu_a), _two_point(mu_b)
    a_dd = relative_entropy_rows(la, ma)
    a_du = relative_entropy_rows(la, ma[:, ::-1])
    b_dd = relative_entropy_rows(lb, mb)
    b_du = relative_entropy_rows(lb, mb[:, ::-1])

    return DeltaBatch(
        delta_min=joint_dd - a_dd - b_dd,
        delta_max=joint_du - a_du - b_du,
        delta_mix=joint_du - a_du - b_dd,
        delta=joint_du - a_dd - b_dd,
        delta_bar=joint_dd - a_du - b_du,
    )


@dataclass
class DeltaReport:
    """Δ quantities for one (ρ, σ) instance together with its inputs."""
    delta_min: float
    delta_max: float
    delta_mix: float
    delta: float
    delta_bar: float
    rho_triple: QubitMarginTriple
    sigma_triple: QubitMarginTriple
    delta_s: Optional[float] = None

    def values(self) -> Dict[str, float]:
        return {q: getattr(self, q) for q in QUANTITIES}

    @property
    def modified_holds(self) -> bool:
        return self.delta >= -1e-12

    def ordering_violations(self, slack: float = ORDERING_SLACK) -> List[Tuple[str, str]]:
        return [
            (lower, upper)
            for lower, upper in ORDERING_CHAIN
            if getattr(self, lower) > getattr(self, upper) + slack
        ]

    def sandwich_holds(self, slack: float = SANDWICH_SLACK) -> bool:
        if self.delta_s is None or math.isinf(self.delta_s):
            return True
        return self.delta_bar - slack <= self.delta_s <= self.delta + slack

    def digest(self) -> Dict[str, Any]:
        return {"rho": self.rho_triple.to_list(), "sigma": self.sigma_triple.to_list()}

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.values())
        data["delta_s"] = self.delta_s
        data["inputs"] = self.digest()
        return data


def compute_deltas(
    rho_triple: QubitMarginTriple,
    sigma_triple: QubitMarginTriple,
    slack: float = ORDERING_SLACK,
) -> DeltaReport:
    """Δ quantities for one pair of spectrum triples.

    Raises:
        DomainError: σ-side spectrum has a zero entry.
        InvariantViolation: the ordering chain fails beyond ``slack``.
    """
    batch = compute_deltas_batch(
        rho_triple.lambdas[np.newaxis, :],
        np.array([rho_triple.margin_a]),
        np.array([rho_triple.margin_b]),
        sigma_triple.lambdas[np.newaxis, :],
        np.array([sigma_triple.margin_a]),
        np.array([sigma_triple.margin_b]),
    )
    report = DeltaReport(
        **{q: float(batch.column(q)[0]) for q in QUANTITIES},
        rho_triple=rho_triple,
        sigma_triple=sigma_triple,
    )
    broken = report.ordering_violations(slack)
    if broken:
        raise InvariantViolation(f"ordering chain broken: {broken}", digest=report.digest())
    return report


@dataclass
class GapTerms:
    """The three relative entropies entering △S."""
    joint: float
    margin_a: float
    margin_b: float
    support_violation: bool = False

    @property
    def value(self) -> float:
        if self.support_violation:
            return math.inf
        return self.joint - self.margin_a - self.margin_b


def gap_terms(
    rho_ab: ComplexMatrix,
    sigma_ab: ComplexMatrix,
    diagnostics: Optional[EntropyDiagnostics] = None,
    support_tol: float = DEFAULT_SUPPORT_TOL,
) -> GapTerms:
    rho_a = partial_trace(rho_ab, 2, 2, keep=Subsystem.A)
    rho_b = partial_trace(rho_ab, 2, 2, keep=Subsystem.B)
    sigma_a = partial_trace(sigma_ab, 2, 2, keep=Subsystem.A)
    sigma_b = partial_trace(sigma_ab, 2, 2, keep=Subsystem.B)
    kw = {"support_tol": support_tol, "diagnostics": diagnostics}
    terms = GapTerms(
        joint=relative_entropy_quantum(rho_ab, sigma_ab, **kw),
        margin_a=relative_entropy_quantum(rho_a, sigma_a, **kw),
        margin_b=relative_entropy_quantum(rho_b, sigma_b, **kw),
    )
    if any(math.isinf(t) for t in (terms.joint, terms.margin_a, terms.margin_b)):
        terms.support_violation = True
        logger.warning("support violation in superadditivity gap; reporting +inf")
    return terms


def delta_s(rho_ab: ComplexMatrix, sigma_ab: ComplexMatrix) -> float:
    """△S = S(ρ_AB‖σ_AB) − S(ρ_A‖σ_A) − S(ρ_B‖σ_B); ``inf`` on support violation."""
    return gap_terms(rho_ab, sigma_ab).value


def state_delta_report(
    rho_ab: ComplexMatrix,
    sigma_ab: ComplexMatrix,
    slack: float = SANDWICH_SLACK,
) -> DeltaReport:
    """Spectral Δ report of two states with △S attached.

    Raises:
        InvariantViolation: Δ̄ ≤ △S ≤ Δ fails beyond ``slack``.
    """
    report = compute_deltas(margins_of_state(rho_ab), margins_of_state(sigma_ab))
    report.delta_s = delta_s(rho_ab, sigma_ab)
    if not report.sandwich_holds(slack):
        raise InvariantViolation(
            f"sandwich broken: {report.delta_bar!r} <= {report.delta_s!r} <= {report.delta!r} fails",
            digest=report.digest(),
        )
    return report
