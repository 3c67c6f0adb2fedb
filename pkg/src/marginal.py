"""Two-qubit quantum marginal constraints and admissible spectrum samplers.

A joint spectrum λ₁ ≥ λ₂ ≥ λ₃ ≥ λ₄ of a two-qubit state is compatible with
margins whose minimal eigenvalues are λ_A, λ_B iff

    (i)   min(λ_A, λ_B) ≥ λ₃ + λ₄
    (ii)  λ_A + λ_B     ≥ λ₂ + λ₃ + 2λ₄
    (iii) |λ_A − λ_B|   ≤ min(λ₁ − λ₃, λ₂ − λ₄)
"""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .entropy import Spectrum
from .errors import DomainError, SamplingError
from .linalg import ComplexMatrix, Subsystem, eig_hermitian, partial_trace

logger = logging.getLogger(__name__)

FULL_RANK_FLOOR = 1e-6
DEFAULT_MAX_TRIES = 10**6
# Below this width the admissible region is treated as a curve or a point.
DEGENERATE_WIDTH = 1e-9
PROPOSAL_BATCH = 64


@dataclass(frozen=True)
class QubitMarginTriple:
    """Joint spectrum of a two-qubit state plus both margins' minimal eigenvalues."""
    joint: Spectrum
    margin_a: float
    margin_b: float

    def __post_init__(self):
        if self.joint.dim != 4:
            raise DomainError(f"two-qubit joint spectrum needs 4 entries, got {self.joint.dim}")
        for name, value in (("margin_a", self.margin_a), ("margin_b", self.margin_b)):
            if not (-1e-12 <= value <= 0.5 + 1e-12):
                raise DomainError(f"{name} must lie in [0, 1/2], got {value!r}")

    @property
    def lambdas(self) -> np.ndarray:
        """Joint spectrum sorted non-increasing."""
        return self.joint.sorted_desc()

    def margin_desc(self, subsystem: Subsystem) -> np.ndarray:
        """[1 − λ_X, λ_X]."""
        x = self.margin_a if subsystem is Subsystem.A else self.margin_b
        return np.array([1.0 - x, x])

    def margin_asc(self, subsystem: Subsystem) -> np.ndarray:
        """[λ_X, 1 − λ_X]."""
        return self.margin_desc(subsystem)[::-1]

    def to_list(self) -> list:
        """Flat digest: sorted joint then (λ_A, λ_B)."""
        return [float(x) for x in self.lambdas] + [float(self.margin_a), float(self.margin_b)]

    @classmethod
    def from_list(cls, values) -> "QubitMarginTriple":
        values = [float(v) for v in values]
        return cls(joint=Spectrum(tuple(values[:4])), margin_a=values[4], margin_b=values[5])

    def to_dict(self) -> Dict[str, list]:
        return {"joint": [float(x) for x in self.lambdas], "margins": [self.margin_a, self.margin_b]}


@dataclass(frozen=True)
class BravyiCheck:
    """Outcome of the three-inequality test.

    Residuals: ``r1 = min(λ_A, λ_B) − (λ₃+λ₄)`` and
    ``r2 = λ_A+λ_B − (λ₂+λ₃+2λ₄)`` must be ≥ −slack;
    ``r3 = |λ_A−λ_B| − min(λ₁−λ₃, λ₂−λ₄)`` must be ≤ slack.
    """
    admissible: bool
    residuals: Tuple[float, float, float]
    slack: float = 0.0

    @property
    def violated(self) -> Tuple[int, ...]:
        """1-based indices of the failing inequalities."""
        r1, r2, r3 = self.residuals
        flags = (r1 >= -self.slack, r2 >= -self.slack, r3 <= self.slack)
        return tuple(i + 1 for i, ok in enumerate(flags) if not ok)


def _residuals(lam: np.ndarray, la: float, lb: float) -> Tuple[float, float, float]:
    l1, l2, l3, l4 = lam
    r1 = min(la, lb) - (l3 + l4)
    r2 = (la + lb) - (l2 + l3 + 2.0 * l4)
    r3 = abs(la - lb) - min(l1 - l3, l2 - l4)
    return float(r1), float(r2), float(r3)


def bravyi_admissible(t: QubitMarginTriple, slack: float = 0.0) -> BravyiCheck:
    """Test the two-qubit marginal inequalities with tolerance ``slack``."""
    r1, r2, r3 = _residuals(t.lambdas, t.margin_a, t.margin_b)
    ok = r1 >= -slack and r2 >= -slack and r3 <= slack
    return BravyiCheck(admissible=ok, residuals=(r1, r2, r3), slack=slack)


def sample_joint_spectrum(
    rng: np.random.Generator,
    require_full_rank: bool = False,
    floor: float = FULL_RANK_FLOOR,
) -> Spectrum:
    """Uniform point on the 3-simplex, sorted non-increasing.

    Normalised standard-exponential draws; with ``require_full_rank`` the draw
    is repeated until the smallest entry exceeds ``floor``.
    """
    while True:
        e = rng.standard_exponential(4)
        lam = np.sort(e / e.sum())[::-1]
        if not require_full_rank or lam[-1] > floor:
            return Spectrum(tuple(lam))


def sample_admissible_margins(
    joint: Spectrum,
    rng: np.random.Generator,
    max_tries: int = DEFAULT_MAX_TRIES,
) -> Tuple[float, float]:
    """Uniform draw of (λ_A, λ_B) from the admissible region by rejection.

    Proposals are uniform on a superset of the region (the box
    [λ₃+λ₄, ½]² from inequality (i), or the band |λ_A−λ_B| ≤ w from
    inequality (iii) when that is thinner), so accepted points are uniform on
    the region. A region thinner than ``DEGENERATE_WIDTH`` collapses to a
    point or to the diagonal and is accepted within that width.

    Raises:
        SamplingError: ``max_tries`` proposals were all rejected.
    """
    lam = joint.sorted_desc()
    l1, l2, l3, l4 = lam
    lo = min(l3 + l4, 0.5)
    side = 0.5 - lo
    band = max(min(l1 - l3, l2 - l4), 0.0)
    check_slack = 0.0

    if side <= DEGENERATE_WIDTH or band <= DEGENERATE_WIDTH:
        check_slack = DEGENERATE_WIDTH

    tries = 0
    while tries < max_tries:
        n = min(PROPOSAL_BATCH, max_tries - tries)
        tries += n
        if side <= DEGENERATE_WIDTH:
            la = np.full(n, 0.5)
            lb = np.full(n, 0.5)
        elif band <= DEGENERATE_WIDTH:
            la = rng.uniform(lo, 0.5, n)
            lb = la.copy()
        elif 2.0 * band < side:
            la = rng.uniform(lo, 0.5, n)
            lb = la + rng.uniform(-band, band, n)
        else:
            la = rng.uniform(lo, 0.5, n)
            lb = rng.uniform(lo, 0.5, n)

        for a, b in zip(la, lb):
            if not (0.0 <= b <= 0.5):
                continue
            r1, r2, r3 = _residuals(lam, float(a), float(b))
            if r1 >= -check_slack and r2 >= -check_slack and r3 <= check_slack:
                return float(a), float(b)

    raise SamplingError(
        f"no admissible margins after {max_tries} proposals for joint {lam.tolist()}",
        joint=lam,
    )


def sample_triple(
    rng: np.random.Generator,
    require_full_rank: bool = False,
    floor: float = FULL_RANK_FLOOR,
    max_tries: int = DEFAULT_MAX_TRIES,
    max_resamples: int = 100,
) -> Tuple[QubitMarginTriple, int]:
    """Joint spectrum plus admissible margins; resamples the joint on failure.

    Returns the triple and the number of discarded joint spectra.
    """
    for attempt in range(max_resamples):
        joint = sample_joint_spectrum(rng, require_full_rank=require_full_rank, floor=floor)
        try:
            la, lb = sample_admissible_margins(joint, rng, max_tries=max_tries)
        except SamplingError as e:
            logger.warning("margin sampling failed (%s); resampling joint spectrum", e)
            continue
        return QubitMarginTriple(joint=joint, margin_a=la, margin_b=lb), attempt
    raise SamplingError(f"gave up after {max_resamples} joint spectra", joint=[])


def margins_of_state(rho_ab: ComplexMatrix, slack: float = 1e-10) -> QubitMarginTriple:
    """Spectrum triple of a realised two-qubit state."""
    joint = Spectrum.of(rho_ab)
    rho_a = partial_trace(rho_ab, 2, 2, keep=Subsystem.A)
    rho_b = partial_trace(rho_ab, 2, 2, keep=Subsystem.B)
    la = float(np.clip(eig_hermitian(rho_a).eigenvalues[-1], 0.0, 0.5))
    lb = float(np.clip(eig_hermitian(rho_b).eigenvalues[-1], 0.0, 0.5))
    triple = QubitMarginTriple(joint=joint, margin_a=la, margin_b=lb)
    check = bravyi_admissible(triple, slack=slack)
    if not check.admissible:
        logger.warning(
            "realised state fails marginal inequalities %s: residuals %s", check.violated, check.residuals,
        )
    return triple
