"""Riemannian gradient ascent/descent of S(UρU†‖σ) over unitary groups.

Along the curve exp(tK)U with K skew-Hermitian,

    d/dt f(exp(tK)U) |_{t=0} = Re Tr(K · M),   M = [log₂σ, UρU†],

so M (itself skew-Hermitian) is the Riemannian gradient. Ascent steps use
K = −M, descent steps K = M; the retraction is U ← exp(αK)·U. On the local
group U(2)⊗U(2) the tangent directions are K_A⊗I + I⊗K_B and the gradient
components are the traceless partial traces of M.
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import DomainError
from .linalg import (
    ComplexMatrix,
    Subsystem,
    commutator,
    dagger,
    expm_skew,
    identity,
    kron,
    matrix_log2,
    partial_trace,
    sample_haar_unitary,
    unitarity_defect,
)
from .orbit import OrbitObjective

logger = logging.getLogger(__name__)

STEP_FLOOR = 1e-12
MAX_STEP_GROWTH = 1e3


class Mode(Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"

    @property
    def sign(self) -> float:
        return 1.0 if self is Mode.MAXIMIZE else -1.0


class Manifold(Enum):
    FULL = "full"
    LOCAL_PRODUCT = "local-product"


class Objective(Enum):
    """What the local optimizer extremises."""
    RELATIVE_ENTROPY = "relative-entropy"   # S(U_A⊗U_B ρ U_A†⊗U_B† ‖ σ)
    SUPERADDITIVITY_GAP = "gap"             # joint term minus both margin terms


@dataclass(frozen=True)
class OptimizerConfig:
    mode: Mode = Mode.MAXIMIZE
    manifold: Manifold = Manifold.FULL
    step_size: float = 0.1
    max_iters: int = 2000
    grad_norm_tol: float = 1e-6
    fd_epsilon: float = 1e-5
    restarts: int = 20
    objective: Objective = Objective.RELATIVE_ENTROPY

    def __post_init__(self):
        for name in ("step_size", "grad_norm_tol", "fd_epsilon"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.restarts < 1:
            raise DomainError(f"restarts must be >= 1, got {self.restarts}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in ("mode", "manifold", "objective"):
            data[key] = data[key].value
        return data


@dataclass
class IterateRecord:
    iteration: int
    value: float
    grad_norm: float
    step: float


@dataclass
class OptimizerTrace:
    iterates: List[IterateRecord]
    final_unitary: ComplexMatrix
    converged: bool
    final_value: float
    max_unitarity_defect: float = 0.0
    factors: Optional[Tuple[ComplexMatrix, ComplexMatrix]] = None
    restart_values: List[float] = field(default_factory=list)

    @property
    def final_grad_norm(self) -> float:
        return self.iterates[-1].grad_norm if self.iterates else float("nan")


def riemannian_gradient(u: ComplexMatrix, rho: ComplexMatrix, sigma: ComplexMatrix) -> ComplexMatrix:
    """M = [log₂σ, UρU†].

    Raises:
        SingularityError: σ is not full-rank.
    """
    return _gradient(u, rho, matrix_log2(sigma))


def _gradient(u: ComplexMatrix, rho: ComplexMatrix, log_sigma: ComplexMatrix) -> ComplexMatrix:
    m = commutator(log_sigma, u @ rho @ dagger(u))
    return 0.5 * (m - dagger(m))


def directional_derivative(k: ComplexMatrix, gradient: ComplexMatrix) -> float:
    """Re Tr(K · M)."""
    return float(np.real(np.trace(k @ gradient)))


def finite_difference(
    u: ComplexMatrix,
    k: ComplexMatrix,
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
    config: Optional[OptimizerConfig] = None,
) -> float:
    """Central difference of f along exp(tK)U with step ``config.fd_epsilon``."""
    epsilon = (config or OptimizerConfig()).fd_epsilon
    f = _Problem(rho, sigma)
    plus = f.value(expm_skew(epsilon * k) @ u)
    minus = f.value(expm_skew(-epsilon * k) @ u)
    return (plus - minus) / (2.0 * epsilon)


class _Problem(OrbitObjective):
    """Orbit objective plus its Riemannian gradient."""

    def __init__(self, rho: ComplexMatrix, sigma: ComplexMatrix):
        super().__init__(rho, sigma)
        self.dim = self.rho.shape[0]

    def value(self, u: ComplexMatrix) -> float:
        return self(u)

    def gradient(self, u: ComplexMatrix) -> ComplexMatrix:
        return _gradient(u, self.rho, self.log_sigma)


class _LocalProblem:
    """f or the superadditivity gap as a function of (U_A, U_B)."""

    def __init__(self, rho_ab: ComplexMatrix, sigma_ab: ComplexMatrix, objective: Objective):
        self.joint = _Problem(rho_ab, sigma_ab)
        if self.joint.dim != 4:
            raise DomainError(f"local optimisation needs two-qubit states, got dimension {self.joint.dim}")
        self.objective = objective
        self.margins = tuple(
            _Problem(partial_trace(rho_ab, 2, 2, keep=s), partial_trace(sigma_ab, 2, 2, keep=s))
            for s in (Subsystem.A, Subsystem.B)
        )

    def margin_values(self, u_a: ComplexMatrix, u_b: ComplexMatrix) -> Tuple[float, float]:
        return self.margins[0].value(u_a), self.margins[1].value(u_b)

    def value(self, u_a: ComplexMatrix, u_b: ComplexMatrix) -> float:
        joint = self.joint.value(kron(u_a, u_b))
        if self.objective is Objective.RELATIVE_ENTROPY:
            return joint
        va, vb = self.margin_values(u_a, u_b)
        return joint - va - vb

    def gradient(self, u_a: ComplexMatrix, u_b: ComplexMatrix) -> Tuple[ComplexMatrix, ComplexMatrix]:
        m = self.joint.gradient(kron(u_a, u_b))
        parts = []
        for keep, u_x, margin in ((Subsystem.A, u_a, self.margins[0]), (Subsystem.B, u_b, self.margins[1])):
            m_x = partial_trace(m, 2, 2, keep=keep)
            m_x = m_x - (np.trace(m_x) / 2.0) * identity(2)
            if self.objective is Objective.SUPERADDITIVITY_GAP:
                m_x = m_x - margin.gradient(u_x)
            parts.append(m_x)
        return parts[0], parts[1]


def _descend(
    value_fn,
    grad_fn,
    point,
    retract,
    norm_fn,
    config: OptimizerConfig,
    defect_fn,
) -> Tuple[Any, List[IterateRecord], bool, float]:
    """Backtracking line search shared by the full and local optimizers.

    A trial step is accepted on strict improvement in the optimisation
    direction; otherwise it is halved until ``STEP_FLOOR``, which ends the run.
    After an accepted step the next trial doubles, capped at
    ``MAX_STEP_GROWTH * config.step_size``.
    """
    sign = config.mode.sign
    value = value_fn(point)
    step = config.step_size
    iterates: List[IterateRecord] = []
    max_defect = defect_fn(point)
    converged = False

    for it in range(config.max_iters):
        grad = grad_fn(point)
        gnorm = norm_fn(grad)
        iterates.append(IterateRecord(iteration=it, value=value, grad_norm=gnorm, step=step))
        if gnorm <= config.grad_norm_tol:
            converged = True
            break

        while step >= STEP_FLOOR:
            trial = retract(point, grad, -sign * step)
            trial_value = value_fn(trial)
            if sign * (trial_value - value) > 0.0:
                point, value = trial, trial_value
                max_defect = max(max_defect, defect_fn(point))
                step = min(2.0 * step, MAX_STEP_GROWTH * config.step_size)
                break
            step *= 0.5
        else:
            logger.debug("line search stalled at iteration %d (grad norm %.3e)", it, gnorm)
            break

    return point, iterates, converged, max_defect


def _run_full(problem: _Problem, config: OptimizerConfig, rng: np.random.Generator) -> OptimizerTrace:
    u0 = sample_haar_unitary(problem.dim, rng)
    u, iterates, converged, defect = _descend(
        value_fn=problem.value,
        grad_fn=problem.gradient,
        point=u0,
        retract=lambda u, m, alpha: expm_skew(alpha * m) @ u,
        norm_fn=lambda m: float(np.linalg.norm(m)),
        config=config,
        defect_fn=unitarity_defect,
    )
    return OptimizerTrace(
        iterates=iterates,
        final_unitary=u,
        converged=converged,
        final_value=problem.value(u),
        max_unitarity_defect=defect,
    )


def _better(a: OptimizerTrace, b: Optional[OptimizerTrace], mode: Mode) -> bool:
    if b is None:
        return True
    return mode.sign * (a.final_value - b.final_value) > 0.0


def _require_manifold(config: OptimizerConfig, expected: Manifold) -> None:
    if config.manifold is not expected:
        raise DomainError(
            f"optimizer config targets the {config.manifold.value} manifold, expected {expected.value}"
        )


def optimize_full(
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
    config: OptimizerConfig,
    rng: np.random.Generator,
) -> OptimizerTrace:
    """Extremise S(UρU†‖σ) over U(d), restarting from fresh Haar points
    until a run converges (at most ``config.restarts`` runs)."""
    _require_manifold(config, Manifold.FULL)
    problem = _Problem(rho, sigma)
    best: Optional[OptimizerTrace] = None
    values = []
    for attempt in range(config.restarts):
        trace = _run_full(problem, config, rng)
        values.append(trace.final_value)
        if trace.converged:
            best = trace
            break
        if _better(trace, best, config.mode):
            best = trace
        logger.info("full optimisation run %d did not converge; restarting", attempt)
    best.restart_values = values
    return best


def optimize_local(
    rho_ab: ComplexMatrix,
    sigma_ab: ComplexMatrix,
    config: OptimizerConfig,
    rng: np.random.Generator,
) -> OptimizerTrace:
    """Extremise over U_A ⊗ U_B from ``config.restarts`` Haar starting pairs.

    Returns the best trace; ``factors`` holds (U_A, U_B) and
    ``restart_values`` the final value of every start.
    """
    _require_manifold(config, Manifold.LOCAL_PRODUCT)
    problem = _LocalProblem(rho_ab, sigma_ab, config.objective)

    def retract(point, grads, alpha):
        (u_a, u_b), (m_a, m_b) = point, grads
        return expm_skew(alpha * m_a) @ u_a, expm_skew(alpha * m_b) @ u_b

    best: Optional[OptimizerTrace] = None
    values = []
    for _ in range(config.restarts):
        start = (sample_haar_unitary(2, rng), sample_haar_unitary(2, rng))
        (u_a, u_b), iterates, converged, defect = _descend(
            value_fn=lambda p: problem.value(*p),
            grad_fn=lambda p: problem.gradient(*p),
            point=start,
            retract=retract,
            norm_fn=lambda g: float(np.sqrt(np.linalg.norm(g[0]) ** 2 + np.linalg.norm(g[1]) ** 2)),
            config=config,
            defect_fn=lambda p: max(unitarity_defect(p[0]), unitarity_defect(p[1])),
        )
        trace = OptimizerTrace(
            iterates=iterates,
            final_unitary=kron(u_a, u_b),
            converged=converged,
            final_value=problem.value(u_a, u_b),
            max_unitarity_defect=defect,
            factors=(u_a, u_b),
        )
        values.append(trace.final_value)
        if _better(trace, best, config.mode):
            best = trace
    best.restart_values = values
    if not best.converged:
        logger.info("best local optimisation run did not reach the gradient tolerance")
    return best


def optimize(
    rho: ComplexMatrix,
    sigma: ComplexMatrix,
    config: OptimizerConfig,
    rng: np.random.Generator,
) -> OptimizerTrace:
    """Run the optimizer for ``config.manifold``."""
    if config.manifold is Manifold.LOCAL_PRODUCT:
        return optimize_local(rho, sigma, config, rng)
    return optimize_full(rho, sigma, config, rng)


@dataclass
class LocalEvidence:
    """Modified superadditivity at a given local unitary pair."""
    joint: float
    margin_a: float
    margin_b: float

    @property
    def gap(self) -> float:
        return self.joint - self.margin_a - self.margin_b

    @property
    def satisfied(self) -> bool:
        return self.gap >= -1e-12


def local_evidence(
    rho_ab: ComplexMatrix,
    sigma_ab: ComplexMatrix,
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
) -> LocalEvidence:
    """S(U_A⊗U_B ρ ‖ σ) against S(U_Aρ_A‖σ_A) + S(U_Bρ_B‖σ_B)."""
    problem = _LocalProblem(rho_ab, sigma_ab, Objective.RELATIVE_ENTROPY)
    va, vb = problem.margin_values(u_a, u_b)
    return LocalEvidence(joint=problem.value(u_a, u_b), margin_a=va, margin_b=vb)
