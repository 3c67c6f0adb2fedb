"""Small dense complex linear algebra for density matrices and unitaries.

Everything here works on plain ``numpy`` arrays of dimension at most 8:
Hermitian eigendecomposition (LAPACK or cyclic Jacobi), the base-2 matrix
logarithm, exponentials of skew-Hermitian generators, Kronecker products,
partial traces and the random ensembles used by the campaigns (Haar unitaries
and Ginibre-induced states).
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, SingularityError

logger = logging.getLogger(__name__)


# Type alias for readability; matrices are ndarrays of complex128.
ComplexMatrix = np.ndarray

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-14

# Eigenvalue floor below which a sampled state counts as rank-deficient.
FULL_RANK_FLOOR = 1e-12


class Subsystem(Enum):
    """Which factor of H_A ⊗ H_B a partial trace keeps."""
    A = "A"
    B = "B"


@dataclass(frozen=True)
class HermitianEigen:
    """Eigenvalues sorted non-increasing with matching eigenvector columns."""
    eigenvalues: np.ndarray
    eigenvectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.swapaxes(m, -1, -2))


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b - b @ a


def identity(dim: int) -> ComplexMatrix:
    return np.eye(dim, dtype=complex)


def unitarity_defect(u: ComplexMatrix) -> float:
    """Frobenius norm of U†U − I."""
    return float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[-1])))


def _require_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"matrix must be square, got shape {m.shape}")


def hermitize(m: ComplexMatrix, tol: float = 1e-10) -> ComplexMatrix:
    """Validate approximate Hermiticity and return (M + M†)/2."""
    m = np.asarray(m, dtype=complex)
    _require_square(m)
    scale = np.linalg.norm(m)
    skew = np.linalg.norm(m - m.conj().T)
    if skew > tol * scale:
        raise DomainError(
            f"matrix is not Hermitian: ||M - M^†||_F = {skew:.3e} > {tol:.1e} * ||M||_F"
        )
    return 0.5 * (m + m.conj().T)


def _jacobi_eigh(m: ComplexMatrix) -> tuple:
    """Cyclic Jacobi sweeps for a Hermitian matrix.

    Each (p, q) rotation first removes the phase of a_pq, then applies the
    real symmetric rotation that annihilates it.
    """
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.real(np.diag(a)).copy(), v

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(np.linalg.norm(a) ** 2 - np.sum(np.abs(np.diag(a)) ** 2), 0.0))
        if off <= JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta == 0.0:
                        t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = D · P restricted to columns (p, q); D removes the phase.
                block = np.array(
                    [[c, s], [-s * np.conj(phase), c * np.conj(phase)]],
                    dtype=complex,
                )
                idx = [p, q]
                a[:, idx] = a[:, idx] @ block
                a[idx, :] = block.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ block
    else:
        logger.warning("Jacobi eigensolver hit %d sweeps without converging", JACOBI_MAX_SWEEPS)

    return np.real(np.diag(a)).copy(), v


def eig_hermitian(
    m: ComplexMatrix,
    tol: float = 1e-10,
    method: str = "lapack",
) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix, eigenvalues non-increasing.

    Args:
        m: Square matrix, Hermitian within ``tol`` relative Frobenius norm.
        tol: Hermiticity tolerance.
        method: ``"lapack"`` (numpy.linalg.eigh) or ``"jacobi"``.

    Raises:
        DomainError: non-square or non-Hermitian input.
    """
    h = hermitize(m, tol)
    if method == "lapack":
        values, vectors = np.linalg.eigh(h)
    elif method == "jacobi":
        values, vectors = _jacobi_eigh(h)
    else:
        raise DomainError(f"unknown eigensolver method: {method!r}")

    order = np.argsort(-values, kind="stable")
    return HermitianEigen(
        eigenvalues=np.asarray(values, dtype=float)[order],
        eigenvectors=np.asarray(vectors, dtype=complex)[:, order],
    )


def matrix_log2(m: ComplexMatrix, eigen_tol: float = 1e-12) -> ComplexMatrix:
    """Base-2 logarithm of a strictly positive-definite Hermitian matrix.

    Raises:
        SingularityError: some eigenvalue is at or below ``eigen_tol``.
    """
    eig = eig_hermitian(m)
    smallest = float(eig.eigenvalues[-1])
    if smallest <= eigen_tol:
        raise SingularityError(
            f"matrix_log2 needs a positive-definite argument, min eigenvalue {smallest:.3e}",
            min_eigenvalue=smallest,
        )
    v = eig.eigenvectors
    log_m = (v * np.log2(eig.eigenvalues)) @ v.conj().T
    return 0.5 * (log_m + log_m.conj().T)


def expm_skew(k: ComplexMatrix) -> ComplexMatrix:
    """exp(K) for skew-Hermitian K via the Hermitian matrix iK."""
    h = 1j * np.asarray(k, dtype=complex)
    h = 0.5 * (h + h.conj().T)
    theta, v = np.linalg.eigh(h)
    # iK = V diag(θ) V†  ⇒  K = V diag(−iθ) V†
    return (v * np.exp(-1j * theta)) @ v.conj().T


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product a ⊗ b."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace(
    m: ComplexMatrix,
    dim_a: int,
    dim_b: int,
    keep: Subsystem = Subsystem.A,
) -> ComplexMatrix:
    """Reduced operator on the kept factor of H_A ⊗ H_B.

    Raises:
        DomainError: ``m`` is not (dim_a·dim_b) square.
    """
    m = np.asarray(m, dtype=complex)
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise DomainError(f"partial_trace expects a {n}x{n} matrix for {dim_a}⊗{dim_b}, got {m.shape}")
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep is Subsystem.A:
        return np.einsum("ijkj->ik", t)
    return np.einsum("ijil->jl", t)


def sample_haar_unitaries(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random unitaries, shape (count, dim, dim).

    QR of complex Ginibre matrices with the phases of diag(R) pushed into Q.
    """
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    z = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phases = d / np.abs(d)
    return q * phases[:, np.newaxis, :]


def sample_haar_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    return sample_haar_unitaries(dim, 1, rng)[0]


def sample_random_density(
    dim: int,
    rng: np.random.Generator,
    require_full_rank: bool = False,
    floor: float = FULL_RANK_FLOOR,
) -> ComplexMatrix:
    """Ginibre-induced random state G·G†/Tr(G·G†).

    With ``require_full_rank`` draws whose smallest eigenvalue is not above
    ``floor`` are discarded and redrawn.
    """
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    while True:
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = g @ g.conj().T
        rho = rho / np.real(np.trace(rho))
        rho = 0.5 * (rho + rho.conj().T)
        if not require_full_rank:
            return rho
        if np.linalg.eigvalsh(rho)[0] > floor:
            return rho
        logger.debug("discarding numerically rank-deficient Ginibre draw")


def is_density_matrix(m: ComplexMatrix, tol: float = 1e-10) -> bool:
    """Hermitian, trace one and PSD, each within ``tol``."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if np.linalg.norm(m - m.conj().T) > tol:
        return False
    if abs(np.trace(m) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] >= -tol)
