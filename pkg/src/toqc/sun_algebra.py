"""Linear algebra over su(N) and SU(N).

Operators are plain complex ``numpy`` arrays.  Conventions used throughout:

* su(N) elements are traceless Hermitian matrices; the group map is
  ``SU(N) = exp(-i su(N))``.
* Orthonormal bases ``{t_j}`` satisfy ``tr[t_i t_j] = 2 delta_ij``, i.e. they
  are orthonormal under the inner product ``<A, B> = (1/2) Re tr[A B]``.
* The commutator operation returns ``-i[A, B]`` so every result stays
  Hermitian; callers that need ``i[.,.]`` negate.

Exponentials and logarithms go through eigendecomposition of the Hermitian
generator (always diagonalizable), which keeps unitarity exact and the
logarithm branch under explicit control.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import (
    BranchAmbiguityError,
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidSubspaceError,
)
from .tolerances import DEFAULT_TOL, Tolerances

__all__ = [
    "pauli_basis",
    "gellmann_basis",
    "generalized_gellmann",
    "inner",
    "hs_norm",
    "commutator",
    "expand",
    "reconstruct",
    "project",
    "exp_op",
    "log_op",
    "dagger",
    "traceless",
    "is_traceless_hermitian",
    "is_special_unitary",
    "require_traceless_hermitian",
    "require_same_dim",
    "random_traceless_hermitian",
    "random_special_unitary",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def dagger(a: np.ndarray) -> np.ndarray:
    """Hermitian conjugate."""
    return a.conj().T


def traceless(a: np.ndarray) -> np.ndarray:
    """Remove the trace part: A - (tr A / N) I."""
    n = a.shape[0]
    return a - (np.trace(a) / n) * np.eye(n)


def is_traceless_hermitian(a: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
    return (
        a.ndim == 2
        and a.shape[0] == a.shape[1]
        and np.max(np.abs(a - dagger(a))) < tol.hermitian
        and abs(np.trace(a)) < tol.trace * max(1.0, float(np.max(np.abs(a))))
    )


def is_special_unitary(u: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> bool:
    n = u.shape[0]
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    if np.max(np.abs(dagger(u) @ u - np.eye(n))) >= tol.unitary:
        return False
    return abs(np.linalg.det(u) - 1.0) < tol.unitary


def require_traceless_hermitian(a: np.ndarray, name: str = "operator",
                                tol: Tolerances = DEFAULT_TOL) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - dagger(a))) >= tol.hermitian:
        raise DimensionMismatchError(f"{name} is not Hermitian to {tol.hermitian}")
    if abs(np.trace(a)) >= tol.trace * max(1.0, float(np.max(np.abs(a)))):
        raise DimensionMismatchError(f"{name} is not traceless to {tol.trace}")


def require_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def pauli_basis() -> list[np.ndarray]:
    """The Pauli matrices [sigma_x, sigma_y, sigma_z], tr[s_i s_j] = 2 d_ij."""
    return [SIGMA_X.copy(), SIGMA_Y.copy(), SIGMA_Z.copy()]


def gellmann_basis() -> list[np.ndarray]:
    """The eight Gell-Mann matrices lambda_1..lambda_8 for su(3)."""
    l1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    l2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
    l3 = np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex)
    l4 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    l5 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)
    l6 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    l7 = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex)
    l8 = np.diag([1, 1, -2]).astype(complex) / np.sqrt(3)
    return [l1, l2, l3, l4, l5, l6, l7, l8]


def generalized_gellmann(n: int) -> list[np.ndarray]:
    """Orthonormal basis of su(N) with tr[t_i t_j] = 2 d_ij.

    Elements are ordered shell by shell (k = 2..N): the symmetric and
    antisymmetric off-diagonal pairs coupling levels (j, k) for j < k,
    followed by the k-th diagonal generator.  For n = 2 this reproduces
    ``pauli_basis`` and for n = 3 ``gellmann_basis``, element for element.
    """
    if n < 2:
        raise InvalidDimensionError(f"dimension must be >= 2, got {n}")
    out: list[np.ndarray] = []
    for k in range(1, n):  # zero-based shell index: level k couples to 0..k-1
        for j in range(k):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = 1.0
            sym[k, j] = 1.0
            out.append(sym)
            asym = np.zeros((n, n), dtype=complex)
            asym[j, k] = -1j
            asym[k, j] = 1j
            out.append(asym)
        diag = np.zeros((n, n), dtype=complex)
        diag[np.arange(k), np.arange(k)] = 1.0
        diag[k, k] = -k
        out.append(diag * np.sqrt(2.0 / (k * (k + 1))))
    return out


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product (1/2) Re tr[A B]; positive definite on Hermitian operators."""
    require_same_dim(a, b)
    return 0.5 * float(np.trace(a @ b).real)


def hs_norm(a: np.ndarray) -> float:
    """Norm induced by :func:`inner`."""
    return float(np.sqrt(max(inner(a, a), 0.0)))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hermitian-valued commutator -i[A, B]."""
    require_same_dim(a, b)
    return -1j * (a @ b - b @ a)


def expand(a: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    """Coefficients of a traceless Hermitian operator in an orthonormal basis."""
    if basis and a.shape != basis[0].shape:
        raise DimensionMismatchError(
            f"operator dim {a.shape} does not match basis dim {basis[0].shape}")
    return np.array([inner(a, t) for t in basis])


def reconstruct(coeffs: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    """Inverse of :func:`expand`: sum_j c_j t_j."""
    if len(coeffs) != len(basis):
        raise DimensionMismatchError(
            f"{len(coeffs)} coefficients for a basis of {len(basis)} elements")
    return np.einsum("j,jab->ab", np.asarray(coeffs, dtype=float), np.stack(basis))


def project(a: np.ndarray, subspace: list[np.ndarray] | np.ndarray,
            tol: Tolerances = DEFAULT_TOL, check: bool = True) -> np.ndarray:
    """Orthogonal projection of A onto span(subspace) under :func:`inner`.

    The subspace elements must be mutually orthonormal; with ``check`` the
    Gram matrix is verified against the identity to ``tol.subspace_gram``.
    """
    stack = np.stack(subspace)
    if a.shape != stack.shape[1:]:
        raise DimensionMismatchError(
            f"operator dim {a.shape} does not match subspace dim {stack.shape[1:]}")
    if check:
        gram = 0.5 * np.einsum("iab,jba->ij", stack, stack).real
        if np.max(np.abs(gram - np.eye(len(stack)))) >= tol.subspace_gram:
            raise InvalidSubspaceError(
                "subspace is not orthonormal under (1/2) tr[AB]")
    coeffs = 0.5 * np.einsum("ab,jba->j", a, stack).real
    return np.einsum("j,jab->ab", coeffs, stack)


def exp_op(a: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(-i s A) for Hermitian A, via eigendecomposition.

    The result is unitary to machine precision; for traceless A it lies in
    SU(N) exactly up to rounding.
    """
    w, v = np.linalg.eigh(a)
    return (v * np.exp(-1j * s * w)) @ dagger(v)


def _principal_phases(u: np.ndarray, tol: Tolerances) -> tuple[np.ndarray, np.ndarray]:
    # Complex Schur form: for a (normal) unitary matrix T is diagonal and Z
    # unitary, which is what makes the reassembled logarithm exactly Hermitian.
    t, z = scipy.linalg.schur(u, output="complex")
    offdiag = np.max(np.abs(t - np.diag(np.diag(t)))) if u.shape[0] > 1 else 0.0
    if offdiag > 1e-8:
        raise BranchAmbiguityError("matrix is not unitary enough to diagonalize")
    eigvals = np.diag(t)
    if np.min(np.abs(eigvals + 1.0)) < tol.branch_cut:
        raise BranchAmbiguityError(
            "eigenvalue within tolerance of -1: principal logarithm branch is "
            "ambiguous; perturb the operator or choose a branch explicitly")
    return -np.angle(eigvals), z


def log_op(u: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Principal traceless Hermitian L with exp(-i L) = U.

    Eigenphases are taken in (-pi, pi]; since det U = 1 their sum is a
    multiple of 2*pi, and that multiple is removed by shifting whole periods
    onto the phases where the shift costs the least Hilbert-Schmidt norm.

    Raises
    ------
    BranchAmbiguityError
        if any eigenvalue of U lies within ``tol.branch_cut`` of -1.
    """
    phases, z = _principal_phases(u, tol)
    total = float(np.sum(phases))
    shifts = int(np.rint(total / (2.0 * np.pi)))
    if shifts != 0:
        order = np.argsort(phases)
        phases = phases.copy()
        if shifts > 0:
            for idx in order[::-1][:shifts]:
                phases[idx] -= 2.0 * np.pi
        else:
            for idx in order[:-shifts]:
                phases[idx] += 2.0 * np.pi
    l = (z * phases) @ dagger(z)
    return 0.5 * (l + dagger(l))


def random_traceless_hermitian(rng: np.random.Generator, n: int,
                               scale: float = 1.0) -> np.ndarray:
    """Gaussian random traceless Hermitian matrix (GUE-style)."""
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return traceless(0.5 * (x + dagger(x))) * scale


def random_special_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish random SU(N) element via exp of a random generator."""
    return exp_op(random_traceless_hermitian(rng, n))
