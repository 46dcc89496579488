"""Admissible-Hamiltonian sets: drift + control subspace + bound.

A constraint set holds the drift Hamiltonian, an ordered frame spanning the
control subspace, and one of three bound kinds:

* ``Typical`` -- a single Hilbert-Schmidt ball (1/2) tr[H_c^2] <= Omega^2 on
  an orthonormal control frame;
* ``Box`` -- independent per-coordinate bounds lo_j <= u_j <= hi_j;
* ``BallInCoords`` -- a quadratic bound u^T G u <= r^2 on the control
  coefficients with a declared SPD metric G (the frame need not be
  normalized, e.g. coefficient balls mixing exchange and field axes).

The module classifies constraint sets (lollipop vs lotus-leaf, planar,
typical, drift-in-bracket), evaluates the pointwise maximizer of the
Pontryagin function -1 + tr[H F], and detects singular points where the
costate is orthogonal to the whole control subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .sun_algebra import (
    commutator,
    expand,
    generalized_gellmann,
    hs_norm,
    inner,
    project,
    require_traceless_hermitian,
)
from .tolerances import DEFAULT_TOL, Tolerances

__all__ = [
    "Typical",
    "Box",
    "BallInCoords",
    "ConstraintSet",
    "ClassificationReport",
    "MaximizerResult",
    "classify",
    "maximizer",
    "is_singular",
    "pontryagin_h",
]


@dataclass(frozen=True)
class Typical:
    """Hilbert-Schmidt ball (1/2) tr[H_c^2] <= omega^2."""
    omega: float


@dataclass(frozen=True, eq=False)
class Box:
    """Per-coordinate bounds lo_j <= u_j <= hi_j."""
    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True, eq=False)
class BallInCoords:
    """Coefficient ball u^T metric u <= radius^2."""
    radius: float
    metric: np.ndarray


Kind = Union[Typical, Box, BallInCoords]


def _orthonormalize(frame: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Gram-Schmidt under the (1/2) tr[AB] inner product; drops null vectors."""
    out: list[np.ndarray] = []
    for a in frame:
        v = a.astype(complex)
        for b in out:
            v = v - inner(v, b) * b
        nrm = hs_norm(v)
        if nrm > tol * max(1.0, hs_norm(a)):
            out.append(v / nrm)
    return np.stack(out)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """The set of available Hamiltonians H_d + sum_j u_j c_j with u bounded.

    ``control_basis`` is the ordered control frame (c_1..c_l); for the
    ``Typical`` kind it must be orthonormal under (1/2) tr[AB].
    ``control_names`` optionally names the coordinates for reports.
    """

    dim: int
    drift: np.ndarray
    control_basis: tuple[np.ndarray, ...]
    kind: Kind
    control_names: Optional[tuple[str, ...]] = None
    _span: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tol = DEFAULT_TOL
        require_traceless_hermitian(self.drift, "drift", tol)
        if self.drift.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"drift shape {self.drift.shape} does not match dim {self.dim}")
        if not self.control_basis:
            raise ValidationError("control_basis must contain at least one element")
        for k, c in enumerate(self.control_basis):
            require_traceless_hermitian(c, f"control_basis[{k}]", tol)
            if c.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"control_basis[{k}] has shape {c.shape}, expected {(self.dim,)*2}")
        l = len(self.control_basis)
        stack = np.stack(self.control_basis)
        gram = 0.5 * np.einsum("iab,jba->ij", stack, stack).real
        if isinstance(self.kind, Typical):
            if self.kind.omega <= 0:
                raise ValidationError("typical bound omega must be positive")
            if np.max(np.abs(gram - np.eye(l))) >= tol.subspace_gram:
                raise ValidationError(
                    "typical kind needs an orthonormal control frame "
                    "(Gram matrix 2*I under the full trace)")
        elif isinstance(self.kind, Box):
            lo, hi = np.asarray(self.kind.lo, float), np.asarray(self.kind.hi, float)
            if lo.shape != (l,) or hi.shape != (l,):
                raise ValidationError("box bounds must match the number of controls")
            if np.any(lo > hi):
                raise ValidationError("box bounds need lo_j <= hi_j")
        elif isinstance(self.kind, BallInCoords):
            g = np.asarray(self.kind.metric, float)
            if g.shape != (l, l):
                raise ValidationError("ball metric must be l x l")
            if np.max(np.abs(g - g.T)) > 1e-12:
                raise ValidationError("ball metric must be symmetric")
            if np.min(np.linalg.eigvalsh(g)) <= 0:
                raise ValidationError("ball metric must be positive definite")
            if self.kind.radius <= 0:
                raise ValidationError("ball radius must be positive")
        else:
            raise ValidationError(f"unknown constraint kind {self.kind!r}")
        if self.control_names is not None and len(self.control_names) != l:
            raise ValidationError("control_names must match the number of controls")
        object.__setattr__(self, "_span", _orthonormalize(stack))

    @property
    def n_controls(self) -> int:
        return len(self.control_basis)

    @property
    def control_span(self) -> np.ndarray:
        """Orthonormalized spanning set of the control subspace."""
        return self._span

    def project_control(self, a: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the control subspace."""
        return project(a, self._span, check=False)

    def hamiltonian(self, u: np.ndarray) -> np.ndarray:
        """H_d + sum_j u_j c_j."""
        u = np.asarray(u, dtype=float)
        return self.drift + np.einsum("j,jab->ab", u, np.stack(self.control_basis))

    def bound_violation(self, u: np.ndarray) -> float:
        """How far the coefficients u stick out of the admissible region."""
        u = np.asarray(u, dtype=float)
        if isinstance(self.kind, Typical):
            hc = np.einsum("j,jab->ab", u, np.stack(self.control_basis))
            return max(0.0, hs_norm(hc) - self.kind.omega)
        if isinstance(self.kind, Box):
            lo = np.asarray(self.kind.lo, float)
            hi = np.asarray(self.kind.hi, float)
            return float(max(np.max(lo - u, initial=0.0), np.max(u - hi, initial=0.0)))
        g = np.asarray(self.kind.metric, float)
        return max(0.0, float(np.sqrt(u @ g @ u)) - self.kind.radius)


@dataclass(frozen=True)
class ClassificationReport:
    """Structural classification of a constraint set."""
    drift_in_subspace: bool
    type_label: str  # "lollipop" | "lotus_leaf"
    planar: bool
    typical: bool
    drift_in_bracket: bool

    def as_dict(self) -> dict:
        return {
            "drift_in_subspace": self.drift_in_subspace,
            "type_label": self.type_label,
            "planar": self.planar,
            "typical": self.typical,
            "drift_in_bracket": self.drift_in_bracket,
        }


@dataclass(frozen=True, eq=False)
class MaximizerResult:
    """Pointwise maximizer of -1 + tr[H F] over the constraint set.

    ``singular`` means the costate is orthogonal to the control subspace and
    the maximum condition carries no information.  For regular box results,
    ``partially_singular`` lists coordinates whose pairing with F is below
    threshold (their bang value is undetermined; they are set to the
    admissible value closest to zero and flagged for singular-arc analysis).
    """
    singular: bool
    hamiltonian: Optional[np.ndarray] = None
    controls: Optional[np.ndarray] = None
    partially_singular: tuple[int, ...] = ()


def _span_basis(dim: int) -> list[np.ndarray]:
    return generalized_gellmann(dim)


def classify(c: ConstraintSet, tol: Tolerances = DEFAULT_TOL) -> ClassificationReport:
    """Classify a constraint set.

    The drift is in the subspace iff its projection residual vanishes; it is
    in the bracket iff it lies in the span of all pairwise -i[c_i, c_j].
    All three bound kinds describe full-dimensional closed regions of the
    control hyperplane, so ``planar`` is always true; ``typical`` is reserved
    for the Hilbert-Schmidt ball kind.
    """
    drift_norm = max(1.0, hs_norm(c.drift))
    res = hs_norm(c.drift - c.project_control(c.drift))
    drift_in_subspace = res < tol.span_membership * drift_norm

    brackets = [
        commutator(c.control_basis[i], c.control_basis[j])
        for i in range(c.n_controls)
        for j in range(i + 1, c.n_controls)
    ]
    nonzero = [b for b in brackets if hs_norm(b) > 1e-14]
    if nonzero:
        span = _orthonormalize(np.stack(nonzero))
        bres = hs_norm(c.drift - project(c.drift, span, check=False))
        drift_in_bracket = bres < tol.span_membership * drift_norm
    else:
        drift_in_bracket = hs_norm(c.drift) < tol.span_membership

    return ClassificationReport(
        drift_in_subspace=drift_in_subspace,
        type_label="lollipop" if drift_in_subspace else "lotus_leaf",
        planar=True,
        typical=isinstance(c.kind, Typical),
        drift_in_bracket=drift_in_bracket,
    )


def is_singular(f: np.ndarray, c: ConstraintSet, tol: float | None = None) -> bool:
    """True iff F pairs to zero with every control frame element."""
    if f.shape != (c.dim, c.dim):
        raise DimensionMismatchError(
            f"costate shape {f.shape} does not match constraint dim {c.dim}")
    threshold = DEFAULT_TOL.singular if tol is None else tol
    return max(abs(inner(f, cj)) for cj in c.control_basis) < threshold


def maximizer(f: np.ndarray, c: ConstraintSet,
              singular_tol: float | None = None) -> MaximizerResult:
    """Maximize tr[H F] over the constraint set at fixed costate F.

    Returns a singular result when the projection of F onto the control
    subspace is below ``singular_tol`` in the induced norm.  Otherwise:

    * typical: H_c = omega * P(F) / ||P(F)|| (Cauchy-Schwarz direction,
      bound saturated);
    * box: per-coordinate bang values by the sign of <F, c_j>;
    * ball: u = r * G^{-1} g / sqrt(g^T G^{-1} g) with g_j = tr[c_j F], the
      metric-gradient direction saturating the quadratic bound.
    """
    if f.shape != (c.dim, c.dim):
        raise DimensionMismatchError(
            f"costate shape {f.shape} does not match constraint dim {c.dim}")
    tol = DEFAULT_TOL.singular if singular_tol is None else singular_tol
    p = c.project_control(f)
    if hs_norm(p) < tol:
        return MaximizerResult(singular=True)

    if isinstance(c.kind, Typical):
        hc = c.kind.omega * p / hs_norm(p)
        u = np.array([inner(hc, cj) for cj in c.control_basis])
        return MaximizerResult(False, c.drift + hc, u)

    if isinstance(c.kind, Box):
        lo = np.asarray(c.kind.lo, float)
        hi = np.asarray(c.kind.hi, float)
        u = np.empty(c.n_controls)
        flagged = []
        for j, cj in enumerate(c.control_basis):
            g = inner(f, cj)
            if g > tol:
                u[j] = hi[j]
            elif g < -tol:
                u[j] = lo[j]
            else:
                u[j] = min(max(0.0, lo[j]), hi[j])
                flagged.append(j)
        return MaximizerResult(False, c.hamiltonian(u), u, tuple(flagged))

    # BallInCoords: maximize g . u subject to u^T G u <= r^2.
    g = np.array([float(np.trace(cj @ f).real) for cj in c.control_basis])
    ginv_g = np.linalg.solve(np.asarray(c.kind.metric, float), g)
    denom = float(np.sqrt(g @ ginv_g))
    u = c.kind.radius * ginv_g / denom
    return MaximizerResult(False, c.hamiltonian(u), u)


def pontryagin_h(h: np.ndarray, f: np.ndarray) -> float:
    """The Pontryagin function -1 + tr[H F] (full trace)."""
    if h.shape != f.shape:
        raise DimensionMismatchError(f"shape mismatch {h.shape} vs {f.shape}")
    return float(np.trace(h @ f).real) - 1.0
