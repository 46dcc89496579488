"""Singular arcs and the generalized Legendre-Clebsch (GLC) test.

On a singular arc the costate F is orthogonal to the control subspace and
the pointwise maximum condition says nothing, so optimality must be probed
through higher-order machinery: the chain of time derivatives of the
singularity conditions, and the GLC matrices Q^(m).

Conventions
-----------
With control partials h_j = dH/du_j, the matrices are built from the
recurrence

    R^(0)_j = h_j,
    R^(m)_j = d R^(m-1)_j / dt - i [R^(m-1)_j, H],
    Q^(m)_{ij} = -i tr[[h_j, F] R^(m-1)_i],

where d/dt expands the chart's explicit time dependence (du/dt enters
through dH/dt).  The index order in the final trace is fixed so that for a
planar chart

    Q^(1)_{ij} = -i tr[[h_i, h_j] F],

matching the sign convention the worked one-qubit and two-qubit analyses
use (the first nonzero order is antisymmetric, so the choice only flips the
sign of odd orders and never changes a zero/semidefiniteness verdict).

The first nonzero order M must be even, and (-1)^(M/2) Q^(M) must be
negative semidefinite; otherwise the singular arc cannot be time optimal.
Q^(m) is a linear functional of F throughout, which the test exploits to
distinguish "identically zero order" from "zero at this costate" and to
extract the odd-order equality conditions as linear relations among the
costate coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np

from .constraint_model import BallInCoords, ConstraintSet
from .errors import (
    DimensionMismatchError,
    ImplicitFunctionError,
    MissingDerivativeError,
    ValidationError,
)
from .sun_algebra import expand, generalized_gellmann, hs_norm, inner
from .tolerances import DEFAULT_TOL, Tolerances

__all__ = [
    "ControlChart",
    "GLCReport",
    "singular_chain",
    "glc_matrices",
    "glc_test",
    "boundary_reduce",
    "reparametrization_check",
    "bracket_obstruction",
    "normalized_singular_costate",
]


@dataclass(frozen=True, eq=False)
class ControlChart:
    """A local parametrization u -> H(u) of the admissible Hamiltonians.

    ``partials`` are the operators h_j = dH/du_j evaluated at the point under
    study.  ``u`` optionally records the control values there (needed for
    boundary reductions).  ``du_dt`` carries the arc's control velocity; when
    omitted the arc is treated as constant-control unless ``time_varying`` is
    set, in which case orders that need dH/dt raise MissingDerivativeError.
    ``partials_dt`` holds d h_j/dt for charts whose partials move along the
    arc (zero for planar charts).
    """

    partials: tuple[np.ndarray, ...]
    u: Optional[np.ndarray] = None
    du_dt: Optional[np.ndarray] = None
    partials_dt: Optional[tuple[np.ndarray, ...]] = None
    time_varying: bool = False
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not self.partials:
            raise ValidationError("chart needs at least one control partial")
        shape = self.partials[0].shape
        for k, h in enumerate(self.partials):
            if h.shape != shape:
                raise DimensionMismatchError(f"partials[{k}] has shape {h.shape}")
            if np.max(np.abs(h - h.conj().T)) > 1e-10:
                raise ValidationError(f"partials[{k}] is not Hermitian")
        for arr, label in ((self.u, "u"), (self.du_dt, "du_dt")):
            if arr is not None and len(arr) != len(self.partials):
                raise ValidationError(f"{label} length must match the partials")

    @property
    def n_controls(self) -> int:
        return len(self.partials)

    @property
    def dim(self) -> int:
        return self.partials[0].shape[0]

    def hamiltonian_rate(self) -> Optional[np.ndarray]:
        """dH/dt along the arc, or None when it is needed but unknown."""
        if self.du_dt is not None:
            rate = np.einsum("j,jab->ab", np.asarray(self.du_dt, float),
                             np.stack(self.partials))
            if self.partials_dt is not None and self.u is not None:
                rate = rate + np.einsum("j,jab->ab", np.asarray(self.u, float),
                                        np.stack(self.partials_dt))
            return rate
        if self.time_varying:
            return None
        return np.zeros_like(self.partials[0])

    def partial_rates(self) -> Optional[tuple[np.ndarray, ...]]:
        if self.partials_dt is not None:
            return self.partials_dt
        if self.time_varying and self.du_dt is None:
            return None
        return tuple(np.zeros_like(h) for h in self.partials)


@dataclass(frozen=True, eq=False)
class GLCReport:
    """Outcome of the GLC test on one singular point.

    ``order`` is the first m with a nonzero Q^(m) at the given costate (None
    if every order up to m_max vanished).  ``verdict`` is one of
    "consistent", "excluded", "inconclusive".  ``derived_conditions`` lists
    the equality relations imposed at odd orders (and, for symbolic scenario
    studies, the closing inequalities).
    """

    matrices: tuple[np.ndarray, ...]
    order: Optional[int]
    parity_ok: bool
    sign_ok: bool
    verdict: str
    derived_conditions: tuple[str, ...] = ()
    eigenvalues_at_order: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "M": self.order,
            "parity_ok": self.parity_ok,
            "sign_ok": self.sign_ok,
            "verdict": self.verdict,
            "Q": [m.tolist() for m in self.matrices],
            "derived_conditions": list(self.derived_conditions),
            "eigenvalues_at_M": list(self.eigenvalues_at_order),
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# derivative jets
#
# A jet is a list [X, X', X'', ...] of successive time derivatives at the
# evaluation instant.  Commutators obey the Leibniz rule order by order,
# which is all the recurrence needs.

def _jet_commutator(a: list[np.ndarray], b: list[np.ndarray],
                    order: int) -> list[np.ndarray]:
    out = []
    for n in range(order + 1):
        acc = np.zeros_like(a[0])
        for k in range(n + 1):
            acc = acc + comb(n, k) * (a[k] @ b[n - k] - b[n - k] @ a[k])
        out.append(acc)
    return out


def _jet_ddt(a: list[np.ndarray]) -> list[np.ndarray]:
    return a[1:]


def _h_jet(chart: ControlChart, h: np.ndarray, order: int) -> list[np.ndarray]:
    """[H, dH/dt, 0, ...] -- control velocity assumed constant over the arc."""
    rate = chart.hamiltonian_rate()
    if rate is None:
        raise MissingDerivativeError(
            "chart is time-varying but du/dt was not supplied; the recurrence "
            "needs dH/dt from this order on")
    zero = np.zeros_like(h)
    return [h, rate] + [zero] * max(0, order - 1)


def _partial_jet(chart: ControlChart, j: int, order: int) -> list[np.ndarray]:
    rates = chart.partial_rates()
    if rates is None:
        raise MissingDerivativeError(
            "chart is time-varying but du/dt was not supplied")
    zero = np.zeros_like(chart.partials[j])
    return [chart.partials[j], rates[j]] + [zero] * max(0, order - 1)


def _r_jets(chart: ControlChart, h: np.ndarray, m_max: int) -> list[list[list[np.ndarray]]]:
    """R^(m)_j as jets: result[m][j] has derivative order m_max - m."""
    h_jet = _h_jet(chart, h, m_max)
    current = [_partial_jet(chart, j, m_max) for j in range(chart.n_controls)]
    levels = [current]
    for m in range(1, m_max):
        order = m_max - m
        nxt = []
        for jet in current:
            comm = _jet_commutator(jet, h_jet[: order + 2], order)
            nxt.append([jet[k + 1] - 1j * comm[k] for k in range(order + 1)])
        levels.append(nxt)
        current = nxt
    return levels


def _q_from_r(chart: ControlChart, f: np.ndarray,
              r_level: list[list[np.ndarray]]) -> np.ndarray:
    """Q^(m)_{ij} = -i tr[[h_j, F] R^(m-1)_i] (real-valued by construction)."""
    l = chart.n_controls
    brackets = [hj @ f - f @ hj for hj in chart.partials]
    q = np.empty((l, l))
    for i in range(l):
        r = r_level[i][0]
        for j in range(l):
            val = -1j * np.trace(brackets[j] @ r)
            q[i, j] = val.real
    return q


def glc_matrices(chart: ControlChart, h: np.ndarray, f: np.ndarray,
                 m_max: int) -> list[np.ndarray]:
    """The GLC matrices Q^(1)..Q^(m_max) at one singular point.

    Valid under the usual stacking assumption that all lower orders vanish
    when order m is read off.  For planar charts with constant partials and
    constant control, m = 1, 2, 3 reduce to the closed forms

        Q^(1)_{ij} = -i tr[[h_i, h_j] F]
        Q^(2)_{ij} =    tr[[[H, h_i], h_j] F]
        Q^(3)_{ij} =  i tr[[[H, [H, h_i]], h_j] F] + tr[[[dH/dt, h_i], h_j] F]
    """
    if m_max < 1:
        raise ValidationError("m_max must be >= 1")
    if h.shape != f.shape or h.shape != chart.partials[0].shape:
        raise DimensionMismatchError("chart, H and F dimensions disagree")
    levels = _r_jets(chart, h, m_max)
    return [_q_from_r(chart, f, levels[m - 1]) for m in range(1, m_max + 1)]


def _q_coefficient_tensor(chart: ControlChart, h: np.ndarray, m_max: int,
                          basis: list[np.ndarray]) -> list[np.ndarray]:
    """Q^(m) as linear functionals of F: tensor[m-1][i, j, a] over basis."""
    levels = _r_jets(chart, h, m_max)
    l = chart.n_controls
    out = []
    for m in range(1, m_max + 1):
        t = np.empty((l, l, len(basis)))
        for a, tau in enumerate(basis):
            brackets = [hj @ tau - tau @ hj for hj in chart.partials]
            for i in range(l):
                r = levels[m - 1][i][0]
                for j in range(l):
                    t[i, j, a] = (-1j * np.trace(brackets[j] @ r)).real
        out.append(t)
    return out


def _rref_rows(rows: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Reduced row echelon form with a numeric pivot threshold."""
    a = np.array(rows, dtype=float)
    m, n = a.shape
    pivot_row = 0
    for col in range(n):
        if pivot_row >= m:
            break
        idx = pivot_row + int(np.argmax(np.abs(a[pivot_row:, col])))
        if abs(a[idx, col]) < tol:
            continue
        a[[pivot_row, idx]] = a[[idx, pivot_row]]
        a[pivot_row] /= a[pivot_row, col]
        for r in range(m):
            if r != pivot_row and abs(a[r, col]) > tol:
                a[r] -= a[r, col] * a[pivot_row]
        pivot_row += 1
    out = a[:pivot_row]
    out[np.abs(out) < tol] = 0.0
    return out


def _format_linear_condition(row: np.ndarray, names: Sequence[str]) -> str:
    terms = []
    for coef, name in zip(row, names):
        if abs(coef) < 1e-9:
            continue
        if abs(coef - 1.0) < 1e-9:
            terms.append(f"+ {name}")
        elif abs(coef + 1.0) < 1e-9:
            terms.append(f"- {name}")
        else:
            terms.append(f"{coef:+.6g}*{name}")
    expr = " ".join(terms).lstrip("+ ").replace("+ -", "- ")
    return f"{expr} = 0"


def singular_chain(f: np.ndarray, c: ConstraintSet, h: np.ndarray, depth: int,
                   du_dt: Optional[np.ndarray] = None,
                   time_varying: bool = False) -> dict:
    """Residuals of the singular-arc chain conditions.

    Returns, for n = 0..depth, the vector over control directions j of
    d^n/dt^n tr[c_j F] (evaluated by nested commutators with H along the
    arc), plus the normalization residual tr[H_d F] - 1 that every normal
    singular arc must satisfy.
    """
    if depth < 0:
        raise ValidationError("depth must be >= 0")
    chart = ControlChart(tuple(c.control_basis), du_dt=du_dt,
                         time_varying=time_varying)
    h_jet = _h_jet(chart, h, max(depth, 1))
    residuals = []
    jets = [[cj] + [np.zeros_like(cj)] * depth for cj in c.control_basis]
    for n in range(depth + 1):
        residuals.append(np.array(
            [float(np.trace(j[0] @ f).real) for j in jets]))
        if n == depth:
            break
        order = depth - n - 1
        advanced = []
        for jet in jets:
            comm = _jet_commutator(jet, h_jet[: order + 2], order)
            advanced.append([jet[k + 1] - 1j * comm[k] for k in range(order + 1)])
        jets = advanced
    normalization = float(np.trace(c.drift @ f).real) - 1.0
    return {"residuals": residuals, "normalization": normalization}


def glc_test(chart: ControlChart, h: np.ndarray, f: np.ndarray,
             m_max: int = 4, tol: Tolerances = DEFAULT_TOL,
             costate_basis: Optional[list[np.ndarray]] = None,
             costate_names: Optional[Sequence[str]] = None) -> GLCReport:
    """Run the stepwise GLC test at a singular point (H, F).

    Orders are scanned from m = 1.  An order whose matrix vanishes as a
    functional of F is skipped; an order that vanishes at this F but not
    identically records, when odd, the linear relations Q^(m)(F) = 0 among
    the costate coefficients as derived conditions and continues.  At the
    first order M with a nonzero value the parity and semidefiniteness
    verdicts are issued: M must be even and (-1)^(M/2) Q^(M) negative
    semidefinite (eigenvalues <= tol.semidefinite).
    """
    n = chart.dim
    basis = costate_basis if costate_basis is not None else generalized_gellmann(n)
    names = list(costate_names) if costate_names is not None else [
        f"f{a+1}" for a in range(len(basis))]
    tensors = _q_coefficient_tensor(chart, h, m_max, basis)
    coeffs = expand(f, basis)
    scale = max(1.0, float(np.max(np.abs(coeffs))))

    matrices: list[np.ndarray] = []
    derived: list[str] = []
    notes: list[str] = []
    symmetry_viol = 0.0

    for m in range(1, m_max + 1):
        t = tensors[m - 1]
        # Q^(m) is linear in F, so Q(F) = sum_a f_a Q(tau_a).
        q = np.einsum("ija,a->ij", t, coeffs)
        matrices.append(q)
        sym = q + ((-1) ** m) * q.T
        symmetry_viol = max(symmetry_viol, float(np.max(np.abs(sym))))
        if np.max(np.abs(t)) < 1e-12:
            continue  # identically zero order
        if np.max(np.abs(q)) < tol.singular * scale:
            if m % 2 == 1:
                rows = t.reshape(-1, len(basis))
                rows = rows[np.max(np.abs(rows), axis=1) > 1e-12]
                for row in _rref_rows(rows):
                    derived.append(_format_linear_condition(row, names))
            continue
        # first nonzero order
        parity_ok = (m % 2 == 0)
        if not parity_ok:
            return GLCReport(tuple(matrices), m, False, False, "excluded",
                             tuple(derived), (), tuple(notes))
        k = m // 2
        signed = ((-1) ** k) * q
        eigs = np.linalg.eigvalsh(0.5 * (signed + signed.T))
        sign_ok = bool(np.max(eigs) <= tol.semidefinite * scale)
        verdict = "consistent" if sign_ok else "excluded"
        if symmetry_viol > tol.glc_symmetry:
            notes.append(f"symmetry law violated by {symmetry_viol:.3e}")
        return GLCReport(tuple(matrices), m, True, sign_ok, verdict,
                         tuple(derived), tuple(float(e) for e in eigs),
                         tuple(notes))

    notes.append("all orders up to m_max vanished")
    if derived:
        notes.append("open odd-order conditions: " + "; ".join(derived))
    return GLCReport(tuple(matrices), None, True, True, "inconclusive",
                     tuple(derived), (), tuple(notes))


def boundary_reduce(chart: ControlChart, active: BallInCoords,
                    eliminate: int) -> ControlChart:
    """Eliminate one coordinate of a chart pinned to a quadratic boundary.

    On the boundary u^T G u = r^2, solving for u_e via the implicit function
    theorem gives the reduced partials

        h_i' = h_i - ((G u)_i / (G u)_e) h_e,

    which for the unit metric is h_i - (u_i / u_e) h_e.  The eliminated
    coordinate's constraint gradient must not vanish at the point.
    """
    if chart.u is None:
        raise ValidationError("boundary reduction needs the control values u")
    l = chart.n_controls
    if not 0 <= eliminate < l:
        raise ValidationError(f"eliminate index {eliminate} out of range")
    g = np.asarray(active.metric, float) @ np.asarray(chart.u, float)
    if abs(g[eliminate]) < 1e-10:
        raise ImplicitFunctionError(
            "eliminated coordinate's constraint gradient is within 1e-10 of "
            "zero; the implicit function theorem does not apply here")
    he = chart.partials[eliminate]
    keep = [i for i in range(l) if i != eliminate]
    partials = tuple(chart.partials[i] - (g[i] / g[eliminate]) * he for i in keep)
    u = np.asarray(chart.u, float)[keep]
    du = None if chart.du_dt is None else np.asarray(chart.du_dt, float)[keep]
    names = None if chart.names is None else tuple(chart.names[i] for i in keep)
    return ControlChart(partials, u=u, du_dt=du, names=names,
                        time_varying=chart.time_varying)


def _sign_flags(q: np.ndarray, tol: float) -> tuple[bool, bool, bool]:
    scale = max(1.0, float(np.max(np.abs(q))))
    is_zero = np.max(np.abs(q)) < tol * scale
    eigs = np.linalg.eigvalsh(0.5 * (q + q.T))
    return (is_zero, bool(np.min(eigs) >= -tol * scale),
            bool(np.max(eigs) <= tol * scale))


def reparametrization_check(chart_a: ControlChart, chart_b: ControlChart,
                            jacobian: np.ndarray, h: np.ndarray, f: np.ndarray,
                            m_max: int = 4,
                            tol: Tolerances = DEFAULT_TOL) -> bool:
    """Verify GLC congruence between two charts of the same Hamiltonian.

    With jacobian J[k, i] = dv_k/du_i relating chart_a coordinates u to
    chart_b coordinates v, the first nonzero order must satisfy
    Q^(M)(u) = J^T Q^(M)(v) J, and the three sign verdicts (zero, positive
    semidefinite, negative semidefinite) must agree.
    """
    jac = np.asarray(jacobian, float)
    if abs(np.linalg.det(jac)) < 1e-10:
        raise ValidationError("jacobian is not invertible")
    qa = glc_matrices(chart_a, h, f, m_max)
    qb = glc_matrices(chart_b, h, f, m_max)
    scale_a = [np.max(np.abs(q)) for q in qa]
    scale_b = [np.max(np.abs(q)) for q in qb]
    thresh = 1e-10 * max(1.0, max(scale_a), max(scale_b))
    order_a = next((m for m, s in enumerate(scale_a, start=1) if s > thresh), None)
    order_b = next((m for m, s in enumerate(scale_b, start=1) if s > thresh), None)
    if order_a != order_b:
        return False
    if order_a is None:
        return True
    qa_m, qb_m = qa[order_a - 1], qb[order_a - 1]
    congruent = np.max(np.abs(qa_m - jac.T @ qb_m @ jac)) <= tol.congruence * max(
        1.0, float(np.max(np.abs(qa_m))))
    return bool(congruent and _sign_flags(qa_m, tol.semidefinite)
                == _sign_flags(qb_m, tol.semidefinite))


def bracket_obstruction(c: ConstraintSet, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff the drift lies in the span of the control-subspace brackets.

    In that case a singular arc's first-order GLC conditions force
    tr[H_d F] = 0, contradicting the normalization of normal protocols, so
    time-optimal singular arcs are impossible.
    """
    basis = generalized_gellmann(c.dim)
    rows = []
    for i in range(c.n_controls):
        for j in range(i + 1, c.n_controls):
            b = -1j * (c.control_basis[i] @ c.control_basis[j]
                       - c.control_basis[j] @ c.control_basis[i])
            if hs_norm(b) > 1e-14:
                rows.append(expand(b, basis))
    target = expand(c.drift, basis)
    norm = max(1.0, float(np.linalg.norm(target)))
    if not rows:
        return bool(np.linalg.norm(target) < tol.span_membership)
    a = np.stack(rows)
    coeff, *_ = np.linalg.lstsq(a.T, target, rcond=None)
    residual = float(np.linalg.norm(a.T @ coeff - target))
    return residual < tol.span_membership * norm


def normalized_singular_costate(c: ConstraintSet,
                                tol: Tolerances = DEFAULT_TOL) -> Optional[np.ndarray]:
    """A costate with tr[c_j F] = 0 for all j and tr[H_d F] = 1, if any.

    Returns None when the linear system is infeasible -- which is always the
    case for lollipop constraints, where the drift lies inside the control
    subspace and the normalization contradicts the singularity conditions.
    """
    basis = generalized_gellmann(c.dim)
    rows = [2.0 * expand(cj, basis) for cj in c.control_basis]
    rows.append(2.0 * expand(c.drift, basis))
    a = np.stack(rows)
    b = np.zeros(len(rows))
    b[-1] = 1.0
    coeffs, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.linalg.norm(a @ coeffs - b) > 1e-8:
        return None
    from .sun_algebra import reconstruct
    return reconstruct(coeffs, basis)
