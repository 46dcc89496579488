"""Structural analysis of singular arcs.

Two complementary engines:

* :func:`derive_singular_structure` works symbolically (sympy) on a planar
  chart.  It stacks the singularity conditions, the odd-order GLC
  equalities, and the flow-invariance derivatives of everything already
  established, solving the linear layers at the coefficient level; the
  closing even order is then reduced to sign conditions on the remaining
  free coefficients and control values.  This is the engine behind the
  "interior arc" reports of the built-in scenarios.

* :func:`boundary_closure_study` works numerically at sampled points of a
  quadratic boundary piece.  Condition operators (control directions plus
  first-order GLC brackets of the reduced chart) are closed under the
  costate flow C -> -i[C, H] until the rank saturates; the arc family is
  infeasible when no costate in the surviving null space can carry the
  normalization tr[H_d F] = 1.  Feasible families are handed to the numeric
  GLC test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constraint_model import BallInCoords, ConstraintSet
from .errors import ValidationError
from .singular_glc import ControlChart, GLCReport, boundary_reduce, glc_test
from .sun_algebra import commutator, expand, generalized_gellmann
from .tolerances import DEFAULT_TOL, Tolerances

__all__ = [
    "ArcModel",
    "BoundaryCase",
    "derive_singular_structure",
    "boundary_closure_study",
]


@dataclass(frozen=True, eq=False)
class ArcModel:
    """Symbolic description of a singular-arc family on a planar chart.

    All matrices are sympy Matrices with exact entries; parameters such as
    level splittings appear as symbols listed in ``positive_params`` (known
    strictly positive) or related through ``positive_exprs`` (expressions
    known strictly positive, e.g. a bound exceeding a splitting).
    ``pinned_controls`` fixes control symbols (boundary studies); the
    ``singularity_frame``, defaulting to the chart partials, carries the
    directions whose pairing with F must vanish.
    """

    drift: object                      # sympy Matrix
    partials: tuple                    # chart partials dH/du_j (sympy)
    control_syms: tuple                # sympy symbols for the u_j
    costate_basis: tuple               # sympy basis matrices tau_a
    costate_syms: tuple                # sympy symbols f_a
    positive_params: tuple = ()
    positive_exprs: tuple = ()
    pinned_controls: dict = field(default_factory=dict)
    singularity_frame: Optional[tuple] = None

    def frame(self):
        return self.singularity_frame if self.singularity_frame is not None \
            else self.partials


def _sym_modules():
    import sympy
    return sympy


def _sym_q_matrix(sympy, partials, h, f, m):
    """Planar-chart GLC matrix of order m, constant control, symbolic."""
    rs = list(partials)
    for _ in range(m - 1):
        rs = [sympy.expand(-sympy.I * (r * h - h * r)) for r in rs]
    l = len(partials)
    q = sympy.zeros(l, l)
    for i in range(l):
        for j in range(l):
            br = partials[j] * f - f * partials[j]
            q[i, j] = sympy.expand(-sympy.I * (br * rs[i]).trace())
    return q


def _fmt_coeff(sympy, c) -> str:
    c = sympy.nsimplify(c)
    return str(c)


def _fmt_equality(sympy, row, names) -> str:
    terms = []
    for c, name in zip(row, names):
        c = sympy.nsimplify(c)
        if c == 0:
            continue
        if c == 1:
            terms.append(f"+ {name}")
        elif c == -1:
            terms.append(f"- {name}")
        else:
            terms.append(f"+ {_fmt_coeff(sympy, c)}*{name}" if not str(c).startswith("-")
                         else f"- {_fmt_coeff(sympy, -c)}*{name}")
    expr = " ".join(terms)
    if expr.startswith("+ "):
        expr = expr[2:]
    return f"{expr} = 0"


class _SignFacts:
    """Tracks sign knowledge about symbols during inequality reduction."""

    def __init__(self, sympy, positive_params, positive_exprs):
        self.sympy = sympy
        self.positive = set(positive_params)
        self.positive_exprs = list(positive_exprs)
        self.nonneg = set()
        self.nonzero = set()

    def sign_of(self, expr):
        """Return '+', '-', '0' or None for a factor."""
        sympy = self.sympy
        expr = sympy.expand(expr)
        if expr.is_number:
            if expr == 0:
                return "0"
            return "+" if expr > 0 else "-"
        if expr in self.positive:
            return "+"
        if expr in self.nonneg and expr in self.nonzero:
            return "+"
        for pe in self.positive_exprs:
            if sympy.simplify(expr - pe) == 0:
                return "+"
            if sympy.simplify(expr + pe) == 0:
                return "-"
        return None


def _reduce_inequalities(sympy, entries, free_syms, facts: _SignFacts,
                         conditions: list[str]) -> str:
    """Impose entry >= 0 for each entry; returns 'ok' or 'contradiction'.

    Entries are factored; factors of known sign are stripped (flipping the
    required sign for negative ones).  A surviving bare symbol yields a
    "s >= 0" condition; a surviving expression affine in one symbol yields a
    one-sided bound on it.  Iterates until stable so that facts established
    by simple entries (e.g. positivity of a normalization coefficient)
    unlock the composite ones.
    """
    pending = [sympy.factor(sympy.expand(e)) for e in entries]
    pending = [e for e in pending if e != 0]
    for _ in range(len(pending) + 2):
        progress = False
        still = []
        for e in pending:
            sign = 1
            residue = []
            for fac, mult in sympy.factor(e).as_powers_dict().items():
                s = facts.sign_of(fac)
                if s == "0":
                    residue = []
                    break
                if s == "+":
                    continue
                if s == "-":
                    if mult % 2 == 1:
                        sign = -sign
                    continue
                if mult % 2 == 0:
                    continue  # even power: nonnegative
                residue.append(fac)
            if not residue:
                if sign < 0:
                    # product of known-sign factors strictly negative
                    return "contradiction"
                progress = True
                continue
            if len(residue) == 1:
                g = sympy.expand(sign * residue[0])
                gsyms = [s for s in g.free_symbols if s in free_syms]
                if len(gsyms) == 1 and sympy.degree(g, gsyms[0]) == 1:
                    s = gsyms[0]
                    a = g.coeff(s, 1)
                    b = g.coeff(s, 0)
                    sa = facts.sign_of(a)
                    if sa == "+":
                        bound = sympy.nsimplify(sympy.simplify(-b / a))
                        cond = f"{s} >= {bound}" if bound != 0 else f"{s} >= 0"
                        if cond not in conditions:
                            conditions.append(cond)
                        if bound == 0:
                            facts.nonneg.add(s)
                            if s in facts.nonzero:
                                facts.positive.add(s)
                        progress = True
                        continue
                    if sa == "-":
                        bound = sympy.nsimplify(sympy.simplify(-b / a))
                        cond = f"{s} <= {bound}"
                        if cond not in conditions:
                            conditions.append(cond)
                        # contradiction if s is known positive and bound <= 0
                        if facts.sign_of(sympy.expand(bound)) == "-" and \
                                s in facts.positive:
                            return "contradiction"
                        if bound == 0 and s in facts.positive:
                            return "contradiction"
                        progress = True
                        continue
            still.append(e)
        pending = still
        if not pending:
            return "ok"
        if not progress:
            break
    for e in pending:
        conditions.append(f"{sympy.nsimplify(e)} >= 0")
    return "ok"


def derive_singular_structure(model: ArcModel, m_max: int = 4,
                              tol: Tolerances = DEFAULT_TOL) -> GLCReport:
    """Derive the algebraic structure of a singular-arc family.

    Runs the stepwise test at the coefficient level: singularity conditions
    and odd-order equalities are solved as linear systems in the costate
    coefficients; the closure under the costate flow turns their invariance
    into linear conditions on the control values; the first surviving even
    order is reduced to sign conditions.  The verdict is "excluded" when the
    conditions force tr[H_d F] = 0 (no normal singular arc exists) or when
    the closing order fails parity/semidefiniteness, and "consistent"
    otherwise, with the full derived condition set attached.
    """
    sympy = _sym_modules()
    f_syms = list(model.costate_syms)
    u_syms = list(model.control_syms)
    basis = list(model.costate_basis)
    names_f = [str(s) for s in f_syms]

    facts = _SignFacts(sympy, model.positive_params, model.positive_exprs)

    F = sympy.zeros(*basis[0].shape)
    for s, tau in zip(f_syms, basis):
        F = F + s * tau
    u_subs = dict(model.pinned_controls)
    H_full = model.drift
    for s, h in zip(u_syms, model.partials):
        H_full = H_full + s * h

    # --- layer 1: linear conditions on the costate coefficients -------------
    f_rows = []           # rows over f_syms (sympy row lists)

    def add_f_conditions(exprs) -> bool:
        added = False
        for e in exprs:
            e = sympy.expand(e)
            if e == 0:
                continue
            row = [e.coeff(s) for s in f_syms]
            f_rows.append(row)
            added = True
        return added

    frame = model.frame()
    add_f_conditions([(hj * F).trace() for hj in frame])

    derived_eqs: list[str] = []
    u_conditions: list[str] = []
    notes: list[str] = []
    matrices: list[np.ndarray] = []

    def solve_f_layer():
        a = sympy.Matrix(f_rows)
        rref, pivots = a.rref()
        subs = {}
        rows_out = []
        for r in range(len(pivots)):
            row = rref.row(r)
            piv = pivots[r]
            expr = -sum(row[c] * f_syms[c] for c in range(len(f_syms)) if c != piv)
            subs[f_syms[piv]] = sympy.expand(expr)
            rows_out.append([row[c] for c in range(len(f_syms))])
        frees = [s for i, s in enumerate(f_syms) if i not in pivots]
        return subs, frees, rows_out

    f_subs, frees, rref_rows = solve_f_layer()

    # odd-order GLC at m = 1 (entries are u-independent on planar charts)
    q1 = _sym_q_matrix(sympy, list(model.partials), H_full, F, 1)
    q1_entries = [sympy.expand(q1[i, j].subs(f_subs))
                  for i in range(q1.rows) for j in range(q1.cols)]
    if any(e != 0 for e in q1_entries):
        # does imposing them contradict the normalization?
        add_f_conditions([q1[i, j] for i in range(q1.rows) for j in range(q1.cols)])
        f_subs, frees, rref_rows = solve_f_layer()

    norm_expr = sympy.expand((model.drift * F).trace().subs(f_subs))
    if norm_expr == 0:
        for row in rref_rows:
            derived_eqs.append(_fmt_equality(sympy, row, names_f))
        return GLCReport(
            matrices=(), order=1, parity_ok=False, sign_ok=False,
            verdict="excluded", derived_conditions=tuple(derived_eqs),
            notes=("singularity and first-order conditions force "
                   "tr[H_d F] = 0, contradicting the normalization of "
                   "normal protocols",))

    # normalization carrier: a single free coefficient with positive weight
    carrier = [s for s in frees if norm_expr.coeff(s) != 0]
    if len(carrier) == 1:
        facts.nonzero.add(carrier[0])
        if facts.sign_of(norm_expr.coeff(carrier[0])) == "+":
            facts.nonneg.add(carrier[0])  # sign fixed by tr[H_d F] = 1 > 0
            facts.positive.add(carrier[0])

    # --- layer 2: flow-invariance closure -> conditions on the controls -----
    def condition_operators():
        ops = [sympy.Matrix(h) for h in frame]
        for row in rref_rows:
            op = sympy.zeros(*basis[0].shape)
            for c, tau in zip(row, basis):
                if c != 0:
                    op = op + c * tau
            ops.append(op)
        return ops

    for _round in range(4):
        new_f = []
        u_rows = []
        H_cur = sympy.expand(H_full.subs(u_subs))
        F_cur = sympy.expand(F.subs(f_subs))
        for op in condition_operators():
            d_op = sympy.expand(-sympy.I * (op * H_cur - H_cur * op))
            expr = sympy.expand((d_op * F_cur).trace())
            for phi in frees:
                coef = sympy.expand(expr.coeff(phi))
                if coef == 0:
                    continue
                if not (set(coef.free_symbols) & set(u_syms)):
                    new_f.append(phi)  # coefficient is parameter-only: free dies
                else:
                    u_rows.append(coef)
        if new_f:
            add_f_conditions([sympy.Integer(1) * phi for phi in set(new_f)])
            f_subs, frees, rref_rows = solve_f_layer()
            continue
        if u_rows:
            active_u = [s for s in u_syms if s not in u_subs]
            a, b = sympy.linear_eq_to_matrix(u_rows, active_u)
            aug = a.row_join(b)
            rref, pivots = aug.rref()
            changed = False
            for r, piv in enumerate(pivots):
                if piv >= len(active_u):
                    continue
                rhs = rref[r, -1] - sum(
                    rref[r, c] * active_u[c]
                    for c in range(len(active_u)) if c != piv)
                if active_u[piv] not in u_subs:
                    u_subs[active_u[piv]] = sympy.expand(rhs)
                    changed = True
            if changed:
                continue
        break

    for row in rref_rows:
        derived_eqs.append(_fmt_equality(sympy, row, names_f))
    for s in model.control_syms:
        if s in u_subs and s not in model.pinned_controls:
            u_conditions.append(f"{s} = {sympy.nsimplify(u_subs[s])}")

    # --- layer 3: closing even order ----------------------------------------
    H_cur = sympy.expand(H_full.subs(u_subs))
    F_cur = sympy.expand(F.subs(f_subs))
    verdict = "inconclusive"
    order = None
    parity_ok = True
    sign_ok = True
    eigs: tuple = ()
    inequalities: list[str] = []
    for m in range(2, m_max + 1):
        q = _sym_q_matrix(sympy, list(model.partials), H_cur, F_cur, m)
        q = q.applyfunc(lambda e: sympy.expand(e))
        if all(e == 0 for e in q):
            continue
        order = m
        parity_ok = (m % 2 == 0)
        if not parity_ok:
            verdict = "excluded"
            break
        k = m // 2
        signed = ((-1) ** (k + 1)) * q  # require signed >= 0
        offdiag = [signed[i, j] for i in range(q.rows) for j in range(q.cols)
                   if i != j]
        if all(sympy.expand(e) == 0 for e in offdiag):
            entries = [signed[i, i] for i in range(q.rows)]
            outcome = _reduce_inequalities(
                sympy, entries, set(frees) | set(u_syms), facts, inequalities)
            sign_ok = outcome != "contradiction"
        else:
            notes.append("closing even order is not diagonal; "
                         "use the numeric GLC test at a concrete point")
            sign_ok = True
        verdict = "consistent" if sign_ok else "excluded"
        break

    conditions = tuple(derived_eqs + u_conditions + inequalities)
    return GLCReport(
        matrices=tuple(matrices), order=order, parity_ok=parity_ok,
        sign_ok=sign_ok, verdict=verdict, derived_conditions=conditions,
        eigenvalues_at_order=eigs, notes=tuple(notes))


@dataclass(frozen=True)
class BoundaryCase:
    """One piece of a quadratic boundary: coordinates pinned to zero, one
    coordinate eliminated through the constraint, the rest sampled."""
    name: str
    zero: tuple[int, ...]
    eliminate: int


def _flow_closure_rows(c: ConstraintSet, u: np.ndarray,
                       chart: ControlChart) -> np.ndarray:
    """Condition-operator coefficient rows, closed under C -> -i[C, H]."""
    basis = generalized_gellmann(c.dim)
    h = c.hamiltonian(u)
    ops = list(c.control_basis)
    for i in range(chart.n_controls):
        for j in range(i + 1, chart.n_controls):
            ops.append(commutator(chart.partials[i], chart.partials[j]))
    rows = [expand(op, basis) for op in ops]
    frontier = list(ops)
    rank = np.linalg.matrix_rank(np.stack(rows), tol=1e-9)
    for _ in range(len(basis)):
        new_ops = [commutator(op, h) for op in frontier]
        candidate = rows + [expand(op, basis) for op in new_ops]
        new_rank = np.linalg.matrix_rank(np.stack(candidate), tol=1e-9)
        if new_rank == rank:
            break
        rows = candidate
        frontier = new_ops
        rank = new_rank
    return np.stack(rows)


def boundary_closure_study(c: ConstraintSet, case: BoundaryCase, seed: int = 0,
                           n_samples: int = 8,
                           m_max: int = 4,
                           tol: Tolerances = DEFAULT_TOL) -> GLCReport:
    """Audit singular arcs pinned to a quadratic boundary piece.

    Samples points of the piece (zero-pattern respected, eliminated
    coordinate set from the constraint), reduces the chart there, closes the
    condition operators under the costate flow, and checks whether any
    costate in the surviving null space can carry tr[H_d F] = 1.  When no
    sampled point admits one the family is excluded outright; otherwise the
    numeric GLC test is run on the canonical surviving costate.
    """
    if not isinstance(c.kind, BallInCoords):
        raise ValidationError("boundary study needs a coefficient-ball constraint")
    rng = np.random.default_rng(seed)
    metric = np.asarray(c.kind.metric, float)
    r = c.kind.radius
    l = c.n_controls
    basis = generalized_gellmann(c.dim)
    phi = expand(c.drift, basis)
    names = c.control_names or tuple(f"u{j+1}" for j in range(l))

    free_idx = [j for j in range(l) if j not in case.zero and j != case.eliminate]
    worst_report: Optional[GLCReport] = None
    for _ in range(max(1, n_samples)):
        u = np.zeros(l)
        if free_idx:
            v = rng.standard_normal(len(free_idx))
            v *= (0.6 * r) * rng.uniform(0.2, 1.0) / np.linalg.norm(v)
            u[free_idx] = v
        # eliminated coordinate from u^T G u = r^2 (positive root)
        quad = float(u @ metric @ u)
        gee = metric[case.eliminate, case.eliminate]
        u[case.eliminate] = np.sqrt(max(r * r - quad, 0.0) / gee)
        full_chart = ControlChart(tuple(c.control_basis), u=u, names=names)
        red = boundary_reduce(full_chart, c.kind, case.eliminate)
        rows = _flow_closure_rows(c, u, red)
        _, s, vt = np.linalg.svd(rows)
        rank = int(np.sum(s > 1e-9 * s[0]))
        null = vt[rank:]
        if null.shape[0] == 0 or np.max(np.abs(null @ phi)) < 1e-9:
            continue  # no normalizable singular costate at this point
        # feasible: normalized costate and numeric GLC verdict
        weights = null @ phi
        vec = weights @ null
        coeffs = vec / float(vec @ phi * 2.0)  # tr[H_d F] = 2 phi . f
        from .sun_algebra import reconstruct
        f_star = reconstruct(coeffs, basis)
        h = c.hamiltonian(u)
        rep = glc_test(red, h, f_star, m_max=m_max, tol=tol,
                       costate_basis=basis)
        if rep.verdict != "excluded":
            return GLCReport(
                rep.matrices, rep.order, rep.parity_ok, rep.sign_ok,
                rep.verdict, rep.derived_conditions, rep.eigenvalues_at_order,
                rep.notes + (f"boundary piece '{case.name}' admits a "
                             "normalizable singular costate",))
        worst_report = rep
    if worst_report is not None:
        return GLCReport(
            worst_report.matrices, worst_report.order, worst_report.parity_ok,
            worst_report.sign_ok, "excluded",
            worst_report.derived_conditions,
            worst_report.eigenvalues_at_order,
            worst_report.notes + (
                f"boundary piece '{case.name}': surviving costates fail the "
                "even-order semidefiniteness test",))
    return GLCReport(
        matrices=(), order=None, parity_ok=True, sign_ok=True,
        verdict="excluded", derived_conditions=(),
        notes=(f"boundary piece '{case.name}': flow closure of the "
               "singularity and first-order conditions leaves no costate "
               "compatible with tr[H_d F] = 1",))
