"""Regular time-optimal protocols: closed forms and shooting.

Closed forms
------------
With no drift and a full control subspace, extremals are geodesics: the
Hamiltonian is the (scaled) principal logarithm of the target and T is the
log norm over the speed bound.  With a drift and a norm-bounded free
control (quantum Zermelo navigation), transfer to the interaction picture
reduces the problem to the drift-free one, giving

    H(t) = H_d + e^{-i H_d t} H_c(0) e^{i H_d t},
    U(t) = e^{-i H_d t} e^{-i H_c(0) t},

with H_c(0) found from a scalar root: the smallest T > 0 such that the
principal log of e^{i H_d T} U_f has norm exactly omega * T.

Shooting
--------
For general constraints the two-point boundary problem is solved by single
shooting over the initial costate coefficients and the final time, with the
control eliminated pointwise through the maximizer of -1 + tr[H F].  The
boundary mismatch is charted smoothly through the anti-Hermitian part of
U(T) U_f^dagger plus a trace-deficit entry (no logarithm branch cuts inside
the iteration); a trust-region least-squares iteration with a
finite-difference Jacobian closes the system.  Results are extremals of the
necessary conditions, not certified global optima; among converged starts
the minimal-time one is reported and all converged times are listed.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .constraint_model import (
    BallInCoords,
    Box,
    ConstraintSet,
    MaximizerResult,
    Typical,
    maximizer,
)
from .dynamics import (
    BoundaryResidual,
    ConservationReport,
    Protocol,
    Trajectory,
    boundary_residual,
    conservation_report,
    evolve_costate,
    evolve_unitary,
    protocol_from_function,
)
from .errors import DegenerateProblemError, NotConvergedError, ValidationError
from .sun_algebra import (
    BranchAmbiguityError,
    dagger,
    exp_op,
    expand,
    generalized_gellmann,
    hs_norm,
    inner,
    log_op,
    reconstruct,
    traceless,
)
from .tolerances import DEFAULT_TOL, Tolerances

__all__ = [
    "ShootingOptions",
    "ShootingProblem",
    "SolveResult",
    "AuditReport",
    "drift_free_geodesic",
    "zermelo_solution",
    "zermelo_solve",
    "interaction_picture_reduce",
    "solve_shooting",
    "qb_consistency_audit",
]


@dataclass(frozen=True)
class ShootingOptions:
    """Knobs of the shooting solver.

    ``grid_points`` is the cell count of the solve grid; the returned
    trajectory is rebuilt on ``refine_points`` cells so conserved traces
    hold to the conservation tolerance.  ``multistarts`` seeds are tried
    (deterministically derived from ``seed``); the scan stops early once
    ``stop_after_converged`` extremals have converged.  ``workers`` > 1
    runs starts concurrently; results are reduced deterministically either
    way.
    """

    grid_points: int = 128
    multistarts: int = 32
    seed: int = 0
    residual_tol: float = 1e-7
    stop_after_converged: int = 6
    refine_points: int = 16384
    max_time: Optional[float] = None
    workers: int = 1
    midpoint_corrector: bool = True
    max_nfev: int = 400


@dataclass(frozen=True, eq=False)
class ShootingProblem:
    constraint: ConstraintSet
    target: np.ndarray
    options: ShootingOptions = ShootingOptions()


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of a solve: protocol, trajectory and diagnostics.

    ``residual`` is the phase-insensitive fidelity residual of the final
    refined trajectory against the target; ``exact_residual`` the Frobenius
    mismatch.  ``extremal_times`` lists every converged final time across
    the multistart (the reported protocol is the minimal one).
    """

    converged: bool
    T: float
    residual: float
    exact_residual: float
    protocol: Optional[Protocol]
    trajectory: Optional[Trajectory]
    costate0: Optional[np.ndarray]
    conservation: Optional[ConservationReport]
    singular_intervals: tuple[tuple[float, float], ...]
    seed: int
    n_starts: int
    extremal_times: tuple[float, ...] = ()
    message: str = ""

    def as_dict(self) -> dict:
        out = {
            "converged": self.converged,
            "T": self.T,
            "residual": self.residual,
            "exact_residual": self.exact_residual,
            "seed": self.seed,
            "n_starts": self.n_starts,
            "extremal_times": list(self.extremal_times),
            "singular_intervals": [list(i) for i in self.singular_intervals],
            "message": self.message,
        }
        if self.protocol is not None:
            from .io_formats import constraint_to_json, matrix_to_json
            out["protocol"] = {
                "grid": self.protocol.grid.tolist(),
                "controls": self.protocol.controls.tolist(),
                # embedded so the protocol block is directly re-usable as an
                # evolve input artifact
                "constraint": constraint_to_json(self.protocol.constraint),
            }
            if self.costate0 is not None:
                out["protocol"]["costate0"] = matrix_to_json(self.costate0)
        if self.conservation is not None:
            out["conservation"] = self.conservation.as_dict()
        if self.costate0 is not None:
            out["costate0_coefficients"] = expand(
                self.costate0, generalized_gellmann(self.costate0.shape[0])
            ).tolist()
        return out


def _expm_step(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i dt H) for small Hermitian H (closed form for 2x2)."""
    if h.shape[0] == 2:
        a = 0.5 * (h[0, 0] + h[1, 1]).real
        bx = h[0, 1].real
        by = -h[0, 1].imag
        bz = 0.5 * (h[0, 0] - h[1, 1]).real
        r = np.sqrt(bx * bx + by * by + bz * bz)
        phase = np.exp(-1j * dt * a)
        if r < 1e-300:
            return phase * np.eye(2)
        c, s = np.cos(dt * r), np.sin(dt * r) / r
        return phase * np.array([
            [c - 1j * s * bz, -1j * s * (bx - 1j * by)],
            [-1j * s * (bx + 1j * by), c + 1j * s * bz],
        ])
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * dt * w)) @ dagger(v)


def drift_free_geodesic(target: np.ndarray, omega: float,
                        tol: Tolerances = DEFAULT_TOL) -> dict:
    """Constant-Hamiltonian geodesic reaching the target at full speed.

    Returns the Hamiltonian (norm omega under the induced norm) and the
    minimal time T = ||log target|| / omega along the principal branch.
    The identity target returns T = 0 with H = 0.
    """
    if omega <= 0:
        raise ValidationError("omega must be positive")
    n = target.shape[0]
    l = log_op(target, tol)
    nrm = hs_norm(l)
    if nrm < 1e-14:
        return {"H": np.zeros((n, n), dtype=complex), "T": 0.0}
    h = omega * l / nrm
    return {"H": h, "T": nrm / omega}


def zermelo_solution(drift: np.ndarray, hc0: np.ndarray, t: float) -> dict:
    """Closed-form navigation flow at time t for a given initial control.

    H(t) = H_d + e^{-i H_d t} H_c(0) e^{i H_d t};
    U(t) = e^{-i H_d t} e^{-i H_c(0) t}.  The control norm is constant.
    """
    frame = exp_op(drift, t)          # e^{-i H_d t}
    h_t = drift + frame @ hc0 @ dagger(frame)
    u_t = frame @ exp_op(hc0, t)
    return {"H_t": h_t, "U_t": u_t}


def _full_subspace_constraint(drift: np.ndarray, omega: float) -> ConstraintSet:
    n = drift.shape[0]
    return ConstraintSet(n, drift, tuple(generalized_gellmann(n)), Typical(omega))


def _merge_intervals(grid: np.ndarray, cells: list[int]) -> tuple[tuple[float, float], ...]:
    if not cells:
        return ()
    spans = []
    start = prev = cells[0]
    for c in cells[1:]:
        if c == prev + 1:
            prev = c
            continue
        spans.append((float(grid[start]), float(grid[prev + 1])))
        start = prev = c
    spans.append((float(grid[start]), float(grid[prev + 1])))
    return tuple(spans)


def zermelo_solve(drift: np.ndarray, omega: float, target: np.ndarray,
                  options: ShootingOptions = ShootingOptions(),
                  tol: Tolerances = DEFAULT_TOL) -> SolveResult:
    """Solve the navigation problem (full control subspace, norm <= omega).

    Scans T for the smallest positive root of
    ||log(e^{i H_d T} U_f)|| = omega T (bracketing + bisection), recovers
    H_c(0) from the principal log at the root, and reproduces the motion on
    a dense midpoint-sampled grid with the exact costate F = lambda_0 H_c.
    """
    if omega <= 0:
        raise ValidationError("omega must be positive")
    n = drift.shape[0]
    constraint = _full_subspace_constraint(drift, omega)

    res_id = 1.0 - abs(np.trace(target)) / n
    if res_id < 1e-14 and np.max(np.abs(target - np.eye(n))) < 1e-10:
        return SolveResult(True, 0.0, 0.0, 0.0, None, None, None, None, (),
                           options.seed, 0, (0.0,), "target is the identity")

    def log_norm(t_val: float) -> float:
        w = exp_op(drift, -t_val) @ target      # e^{i H_d t} U_f
        return hs_norm(log_op(w, tol))

    try:
        l0 = hs_norm(log_op(target, tol))
    except BranchAmbiguityError:
        l0 = np.pi * np.sqrt(n)
    speed_slack = max(omega - hs_norm(drift), omega / 8.0)
    t_max = options.max_time if options.max_time is not None else \
        (l0 + 2.0 * np.pi) / speed_slack

    n_scan = 4096
    ts = np.linspace(t_max / n_scan, t_max, n_scan)
    gs = np.full(n_scan, np.nan)
    for i, t_val in enumerate(ts):
        try:
            gs[i] = log_norm(t_val) - omega * t_val
        except BranchAmbiguityError:
            continue

    root = None
    prev_t, prev_g = 0.0, l0   # g(0+) = ||log U_f|| > 0
    for t_val, g in zip(ts, gs):
        if np.isnan(g):
            prev_t, prev_g = t_val, np.nan
            continue
        if not np.isnan(prev_g) and prev_g > 0.0 >= g:
            lo, hi = prev_t, t_val
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                try:
                    gm = log_norm(mid) - omega * mid
                except BranchAmbiguityError:
                    mid = lo + 0.49 * (hi - lo)
                    gm = log_norm(mid) - omega * mid
                if gm > 0:
                    lo = mid
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
            break
        prev_t, prev_g = t_val, g
    if root is None:
        return SolveResult(False, float("nan"), 1.0, float("nan"), None, None,
                           None, None, (), options.seed, 0, (),
                           f"no root of the log-norm equation below T = {t_max:.4g}")

    t_star = float(root)
    w = exp_op(drift, -t_star) @ target
    hc0 = log_op(w, tol) / t_star

    # verify the closed form hits the target
    endpoint = exp_op(drift, t_star) @ exp_op(hc0, t_star)
    fid = 1.0 - abs(np.trace(dagger(target) @ endpoint)) / n
    if fid > 1e3 * tol.residual:
        return SolveResult(False, t_star, float(fid), float(np.linalg.norm(endpoint - target)),
                           None, None, None, None, (), options.seed, 0, (),
                           "root found but closed form misses the target")

    grid = np.linspace(0.0, t_star, options.refine_points + 1)
    basis = constraint.control_basis

    def controls_at(t_val: float) -> np.ndarray:
        frame = exp_op(drift, t_val)
        hc = frame @ hc0 @ dagger(frame)
        return np.array([inner(hc, b) for b in basis])

    protocol = protocol_from_function(constraint, grid, controls_at,
                                      sampling="midpoint")
    traj = evolve_unitary(protocol)
    denom = float(np.trace(drift @ hc0).real) + 2.0 * omega ** 2
    message = ""
    if denom <= 0:
        message = "normalization weight non-positive; costate left unscaled"
        lam0 = 1.0
    else:
        lam0 = 1.0 / denom
    f0 = lam0 * hc0
    traj = evolve_costate(f0, traj)
    report = conservation_report(traj)
    br = boundary_residual(traj, target)
    return SolveResult(
        converged=bool(br.fidelity < tol.residual),
        T=t_star, residual=br.fidelity, exact_residual=br.exact,
        protocol=protocol, trajectory=traj, costate0=f0,
        conservation=report, singular_intervals=(), seed=options.seed,
        n_starts=1, extremal_times=(t_star,), message=message)


def interaction_picture_reduce(c: ConstraintSet, n_phases: int = 16,
                               tol: float = 1e-9) -> dict:
    """Check whether the constraint survives transfer to the drift frame.

    The bound must be conjugation invariant (only the Hilbert-Schmidt ball
    kind is) and the control subspace must be mapped into itself by
    e^{i H_d s}, checked numerically at ``n_phases`` sample phases.  When
    reducible, the same constraint with zero drift governs the problem in
    the interaction picture.
    """
    if not isinstance(c.kind, Typical):
        return {"reducible": False, "reduced": None,
                "reason": "bound is not conjugation invariant"}
    drift_scale = hs_norm(c.drift)
    if drift_scale < 1e-14:
        reduced = ConstraintSet(c.dim, np.zeros_like(c.drift), c.control_basis,
                                c.kind, c.control_names)
        return {"reducible": True, "reduced": reduced, "reason": "drift-free"}
    span = c.control_span
    period = 2.0 * np.pi / drift_scale
    for k in range(1, n_phases + 1):
        s = k * period / n_phases
        frame = exp_op(c.drift, -s)       # e^{i H_d s}
        for b in c.control_basis:
            conj = frame @ b @ dagger(frame)
            res = hs_norm(conj - sum(inner(conj, e) * e for e in span))
            if res > tol:
                return {"reducible": False, "reduced": None,
                        "reason": f"conjugation leaves the subspace "
                                  f"(residual {res:.2e} at phase {s:.3g})"}
    reduced = ConstraintSet(c.dim, np.zeros_like(c.drift), c.control_basis,
                            c.kind, c.control_names)
    return {"reducible": True, "reduced": reduced,
            "reason": "subspace invariant under the drift frame"}


def _coupled_flow(constraint: ConstraintSet, f0: np.ndarray, t_final: float,
                  n_cells: int, corrector: bool = True,
                  record: bool = False):
    """March the maximizer-consistent flow: H from F pointwise, F by
    conjugation.  Singular cells hold the previous control (drift alone on a
    leading singular stretch)."""
    from .dynamics import reunitarize

    n = constraint.dim
    u_mat = np.eye(n, dtype=complex)
    f = f0
    dt = t_final / n_cells
    l = constraint.n_controls
    controls = np.zeros((n_cells, l)) if record else None
    singular_cells: list[int] = []
    prev_h = None
    prev_u = np.zeros(l)

    # fused maximizer for the Hilbert-Schmidt ball kind (the hot path)
    typical = isinstance(constraint.kind, Typical)
    if typical:
        span = constraint.control_span
        omega = constraint.kind.omega
        drift = constraint.drift
        sing_tol = DEFAULT_TOL.singular

        def maximize(fmat):
            coeffs = 0.5 * np.einsum("ab,iba->i", fmat, span).real
            nrm = float(np.linalg.norm(coeffs))
            if nrm < sing_tol:
                return None
            scaled = (omega / nrm) * coeffs
            return drift + np.einsum("i,iab->ab", scaled, span), scaled
    else:
        def maximize(fmat):
            mr = maximizer(fmat, constraint)
            if mr.singular:
                return None
            return mr.hamiltonian, mr.controls

    for k in range(n_cells):
        out = maximize(f)
        if out is None:
            h = prev_h if prev_h is not None else constraint.drift
            uk = prev_u
            singular_cells.append(k)
        else:
            h, uk = out
            if corrector:
                half = _expm_step(h, 0.5 * dt)
                out2 = maximize(half @ f @ half.conj().T)
                if out2 is not None:
                    h, uk = out2
        step = _expm_step(h, dt)
        u_mat = step @ u_mat
        if (k + 1) % 64 == 0:
            u_mat = reunitarize(u_mat)
            f = u_mat @ f0 @ u_mat.conj().T
        else:
            f = step @ f @ step.conj().T
        prev_h, prev_u = h, uk
        if record:
            controls[k] = uk
    return u_mat, f, prev_h, controls, singular_cells


def _normalize_seed(constraint: ConstraintSet, f0: np.ndarray) -> Optional[np.ndarray]:
    mr = maximizer(f0, constraint)
    if mr.singular:
        return None
    c0 = float(np.trace(mr.hamiltonian @ f0).real)
    if c0 <= 1e-9:
        return None
    return f0 / c0


def _time_scale_estimate(problem: ShootingProblem, tol: Tolerances) -> float:
    c = problem.constraint
    if isinstance(c.kind, Typical):
        speed = c.kind.omega
    elif isinstance(c.kind, Box):
        speed = float(np.max(np.abs(np.concatenate([c.kind.lo, c.kind.hi]))))
    else:
        speed = c.kind.radius
    speed = max(speed + hs_norm(c.drift), 1e-9)
    try:
        l0 = hs_norm(log_op(problem.target, tol))
    except BranchAmbiguityError:
        l0 = np.pi * np.sqrt(c.dim)
    return max(l0 / speed, 1e-3)


def _single_start(problem: ShootingProblem, start_index: int,
                  t_init: float, t_hi: float,
                  rng: np.random.Generator, tol: Tolerances):
    c = problem.constraint
    n = c.dim
    basis = generalized_gellmann(n)
    opts = problem.options
    k_cells = opts.grid_points
    target_dag = dagger(problem.target)

    f0 = None
    for _ in range(64):
        cand = reconstruct(rng.standard_normal(n * n - 1), basis)
        cand = _normalize_seed(c, cand)
        if cand is not None:
            f0 = cand
            break
    if f0 is None:
        return None

    x0 = np.concatenate([expand(f0, basis), [t_init]])
    lo = np.full(n * n, -np.inf)
    hi = np.full(n * n, np.inf)
    lo[-1] = 1e-6 * t_init
    hi[-1] = t_hi

    def residual_on(cells: int, corrector: bool):
        def residual(x):
            f_seed = reconstruct(x[:-1], basis)
            f_seed = _normalize_seed(c, f_seed)
            if f_seed is None:
                return np.full(n * n + 1, 10.0 + float(np.linalg.norm(x)))
            t_val = x[-1]
            u_t, f_t, h_last, _, sing = _coupled_flow(
                c, f_seed, t_val, cells, corrector=corrector)
            if len(sing) > cells // 2:
                return np.full(n * n + 1, 10.0)
            m = u_t @ target_dag
            sine = traceless((m - dagger(m)) / 2j)
            r = expand(sine, basis)
            trace_deficit = n - float(np.trace(m).real)
            mr = maximizer(f_t, c)
            h_fin = mr.hamiltonian if not mr.singular else h_last
            norm_res = float(np.trace(h_fin @ f_t).real) - 1.0
            return np.concatenate([r, [trace_deficit, norm_res]])
        return residual

    # coarse sweep to locate the extremal, then polish on the solve grid
    k_coarse = max(32, k_cells // 3)
    sol = least_squares(residual_on(k_coarse, False), x0, bounds=(lo, hi),
                        method="trf", xtol=1e-11, ftol=1e-11, gtol=1e-11,
                        max_nfev=opts.max_nfev // 2)
    sol = least_squares(residual_on(k_cells, opts.midpoint_corrector), sol.x,
                        bounds=(lo, hi), method="trf", xtol=1e-14, ftol=1e-14,
                        gtol=1e-14, max_nfev=opts.max_nfev // 2)
    x = sol.x
    f_star = _normalize_seed(c, reconstruct(x[:-1], basis))
    if f_star is None:
        return None
    t_star = float(x[-1])
    u_t, _, _, _, sing = _coupled_flow(c, f_star, t_star, k_cells,
                                       corrector=opts.midpoint_corrector)
    fid = 1.0 - abs(np.trace(target_dag @ u_t)) / n
    exact = float(np.linalg.norm(u_t - problem.target))
    converged = fid < max(10.0 * tol.residual, opts.residual_tol)
    return {
        "start": start_index, "f0": f_star, "T": t_star, "fidelity": float(fid),
        "exact": exact, "converged": bool(converged),
        "singular_cells": len(sing),
    }


def solve_shooting(problem: ShootingProblem,
                   tol: Tolerances = DEFAULT_TOL) -> SolveResult:
    """Multistart single shooting for the boundary-value problem.

    Each start draws costate coefficients from a unit normal, rescales so
    tr[H(0) F(0)] = 1, and solves for (F(0), T) by trust-region least
    squares on the smooth boundary chart plus the final-time normalization
    residual.  Among converged starts the minimal-T extremal is refined on
    a dense grid and returned; all converged times are reported.

    Raises
    ------
    DegenerateProblemError
        when the best attempt spent most of the horizon on singular cells;
        such problems need the singular-arc analysis, not shooting.
    """
    opts = problem.options
    c = problem.constraint
    n = c.dim

    res_id = np.max(np.abs(problem.target - np.eye(n)))
    if res_id < 1e-12:
        return SolveResult(True, 0.0, 0.0, 0.0, None, None, None, None, (),
                           opts.seed, 0, (0.0,), "target is the identity")

    t0 = _time_scale_estimate(problem, tol)
    t_hi = opts.max_time if opts.max_time is not None else \
        max(6.0 * t0, t0 + 4.0 * np.pi / max(hs_norm(c.drift) + 1e-9, 1.0))

    seeds = np.random.SeedSequence(opts.seed).spawn(opts.multistarts)
    jitters = [1.0] + [None] * (opts.multistarts - 1)

    def run_start(i: int):
        rng = np.random.default_rng(seeds[i])
        jitter = 1.0 if i == 0 else float(rng.uniform(0.7, 1.8))
        return _single_start(problem, i, min(jitter * t0, 0.9 * t_hi), t_hi,
                             rng, tol)

    attempts = []
    n_converged = 0
    n_run = 0
    if opts.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(opts.workers) as pool:
            batch = max(opts.workers, opts.stop_after_converged)
            i = 0
            while i < opts.multistarts and n_converged < opts.stop_after_converged:
                idx = list(range(i, min(i + batch, opts.multistarts)))
                for out in pool.map(run_start, idx):
                    n_run += 1
                    if out is not None:
                        attempts.append(out)
                        if out["converged"]:
                            n_converged += 1
                i = idx[-1] + 1
    else:
        for i in range(opts.multistarts):
            out = run_start(i)
            n_run += 1
            if out is not None:
                attempts.append(out)
                if out["converged"]:
                    n_converged += 1
                    if n_converged >= opts.stop_after_converged:
                        break

    if not attempts:
        return SolveResult(False, float("nan"), 1.0, float("nan"), None, None,
                           None, None, (), opts.seed, n_run, (),
                           "all starts failed to draw a regular seed")

    converged = [a for a in attempts if a["converged"]]
    if not converged:
        best = min(attempts, key=lambda a: a["fidelity"])
        if best["singular_cells"] > opts.grid_points // 2:
            raise DegenerateProblemError(
                "maximizer singular on most cells of the best attempt; run "
                "the singular-arc analysis instead of shooting")
        return SolveResult(False, best["T"], best["fidelity"], best["exact"],
                           None, None, None, None, (), opts.seed, n_run, (),
                           "no start converged; best residual reported")

    best = min(converged, key=lambda a: (round(a["T"], 9), a["fidelity"]))
    times = tuple(sorted({round(a["T"], 6) for a in converged}))

    # dense rebuild of the winning extremal
    k_fine = opts.refine_points
    u_t, _, _, controls, singular_cells = _coupled_flow(
        c, best["f0"], best["T"], k_fine, corrector=opts.midpoint_corrector,
        record=True)
    grid = np.linspace(0.0, best["T"], k_fine + 1)
    protocol = Protocol(c, grid, controls)
    traj = evolve_costate(best["f0"], evolve_unitary(protocol))
    report = conservation_report(traj)
    br = boundary_residual(traj, problem.target)
    return SolveResult(
        converged=bool(br.fidelity < opts.residual_tol),
        T=best["T"], residual=br.fidelity, exact_residual=br.exact,
        protocol=protocol, trajectory=traj, costate0=best["f0"],
        conservation=report,
        singular_intervals=_merge_intervals(grid, singular_cells),
        seed=opts.seed, n_starts=n_run, extremal_times=times,
        message="extremal of the necessary conditions (not a global certificate)")


@dataclass(frozen=True)
class AuditReport:
    """Worst-case violations of the necessary conditions on a trajectory."""
    max_condition_violation: float
    normalization_drift: float
    costate_flow_violation: float
    cells_checked: int

    def as_dict(self) -> dict:
        return {
            "max_condition_violation": self.max_condition_violation,
            "normalization_drift": self.normalization_drift,
            "costate_flow_violation": self.costate_flow_violation,
            "cells_checked": self.cells_checked,
        }


def _random_admissible(c: ConstraintSet, rng: np.random.Generator) -> np.ndarray:
    l = c.n_controls
    if isinstance(c.kind, Typical):
        w = rng.standard_normal(l)
        w /= np.linalg.norm(w)
        scale = c.kind.omega * rng.uniform() ** (1.0 / l)
        u = scale * w
    elif isinstance(c.kind, Box):
        u = rng.uniform(np.asarray(c.kind.lo, float), np.asarray(c.kind.hi, float))
    else:
        g = np.asarray(c.kind.metric, float)
        w = rng.standard_normal(l)
        w /= np.sqrt(w @ g @ w)
        u = c.kind.radius * rng.uniform() ** (1.0 / l) * w
    return c.hamiltonian(u)


def qb_consistency_audit(result: SolveResult, samples: int = 64,
                         seed: int = 0, max_cells: int = 256) -> AuditReport:
    """Audit a converged result against the necessary conditions.

    Checks, on a subsample of grid cells: (a) the maximum condition
    tr[K F] <= tr[H F] for random admissible K; (b) the normalization
    tr[H F] = 1; (c) the costate flow (each step must conjugate the costate
    with the cell propagator exactly).
    """
    if result.trajectory is None or result.trajectory.costates is None:
        raise ValidationError("audit needs a trajectory with costates")
    traj = result.trajectory
    protocol = traj.protocol
    c = protocol.constraint
    rng = np.random.default_rng(seed)
    k_total = protocol.n_cells
    stride = max(1, k_total // max_cells)
    cells = range(0, k_total, stride)
    hs = protocol.hamiltonians()
    fs = traj.costates

    worst_max = -np.inf
    worst_norm = 0.0
    worst_flow = 0.0
    checked = 0
    for k in cells:
        h, f = hs[k], fs[k]
        hf = float(np.trace(h @ f).real)
        worst_norm = max(worst_norm, abs(hf - 1.0))
        for _ in range(samples):
            kand = _random_admissible(c, rng)
            worst_max = max(worst_max, float(np.trace(kand @ f).real) - hf)
        dt = protocol.grid[k + 1] - protocol.grid[k]
        step = _expm_step(h, dt)
        worst_flow = max(worst_flow, float(np.max(np.abs(
            fs[k + 1] - step @ f @ dagger(step)))))
        checked += 1
    return AuditReport(
        max_condition_violation=float(max(worst_max, 0.0)),
        normalization_drift=worst_norm,
        costate_flow_violation=worst_flow,
        cells_checked=checked)
