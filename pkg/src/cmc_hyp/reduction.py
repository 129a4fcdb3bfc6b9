"""Finite-dimensional reduction to the ball-center coordinate.

``correct`` solves the projected problem at fixed ``(eps, q)``: it finds the
correction ``nu`` orthogonal to the nine tangent generators together with
multipliers ``(xi, alpha)`` so that the curvature residual of ``U_q + nu``
lies entirely in the generator span.  A chord iteration with the linearized
operator frozen at the unperturbed sphere does the work; the bordered modal
matrix is factorized once per ``(grid, k)`` and shared across base points,
since moving ``q`` only rescales the operator.

``solve_bubble`` then drives the reduced gradient -- an explicit linear
expression in the multipliers -- to zero over ``q``; at such points the
multipliers themselves vanish and the corrected surface solves the full
prescribed-curvature problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import chart as ch
from .bubbles import C0, bubble, make_params, tangent_frame
from .chart import SphereField
from .defaults import DEFAULTS
from .energy import conformality_residual, energy_E, first_variation
from .errors import ConvergenceError, NoCriticalPointError
from .halfspace import HyperbolicPoint
from .linearized import _j_nodal, j_residual, operator_pack
from .melnikov import f_gradient, f_value, find_critical


@dataclass
class ReductionState:
    """Converged data of the projected problem at ``(eps, q)``.

    ``nu`` is the correction field (exact modal derivatives attached),
    ``xi``/``alpha`` the generator multipliers; ``residual_norm`` is the sup
    norm of the projected-equation residual at the nodes and
    ``constraint_defect`` the worst orthogonality violation.
    """

    eps: float
    q: HyperbolicPoint
    nu: SphereField
    nu_modal: np.ndarray
    xi: np.ndarray
    alpha: np.ndarray
    residual_norm: float
    constraint_defect: float
    iterations: int
    converged: bool


@dataclass
class ReducedGradientData:
    M_k: np.ndarray          # 3 x 6
    Theta_k: np.ndarray      # 3 x 3
    sigma: np.ndarray        # 3 x 6, Theta^-1 M
    A_eps: np.ndarray        # 6 x 6
    grad_q: np.ndarray       # 3
    grad_fd: np.ndarray | None = None


@lru_cache(maxsize=4)
def _bordered_lu(n, k, degree):
    pack = operator_pack(ch.build_grid(n), make_params(k), degree)
    m = pack.H_vec.shape[0]
    KKT = np.zeros((m + 9, m + 9))
    KKT[:m, :m] = pack.H_vec
    KKT[:m, m:] = -pack.frame_modal.T
    KKT[m:, :m] = pack.frame_modal
    return sla.lu_factor(KKT)


def _frame_nodal_columns(pack):
    grid = pack.grid
    frame = pack.frame
    cols = [t.values for t in frame.tau]
    cols += [frame.gamma[:, ell, None] * grid.omega for ell in range(3)]
    return cols


def _surface_jet(params, q, grid, pack, c):
    """Values and derivative jets of ``U_q + nu`` for modal coefficients c."""
    U = bubble(params, q, grid)
    nv, ndx, ndy = pack.nodal_vector_jet(c)
    vals = U.values + nv
    dx = U.dx + ndx
    dy = U.dy + ndy
    sxx, sxy, syy = U.surface.second(grid.nodes)
    nxx, _ = ch.spectral_derivatives(grid, ndx)
    _, nyy = ch.spectral_derivatives(grid, ndy)
    return vals, dx, dy, sxx + nxx, syy + nyy


def correct(eps, q, phi, params, grid, tol=None, max_iter=None, warm=None,
            degree=None):
    """Solve the projected problem at ``(eps, q)`` by a chord iteration.

    The Jacobian is frozen at the unperturbed sphere (where the implicit
    problem is exactly linear), so each step costs one triangular solve of
    the cached bordered factorization; the orthogonality constraints are
    enforced inside the solve and stay at roundoff.  At ``eps = 0`` the
    iteration returns the zero correction immediately.
    """
    if tol is None:
        tol = DEFAULTS["newton_residual"]
    if max_iter is None:
        max_iter = DEFAULTS["newton_max_iter"]
    q = HyperbolicPoint.of(q)
    pack = operator_pack(grid, params, degree)
    lu = _bordered_lu(grid.n, params.k, pack.degree)
    nm3 = pack.H_vec.shape[0]
    gens = _frame_nodal_columns(pack)
    mu2 = grid.mu[:, None] ** 2
    scale = q.p3**2 * params.r**2

    c = np.zeros(nm3) if warm is None else warm.nu_modal.copy()
    m = np.zeros(9) if warm is None else np.concatenate([warm.xi, warm.alpha])

    sup = np.inf
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        vals, dx, dy, dxx, dyy = _surface_jet(params, q, grid, pack, c)
        J = _j_nodal(vals, dx, dy, dxx, dyy, params, phi, eps)
        F1 = J / mu2
        for mj, gen in zip(m, gens):
            F1 = F1 - mj * gen
        rmod = pack.project_vector(F1)
        R2 = pack.frame_modal @ c
        sup = float(np.max(np.abs(F1)))
        if np.linalg.norm(rmod) <= tol and np.max(np.abs(R2)) <= tol:
            converged = True
            break
        rhs = np.concatenate([-scale * rmod, -R2])
        delta = sla.lu_solve(lu, rhs)
        c = c + delta[:nm3]
        m = m + delta[nm3:] / scale
    if not converged:
        raise ConvergenceError(
            f"projected solve stalled at residual {sup:.3e} after {it} steps")

    nv, ndx, ndy = pack.nodal_vector_jet(c)
    nu = SphereField(grid, nv, ndx, ndy)
    return ReductionState(
        eps=eps, q=q, nu=nu, nu_modal=c, xi=m[:6].copy(), alpha=m[6:].copy(),
        residual_norm=sup,
        constraint_defect=float(np.max(np.abs(pack.frame_modal @ c))),
        iterations=it, converged=True)


def corrected_surface(state, params):
    """The surface ``U_q + nu`` as a field with first-derivative slots."""
    grid = state.nu.grid
    U = bubble(params, state.q, grid)
    return SphereField(grid, U.values + state.nu.values,
                       U.dx + state.nu.dx, U.dy + state.nu.dy)


def constant_matrices(params):
    """The two constant matrices relating multipliers to the reduced gradient.

    They encode the frame decompositions of the translation directions:
    ``2 c0 e1 = tau1 - tau5 + gamma1 omega / k`` and
    ``2 c0 e2 = tau2 + tau6 + gamma2 omega / k`` (note the opposite signs of
    the two quadratic flows, forced by the chart identities and confirmed by
    differencing the reduced energy directly).
    """
    k, r = params.k, params.r
    M = np.zeros((3, 6))
    M[0, 0], M[0, 4] = 1.0, -1.0
    M[1, 1], M[1, 5] = 1.0, 1.0
    M[2, 2] = np.sqrt(2.0) * k * r
    Theta = np.diag([k, k, (k * k + 3.0) * r])
    return M, Theta


def _correction_flows(grid, nu):
    """The six reparametrization flows of the correction field."""
    x, y = grid.nodes[:, 0], grid.nodes[:, 1]
    dx, dy = nu.dx, nu.dy
    s2 = np.sqrt(2.0)
    return [
        C0 * dx,
        C0 * dy,
        C0 * s2 * (x[:, None] * dx + y[:, None] * dy),
        C0 * s2 * (-y[:, None] * dx + x[:, None] * dy),
        C0 * ((x * x - y * y)[:, None] * dx + (2 * x * y)[:, None] * dy),
        C0 * ((-2 * x * y)[:, None] * dx + (x * x - y * y)[:, None] * dy),
    ]


def reduced_gradient(state, phi, params, fd_check=False, fd_step=1e-3,
                     grid=None):
    """Gradient of the reduced energy at the state's base point.

    The gradient is the constant-matrix expression in the multipliers; with
    ``fd_check`` it is also differenced directly through re-corrected
    energies at shifted base points, and the interaction matrix ``A_eps``
    (which contracts to zero with ``eps``) is always reported.
    """
    if not state.converged:
        raise ValueError("stale state: the corrector did not converge")
    grid = grid or state.nu.grid
    M, Theta = constant_matrices(params)
    grad = (M @ state.xi + Theta @ state.alpha) / (2.0 * C0)
    frame = tangent_frame(params, grid)
    sigma = np.linalg.solve(Theta, M)
    flows = _correction_flows(grid, state.nu)
    w = grid.weights
    om = grid.omega
    A = np.empty((6, 6))
    for j, fl in enumerate(flows):
        fo = np.einsum("ij,ij->i", fl, om)
        for h in range(6):
            A[j, h] = np.sum(w * np.einsum("ij,ij->i", frame.tau[h].values, fl))
            A[j, h] -= sum(sigma[ell, h] * np.sum(w * frame.gamma[:, ell] * fo)
                           for ell in range(3))
    data = ReducedGradientData(M_k=M, Theta_k=Theta, sigma=sigma, A_eps=A,
                               grad_q=grad)
    if fd_check:
        fd = np.empty(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = fd_step * max(1.0, state.q.p3)
            qp = HyperbolicPoint.of(state.q.array + e)
            qm = HyperbolicPoint.of(state.q.array - e)
            sp = correct(state.eps, qp, phi, params, grid, warm=state)
            sm = correct(state.eps, qm, phi, params, grid, warm=state)
            Ep = energy_E(corrected_surface(sp, params), params, state.eps, phi)
            Em = energy_E(corrected_surface(sm, params), params, state.eps, phi)
            fd[i] = (Ep - Em) / (2.0 * e[i])
        data.grad_fd = fd
    return data


def verify_side1(u, q, phi, params, eps):
    """Stationarity of the weighted volume along the translation directions.

    At nonzero ``eps`` the three reported numbers are the energy variations
    along ``e1``, ``e2`` and ``u`` divided by ``2 eps`` -- the exact weighted
    volume variations at critical points, where all three vanish.  At
    ``eps = 0`` the same variations are reported unscaled; they vanish for
    any surface by translation invariance.
    """
    grid = u.grid
    tests = {
        "e1": ch.constant_field(grid, np.array([1.0, 0.0, 0.0])),
        "e2": ch.constant_field(grid, np.array([0.0, 1.0, 0.0])),
        "u": u,
    }
    out = {}
    for name, t in tests.items():
        if eps != 0.0:
            val = first_variation(u, params, eps, phi, t) / (2.0 * eps)
            out["mode"] = "volume_variation"
        else:
            val = first_variation(u, params, 0.0, None, t)
            out["mode"] = "translation_invariance"
        out[name] = float(val)
    return out


def _solve_at(eps, phi, params, grid, q_start, warm=None, gtol=None,
              max_outer=25, fd_step=1e-4, degree=None):
    if gtol is None:
        gtol = DEFAULTS["outer_grad_tol"]
    itol = min(DEFAULTS["newton_residual"], 0.2 * gtol)
    q = HyperbolicPoint.of(q_start)
    state = correct(eps, q, phi, params, grid, warm=warm, tol=itol,
                    degree=degree)
    g = reduced_gradient(state, phi, params).grad_q
    for _ in range(max_outer):
        if np.max(np.abs(g)) <= gtol:
            break
        jac = np.empty((3, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = fd_step * max(1.0, q.p3)
            sp = correct(eps, HyperbolicPoint.of(q.array + e), phi, params,
                         grid, warm=state, tol=itol, degree=degree)
            jac[:, i] = (reduced_gradient(sp, phi, params).grad_q - g) / e[i]
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            step = -g
        tfac = 1.0
        improved = False
        for _ in range(6):
            qn = q.array + tfac * step
            if qn[2] > 0:
                sn = correct(eps, HyperbolicPoint.of(qn), phi, params, grid,
                             warm=state, tol=itol, degree=degree)
                gn = reduced_gradient(sn, phi, params).grad_q
                if np.max(np.abs(gn)) < np.max(np.abs(g)):
                    q, state, g = HyperbolicPoint.of(qn), sn, gn
                    improved = True
                    break
            tfac *= 0.5
        if not improved:
            # the gradient is at the solver's noise floor; accept if close
            if np.max(np.abs(g)) <= 50.0 * gtol:
                break
            raise ConvergenceError(
                f"outer iteration stalled with |grad| = {np.max(np.abs(g)):.3e}")
    else:
        if np.max(np.abs(g)) > 50.0 * gtol:
            raise ConvergenceError(
                f"no reduced critical point after {max_outer} outer steps "
                f"(|grad| = {np.max(np.abs(g)):.3e})")
    state = correct(eps, q, phi, params, grid, warm=state,
                    tol=min(itol, 2e-10), degree=degree)
    return state


def _report(state, phi, params, proxy=None):
    grid = state.nu.grid
    u = corrected_surface(state, params)
    res = j_residual(u, params, curvature=phi, eps=state.eps)
    conf, _ = conformality_residual(u)
    nu1 = ch.differentiate(state.nu)
    rep = {
        "eps": state.eps,
        "q": [state.q.p1, state.q.p2, state.q.p3],
        "xi": state.xi.tolist(),
        "alpha": state.alpha.tolist(),
        "xi_sup": float(np.max(np.abs(state.xi))),
        "alpha_sup": float(np.max(np.abs(state.alpha))),
        "residual_sup": float(np.max(np.abs(res.values))),
        "projected_residual": state.residual_norm,
        "constraint_defect": state.constraint_defect,
        "conformality": conf,
        "c0_distance": float(np.max(np.linalg.norm(state.nu.values, axis=1))),
        "c1_distance": ch.cm_norm(nu1, 1),
        "energy": energy_E(u, params, state.eps, phi),
        "f_value": f_value(phi, params, state.q),
        "side1": verify_side1(u, state.q, phi, params, state.eps),
        "iterations": state.iterations,
    }
    if proxy is not None:
        rep["stability_proxy"] = proxy
    return u, rep


def solve_bubble(eps, phi, params, box, grid, seeds=27, gtol=None,
                 degree=None):
    """Construct a perturbed-curvature sphere organized by the search box.

    A stable critical point of the reduced function must exist in ``box``
    (otherwise :class:`NoCriticalPointError` is raised, which the command
    line maps to its dedicated exit code); the corrected surface at the
    reduced critical point is returned with its diagnostics.
    """
    crits = find_critical(phi, params, box, seeds=seeds)
    stable = [c for c in crits if c.classification != "degenerate"]
    if not stable:
        raise NoCriticalPointError(
            "no stable critical point of the reduced function in the box")
    best = stable[0]
    if eps == 0.0:
        state = correct(0.0, best.q, phi, params, grid, degree=degree)
        u, rep = _report(state, phi, params, proxy=best.classification)
        return u, best.q, rep
    state = _solve_at(eps, phi, params, grid, best.q, gtol=gtol, degree=degree)
    u, rep = _report(state, phi, params, proxy=best.classification)
    rep["melnikov_q"] = [best.q.p1, best.q.p2, best.q.p3]
    rep["distance_to_melnikov_q"] = float(
        np.linalg.norm(state.q.array - best.q.array))
    return u, state.q, rep


def continuation(eps_schedule, phi, params, box, grid, seeds=27, degree=None):
    """Warm-started family of solves along a monotone ``eps`` schedule.

    Stops at the first failure, keeping every completed report; each report
    carries the per-step diagnostics of :func:`solve_bubble`.
    """
    eps_schedule = [float(e) for e in eps_schedule]
    mags = [abs(e) for e in eps_schedule]
    up = all(b >= a - 1e-15 for a, b in zip(mags, mags[1:]))
    down = all(b <= a + 1e-15 for a, b in zip(mags, mags[1:]))
    if not (up or down):
        raise ValueError("schedule must be monotone in |eps|")
    crits = find_critical(phi, params, box, seeds=seeds)
    stable = [c for c in crits if c.classification != "degenerate"]
    if not stable:
        raise NoCriticalPointError(
            "no stable critical point of the reduced function in the box")
    q0 = stable[0].q
    reports = []
    state = None
    q_prev = q0
    for eps in eps_schedule:
        try:
            if eps == 0.0:
                st = correct(0.0, q_prev, phi, params, grid, degree=degree)
            else:
                st = _solve_at(eps, phi, params, grid, q_prev, warm=state,
                               degree=degree)
        except (ConvergenceError, FloatingPointError) as exc:
            reports.append({"eps": eps, "status": "failed", "error": str(exc),
                            "hint": "retry with smaller eps steps"})
            break
        u, rep = _report(st, phi, params, proxy=stable[0].classification)
        rep["status"] = "ok"
        rep["_surface"] = u
        A = reduced_gradient(st, phi, params).A_eps
        rep["A_eps_norm"] = float(np.linalg.norm(A, 2))
        reports.append(rep)
        state, q_prev = st, st.q
    return reports
