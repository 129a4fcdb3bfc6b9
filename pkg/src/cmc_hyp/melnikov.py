"""The reduced volume function over moving hyperbolic balls.

``f_value`` integrates a prescribed function over the hyperbolic ball of
radius ``rho_k`` about ``q``; stable critical points of that function in ``q``
are the organizing centers for perturbed constant-curvature spheres.  The
quadrature is pulled back to a fixed reference ball (integrand
``(p3 + k r)^-3 phi(q3 p + q^k)``), which makes the value and its analytic
gradient smooth in ``q`` and removes any domain motion from the formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import csv

import numpy as np

from .defaults import DEFAULTS
from .halfspace import HyperbolicPoint, dist, unit_ball_rule


@dataclass
class PrescribedFunction:
    """A scalar function on the half-space with its Euclidean gradient.

    ``evaluate`` maps ``(..., 3)`` points to values, ``gradient`` to
    ``(..., 3)`` Euclidean gradients; ``descriptor`` documents the source.
    ``constant_value`` is set for constants so downstream quadratures can use
    closed forms.
    """

    evaluate: object
    gradient: object
    descriptor: str = ""
    constant_value: float | None = None

    def validate_gradient(self, rng=None, probes=None, h=1e-6, tol=1e-6):
        """Worst relative finite-difference defect of the gradient."""
        if probes is None:
            rng = rng or np.random.default_rng(0)
            probes = np.stack([rng.uniform(-1, 1, 20), rng.uniform(-1, 1, 20),
                               rng.uniform(0.5, 2.0, 20)], axis=-1)
        worst = 0.0
        for p in np.atleast_2d(probes):
            g = np.asarray(self.gradient(p), dtype=float)
            fd = np.empty(3)
            for j in range(3):
                e = np.zeros(3)
                e[j] = h * max(1.0, abs(p[j]))
                fd[j] = (self.evaluate(p + e) - self.evaluate(p - e)) / (2 * e[j])
            scale = max(np.linalg.norm(g), 1.0)
            worst = max(worst, float(np.linalg.norm(g - fd) / scale))
        if worst > tol:
            raise ValueError(
                f"gradient disagrees with finite differences by {worst:.2e}")
        return worst


# ---------------------------------------------------------------------------
# catalog


def phi_constant(c):
    c = float(c)
    return PrescribedFunction(
        evaluate=lambda p: np.full(np.shape(np.asarray(p)[..., 0]), c),
        gradient=lambda p: np.zeros(np.shape(p)),
        descriptor=f"const:{c:g}", constant_value=c)


def phi_coordinate(j):
    j = int(j)
    if j not in (0, 1, 2):
        raise ValueError("coordinate index must be 0, 1 or 2")

    def grad(p):
        g = np.zeros(np.shape(p))
        g[..., j] = 1.0
        return g

    return PrescribedFunction(
        evaluate=lambda p: np.asarray(p, dtype=float)[..., j],
        gradient=grad, descriptor=f"coordinate:{j}")


def phi_norm():
    return PrescribedFunction(
        evaluate=lambda p: np.linalg.norm(np.asarray(p, dtype=float), axis=-1),
        gradient=lambda p: np.asarray(p, dtype=float)
        / np.linalg.norm(np.asarray(p, dtype=float), axis=-1)[..., None],
        descriptor="norm")


def _cosh_dist_parts(p, a):
    p = np.asarray(p, dtype=float)
    d2 = np.sum((p - a) ** 2, axis=-1)
    c = 1.0 + d2 / (2.0 * p[..., 2] * a[2])
    gc = np.empty(np.shape(p))
    gc[..., 0] = (p[..., 0] - a[0]) / (p[..., 2] * a[2])
    gc[..., 1] = (p[..., 1] - a[1]) / (p[..., 2] * a[2])
    gc[..., 2] = (p[..., 2] - a[2]) / (p[..., 2] * a[2]) \
        - d2 / (2.0 * p[..., 2] ** 2 * a[2])
    return c, gc


def _dist2_chain(c):
    # 2 d / sqrt(c^2 - 1) with its smooth continuation through c = 1
    out = np.empty(np.shape(c))
    small = c - 1.0 < 1e-6
    cs = np.where(small, 2.0, c)   # keep sqrt arguments legal
    out = 2.0 * np.arccosh(np.maximum(cs, 1.0)) / np.sqrt(cs**2 - 1.0)
    series = 2.0 - 2.0 * (c - 1.0) / 3.0
    return np.where(small, series, out)


def phi_dist_squared(center):
    a = HyperbolicPoint.of(center).array

    def ev(p):
        c, _ = _cosh_dist_parts(p, a)
        return np.arccosh(np.maximum(c, 1.0)) ** 2

    def grad(p):
        c, gc = _cosh_dist_parts(p, a)
        return _dist2_chain(c)[..., None] * gc

    return PrescribedFunction(ev, grad,
                              descriptor=f"dist2:{tuple(a)}")


def phi_radial_gaussian(center):
    """``exp(-d_H(p, center)^2)``: a smooth bump centered at ``center``."""
    a = HyperbolicPoint.of(center).array

    def ev(p):
        c, _ = _cosh_dist_parts(p, a)
        return np.exp(-np.arccosh(np.maximum(c, 1.0)) ** 2)

    def grad(p):
        c, gc = _cosh_dist_parts(p, a)
        val = np.exp(-np.arccosh(np.maximum(c, 1.0)) ** 2)
        return -val[..., None] * _dist2_chain(c)[..., None] * gc

    return PrescribedFunction(ev, grad,
                              descriptor=f"radial_gaussian:{tuple(a)}")


# ---------------------------------------------------------------------------
# the reduced function and its derivatives


def _reference_rule(params, order):
    pts, w = unit_ball_rule(order)
    return params.r * pts, params.r**3 * w


def f_value(phi, params, q, order=None):
    """Integral of ``phi`` over the hyperbolic ball of radius ``rho`` at ``q``."""
    if order is None:
        order = DEFAULTS["ball_quad_order"]
    q = HyperbolicPoint.of(q)
    pts, w = _reference_rule(params, order)
    kr = params.k * params.r
    target = q.p3 * pts + np.array([q.p1, q.p2, kr * q.p3])
    dens = (pts[:, 2] + kr) ** -3.0
    return float(np.sum(w * dens * np.asarray(phi.evaluate(target), dtype=float)))


def f_gradient(phi, params, q, order=None):
    """Analytic gradient of :func:`f_value` in the ball center ``q``.

    Horizontal components integrate the corresponding derivative of ``phi``;
    the vertical one pairs the gradient with the scaling direction
    ``p + k r e3`` of the moving ball.
    """
    if phi.gradient is None:
        raise ValueError("prescribed function has no gradient evaluator")
    if order is None:
        order = DEFAULTS["ball_quad_order"]
    q = HyperbolicPoint.of(q)
    pts, w = _reference_rule(params, order)
    kr = params.k * params.r
    target = q.p3 * pts + np.array([q.p1, q.p2, kr * q.p3])
    dens = (pts[:, 2] + kr) ** -3.0
    gphi = np.asarray(phi.gradient(target), dtype=float)
    out = np.empty(3)
    out[0] = np.sum(w * dens * gphi[:, 0])
    out[1] = np.sum(w * dens * gphi[:, 1])
    out[2] = np.sum(w * dens * (gphi[:, 0] * pts[:, 0] + gphi[:, 1] * pts[:, 1]
                                + gphi[:, 2] * (pts[:, 2] + kr)))
    return out


def hessian_estimate(phi, params, q, order=None, step=1e-4):
    """Symmetrized central-difference Hessian of the reduced function."""
    q = HyperbolicPoint.of(q).array
    H = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = step * max(1.0, abs(q[j]))
        gp = f_gradient(phi, params, q + e, order)
        gm = f_gradient(phi, params, q - e, order)
        H[:, j] = (gp - gm) / (2 * e[j])
    return 0.5 * (H + H.T)


# ---------------------------------------------------------------------------
# critical points


CLASSIFICATIONS = ("nondegenerate_min", "nondegenerate_max", "saddle",
                   "degenerate")


@dataclass
class MelnikovResult:
    q: HyperbolicPoint
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    classification: str

    def as_dict(self):
        return {
            "q": [self.q.p1, self.q.p2, self.q.p3],
            "value": self.value,
            "gradient": self.gradient.tolist(),
            "hessian": self.hessian.tolist(),
            "classification": self.classification,
        }


def classify_hessian(H, value, tol=None):
    if tol is None:
        tol = DEFAULTS["classify_tol"]
    eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
    scale = float(np.max(np.abs(eigs)))
    if scale <= tol * max(1.0, abs(value)):
        return "degenerate"
    if np.min(np.abs(eigs)) <= 1e-3 * scale:
        return "degenerate"
    if np.all(eigs > 0):
        return "nondegenerate_min"
    if np.all(eigs < 0):
        return "nondegenerate_max"
    return "saddle"


def _inside(qa, box):
    return (box[0] <= qa[0] <= box[1] and box[2] <= qa[1] <= box[3]
            and box[4] <= qa[2] <= box[5])


def _check_box(box):
    box = tuple(float(b) for b in box)
    if len(box) != 6 or box[0] >= box[1] or box[2] >= box[3] or box[4] >= box[5]:
        raise ValueError("box must be x0,x1,y0,y1,z0,z1 with ordered bounds")
    if box[4] <= 0:
        raise ValueError("box must stay strictly inside the half-space (z0 > 0)")
    return box


def find_critical(phi, params, box, seeds=27, order=None, gtol=None,
                  max_iter=40, rng=None, dedupe=None):
    """Search the box for critical points of the reduced function.

    Newton iterations with Levenberg damping start from a jittered lattice of
    ``seeds`` points; converged interior points are deduplicated by
    hyperbolic distance and classified through the finite-difference Hessian.
    An empty list is a valid outcome (no critical point in the box).
    """
    box = _check_box(box)
    if gtol is None:
        gtol = 1e-10
    if dedupe is None:
        dedupe = DEFAULTS["dedupe_dist"]
    rng = rng or np.random.default_rng(0)
    m = max(1, round(seeds ** (1.0 / 3.0)))
    axes = [np.linspace(box[2 * i], box[2 * i + 1], m + 2)[1:-1] for i in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    cell = np.array([(box[2 * i + 1] - box[2 * i]) / (m + 1) for i in range(3)])
    pts = pts + 0.3 * cell * rng.uniform(-1, 1, pts.shape)
    pts[:, 2] = np.clip(pts[:, 2], 0.51 * box[4], None)

    found = []
    for seed in pts:
        qa = seed.copy()
        lam = 0.0
        ok = False
        for _ in range(max_iter):
            g = f_gradient(phi, params, qa, order)
            gn = np.linalg.norm(g)
            if gn <= gtol:
                ok = True
                break
            H = hessian_estimate(phi, params, qa, order)
            hscale = max(np.max(np.abs(H)), 1e-12)
            for _ in range(8):
                try:
                    step = np.linalg.solve(H + lam * hscale * np.eye(3), -g)
                except np.linalg.LinAlgError:
                    lam = max(4.0 * lam, 1e-4)
                    continue
                qn = qa + step
                if qn[2] <= 0.25 * box[4]:
                    lam = max(4.0 * lam, 1e-4)
                    continue
                if np.linalg.norm(f_gradient(phi, params, qn, order)) < gn:
                    qa = qn
                    lam = lam / 3.0 if lam > 1e-8 else 0.0
                    break
                lam = max(4.0 * lam, 1e-4)
            else:
                break
            if not _inside(qa, [box[0] - 1, box[1] + 1, box[2] - 1, box[3] + 1,
                                box[4] * 0.25, box[5] * 4]):
                break
        if not ok or not _inside(qa, box):
            continue
        H = hessian_estimate(phi, params, qa, order)
        val = f_value(phi, params, qa, order)
        found.append(MelnikovResult(
            q=HyperbolicPoint.of(qa), value=val,
            gradient=f_gradient(phi, params, qa, order), hessian=H,
            classification=classify_hessian(H, val)))

    found.sort(key=lambda r: (r.value, r.q.p1, r.q.p2, r.q.p3))
    unique = []
    for r in found:
        if all(dist(r.q, u.q) > dedupe for u in unique):
            unique.append(r)
    return unique


# ---------------------------------------------------------------------------
# monotonicity obstructions


def monotone_obstruction(phi, params, box, lattice=3, order=None, margin=None):
    """Scan the box for uniformly signed derivatives of the reduced function.

    Reports, for the two horizontal directions and the radial pairing, the
    sign when it is uniform over the lattice and bounded away from zero; a
    uniformly signed derivative rules out critical points (and hence
    perturbed spheres organized by them) in the box.
    """
    box = _check_box(box)
    if margin is None:
        margin = DEFAULTS["obstruction_margin"]
    axes = [np.linspace(box[2 * i], box[2 * i + 1], lattice) for i in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    grads = np.array([f_gradient(phi, params, p, order) for p in pts])
    radial = np.einsum("ij,ij->i", pts, grads)
    report = {"lattice": pts.tolist(), "margin": margin, "directions": {}}
    obstructed = []
    for name, vals in (("e1", grads[:, 0]), ("e2", grads[:, 1]),
                       ("radial", radial)):
        lo, hi = float(np.min(vals)), float(np.max(vals))
        entry = {"min": lo, "max": hi, "sign": None}
        if lo > margin:
            entry["sign"] = "+"
            obstructed.append(name)
        elif hi < -margin:
            entry["sign"] = "-"
            obstructed.append(name)
        report["directions"][name] = entry
    report["obstructed"] = obstructed
    return report


def scan_to_csv(phi, params, box, path, lattice=8, order=None):
    """Write a lattice of reduced-function values and gradients as CSV."""
    box = _check_box(box)
    axes = [np.linspace(box[2 * i], box[2 * i + 1], lattice) for i in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["q1", "q2", "q3", "F", "dF1", "dF2", "dF3"])
        for p in pts:
            g = f_gradient(phi, params, p, order)
            wr.writerow([f"{v:.17g}" for v in
                         (*p, f_value(phi, params, p, order), *g)])
    return pts.shape[0]
