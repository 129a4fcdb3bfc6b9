"""Command-line driver.

One process runs one command; every run writes ``summary.json`` into the
output directory with the fully resolved configuration (including defaulted
tolerances) echoed back, so identical configurations produce byte-identical
summaries.  Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 no critical point in the search box.
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import chart as ch
from . import melnikov as mel
from .bubbles import make_params, tangent_frame
from .defaults import DEFAULTS
from .energy import energy_curve, horosphere_energy
from .errors import (AmbiguousKernelError, ConvergenceError,
                     NoCriticalPointError, NumericsError)
from .halfspace import HyperbolicPoint
from .linearized import assemble_linearized, kernel, spectrum_normal
from .phi_expr import PhiSyntaxError, phi_to_prescribed
from .reduction import continuation

COMMANDS = ("verify", "spectrum", "kernel", "melnikov", "solve",
            "energy-curve", "obstruction")

_CATALOG = {
    "constant": lambda p: mel.phi_constant(p.get("value", 1.0)),
    "coordinate": lambda p: mel.phi_coordinate(p.get("index", 0)),
    "norm": lambda p: mel.phi_norm(),
    "radial_gaussian": lambda p: mel.phi_radial_gaussian(p.get("center", (0, 0, 1))),
    "dist_squared": lambda p: mel.phi_dist_squared(p.get("center", (0, 0, 1))),
}


@dataclass
class JobConfig:
    command: str
    k: float = 2.0
    grid_n: int = DEFAULTS["grid_n"]
    phi_source: object = None
    box: tuple | None = None
    eps_schedule: tuple = ()
    count: int = 8
    seeds: int = 27
    lattice: int = 3
    t_range: tuple = (2.0, 1.02, 25)
    degree: int | None = None
    seed: int = 0
    tolerances: dict = dc_field(default_factory=dict)
    out_dir: str = "."

    def tol(self, name):
        if name in self.tolerances:
            return self.tolerances[name]
        return DEFAULTS[name]

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not self.k > 1:
            raise ValueError("k must exceed 1")
        if self.grid_n < 4:
            raise ValueError("grid_n must be at least 4")
        if self.box is not None:
            b = self.box
            if len(b) != 6 or b[0] >= b[1] or b[2] >= b[3] or b[4] >= b[5]:
                raise ValueError("box must be x0,x1,y0,y1,z0,z1, ordered")
            if b[4] <= 0:
                raise ValueError("box must satisfy z0 > 0")
        mags = [abs(e) for e in self.eps_schedule]
        up = all(b >= a - 1e-15 for a, b in zip(mags, mags[1:]))
        down = all(b <= a + 1e-15 for a, b in zip(mags, mags[1:]))
        if mags and not (up or down):
            raise ValueError("eps_schedule must be monotone in |eps|")
        unknown = set(self.tolerances) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown tolerance overrides: {sorted(unknown)}")

    def phi(self):
        src = self.phi_source
        if src is None:
            raise ValueError("this command needs a prescribed function (--phi)")
        if isinstance(src, str):
            return phi_to_prescribed(src, probe_box=self.box)
        if isinstance(src, dict) and "catalog" in src:
            name = src["catalog"]
            if name not in _CATALOG:
                raise ValueError(f"unknown catalog entry {name!r}")
            return _CATALOG[name](src)
        raise ValueError("phi_source must be an expression or catalog mapping")

    def echo(self):
        doc = {
            "command": self.command,
            "k": self.k,
            "grid_n": self.grid_n,
            "phi_source": self.phi_source,
            "box": list(self.box) if self.box else None,
            "eps_schedule": list(self.eps_schedule),
            "count": self.count,
            "seeds": self.seeds,
            "lattice": self.lattice,
            "t_range": list(self.t_range),
            "degree": self.degree,
            "seed": self.seed,
            "out_dir": str(self.out_dir),
            "tolerances": {name: self.tol(name) for name in sorted(DEFAULTS)},
        }
        return doc


def _parse_list(text, count=None, cast=float):
    vals = tuple(cast(v) for v in str(text).split(",") if v != "")
    if count is not None and len(vals) != count:
        raise ValueError(f"expected {count} comma-separated values")
    return vals


def load_config(args):
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    cfg = JobConfig(command=args.command)
    for key in ("k", "grid_n", "phi_source", "count", "seeds", "lattice",
                "degree", "seed", "out_dir", "tolerances"):
        if key in doc:
            setattr(cfg, key, doc[key])
    if "box" in doc and doc["box"] is not None:
        cfg.box = tuple(float(v) for v in doc["box"])
    if "eps_schedule" in doc:
        cfg.eps_schedule = tuple(float(v) for v in doc["eps_schedule"])
    if "t_range" in doc:
        cfg.t_range = tuple(doc["t_range"])
    # flags win over the config document
    if args.k is not None:
        cfg.k = args.k
    if args.grid_n is not None:
        cfg.grid_n = args.grid_n
    if args.phi is not None:
        cfg.phi_source = args.phi
    if args.eps is not None:
        cfg.eps_schedule = _parse_list(args.eps)
    if args.box is not None:
        cfg.box = _parse_list(args.box, 6)
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# commands


def _cmd_verify(cfg, out):
    t0 = time.time()
    grid = ch.build_grid(cfg.grid_n)
    params = make_params(cfg.k)
    om, mu, dx, dy = grid.omega, grid.mu, grid.domega_dx, grid.domega_dy
    dxx, dxy, dyy = ch.omega_second(grid.nodes)
    x, y = grid.nodes[:, 0], grid.nodes[:, 1]
    e1, e2, e3 = np.eye(3)

    def wedge(a, b):
        return np.cross(a, b)

    checks = {}

    def put(name, value, tolname="quad_area_tol", tolval=None):
        tol = tolval if tolval is not None else 1e-12
        checks[name] = {"value": float(value), "tol": tol,
                        "pass": bool(value <= tol)}

    mx = lambda a: float(np.max(np.abs(a)))
    put("unit_norm", mx(np.einsum("ij,ij->i", om, om) - 1.0))
    put("grad_orthogonal", mx(np.einsum("ij,ij->i", dx, dy)))
    put("grad_norm_x", mx(np.einsum("ij,ij->i", dx, dx) - mu**2))
    put("grad_norm_y", mx(np.einsum("ij,ij->i", dy, dy) - mu**2))
    put("wedge_x", mx(wedge(dx, om) - dy))
    put("wedge_y", mx(wedge(om, dy) - dx))
    put("wedge_xy", mx(wedge(dx, dy) + mu[:, None] ** 2 * om))
    put("laplacian", mx(dxx + dyy + 2.0 * mu[:, None] ** 2 * om))

    zom = x[:, None] * dx + y[:, None] * dy
    izom = -y[:, None] * dx + x[:, None] * dy
    z2om = (x * x - y * y)[:, None] * dx + (2 * x * y)[:, None] * dy
    iz2om = (-2 * x * y)[:, None] * dx + (x * x - y * y)[:, None] * dy
    put("flow_dx", mx(dx - (e1 - om[:, 0, None] * om - wedge(
        np.tile(e2, (grid.size, 1)), om))))
    put("flow_dy", mx(dy - (e2 - om[:, 1, None] * om + wedge(
        np.tile(e1, (grid.size, 1)), om))))
    put("flow_z", mx(zom - (e3 - om[:, 2, None] * om)))
    put("flow_iz", mx(izom - wedge(np.tile(e3, (grid.size, 1)), om)))
    put("flow_z2", mx(z2om + (e1 - om[:, 0, None] * om + wedge(
        np.tile(e2, (grid.size, 1)), om))))
    put("flow_iz2", mx(iz2om - (e2 - om[:, 1, None] * om - wedge(
        np.tile(e1, (grid.size, 1)), om))))

    put("area", abs(np.sum(grid.weights) - 4 * np.pi),
        tolval=cfg.tol("quad_area_tol"))
    put("odd_moment", abs(float(grid.weights @ om[:, 2])),
        tolval=cfg.tol("quad_area_tol"))
    put("second_moment", abs(float(grid.weights @ om[:, 2] ** 2) - 4 * np.pi / 3),
        tolval=1e-8)

    frame = tangent_frame(params, grid)
    put("frame_gram", mx(frame.tau_gram() - np.eye(6)), tolval=1e-8)
    gg = frame.gamma_gram()
    target = np.diag([cfg.k**2, cfg.k**2, cfg.k**2 + 3.0])
    put("gamma_gram", mx(gg - target), tolval=1e-8)

    rng = np.random.default_rng(cfg.seed)
    f = ch.random_smooth_field(grid, rng)
    Pf, _ = ch.project_P(f)
    put("projector", mx(np.einsum("ij,ij->i", Pf.values, om)), tolval=1e-13)

    ok = all(c["pass"] for c in checks.values())
    return {"checks": checks, "all_pass": ok, "runtime_s": time.time() - t0}, ok


def _cmd_spectrum(cfg, out):
    grid = ch.build_grid(cfg.grid_n)
    params = make_params(cfg.k)
    rep = spectrum_normal(params, grid, count=cfg.count, degree=cfg.degree)
    rep.to_json(out / "spectrum.json")
    doc = rep.to_json()
    doc["low_eigenvalue"] = float(rep.eigenvalues[0])
    doc["triple_at_2k_error"] = float(
        np.max(np.abs(rep.eigenvalues[1:4] - 2.0 * cfg.k)))
    doc["gap_after_triple"] = float(rep.eigenvalues[4] - 2.0 * cfg.k)
    return doc, True


def _cmd_kernel(cfg, out):
    grid = ch.build_grid(cfg.grid_n)
    params = make_params(cfg.k)
    system = assemble_linearized(params, HyperbolicPoint(0, 0, 1), grid,
                                 degree=cfg.degree)
    rep = kernel(system, gap_factor=cfg.tol("kernel_gap_factor"))
    rep.to_json(out / "kernel.json")
    pack = system.pack
    fm = pack.frame_modal
    B = np.stack([pack.project_vector(b.values) for b in rep.basis], axis=1)
    coef = np.linalg.lstsq(B, fm.T, rcond=None)[0]
    resid = float(np.max(np.linalg.norm(fm.T - B @ coef, axis=0)
                         / np.linalg.norm(fm.T, axis=0)))
    doc = rep.to_json()
    doc["frame_reconstruction_residual"] = resid
    return doc, True


def _cmd_melnikov(cfg, out):
    if cfg.box is None:
        raise ValueError("melnikov needs a search box")
    params = make_params(cfg.k)
    phi = cfg.phi()
    rows = mel.scan_to_csv(phi, params, cfg.box, out / "scan.csv",
                           lattice=max(cfg.lattice, 4))
    crits = mel.find_critical(phi, params, cfg.box, seeds=cfg.seeds,
                              rng=np.random.default_rng(cfg.seed))
    doc = {
        "scan_rows": rows,
        "critical_points": [c.as_dict() for c in crits],
        "stable": [c.as_dict() for c in crits
                   if c.classification != "degenerate"],
    }
    with open(out / "critical_points.json", "w") as fh:
        json.dump(doc["critical_points"], fh, sort_keys=True, indent=1)
    return doc, True


def _cmd_solve(cfg, out):
    if cfg.box is None:
        raise ValueError("solve needs a search box")
    if not cfg.eps_schedule:
        raise ValueError("solve needs an eps schedule")
    grid = ch.build_grid(cfg.grid_n)
    params = make_params(cfg.k)
    phi = cfg.phi()
    reports = continuation(cfg.eps_schedule, phi, params, cfg.box, grid,
                           seeds=cfg.seeds, degree=cfg.degree)
    steps = []
    for rep in reports:
        surface = rep.pop("_surface", None)
        if surface is not None:
            ch.field_to_csv(surface, out / f"surface_{rep['eps']:g}.csv")
        steps.append(rep)
    ok = all(r.get("status") == "ok" for r in steps)
    doc = {"steps": steps, "all_converged": ok}
    if not ok:
        raise ConvergenceError("continuation halted; see summary steps")
    return doc, ok


def _cmd_energy_curve(cfg, out):
    grid = ch.build_grid(cfg.grid_n)
    params = make_params(cfg.k)
    t0, t1, count = cfg.t_range
    ts = np.linspace(float(t0), float(t1), int(count))
    rows = energy_curve(params, ts, grid)
    with open(out / "energy_curve.csv", "w") as fh:
        fh.write("t,E0,closed_form\n")
        for t, e in rows:
            fh.write(f"{t:.17g},{e:.17g},{horosphere_energy(cfg.k, t):.17g}\n")
    defect = float(np.max([abs(e - horosphere_energy(cfg.k, t))
                           / max(1.0, abs(e)) for t, e in rows]))
    monotone = bool(np.all(np.diff(rows[:, 1][np.argsort(rows[:, 0])]) >= 0))
    return {"points": rows.shape[0], "closed_form_defect": defect,
            "decreasing_toward_horosphere": monotone}, True


def _cmd_obstruction(cfg, out):
    if cfg.box is None:
        raise ValueError("obstruction needs a search box")
    params = make_params(cfg.k)
    phi = cfg.phi()
    rep = mel.monotone_obstruction(phi, params, cfg.box, lattice=cfg.lattice,
                                   margin=cfg.tol("obstruction_margin"))
    return rep, True


_DISPATCH = {
    "verify": _cmd_verify,
    "spectrum": _cmd_spectrum,
    "kernel": _cmd_kernel,
    "melnikov": _cmd_melnikov,
    "solve": _cmd_solve,
    "energy-curve": _cmd_energy_curve,
    "obstruction": _cmd_obstruction,
}


def _write_summary(out_dir, doc):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cmc-hyp",
        description="Spheres of constant and almost-constant mean curvature "
                    "in hyperbolic 3-space: verification and solve pipelines")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON configuration document")
    parser.add_argument("--k", type=float, help="mean curvature, k > 1")
    parser.add_argument("--grid-n", type=int, dest="grid_n")
    parser.add_argument("--phi", help="prescribed function expression")
    parser.add_argument("--eps", help="comma-separated eps schedule")
    parser.add_argument("--box", help="x0,x1,y0,y1,z0,z1 search box")
    parser.add_argument("--out", help="output directory")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args)
        phi_probe = cfg.phi_source
        if phi_probe is not None:
            cfg.phi()   # surface syntax errors as config errors
    except (ValueError, OSError, KeyError, PhiSyntaxError,
            json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}")
        return 2

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"config": cfg.echo(), "status": "ok"}
    try:
        result, ok = _DISPATCH[cfg.command](cfg, out)
        summary["result"] = result
        if not ok:
            summary["status"] = "failed_checks"
        _write_summary(out, summary)
        return 0 if ok else 3
    except NoCriticalPointError as exc:
        summary.update(status="no_critical_point", error_class="no_critical_point",
                       error=str(exc))
        _write_summary(out, summary)
        print(f"no critical point: {exc}")
        return 4
    except (NumericsError, ConvergenceError, AmbiguousKernelError,
            np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        summary.update(status="numeric_failure", error_class="numeric_failure",
                       error=str(exc))
        _write_summary(out, summary)
        print(f"numeric failure: {exc}")
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
