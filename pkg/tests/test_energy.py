import numpy as np
import pytest

from cmc_hyp import bubbles as bb
from cmc_hyp import chart as ch
from cmc_hyp import energy as en
from cmc_hyp import halfspace as hs
from cmc_hyp import melnikov as mel
from cmc_hyp.halfspace import HyperbolicPoint

Q0 = HyperbolicPoint(0, 0, 1)


def test_build_Q_constant_closed_form():
    Q = en.build_Q(mel.phi_constant(2.0))
    pts = np.array([[0.3, -0.2, 1.7], [0.0, 0.0, 0.4]])
    vals = Q(pts)
    expect = -(2.0 / 2.0) * (pts[:, 2] ** -2.0 - 1.0)
    assert np.allclose(vals[:, 2], expect, atol=1e-14)
    assert np.allclose(vals[:, :2], 0.0)
    Q0f = en.build_Q(mel.phi_constant(0.0))
    assert np.allclose(Q0f(pts), 0.0)


def test_build_Q_divergence(rng):
    phi = mel.phi_radial_gaussian((0.2, 0.0, 1.0))
    Q = en.build_Q(phi)
    assert en.divergence_defect(Q, phi, rng) < 1e-6


def test_volume_of_bubble(grid16, params2):
    U = bb.bubble(params2, HyperbolicPoint(0.2, 0.4, 1.3), grid16)
    vol = en.volume_V(mel.phi_constant(1.0), U)
    assert vol == pytest.approx(-hs.hyperbolic_ball_volume(params2.rho),
                                abs=1e-6)
    assert en.volume_V(mel.phi_constant(0.0), U) == 0.0


def test_volume_gauge_independence(grid16, params2):
    phi = mel.phi_radial_gaussian((0.0, 0.1, 1.1))
    U = bb.bubble(params2, Q0, grid16)
    v1 = en.volume_V(en.build_Q(phi, anchor=1.0), U)
    v2 = en.volume_V(en.build_Q(phi, anchor=2.0), U)
    assert abs(v1 - v2) < 1e-8


def test_volume_equals_reduced_function(grid16, params2):
    # the reduced function is minus the enclosed weighted volume
    phi = mel.phi_radial_gaussian((0.1, -0.2, 1.1))
    for q in (Q0, HyperbolicPoint(0.3, 0.2, 1.4)):
        U = bb.bubble(params2, q, grid16)
        assert en.volume_V(phi, U) == pytest.approx(
            -mel.f_value(phi, params2, q), abs=1e-6)


def test_energy_closed_form(grid24):
    for k, t in ((2.0, 2.0), (2.0, 1.1), (3.0, 1.5)):
        params = bb.make_params(k)
        om = ch.omega_field(grid24)
        u = ch.SphereField(grid24, om.values + np.array([0, 0, t]),
                           om.dx, om.dy)
        val = en.energy_E(u, params)
        assert val == pytest.approx(en.horosphere_energy(k, t), rel=1e-6)
    assert en.horosphere_energy(2.0, 2.0) == pytest.approx(
        4 * np.pi * (np.log(3.0) - 1.0), rel=1e-14)


def test_energy_monotone_divergence(grid24, params2):
    ts = [1.05, 1.01, 1.001]
    vals = [r[1] for r in en.energy_curve(params2, ts, grid24)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < -100.0


def test_energy_perturbation_identity(grid16, params2):
    # E_eps at a moved sphere differs from the base energy by the reduced term
    phi = mel.phi_radial_gaussian((0.0, 0.0, 1.0))
    U = bb.bubble(params2, Q0, grid16)
    E0 = en.energy_E(U, params2)
    eps = 0.01
    for q in (Q0, HyperbolicPoint(0.2, -0.1, 1.2), HyperbolicPoint(0, 0.3, 0.8)):
        Uq = bb.bubble(params2, q, grid16)
        lhs = en.energy_E(Uq, params2, eps, phi)
        rhs = E0 - 2.0 * eps * mel.f_value(phi, params2, q)
        assert lhs == pytest.approx(rhs, abs=1e-6)


def test_first_variation_at_bubble(grid16, params2, rng):
    U = bb.bubble(params2, Q0, grid16)
    for _ in range(5):
        t = ch.random_smooth_field(grid16, rng)
        assert abs(en.first_variation(U, params2, 0.0, None, t)) < 1e-7


def test_first_variation_finite_differences(grid16, params2, rng):
    phi = mel.phi_radial_gaussian((0, 0, 1))
    U = bb.bubble(params2, Q0, grid16)
    pert = ch.random_smooth_field(grid16, rng)
    u = ch.SphereField(grid16, U.values + 0.05 * pert.values,
                       U.dx + 0.05 * pert.dx, U.dy + 0.05 * pert.dy)
    t = ch.random_smooth_field(grid16, rng)
    fv = en.first_variation(u, params2, 0.02, phi, t)
    errs = []
    for h in (1e-4, 1e-5):
        up = ch.SphereField(grid16, u.values + h * t.values,
                            u.dx + h * t.dx, u.dy + h * t.dy)
        um = ch.SphereField(grid16, u.values - h * t.values,
                            u.dx - h * t.dx, u.dy - h * t.dy)
        fd = (en.energy_E(up, params2, 0.02, phi)
              - en.energy_E(um, params2, 0.02, phi)) / (2 * h)
        errs.append(abs(fd - fv))
    assert errs[0] < 1e-4 and errs[1] < 0.1 * errs[0] + 1e-9


def test_reparametrization_invariance(grid16, params2, rng):
    # energy variations vanish along all six chart flows, any eps
    phi = mel.phi_radial_gaussian((0, 0, 1))
    g = grid16
    x, y = g.nodes[:, 0], g.nodes[:, 1]
    U = bb.bubble(params2, Q0, g)
    pert = ch.random_smooth_field(g, rng)
    u = ch.differentiate(ch.SphereField(
        g, U.values + 0.05 * pert.values, U.dx + 0.05 * pert.dx,
        U.dy + 0.05 * pert.dy))
    flows = [u.dx, u.dy,
             x[:, None] * u.dx + y[:, None] * u.dy,
             -y[:, None] * u.dx + x[:, None] * u.dy,
             (x * x - y * y)[:, None] * u.dx + (2 * x * y)[:, None] * u.dy,
             (-2 * x * y)[:, None] * u.dx + (x * x - y * y)[:, None] * u.dy]
    for eps in (0.0, 0.03):
        for fl in flows:
            val = en.first_variation(u, params2, eps, phi,
                                     ch.SphereField(g, fl))
            assert abs(val) < 1e-7


def test_translation_invariance(grid16, params2, rng):
    g = grid16
    U = bb.bubble(params2, Q0, g)
    pert = ch.random_smooth_field(g, rng)
    u = ch.SphereField(g, U.values + 0.05 * pert.values,
                       U.dx + 0.05 * pert.dx, U.dy + 0.05 * pert.dy)
    for t in (ch.constant_field(g, np.eye(3)[0]),
              ch.constant_field(g, np.eye(3)[1]), u):
        assert abs(en.first_variation(u, params2, 0.0, None, t)) < 1e-7


def test_conformality(grid16, grid24, params2):
    U = bb.bubble(params2, Q0, grid16)
    sup, fields = en.conformality_residual(U)
    assert sup < 1e-10
    # an anisotropically stretched chart map is detected
    stretched_nodes = grid16.nodes * np.array([2.0, 1.0])
    om, mu, dx, dy = ch.omega_mu(stretched_nodes)
    u = ch.SphereField(grid16, om + np.array([0, 0, 1.5]), 2.0 * dx, dy)
    sup, _ = en.conformality_residual(u)
    assert sup > 0.1
    # Moebius reparametrizations stay conformal
    U24 = bb.bubble(params2, Q0, grid24)
    pulled = bb.moebius_pullback(U24, bb.MoebiusMap(1.2, 0.1, 0.0, 1.0))
    sup, _ = en.conformality_residual(
        ch.SphereField(grid24, pulled.values.copy()))
    assert sup < 1e-8


def test_branch_point_report(grid16, params2):
    U = bb.bubble(params2, Q0, grid16)
    assert en.branch_point_suspects(U).size == 0


def test_necessary_conditions_at_bubble(grid16, params2):
    # variation of the weighted volume along e_j reproduces the enclosed
    # integral of the derivative of the weight (two independent quadratures)
    phi = mel.phi_radial_gaussian((0.1, 0.0, 1.0))
    q = HyperbolicPoint(0.1, -0.2, 1.1)
    U = bb.bubble(params2, q, grid16)
    ball = hs.ball_to_euclidean(q, params2.rho)
    pts, w = hs.ball_quadrature(ball, order=20)
    gphi = phi.gradient(pts)
    for j in range(2):
        tst = ch.constant_field(grid16, np.eye(3)[j])
        vprime = (en.first_variation(U, params2, 1.0, phi, tst)
                  - en.first_variation(U, params2, 0.0, None, tst)) / 2.0
        oracle = -np.sum(w * pts[:, 2] ** -3.0 * gphi[:, j])
        assert vprime == pytest.approx(oracle, abs=1e-6)
    vprime = (en.first_variation(U, params2, 1.0, phi, U)
              - en.first_variation(U, params2, 0.0, None, U)) / 2.0
    oracle = -np.sum(w * pts[:, 2] ** -3.0 * np.einsum("ij,ij->i", gphi, pts))
    assert vprime == pytest.approx(oracle, abs=1e-6)
