import numpy as np
import pytest

from cmc_hyp import phi_expr as pe


def fd_gradient(phi, p, h=1e-6):
    out = np.empty(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        out[j] = (phi.evaluate(p + e) - phi.evaluate(p - e)) / (2 * h)
    return out


def test_constant_and_coordinate():
    one = pe.phi_to_prescribed("1")
    assert one.constant_value == 1.0
    assert float(one.evaluate(np.array([0.3, 0.2, 1.5]))) == 1.0
    assert np.allclose(one.gradient(np.array([0.3, 0.2, 1.5])), 0.0)
    p1 = pe.phi_to_prescribed("p1")
    pt = np.array([0.7, -0.3, 2.0])
    assert float(p1.evaluate(pt)) == 0.7
    assert np.allclose(p1.gradient(pt), [1, 0, 0])


def test_radial_bump_gradient():
    phi = pe.phi_to_prescribed("exp(-hypdist(0,0,1)^2)")
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1),
                      rng.uniform(0.5, 2)])
        g = phi.gradient(p)
        assert np.linalg.norm(g - fd_gradient(phi, p)) < 1e-6 * max(
            1.0, np.linalg.norm(g))


def test_vectorized_evaluation():
    phi = pe.phi_to_prescribed("p3^2 * sin(p1) + cos(p2)/p3")
    pts = np.random.default_rng(0).uniform(0.5, 1.5, (40, 3))
    vals = phi.evaluate(pts)
    assert vals.shape == (40,)
    expect = pts[:, 2] ** 2 * np.sin(pts[:, 0]) + np.cos(pts[:, 1]) / pts[:, 2]
    assert np.allclose(vals, expect)
    grads = phi.gradient(pts)
    assert grads.shape == (40, 3)
    assert np.allclose(grads[:, 0], pts[:, 2] ** 2 * np.cos(pts[:, 0]))


def test_power_and_precedence():
    phi = pe.phi_to_prescribed("2*p1^2 + 3")
    assert float(phi.evaluate(np.array([2.0, 0, 1]))) == 11.0
    # right associativity of the power operator
    phi = pe.phi_to_prescribed("p3^2^2")   # p3^(2^2) wait: 2^2 evaluated right
    assert float(phi.evaluate(np.array([0, 0, 2.0]))) == 16.0
    neg = pe.phi_to_prescribed("-p1^2")
    assert float(neg.evaluate(np.array([3.0, 0, 1]))) == -9.0


def test_roundtrip_printing():
    for text in ("1", "p1", "exp(-hypdist(0, 0, 1)^2)",
                 "(p1 + p2) * p3 - 2 / (1 + p1^2)",
                 "atanh(p1 / 4) + tanh(p2) + sqrt(p3) + log(p3)"):
        tree = pe.parse_phi(text)
        assert pe.parse_phi(pe.to_text(tree)) == tree


def test_syntax_errors_with_position():
    with pytest.raises(pe.PhiSyntaxError) as err:
        pe.parse_phi("exp(-hypdist(0,0")
    assert err.value.position > 0
    with pytest.raises(pe.PhiSyntaxError):
        pe.parse_phi("")
    with pytest.raises(pe.PhiSyntaxError, match="unknown identifier"):
        pe.parse_phi("q1 + 1")
    with pytest.raises(pe.PhiSyntaxError, match="unknown function"):
        pe.parse_phi("sinh(p1)")
    with pytest.raises(pe.PhiSyntaxError, match="anchor"):
        pe.parse_phi("hypdist(p1, 0, 1)")
    with pytest.raises(pe.PhiSyntaxError, match="third entry"):
        pe.parse_phi("hypdist(0, 0, -1)")
    with pytest.raises(pe.PhiSyntaxError):
        pe.parse_phi("1 +")


def test_non_finite_rejected():
    with pytest.raises(ValueError, match="not finite"):
        pe.phi_to_prescribed("log(p1)")   # negative probes
    with pytest.raises(ValueError, match="not finite"):
        pe.phi_to_prescribed("sqrt(p1 - 2)")


def test_hypdist_matches_halfspace():
    from cmc_hyp.halfspace import dist
    phi = pe.phi_to_prescribed("hypdist(0.5, -0.25, 2)")
    p = np.array([0.1, 0.2, 1.3])
    assert float(phi.evaluate(p)) == pytest.approx(
        float(dist(p, np.array([0.5, -0.25, 2.0]))), abs=1e-14)


def test_constants_pi():
    phi = pe.phi_to_prescribed("pi * p3")
    assert float(phi.evaluate(np.array([0, 0, 2.0]))) == pytest.approx(
        2 * np.pi)
