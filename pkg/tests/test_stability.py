import numpy as np
import pytest

from solitonlab import catalog
from solitonlab.liealg import change_basis
from solitonlab.soliton import solve_soliton
from solitonlab.stability import (
    assemble_operator,
    classify,
    gauge_subspace,
    ode_jacobian,
    stability_operator,
    sym_tensor_basis,
    unvec_sym,
    vec_sym,
)

# classification, sharp quadratic-form bound on the gauge complement, and
# decaying spectral abscissa of the ODE jacobian -- frozen after the
# assembled operator matched the loop-built Lichnerowicz oracle
EXPECTED = {
    "nil3":      ("strict", -3.0,  -1.0),
    "sol3":      ("strict", -4.0,  -2.0),
    "nil4":      ("strict", -2.5,  -0.5),
    "heis5":     ("strict", -2.0,  -1.5),
    "hyp_3":     ("strict", -4.0,  -4.0),
    "hyp_6":     ("strict", -10.0, -10.0),
    "heis3_ext": ("strict", -2.25, -2.25),
}


def report_for(name):
    e = catalog.get(name)
    cert = solve_soliton(e.algebra, e.metric)
    return e, cert, stability_operator(e.algebra, e.metric, cert)


def test_sym_basis_orthonormal_roundtrip():
    rng = np.random.default_rng(0)
    for n in (2, 3, 5):
        basis = sym_tensor_basis(n)
        assert len(basis) == n * (n + 1) // 2
        G = np.array([[np.sum(a * b) for b in basis] for a in basis])
        assert np.allclose(G, np.eye(len(basis)), atol=1e-14)
        A = rng.standard_normal((n, n))
        h = 0.5 * (A + A.T)
        assert np.allclose(unvec_sym(vec_sym(h, basis), basis), h, atol=1e-14)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_frozen_stability_table(name):
    _, _, rep = report_for(name)
    cls, quad, absc = EXPECTED[name]
    assert rep.classification == cls
    assert abs(rep.quad_bound - quad) < 1e-8
    assert abs(rep.jac_decay_abscissa - absc) < 1e-6
    assert rep.epsilon > 0


def test_abelian_is_weak_with_zero_operator():
    for n in (2, 3, 7):
        _, _, rep = report_for(f"abelian_{n}")
        assert rep.classification == "weak"
        assert np.max(np.abs(rep.lmat)) < 1e-12
        assert np.max(np.abs(rep.jac)) < 1e-9


def test_neutral_modes_are_pure_gauge():
    """Zero eigenvalues of sym(Lmat) lie in the derivation gauge span."""
    for name in sorted(EXPECTED):
        _, _, rep = report_for(name)
        assert 0 < rep.neutral_dim <= rep.gauge_dim
        assert rep.neutral_gauge_residual < 1e-8
        assert rep.complement_bound < -1e-3


def test_rayleigh_consistency():
    """No unit tensor beats the raw symmetric-part bound."""
    rng = np.random.default_rng(31)
    for name in ("nil3", "sol3", "heis5", "hyp_4"):
        e, cert, rep = report_for(name)
        m = rep.lmat.shape[0]
        sym_part = 0.5 * (rep.lmat + rep.lmat.T)
        for _ in range(100):
            v = rng.standard_normal(m)
            v /= np.linalg.norm(v)
            assert v @ sym_part @ v <= rep.quad_bound_raw + 1e-9


def test_operator_matrix_is_lichnerowicz_assembly():
    for name in ("nil3", "sol3", "hyp_3"):
        e, cert, rep = report_for(name)
        assert np.allclose(rep.lmat, assemble_operator(e.algebra, e.metric, cert),
                           atol=1e-13)


def test_spectrum_invariant_under_orthogonal_change():
    rng = np.random.default_rng(77)
    for name in ("nil3", "nil4", "sol3"):
        e = catalog.get(name)
        n = e.algebra.n
        cert = solve_soliton(e.algebra, e.metric)
        rep = stability_operator(e.algebra, e.metric, cert)
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        L2 = change_basis(e.algebra, Q)
        g2 = Q @ np.asarray(e.metric) @ Q.T
        cert2 = solve_soliton(L2, g2)
        rep2 = stability_operator(L2, g2, cert2)
        s1 = np.sort_complex(rep.spectrum)
        s2 = np.sort_complex(rep2.spectrum)
        assert np.max(np.abs(s1 - s2)) < 1e-8


def test_einstein_metrics_have_eigenvalue_two_lambda():
    for name in ("hyp_2", "hyp_4", "hyp_6", "heis3_ext"):
        e, cert, rep = report_for(name)
        gap = np.min(np.abs(rep.spectrum - 2.0 * cert.lam))
        assert gap < 1e-9, name


def test_gauge_subspace_shapes_and_orthogonality():
    e = catalog.get("nil3")
    Q, C = gauge_subspace(e.algebra, e.metric)
    m = 6
    assert Q.shape[0] == m and C.shape[0] == m
    assert Q.shape[1] + C.shape[1] == m
    assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-12)
    assert np.max(np.abs(Q.T @ C)) < 1e-12


def test_ode_jacobian_linearizes_rhs():
    from solitonlab.flow import rhs_normalized
    from solitonlab.leftinv import orthonormal_frame

    e = catalog.get("sol3")
    cert = solve_soliton(e.algebra, e.metric)
    J = ode_jacobian(e.algebra, e.metric, cert)
    basis = sym_tensor_basis(3)
    F, _ = orthonormal_frame(e.algebra, np.asarray(e.metric))
    rng = np.random.default_rng(4)
    A = rng.standard_normal((3, 3))
    h = 0.5 * (A + A.T)
    pred = unvec_sym(J @ vec_sym(F.T @ h @ F, basis), basis)
    errs = []
    for s in (1e-2, 5e-3):
        g0 = np.asarray(e.metric)
        diff = (rhs_normalized(e.algebra, g0 + s * h, cert)
                - rhs_normalized(e.algebra, g0 - s * h, cert)) / (2 * s)
        errs.append(np.linalg.norm(F.T @ diff @ F - pred))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_classify_thresholds():
    _, _, rep = report_for("nil3")
    assert classify(rep) == "strict"
    weak = type(rep)(**{**rep.__dict__, "quad_bound": 0.0})
    assert classify(weak) == "weak"
    bad = type(rep)(**{**rep.__dict__, "quad_bound": 0.3})
    assert classify(bad) == "unstable"
