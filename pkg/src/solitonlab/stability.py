"""Linearized operator L = Delta_L + 2 lambda + Lie_X on left-invariant tensors.

The operator is assembled in an orthonormal basis of symmetric 2-tensors
(components in the g0-orthonormal frame) and its quadratic form classified.

A structural fact drives the shape of the report: the left-invariant block
always contains *exact* neutral directions.  Conjugating g0 by automorphisms
of the algebra produces a manifold of isometric solitons, so tensors of the
form ``B^T g0 + g0 B`` with B a derivation (frame components ``Bhat^T +
Bhat``) are, at best, neutrally stable, and numerically they exhaust the
kernel of the symmetric part of L for every catalog entry.  The verdict is
therefore computed on the orthogonal complement of this gauge subspace
whenever the raw bound is neutral and every neutral eigenvector is certified
to lie inside the gauge span; the raw bound is always reported alongside.
The same applies to the Jacobian of the reduced normalized-flow ODE, whose
neutral modes span the tangent space of the fixed-point manifold (gauge by
automorphisms commuting with D); the rate predictor for flow experiments is
the spectral abscissa of its decaying part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .liealg import LieAlgebra, TOL_RANK, derivation_space
from .leftinv import (check_metric, curvature, lichnerowicz, lie_derivative_term,
                      orthonormal_frame)
from .soliton import SolitonCertificate, verify_soliton

#: classification threshold for the quadratic-form bound
TOL_SPEC = 1e-9
#: eigenvalues of the ODE Jacobian within this of zero count as neutral
TOL_NEUTRAL = 1e-6
#: a neutral eigenvector must project onto the gauge span within this residual
GAUGE_RESIDUAL_TOL = 1e-8


def sym_tensor_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of symmetric n x n matrices w.r.t. <A,B> = sum A_ij B_ij.

    Diagonal units E_ii first, then (E_ij + E_ji)/sqrt(2) for i < j in
    lexicographic order; m = n(n+1)/2 elements.
    """
    basis = []
    for i in range(n):
        E = np.zeros((n, n))
        E[i, i] = 1.0
        basis.append(E)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = inv_sqrt2
            basis.append(E)
    return basis


def vec_sym(h: np.ndarray, basis) -> np.ndarray:
    return np.array([float(np.sum(h * E)) for E in basis])


def unvec_sym(v: np.ndarray, basis) -> np.ndarray:
    out = np.zeros_like(basis[0])
    for coef, E in zip(v, basis):
        out += coef * E
    return out


@dataclass(frozen=True)
class StabilityReport:
    """Spectrum and verdict of L on the left-invariant block.

    ``quad_bound`` drives the classification: it is the largest eigenvalue
    of the symmetric part of ``lmat`` restricted to the orthogonal
    complement of the derivation-gauge subspace when the raw bound is
    neutral (and the neutral directions are certified gauge), otherwise the
    raw bound itself.  ``quad_bound_raw`` is the unrestricted bound;
    ``epsilon = -quad_bound`` when negative.  ``jac`` is the
    finite-difference Jacobian of the reduced normalized flow in the same
    basis; ``jac_decay_abscissa`` is the largest real part among its
    non-neutral eigenvalues (the predictor of nonlinear decay rates).
    """

    block: str
    lmat: np.ndarray
    spectrum: np.ndarray
    quad_bound: float
    quad_bound_raw: float
    epsilon: float
    classification: str
    gauge_dim: int
    neutral_dim: int
    neutral_gauge_residual: float
    complement_bound: float | None
    jac: np.ndarray
    jac_spectrum: np.ndarray
    jac_decay_abscissa: float | None
    jac_neutral_dim: int


def gauge_subspace(L: LieAlgebra, g0) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (Q, C) of the gauge span and its complement.

    The gauge span is {sym frame components of B^T g0 + g0 B : B in Der(L)},
    the tangent directions of conjugating g0 by automorphisms.  Columns of Q
    span it; columns of C span the orthogonal complement inside the
    m-dimensional coordinate space of ``sym_tensor_basis``.
    """
    g0 = check_metric(g0, L.n)
    F, _ = orthonormal_frame(L, g0)
    Finv = np.linalg.inv(F)
    basis = sym_tensor_basis(L.n)
    m = len(basis)
    ders = derivation_space(L)
    if ders.shape[0] == 0:
        return np.zeros((m, 0)), np.eye(m)
    cols = []
    for B in ders:
        Bhat = Finv @ B @ F
        cols.append(vec_sym(Bhat.T + Bhat, basis))
    A = np.array(cols).T  # m x (#derivations)
    U, s, _ = np.linalg.svd(A)
    rank = int(np.sum(s > TOL_RANK))
    return U[:, :rank], U[:, rank:]


def commuting_derivation_gauge(L: LieAlgebra, g0, D) -> np.ndarray:
    """Orthonormal basis of {sym(Bhat^T + Bhat) : B in Der(L), [B, D] = 0}.

    These are the tangent directions of the fixed-point manifold of the
    normalized flow (conjugation by automorphisms commuting with D), and
    numerically they span the neutral eigenspace of the ODE Jacobian.
    """
    g0 = check_metric(g0, L.n)
    n = L.n
    ders = derivation_space(L)
    if ders.shape[0] == 0:
        return np.zeros((n * (n + 1) // 2, 0))
    # solve for coefficients x with [sum_r x_r B_r, D] = 0 inside Der(L)
    comm = np.array([(B @ D - D @ B).ravel() for B in ders]).T
    _, s, vt = np.linalg.svd(comm, full_matrices=True)
    null = [vt[r] for r in range(ders.shape[0]) if r >= s.size or s[r] <= TOL_RANK]
    F, _ = orthonormal_frame(L, g0)
    Finv = np.linalg.inv(F)
    basis = sym_tensor_basis(n)
    cols = []
    for x in null:
        B = np.tensordot(x, ders, axes=1)
        Bhat = Finv @ B @ F
        cols.append(vec_sym(Bhat.T + Bhat, basis))
    if not cols:
        return np.zeros((len(basis), 0))
    A = np.array(cols).T
    U, s, _ = np.linalg.svd(A)
    rank = int(np.sum(s > TOL_RANK))
    return U[:, :rank]


def assemble_operator(L: LieAlgebra, g0, cert: SolitonCertificate) -> np.ndarray:
    """Matrix of L h = Delta_L h + 2 lambda h + D^T h + h D on the block.

    Columns are images of the orthonormal symmetric-tensor basis, all
    components in the g0-orthonormal frame (D is conjugated into the frame).
    """
    g0 = check_metric(g0, L.n)
    pkg = curvature(L, g0)
    F = pkg.frame
    Dhat = np.linalg.inv(F) @ np.asarray(cert.D, dtype=float) @ F
    basis = sym_tensor_basis(L.n)
    cols = []
    for E in basis:
        img = (lichnerowicz(L, g0, E, pkg=pkg)
               + 2.0 * cert.lam * E
               + lie_derivative_term(E, Dhat))
        cols.append(vec_sym(img, basis))
    return np.array(cols).T


def ode_jacobian(L: LieAlgebra, g0, cert: SolitonCertificate) -> np.ndarray:
    """Central finite-difference Jacobian of the reduced normalized flow.

    Computed in the same frame-adapted orthonormal tensor basis as the
    stability operator so the two matrices are directly comparable; step
    1e-6 relative to ``|g0|_F``, entrywise error O(step^2).
    """
    from .flow import rhs_normalized

    g0 = check_metric(g0, L.n)
    F, _ = orthonormal_frame(L, g0)
    Finv = np.linalg.inv(F)
    basis = sym_tensor_basis(L.n)
    s = 1e-6 * max(1.0, float(np.linalg.norm(g0)))
    cols = []
    for E in basis:
        dg = Finv.T @ E @ Finv   # defining-basis tensor with frame components E
        rp = rhs_normalized(L, g0 + s * dg, cert)
        rm = rhs_normalized(L, g0 - s * dg, cert)
        diff = (rp - rm) / (2.0 * s)
        cols.append(vec_sym(F.T @ diff @ F, basis))
    return np.array(cols).T


def _neutral_eigs(values, tol):
    return [i for i, w in enumerate(values) if abs(w) <= tol]


def stability_operator(L: LieAlgebra, g0, cert: SolitonCertificate,
                       tol=TOL_SPEC) -> StabilityReport:
    """Assemble L, classify the quadratic form, and attach the ODE Jacobian.

    The certificate is re-verified first (the operator is only meaningful
    at a soliton).  See the module docstring for how neutral gauge modes
    are handled in the verdict.
    """
    g0 = check_metric(g0, L.n)
    ver = verify_soliton(L, g0, cert.lam, cert.D, tol=1e-8)
    if not ver.passed:
        raise InvalidInput(
            "certificate does not verify at (L, g0): residuals "
            f"{ver.soliton_residual:.2e}, {ver.derivation_residual:.2e}")

    lmat = assemble_operator(L, g0, cert)
    spectrum = np.linalg.eigvals(lmat)
    sym = 0.5 * (lmat + lmat.T)
    w, V = np.linalg.eigh(sym)
    quad_raw = float(w.max())

    Q, C = gauge_subspace(L, g0)
    neutral_idx = _neutral_eigs(w, tol)
    if neutral_idx and Q.shape[1] > 0:
        vecs = V[:, neutral_idx]
        resid = float(np.linalg.norm(vecs - Q @ (Q.T @ vecs), axis=0).max())
    elif neutral_idx:
        resid = 1.0  # neutral modes but no gauge directions at all
    else:
        resid = 0.0

    complement_bound = None
    if C.shape[1] > 0:
        complement_bound = float(np.linalg.eigvalsh(
            0.5 * (C.T @ lmat @ C + (C.T @ lmat @ C).T)).max())

    if quad_raw < -tol or quad_raw > tol:
        quad_bound = quad_raw
    elif (neutral_idx and resid <= GAUGE_RESIDUAL_TOL
          and complement_bound is not None):
        # neutral directions are pure gauge; verdict from the complement
        quad_bound = complement_bound
    else:
        quad_bound = quad_raw

    if quad_bound < -tol:
        classification = "strict"
    elif quad_bound > tol:
        classification = "unstable"
    else:
        classification = "weak"
    epsilon = -quad_bound if quad_bound < 0 else 0.0

    jac = ode_jacobian(L, g0, cert)
    jac_spectrum = np.linalg.eigvals(jac)
    re = jac_spectrum.real
    decaying = re[re < -TOL_NEUTRAL]
    return StabilityReport(
        block="left-invariant",
        lmat=lmat,
        spectrum=spectrum,
        quad_bound=float(quad_bound),
        quad_bound_raw=quad_raw,
        epsilon=float(epsilon),
        classification=classification,
        gauge_dim=int(Q.shape[1]),
        neutral_dim=len(neutral_idx),
        neutral_gauge_residual=resid,
        complement_bound=complement_bound,
        jac=jac,
        jac_spectrum=jac_spectrum,
        jac_decay_abscissa=float(decaying.max()) if decaying.size else None,
        jac_neutral_dim=int(np.sum(np.abs(re) <= TOL_NEUTRAL)),
    )


def classify(report: StabilityReport, tol=TOL_SPEC) -> str:
    """Re-threshold a report's quad_bound at a different tolerance."""
    if report.quad_bound < -tol:
        return "strict"
    if report.quad_bound > tol:
        return "unstable"
    return "weak"
