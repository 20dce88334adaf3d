"""Left-invariant Riemannian geometry from structure constants.

Everything is computed in a g-orthonormal frame obtained by Gram-Schmidt
on the defining basis in index order (equivalently from the Cholesky
factor of g), where the Koszul formula and the index gymnastics of the
curvature action are simplest.  Curvature components follow the sign
convention

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
    R_ijkl   = < R(f_i, f_j) f_l , f_k >,

pinned by requiring the 2D hyperbolic model ([e2,e1] = e1) to have
sectional curvature K = R_1212 = -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMetric
from .liealg import LieAlgebra, _as_matrix

#: symmetry tolerance for metrics and symmetric 2-tensors
SYM_TOL = 1e-14


def check_metric(g, n=None) -> np.ndarray:
    """Validate an SPD matrix and return it as a float array."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidMetric(f"metric must be square, got shape {g.shape}")
    if n is not None and g.shape[0] != n:
        raise InvalidMetric(f"metric must be {n}x{n}, got {g.shape[0]}x{g.shape[0]}")
    if not np.all(np.isfinite(g)):
        raise InvalidMetric("metric has non-finite entries")
    scale = max(1.0, float(np.abs(g).max()))
    if np.abs(g - g.T).max() > SYM_TOL * scale:
        raise InvalidMetric("metric is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise InvalidMetric("metric is not positive definite") from None
    return 0.5 * (g + g.T)


def sym2(h, n=None) -> np.ndarray:
    """Validate a symmetric 2-tensor (matrix) and return a symmetrized copy."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidMetric(f"tensor must be square, got shape {h.shape}")
    if n is not None and h.shape[0] != n:
        raise InvalidMetric(f"tensor must be {n}x{n}")
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.T).max() > SYM_TOL * scale:
        raise InvalidMetric("tensor is not symmetric")
    return 0.5 * (h + h.T)


def orthonormal_frame(L: LieAlgebra, g) -> tuple[np.ndarray, np.ndarray]:
    """g-orthonormal frame and the structure constants expressed in it.

    Returns ``(F, c_frame)`` where the columns of F are the frame vectors
    (so ``F.T @ g @ F = I``) and ``c_frame[m, a, b]`` is the f_m-component
    of ``[f_a, f_b]``.  F is upper triangular with positive diagonal: this
    is exactly Gram-Schmidt applied to ``e_1, ..., e_n`` in index order.
    """
    g = check_metric(g, L.n)
    C = np.linalg.cholesky(g)          # g = C C^T, C lower triangular
    F = np.linalg.inv(C).T             # F^T g F = I
    u = np.einsum("kij,ia,jb->kab", L.c, F, F)
    c_frame = np.einsum("mk,kab->mab", C.T, u)   # F^{-1} = C^T
    return F, c_frame


@dataclass(frozen=True)
class CurvaturePackage:
    """Connection and curvature of (L, g) in the orthonormal frame.

    Attributes
    ----------
    frame : (n, n) array
        Columns are the g-orthonormal frame vectors.
    c_frame : (n, n, n) array
        Structure constants in the frame.
    gamma : (n, n, n) array
        Connection coefficients ``gamma[k, i, j] = <nabla_{f_i} f_j, f_k>``.
    Rm : (n, n, n, n) array
        Curvature components ``R_ijkl`` in the frame.
    ric_frame, ric : (n, n) arrays
        Ricci bilinear form in the frame / in the defining basis.
    Rc : (n, n) array
        Ricci endomorphism ``g^{-1} ric`` in the defining basis.
    scal : float
        Scalar curvature.
    """

    frame: np.ndarray
    c_frame: np.ndarray
    gamma: np.ndarray
    Rm: np.ndarray
    ric_frame: np.ndarray
    ric: np.ndarray
    Rc: np.ndarray
    scal: float


def curvature(L: LieAlgebra, g) -> CurvaturePackage:
    """Connection, curvature tensor, Ricci and scalar curvature of (L, g).

    The Koszul formula in an orthonormal frame reduces to

        gamma[k, i, j] = (c[k,i,j] - c[i,j,k] + c[j,k,i]) / 2,

    which is metric-compatible (antisymmetric in k <-> j).  The curvature
    is assembled termwise from gamma and the frame brackets; since the
    fields are left-invariant there are no derivative terms.
    """
    g = check_metric(g, L.n)
    F, ch = orthonormal_frame(L, g)
    gamma = 0.5 * (ch - np.einsum("ijk->kij", ch) + np.einsum("jki->kij", ch))
    # R(f_i, f_j) f_l = (gamma^p_jl gamma^k_ip - gamma^p_il gamma^k_jp
    #                    - c^p_ij gamma^k_pl) f_k
    Rm = (np.einsum("pjl,kip->ijkl", gamma, gamma)
          - np.einsum("pil,kjp->ijkl", gamma, gamma)
          - np.einsum("pij,kpl->ijkl", ch, gamma))
    ric_frame = np.einsum("ijil->jl", Rm)
    ric_frame = 0.5 * (ric_frame + ric_frame.T)
    Finv = np.linalg.inv(F)
    ric = Finv.T @ ric_frame @ Finv
    ric = 0.5 * (ric + ric.T)
    Rc = np.linalg.solve(g, ric)
    scal = float(np.trace(ric_frame))
    return CurvaturePackage(frame=F, c_frame=ch, gamma=gamma, Rm=Rm,
                            ric_frame=ric_frame, ric=ric, Rc=Rc, scal=scal)


def curvature_action(pkg: CurvaturePackage, h) -> np.ndarray:
    """Action of the curvature tensor on a symmetric 2-tensor.

    ``(Rh)_ij = sum_kl R_ikjl h_kl`` with all components in the
    orthonormal frame.  For h = g (the identity in the frame) this reduces
    to the Ricci form, which is used as a self-test elsewhere.
    """
    h = sym2(h, pkg.Rm.shape[0])
    out = np.einsum("ikjl,kl->ij", pkg.Rm, h)
    return 0.5 * (out + out.T)


def _cov_derivative_maps(pkg: CurvaturePackage) -> np.ndarray:
    """Matrices G_i with (G_i)[p, q] = gamma[p, i, q]; each is antisymmetric."""
    return np.einsum("piq->ipq", pkg.gamma)


def lichnerowicz(L: LieAlgebra, g, h, pkg: CurvaturePackage | None = None) -> np.ndarray:
    """Lichnerowicz Laplacian on a left-invariant symmetric 2-tensor.

    Parameters
    ----------
    h : (n, n) array
        Components in the g-orthonormal frame.
    pkg : CurvaturePackage, optional
        Pass a precomputed package to avoid recomputing the curvature.

    Returns
    -------
    (n, n) array
        ``Delta_L h = Delta h + 2 Rh - Rc h - h Rc`` in frame components,
        where ``Delta`` is the rough Laplacian.  On left-invariant tensors
        the covariant derivative along f_i acts as the commutator with the
        (antisymmetric) connection matrix G_i, so

            Delta h = sum_i [G_i, [G_i, h]] - sum_k (sum_i gamma[k,i,i]) [G_k, h].
    """
    if pkg is None:
        pkg = curvature(L, g)
    n = pkg.Rm.shape[0]
    h = sym2(h, n)
    G = _cov_derivative_maps(pkg)
    rough = np.zeros_like(h)
    for i in range(n):
        Th = G[i] @ h - h @ G[i]
        rough += G[i] @ Th - Th @ G[i]
    trace_gamma = np.einsum("kii->k", pkg.gamma)
    for k in range(n):
        if trace_gamma[k] != 0.0:
            rough -= trace_gamma[k] * (G[k] @ h - h @ G[k])
    # in the orthonormal frame the Ricci endomorphism equals the Ricci form
    ric = pkg.ric_frame
    out = rough + 2.0 * curvature_action(pkg, h) - ric @ h - h @ ric
    return 0.5 * (out + out.T)


def lie_derivative_term(h, D) -> np.ndarray:
    """Lie derivative of a left-invariant 2-tensor along the field of D.

    The flow of the soliton field acts by automorphisms whose derivative
    at the identity is D, so on left-invariant tensors the Lie derivative
    is the algebraic expression ``D^T h + h D``.
    """
    Dm = _as_matrix(D)
    h = np.asarray(h, dtype=float)
    out = Dm.T @ h + h @ Dm
    return 0.5 * (out + out.T)
