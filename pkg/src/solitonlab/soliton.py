"""Algebraic soliton equation: solve, verify, and the closed-form flow solution.

An algebraic soliton is a metric whose Ricci endomorphism splits as
``Rc = lambda * id + D`` with D a derivation.  Since ``D := Rc - lambda*id``
satisfies the soliton equation identically, the only freedom is lambda, and
the derivation defect of D is affine in lambda:

    defect(lambda) = defect(Rc) + lambda * c

(the derivation defect of the identity is ``-c``).  The optimal lambda is
therefore the one-parameter linear least-squares minimizer
``lambda* = -<defect(Rc), c> / <c, c>``; for abelian algebras (c = 0) any
lambda works and we report the flat certificate with lambda = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, UnsupportedDerivation
from .liealg import LieAlgebra, _as_matrix, derivation_defect, is_derivation, series_flags
from .leftinv import check_metric, curvature

#: residual threshold for accepting a soliton certificate
TOL_SOL = 1e-10


@dataclass(frozen=True)
class SolitonCertificate:
    """lambda, derivation D, max residual, and classification of a soliton.

    ``classification`` is one of 'Einstein', 'nilsoliton', 'solvsoliton',
    'flat', 'none'.  Non-flat, non-Einstein solitons must be expanding
    (lambda < 0); candidates violating this are classified 'none'.
    """

    lam: float
    D: np.ndarray
    residual: float
    classification: str

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float).copy()
        D.flags.writeable = False
        object.__setattr__(self, "D", D)


@dataclass(frozen=True)
class SolitonVectorField:
    """Eigen-data of the soliton derivation: X0 = sum_i d_i x^i d/dx^i.

    ``d`` holds the eigenvalues of D sorted ascending and ``frame`` the
    matching eigenbasis (orthonormal when D is symmetric).  In these
    coordinates |X0(x)| <= max|d_i| * |x|: the field grows linearly.
    """

    d: np.ndarray
    frame: np.ndarray


@dataclass(frozen=True)
class VerificationReport:
    soliton_residual: float
    derivation_residual: float
    tol: float
    passed: bool


def solve_soliton(L: LieAlgebra, g) -> SolitonCertificate:
    """Best algebraic-soliton certificate for (L, g).

    Computes the Ricci endomorphism, solves the least-squares problem for
    lambda, sets ``D = Rc - lambda*id`` and classifies the result using the
    structural flags of L.  If the derivation residual exceeds ``TOL_SOL``
    the classification is 'none' with the best-effort lambda and D reported.
    """
    g = check_metric(g, L.n)
    pkg = curvature(L, g)
    c = L.c
    c2 = float(np.sum(c * c))
    if c2 == 0.0:
        lam = 0.0
    else:
        lam = -float(np.sum(derivation_defect(L, pkg.Rc) * c)) / c2
    D = pkg.Rc - lam * np.eye(L.n)
    residual = is_derivation(L, D)
    flags = series_flags(L)

    flat = float(np.abs(pkg.Rm).max()) <= TOL_SOL
    einstein = float(np.abs(D).max()) <= TOL_SOL
    if residual > TOL_SOL:
        cls = "none"
    elif flat:
        cls = "flat"
    elif einstein:
        cls = "Einstein"
    elif lam >= -TOL_SOL:
        # non-Einstein solitons on these groups must be expanding
        cls = "none"
    elif flags["nilpotent"]:
        cls = "nilsoliton"
    elif flags["solvable"]:
        cls = "solvsoliton"
    else:
        cls = "none"
    return SolitonCertificate(lam=float(lam), D=D, residual=float(residual),
                              classification=cls)


def verify_soliton(L: LieAlgebra, g, lam, D, tol=TOL_SOL) -> VerificationReport:
    """Recompute both residuals of a supplied (lambda, D) pair."""
    g = check_metric(g, L.n)
    Dm = _as_matrix(D)
    pkg = curvature(L, g)
    sol_res = float(np.abs(pkg.Rc - lam * np.eye(L.n) - Dm).max())
    der_res = is_derivation(L, Dm)
    return VerificationReport(soliton_residual=sol_res, derivation_residual=der_res,
                              tol=float(tol), passed=(sol_res <= tol and der_res <= tol))


def soliton_vector_field(cert: SolitonCertificate) -> SolitonVectorField:
    """Eigenvalues and eigenbasis of the certificate derivation.

    Raises ``UnsupportedDerivation`` when the spectrum is not real or D is
    defective (the coordinate form of X0 presumes real diagonalizability).
    """
    if cert.classification not in ("nilsoliton", "solvsoliton", "Einstein", "flat"):
        raise UnsupportedDerivation(
            f"certificate class {cert.classification!r} carries no soliton field")
    D = np.asarray(cert.D, dtype=float)
    n = D.shape[0]
    if np.abs(D - D.T).max() <= 1e-12 * max(1.0, np.abs(D).max()):
        w, V = np.linalg.eigh(0.5 * (D + D.T))
        return SolitonVectorField(d=w, frame=V)
    w, V = np.linalg.eig(D)
    if np.abs(w.imag).max() > 1e-10:
        raise UnsupportedDerivation(
            f"derivation has non-real eigenvalues {np.round(w, 6)}")
    if np.linalg.matrix_rank(V, tol=1e-10) < n:
        # report the Jordan structure: geometric multiplicities per eigenvalue
        mult = {}
        for val in np.unique(np.round(w.real, 9)):
            mult[float(val)] = n - np.linalg.matrix_rank(D - val * np.eye(n), tol=1e-9)
        raise UnsupportedDerivation(
            f"derivation is defective; geometric multiplicities {mult}")
    order = np.argsort(w.real)
    return SolitonVectorField(d=w.real[order], frame=V.real[:, order])


def exact_unnormalized_solution(g0, cert: SolitonCertificate, t, phi_form=False) -> np.ndarray:
    """Closed-form solution of the unnormalized flow  dg/dt = -2 ric(g).

    Starting from a soliton metric g0 the solution is the pullback by the
    positive-definite automorphism

        P(t) = (-2 lambda t + 1) * exp[ log(-2 lambda t + 1) / lambda * D ],

    i.e. ``g(t) = <P(t) . , . >_0 = g0 @ P(t)`` (symmetric because D is
    g0-self-adjoint).  For lambda = 0 this degenerates to exp(-2 t D).

    With ``phi_form=True`` the alternative square-root-pullback expression
    ``(-2 lambda t + 1) * phi(t)^T g0 phi(t)`` with
    ``phi(t) = exp[log(-2 lambda t + 1) / (-2 lambda) * D]`` is returned
    instead.  It is kept for comparison only: it does *not* satisfy the
    flow ODE (its center direction grows where the flow decays).
    """
    g0 = check_metric(g0)
    D = np.asarray(cert.D, dtype=float)
    lam = float(cert.lam)
    if np.abs(g0 @ D - D.T @ g0).max() > 1e-10 * max(1.0, np.abs(g0).max(), np.abs(D).max()):
        raise UnsupportedDerivation("D is not self-adjoint with respect to g0")
    s = 1.0 - 2.0 * lam * t
    if s <= 0.0:
        raise DomainError(f"t={t} outside domain: need -2*lambda*t + 1 > 0")
    if phi_form:
        if lam == 0.0:
            raise DomainError("phi form requires lambda != 0")
        phi = expm((np.log(s) / (-2.0 * lam)) * D)
        gt = s * (phi.T @ g0 @ phi)
        return 0.5 * (gt + gt.T)
    if lam == 0.0:
        P = expm(-2.0 * t * D)
    else:
        P = s * expm((np.log(s) / lam) * D)
    gt = g0 @ P
    return 0.5 * (gt + gt.T)
