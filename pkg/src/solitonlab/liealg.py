"""Finite-dimensional real Lie algebras given by structure constants.

A Lie algebra is stored as its dimension together with the sparse list of
bracket entries ``[e_i, e_j] = sum_k c^k_ij e_k`` for ``i < j``; the dense
``c[k, i, j]`` tensor (antisymmetric in ``i, j``) is expanded on demand.
All algebraic identities are checked in double precision against absolute
tolerances: the inputs of interest are O(1) rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput

#: absolute tolerance for algebraic identities (Jacobi, derivation, ...)
TOL_ALG = 1e-12
#: singular-value threshold for numerical rank / null-space computations
TOL_RANK = 1e-10


@dataclass(frozen=True)
class LieAlgebra:
    """Lie algebra of dimension ``n`` with sparse structure constants.

    Parameters
    ----------
    n : int
        Dimension (number of basis vectors ``e_1, ..., e_n``; indices are
        0-based internally, 1-based in file formats).
    entries : tuple
        Bracket entries ``(i, j, k, value)`` with ``i < j``, meaning the
        ``e_k`` coefficient of ``[e_i, e_j]`` is ``value``.  Antisymmetry
        is enforced by the storage convention.
    """

    n: int
    entries: tuple = ()
    _dense: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n <= 0:
            raise InvalidInput(f"dimension must be a positive integer, got {self.n!r}")
        norm = []
        for ent in self.entries:
            i, j, k, val = ent
            i, j, k = int(i), int(j), int(k)
            val = float(val)
            if not (0 <= i < self.n and 0 <= j < self.n and 0 <= k < self.n):
                raise InvalidInput(f"bracket entry {ent!r} out of range for n={self.n}")
            if i >= j:
                raise InvalidInput(f"bracket entry {ent!r} must have i < j")
            if not np.isfinite(val):
                raise InvalidInput(f"non-finite structure constant in entry {ent!r}")
            norm.append((i, j, k, val))
        object.__setattr__(self, "entries", tuple(norm))
        c = np.zeros((self.n, self.n, self.n))
        for i, j, k, val in norm:
            c[k, i, j] += val
            c[k, j, i] -= val
        c.flags.writeable = False
        object.__setattr__(self, "_dense", c)

    @property
    def c(self) -> np.ndarray:
        """Dense structure constants, ``c[k, i, j]`` = e_k-component of [e_i, e_j]."""
        return self._dense

    def __repr__(self):
        return f"LieAlgebra(n={self.n}, entries={self.entries})"


@dataclass(frozen=True)
class LinearMap:
    """An n x n endomorphism with a role tag ('derivation', 'basis_change', ...)."""

    mat: np.ndarray
    role: str = "endomorphism"

    def __post_init__(self):
        a = np.asarray(self.mat, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput(f"LinearMap must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("LinearMap has non-finite entries")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "mat", a)


def _as_matrix(D) -> np.ndarray:
    if isinstance(D, LinearMap):
        return D.mat
    a = np.asarray(D, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ValidationReport:
    jacobi_residual: float
    antisymmetry_residual: float
    passed: bool
    tol: float = TOL_ALG


def jacobi_residual(L: LieAlgebra) -> float:
    """Max-norm of the Jacobi tensor [[e_i,e_j],e_k] + cyclic."""
    c = L.c
    # [[e_i, e_j], e_k]^l = c^m_ij c^l_mk
    t = np.einsum("mij,lmk->lijk", c, c)
    jac = t + np.einsum("lijk->ljki", t) + np.einsum("lijk->lkij", t)
    return float(np.abs(jac).max()) if L.n > 1 else 0.0


def validate(L: LieAlgebra, tol: float = TOL_ALG) -> ValidationReport:
    """Check antisymmetry and the Jacobi identity to ``tol``.

    Antisymmetry is enforced by the sparse storage, so its residual is
    computed from the dense expansion as a consistency check only.
    """
    if not (np.isfinite(tol) and tol > 0):
        raise InvalidInput(f"tolerance must be positive, got {tol}")
    c = L.c
    if not np.all(np.isfinite(c)):
        raise InvalidInput("non-finite structure constants")
    anti = float(np.abs(c + np.swapaxes(c, 1, 2)).max())
    jac = jacobi_residual(L)
    return ValidationReport(jac, anti, passed=(jac <= tol and anti <= tol), tol=tol)


def bracket(L: LieAlgebra, x, y) -> np.ndarray:
    """Lie bracket ``[x, y]^k = c^k_ij x^i y^j`` of coordinate vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (L.n,) or y.shape != (L.n,):
        raise InvalidInput(f"vectors must have length {L.n}, got {x.shape} and {y.shape}")
    return np.einsum("kij,i,j->k", L.c, x, y)


def ad(L: LieAlgebra, x) -> np.ndarray:
    """Adjoint map ad_x = [x, .] as a matrix."""
    x = np.asarray(x, dtype=float)
    return np.einsum("kij,i->kj", L.c, x)


def derivation_defect(L: LieAlgebra, D) -> np.ndarray:
    """Tensor D[e_i,e_j] - [De_i,e_j] - [e_i,De_j], indexed ``[k, i, j]``."""
    Dm = _as_matrix(D)
    if Dm.shape != (L.n, L.n):
        raise InvalidInput(f"derivation candidate must be {L.n}x{L.n}")
    c = L.c
    return (np.einsum("km,mij->kij", Dm, c)
            - np.einsum("kmj,mi->kij", c, Dm)
            - np.einsum("kim,mj->kij", c, Dm))


def is_derivation(L: LieAlgebra, D) -> float:
    """Max-norm residual of the derivation identity; 0 iff D is a derivation."""
    return float(np.abs(derivation_defect(L, D)).max())


def derivation_space(L: LieAlgebra) -> np.ndarray:
    """Basis of Der(L) as an array of shape ``(dim Der, n, n)``.

    The derivation condition is linear in the n^2 unknowns D[p, q]; the
    null space of the n^3 x n^2 constraint system is extracted by SVD
    with singular values thresholded at ``TOL_RANK``.
    """
    n = L.n
    c = L.c
    M = np.zeros((n * n * n, n * n))

    def col(p, q):
        return p * n + q

    r = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                # D[e_i, e_j]^k  ->  + c[q, i, j] on D[k, q]
                for q in range(n):
                    M[r, col(k, q)] += c[q, i, j]
                # -[De_i, e_j]^k ->  - c[k, p, j] on D[p, i]
                for p in range(n):
                    M[r, col(p, i)] -= c[k, p, j]
                    M[r, col(p, j)] -= c[k, i, p]
                r += 1
    _, s, vt = np.linalg.svd(M)
    ns = [vt[r] for r in range(n * n) if r >= s.size or s[r] <= TOL_RANK]
    return np.array([v.reshape(n, n) for v in ns])


def _span_rank(vectors, tol=TOL_RANK):
    """Orthonormal basis of the span of the given stacked row vectors."""
    if len(vectors) == 0:
        return np.zeros((0, 0))
    A = np.array(vectors)
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    return vt[: int(np.sum(s > tol))]


def series_flags(L: LieAlgebra) -> dict:
    """Nilpotency / solvability / unimodularity flags.

    Lower central and derived series are computed by iterated spans of
    brackets until the dimension stabilizes; unimodular iff every ad_x is
    trace-free.
    """
    n = L.n
    c = L.c
    basis = np.eye(n)

    def bracket_span(U, V):
        # span of [u, v] over the rows of U and V
        vecs = [np.einsum("kij,i,j->k", c, u, v) for u in U for v in V]
        return _span_rank(vecs)

    # lower central series: g_1 = [g, g], g_{m+1} = [g, g_m]
    lcs = bracket_span(basis, basis)
    while True:
        nxt = bracket_span(basis, lcs) if lcs.shape[0] else lcs
        if nxt.shape[0] in (0, lcs.shape[0]):
            lcs = nxt
            break
        lcs = nxt
    nilpotent = lcs.shape[0] == 0

    # derived series: g^(1) = [g, g], g^(m+1) = [g^(m), g^(m)]
    der = bracket_span(basis, basis)
    while True:
        nxt = bracket_span(der, der) if der.shape[0] else der
        if nxt.shape[0] in (0, der.shape[0]):
            der = nxt
            break
        der = nxt
    solvable = der.shape[0] == 0

    traces = np.einsum("kik->i", c)  # tr ad_{e_i} = c[k, i, k]
    unimodular = bool(np.abs(traces).max() <= TOL_ALG) if n > 0 else True
    return {"nilpotent": bool(nilpotent), "solvable": bool(solvable),
            "unimodular": unimodular}


def change_basis(L: LieAlgebra, A) -> LieAlgebra:
    """Structure constants in the basis ``ebar_i = A^{-1} e_i``.

    The new bracket of coordinate vectors is ``A [A^{-1} x, A^{-1} y]``,
    i.e. ``c'[m, i, j] = A[m, k] c[k, a, b] Ainv[a, i] Ainv[b, j]``; Jacobi
    is preserved exactly (up to roundoff).
    """
    Am = _as_matrix(A)
    if Am.shape != (L.n, L.n):
        raise InvalidInput(f"basis change must be {L.n}x{L.n}")
    det = np.linalg.det(Am)
    if abs(det) <= TOL_ALG:
        raise InvalidInput(f"basis change is singular (det={det:.3e})")
    Ainv = np.linalg.inv(Am)
    cnew = np.einsum("mk,kab,ai,bj->mij", Am, L.c, Ainv, Ainv)
    ents = []
    for i in range(L.n):
        for j in range(i + 1, L.n):
            for k in range(L.n):
                if abs(cnew[k, i, j]) > 1e-15:
                    ents.append((i, j, k, float(cnew[k, i, j])))
    return LieAlgebra(L.n, tuple(ents))
