"""Coordinate-chart machinery: weights, discrete norms, and the FD operator.

This module is the PDE-facing counterpart of `leftinv`/`stability`.  It
works with metric coefficient fields g_ij(x) on a single global chart,
assembles the linearized operator

    L h = Delta_L h + 2*lam*h + Lie_{X0} h,    X0 = d_k x^k d/dx^k,

by finite differences on a cube grid, and provides the weight function
f_tau together with the annulus-based weighted Hölder norm used to
measure decay of compactly supported perturbations.

Conventions match `leftinv` exactly: Rm[i,j,k,l] = <R(ei,ej)el, ek>,
ric_{jl} = g^{ik} Rm[i,j,k,l], and Delta_L h = Delta h + 2*Rm(h)
- Rc.h - h.Rc.  Chart metrics are validated at load time against the
left-invariant curvature of the matching catalog algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate as _integrate
from scipy import sparse as _sparse
from scipy.sparse import csgraph as _csgraph

from .errors import GridTooCoarse, InvalidInput, InvalidWeight, NotInCatalog

_JET_STEP = 1e-2  # step for numeric differentiation of closed-form metrics


# ---------------------------------------------------------------------------
# weights and summability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """Weight f_tau on annulus radii.

    a = 0  ->  f_tau(R) = R^(n+tau),   legal for tau > 1;
    a < 0  ->  f_tau(R) = e^((n+tau)R), legal for tau > 0.

    `a` is the curvature lower bound of the comparison space form used
    in the volume estimates.
    """

    a: float
    n: int
    tau: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.tau)):
            raise InvalidWeight("weight parameters must be finite")
        if self.a > 0:
            raise InvalidWeight(f"curvature bound must be <= 0, got a={self.a}")
        if int(self.n) != self.n or self.n < 2:
            raise InvalidWeight(f"dimension must be an integer >= 2, got n={self.n}")
        if self.a == 0 and not self.tau > 1:
            raise InvalidWeight(f"a = 0 requires tau > 1, got tau={self.tau}")
        if self.a < 0 and not self.tau > 0:
            raise InvalidWeight(f"a < 0 requires tau > 0, got tau={self.tau}")

    def f(self, R):
        R = np.asarray(R, dtype=float)
        if self.a == 0:
            return R ** (self.n + self.tau)
        return np.exp((self.n + self.tau) * R)


def _ball_volume_const(n: int) -> float:
    # Euclidean unit-ball volume omega_n
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _sphere_area_const(n: int) -> float:
    # area of the unit (n-1)-sphere
    return n * _ball_volume_const(n)


def _log_volume_neg(a: float, n: int, R: float) -> float:
    """log of the comparison volume V_a(R) for a < 0.

    V_a(R) = A_{n-1} * int_0^R sinh(kappa*s)^(n-1) ds with kappa = sqrt(-a).
    The integrand overflows for large R, so factor out the growth:
    int_0^R sinh(kappa s)^(n-1) ds
        = e^(kappa(n-1)R) * int_0^R e^(-kappa(n-1)u) ((1-e^(-2kappa(R-u)))/2)^(n-1) du
    and integrate the bounded factor by quadrature.
    """
    kappa = math.sqrt(-a)
    rate = kappa * (n - 1)

    def integrand(u):
        return math.exp(-rate * u) * ((1.0 - math.exp(-2.0 * kappa * (R - u))) / 2.0) ** (n - 1)

    upper = min(R, 60.0 / rate) if rate > 0 else R
    val, _err = _integrate.quad(integrand, 0.0, upper, limit=200)
    if val <= 0.0:
        return -math.inf
    return math.log(_sphere_area_const(n)) + rate * R + math.log(val)


def summability_check(w: WeightSpec, N_max: int = 250_000) -> dict:
    """Partial sums of sum_{N>=2} V(2N) / f_tau(2N-2) plus a tail bound.

    V is the volume of the comparison space form with curvature a (a
    Euclidean ball for a = 0).  Returns partial sums over N = 2..N_max,
    a rigorous analytic bound on the discarded tail, and a convergence
    verdict: eventually-decreasing terms with tail below 1e-6 of the
    computed sum.
    """
    if int(N_max) != N_max or N_max < 10:
        raise InvalidInput(f"N_max must be an integer >= 10, got {N_max}")
    N_max = int(N_max)
    Ns = np.arange(2, N_max + 1)
    nt = w.n + w.tau

    if w.a == 0:
        log_omega = math.log(_ball_volume_const(w.n))
        log_terms = log_omega + w.n * np.log(2.0 * Ns) - nt * np.log(2.0 * Ns - 2.0)
        terms = np.exp(log_terms)
        # tail over N > N_max:  (2N)^n/(2N-2)^(n+tau) <= (M/(M-1))^n (2N-2)^(-tau)
        # with M = N_max+1, and sum (2N-2)^(-tau) bounded by an integral.
        M = N_max + 1
        tail = (_ball_volume_const(w.n) * (M / (M - 1.0)) ** w.n * 2.0 ** (-w.tau)
                * ((M - 1.0) ** (-w.tau) + (M - 1.0) ** (1.0 - w.tau) / (w.tau - 1.0)))
        tail_finite = True
    else:
        kappa = math.sqrt(-w.a)
        log_terms = np.empty(len(Ns))
        partial = 0.0
        stop = len(Ns)
        for idx, N in enumerate(Ns):
            lt = _log_volume_neg(w.a, w.n, 2.0 * N) - nt * (2.0 * N - 2.0)
            log_terms[idx] = lt
            partial += math.exp(lt) if -700 < lt < 700 else 0.0
            # once terms are far below the running sum they cannot move it,
            # and once they are growing the verdict is already settled;
            # either way stop integrating and extrapolate the trend
            settled = partial > 0 and lt < math.log(partial) - 80.0
            growing = idx >= 200 and lt >= log_terms[idx - 1]
            if settled or growing or lt > 700:
                stop = idx + 1
                break
        if stop < len(Ns):
            # extend the asymptotically log-linear terms analytically
            # instead of integrating each one
            slope = 2.0 * (kappa * (w.n - 1) - nt)
            log_terms[stop:] = log_terms[stop - 1] + slope * np.arange(1, len(Ns) - stop + 1)
        with np.errstate(over="ignore"):
            terms = np.exp(np.where(log_terms > -700, log_terms, -np.inf))
        # geometric tail via V_a(R) <= A_{n-1} e^(kappa(n-1)R) / (2^(n-1) kappa(n-1))
        rate = 2.0 * (kappa * (w.n - 1) - nt)
        if rate < 0:
            log_C = (math.log(_sphere_area_const(w.n)) - (w.n - 1) * math.log(2.0)
                     - math.log(kappa * (w.n - 1)))
            log_first = log_C + 2.0 * (N_max + 1) * (kappa * (w.n - 1) - nt) + 2.0 * nt
            tail = math.exp(log_first - math.log1p(-math.exp(rate))) if log_first > -700 else 0.0
            tail_finite = True
        else:
            tail = math.inf
            tail_finite = False

    partial_sums = np.cumsum(terms)
    total = float(partial_sums[-1])
    with np.errstate(invalid="ignore"):
        # inf/inf -> nan in the divergent regime; nan < 1 is False, as wanted
        ratios = terms[1:] / np.where(terms[:-1] > 0, terms[:-1], np.inf)
    # eventually decreasing: the last few computed ratios are all < 1
    k = min(5, len(ratios))
    eventually_decreasing = bool(np.all(ratios[-k:] < 1.0)) if k else False
    converged = bool(eventually_decreasing and tail_finite and tail < 1e-6 * total)
    return {
        "a": w.a, "n": w.n, "tau": w.tau, "N_max": N_max,
        "terms": terms, "partial_sums": partial_sums,
        "tail_bound": float(tail), "bound": total + float(tail),
        "converged": converged,
    }


# ---------------------------------------------------------------------------
# grids and chart metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform cube grid [-R, R]^3 covering the coordinate ball B_R.

    The requested spacing is snapped so the axis hits both endpoints;
    stencils are second order and boundary values are Dirichlet zero.
    """

    radius: float
    dx: float
    order: int = 2
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidInput(f"radius must be positive, got {self.radius}")
        if not (np.isfinite(self.dx) and self.dx > 0):
            raise InvalidInput(f"dx must be positive, got {self.dx}")
        if self.dx > self.radius:
            raise InvalidInput("dx larger than the radius")
        steps = max(2, int(round(2.0 * self.radius / self.dx)))
        if steps % 2:  # keep the origin on the grid
            steps += 1
        object.__setattr__(self, "dx", 2.0 * self.radius / steps)

    @property
    def npts(self) -> int:
        return int(round(2.0 * self.radius / self.dx)) + 1

    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.npts)

    def points(self) -> np.ndarray:
        """Grid coordinates, shape (npts, npts, npts, 3)."""
        ax = self.axis()
        X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    @property
    def origin_index(self) -> tuple:
        m = (self.npts - 1) // 2
        return (m, m, m)


@dataclass
class ChartMetric:
    """Closed-form coefficient field of a 3D model geometry.

    `metric(pts)` maps (..., 3) coordinates to (..., 3, 3) SPD matrices;
    `coframe(pts)` returns the left-invariant coframe rows C so that
    g = C^T C, used to push frame tensors into coordinates.  `d` holds
    the eigenvalues of the soliton derivation in these coordinates (the
    drift X0 = d_k x^k d/dx^k) and `lam` the soliton constant.
    """

    name: str
    metric: Callable
    coframe: Callable
    d: np.ndarray
    lam: float
    algebra: str  # catalog entry with the matching left-invariant geometry

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)


def _nil3_metric(p):
    p = np.asarray(p, dtype=float)
    x = p[..., 0]
    g = np.zeros(p.shape[:-1] + (3, 3))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = 1.0 + x * x
    g[..., 1, 2] = -x
    g[..., 2, 1] = -x
    g[..., 2, 2] = 1.0
    return g


def _nil3_coframe(p):
    p = np.asarray(p, dtype=float)
    x = p[..., 0]
    C = np.zeros(p.shape[:-1] + (3, 3))
    C[..., 0, 0] = 1.0
    C[..., 1, 1] = 1.0
    C[..., 2, 1] = -x
    C[..., 2, 2] = 1.0
    return C


def _sol3_metric(p):
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    g = np.zeros(p.shape[:-1] + (3, 3))
    g[..., 0, 0] = np.exp(-2.0 * z)
    g[..., 1, 1] = np.exp(2.0 * z)
    g[..., 2, 2] = 1.0
    return g


def _sol3_coframe(p):
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    C = np.zeros(p.shape[:-1] + (3, 3))
    C[..., 0, 0] = np.exp(-z)
    C[..., 1, 1] = np.exp(z)
    C[..., 2, 2] = 1.0
    return C


def _hyp3_metric(p):
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    g = np.zeros(p.shape[:-1] + (3, 3))
    g[..., 0, 0] = np.exp(2.0 * z)
    g[..., 1, 1] = np.exp(2.0 * z)
    g[..., 2, 2] = 1.0
    return g


def _hyp3_coframe(p):
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    C = np.zeros(p.shape[:-1] + (3, 3))
    C[..., 0, 0] = np.exp(z)
    C[..., 1, 1] = np.exp(z)
    C[..., 2, 2] = 1.0
    return C


_CHARTS = {
    "nil3": lambda: ChartMetric("nil3", _nil3_metric, _nil3_coframe,
                                (1.0, 1.0, 2.0), -1.5, "nil3"),
    "sol3": lambda: ChartMetric("sol3", _sol3_metric, _sol3_coframe,
                                (2.0, 2.0, 0.0), -2.0, "sol3"),
    "hyp3": lambda: ChartMetric("hyp3", _hyp3_metric, _hyp3_coframe,
                                (0.0, 0.0, 0.0), -2.0, "hyp_3"),
}
_VALIDATED: set = set()


def metric_jets(cm: ChartMetric, pts: np.ndarray, step: float = _JET_STEP):
    """g, dg, d2g at the given points by 4th-order centered differences.

    dg[..., a, i, j] = d_a g_ij and d2g[..., a, b, i, j] = d_a d_b g_ij.
    The step is independent of any grid spacing: the metric is a closed
    form, so the jets are effectively exact (1e-8 relative or better).
    """
    pts = np.asarray(pts, dtype=float)
    h = step
    g0 = cm.metric(pts)
    base = pts.shape[:-1]

    def shifted(da, db=None):
        q = pts.copy()
        a, sa = da
        q[..., a] += sa * h
        if db is not None:
            b, sb = db
            q[..., b] += sb * h
        return cm.metric(q)

    dg = np.zeros(base + (3, 3, 3))
    plus1, minus1, plus2, minus2 = {}, {}, {}, {}
    for a in range(3):
        plus1[a] = shifted((a, 1.0))
        minus1[a] = shifted((a, -1.0))
        plus2[a] = shifted((a, 2.0))
        minus2[a] = shifted((a, -2.0))
        dg[..., a, :, :] = (-plus2[a] + 8.0 * plus1[a]
                            - 8.0 * minus1[a] + minus2[a]) / (12.0 * h)

    d2g = np.zeros(base + (3, 3, 3, 3))
    for a in range(3):
        d2g[..., a, a, :, :] = (-plus2[a] + 16.0 * plus1[a] - 30.0 * g0
                                + 16.0 * minus1[a] - minus2[a]) / (12.0 * h * h)
    # mixed partials: 4th-order cross stencil from composed 1D weights
    w = {1: 8.0 / (12.0 * h), -1: -8.0 / (12.0 * h),
         2: -1.0 / (12.0 * h), -2: 1.0 / (12.0 * h)}
    for a in range(3):
        for b in range(a + 1, 3):
            acc = 0.0
            for sa, wa in w.items():
                for sb, wb in w.items():
                    acc = acc + (wa * wb) * shifted((a, sa), (b, sb))
            d2g[..., a, b, :, :] = acc
            d2g[..., b, a, :, :] = acc
    return g0, dg, d2g


def curvature_fields(cm: ChartMetric, pts: np.ndarray, step: float = _JET_STEP) -> dict:
    """Pointwise curvature data of the chart metric.

    Returns g, ginv, Gamma (Gamma[..., k, i, j] = Gamma^k_ij), the
    lowered Riemann tensor Rm[..., i, j, k, l] = <R(ei,ej)el, ek>, the
    Ricci tensor, the Ricci endomorphism Rc = g^(-1) ric, scal, and
    sqrt(det g).
    """
    g0, dg, d2g = metric_jets(cm, pts, step)
    ginv = np.linalg.inv(g0)
    # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    low = dg + np.einsum("...jil->...ijl", dg) - np.einsum("...lij->...ijl", dg)
    Gamma = 0.5 * np.einsum("...kl,...ijl->...kij", ginv, low)
    # d_a Gamma^k_ij needs d_a g^kl = -g^kp (d_a g_pq) g^ql
    dginv = -np.einsum("...kp,...apq,...ql->...akl", ginv, dg, ginv)
    dlow = (d2g + np.einsum("...ajil->...aijl", d2g)
            - np.einsum("...alij->...aijl", d2g))
    dGamma = (0.5 * np.einsum("...akl,...ijl->...akij", dginv, low)
              + 0.5 * np.einsum("...kl,...aijl->...akij", ginv, dlow))
    del d2g, dlow, dginv
    # R^m_ijl = d_i Gamma^m_jl - d_j Gamma^m_il + G^m_ip G^p_jl - G^m_jp G^p_il
    Rup = (np.einsum("...imjl->...mijl", dGamma)
           - np.einsum("...jmil->...mijl", dGamma)
           + np.einsum("...mip,...pjl->...mijl", Gamma, Gamma)
           - np.einsum("...mjp,...pil->...mijl", Gamma, Gamma))
    del dGamma
    Rm = np.einsum("...km,...mijl->...ijkl", g0, Rup)
    del Rup
    ric = np.einsum("...ik,...ijkl->...jl", ginv, Rm)
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    Rc = np.einsum("...ik,...kj->...ij", ginv, ric)
    scal = np.einsum("...ii->...", Rc)
    det = np.linalg.det(g0)
    return {"g": g0, "ginv": ginv, "Gamma": Gamma, "Rm": Rm,
            "ric": ric, "Rc": Rc, "scal": scal, "sqrt_det": np.sqrt(det)}


def chart_metric(name: str) -> ChartMetric:
    """Look up a chart model; validated against `leftinv` on first load.

    The coordinate Ricci endomorphism at the origin (computed from the
    numeric jets) must agree, up to isometry, with the left-invariant
    Ricci endomorphism of the matching catalog algebra to 1e-6.
    """
    try:
        cm = _CHARTS[name]()
    except KeyError:
        raise NotInCatalog(f"unknown chart model {name!r}; "
                           f"known: {', '.join(sorted(_CHARTS))}") from None
    if name not in _VALIDATED:
        from . import catalog
        from .leftinv import curvature

        origin = np.zeros((1, 3))
        Rc_chart = curvature_fields(cm, origin)["Rc"][0]
        entry = catalog.get(cm.algebra)
        Rc_alg = curvature(entry.algebra, entry.metric).Rc
        ev_chart = np.sort(np.linalg.eigvalsh(0.5 * (Rc_chart + Rc_chart.T)))
        ev_alg = np.sort(np.linalg.eigvalsh(0.5 * (Rc_alg + Rc_alg.T)))
        if np.max(np.abs(ev_chart - ev_alg)) > 1e-6:
            raise InvalidInput(
                f"chart {name!r} failed origin validation: coordinate Ricci "
                f"eigenvalues {ev_chart} vs algebraic {ev_alg}")
        _VALIDATED.add(name)
    return cm


# ---------------------------------------------------------------------------
# grid derivatives and the FD operator
# ---------------------------------------------------------------------------

def _diff1(field: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """Second-order centered first derivative with zero ghost cells."""
    out = np.zeros_like(field)
    src = np.moveaxis(field, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[1:-1] = (src[2:] - src[:-2]) / (2.0 * dx)
    dst[0] = src[1] / (2.0 * dx)
    dst[-1] = -src[-2] / (2.0 * dx)
    return out


def grid_partials(h: np.ndarray, grid: GridSpec) -> np.ndarray:
    """All first partials of a grid field; leading new axis indexes d/dx^a."""
    return np.stack([_diff1(h, a, grid.dx) for a in range(3)], axis=0)


def apply_L_fd(cm: ChartMetric, lam: float, d, h: np.ndarray,
               grid: GridSpec, _fields: dict = None) -> np.ndarray:
    """Apply L = Delta_L + 2 lam + Lie_{X0} to a sampled tensor field.

    `h` has shape grid + (3, 3) (coordinate components, lowered indices)
    and must vanish on and outside the boundary sphere of B_R.  The
    covariant structure is pointwise-exact (numeric jets of the closed
    form); the h-derivatives are second-order centered differences, so
    plateau discrepancies against the algebraic operator shrink at
    O(dx^2).  Output is forced to zero outside the open ball (Dirichlet).
    """
    if grid.dx > grid.radius / 8.0 + 1e-12:
        raise GridTooCoarse(
            f"dx = {grid.dx} exceeds radius/8 = {grid.radius / 8.0}")
    h = np.asarray(h, dtype=float)
    shape = (grid.npts,) * 3 + (3, 3)
    if h.shape != shape:
        raise InvalidInput(f"field shape {h.shape} does not match grid {shape}")
    d = np.asarray(d, dtype=float)
    pts = grid.points()
    f = _fields if _fields is not None else curvature_fields(cm, pts)
    ginv, Gamma, Rm, ric = f["ginv"], f["Gamma"], f["Rm"], f["ric"]
    dxs = grid.dx

    # nabla_a h_ij = d_a h_ij - G^p_ai h_pj - G^p_aj h_ip
    dh = grid_partials(h, grid)
    T = np.empty((3,) + h.shape)
    for a in range(3):
        corr = np.einsum("...pi,...pj->...ij", Gamma[..., :, a, :], h)
        T[a] = dh[a] - corr - np.swapaxes(corr, -1, -2)
    del dh

    # Delta h_ij = g^ab [ d_a T_bij - G^p_ab T_pij - G^p_ai T_bpj - G^p_aj T_bip ]
    trG = np.einsum("...ab,...pab->...p", ginv, Gamma)   # g^ab G^p_ab
    M = np.einsum("...ab,...pai->...bpi", ginv, Gamma)   # g^ab G^p_ai
    lap = np.zeros_like(h)
    for a in range(3):
        dTa = np.stack([_diff1(T[b], a, dxs) for b in range(3)], axis=0)
        lap = lap + np.einsum("...b,b...ij->...ij", ginv[..., a, :], dTa)
        del dTa
    lap = lap - np.einsum("...p,p...ij->...ij", trG, T)
    c3 = np.einsum("...bpi,b...pj->...ij", M, T)
    lap = lap - c3 - np.swapaxes(c3, -1, -2)
    del T, c3, M, trG

    # curvature terms: 2 Rm(h) - Rc.h - h.Rc with raised h
    hup = np.einsum("...ak,...kl,...lb->...ab", ginv, h, ginv)
    rst = 2.0 * np.einsum("...iajb,...ab->...ij", Rm, hup)
    ric_mixed = np.einsum("...kl,...li->...ki", ginv, ric)  # ric^k_i
    rc_h = np.einsum("...ki,...kj->...ij", ric_mixed, h)
    out = lap + rst - rc_h - np.swapaxes(rc_h, -1, -2)
    del lap, rst, rc_h, hup

    # 2 lam h + Lie_{X0} h = 2 lam h + d_k x^k d_k h_ij + (d_i + d_j) h_ij
    out = out + 2.0 * lam * h
    if np.any(d != 0.0):
        for k in range(3):
            if d[k] != 0.0:
                out = out + d[k] * pts[..., k, None, None] * _diff1(h, k, dxs)
        out = out + (d[:, None] + d[None, :]) * h

    r2 = np.einsum("...k,...k->...", pts, pts)
    out[r2 >= grid.radius ** 2] = 0.0
    return out


def rayleigh_quotient(cm: ChartMetric, lam: float, d, h: np.ndarray,
                      grid: GridSpec, _fields: dict = None) -> float:
    """(L h, h) / (h, h) in the L2 pairing of the chart metric.

    Pointwise inner products raise indices with g; the measure is
    sqrt(det g) dx^3.  Scale-invariant by construction.
    """
    f = _fields if _fields is not None else curvature_fields(cm, grid.points())
    Lh = apply_L_fd(cm, lam, d, h, grid, _fields=f)
    ginv, vol = f["ginv"], f["sqrt_det"]
    hup = np.einsum("...ik,...kl,...lj->...ij", ginv, np.asarray(h, float), ginv)
    den_pt = np.einsum("...ij,...ij->...", hup, h)
    num_pt = np.einsum("...ij,...ij->...", hup, Lh)
    w = vol * grid.dx ** 3
    den = float(np.sum(den_pt * w))
    if den <= 0.0 or not np.isfinite(den):
        raise InvalidInput("Rayleigh quotient of a zero (or degenerate) field")
    return float(np.sum(num_pt * w)) / den


def radial_bump(grid: GridSpec, r_inner: float, r_outer: float,
                dist: np.ndarray = None) -> np.ndarray:
    """C^2 cutoff: 1 inside r_inner, 0 outside r_outer (quintic ramp).

    By default the profile is in the Euclidean grid radius; passing a
    distance field switches to metric distances.
    """
    if not 0.0 < r_inner < r_outer:
        raise InvalidInput("need 0 < r_inner < r_outer")
    if dist is None:
        pts = grid.points()
        dist = np.sqrt(np.einsum("...k,...k->...", pts, pts))
    s = np.clip((dist - r_inner) / (r_outer - r_inner), 0.0, 1.0)
    return 1.0 - (10.0 * s ** 3 - 15.0 * s ** 4 + 6.0 * s ** 5)


def frame_tensor_field(cm: ChartMetric, grid: GridSpec, S) -> np.ndarray:
    """Coordinate components of the left-invariant field with frame matrix S."""
    C = cm.coframe(grid.points())
    S = np.asarray(S, dtype=float)
    return np.einsum("...ai,ab,...bj->...ij", C, 0.5 * (S + S.T), C)


def probe_tensor_suite(cm: ChartMetric, grid: GridSpec, count: int = 20,
                       seed: int = 0, r_inner: float = None,
                       r_outer: float = None) -> list:
    """Bump-modulated compactly supported test tensors for Rayleigh probes.

    The first entries sweep the symmetric frame basis; the rest are
    seeded random symmetric combinations.  All are supported in the open
    ball and C^2 at the cutoff.
    """
    if count < 1:
        raise InvalidInput("count must be positive")
    R = grid.radius
    chi = radial_bump(grid, r_inner if r_inner else 0.45 * R,
                      r_outer if r_outer else 0.9 * R)
    basis = []
    for i in range(3):
        for j in range(i, 3):
            E = np.zeros((3, 3))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    rng = np.random.default_rng(seed)
    mats = list(basis)
    while len(mats) < count:
        A = rng.uniform(-1.0, 1.0, size=(3, 3))
        S = 0.5 * (A + A.T)
        mats.append(S / np.linalg.norm(S))
    out = []
    for S in mats[:count]:
        out.append(chi[..., None, None] * frame_tensor_field(cm, grid, S))
    return out


# ---------------------------------------------------------------------------
# metric distances, annuli, weighted norms
# ---------------------------------------------------------------------------

_GRAPH_CACHE: dict = {}


def _grid_graph(cm: ChartMetric, grid: GridSpec):
    """26-neighbor graph with edge lengths in the chart metric.

    Edge (x, x + o*dx) gets weight dx * sqrt(o^T g(mid) o), the length
    of the straight segment in the metric at its midpoint.
    """
    key = (cm.name, grid.radius, grid.npts)
    if key in _GRAPH_CACHE:
        return _GRAPH_CACHE[key]
    npts = grid.npts
    idx = np.arange(npts ** 3).reshape((npts,) * 3)
    pts = grid.points()
    offsets = [(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1)
               for c in (-1, 0, 1) if (a, b, c) > (0, 0, 0)]
    rows, cols, weights = [], [], []
    for off in offsets:
        sl_src = tuple(slice(None, -1 if o == 1 else None) if o >= 0
                       else slice(1, None) for o in off)
        sl_dst = tuple(slice(1, None) if o == 1
                       else slice(None, -1) if o == -1 else slice(None)
                       for o in off)
        src = idx[sl_src].ravel()
        dst = idx[sl_dst].ravel()
        mid = 0.5 * (pts[sl_src] + pts[sl_dst])
        gmid = cm.metric(mid)
        o = np.asarray(off, dtype=float)
        length = grid.dx * np.sqrt(np.einsum("i,...ij,j->...", o, gmid, o))
        rows.append(src)
        cols.append(dst)
        weights.append(length.ravel())
    n = npts ** 3
    graph = _sparse.csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))
    _GRAPH_CACHE[key] = graph
    return graph


def distance_field(cm: ChartMetric, grid: GridSpec) -> np.ndarray:
    """Approximate metric distance to the origin at every grid point."""
    key = ("dist", cm.name, grid.radius, grid.npts)
    if key in _GRAPH_CACHE:
        return _GRAPH_CACHE[key]
    graph = _grid_graph(cm, grid)
    npts = grid.npts
    origin = np.ravel_multi_index(grid.origin_index, (npts,) * 3)
    dist = _csgraph.dijkstra(graph, directed=False, indices=origin)
    dist = dist.reshape((npts,) * 3)
    _GRAPH_CACHE[key] = dist
    return dist


@dataclass
class Annulus:
    N: int
    mask: np.ndarray      # boolean grid mask
    d_boundary: np.ndarray  # radial distance to the annulus boundary


@dataclass
class AnnulusCover:
    """Overlapping annuli A_1 = {d < 4}, A_N = {N-1 < d < N+3} (N >= 2)."""

    cm: ChartMetric
    grid: GridSpec
    dist: np.ndarray
    annuli: list = field(default_factory=list)

    def pair_distances(self, sources: np.ndarray) -> np.ndarray:
        """Graph distances from the given flat node indices to all nodes."""
        graph = _grid_graph(self.cm, self.grid)
        out = _csgraph.dijkstra(graph, directed=False, indices=sources)
        return out.reshape((len(sources),) + (self.grid.npts,) * 3)


def build_annulus_cover(cm: ChartMetric, grid: GridSpec) -> AnnulusCover:
    dist = distance_field(cm, grid)
    dmax = float(np.max(dist[np.isfinite(dist)]))
    cover = AnnulusCover(cm=cm, grid=grid, dist=dist)
    mask1 = dist < 4.0
    cover.annuli.append(Annulus(1, mask1, np.where(mask1, 4.0 - dist, 0.0)))
    N = 2
    while N - 1 < dmax:
        mask = (dist > N - 1.0) & (dist < N + 3.0)
        if np.any(mask):
            db = np.minimum(dist - (N - 1.0), (N + 3.0) - dist)
            cover.annuli.append(Annulus(N, mask, np.where(mask, db, 0.0)))
        N += 1
    return cover


def _partials_up_to(h: np.ndarray, grid: GridSpec, k: int) -> list:
    """[order 0 partials, order 1, ...]: lists of grid component arrays."""
    comps = h.reshape((grid.npts,) * 3 + (-1,))
    orders = [[comps[..., m] for m in range(comps.shape[-1])]]
    for _q in range(k):
        prev = orders[-1]
        nxt = []
        for fld in prev:
            for a in range(3):
                nxt.append(_diff1(fld, a, grid.dx))
        orders.append(nxt)
    return orders


def weighted_holder_norm(cover: AnnulusCover, h: np.ndarray, k: int,
                         alpha: float, w: WeightSpec,
                         pairs_per_annulus: int = 48, seed: int = 0) -> float:
    """Discrete tau-weighted little Hölder norm over the annulus cover.

    Per annulus N the bracket is  sum_{q<=k} sup_x d_x^q max_{|l|=q}
    |d^l h(x)|  plus the sampled Hölder seminorm  sup over pairs of
    min(d_x, d_y)^(k+alpha) |d^k h(x) - d^k h(y)| / d(x,y)^alpha; the
    norm is the max over annuli of sqrt(f_tau(N)) times the bracket.
    Pairs are sampled from a seeded generator with d(x, y) >= dx, so the
    seminorm is a lower bound on its continuum value.
    """
    if k not in (0, 1, 2):
        raise InvalidInput(f"k must be 0, 1 or 2, got {k}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"alpha must lie in (0, 1), got {alpha}")
    h = np.asarray(h, dtype=float)
    grid = cover.grid
    orders = _partials_up_to(h, grid, k)
    abs_max = [np.max(np.abs(np.stack(flds, axis=0)), axis=0) for flds in orders]
    top = np.stack(orders[k], axis=0)  # k-th partials, component-major
    rng = np.random.default_rng(seed)
    npts = grid.npts

    best = 0.0
    for ann in cover.annuli:
        if not np.any(ann.mask):
            continue
        sup_term = 0.0
        vals = np.zeros(ann.mask.sum())
        for q in range(k + 1):
            vals = vals + (ann.d_boundary[ann.mask] ** q) * abs_max[q][ann.mask]
        sup_term = float(np.max(vals))

        sem = 0.0
        flat = np.flatnonzero(ann.mask.ravel())
        if len(flat) >= 2 and pairs_per_annulus > 0:
            n_src = min(4, len(flat))
            sources = rng.choice(flat, size=n_src, replace=False)
            dists = cover.pair_distances(sources)
            db = ann.d_boundary.ravel()
            tflat = top.reshape(top.shape[0], -1)
            per_src = max(1, pairs_per_annulus // n_src)
            for s_i, s in enumerate(sources):
                targets = rng.choice(flat, size=min(per_src, len(flat)),
                                     replace=False)
                dxy = dists[s_i].ravel()[targets]
                ok = (dxy >= grid.dx) & np.isfinite(dxy)
                if not np.any(ok):
                    continue
                tgt = targets[ok]
                dxy = dxy[ok]
                diff = np.max(np.abs(tflat[:, tgt] - tflat[:, [s]]), axis=0)
                mind = np.minimum(db[tgt], db[s])
                sem = max(sem, float(np.max(mind ** (k + alpha) * diff / dxy ** alpha)))

        best = max(best, math.sqrt(float(w.f(ann.N))) * (sup_term + sem))
    return best
