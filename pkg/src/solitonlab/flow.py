"""ODE integration of the Ricci flows on left-invariant metrics.

The unnormalized flow is dg/dt = -2 ric(g); the curvature-normalized flow
adds the soliton terms with (lambda, D) frozen from the background
certificate:

    dg/dt = -2 ric(g) + 2 lambda g + D^T g + g D.

Integrators: classic fixed-step RK4 (used for convergence-order tests) and
adaptive RKF45 with the standard Fehlberg embedded pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidInput, InvalidMetric, InvalidPerturbation,
                     SingularityReached, StiffnessError)
from .liealg import LieAlgebra
from .leftinv import check_metric, curvature
from .soliton import SolitonCertificate

# Fehlberg 4(5) tableau: nodes, stage weights, 5th-order propagation
# weights, and the error-estimate weights (b5 - b4).
_RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_RKF_ERR = (1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55)


@dataclass
class FitResult:
    """Log-linear decay fit: deviations ~ C * exp(-omega * t)."""

    C: float
    omega: float
    r_squared: float
    window: tuple
    n_points: int
    ok: bool


@dataclass
class FlowTrajectory:
    """Sampled flow: times, metrics, deviations from ``g_ref``, last fit."""

    times: np.ndarray
    metrics: np.ndarray
    deviations: np.ndarray
    g_ref: np.ndarray
    meta: dict = field(default_factory=dict)
    fitted: FitResult | None = None


def rhs_unnormalized(L: LieAlgebra, g) -> np.ndarray:
    """-2 ric(g) as a bilinear form in the defining basis."""
    return -2.0 * curvature(L, g).ric


def rhs_normalized(L: LieAlgebra, g, cert: SolitonCertificate) -> np.ndarray:
    """-2 ric(g) + 2 lambda g + D^T g + g D with (lambda, D) from the certificate."""
    g = np.asarray(g, dtype=float)
    D = cert.D
    out = -2.0 * curvature(L, g).ric + 2.0 * cert.lam * g + D.T @ g + g @ D
    return 0.5 * (out + out.T)


def _is_spd(g) -> bool:
    try:
        np.linalg.cholesky(g)
        return True
    except np.linalg.LinAlgError:
        return False


def integrate(rhs, g_init, t_max, dt=1e-3, method="rkf45",
              atol=1e-9, rtol=1e-9, g_ref=None) -> FlowTrajectory:
    """Integrate dg/dt = rhs(g) from g_init up to t_max.

    Parameters
    ----------
    rhs : callable
        Maps a metric matrix to a symmetric matrix.
    method : {'rk4', 'rkf45'}
        Fixed-step classic RK4, or adaptive Fehlberg 4(5) with ``dt`` as
        the initial step and componentwise error control at (atol, rtol).
    g_ref : array, optional
        Reference metric for the stored deviation norms (default g_init).

    The iterate is symmetrized after every step and checked for positive
    definiteness; failures raise ``SingularityReached``.  Step underflow in
    the adaptive method raises ``StiffnessError``.
    """
    g = check_metric(g_init)
    if dt <= 0:
        raise InvalidInput(f"dt must be positive, got {dt}")
    if t_max < 0:
        raise InvalidInput(f"t_max must be non-negative, got {t_max}")
    if method not in ("rk4", "rkf45"):
        raise InvalidInput(f"unknown method {method!r}")
    ref = g.copy() if g_ref is None else check_metric(g_ref, g.shape[0])

    times = [0.0]
    mets = [g.copy()]

    def step_rk4(y, h):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return 0.5 * (out + out.T)

    if method == "rk4":
        t = 0.0
        n_full = int(np.floor(t_max / dt + 1e-12))
        rem = t_max - n_full * dt
        for i in range(n_full):
            g = step_rk4(g, dt)
            t = (i + 1) * dt
            if not _is_spd(g):
                raise SingularityReached(t)
            times.append(t)
            mets.append(g.copy())
        if rem > 1e-12 * max(dt, 1.0):
            g = step_rk4(g, rem)
            if not _is_spd(g):
                raise SingularityReached(t_max)
            times.append(t_max)
            mets.append(g.copy())
    else:
        t = 0.0
        h = min(dt, t_max) if t_max > 0 else dt
        h_min = 1e-13 * max(1.0, t_max)
        k = [None] * 6
        while t < t_max - 1e-14 * max(1.0, t_max):
            h = min(h, t_max - t)
            k[0] = rhs(g)
            for s in range(1, 6):
                y = g + h * sum(a * k[m] for m, a in enumerate(_RKF_A[s]))
                k[s] = rhs(0.5 * (y + y.T))
            err = h * sum(w * k[m] for m, w in enumerate(_RKF_ERR))
            g5 = g + h * sum(w * k[m] for m, w in enumerate(_RKF_B5))
            g5 = 0.5 * (g5 + g5.T)
            scale = atol + rtol * np.maximum(np.abs(g), np.abs(g5))
            err_norm = float(np.abs(err / scale).max())
            if err_norm <= 1.0:
                t += h
                g = g5
                if not _is_spd(g):
                    raise SingularityReached(t)
                times.append(t)
                mets.append(g.copy())
            factor = 0.9 * err_norm ** -0.2 if err_norm > 0 else 5.0
            h *= min(5.0, max(0.2, factor))
            if h < h_min:
                raise StiffnessError(
                    f"step size underflow (h={h:.3e}) at t={t:.6g}")

    times = np.array(times)
    mets = np.array(mets)
    devs = np.linalg.norm(mets - ref, axis=(1, 2))
    return FlowTrajectory(times=times, metrics=mets, deviations=devs, g_ref=ref,
                          meta={"method": method, "dt": dt, "t_max": t_max,
                                "atol": atol, "rtol": rtol})


def perturb(g0, eps, seed) -> np.ndarray:
    """g0 + eps * |g0|_F * S with S a random unit-norm symmetric direction.

    S has independent uniform(-1, 1) entries on and above the diagonal
    (mirrored below) from the seeded generator, normalized to Frobenius
    norm 1; resampled up to 100 times until the result is SPD.
    """
    g0 = check_metric(g0)
    eps = float(eps)
    if eps < 0 or eps >= 0.5:
        raise InvalidInput(f"eps must lie in [0, 0.5), got {eps}")
    if eps == 0.0:
        return g0.copy()
    n = g0.shape[0]
    rng = np.random.default_rng(int(seed))
    iu = np.triu_indices(n)
    scale = eps * float(np.linalg.norm(g0))
    for _ in range(100):
        S = np.zeros((n, n))
        vals = rng.uniform(-1.0, 1.0, size=len(iu[0]))
        S[iu] = vals
        S.T[iu] = vals
        S /= np.linalg.norm(S)
        g = g0 + scale * S
        if _is_spd(g):
            return g
    raise InvalidPerturbation(
        f"no SPD perturbation of size eps={eps} found in 100 draws")


def fit_decay_rate(traj: FlowTrajectory, g_ref=None, window=None) -> FitResult:
    """Least-squares line through (t, log deviation) on the window.

    Deviations are recomputed against ``g_ref`` (default: the trajectory's
    stored reference).  The window defaults to the second half of the run;
    samples with deviation <= 1e-14 (machine-converged) are dropped.  The
    fit is rejected (``ok=False``) when fewer than 3 usable samples remain
    or R^2 < 0.98.  The result is also stored on ``traj.fitted``.
    """
    ref = traj.g_ref if g_ref is None else np.asarray(g_ref, dtype=float)
    devs = np.linalg.norm(traj.metrics - ref, axis=(1, 2))
    t = traj.times
    if window is None:
        window = (t[-1] / 2.0, t[-1])
    lo, hi = float(window[0]), float(window[1])
    mask = (t >= lo) & (t <= hi) & (devs > 1e-14)
    fit = FitResult(C=np.nan, omega=np.nan, r_squared=np.nan,
                    window=(lo, hi), n_points=int(mask.sum()), ok=False)
    if mask.sum() < 3:
        traj.fitted = fit
        return fit
    x = t[mask]
    y = np.log(devs[mask])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    fit = FitResult(C=float(np.exp(intercept)), omega=float(-slope),
                    r_squared=float(r2), window=(lo, hi),
                    n_points=int(mask.sum()), ok=bool(r2 >= 0.98))
    traj.fitted = fit
    return fit


@dataclass
class ConvergenceExperiment:
    """Perturb-and-relax experiment against the trajectory's own limit."""

    traj: FlowTrajectory
    g_limit: np.ndarray
    fit: FitResult
    predicted_rate: float
    seed: int
    eps: float


def convergence_experiment(L: LieAlgebra, g0, cert: SolitonCertificate,
                           eps=0.01, seed=0, rate_hint=None,
                           atol=1e-11, rtol=1e-11) -> ConvergenceExperiment:
    """Perturb a soliton, integrate the normalized flow, fit the decay rate.

    Because the normalized flow has a *manifold* of fixed points (gauge
    orbit of g0), a perturbed trajectory relaxes to a nearby soliton, not
    to g0 itself; deviations are therefore measured against the empirical
    limit (the final integrated metric) and fitted on a late window whose
    placement is set by the expected rate.

    Parameters
    ----------
    rate_hint : float, optional
        Expected decay rate; default is the decaying spectral abscissa of
        ``ode_jacobian`` (imported lazily to avoid a module cycle).
    """
    if rate_hint is None:
        from .stability import TOL_NEUTRAL, ode_jacobian
        re = np.linalg.eigvals(ode_jacobian(L, g0, cert)).real
        decaying = re[re < -TOL_NEUTRAL]
        if decaying.size == 0:
            raise InvalidInput("no decaying modes: cannot set an experiment window")
        rate_hint = -float(decaying.max())
    omega = float(rate_hint)
    if omega <= 0:
        raise InvalidInput(f"rate hint must be positive, got {omega}")
    g0 = check_metric(g0)
    g_start = perturb(g0, eps, seed)
    t_long = 24.0 / omega
    traj = integrate(lambda g: rhs_normalized(L, g, cert), g_start, t_long,
                     dt=min(1e-3, 0.01 / omega), method="rkf45",
                     atol=atol, rtol=rtol, g_ref=g0)
    g_inf = traj.metrics[-1]
    dev_lim = np.linalg.norm(traj.metrics - g_inf, axis=(1, 2))
    floor = max(1e-6 * float(np.linalg.norm(g0)), 50.0 * atol)
    above = np.nonzero(dev_lim >= floor)[0]
    if above.size < 3:
        raise InvalidInput("trajectory never rose above the fit floor; "
                           "increase eps or tighten tolerances")
    t2 = float(traj.times[above[-1]])
    t1 = max(0.0, t2 - 5.0 / omega)
    fit = fit_decay_rate(traj, g_ref=g_inf, window=(t1, t2))
    return ConvergenceExperiment(traj=traj, g_limit=g_inf, fit=fit,
                                 predicted_rate=omega, seed=int(seed),
                                 eps=float(eps))
