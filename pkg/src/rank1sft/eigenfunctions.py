"""Radial eigenfunctions of the invariant Laplacian.

Three families, all eigenfunctions with eigenvalue lambda^2 - rho^2:

* the Eisenstein kernel, regular at t = 0, normalized by its behavior at
  infinity, with boundary data in C^orbits;
* the exponentially normalized series solution (Harish-Chandra series)
  and its hypergeometric closed form, singled out by
  e^{(rho - lambda) t} Phi(t) -> 1;
* the terminating discrete-spectrum functions attached to the positive
  parameters of the pole set.

The scattering coefficient c(lambda) ties the first two together.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .numerics import GammaPoleError, gauss_2f1, log_gamma
from .radial import RadialFunction
from .spaces import PoleSet, SpaceGeometry, pole_set

T_SPLIT = 1.75          # below: -sinh^2 argument; above: cosh^-2 split
IM_SPLIT = 10.0         # above this |Im lambda| the cosh^-2 split is used at all t
POLE_TOL = 1e-6
HALF_INT_TOL = 1e-8
NEAR_INT_SWITCH = 3e-6  # trigger for the analytic two-point average
AVG_STEP = 1e-5
SERIES_T_MIN = 0.25
DEFAULT_SERIES_THRESHOLD = 0.5


class PoleProximityError(ValueError):
    """Evaluation too close to a genuine pole; use a regularized form."""


def _near_nonpos_int(x, tol=POLE_TOL) -> bool:
    n = round(x.real)
    return n <= 0 and abs(x - n) < tol


def eisenstein_pole_order(g: SpaceGeometry, lam: complex, tol: float = POLE_TOL) -> int:
    """Local pole order of the Eisenstein kernel at lambda.

    Counts prefactor Gamma poles from both parameter families and subtracts
    the zero of 1/Gamma(lambda) at nonpositive integers.  Negative counts
    mean a zero, reported as order 0.
    """
    q = g.short_sum
    count = 0
    if _near_nonpos_int((g.rho + lam) / 2.0, tol):
        count += 1
    if _near_nonpos_int((lam - g.rho + q + 1) / 2.0, tol):
        count += 1
    if _near_nonpos_int(lam, tol):
        count -= 1
    return max(count, 0)


def eisenstein_poles(g: SpaceGeometry, re_min: float, re_max: float = 1e3) -> list[tuple[float, int]]:
    """Poles (location, order) of the Eisenstein kernel with Re in range."""
    q = g.short_sum
    candidates: set[float] = set()
    k = 0
    while -g.rho - 2 * k >= re_min:
        candidates.add(-g.rho - 2 * k)
        k += 1
    k = 0
    while g.rho - q - 1 - 2 * k >= re_min:
        lam = g.rho - q - 1 - 2 * k
        if lam <= re_max:
            candidates.add(lam)
        k += 1
    out = []
    for lam in sorted(candidates, reverse=True):
        order = eisenstein_pole_order(g, complex(lam))
        if order > 0:
            out.append((lam, order))
    return out


def _split_degenerate(g: SpaceGeometry, lam: complex) -> bool:
    """True where the two-term hypergeometric split needs a limit.

    Collects integers (parameters of the cosh^-2 forms and the
    Gamma(+-lambda) pair) and the zeros/poles of the scattering factors.
    """
    q = g.short_sum
    if abs(lam.imag) > NEAR_INT_SWITCH:
        return False
    x = lam.real
    if abs(x - round(x)) < NEAR_INT_SWITCH:
        return True
    for fam in (g.rho + x, g.rho - x, x - g.rho + q + 1, -x - g.rho + q + 1):
        if abs(fam / 2.0 - round(fam / 2.0)) < NEAR_INT_SWITCH and round(fam / 2.0) <= 0:
            return True
    return False


def log_eisenstein_prefactor(g: SpaceGeometry, lam):
    """log of the Gamma prefactor of the Eisenstein kernel (no pole handling)."""
    q = g.short_sum
    lam = np.asarray(lam, dtype=complex)
    return (
        (lam - g.rho) * math.log(2.0)
        + log_gamma((g.rho + lam) / 2.0)
        + log_gamma((-g.rho + lam + q + 1) / 2.0)
        - log_gamma(lam)
        - log_gamma((q + 1) / 2.0)
    )


def eisenstein_prefactor(g: SpaceGeometry, lam):
    """Gamma prefactor; zeros at nonpositive-integer lambda handled exactly."""
    lam = np.asarray(lam, dtype=complex)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    out = np.empty(lam.shape, dtype=complex)
    plain = np.ones(lam.shape, dtype=bool)
    for i, lv in enumerate(lam.ravel()):
        lv = complex(lv)
        if _near_nonpos_int(lv, 1e-12):
            idx = np.unravel_index(i, lam.shape)
            plain[idx] = False
            if eisenstein_pole_order(g, lv) > 0:
                raise PoleProximityError(f"prefactor pole at lambda = {lv}")
            if _near_nonpos_int((g.rho + lv) / 2.0, 1e-9) or _near_nonpos_int(
                (lv - g.rho + g.short_sum + 1) / 2.0, 1e-9
            ):
                # 0/0 coincidence: finite limit via a two-point average
                hi = eisenstein_prefactor(g, lv + AVG_STEP)
                lo = eisenstein_prefactor(g, lv - AVG_STEP)
                out[idx] = 0.5 * (hi + lo)
            else:
                out[idx] = 0.0
    if plain.any():
        out[plain] = np.exp(log_eisenstein_prefactor(g, lam[plain]))
    return complex(out[0]) if scalar else out


def c_function(g: SpaceGeometry, lam: complex, factor_tol: float = 1e-8) -> complex:
    """Scattering coefficient c(lambda).

    Rejects lambda within factor_tol of a pole of any Gamma factor, naming
    the offending factor; use _c_limit for analytic-limit evaluation.
    """
    q = g.short_sum
    lam = complex(lam)
    factors = {
        "Gamma((rho+lambda)/2)": (g.rho + lam) / 2.0,
        "Gamma(-lambda)": -lam,
        "Gamma((lambda-rho+1+m1p+m2p)/2)": (lam - g.rho + 1 + q) / 2.0,
        "Gamma((rho-lambda)/2)": (g.rho - lam) / 2.0,
        "Gamma(lambda)": lam,
        "Gamma((-rho-lambda+1+m1p+m2p)/2)": (-g.rho - lam + 1 + q) / 2.0,
    }
    for name, arg in factors.items():
        if _near_nonpos_int(arg, factor_tol):
            raise PoleProximityError(
                f"c(lambda) factor {name} at a Gamma pole for lambda = {lam}"
            )
    return complex(np.exp(_log_c(g, lam)))


def _log_c(g: SpaceGeometry, lam):
    q = g.short_sum
    lam = np.asarray(lam, dtype=complex)
    return (
        2.0 * lam * math.log(2.0)
        + log_gamma((g.rho + lam) / 2.0)
        + log_gamma(-lam)
        + log_gamma((lam - g.rho + 1 + q) / 2.0)
        - log_gamma((g.rho - lam) / 2.0)
        - log_gamma(lam)
        - log_gamma((-g.rho - lam + 1 + q) / 2.0)
    )


def phi0(g: SpaceGeometry, lam, t):
    """Hypergeometric form of the normalized series solution.

    (2 cosh t)^(lambda-rho) 2F1((rho-lambda)/2, (-rho-lambda+1+m1p+m2p)/2;
    1-lambda; cosh^-2 t).  Rejects 1-lambda at a nonpositive integer.
    """
    lam = np.asarray(lam, dtype=complex)
    if lam.ndim == 0 and _near_nonpos_int(1.0 - complex(lam), 1e-10):
        raise PoleProximityError(
            f"phi0 parameter pole: 1-lambda = {1.0 - complex(lam)} is a nonpositive integer"
        )
    q = g.short_sum
    t = np.asarray(t, dtype=float)
    z = np.cosh(t) ** -2.0
    lead = np.exp((lam - g.rho) * np.log(2.0 * np.cosh(t)))
    a = (g.rho - lam) / 2.0
    b = (-g.rho - lam + 1 + q) / 2.0
    c = 1.0 - lam
    return lead * gauss_2f1(a, b, c, z)


def phi0_grid(g: SpaceGeometry, lams: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """phi0 on a (lambda, t) grid, shape (len(lams), len(ts)).

    Groups t-columns by hypergeometric argument regime so every call sees
    a uniform evaluation path; stable for large |Im lambda| at every t.
    """
    lams = np.asarray(lams, dtype=complex)[:, None]
    ts = np.asarray(ts, dtype=float)
    z = np.cosh(ts) ** -2.0
    out = np.empty((lams.shape[0], len(ts)), dtype=complex)
    groups = [z < 0.9, z >= 0.9]
    for sel in groups:
        if sel.any():
            out[:, sel] = phi0(g, lams, ts[None, sel])
    return out


def phi0_discrete(g: SpaceGeometry, k: int, t):
    """Discrete-spectrum eigenfunction: terminating polynomial times a power.

    Real-valued; equals phi0 at lambda = -lambda_k.
    """
    ps = pole_set(g)
    lam_k = ps[k]
    t = np.asarray(t, dtype=float)
    z = np.cosh(t) ** -2.0
    lead = (2.0 * np.cosh(t)) ** (-lam_k - g.rho)
    val = gauss_2f1((g.rho + lam_k) / 2.0, -float(k), 1.0 + lam_k, z)
    out = lead * np.real(val)
    return float(out) if out.ndim == 0 else out


def phi0_discrete_deriv(g: SpaceGeometry, k: int, t):
    """Analytic t-derivative of phi0_discrete."""
    ps = pole_set(g)
    lam_k = ps[k]
    t = np.asarray(t, dtype=float)
    a = (g.rho + lam_k) / 2.0
    b = -float(k)
    c = 1.0 + lam_k
    z = np.cosh(t) ** -2.0
    lead = (2.0 * np.cosh(t)) ** (-lam_k - g.rho)
    f = np.real(gauss_2f1(a, b, c, z))
    fprime = a * b / c * np.real(gauss_2f1(a + 1, b + 1, c + 1, z))
    dz = -2.0 * np.sinh(t) / np.cosh(t) ** 3
    out = lead * (-(lam_k + g.rho) * np.tanh(t) * f + fprime * dz)
    return float(out) if out.ndim == 0 else out


def phi0_discrete_function(g: SpaceGeometry, k: int) -> RadialFunction:
    """phi0_discrete wrapped as a radial function (same profile on each orbit)."""
    ps = pole_set(g)
    lam_k = ps[k]
    fn = lambda t: phi0_discrete(g, k, t)
    dfn = lambda t: phi0_discrete_deriv(g, k, t)
    return RadialFunction(
        components=tuple([fn] * g.orbits),
        derivatives=(tuple([dfn] * g.orbits),),
        support_bound=None,
        decay_class=2.0 * g.rho / (lam_k + g.rho),
    )


def eisenstein_scalar(g: SpaceGeometry, lam: complex, t, _allow_average: bool = True):
    """Scalar Eisenstein kernel at one spectral parameter, vectorized in t.

    Small t uses the -sinh^2 argument directly; larger t goes through the
    cosh^-2 split with the scattering coefficient.  Parameters where the
    split degenerates are evaluated as a symmetric two-point limit, which
    is analytic because the kernel itself is regular there.
    """
    lam = complex(lam)
    if eisenstein_pole_order(g, lam) > 0:
        raise PoleProximityError(
            f"Eisenstein kernel pole within {POLE_TOL} of lambda = {lam}; "
            "request the regularized value instead"
        )
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)

    if _split_degenerate(g, lam) and _allow_average:
        # symmetric averages at two step sizes; Richardson leaves O(step^4)
        def avg(step):
            hi = eisenstein_scalar(g, lam + step, t, _allow_average=False)
            lo = eisenstein_scalar(g, lam - step, t, _allow_average=False)
            return 0.5 * (hi + lo)

        out = (4.0 * avg(AVG_STEP) - avg(2.0 * AVG_STEP)) / 3.0
        return complex(out[0]) if scalar else out

    out = np.empty(t.shape, dtype=complex)
    # the power series in -sinh^2 t cancels like e^{|Im lambda| t}, so large
    # imaginary parts take the cosh^-2 split at every t
    small = t <= T_SPLIT if abs(lam.imag) <= IM_SPLIT else np.zeros(t.shape, dtype=bool)
    if small.any():
        z = -np.sinh(t[small]) ** 2
        pref = eisenstein_prefactor(g, lam)
        out[small] = pref * gauss_2f1(
            (g.rho + lam) / 2.0, (g.rho - lam) / 2.0, (g.short_sum + 1) / 2.0, z
        )
    large = ~small
    if large.any():
        cv = complex(np.exp(_log_c(g, lam)))
        out[large] = phi0(g, lam, t[large]) + cv * phi0(g, -lam, t[large])
    return complex(out[0]) if scalar else out


def eisenstein(g: SpaceGeometry, lam: complex, eta, t):
    """Eisenstein values with boundary data eta, shape (orbits,) + t.shape."""
    eta = np.asarray(eta, dtype=complex)
    if eta.shape != (g.orbits,):
        raise ValueError(f"eta must have {g.orbits} components, got shape {eta.shape}")
    base = eisenstein_scalar(g, lam, t)
    return eta[:, None] * np.atleast_1d(base)[None, :]


def regularized_eisenstein(g: SpaceGeometry, lam: complex, t, p_R) -> np.ndarray:
    """p_R(lambda) times the Eisenstein kernel, finite across cleared poles.

    Within POLE_TOL of a pole the value is the symmetric analytic limit.
    """
    lam = complex(lam)
    if eisenstein_pole_order(g, lam) > 0:
        step = 1e-4
        hi = p_R(lam + step) * eisenstein_scalar(g, lam + step, t)
        lo = p_R(lam - step) * eisenstein_scalar(g, lam - step, t)
        return 0.5 * (hi + lo)
    return p_R(lam) * eisenstein_scalar(g, lam, t)


def drift_coefficient(g: SpaceGeometry, t):
    """First-order coefficient of the radial Laplacian."""
    m = g.multiplicities
    t = np.asarray(t, dtype=float)
    return (
        m.m1p / np.tanh(t)
        + m.m1m * np.tanh(t)
        + 2.0 * m.m2p / np.tanh(2.0 * t)
        + 2.0 * m.m2m * np.tanh(2.0 * t)
    )


def series_drift_coefficients(g: SpaceGeometry, count: int) -> np.ndarray:
    """Coefficients b_j of e^{-2jt} in the drift expansion used by the recursion.

    Uses the doubled-root identity 2 coth 2t = coth t + tanh t to fold the
    doubled-root terms into the short-root pair, which matches the closed
    hypergeometric forms for every admissible multiplicity tuple.  When
    m2m = 0 this is term for term the expansion of the raw drift minus its
    limit 2 rho.
    """
    m = g.multiplicities
    plus = m.m1p + m.m2p
    minus = m.m1m + m.m2p + 2 * m.m2m
    j = np.arange(1, count + 1)
    return 2.0 * (plus + (-1.0) ** j * minus)


def gamma_coefficients(g: SpaceGeometry, lam, M: int) -> np.ndarray:
    """First M+1 series coefficients Gamma_0..Gamma_M, vectorized over lambda.

    Recursion: m (m - 2 lambda) Gamma_m = sum_j b_j (rho + m - 2j - lambda)
    Gamma_{m-2j}, seeded by Gamma_0 = 1; odd indices vanish.  Rejects lambda
    within HALF_INT_TOL of a recursion pole m/2 <= M/2.
    """
    lam = np.asarray(lam, dtype=complex)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    two_lam = 2.0 * lam
    near = np.abs(two_lam - np.round(two_lam.real)) < 2 * HALF_INT_TOL
    bad = near & (np.round(two_lam.real) > 0) & (np.round(two_lam.real) <= M)
    if bad.any():
        raise PoleProximityError(
            f"lambda = {lam[bad][0]} within {HALF_INT_TOL} of a recursion pole; "
            "request q_R-regularized values"
        )
    b = series_drift_coefficients(g, M // 2 + 1)
    G = np.zeros((M + 1,) + lam.shape, dtype=complex)
    G[0] = 1.0
    for m in range(2, M + 1, 2):
        acc = np.zeros(lam.shape, dtype=complex)
        for j in range(1, m // 2 + 1):
            acc += b[j - 1] * (g.rho + m - 2 * j - lam) * G[m - 2 * j]
        G[m] = acc / (m * (m - two_lam))
    return G[:, 0] if scalar else G


def hc_series_matrix(g: SpaceGeometry, lams, ts, M: int) -> np.ndarray:
    """Series solution on a (t, lambda) grid, shape (len(ts), len(lams)).

    Fixed truncation M; the caller is responsible for t >= SERIES_T_MIN.
    """
    lams = np.asarray(lams, dtype=complex)
    ts = np.asarray(ts, dtype=float)
    G = gamma_coefficients(g, lams, M)          # (M+1, L)
    E = np.exp(-np.outer(ts, np.arange(M + 1)))  # (T, M+1)
    core = E @ G                                 # (T, L)
    return np.exp(np.outer(ts, lams - g.rho)) * core


def hc_series_phi(
    g: SpaceGeometry,
    lam: complex,
    t,
    tol: float = 1e-12,
    threshold: float = SERIES_T_MIN,
) -> complex | np.ndarray:
    """Series solution at one spectral parameter, adaptively truncated.

    Requires t >= threshold for geometric convergence; smaller t should go
    through phi0.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if np.any(t < threshold):
        raise ValueError(
            f"series requires t >= {threshold}; use phi0 for smaller t"
        )
    lam = complex(lam)
    tmin = float(np.min(t))
    M = 64
    while True:
        G = gamma_coefficients(g, lam, M)
        mags = np.abs(G) * np.exp(-np.arange(M + 1) * tmin)
        partial = np.max(np.cumsum(mags))
        tail = np.max(mags[-8:]) / max(1.0 - math.exp(-tmin), 1e-6)
        if tail <= tol * max(partial, 1e-300):
            break
        if M >= 4096:
            raise ValueError(
                f"series did not reach tol={tol} within {M} terms at t={tmin}"
            )
        M *= 2
    out = hc_series_matrix(g, np.array([lam]), t, M)[:, 0]
    return complex(out[0]) if scalar else out


def jacobi_function(alpha: float, beta: float, lam, t):
    """Classical two-parameter special function on the half-line.

    2F1((rj+lambda)/2, (rj-lambda)/2; alpha+1; -sinh^2 t) with
    rj = alpha + beta + 1; even in lambda.
    """
    if _near_nonpos_int(complex(alpha + 1.0), 1e-10):
        raise ValueError(f"alpha = {alpha} gives a Gamma pole at alpha+1")
    rj = alpha + beta + 1.0
    lam = np.asarray(lam, dtype=complex)
    t = np.asarray(t, dtype=float)
    z = -np.sinh(t) ** 2
    return gauss_2f1((rj + lam) / 2.0, (rj - lam) / 2.0, alpha + 1.0, z)


def radial_laplacian_apply(
    g: SpaceGeometry,
    f,
    t: float,
    h: float = 1e-3,
    orbit: int = 0,
):
    """Apply the radial Laplacian at one point.

    f may be a RadialFunction (analytic derivatives are used when present)
    or a plain callable.  Uses 5-point stencils otherwise; t must clear the
    stencil half-width.
    """
    from .numerics import fd_derivative

    if t - 2 * h <= 0:
        raise ValueError(f"t = {t} too close to 0 for the stencil (h = {h})")
    if isinstance(f, RadialFunction):
        fn = f.component(orbit)
        d1fn = f.derivative(orbit, 1)
    else:
        fn = f
        d1fn = None
    if d1fn is not None:
        d1 = complex(np.asarray(d1fn(np.asarray([t]))).ravel()[0])
        d2 = fd_derivative(d1fn, t, order=1, h=h)
    else:
        d1 = fd_derivative(fn, t, order=1, h=h)
        d2 = fd_derivative(fn, t, order=2, h=h)
    return d2 + drift_coefficient(g, t) * d1
