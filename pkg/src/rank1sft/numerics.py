"""Complex special functions and quadrature.

Self-contained engine: principal-branch log-gamma, the Gauss
hypergeometric function with argument transformations covering the
arguments that radial eigenfunctions produce (-sinh^2 t on the negative
half-line, cosh^-2 t near 1), composite Gauss-Legendre quadrature on
half-lines and vertical lines, circle-contour residues, and
finite-difference stencils.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_INT_TOL = 1e-12
_DEGENERATE_TOL = 1e-6
# Perturbation for integer-degenerate connection formulas.  The two branch
# terms cancel like 1/eps^2, so eps balances the O(eps^2) analytic error
# against roundoff amplification at ~1e-8 total.
_PERTURB = 1e-4
_SERIES_MAX = 60_000

# Lanczos approximation, g = 607/128, 15 terms; accurate to ~1e-14 relative
# on the right half plane.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = np.array(
    [
        0.99999999999999709182,
        57.156235665862923517,
        -59.597960355475491248,
        14.136097974741747174,
        -0.49191381609762019978,
        0.33994649984811888699e-4,
        0.46523628927048575665e-4,
        -0.98374475304879564677e-4,
        0.15808870322491248884e-3,
        -0.21026444172410488319e-3,
        0.21743961811521264320e-3,
        -0.16431810653676389022e-3,
        0.84418223983852743293e-4,
        -0.26190838401581408670e-4,
        0.36899182659531622704e-5,
    ]
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class GammaPoleError(ValueError):
    """Evaluation at (or too near) a pole of the Gamma function."""


class HypergeometricError(ValueError):
    """Invalid parameters or non-convergence in the Gauss series."""


class QuadratureError(RuntimeError):
    """Refinement limit exceeded; carries the best estimate and its error bound."""

    def __init__(self, message: str, best: complex, error_bound: float):
        super().__init__(message)
        self.best = best
        self.error_bound = error_bound


class ContourError(RuntimeError):
    """Circle integral failed its node-doubling consistency check."""


def _near_nonpositive_integer(z, tol: float) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    n = np.round(z.real)
    return (np.abs(z - n) < tol) & (n <= 0)


def log_gamma(z):
    """Principal branch of log Gamma, vectorized over complex arrays.

    Uses a Lanczos evaluation for Re z >= 0.5 and the recurrence
    log G(z) = log G(z+1) - log z to shift arguments left of that line,
    which reproduces the principal branch off the cut.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(_near_nonpositive_integer(z, 1e-13)):
        bad = z[_near_nonpositive_integer(z, 1e-13)][0]
        raise GammaPoleError(f"log_gamma pole at z = {bad} (nonpositive integer)")

    out = np.zeros_like(z)
    work = z.copy()
    # shift left-half arguments up to Re >= 0.5, accumulating -log terms
    while True:
        mask = work.real < 0.5
        if not mask.any():
            break
        out[mask] -= np.log(work[mask])
        work[mask] += 1.0

    x = work - 1.0
    acc = np.full(work.shape, _LANCZOS_C[0], dtype=complex)
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (x + k)
    tmp = x + _LANCZOS_G + 0.5
    out += _HALF_LOG_2PI + (x + 0.5) * np.log(tmp) - tmp + np.log(acc)
    return complex(out[0]) if scalar else out


def gammafn(z):
    """Gamma itself; convenience wrapper over log_gamma."""
    return np.exp(log_gamma(z))


def _series_2f1(a, b, c, z, max_terms: int = _SERIES_MAX):
    """Plain Gauss series, elementwise over broadcast arrays; |z| < 1."""
    a, b, c, z = np.broadcast_arrays(
        *(np.asarray(v, dtype=complex) for v in (a, b, c, z))
    )
    total = np.ones(z.shape, dtype=complex)
    term = np.ones(z.shape, dtype=complex)
    small_streak = 0
    for n in range(max_terms):
        term = term * (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total = total + term
        if n % 4 == 3 or n > 200:
            bound = np.max(np.abs(term) / np.maximum(np.abs(total), 1e-290))
            if bound < 1e-16:
                small_streak += 1
                if small_streak >= 2:
                    return total
            else:
                small_streak = 0
    raise HypergeometricError(
        f"Gauss series did not converge within {max_terms} terms "
        f"(max |z| = {np.max(np.abs(z)):.4g})"
    )


def _terminating_2f1(a, k: int, c, z):
    """Exact finite sum when one numerator parameter is -k."""
    a = np.asarray(a, dtype=complex)
    c = np.asarray(c, dtype=complex)
    z = np.asarray(z, dtype=complex)
    shape = np.broadcast_shapes(a.shape, c.shape, z.shape)
    total = np.ones(shape, dtype=complex)
    term = np.ones(shape, dtype=complex)
    for n in range(k):
        term = term * (a + n) * (-k + n) / ((c + n) * (n + 1.0)) * z
        total = total + term
    return total


def _pfaff_2f1(a, b, c, z):
    """Map z to z/(z-1); lands in [0,1) for real z < 0."""
    w = z / (z - 1.0)
    return (1.0 - z) ** (-a) * _series_2f1(a, c - b, c, w)


def _large_negative_2f1(a, b, c, z):
    """Inverse-argument connection formula for real z << 0."""
    one = _series_2f1(b, 1.0 - c + b, 1.0 - a + b, 1.0 / z)
    two = _series_2f1(a, 1.0 - c + a, 1.0 - b + a, 1.0 / z)
    la = log_gamma(np.asarray(c)) + log_gamma(a - b) - log_gamma(a) - log_gamma(c - b)
    lb = log_gamma(np.asarray(c)) + log_gamma(b - a) - log_gamma(b) - log_gamma(c - a)
    return np.exp(la) * (-z) ** (-b) * one + np.exp(lb) * (-z) ** (-a) * two


def _near_one_2f1(a, b, c, z):
    """Connection formula in 1 - z for real z near 1 (c-a-b non-integer)."""
    w = 1.0 - z
    one = _series_2f1(a, b, a + b - c + 1.0, w)
    two = _series_2f1(c - a, c - b, c - a - b + 1.0, w)
    la = log_gamma(np.asarray(c)) + log_gamma(c - a - b) - log_gamma(c - a) - log_gamma(c - b)
    lb = log_gamma(np.asarray(c)) + log_gamma(a + b - c) - log_gamma(np.asarray(a)) - log_gamma(np.asarray(b))
    return np.exp(la) * one + np.exp(lb) * w ** (c - a - b) * two


def _dispatch_real(a, b, c, z):
    """Evaluate for scalar parameters and a real z array (shared path)."""
    out = np.empty(z.shape, dtype=complex)
    neg_far = z < -9.0
    neg = (z < 0) & ~neg_far
    small = (np.abs(z) <= 0.7) & (z >= 0)
    mid = (z > 0.7) & (z < 0.9)
    high = (z >= 0.9) & (z < 1.0 - 1e-13)
    at_one = np.abs(z - 1.0) <= 1e-13
    beyond = z > 1.0 + 1e-13
    if beyond.any():
        raise HypergeometricError("real argument beyond 1 is outside the domain")

    if neg_far.any():
        gap = a - b
        degenerate = (
            abs(gap - round(gap.real)) < _DEGENERATE_TOL and abs(gap.imag) < _DEGENERATE_TOL
        )
        if degenerate:
            # Pfaff still converges acceptably down to z ~ -60; beyond that
            # fall back to the symmetric parameter perturbation.
            moderate = neg_far & (z >= -60.0)
            extreme = neg_far & (z < -60.0)
            if moderate.any():
                out[moderate] = _pfaff_2f1(a, b, c, z[moderate])
            if extreme.any():
                hi = _large_negative_2f1(a, b + _PERTURB, c, z[extreme])
                lo = _large_negative_2f1(a, b - _PERTURB, c, z[extreme])
                out[extreme] = 0.5 * (hi + lo)
        else:
            out[neg_far] = _large_negative_2f1(a, b, c, z[neg_far])
    if neg.any():
        out[neg] = _pfaff_2f1(a, b, c, z[neg])
    if small.any():
        out[small] = _series_2f1(a, b, c, z[small])
    if mid.any():
        out[mid] = _series_2f1(a, b, c, z[mid])
    if high.any():
        s = c - a - b
        degenerate = (
            abs(s - round(s.real)) < _DEGENERATE_TOL and abs(s.imag) < _DEGENERATE_TOL
        )
        if degenerate:
            moderate = high & (z <= 0.995)
            extreme = high & (z > 0.995)
            if moderate.any():
                out[moderate] = _series_2f1(a, b, c, z[moderate])
            if extreme.any():
                hi = _near_one_2f1(a, b + _PERTURB, c, z[extreme])
                lo = _near_one_2f1(a, b - _PERTURB, c, z[extreme])
                out[extreme] = 0.5 * (hi + lo)
        else:
            out[high] = _near_one_2f1(a, b, c, z[high])
    if at_one.any():
        s = c - a - b
        if s.real <= 0:
            raise HypergeometricError(
                "z = 1 requires Re(c - a - b) > 0, got " f"{s}"
            )
        val = np.exp(
            log_gamma(np.asarray(c)) + log_gamma(s) - log_gamma(c - a) - log_gamma(c - b)
        )
        out[at_one] = val
    return out


def gauss_2f1(a, b, c, z):
    """Gauss 2F1(a, b; c; z) for complex parameters.

    Supports real z <= 1 (analytic continuation through argument
    transformations) and complex z inside the unit disk.  Parameters may be
    broadcast arrays as long as z-classification is uniform; the hot paths
    used by the eigenfunction evaluators are scalar-parameter/array-z and
    array-parameter/scalar-z.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    z = np.asarray(z, dtype=complex)
    scalar = max(a.ndim, b.ndim, c.ndim, z.ndim) == 0

    if np.any(_near_nonpositive_integer(c, _INT_TOL)):
        # allowed only when a numerator parameter terminates the series first
        terminates = False
        for p in (a, b):
            if p.ndim == 0 and _near_nonpositive_integer(p, _INT_TOL):
                k = int(round(-p.real))
                cbad = np.asarray(_near_nonpositive_integer(c, _INT_TOL) & (np.round(c.real) > -k))
                if not cbad.any():
                    terminates = True
        if not terminates:
            raise HypergeometricError(f"c = {c} is a nonpositive integer (Gamma pole)")

    # deterministic (a, b) ordering; 2F1 is symmetric in the pair
    if a.ndim == 0 and b.ndim == 0:
        if (b.real, b.imag) < (a.real, a.imag):
            a, b = b, a
        for p in (a, b):
            if _near_nonpositive_integer(p, _INT_TOL):
                k = int(round(-p.real))
                other = b if p is a else a
                res = _terminating_2f1(other, k, c, z)
                return complex(res) if res.ndim == 0 else res

    z_real = np.all(np.abs(z.imag) < 1e-14)
    if z_real and a.ndim == 0 and b.ndim == 0 and c.ndim == 0:
        zr = np.atleast_1d(z.real.astype(float))
        out = _dispatch_real(complex(a), complex(b), complex(c), zr)
        out = out.reshape(np.atleast_1d(z).shape)
        return complex(out[0]) if scalar else out.reshape(z.shape)

    # array parameters: require classification to be uniform over z
    zf = np.atleast_1d(z)
    absz = np.abs(zf)
    if z_real:
        zr = zf.real
        if np.all(zr <= -9.0):
            return _eval_array_params(_large_negative_2f1, a, b, c, z)
        if np.all((zr <= 0) & (zr > -9.0)):
            return _pfaff_2f1(a, b, c, z)
        if np.all((zr >= 0) & (zr < 0.9)):
            return _series_2f1(a, b, c, z)
        if np.all((zr >= 0.9) & (zr < 1.0 - 1e-13)):
            return _eval_array_params(_near_one_2f1, a, b, c, z)
        raise HypergeometricError(
            "mixed-regime real z with array parameters is not supported; "
            "split the call by argument range"
        )
    if np.all(absz < 0.999):
        w = zf / (zf - 1.0)
        use_pfaff = np.all(np.abs(w) < absz)
        if use_pfaff:
            return _pfaff_2f1(a, b, c, z)
        return _series_2f1(a, b, c, z)
    raise HypergeometricError("complex z outside the unit disk is not supported")


def _eval_array_params(kernel, a, b, c, z):
    """Apply a connection-formula kernel, averaging around integer degeneracies."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if kernel is _large_negative_2f1:
        gap = a - b
    else:
        gap = np.asarray(c, dtype=complex) - a - b
    near = (np.abs(gap - np.round(gap.real)) < _DEGENERATE_TOL) & (
        np.abs(gap.imag) < _DEGENERATE_TOL
    )
    if not np.any(near):
        return kernel(a, b, c, z)
    hi = kernel(a, b + _PERTURB, c, z)
    lo = kernel(a, b - _PERTURB, c, z)
    avg = 0.5 * (hi + lo)
    if np.all(near):
        return avg
    plain = kernel(a, b, c, z)
    return np.where(np.broadcast_to(near, plain.shape), avg, plain)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and limits for the composite quadrature engine."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    truncation: float = 40.0
    refinement_limit: int = 6

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")
        if self.refinement_limit < 1:
            raise ValueError("refinement_limit must be >= 1")


@dataclass(frozen=True)
class ContourSpec:
    """Circle contour for residue extraction."""

    center: complex
    radius: float
    node_count: int = 32

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.node_count < 16:
            raise ValueError("node_count must be >= 16")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _panel_quad(g: Callable, boundaries: np.ndarray) -> complex:
    """16-point Gauss-Legendre on each panel, one vectorized call."""
    a = boundaries[:-1]
    b = boundaries[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    vals = np.asarray(g(nodes))
    vals = vals.reshape(len(a), len(_GL_NODES))
    return complex(np.sum(half * (vals @ _GL_WEIGHTS)))


def _refine(boundaries: np.ndarray) -> np.ndarray:
    mids = 0.5 * (boundaries[:-1] + boundaries[1:])
    out = np.empty(2 * len(mids) + 1)
    out[0::2] = boundaries
    out[1::2] = mids
    return out


def _converge(g: Callable, boundaries: np.ndarray, spec: QuadratureSpec, what: str):
    prev = _panel_quad(g, boundaries)
    for _ in range(spec.refinement_limit):
        boundaries = _refine(boundaries)
        cur = _panel_quad(g, boundaries)
        err = abs(cur - prev)
        if err <= max(spec.abs_tol, spec.rel_tol * abs(cur)):
            return cur, err
        prev = cur
    raise QuadratureError(
        f"{what}: refinement limit {spec.refinement_limit} exceeded "
        f"(last error estimate {err:.3g})",
        best=cur,
        error_bound=err,
    )


def halfline_boundaries(T: float, grading_levels: int = 5, max_width: float = 4.0) -> np.ndarray:
    """Panel boundaries on [0, T]: geometric grading near 0, then uniform."""
    first = min(1.0, T) * 2.0 ** (-grading_levels)
    graded = [0.0] + [first * 2.0**j for j in range(grading_levels + 1)]
    lead = graded[-1]
    if lead >= T:
        return np.array([x for x in graded if x < T] + [T])
    n = max(1, math.ceil((T - lead) / max_width))
    uniform = np.linspace(lead, T, n + 1)
    return np.concatenate([np.array(graded[:-1]), uniform])


def effective_truncation(spec: QuadratureSpec, decay_rate: float | None) -> float:
    """Cutoff from the caller's exponential decay hint, capped by the spec."""
    if decay_rate is None or decay_rate <= 0:
        return spec.truncation
    needed = (math.log(10.0 / spec.abs_tol) + 8.0) / decay_rate
    return float(min(spec.truncation, max(needed, 1.0)))


def integrate_halfline(
    g: Callable,
    spec: QuadratureSpec,
    decay_rate: float | None = None,
) -> complex:
    """Integral of g over (0, infinity), truncated using the decay hint.

    g must accept a numpy array of abscissae and return values elementwise.
    """
    T = effective_truncation(spec, decay_rate)
    value, _ = _converge(g, halfline_boundaries(T), spec, "integrate_halfline")
    return value


def integrate_vertical_line(
    h: Callable,
    x0: float,
    spec: QuadratureSpec,
) -> complex:
    """Integral over the line lambda = x0 + i nu with the real element d nu.

    Orientation is nu from -infinity to +infinity.  h receives complex
    lambda arrays.
    """
    L = spec.truncation
    n = max(2, math.ceil(L))
    pos = np.linspace(0.0, L, n + 1)
    boundaries = np.concatenate([-pos[::-1], pos[1:]])

    def g(nu):
        return h(x0 + 1j * nu)

    value, _ = _converge(g, boundaries, spec, "integrate_vertical_line")
    return value


def contour_residue(h: Callable, c: ContourSpec, tol: float = 1e-9) -> complex:
    """(1/2 pi i) times the circle integral of h, via the equispaced trapezoid.

    Spectrally accurate when h has at most one simple pole strictly inside.
    A node-doubling disagreement beyond tol raises ContourError.
    """

    def ring(n: int) -> complex:
        theta = 2.0 * math.pi * np.arange(n) / n
        pts = c.center + c.radius * np.exp(1j * theta)
        vals = np.asarray(h(pts))
        return complex(np.sum(vals * c.radius * np.exp(1j * theta)) / n)

    coarse = ring(c.node_count)
    fine = ring(2 * c.node_count)
    if abs(fine - coarse) > max(tol, tol * abs(fine)):
        raise ContourError(
            f"contour integral not converged: {coarse} vs {fine} "
            f"at {c.node_count}/{2 * c.node_count} nodes"
        )
    return fine


_FD_STENCILS = {
    1: (2, np.array([1.0, -8.0, 0.0, 8.0, -1.0]), 12.0),
    2: (2, np.array([-1.0, 16.0, -30.0, 16.0, -1.0]), 12.0),
    3: (3, np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]), 8.0),
    4: (3, np.array([-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0]), 6.0),
}


def fd_derivative(g: Callable, t: float, order: int = 1, h: float = 1e-3):
    """Central-stencil derivative of the given order, O(h^4) accurate.

    Orders 1 through 4 are supported; g must be evaluable on
    [t - k h, t + k h] for the stencil half-width k.
    """
    if order not in _FD_STENCILS:
        raise ValueError(f"unsupported derivative order {order}")
    half, coeffs, den = _FD_STENCILS[order]
    offsets = np.arange(-half, half + 1, dtype=float)
    pts = t + offsets * h
    vals = np.asarray(g(pts))
    return np.sum(coeffs * vals) / (den * h**order)
