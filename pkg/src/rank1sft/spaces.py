"""Root-multiplicity data and the spectral geometry derived from it.

Everything downstream (eigenfunctions, transforms, Schwartz strips) is
determined by four root multiplicities and the number of open orbits.
This module holds that structural data plus the derived quantities:
the exponent rho, the radial Jacobian, the discrete-spectrum parameters,
and the regularizing polynomials.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SINGULAR_R_TOL = 1e-12


class InvalidMultiplicitiesError(ValueError):
    """Raised when a multiplicity tuple violates a structural constraint."""


class SingularShiftError(ValueError):
    """Raised when the decay line gamma_r collides with a discrete parameter."""


@dataclass(frozen=True)
class MultiplicityDatum:
    """The four root multiplicities plus the open-orbit count.

    m1p/m1m are the +/- multiplicities of the short root, m2p/m2m those of
    the doubled root.  ``orbits`` is 1 or 2 and cannot be inferred from the
    multiplicities, so it is an explicit input.
    """

    m1p: int
    m1m: int
    m2p: int
    m2m: int
    orbits: int = 2

    def __post_init__(self):
        for name in ("m1p", "m1m", "m2p", "m2m"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise InvalidMultiplicitiesError(
                    f"rule 'multiplicities are nonnegative integers': {name}={v!r}"
                )
        if self.m1p + self.m1m <= 0:
            raise InvalidMultiplicitiesError(
                "rule 'm1+ + m1- > 0': got "
                f"m1p={self.m1p}, m1m={self.m1m}"
            )
        if self.m2m > 0 and self.m1p != self.m1m:
            raise InvalidMultiplicitiesError(
                "rule 'if m2- > 0 then m1+ = m1-': got "
                f"m2m={self.m2m}, m1p={self.m1p}, m1m={self.m1m}"
            )
        if self.orbits not in (1, 2):
            raise InvalidMultiplicitiesError(
                f"rule 'orbit count is 1 or 2': got orbits={self.orbits}"
            )

    @property
    def riemannian(self) -> bool:
        return self.m1m == 0 and self.m2m == 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.m1p, self.m1m, self.m2p, self.m2m)


@dataclass(frozen=True)
class SpaceGeometry:
    """A multiplicity datum together with its derived exponent rho."""

    multiplicities: MultiplicityDatum
    rho: float

    @property
    def orbits(self) -> int:
        return self.multiplicities.orbits

    @property
    def short_sum(self) -> int:
        """m1+ + m2+, the combination entering every hypergeometric parameter."""
        m = self.multiplicities
        return m.m1p + m.m2p


def derive_geometry(m: MultiplicityDatum) -> SpaceGeometry:
    """Build the geometry record; rho = (m1 + 2*m2)/2."""
    rho = 0.5 * (m.m1p + m.m1m + 2 * m.m2p + 2 * m.m2m)
    if rho <= 0:
        raise InvalidMultiplicitiesError(f"rule 'rho > 0': got rho={rho}")
    return SpaceGeometry(multiplicities=m, rho=rho)


def geometry(m1p: int, m1m: int, m2p: int, m2m: int, orbits: int | None = None) -> SpaceGeometry:
    """Convenience constructor from raw multiplicities.

    When ``orbits`` is omitted the orbit count defaults to 2 with a warning,
    since it is independent structural data.
    """
    if orbits is None:
        warnings.warn(
            "orbit count not specified for raw multiplicities; defaulting to 2",
            stacklevel=2,
        )
        orbits = 2
    return derive_geometry(MultiplicityDatum(m1p, m1m, m2p, m2m, orbits))


def log_jacobian(g: SpaceGeometry, t):
    """log J(t), safe for large t where J itself would overflow."""
    m = g.multiplicities
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    if m.m1p:
        out = out + m.m1p * _log_sinh(t)
    if m.m2p:
        out = out + m.m2p * _log_sinh(2 * t)
    if m.m1m:
        out = out + m.m1m * _log_cosh(t)
    if m.m2m:
        out = out + m.m2m * _log_cosh(2 * t)
    return out if out.ndim else float(out)


def _log_sinh(t):
    # t - log 2 + log1p(-exp(-2t)) avoids overflow for large t
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        body = safe - math.log(2.0) + np.log1p(-np.exp(-2 * safe))
    return np.where(t > 0, body, -np.inf)


def _log_cosh(t):
    t = np.asarray(t, dtype=float)
    return np.abs(t) - math.log(2.0) + np.log1p(np.exp(-2 * np.abs(t)))


def jacobian(g: SpaceGeometry, t):
    """Radial density J(t) = sinh^m1p(t) cosh^m1m(t) sinh^m2p(2t) cosh^m2m(2t)."""
    m = g.multiplicities
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("jacobian requires t >= 0")
    out = (
        np.sinh(t) ** m.m1p
        * np.cosh(t) ** m.m1m
        * np.sinh(2 * t) ** m.m2p
        * np.cosh(2 * t) ** m.m2m
    )
    return out if out.ndim else float(out)


def gamma_r(g: SpaceGeometry, r: float) -> float:
    """Decay-line abscissa gamma_r = (2/r - 1) rho for 0 < r <= 2."""
    if not (0.0 < r <= 2.0):
        raise ValueError(f"r must lie in (0, 2], got {r}")
    return (2.0 / r - 1.0) * g.rho


@dataclass(frozen=True)
class PoleSet:
    """Positive discrete-spectrum parameters lambda_k, descending."""

    lambdas: tuple[float, ...]
    geometry: SpaceGeometry

    def __len__(self) -> int:
        return len(self.lambdas)

    def __iter__(self):
        return iter(self.lambdas)

    def __getitem__(self, k: int) -> float:
        return self.lambdas[k]


def pole_set(g: SpaceGeometry) -> PoleSet:
    """All lambda_k = rho - 1 - m1p - m2p - 2k that are strictly positive."""
    lams = []
    k = 0
    while True:
        lam = g.rho - 1.0 - g.short_sum - 2.0 * k
        if lam <= 0:
            break
        lams.append(lam)
        k += 1
    return PoleSet(lambdas=tuple(lams), geometry=g)


def split_pole_set(p: PoleSet, r: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Split into (L_r, L_r_c): entries below resp. above gamma_r.

    Rejects r for which gamma_r coincides with some lambda_k, where the
    standing assumption that the shifted line avoids singularities fails.
    """
    g = gamma_r(p.geometry, r)
    for lam in p.lambdas:
        if abs(g - lam) < SINGULAR_R_TOL:
            raise SingularShiftError(
                f"gamma_r = {g} collides with discrete parameter {lam}; "
                "choose r so the shifted line avoids singularities"
            )
    lower = tuple(lam for lam in p.lambdas if lam < g)
    upper = tuple(lam for lam in p.lambdas if lam > g)
    return lower, upper


@dataclass(frozen=True)
class PolynomialSpec:
    """A polynomial stored by its roots (repeats allowed) and leading coefficient.

    Root storage avoids coefficient cancellation as degrees grow.
    """

    roots: tuple[complex, ...]
    leading: complex = 1.0
    label: str = ""

    @property
    def degree(self) -> int:
        return len(self.roots)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, complex(self.leading))
        for root in self.roots:
            out = out * (z - root)
        return out if out.ndim else complex(out)


def poly_p_R(g: SpaceGeometry, R: float) -> PolynomialSpec:
    """Monic polynomial clearing every eigenfunction pole with Re >= -R.

    Roots come in two families: -rho - 2k and rho - m1p - m2p - 1 - 2k,
    kept while they stay >= -R.  Coinciding entries both appear, so the
    product genuinely clears higher-order coincidences.
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    roots: list[complex] = []
    k = 0
    while g.rho + 2 * k <= R:
        roots.append(complex(-g.rho - 2 * k))
        k += 1
    k = 0
    while -g.rho + g.short_sum + 1 + 2 * k <= R:
        roots.append(complex(g.rho - g.short_sum - 1 - 2 * k))
        k += 1
    return PolynomialSpec(roots=tuple(roots), leading=1.0, label=f"p_R(R={R})")


def poly_q_R(R: float) -> PolynomialSpec:
    """Product of (2*lambda - k) over integers 0 < k <= R.

    Roots are k/2; the non-monic normalization 2^degree is recorded in
    ``leading`` so evaluation matches the factor form exactly.
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    ks = [k for k in range(1, math.floor(R) + 1)]
    return PolynomialSpec(
        roots=tuple(complex(k / 2.0) for k in ks),
        leading=2.0 ** len(ks),
        label=f"q_R(R={R})",
    )


def poly_pi(p: PoleSet) -> PolynomialSpec:
    """Polynomial in the eigenvalue variable s with roots lambda_k^2 - rho^2.

    Composed with s = lambda^2 - rho^2 it vanishes exactly at lambda = +-lambda_k.
    """
    rho = p.geometry.rho
    return PolynomialSpec(
        roots=tuple(complex(lam * lam - rho * rho) for lam in p.lambdas),
        leading=1.0,
        label="pi",
    )


def poly_p_r(g: SpaceGeometry, r: float) -> PolynomialSpec:
    """Monic polynomial vanishing exactly at -lambda_k for lambda_k below gamma_r."""
    lower, _ = split_pole_set(pole_set(g), r)
    return PolynomialSpec(
        roots=tuple(complex(-lam) for lam in lower), leading=1.0, label=f"p_r(r={r})"
    )


@dataclass(frozen=True)
class Preset:
    name: str
    multiplicities: MultiplicityDatum
    note: str


def _real_hyperbolic(p: int, q: int) -> Preset:
    # m1p = q-1, m1m = p-1 reproduces rho = (p+q-2)/2 and L = {rho - q - 2k}
    return Preset(
        name=f"real-hyperbolic-p{p}-q{q}",
        multiplicities=MultiplicityDatum(q - 1, p - 1, 0, 0, orbits=2),
        note=f"SO_e({p},{q})/SO_e({p-1},{q}); rho=(p+q-2)/2",
    )


def _riemannian_h(n: int) -> Preset:
    return Preset(
        name=f"riemannian-H{n}",
        multiplicities=MultiplicityDatum(n - 1, 0, 0, 0, orbits=1),
        note=f"real hyperbolic space H^{n}; single open orbit",
    )


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in [
        _riemannian_h(2),
        _riemannian_h(3),
        _riemannian_h(4),
        _riemannian_h(5),
        _real_hyperbolic(4, 3),
        _real_hyperbolic(9, 1),
        _real_hyperbolic(5, 2),
        _real_hyperbolic(3, 1),
    ]
}


def preset_catalogue() -> list[dict]:
    """Machine-readable preset list (name, multiplicities, orbits, note)."""
    out = []
    for p in PRESETS.values():
        m = p.multiplicities
        out.append(
            {
                "name": p.name,
                "multiplicities": list(m.as_tuple()),
                "orbits": m.orbits,
                "note": p.note,
            }
        )
    return out


def preset_geometry(name: str) -> SpaceGeometry:
    if name not in PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        )
    return derive_geometry(PRESETS[name].multiplicities)
