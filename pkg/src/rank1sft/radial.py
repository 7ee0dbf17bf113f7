"""Container for K-invariant radial functions.

A radial function carries one evaluator per open orbit, optional analytic
derivatives, and decay/support metadata used to pick integration cutoffs
and admissible spectral parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class RadialFunction:
    """Per-orbit evaluators of a K-invariant function of t > 0.

    ``derivatives[k][w]`` evaluates the (k+1)-th t-derivative on orbit w when
    analytic derivatives are available.  ``support_bound`` marks compact
    support; ``decay_class`` asserts membership in the decay class with
    weight exp((2/r) rho t).
    """

    components: tuple[Callable, ...]
    derivatives: tuple[tuple[Callable, ...], ...] = ()
    support_bound: float | None = None
    decay_class: float | None = None

    @property
    def orbits(self) -> int:
        return len(self.components)

    def component(self, w: int) -> Callable:
        return self.components[w]

    def derivative(self, w: int, order: int) -> Callable | None:
        if 1 <= order <= len(self.derivatives):
            return self.derivatives[order - 1][w]
        return None

    def __call__(self, t, w: int = 0):
        return self.components[w](np.asarray(t, dtype=float))

    def values(self, t) -> np.ndarray:
        """Stack of component values, shape (orbits,) + t.shape."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.asarray(f(t), dtype=complex) for f in self.components])


def scalar_radial(
    fn: Callable,
    orbits: int,
    deriv: Callable | None = None,
    support_bound: float | None = None,
    decay_class: float | None = None,
) -> RadialFunction:
    """Same profile on every orbit."""
    return RadialFunction(
        components=tuple([fn] * orbits),
        derivatives=((tuple([deriv] * orbits)),) if deriv is not None else (),
        support_bound=support_bound,
        decay_class=decay_class,
    )


def combine(
    f: RadialFunction, g: RadialFunction, cf: complex = 1.0, cg: complex = 1.0
) -> RadialFunction:
    """Pointwise combination cf*f + cg*g, merging metadata conservatively."""
    if f.orbits != g.orbits:
        raise ValueError("orbit counts differ")

    def make(w):
        ff, gg = f.components[w], g.components[w]
        return lambda t: cf * np.asarray(ff(t)) + cg * np.asarray(gg(t))

    if f.support_bound is not None and g.support_bound is not None:
        support = max(f.support_bound, g.support_bound)
    else:
        support = None

    # compact support implies membership in every decay class (rate 0 here);
    # larger decay_class = weaker decay, so the combination takes the max
    def rate(h):
        if h.decay_class is not None:
            return h.decay_class
        return 0.0 if h.support_bound is not None else None

    rf, rg = rate(f), rate(g)
    if rf is None or rg is None:
        decay = None
    else:
        decay = max(rf, rg) or None
    norders = min(len(f.derivatives), len(g.derivatives))
    derivs = tuple(
        tuple(
            (lambda fd, gd: lambda t: cf * np.asarray(fd(t)) + cg * np.asarray(gd(t)))(
                f.derivatives[k][w], g.derivatives[k][w]
            )
            for w in range(f.orbits)
        )
        for k in range(norders)
    )
    return RadialFunction(
        components=tuple(make(w) for w in range(f.orbits)),
        derivatives=derivs,
        support_bound=support,
        decay_class=decay,
    )


def bump(
    orbits: int,
    center: float = 1.5,
    width: float = 0.5,
    amplitudes: Sequence[float] | None = None,
) -> RadialFunction:
    """Smooth compactly supported window exp(1 - 1/(1 - u^2)), u=(t-center)/width."""
    if amplitudes is None:
        amplitudes = [1.0] * orbits
    if len(amplitudes) != orbits:
        raise ValueError("one amplitude per orbit required")

    def profile(t, amp):
        t = np.asarray(t, dtype=float)
        u = (t - center) / width
        out = np.zeros(t.shape)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - ui * ui))
        return out

    def dprofile(t, amp):
        t = np.asarray(t, dtype=float)
        u = (t - center) / width
        out = np.zeros(t.shape)
        inside = np.abs(u) < 1.0
        ui = u[inside]
        s = 1.0 - ui * ui
        out[inside] = amp * np.exp(1.0 - 1.0 / s) * (-2.0 * ui / (s * s)) / width
        return out

    comps = tuple((lambda a: lambda t: profile(t, a))(a) for a in amplitudes)
    derivs = (tuple((lambda a: lambda t: dprofile(t, a))(a) for a in amplitudes),)
    return RadialFunction(
        components=comps,
        derivatives=derivs,
        support_bound=center + width,
        decay_class=None,
    )
