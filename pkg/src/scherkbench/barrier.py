"""Closed-form half-plane barrier and the warped-product profile machinery.

A graph of constant height over the equidistants of a geodesic is governed by
the profile equation  G_s h_s (1 + h_s^2) + 2 G h_ss = 0  in Fermi
coordinates.  For the comparison coefficient Gt(s) = cosh^2(sqrt(-d) s) the
exact decreasing solution is

    ht(s) = -log(tanh(sqrt(-d) s / 2)) / sqrt(-d),   s > 0,

which blows up at the geodesic and decays to zero at infinity; on a surface
whose curvature is at most c < d the same height profile is a strict
supersolution, which is the barrier property the truncation solver relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class BarrierError(ValueError):
    pass


@dataclass(frozen=True)
class BarrierParams:
    """Comparison curvature d and (optional) surface curvature bound c < d."""

    d: float
    c: float | None = None

    def __post_init__(self):
        if not (self.d < 0.0):
            raise BarrierError("comparison curvature d must be negative")
        if self.c is not None and not (self.c < self.d):
            raise BarrierError("need c < d < 0")


@dataclass(frozen=True)
class ProfileFunction:
    """A scalar profile s -> f(s) with first and second derivatives.

    Analytic derivatives are used when supplied; otherwise centered finite
    differences with Richardson extrapolation (base step 1e-4; the plain 1e-5
    step loses too many digits on second derivatives).
    """

    f: object
    df: object = None
    d2f: object = None
    fd_step: float = 1e-4

    def __call__(self, s: float) -> float:
        return self.f(s)

    def deriv(self, s: float) -> float:
        if self.df is not None:
            return self.df(s)
        h = self.fd_step
        d1 = (self.f(s + h) - self.f(s - h)) / (2 * h)
        d2 = (self.f(s + 2 * h) - self.f(s - 2 * h)) / (4 * h)
        return (4 * d1 - d2) / 3.0

    def deriv2(self, s: float) -> float:
        if self.d2f is not None:
            return self.d2f(s)
        h = self.fd_step
        c1 = (self.f(s + h) - 2 * self.f(s) + self.f(s - h)) / (h * h)
        c2 = (self.f(s + 2 * h) - 2 * self.f(s) + self.f(s - 2 * h)) / (4 * h * h)
        return (4 * c1 - c2) / 3.0


def barrier_height(s: float, d: float = -1.0) -> float:
    """The exact decreasing barrier profile; +inf below s = 1e-8."""
    if d >= 0.0:
        raise BarrierError("d must be negative")
    if s <= 0.0:
        raise BarrierError("the barrier is defined for s > 0")
    if s < 1e-8:
        return math.inf
    a = math.sqrt(-d)
    return -math.log(math.tanh(0.5 * a * s)) / a


def barrier_profile(d: float = -1.0) -> ProfileFunction:
    """Barrier height as a ProfileFunction with analytic derivatives."""
    if d >= 0.0:
        raise BarrierError("d must be negative")
    a = math.sqrt(-d)

    def f(s):
        return barrier_height(s, d)

    def df(s):
        return -1.0 / math.sinh(a * s)

    def d2f(s):
        sh = math.sinh(a * s)
        return a * math.cosh(a * s) / (sh * sh)

    return ProfileFunction(f, df, d2f)


def comparison_coefficient(d: float = -1.0) -> ProfileFunction:
    """Gt(s) = cosh^2(sqrt(-d) s), the Fermi coefficient at curvature d."""
    if d >= 0.0:
        raise BarrierError("d must be negative")
    a = math.sqrt(-d)
    return ProfileFunction(
        lambda s: math.cosh(a * s) ** 2,
        lambda s: a * math.sinh(2 * a * s),
        lambda s: 2 * a * a * math.cosh(2 * a * s),
    )


def scherk_ode_residual(h: ProfileFunction, G: ProfileFunction, s: float) -> float:
    """G_s h_s (1 + h_s^2) + 2 G h_ss.

    Zero for the exact pair (barrier, comparison coefficient); strictly
    negative when the same height profile rides on a coefficient of curvature
    below the comparison value (positive mean curvature for the downward
    normal, i.e. a supersolution).
    """
    hs = h.deriv(s)
    hss = h.deriv2(s)
    return G.deriv(s) * hs * (1.0 + hs * hs) + 2.0 * G(s) * hss


def profile_curvature(G: ProfileFunction, s: float) -> float:
    """Gauss curvature -1/4 (G_s/G)^2 - 1/2 (G_s/G)_s of ds^2 + G dt^2."""
    g = G(s)
    if g <= 0.0:
        raise BarrierError("metric coefficient must be positive")
    gs = G.deriv(s)
    gss = G.deriv2(s)
    ratio = gs / g
    ratio_s = (gss * g - gs * gs) / (g * g)
    return -0.25 * ratio * ratio - 0.5 * ratio_s


def comparison_ode_check(
    f: ProfileFunction,
    g: ProfileFunction,
    x0: float,
    xs,
    match_tol: float = 1e-9,
) -> bool | None:
    """Riccati-type comparison: f(x0) = g(x0) and 2f' + f^2 > 2g' + g^2 force f > g.

    Returns True/False for the conclusion at the samples, or None when the
    hypotheses fail somewhere (inapplicable, not false).
    """
    if abs(f(x0) - g(x0)) > match_tol:
        return None
    for x in xs:
        lhs = 2.0 * f.deriv(x) + f(x) ** 2
        rhs = 2.0 * g.deriv(x) + g(x) ** 2
        if not lhs > rhs:
            return None
    return all(f(x) > g(x) for x in xs if x > x0)
