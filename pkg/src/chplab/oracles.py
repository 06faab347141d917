"""
Closed-form reference solutions.

* An elliptic 2x2 system in 1D with coupling ``[[1, -x], [-x, 1]]`` whose
  solution leaves the convex hull of its boundary values.
* Two decoupled heat equations with different diffusivities on ``(0, pi)``,
  same initial data ``sin x``; the solution leaves the diagonal segment.
* Componentwise harmonic polynomials for Laplace-system sanity checks.

A natural-looking fix for x-dependent couplings, projecting pointwise with the
local metric, does not rescue the argument: with ``u`` constant near a point
and the metric varying there, the projected field has a nonzero gradient while
``grad u`` vanishes. Nothing in this module depends on that observation; it is
why only constant metrics get the hull guarantee.

None of these functions share code with the solvers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EllipticCounterexampleSpec",
    "ParabolicCounterexampleSpec",
    "elliptic_exact",
    "elliptic_metric",
    "elliptic_ratio_derivative",
    "elliptic_ratio",
    "parabolic_exact",
    "parabolic_eta",
    "harmonic_oracle",
    "HARMONIC_POLYNOMIALS",
]


@dataclass(frozen=True)
class EllipticCounterexampleSpec:
    ell: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.ell < 1.0:
            raise ValueError(f"domain length must lie in (0, 1), got {self.ell}")


@dataclass(frozen=True)
class ParabolicCounterexampleSpec:
    a1: float = 1.0
    a2: float = 2.0
    T: float = 1.0

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise ValueError("diffusivities must be positive")
        if self.a1 == self.a2:
            raise ValueError("equal diffusivities give no counterexample")
        if not self.T > 0:
            raise ValueError("T must be positive")


def elliptic_metric(x):
    """Coupling matrix ``[[1, -x], [-x, 1]]``."""
    x = float(np.asarray(x).reshape(-1)[0])
    return np.array([[1.0, -x], [-x, 1.0]])


def elliptic_exact(x, spec: EllipticCounterexampleSpec | None = None):
    """``(log((1-x)/(1+x)), log(1-x^2))``; vectorizes over ``x``."""
    spec = spec or EllipticCounterexampleSpec()
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > spec.ell):
        raise ValueError(f"x must lie in [0, {spec.ell}]")
    return np.stack([np.log((1.0 - x) / (1.0 + x)), np.log(1.0 - x * x)], axis=-1)


def elliptic_ratio(x):
    """``u1/u2`` for ``0 < x < 1``."""
    x = np.asarray(x, dtype=float)
    return np.log((1.0 - x) / (1.0 + x)) / np.log(1.0 - x * x)


def elliptic_ratio_derivative(x, spec: EllipticCounterexampleSpec | None = None):
    """
    Derivative of the component ratio ``u1/u2``,

        (2(1+x) log(1+x) + 2(1-x) log(1-x)) / ((x^2 - 1) (log(1-x) + log(1+x))^2),

    which is nonzero on ``(0, ell)``.
    """
    spec = spec or EllipticCounterexampleSpec()
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= spec.ell):
        raise ValueError(f"x must lie in (0, {spec.ell}); x = 0 is a 0/0 limit")
    lp, lm = np.log1p(x), np.log1p(-x)
    val = (2 * (1 + x) * lp + 2 * (1 - x) * lm) / ((x * x - 1) * (lm + lp) ** 2)
    if np.any(val == 0.0):
        raise ArithmeticError("ratio derivative vanished")
    return val


def parabolic_exact(t, x, spec: ParabolicCounterexampleSpec | None = None):
    """``(exp(-a1 t) sin x, exp(-a2 t) sin x)`` on ``[0, inf) x [0, pi]``."""
    spec = spec or ParabolicCounterexampleSpec()
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    if np.any(t < 0.0):
        raise ValueError("t must be nonnegative")
    if np.any(x < 0.0) or np.any(x > np.pi):
        raise ValueError("x must lie in [0, pi]")
    s = np.sin(x)
    return np.stack([np.exp(-spec.a1 * t) * s, np.exp(-spec.a2 * t) * s], axis=-1)


def parabolic_eta(t, spec: ParabolicCounterexampleSpec | None = None):
    """
    Half squared L2 distance of the exact solution to the diagonal segment:
    ``(1/4)(e^{-a1 t} - e^{-a2 t})^2 * int_0^pi sin^2 = (pi/8)(...)^2``.
    """
    spec = spec or ParabolicCounterexampleSpec()
    t = np.asarray(t, dtype=float)
    return np.pi / 8.0 * (np.exp(-spec.a1 * t) - np.exp(-spec.a2 * t)) ** 2


HARMONIC_POLYNOMIALS = {
    "1": lambda x, y: np.ones_like(x),
    "x": lambda x, y: x,
    "y": lambda x, y: y,
    "x2-y2": lambda x, y: x * x - y * y,
    "xy": lambda x, y: x * y,
}


def harmonic_oracle(mesh, selection, coefficients=None):
    """
    Nodal values of componentwise harmonic polynomials.

    ``selection`` holds one entry per component: either a key of
    :data:`HARMONIC_POLYNOMIALS` or a dict ``{key: weight}`` for a linear
    combination. Returns an array of shape ``(n_nodes, N)``.
    """
    if mesh.dim != 2:
        raise ValueError("harmonic oracle needs a 2D mesh")
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    cols = []
    for comp in selection:
        terms = {comp: 1.0} if isinstance(comp, str) else dict(comp)
        col = np.zeros_like(x)
        for key, w in terms.items():
            if key not in HARMONIC_POLYNOMIALS:
                raise KeyError(f"unknown harmonic polynomial {key!r}")
            col = col + w * HARMONIC_POLYNOMIALS[key](x, y)
        cols.append(col)
    return np.column_stack(cols)
