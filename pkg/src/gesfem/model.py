"""Nonlinear flow functions and their partial derivatives.

A FlowModel bundles the velocity-law pair (F, K), the energy density G with
g(r) = G(r) - r G'(r), and the diffusion coefficient D together with its
bounds.  The built-in gradient-flow family takes G(r) = r^(-alpha), so
g(r) = (1 + alpha) r^(-alpha), F(u, H) = g(u) H, and inverts to
K(u, V) = V u^alpha / (1 + alpha).  The scheme itself only ever consumes
F, K, their partials, G (for the energy monitor), and D; the mobility m is
implied and never materialised.

All callables are numpy-vectorised.  Evaluation at u <= 0 raises
ModelDomainError whenever the model involves negative powers; u is never
clamped, so maximum-principle violations surface as hard errors.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModelDomainError, ValidationError


@dataclass(frozen=True)
class FlowModel:
    """Velocity-law pair with partials, energy density, and diffusion."""

    name: str
    F: Callable  # F(u, H)
    dF1: Callable
    dF2: Callable
    K: Callable  # K(u, V)
    dK1: Callable
    dK2: Callable
    G: Callable
    Gp: Callable
    Gpp: Callable
    g: Callable  # g(r) = G(r) - r G'(r)
    D: Callable  # diffusion coefficient D(u)
    D_bounds: tuple  # (D0, D1)
    D_constant: float | None = None
    fk_invertible: bool = True
    params: dict = field(default_factory=dict)


def _require_positive(u):
    u = np.asarray(u)
    if not (u > 0).all():
        bad = float(np.min(u))
        raise ModelDomainError(
            f"concentration must stay positive for negative powers; min u = {bad:g}"
        )


def gradient_flow_model(alpha, D0=1.0):
    """Gradient-flow family G(r) = r^(-alpha) with constant diffusion D0.

    alpha = 0 recovers classical mean curvature flow (g = 1, F(u, H) = H).
    """
    if alpha < 0:
        raise ValidationError("alpha must be non-negative")
    if not D0 > 0:
        raise ValidationError("D0 must be positive")
    a = float(alpha)
    guard = _require_positive if a != 0 else (lambda u: None)

    def G(r):
        guard(r)
        return np.power(r, -a)

    def Gp(r):
        guard(r)
        return -a * np.power(r, -a - 1.0)

    def Gpp(r):
        guard(r)
        return a * (a + 1.0) * np.power(r, -a - 2.0)

    def g(r):
        guard(r)
        return (1.0 + a) * np.power(r, -a)

    def F(u, H):
        return g(u) * H

    def dF1(u, H):
        guard(u)
        return -a * (1.0 + a) * np.power(u, -a - 1.0) * H

    def dF2(u, H):
        return g(u) * np.ones_like(np.asarray(H, dtype=float))

    def K(u, V):
        guard(u)
        return V * np.power(u, a) / (1.0 + a)

    def dK1(u, V):
        guard(u)
        return a * V * np.power(u, a - 1.0) / (1.0 + a)

    def dK2(u, V):
        guard(u)
        return np.power(u, a) / (1.0 + a) * np.ones_like(np.asarray(V, dtype=float))

    return FlowModel(
        name="gradient_flow",
        F=F, dF1=dF1, dF2=dF2,
        K=K, dK1=dK1, dK2=dK2,
        G=G, Gp=Gp, Gpp=Gpp, g=g,
        D=lambda u: np.full_like(np.asarray(u, dtype=float), D0),
        D_bounds=(D0, D0),
        D_constant=D0,
        params={"alpha": a, "D0": float(D0)},
    )


def stationary_model(D0=1.0):
    """F = 0: the surface does not move; u diffuses with constant D0.

    The (F, K) pair is degenerate here (F is not invertible in H), so the
    inversion identity does not apply; dK2 = 1 keeps the V-equation well
    posed with V identically zero.
    """
    if not D0 > 0:
        raise ValidationError("D0 must be positive")
    zero = lambda u, w: np.zeros_like(np.asarray(u, dtype=float) * np.asarray(w))
    one = lambda u, w: np.ones_like(np.asarray(u, dtype=float) * np.asarray(w))
    return FlowModel(
        name="stationary",
        F=zero, dF1=zero, dF2=one,
        K=lambda u, V: np.asarray(V, dtype=float) * np.ones_like(np.asarray(u, dtype=float)),
        dK1=zero, dK2=one,
        G=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        Gp=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        Gpp=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        g=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        D=lambda u: np.full_like(np.asarray(u, dtype=float), D0),
        D_bounds=(D0, D0),
        D_constant=D0,
        fk_invertible=False,
        params={"D0": float(D0)},
    )


MODEL_REGISTRY = {
    "gradient_flow": gradient_flow_model,
    "stationary": stationary_model,
}


def make_model(name, **params):
    """Instantiate a registered model by name; the extension point."""
    try:
        factory = MODEL_REGISTRY[name]
    except KeyError:
        raise ValidationError(
            f"unknown model {name!r}; registered: {sorted(MODEL_REGISTRY)}"
        ) from None
    return factory(**params)


def g_from_G(G, Gp, r):
    """g(r) = G(r) - r G'(r), evaluated from arbitrary G and G'."""
    r = np.asarray(r, dtype=float)
    return G(r) - r * Gp(r)


def central_difference(f, x, step=1e-6):
    """Second-order central difference of a scalar function of one variable."""
    return (f(x + step) - f(x - step)) / (2.0 * step)


def check_partials(model, u, w, step=1e-6):
    """Compare closed-form partials of F and K with central differences.

    Returns the worst relative discrepancy over the four partials at (u, w),
    where w plays the role of H for F and of V for K.
    """
    pairs = [
        (model.dF1(u, w), central_difference(lambda s: model.F(s, w), u, step)),
        (model.dF2(u, w), central_difference(lambda s: model.F(u, s), w, step)),
        (model.dK1(u, w), central_difference(lambda s: model.K(s, w), u, step)),
        (model.dK2(u, w), central_difference(lambda s: model.K(u, s), w, step)),
    ]
    worst = 0.0
    for exact, approx in pairs:
        scale = max(abs(float(exact)), 1.0)
        worst = max(worst, abs(float(exact) - float(approx)) / scale)
    return worst


def validate_assumptions(model, u_range, V_range, H_range=None, samples=20):
    """Sample a (u, V, H) box and report worst margins of the assumptions.

    Checks positivity of dK2 and 1/dF2, positivity of G'' and g, and the
    declared bounds on D.  Report-only: returns a dict of checks with their
    worst margins and a boolean 'passed' per check.
    """
    if H_range is None:
        H_range = (-max(abs(V_range[0]), abs(V_range[1]), 1.0),
                   max(abs(V_range[0]), abs(V_range[1]), 1.0))
    us = np.linspace(u_range[0], u_range[1], samples)
    Vs = np.linspace(V_range[0], V_range[1], samples)
    Hs = np.linspace(H_range[0], H_range[1], samples)
    UU, VV = np.meshgrid(us, Vs, indexing="ij")
    _, HH = np.meshgrid(us, Hs, indexing="ij")

    report = {}

    def record(name, margin):
        margin = float(margin)
        report[name] = {"worst_margin": margin, "passed": bool(margin > 0)}

    record("dK2_positive", np.min(model.dK2(UU, VV)))
    record("inv_dF2_positive", np.min(1.0 / model.dF2(UU, HH)))
    record("Gpp_positive", np.min(model.Gpp(us)))
    record("g_positive", np.min(model.g(us)))
    D0, D1 = model.D_bounds
    Dv = model.D(us)
    record("D_lower_bound", np.min(Dv - D0) + 1e-300)
    record("D_upper_bound", np.min(D1 - Dv) + 1e-300)
    report["passed"] = all(v["passed"] for v in report.values() if isinstance(v, dict))
    return report
