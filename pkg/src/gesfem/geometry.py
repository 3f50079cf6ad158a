"""Initial data from analytic surfaces and pointwise geometric identities.

The scheme evolves the normal and the scalar geometric variable as unknowns,
so the initial fields are nodal interpolations of analytic data: the unit
normal grad(phi)/|grad(phi)|, the mean curvature from the level-set formula,
and the consistent initial normal velocity V0 = -F(u0, H0).
"""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ValidationError


def analytic_normal_and_H(surface, points):
    """Outward unit normal and mean curvature (sum of principal curvatures).

    H = (lap(phi) |grad phi|^2 - grad^T Hess grad) / |grad phi|^3, positive
    for a sphere with the outward normal.  Accepts (3,) or (n, 3) points on
    the surface (|phi| <= 1e-8).
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    resid = np.abs(surface.value(pts))
    if resid.max() > 1e-8:
        raise GeometryError(
            f"point off the surface: |phi| = {resid.max():.3e} > 1e-8"
        )
    grad = surface.gradient(pts)
    hess = surface.hessian(pts)
    norm = np.linalg.norm(grad, axis=-1)
    if norm.min() < 1e-12:
        raise GeometryError("vanishing level-set gradient on the surface")
    nu = grad / norm[..., None]
    lap = np.trace(hess, axis1=-2, axis2=-1)
    ghg = np.einsum("ni,nij,nj->n", grad, hess, grad)
    H = (lap * norm**2 - ghg) / norm**3
    if single:
        return nu[0], float(H[0])
    return nu, H


@dataclass
class InitialData:
    """Nodal vectors of positions, normals, curvature, velocity, concentration."""

    x: np.ndarray  # (N, 3)
    n: np.ndarray  # (N, 3) unit normals
    H: np.ndarray  # (N,)
    V: np.ndarray  # (N,)  V = -F(u, H)
    u: np.ndarray  # (N,)

    @property
    def v(self):
        return self.V[:, None] * self.n


def build_initial_data(mesh, surface, model, u0):
    """Interpolate exact initial fields at the mesh nodes.

    u0 is a callable position -> concentration, evaluated nodewise (Lagrange
    interpolation).  The initial velocity is the consistent V0 = -F(u0, H0).
    """
    x = mesh.nodes.copy()
    n, H = analytic_normal_and_H(surface, x)
    u = np.asarray(u0(x), dtype=float)
    if u.ndim == 0:
        u = np.full(mesh.n_nodes, float(u))
    if u.shape != (mesh.n_nodes,):
        raise ValidationError(
            f"u0 returned shape {u.shape}, expected ({mesh.n_nodes},)"
        )
    V = -np.asarray(model.F(u, H), dtype=float)
    return InitialData(x=x, n=n, H=np.asarray(H, dtype=float), V=V, u=u)


def constant_u0(value):
    """Spatially constant concentration."""
    if not value > 0:
        raise ValidationError("constant concentration must be positive")
    return lambda x: np.full(np.atleast_2d(x).shape[0], float(value))


def tips_u0(peak, valley, half_length, sharpness=2):
    """Concentration peaked at the ends of the long axis (x) of an ellipsoid.

    u = valley + (peak - valley) * (x / half_length)^(2 * sharpness).
    """
    if not (peak > valley > 0):
        raise ValidationError("require peak > valley > 0")
    p = 2 * int(sharpness)

    def u0(x):
        xi = np.atleast_2d(x)[:, 0] / half_length
        return valley + (peak - valley) * np.clip(xi**p, 0.0, 1.0)

    return u0


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def dumbbell_initial_u(high, low, center=0.0, band=0.5):
    """High concentration above the neck, low at the neck and below.

    Smoothstep in the axial coordinate x across [center - band/2,
    center + band/2]; exactly (high + low)/2 at the band midpoint.
    """
    if not (high > low > 0):
        raise ValidationError("require high > low > 0")

    def u0(x):
        xi = (np.atleast_2d(x)[:, 0] - (center - 0.5 * band)) / band
        return low + (high - low) * _smoothstep(xi)

    return u0


def cup_bottom_u0(base, low, z_low=-0.8, band=0.35):
    """Nearly constant concentration, decreased on the outer bottom (low z)."""
    if not (base > low > 0):
        raise ValidationError("require base > low > 0")

    def u0(x):
        zi = (np.atleast_2d(x)[:, 2] - z_low) / band
        return low + (base - low) * _smoothstep(zi)

    return u0


U0_PRESETS = {
    "constant": constant_u0,
    "tips": tips_u0,
    "neck_split": dumbbell_initial_u,
    "cup_bottom": cup_bottom_u0,
}


def make_u0(preset, **params):
    """Look up an initial-concentration preset by name."""
    try:
        factory = U0_PRESETS[preset]
    except KeyError:
        raise ValidationError(
            f"unknown u0 preset {preset!r}; available: {sorted(U0_PRESETS)}"
        ) from None
    return factory(**params)
