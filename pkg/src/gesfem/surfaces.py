"""Implicit surface catalog: level sets with analytic gradients and Hessians.

Each surface is the zero set of phi: R^3 -> R.  The catalog shapes are
star-shaped with respect to the origin, so seed meshes can be produced by
projecting a sphere mesh along rays from the origin.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GeometryError, ValidationError


@dataclass(frozen=True)
class ImplicitSurface:
    """Level-set surface {phi = 0} with analytic derivatives.

    value/gradient/hessian accept points of shape (3,) or (n, 3) and
    broadcast accordingly.  bounding_radius encloses the surface; the
    gradient is nonvanishing in a tubular neighbourhood of the zero set.
    """

    kind: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    bounding_radius: float
    params: dict = field(default_factory=dict)

    def project_along_ray(self, point, tol=1e-13, max_iter=100):
        """Intersect the ray from the origin through `point` with {phi = 0}.

        Bisection on t in (0, bounding_radius/|point|] followed by Newton
        polish.  Requires the surface to be star-shaped about the origin.
        """
        p = np.asarray(point, dtype=float)
        r = np.linalg.norm(p)
        if r == 0.0:
            raise GeometryError("cannot project the origin along a ray")
        d = p / r
        lo, hi = 0.0, 1.05 * self.bounding_radius
        flo = self.value(lo * d)
        fhi = self.value(hi * d)
        if flo * fhi > 0:
            raise GeometryError(
                f"ray through {p} does not bracket the {self.kind} surface"
            )
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fmid = self.value(mid * d)
            if flo * fmid <= 0:
                hi = mid
            else:
                lo, flo = mid, fmid
            if hi - lo < 1e-9:
                break
        t = 0.5 * (lo + hi)
        for _ in range(max_iter):
            x = t * d
            f = self.value(x)
            df = float(self.gradient(x) @ d)
            if df == 0.0:
                break
            step = f / df
            t -= step
            if abs(step) < tol * max(t, 1.0):
                break
        x = t * d
        if abs(self.value(x)) > 1e-10:
            raise GeometryError(f"ray projection onto {self.kind} did not converge")
        return x

    def project_along_gradient(self, point, tol=1e-12, max_iter=50):
        """Newton projection of `point` onto {phi = 0} along grad(phi)."""
        x = np.asarray(point, dtype=float).copy()
        for _ in range(max_iter):
            f = self.value(x)
            g = self.gradient(x)
            g2 = float(g @ g)
            if g2 == 0.0:
                raise GeometryError("vanishing gradient during projection")
            step = (f / g2) * g
            x -= step
            if np.linalg.norm(step) < tol:
                return x
        raise GeometryError(
            f"gradient projection onto {self.kind} exceeded {max_iter} iterations"
        )


def _sphere(radius):
    r2 = radius * radius

    def value(x):
        x = np.asarray(x, dtype=float)
        return (x * x).sum(axis=-1) - r2

    def gradient(x):
        return 2.0 * np.asarray(x, dtype=float)

    def hessian(x):
        x = np.asarray(x, dtype=float)
        eye = 2.0 * np.eye(3)
        return np.broadcast_to(eye, x.shape[:-1] + (3, 3)).copy()

    return value, gradient, hessian, 1.5 * radius


def _ellipsoid(a, b, c):
    inv2 = np.array([1.0 / a**2, 1.0 / b**2, 1.0 / c**2])

    def value(x):
        x = np.asarray(x, dtype=float)
        return (x * x * inv2).sum(axis=-1) - 1.0

    def gradient(x):
        return 2.0 * np.asarray(x, dtype=float) * inv2

    def hessian(x):
        x = np.asarray(x, dtype=float)
        eye = 2.0 * np.diag(inv2)
        return np.broadcast_to(eye, x.shape[:-1] + (3, 3)).copy()

    return value, gradient, hessian, 1.5 * max(a, b, c)


def _dumbbell(length, r_neck, r_bulb, cap=1.2):
    # Axis along x.  Radius-squared profile c(x) = f(x)^2 * (1 - (x/(cap*L))^2)
    # with f(x) = r_neck + (r_bulb - r_neck) * (1 - cos(pi x / L))^2 / 4; the
    # polynomial cap closes the tube smoothly at x = +-cap*L.
    L = length
    Lc = cap * length
    dr = r_bulb - r_neck

    def _f(s):
        return r_neck + dr * (1.0 - np.cos(np.pi * s / L)) ** 2 / 4.0

    def _fp(s):
        w = np.pi / L
        return dr * 0.5 * (1.0 - np.cos(w * s)) * np.sin(w * s) * w

    def _fpp(s):
        w = np.pi / L
        return dr * 0.5 * w * w * (np.sin(w * s) ** 2 + (1.0 - np.cos(w * s)) * np.cos(w * s))

    def _c(s):
        return _f(s) ** 2 * (1.0 - (s / Lc) ** 2)

    def _cp(s):
        return 2.0 * _f(s) * _fp(s) * (1.0 - (s / Lc) ** 2) - _f(s) ** 2 * 2.0 * s / Lc**2

    def _cpp(s):
        cap_v = 1.0 - (s / Lc) ** 2
        return (
            2.0 * (_fp(s) ** 2 + _f(s) * _fpp(s)) * cap_v
            - 8.0 * _f(s) * _fp(s) * s / Lc**2
            - 2.0 * _f(s) ** 2 / Lc**2
        )

    def value(x):
        x = np.asarray(x, dtype=float)
        return x[..., 1] ** 2 + x[..., 2] ** 2 - _c(x[..., 0])

    def gradient(x):
        x = np.asarray(x, dtype=float)
        g = np.empty_like(x)
        g[..., 0] = -_cp(x[..., 0])
        g[..., 1] = 2.0 * x[..., 1]
        g[..., 2] = 2.0 * x[..., 2]
        return g

    def hessian(x):
        x = np.asarray(x, dtype=float)
        h = np.zeros(x.shape[:-1] + (3, 3))
        h[..., 0, 0] = -_cpp(x[..., 0])
        h[..., 1, 1] = 2.0
        h[..., 2, 2] = 2.0
        return h

    return value, gradient, hessian, 1.2 * max(Lc, r_bulb)


def _cup(radius, dent_depth, dent_width, dent_height, dent_center):
    # Sphere of the given radius dented from the top (+z): a Gaussian bump in
    # (rho^2, z) pushes the level set inward near the axis, producing a
    # revolution body with a concave opening.
    R2 = radius * radius
    w2 = dent_width * dent_width
    h2 = dent_height * dent_height

    def _split(x):
        x = np.asarray(x, dtype=float)
        s = x[..., 0] ** 2 + x[..., 1] ** 2
        return x, s, x[..., 2]

    def _bump(s, z):
        return dent_depth * np.exp(-s / w2) * np.exp(-((z - dent_center) ** 2) / h2)

    def value(x):
        x, s, z = _split(x)
        return s + z * z - R2 + _bump(s, z)

    def gradient(x):
        x, s, z = _split(x)
        b = _bump(s, z)
        ds = 1.0 - b / w2  # d phi / d s
        dz = 2.0 * z - 2.0 * (z - dent_center) / h2 * b
        g = np.empty_like(x)
        g[..., 0] = 2.0 * x[..., 0] * ds
        g[..., 1] = 2.0 * x[..., 1] * ds
        g[..., 2] = dz
        return g

    def hessian(x):
        x, s, z = _split(x)
        b = _bump(s, z)
        bs = -b / w2  # d b / d s
        bz = -2.0 * (z - dent_center) / h2 * b
        bss = b / (w2 * w2)
        bzz = (-2.0 / h2 + 4.0 * (z - dent_center) ** 2 / (h2 * h2)) * b
        bsz = 2.0 * (z - dent_center) / (h2 * w2) * b
        ds = 1.0 + bs
        h = np.empty(x.shape[:-1] + (3, 3))
        xx, yy = x[..., 0], x[..., 1]
        h[..., 0, 0] = 2.0 * ds + 4.0 * xx * xx * bss
        h[..., 1, 1] = 2.0 * ds + 4.0 * yy * yy * bss
        h[..., 0, 1] = h[..., 1, 0] = 4.0 * xx * yy * bss
        h[..., 0, 2] = h[..., 2, 0] = 2.0 * xx * bsz
        h[..., 1, 2] = h[..., 2, 1] = 2.0 * yy * bsz
        h[..., 2, 2] = 2.0 + bzz
        return h

    return value, gradient, hessian, 1.5 * radius


_DEFAULTS = {
    "sphere": {"radius": 1.0},
    "ellipsoid": {"a": 2.0, "b": 1.0, "c": 1.0},
    "dumbbell": {"length": 2.0, "r_neck": 0.4, "r_bulb": 1.0, "cap": 1.2},
    "cup": {
        "radius": 1.0,
        "dent_depth": 1.5,
        "dent_width": 0.55,
        "dent_height": 0.55,
        "dent_center": 1.0,
    },
}


def make_surface(kind, **params):
    """Build a catalog surface: sphere, ellipsoid, dumbbell, or cup.

    Unknown kinds and non-positive shape parameters raise ValidationError.
    """
    if kind not in _DEFAULTS:
        raise ValidationError(
            f"unknown surface kind {kind!r}; choose from {sorted(_DEFAULTS)}"
        )
    merged = dict(_DEFAULTS[kind])
    for key in params:
        if key not in merged:
            raise ValidationError(f"unknown parameter {key!r} for surface {kind!r}")
    merged.update(params)
    positive = {k: v for k, v in merged.items() if k != "dent_center"}
    for key, val in positive.items():
        if not val > 0:
            raise ValidationError(f"surface parameter {key} must be positive, got {val}")

    if kind == "sphere":
        funcs = _sphere(merged["radius"])
    elif kind == "ellipsoid":
        funcs = _ellipsoid(merged["a"], merged["b"], merged["c"])
    elif kind == "dumbbell":
        if not merged["r_bulb"] >= merged["r_neck"]:
            raise ValidationError("dumbbell requires r_bulb >= r_neck")
        funcs = _dumbbell(
            merged["length"], merged["r_neck"], merged["r_bulb"], merged["cap"]
        )
    else:
        funcs = _cup(
            merged["radius"],
            merged["dent_depth"],
            merged["dent_width"],
            merged["dent_height"],
            merged["dent_center"],
        )
    value, gradient, hessian, bound = funcs
    return ImplicitSurface(kind, value, gradient, hessian, bound, merged)
