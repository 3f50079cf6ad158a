"""Exact radial reference solution, discrete error norms, EOC, and monitors.

The radial family starts from a sphere of radius R0 with constant
concentration u0 under the gradient-flow model with exponent alpha.  The
radius obeys dR/dt = -b R^(alpha m - 1) with b = m (1 + alpha) (u0 R0^m)^(-alpha),
giving R(t) = (R0^(2 - alpha m) - t b (2 - alpha m))^(1/(2 - alpha m)); the
concentration follows from mass conservation, u(t) R(t)^m = u0 R0^m.  For
alpha m = 2 the power formula degenerates to exponential decay.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import assembly
from .errors import UnsupportedConfigError, ValidationError
from .linalg import dot_norm
from .mesh import compute_frames
from .stepper import FlowState


@dataclass(frozen=True)
class RadialSolution:
    """Closed-form sphere solution R(t), u(t), V(t), H(t)."""

    R0: float
    u0: float
    alpha: float
    m: int = 2

    def __post_init__(self):
        if not (self.R0 > 0 and self.u0 > 0):
            raise ValidationError("R0 and u0 must be positive")

    @property
    def b(self):
        return self.m * (1.0 + self.alpha) * (self.u0 * self.R0**self.m) ** (-self.alpha)

    @property
    def exponent(self):
        return 2.0 - self.alpha * self.m

    @property
    def t_max(self):
        """Extinction time; inf when the sphere exists for all times."""
        p = self.exponent
        if p > 0:
            return self.R0**p / (self.b * p)
        return np.inf

    def _check_time(self, t):
        if np.any(np.asarray(t) < 0) or np.any(np.asarray(t) >= self.t_max):
            raise ValidationError(
                f"time outside the existence interval [0, {self.t_max:g})"
            )

    def R(self, t):
        self._check_time(t)
        p = self.exponent
        if p == 0:
            return self.R0 * np.exp(-self.b * np.asarray(t, dtype=float))
        return (self.R0**p - np.asarray(t, dtype=float) * self.b * p) ** (1.0 / p)

    def u(self, t):
        return self.u0 * (self.R0 / self.R(t)) ** self.m

    def V(self, t):
        """dR/dt = -b R^(alpha m - 1)."""
        return -self.b * self.R(t) ** (self.alpha * self.m - 1.0)

    def H(self, t):
        return self.m / self.R(t)


def radial_eval(sol, t):
    """(R, u, V, H) of the radial solution at time t."""
    return sol.R(t), sol.u(t), sol.V(t), sol.H(t)


def radial_state(sol, mesh, t):
    """Exact nodal state at time t: the flow map scales positions radially."""
    scale = sol.R(t) / sol.R0
    x = scale * mesh.nodes
    n = mesh.nodes / np.linalg.norm(mesh.nodes, axis=1, keepdims=True)
    V = np.full(mesh.n_nodes, sol.V(t))
    u = np.full(mesh.n_nodes, sol.u(t))
    H = np.full(mesh.n_nodes, sol.H(t))
    return FlowState(t=t, x=x, v=V[:, None] * n, n=n, V=V, u=u, H=H)


def error_norms(state, sol, mesh):
    """Per-variable H^1-type errors against the interpolated exact solution.

    Builds the exact nodal vectors at state.t, assembles M and A on the
    interpolated-exact geometry, and returns ||e||_K = sqrt(e^T (M + A) e)
    for each of x, v, n, V, u (and H if the state carries it).
    """
    if sol is None:
        raise UnsupportedConfigError("error norms require a radial configuration")
    exact = radial_state(sol, mesh, state.t)
    frames = compute_frames(mesh, exact.x)
    mass = assembly.assemble_mass(mesh, frames=frames)
    stiff = assembly.assemble_stiffness(mesh, frames=frames)

    def knorm(e):
        if e.ndim == 1:
            return np.sqrt(dot_norm(e, e, mass) + dot_norm(e, e, stiff))
        total = 0.0
        for c in range(e.shape[1]):
            total += dot_norm(e[:, c], e[:, c], mass)
            total += dot_norm(e[:, c], e[:, c], stiff)
        return np.sqrt(total)

    errors = {
        "x": knorm(state.x - exact.x),
        "v": knorm(state.v - exact.v),
        "n": knorm(state.n - exact.n),
        "V": knorm(state.V - exact.V),
        "u": knorm(state.u - exact.u),
    }
    if state.H is not None:
        errors["H"] = knorm(state.H - exact.H)
    return errors


def eoc(errors, steps):
    """Empirical orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}).

    Pairs involving a zero error are excluded (with a warning) and reported
    as nan.
    """
    errors = np.asarray(errors, dtype=float)
    steps = np.asarray(steps, dtype=float)
    if len(errors) != len(steps) or len(errors) < 2:
        raise ValidationError("need matching lists with at least two entries")
    if (steps <= 0).any():
        raise ValidationError("step/mesh sizes must be positive")
    orders = []
    for i in range(len(errors) - 1):
        if errors[i] == 0.0 or errors[i + 1] == 0.0:
            warnings.warn("zero error entry excluded from EOC", stacklevel=2)
            orders.append(np.nan)
        else:
            orders.append(
                float(np.log(errors[i] / errors[i + 1])
                      / np.log(steps[i] / steps[i + 1]))
            )
    return orders


@dataclass(frozen=True)
class MonitorRow:
    """One row of the qualitative-property monitor."""

    t: float
    mass: float
    energy: float
    u_min: float
    u_max: float
    H_min: float
    area: float
    nu_min: float
    nu_max: float

    HEADER = "t,mass,energy,u_min,u_max,H_min,area,nu_min,nu_max"

    def as_csv(self):
        vals = (
            self.t, self.mass, self.energy, self.u_min, self.u_max,
            self.H_min, self.area, self.nu_min, self.nu_max,
        )
        return ",".join(f"{v:.17g}" for v in vals)


def monitor(state, mesh, model):
    """Mass, energy, extrema, curvature minimum, area, and normal-length range.

    Mass is 1^T M(x) u and the energy the quadrature of G(u_h).  Without a
    stored curvature the row uses the nodewise proxy H = -K(u, V), the same
    inversion the velocity law provides.
    """
    frames = compute_frames(mesh, state.x)
    mass_matrix = assembly.assemble_mass(mesh, frames=frames)
    ones = np.ones(mesh.n_nodes)
    mass = dot_norm(ones, state.u, mass_matrix)
    area = dot_norm(ones, ones, mass_matrix)
    uq = assembly.field_at_qp(mesh, frames, state.u)
    energy = float((frames.wdet * np.asarray(model.G(uq))).sum())
    if state.H is not None:
        h_min = float(state.H.min())
    else:
        h_min = float(np.min(-np.asarray(model.K(state.u, state.V))))
    nu_len = np.linalg.norm(state.n, axis=1)
    return MonitorRow(
        t=state.t,
        mass=float(mass),
        energy=energy,
        u_min=float(state.u.min()),
        u_max=float(state.u.max()),
        H_min=h_min,
        area=float(area),
        nu_min=float(nu_len.min()),
        nu_max=float(nu_len.max()),
    )


def mean_radius(state):
    """Mean nodal distance from the origin; a radius diagnostic, not a norm."""
    return float(np.linalg.norm(state.x, axis=1).mean())
