"""Linearly implicit BDF time integration of the coupled surface systems.

Each step is a short pipeline of decoupled linear SPD solves on the
extrapolated geometry.  Scheme "P1" evolves (normal, normal velocity), scheme
"P2" evolves (normal, mean curvature) with an algebraic velocity solve.

Scheme P1, per step (order q, step size tau, extrapolation ~):
  1. concentration solve   (d0 M(~x) + tau A(~x, ~u)) u = -sum_j dj M_j u_j,
     interpreting the backward difference of the mass-concentration product
     as acting on the sequence M(~x^k) u^k (matrices cached per level);
  2. discrete rate         du = (1/tau) sum_j dj u^(n-j);
  3. block solve for w = (n; V) with the solution-weighted mass matrix
     (d0 Mw(~x,~u,~V) + tau A(~x)) w = tau f(~x, ~w, ~u; du)
                                        - sum_j dj Mw w^(n-j);
  4. velocity              v = V * n  (nodewise product);
  5. positions             x = (tau v - sum_j dj x^(n-j)) / d0.

A fully discrete ordering for scheme P2 is not prescribed by the underlying
semi-discrete formulation; this implementation chooses u -> H -> algebraic
V -> n -> x, which keeps every solve linear and SPD.  The curvature solve
treats dH/dt = lap(F(u, H)) + |A|^2 F(u, H) linearly implicitly with F
linearised at the extrapolated fields, so the diffusion in H is implicit
(an explicit velocity-through-stiffness coupling is stable only for tau of
order h^2).  All solves use Jacobi-preconditioned CG.

The discrete normal field is never renormalised by default; its drift from
unit length is a diagnostic.  An optional nodewise renormalisation flag
exists for experimentation only.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import assembly
from .errors import UnsupportedConfigError, ValidationError
from .linalg import BlockVector, cg_solve
from .mesh import compute_frames
from .reference import default_quadrature


def bdf_coefficients(q):
    """BDF-q difference coefficients delta and extrapolation coefficients gamma.

    Expanded exactly in rational arithmetic from the generating polynomials
    sum_{l=1..q} (1-z)^l / l and (1 - (1-z)^q) / z, then emitted as floats.
    """
    from math import comb

    if not 1 <= q <= 5:
        raise ValidationError(f"BDF order must be in 1..5, got {q}")
    delta = [Fraction(0)] * (q + 1)
    for ell in range(1, q + 1):
        # (1/ell) (1 - z)^ell = (1/ell) sum_k C(ell, k) (-z)^k
        for k in range(ell + 1):
            delta[k] += Fraction(comb(ell, k) * (-1) ** k, ell)
    # (1 - (1 - z)^q) / z = -sum_{k>=1} C(q, k) (-1)^k z^(k-1)
    gamma = [-Fraction(comb(q, k) * (-1) ** k) for k in range(1, q + 1)]
    return (
        np.array([float(d) for d in delta]),
        np.array([float(g) for g in gamma]),
    )


@dataclass(frozen=True)
class BdfScheme:
    """Coefficients of the q-step linearly implicit BDF method."""

    q: int
    delta: np.ndarray
    gamma: np.ndarray
    tau: float

    @classmethod
    def create(cls, q, tau):
        if not tau > 0:
            raise ValidationError("step size must be positive")
        delta, gamma = bdf_coefficients(q)
        return cls(q=q, delta=delta, gamma=gamma, tau=tau)


@dataclass
class FlowState:
    """Nodal unknowns at one time level."""

    t: float
    x: np.ndarray  # (N, 3)
    v: np.ndarray  # (N, 3)
    n: np.ndarray  # (N, 3)
    V: np.ndarray  # (N,)
    u: np.ndarray  # (N,)
    H: np.ndarray | None = None  # scheme P2 only

    def copy(self):
        return FlowState(
            t=self.t,
            x=self.x.copy(), v=self.v.copy(), n=self.n.copy(),
            V=self.V.copy(), u=self.u.copy(),
            H=None if self.H is None else self.H.copy(),
        )


@dataclass
class _Level:
    """One history level: the state, its extrapolated geometry, and M(~x)."""

    state: FlowState
    x_extrap: np.ndarray
    mass: object  # SparseMatrix on the extrapolated geometry


class History:
    """Ring buffer of the q most recent levels, newest last."""

    def __init__(self, scheme, levels):
        if len(levels) != scheme.q:
            raise ValidationError(
                f"BDF-{scheme.q} needs exactly {scheme.q} starting levels"
            )
        self.scheme = scheme
        self.levels = list(levels)

    @property
    def newest(self):
        return self.levels[-1].state

    def push(self, level):
        self.levels.append(level)
        self.levels.pop(0)

    def past(self, j):
        """Level n - j for j = 1..q while computing level n."""
        return self.levels[-j]


def extrapolate(history, attr):
    """gamma-weighted combination of a state attribute over the history."""
    gamma = history.scheme.gamma
    acc = None
    for j, g in enumerate(gamma):
        val = getattr(history.past(j + 1).state, attr)
        acc = g * val if acc is None else acc + g * val
    return acc


def _bdf_rate(history, new_value, attr):
    """(1/tau) * sum_j delta_j value^(n-j), with the new value at j = 0."""
    delta = history.scheme.delta
    acc = delta[0] * new_value
    for j in range(1, len(delta)):
        acc = acc + delta[j] * getattr(history.past(j).state, attr)
    return acc / history.scheme.tau


def _solve_concentration(history, mesh, model, frames, mass, stiffness,
                         u_extrap, cg_tol):
    """Steps 1-2 common to both schemes: new u and its discrete rate."""
    scheme = history.scheme
    delta, tau = scheme.delta, scheme.tau
    if model.D_constant is not None:
        a_u = stiffness.scaled(model.D_constant)
    else:
        a_u = assembly.assemble_weighted_stiffness(
            mesh, None, u_extrap, model.D, model.D_bounds, frames=frames
        )
    system = mass.scaled(delta[0]).add(a_u, beta=tau)
    rhs = np.zeros(mesh.n_nodes)
    for j in range(1, scheme.q + 1):
        lev = history.past(j)
        rhs -= delta[j] * (lev.mass.csr @ lev.state.u)
    u_new, _ = cg_solve(system, rhs, x0=u_extrap, rel_tol=cg_tol)
    udot = _bdf_rate(history, u_new, "u")
    return u_new, udot


def _finish_positions(history, v_new):
    delta, tau = history.scheme.delta, history.scheme.tau
    acc = tau * v_new
    for j in range(1, history.scheme.q + 1):
        acc -= delta[j] * history.past(j).state.x
    return acc / delta[0]


def step_p1(history, mesh, model, cg_tol=1e-10, renormalise=False):
    """Advance the (normal, velocity) scheme by one step; updates history."""
    scheme = history.scheme
    delta, tau = scheme.delta, scheme.tau
    quad = default_quadrature(mesh.degree)

    x_ex = extrapolate(history, "x")
    u_ex = extrapolate(history, "u")
    n_ex = extrapolate(history, "n")
    V_ex = extrapolate(history, "V")

    frames = compute_frames(mesh, x_ex, quad)
    mass = assembly.assemble_mass(mesh, frames=frames)
    stiffness = assembly.assemble_stiffness(mesh, frames=frames)

    u_new, udot = _solve_concentration(
        history, mesh, model, frames, mass, stiffness, u_ex, cg_tol
    )

    w_mass = assembly.assemble_weighted_mass(
        mesh, None, u_ex, V_ex, model.dK2, frames=frames
    )
    rhs_f = assembly.assemble_f1_f2(
        mesh, None, n_ex, V_ex, u_ex, udot, model, frames=frames
    )
    acc = tau * rhs_f.data
    for j in range(1, scheme.q + 1):
        st = history.past(j).state
        wj = np.column_stack([st.n, st.V])  # (N, 4) columns n_x, n_y, n_z, V
        acc -= delta[j] * (w_mass.csr @ wj).T.ravel()
    w_rhs = BlockVector(acc, 4)

    w_system = w_mass.scaled(delta[0]).add(stiffness, beta=tau)
    w0 = BlockVector.from_blocks([n_ex[:, 0], n_ex[:, 1], n_ex[:, 2], V_ex])
    w_new, _ = cg_solve(w_system, w_rhs, x0=w0, rel_tol=cg_tol)
    blocks = w_new.blocks
    n_new = blocks[:3].T.copy()
    V_new = blocks[3].copy()
    if renormalise:
        n_new /= np.linalg.norm(n_new, axis=1, keepdims=True)

    v_new = V_new[:, None] * n_new
    x_new = _finish_positions(history, v_new)

    state = FlowState(
        t=history.newest.t + tau,
        x=x_new, v=v_new, n=n_new, V=V_new, u=u_new, H=None,
    )
    history.push(_Level(state=state, x_extrap=x_ex, mass=mass))
    return state


def step_p2(history, mesh, model, cg_tol=1e-10, renormalise=False):
    """Advance the (normal, curvature) scheme by one step; updates history."""
    scheme = history.scheme
    delta, tau = scheme.delta, scheme.tau
    quad = default_quadrature(mesh.degree)
    if history.newest.H is None:
        raise UnsupportedConfigError("scheme P2 requires H in the flow state")

    x_ex = extrapolate(history, "x")
    u_ex = extrapolate(history, "u")
    n_ex = extrapolate(history, "n")
    V_ex = extrapolate(history, "V")
    H_ex = extrapolate(history, "H")

    frames = compute_frames(mesh, x_ex, quad)
    mass = assembly.assemble_mass(mesh, frames=frames)
    stiffness = assembly.assemble_stiffness(mesh, frames=frames)

    u_new, _ = _solve_concentration(
        history, mesh, model, frames, mass, stiffness, u_ex, cg_tol
    )

    # curvature solve: dH/dt = lap(F(u, H)) + |A|^2 F(u, H) treated linearly
    # implicitly, with F linearised at the extrapolated (u, H).  This keeps
    # the diffusion in H implicit (the system d0 M + tau A_dF2 is SPD);
    # feeding the extrapolated velocity through the stiffness explicitly is
    # only conditionally stable (tau of order h^2) and fails on fine meshes.
    # The time derivative acts on H alone: the current mass matrix
    # multiplies the whole backward difference, no product rule.
    a_df2, h_load = assembly.assemble_curvature_rhs(
        mesh, None, n_ex, H_ex, u_ex, model, frames=frames
    )
    h_diff = np.zeros(mesh.n_nodes)
    for j in range(1, scheme.q + 1):
        h_diff += delta[j] * history.past(j).state.H
    rhs_h = tau * h_load - mass.csr @ h_diff
    h_system = mass.scaled(delta[0]).add(a_df2, beta=tau)
    H_new, _ = cg_solve(h_system, rhs_h, x0=H_ex, rel_tol=cg_tol)

    # algebraic velocity solve with the new u, H: M(~x) V = -Fvec(~x, u, H)
    f3 = assembly.assemble_f3(mesh, None, n_ex, H_ex, u_ex, model, frames=frames)
    fvec_new = assembly.assemble_Fvec(mesh, None, u_new, H_new, model, frames=frames)
    V_new, _ = cg_solve(mass, -fvec_new, x0=V_ex, rel_tol=cg_tol)

    # normal solve with weight 1/dF2(u_h, H_h)
    w_mass = assembly.assemble_weighted_mass(
        mesh, None, u_ex, H_ex,
        lambda u, H: 1.0 / np.asarray(model.dF2(u, H)),
        frames=frames,
    )
    acc = tau * f3.data
    for j in range(1, scheme.q + 1):
        st = history.past(j).state
        nj = st.n
        acc -= delta[j] * (w_mass.csr @ nj).T.ravel()
    n_system = w_mass.scaled(delta[0]).add(stiffness, beta=tau)
    n0 = BlockVector.from_blocks([n_ex[:, 0], n_ex[:, 1], n_ex[:, 2]])
    n_new, _ = cg_solve(n_system, BlockVector(acc, 3), x0=n0, rel_tol=cg_tol)
    n_new = n_new.blocks.T.copy()
    if renormalise:
        n_new /= np.linalg.norm(n_new, axis=1, keepdims=True)

    v_new = V_new[:, None] * n_new
    x_new = _finish_positions(history, v_new)

    state = FlowState(
        t=history.newest.t + tau,
        x=x_new, v=v_new, n=n_new, V=V_new, u=u_new, H=H_new,
    )
    history.push(_Level(state=state, x_extrap=x_ex, mass=mass))
    return state


def step(history, mesh, model, scheme_name, cg_tol=1e-10, renormalise=False):
    if scheme_name == "P1":
        return step_p1(history, mesh, model, cg_tol, renormalise)
    if scheme_name == "P2":
        return step_p2(history, mesh, model, cg_tol, renormalise)
    raise ValidationError(f"unknown scheme {scheme_name!r}")


def _level_from_state(mesh, state):
    """Startup level: the extrapolated geometry is the state's own geometry."""
    mass = assembly.assemble_mass(mesh, state.x)
    return _Level(state=state, x_extrap=state.x.copy(), mass=mass)


def substep_count(q, tau, safety=8):
    """Number of backward-Euler substeps per level in bootstrap mode 'substep'.

    Chosen as a power of two so the first-order startup error stays below the
    O(tau^q) target: tau_sub <= tau^(q-1) / (safety * (q-1)).
    """
    if q <= 1:
        return 1
    target = tau ** (q - 1) / (safety * (q - 1))
    return int(2 ** max(3, int(np.ceil(np.log2(tau / target)))))


def bootstrap(mesh, model, initial_state, q, tau, mode="substep",
              exact_states=None, scheme_name="P1", cg_tol=1e-10,
              substeps=None):
    """Produce a full BDF-q history for the first q time levels.

    mode 'exact' fills levels 0..q-1 from caller-provided exact states (a
    callable t -> FlowState); mode 'substep' runs backward Euler with a
    reduced step so the startup error does not pollute the target order.
    """
    scheme = BdfScheme.create(q, tau)
    if q == 1 or mode == "exact":
        if mode == "exact":
            if exact_states is None:
                raise UnsupportedConfigError(
                    "bootstrap mode 'exact' requires exact states"
                )
            states = [exact_states(i * tau) for i in range(q)]
        else:
            states = [initial_state]
        levels = [_level_from_state(mesh, s) for s in states]
        return History(scheme, levels)

    if mode != "substep":
        raise ValidationError(f"unknown bootstrap mode {mode!r}")
    nsub = substeps if substeps is not None else substep_count(q, tau)
    inner = History(BdfScheme.create(1, tau / nsub),
                    [_level_from_state(mesh, initial_state)])
    levels = [_level_from_state(mesh, initial_state)]
    for _ in range(q - 1):
        for _ in range(nsub):
            state = step(inner, mesh, model, scheme_name, cg_tol=cg_tol)
        levels.append(_level_from_state(mesh, state))
    return History(scheme, levels)
