"""Finite element matrices and nonlinear right-hand sides on the moving surface.

All operations take the mesh (fixed connectivity) and the current node
positions x.  Element loops are vectorised; element blocks are scattered into
a compressed-row pattern that is built once per mesh and shared by every
matrix, so mass, stiffness, and their solution-weighted variants have
identical sparsity.  Nonlinear coefficients are evaluated pointwise at the
quadrature nodes from finite element interpolated values, never nodally.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ModelAssumptionError, ValidationError
from .linalg import BlockVector, SparseMatrix
from .mesh import compute_frames


def _pattern(mesh):
    """CSR pattern of the element graph plus the block-to-data scatter map."""
    if mesh._pattern_cache is not None:
        return mesh._pattern_cache
    conn = mesh.elements
    n = mesh.n_nodes
    rows = np.repeat(conn, conn.shape[1], axis=1)  # (n_el, n_loc*n_loc)
    cols = np.tile(conn, (1, conn.shape[1]))
    keys = (rows.astype(np.int64) * n + cols).ravel()
    unique, positions = np.unique(keys, return_inverse=True)
    indices = (unique % n).astype(np.int32)
    urows = unique // n
    indptr = np.zeros(n + 1, dtype=np.int32)
    np.add.at(indptr, urows + 1, 1)
    indptr = np.cumsum(indptr, dtype=np.int32)
    scatter = positions.reshape(conn.shape[0], conn.shape[1], conn.shape[1])
    mesh._pattern_cache = (indptr, indices, scatter, len(unique))
    return mesh._pattern_cache


def _matrix_from_blocks(mesh, blocks):
    indptr, indices, scatter, nnz = _pattern(mesh)
    data = np.bincount(scatter.ravel(), weights=blocks.ravel(), minlength=nnz)
    csr = sp.csr_matrix((data, indices, indptr), shape=(mesh.n_nodes,) * 2)
    return SparseMatrix(csr, symmetric=True)


def _check_field(mesh, z, arity):
    z = np.asarray(z, dtype=float)
    want = (mesh.n_nodes,) if arity == 1 else (mesh.n_nodes, 3)
    if z.shape != want:
        raise ValidationError(f"nodal field of shape {z.shape}, expected {want}")
    return z


def field_at_qp(mesh, frames, z):
    """Interpolate a nodal field (scalar (N,) or vector (N,3)) at quad points."""
    ze = np.asarray(z, dtype=float)[mesh.elements]
    if ze.ndim == 2:
        return np.einsum("ql,el->eq", frames.basis, ze, optimize=True)
    return np.einsum("ql,elc->eqc", frames.basis, ze, optimize=True)


def grad_at_qp(mesh, frames, z):
    """Tangential gradient of a nodal field at quad points.

    Scalar fields give (n_el, n_qp, 3); vector fields give (n_el, n_qp, 3, 3)
    with result[..., k, c] the k-th component of the tangential gradient of
    component c (components as columns).
    """
    ze = np.asarray(z, dtype=float)[mesh.elements]
    if ze.ndim == 2:
        return np.einsum("eqlk,el->eqk", frames.grads, ze, optimize=True)
    return np.einsum("eqlk,elc->eqkc", frames.grads, ze, optimize=True)


def load_vector(mesh, frames, integrand):
    """Assemble the vector with entries integral(integrand * phi_j)."""
    vals = np.einsum("eq,ql->el", frames.wdet * integrand, frames.basis,
                     optimize=True)
    return np.bincount(
        mesh.elements.ravel(), weights=vals.ravel(), minlength=mesh.n_nodes
    )


def gradient_load_vector(mesh, frames, vector_integrand):
    """Assemble the vector with entries integral(c . grad phi_j).

    vector_integrand has shape (n_el, n_qp, 3), a tangential field at the
    quadrature points.
    """
    vals = np.einsum("eq,eqk,eqlk->el", frames.wdet, vector_integrand,
                     frames.grads, optimize=True)
    return np.bincount(
        mesh.elements.ravel(), weights=vals.ravel(), minlength=mesh.n_nodes
    )


def assemble_mass(mesh, x=None, quad=None, frames=None, coeff=None):
    """Surface mass matrix; optionally weighted by a coefficient at quad points."""
    frames = frames or compute_frames(mesh, x, quad)
    w = frames.wdet if coeff is None else frames.wdet * coeff
    blocks = np.einsum("eq,qi,qj->eij", w, frames.basis, frames.basis,
                       optimize=True)
    return _matrix_from_blocks(mesh, blocks)


def assemble_stiffness(mesh, x=None, quad=None, frames=None, coeff=None):
    """Laplace-Beltrami stiffness matrix; optional quad-point coefficient."""
    frames = frames or compute_frames(mesh, x, quad)
    w = frames.wdet if coeff is None else frames.wdet * coeff
    blocks = np.einsum("eq,eqik,eqjk->eij", w, frames.grads, frames.grads,
                       optimize=True)
    blocks = 0.5 * (blocks + blocks.swapaxes(1, 2))
    return _matrix_from_blocks(mesh, blocks)


def assemble_weighted_mass(mesh, x, u, V, weight, quad=None, frames=None):
    """Mass matrix with weight = weight(u_h, V_h) at the quadrature points.

    The weight must be positive wherever it is evaluated; otherwise a
    ModelAssumptionError reports the offending element and value.
    """
    frames = frames or compute_frames(mesh, x, quad)
    u = _check_field(mesh, u, 1)
    V = _check_field(mesh, V, 1)
    coeff = np.asarray(weight(field_at_qp(mesh, frames, u), field_at_qp(mesh, frames, V)))
    if not (coeff > 0.0).all():
        e, q = np.argwhere(~(coeff > 0.0))[0]
        raise ModelAssumptionError(
            f"non-positive mass weight {coeff[e, q]:g} in element {e} "
            "(positivity of the V-coefficient is required)"
        )
    return assemble_mass(mesh, frames=frames, coeff=coeff)


def assemble_weighted_stiffness(mesh, x, u, D, bounds, quad=None, frames=None):
    """Stiffness matrix with diffusion coefficient D(u_h) at quad points.

    bounds = (D0, D1) are the declared bounds of D; values outside them raise
    ModelAssumptionError.
    """
    frames = frames or compute_frames(mesh, x, quad)
    u = _check_field(mesh, u, 1)
    coeff = np.asarray(D(field_at_qp(mesh, frames, u)))
    D0, D1 = bounds
    tol = 1e-12 * max(abs(D0), abs(D1), 1.0)
    if coeff.min() < D0 - tol or coeff.max() > D1 + tol:
        raise ModelAssumptionError(
            f"diffusion coefficient left [{D0:g}, {D1:g}]: "
            f"range [{coeff.min():g}, {coeff.max():g}]"
        )
    return assemble_stiffness(mesh, frames=frames, coeff=coeff)


def shape_operator_sq_at_qp(mesh, frames, n, symmetrised=True):
    """|A_h|^2 at quadrature points from the discrete normal field n (N, 3).

    A_h is the symmetric part of the tangential gradient of n (columns are
    the component gradients); returns its squared Frobenius norm.  The raw
    (non-symmetrised) variant is available for experimentation.
    """
    dn = grad_at_qp(mesh, frames, n)  # (n_el, n_qp, 3, 3)
    if symmetrised:
        dn = 0.5 * (dn + np.swapaxes(dn, -1, -2))
    return np.einsum("eqkc,eqkc->eq", dn, dn, optimize=True)


def shape_operator_sq(mesh, x, n, elem, ref_point, symmetrised=True):
    """|A_h|^2 of the normal field at one reference point of one element."""
    from .mesh import element_frame

    n = _check_field(mesh, n, 3)
    frame = element_frame(mesh, elem, ref_point, x=x)
    ne = n[mesh.elements[elem]]
    dn = np.einsum("lk,lc->kc", frame.basis_gradients, ne)
    if symmetrised:
        dn = 0.5 * (dn + dn.T)
    return float((dn * dn).sum())


def assemble_f1_f2(mesh, x, n, V, u, udot, model, quad=None, frames=None,
                   symmetrised=True):
    """Nonlinear right-hand side (f1; f2) of the (normal, velocity) system.

    f1 couples |A_h|^2 nu_h and dK1 grad u_h against the basis; f2 couples
    |A_h|^2 V_h and -dK1 du/dt.  f2 is linear in udot.  Returns a 4N
    BlockVector ordered (n_x, n_y, n_z, V).
    """
    frames = frames or compute_frames(mesh, x, quad)
    n = _check_field(mesh, n, 3)
    V = _check_field(mesh, V, 1)
    u = _check_field(mesh, u, 1)
    udot = _check_field(mesh, udot, 1)

    a_sq = shape_operator_sq_at_qp(mesh, frames, n, symmetrised)
    nq = field_at_qp(mesh, frames, n)
    uq = field_at_qp(mesh, frames, u)
    Vq = field_at_qp(mesh, frames, V)
    udotq = field_at_qp(mesh, frames, udot)
    gradu = grad_at_qp(mesh, frames, u)
    dk1 = np.asarray(model.dK1(uq, Vq))

    f1 = [
        load_vector(mesh, frames, a_sq * nq[..., c] + dk1 * gradu[..., c])
        for c in range(3)
    ]
    f2 = load_vector(mesh, frames, a_sq * Vq - dk1 * udotq)
    return BlockVector.from_blocks(f1 + [f2])


def assemble_f3(mesh, x, n, H, u, model, quad=None, frames=None,
                symmetrised=True):
    """Right-hand side of the curvature-based normal system.

    Mirrors f1 with coefficient dF1/dF2 evaluated at (u_h, H_h); requires
    dF2 > 0 at every quadrature point.
    """
    frames = frames or compute_frames(mesh, x, quad)
    n = _check_field(mesh, n, 3)
    H = _check_field(mesh, H, 1)
    u = _check_field(mesh, u, 1)

    a_sq = shape_operator_sq_at_qp(mesh, frames, n, symmetrised)
    nq = field_at_qp(mesh, frames, n)
    uq = field_at_qp(mesh, frames, u)
    Hq = field_at_qp(mesh, frames, H)
    gradu = grad_at_qp(mesh, frames, u)
    df2 = np.asarray(model.dF2(uq, Hq))
    if not (df2 > 0.0).all():
        e, q = np.argwhere(~(df2 > 0.0))[0]
        raise ModelAssumptionError(
            f"dF2 = {df2[e, q]:g} in element {e}; positivity of 1/dF2 required"
        )
    ratio = np.asarray(model.dF1(uq, Hq)) / df2

    f3 = [
        load_vector(mesh, frames, a_sq * nq[..., c] + ratio * gradu[..., c])
        for c in range(3)
    ]
    return BlockVector.from_blocks(f3)


def assemble_Fvec(mesh, x, u, H, model, quad=None, frames=None):
    """Load vector with entries integral(F(u_h, H_h) phi_j)."""
    frames = frames or compute_frames(mesh, x, quad)
    H = _check_field(mesh, H, 1)
    u = _check_field(mesh, u, 1)
    uq = field_at_qp(mesh, frames, u)
    Hq = field_at_qp(mesh, frames, H)
    return load_vector(mesh, frames, np.asarray(model.F(uq, Hq)))


def assemble_curvature_rhs(mesh, x, n, H, u, model, quad=None, frames=None,
                           symmetrised=True):
    """Matrix and load of the linearised curvature equation at (u_h, H_h).

    The curvature obeys dH/dt = lap(F(u, H)) + |A|^2 F(u, H); linearising
    F about the supplied (extrapolated) fields, F ~ F0 + dF2 (H - H0), the
    stiffness part splits into an implicit piece with coefficient dF2 > 0
    and the explicit remainder dF1 grad(u_h).  Returns
    (A_dF2, load) with load_j = integral(|A_h|^2 F0 phi_j)
                             - integral(dF1 grad u_h . grad phi_j).
    """
    frames = frames or compute_frames(mesh, x, quad)
    n = _check_field(mesh, n, 3)
    H = _check_field(mesh, H, 1)
    u = _check_field(mesh, u, 1)
    uq = field_at_qp(mesh, frames, u)
    Hq = field_at_qp(mesh, frames, H)
    df2 = np.asarray(model.dF2(uq, Hq))
    if not (df2 > 0.0).all():
        e, q = np.argwhere(~(df2 > 0.0))[0]
        raise ModelAssumptionError(
            f"dF2 = {df2[e, q]:g} in element {e}; positivity of 1/dF2 required"
        )
    a_dF2 = assemble_stiffness(mesh, frames=frames, coeff=df2)
    a_sq = shape_operator_sq_at_qp(mesh, frames, n, symmetrised)
    f0 = np.asarray(model.F(uq, Hq))
    gradu = grad_at_qp(mesh, frames, u)
    df1 = np.asarray(model.dF1(uq, Hq))
    load = load_vector(mesh, frames, a_sq * f0) - gradient_load_vector(
        mesh, frames, df1[..., None] * gradu
    )
    return a_dF2, load


def assemble_f3_and_Fvec(mesh, x, n, H, u, model, quad=None, frames=None,
                         symmetrised=True):
    """Both right-hand sides of the curvature-based system at one argument set."""
    frames = frames or compute_frames(mesh, x, quad)
    f3 = assemble_f3(mesh, None, n, H, u, model, frames=frames,
                     symmetrised=symmetrised)
    return f3, assemble_Fvec(mesh, None, u, H, model, frames=frames)


@dataclass
class AssembledSystem:
    """Matrices assembled on one geometry; all share the mesh's sparsity."""

    mass: SparseMatrix
    stiffness: SparseMatrix
    weighted_mass: SparseMatrix | None = None
    weighted_stiffness: SparseMatrix | None = None
