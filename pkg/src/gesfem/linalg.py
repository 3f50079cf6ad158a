"""Sparse symmetric matrices, block-Kronecker products, and a Jacobi-PCG solver.

Storage and matrix-vector products are delegated to scipy's CSR format; the
conjugate gradient solver is implemented here so the termination criterion
(relative true residual) and determinism are under our control.  Kronecker
block operators I_d (x) A are never materialised: block vectors are applied
blockwise.
"""

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, PreconditionerError, ValidationError


class SparseMatrix:
    """Compressed-row square matrix with an optional symmetry flag."""

    __slots__ = ("_csr", "symmetric")

    def __init__(self, csr, symmetric=False, check_symmetry=False):
        if csr.shape[0] != csr.shape[1]:
            raise ValidationError("SparseMatrix must be square")
        self._csr = csr
        self.symmetric = symmetric
        if symmetric and check_symmetry:
            skew = abs(csr - csr.T)
            scale = max(abs(csr).max(), 1e-300)
            if skew.count_nonzero() and skew.max() > 1e-14 * scale:
                raise ValidationError(
                    f"matrix flagged symmetric but |A - A^T| = {skew.max():.3e}"
                )

    @property
    def n(self):
        return self._csr.shape[0]

    @property
    def row_offsets(self):
        return self._csr.indptr

    @property
    def column_indices(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    @property
    def csr(self):
        return self._csr

    def diagonal(self):
        return self._csr.diagonal()

    def toarray(self):
        return self._csr.toarray()

    def scaled(self, factor):
        return SparseMatrix(self._csr * factor, symmetric=self.symmetric)

    def add(self, other, beta=1.0):
        """self + beta * other (patterns may differ)."""
        return SparseMatrix(
            self._csr + beta * other._csr,
            symmetric=self.symmetric and other.symmetric,
        )

    def __matmul__(self, z):
        return spmv(self, z)


class BlockVector:
    """d stacked blocks of length n, block-major in one flat array."""

    __slots__ = ("data", "d", "n")

    def __init__(self, data, d):
        data = np.asarray(data, dtype=float)
        if data.size % d:
            raise ValidationError(f"flat length {data.size} not divisible by d={d}")
        self.data = data.reshape(-1)
        self.d = d
        self.n = data.size // d

    @classmethod
    def from_blocks(cls, blocks):
        blocks = [np.asarray(b, dtype=float).reshape(-1) for b in blocks]
        return cls(np.concatenate(blocks), len(blocks))

    @property
    def blocks(self):
        return self.data.reshape(self.d, self.n)

    def block(self, i):
        return self.blocks[i]

    def copy(self):
        return BlockVector(self.data.copy(), self.d)


def from_triplets(n, triplets, symmetric=False):
    """Build an n x n SparseMatrix from (i, j, value) triplets.

    Duplicates are summed.  The summation order is canonicalised (sorted by
    row, column, then value), so permuting the triplet list yields a
    bit-identical matrix.
    """
    if len(triplets):
        rows, cols, vals = zip(*triplets)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    if len(rows) and (
        rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n
    ):
        raise ValidationError("triplet index out of range")
    order = np.lexsort((vals, cols, rows))
    coo = sp.coo_matrix(
        (vals[order].astype(float), (rows[order], cols[order])), shape=(n, n)
    )
    csr = coo.tocsr()
    csr.sum_duplicates()
    return SparseMatrix(csr, symmetric=symmetric, check_symmetry=symmetric)


def _as_columns(a, z):
    """View a vector or BlockVector as an (n, d) column stack."""
    if isinstance(z, BlockVector):
        if z.n != a.n:
            raise ValidationError(f"block length {z.n} does not match matrix {a.n}")
        return z.blocks.T, z.d
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size != a.n:
        raise ValidationError(f"vector of length {z.size} incompatible with {a.n}")
    return z[:, None], None


def spmv(a, z):
    """Apply A, or blockwise I_d (x) A for a BlockVector argument."""
    cols, d = _as_columns(a, z)
    out = a.csr @ cols
    if d is None:
        return out[:, 0]
    return BlockVector(out.T.copy(), d)


def dot_norm(z, w, a):
    """Bilinear form z^T A w; a (semi-)norm squared when z is w."""
    zc, zd = _as_columns(a, z)
    wc, wd = _as_columns(a, w)
    if zc.shape != wc.shape:
        raise ValidationError("dot_norm arguments have mismatched block structure")
    return float(np.sum(zc * (a.csr @ wc)))


def k_norm(z, mass, stiffness):
    """Discrete H^1-type norm: sqrt(z^T (M + A) z)."""
    return np.sqrt(max(dot_norm(z, z, mass) + dot_norm(z, z, stiffness), 0.0))


def cg_solve(a, b, x0=None, rel_tol=1e-10, max_iter=None):
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Accepts plain vectors or BlockVectors (solved against I_d (x) A).
    Returns (x, iterations) with ||b - A x||_2 <= rel_tol * ||b||_2, raising
    ConvergenceError (with the final residual attached) on failure.
    """
    if not a.symmetric:
        raise ValidationError("cg_solve requires a matrix flagged symmetric")
    if not 0.0 < rel_tol < 1.0:
        raise ValidationError("rel_tol must lie in (0, 1)")
    bc, d = _as_columns(a, b)
    bc = bc.astype(float, copy=True)

    diag = a.diagonal()
    if (diag == 0.0).any():
        raise PreconditionerError("zero diagonal entry; Jacobi preconditioner undefined")
    inv_diag = (1.0 / diag)[:, None]

    if max_iter is None:
        max_iter = 10 * a.n

    def pack(cols):
        if d is None:
            return cols[:, 0].copy()
        return BlockVector(cols.T.copy(), d)

    b_norm = np.sqrt(np.sum(bc * bc))
    if b_norm == 0.0:
        return pack(np.zeros_like(bc)), 0

    if x0 is None:
        x = np.zeros_like(bc)
        r = bc.copy()
    else:
        x = _as_columns(a, x0)[0].astype(float, copy=True)
        r = bc - a.csr @ x
    z = inv_diag * r
    p = z.copy()
    rz = np.sum(r * z)
    tol = rel_tol * b_norm

    for it in range(1, max_iter + 1):
        ap = a.csr @ p
        pap = np.sum(p * ap)
        if pap <= 0.0:
            raise ConvergenceError(
                "matrix is not positive definite along a search direction",
                residual=float(np.sqrt(np.sum(r * r))),
                iterations=it,
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = np.sqrt(np.sum(r * r))
        if res <= tol:
            # guard against recurrence drift: confirm the true residual
            true_r = bc - a.csr @ x
            res = np.sqrt(np.sum(true_r * true_r))
            if res <= tol:
                return pack(x), it
            r = true_r
        z = inv_diag * r
        rz_new = np.sum(r * z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    raise ConvergenceError(
        f"CG did not reach rel_tol={rel_tol:g} in {max_iter} iterations",
        residual=float(np.sqrt(np.sum(r * r)) / b_norm),
        iterations=max_iter,
    )
