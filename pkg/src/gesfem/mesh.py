"""Closed triangulated surfaces with flat (degree-1) or curved (degree-2) elements.

A SurfaceMesh stores labelled connectivity plus reference node positions.
Connectivity never changes during an evolution; geometry operations take the
current node-position array separately, so one mesh object serves the whole
run and is safe to share read-only.
"""

import numpy as np

from .errors import GeometryError, ResourceError, ValidationError
from .reference import ReferenceElement, default_quadrature

# Icosahedron with golden-ratio coordinates; faces consistently oriented
# outward (checked at construction time).
_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1.0, _PHI, 0.0],
        [1.0, _PHI, 0.0],
        [-1.0, -_PHI, 0.0],
        [1.0, -_PHI, 0.0],
        [0.0, -1.0, _PHI],
        [0.0, 1.0, _PHI],
        [0.0, -1.0, -_PHI],
        [0.0, 1.0, -_PHI],
        [_PHI, 0.0, -1.0],
        [_PHI, 0.0, 1.0],
        [-_PHI, 0.0, -1.0],
        [-_PHI, 0.0, 1.0],
    ]
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [5, 4, 9], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


class SurfaceMesh:
    """Nodes and curved-triangle connectivity of a closed orientable surface."""

    def __init__(self, nodes, elements, degree=1, validate=True):
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.elements = np.ascontiguousarray(elements, dtype=np.int64)
        self.degree = int(degree)
        self.reference = ReferenceElement(self.degree)
        self._pattern_cache = None
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise ValidationError("nodes must be an (N, 3) array")
        n_loc = 3 if degree == 1 else 6
        if self.elements.ndim != 2 or self.elements.shape[1] != n_loc:
            raise ValidationError(
                f"elements must be (M, {n_loc}) for degree {degree}"
            )
        if validate:
            self.validate_topology()

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.elements)

    def validate_topology(self):
        """Check node coverage, closedness, and consistent orientation."""
        els = self.elements
        if els.min(initial=0) < 0 or els.max(initial=-1) >= self.n_nodes:
            raise ValidationError("element references a node out of range")
        used = np.zeros(self.n_nodes, dtype=bool)
        used[els.ravel()] = True
        if not used.all():
            raise ValidationError(
                f"{np.count_nonzero(~used)} node(s) not referenced by any element"
            )
        corners = els[:, :3]
        directed = np.concatenate(
            [corners[:, [0, 1]], corners[:, [1, 2]], corners[:, [2, 0]]]
        )
        seen = set()
        for a, b in map(tuple, directed):
            if (a, b) in seen:
                raise ValidationError(
                    f"edge ({a},{b}) traversed twice in the same direction; "
                    "mesh is not consistently oriented"
                )
            seen.add((a, b))
        for a, b in seen:
            if (b, a) not in seen:
                raise ValidationError(
                    f"boundary edge ({a},{b}); mesh is not closed"
                )

    def edge_lengths(self, x=None):
        x = self.nodes if x is None else x
        corners = self.elements[:, :3]
        p = x[corners]
        e = np.stack(
            [p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1
        )
        return np.linalg.norm(e, axis=2)

    def mesh_size(self, x=None):
        """Maximal element diameter (longest corner edge)."""
        return float(self.edge_lengths(x).max())


def icosphere(level, radius=1.0, jiggle=0.0, seed=0):
    """Sphere mesh from `level` icosahedron subdivisions; flat triangles.

    Produces 20*4^level faces and 10*4^level + 2 vertices, all at distance
    `radius` from the origin.  Deterministic for a given argument tuple.

    With jiggle > 0 every vertex is displaced tangentially by a seeded
    pseudo-random fraction of the local edge length and reprojected onto the
    sphere.  Convergence studies use this to break the icosahedral symmetry:
    on the fully symmetric mesh family, radially symmetric solutions
    superconverge beyond the generic order of the method.
    """
    if level < 0:
        raise ValidationError("subdivision level must be non-negative")
    if level > 7:
        raise ResourceError(f"icosphere level {level} exceeds the guard (7)")
    if not radius > 0:
        raise ValidationError("radius must be positive")
    if not 0.0 <= jiggle < 0.5:
        raise ValidationError("jiggle must lie in [0, 0.5)")

    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS[0])
    faces = _ICO_FACES.copy()
    for _ in range(level):
        verts_list = list(verts)
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            idx = midpoint.get(key)
            if idx is None:
                p = verts_list[a] + verts_list[b]
                verts_list.append(p / np.linalg.norm(p))
                idx = len(verts_list) - 1
                midpoint[key] = idx
            return idx

        new_faces = np.empty((4 * len(faces), 3), dtype=np.int64)
        for i, (a, b, c) in enumerate(faces):
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces[4 * i : 4 * i + 4] = [
                (a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca),
            ]
        verts = np.array(verts_list)
        faces = new_faces

    if jiggle > 0.0:
        mesh = SurfaceMesh(verts, faces, degree=1)
        h_local = np.full(len(verts), np.inf)
        lengths = mesh.edge_lengths()
        for k, (i, j) in enumerate([(0, 1), (1, 2), (2, 0)]):
            np.minimum.at(h_local, faces[:, i], lengths[:, k])
            np.minimum.at(h_local, faces[:, j], lengths[:, k])
        rng = np.random.default_rng(seed)
        shift = rng.uniform(-1.0, 1.0, verts.shape)
        shift -= (shift * verts).sum(axis=1, keepdims=True) * verts  # tangential
        norms = np.linalg.norm(shift, axis=1, keepdims=True)
        shift = shift / np.maximum(norms, 1e-30) * (jiggle * h_local[:, None])
        verts = verts + shift
        verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    return SurfaceMesh(radius * verts, faces, degree=1)


def project_to_surface(mesh, surface):
    """Move every node of a degree-1 mesh onto {phi = 0} along rays from 0."""
    nodes = np.array([surface.project_along_ray(p) for p in mesh.nodes])
    return SurfaceMesh(nodes, mesh.elements, degree=1)


def promote_to_quadratic(mesh, surface, tol=1e-10):
    """Curved 6-node elements: edge midpoints projected onto the surface.

    Midpoints of straight edges are moved onto {phi = 0} along grad(phi)
    (Newton, tolerance 1e-12).  Corner nodes must already lie on the surface.
    """
    if mesh.degree != 1:
        raise ValidationError("promote_to_quadratic expects a degree-1 mesh")
    # first-order distance estimate |phi| / |grad phi|, relative to the size
    grad_norm = np.linalg.norm(surface.gradient(mesh.nodes), axis=1)
    resid = np.abs(surface.value(mesh.nodes)) / np.maximum(grad_norm, 1e-300)
    limit = tol * max(1.0, surface.bounding_radius)
    if resid.max() > limit:
        worst = int(resid.argmax())
        raise GeometryError(
            f"vertex {worst} is off the surface (distance ~ {resid.max():.3e})"
        )

    nodes = list(mesh.nodes)
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        idx = midpoint.get(key)
        if idx is None:
            p = 0.5 * (mesh.nodes[a] + mesh.nodes[b])
            try:
                p = surface.project_along_gradient(p, tol=1e-12, max_iter=50)
            except GeometryError as err:
                raise GeometryError(
                    f"midpoint projection failed on edge ({a},{b}): {err}"
                ) from err
            nodes.append(p)
            idx = len(nodes) - 1
            midpoint[key] = idx
        return idx

    elements = np.empty((mesh.n_elements, 6), dtype=np.int64)
    for i, (a, b, c) in enumerate(mesh.elements):
        elements[i] = (a, b, c, mid(a, b), mid(b, c), mid(c, a))
    return SurfaceMesh(np.array(nodes), elements, degree=2)


class Frames:
    """Per-element, per-point geometry of a nodal configuration.

    basis:    (n_qp, n_loc) shape values at the reference points
    grads:    (n_el, n_qp, n_loc, 3) tangential gradients of the basis
    wdet:     (n_el, n_qp) quadrature weight times area element
    normals:  (n_el, n_qp, 3) oriented unit normals
    """

    __slots__ = ("basis", "grads", "wdet", "normals", "quad")

    def __init__(self, basis, grads, wdet, normals, quad):
        self.basis = basis
        self.grads = grads
        self.wdet = wdet
        self.normals = normals
        self.quad = quad


def compute_frames(mesh, x=None, quad=None):
    """Evaluate geometry maps of all elements at quadrature points.

    x is the current node-position array (defaults to mesh.nodes).  Raises
    GeometryError if any element is degenerate (rank-deficient Jacobian).
    """
    x = mesh.nodes if x is None else np.asarray(x, dtype=float)
    quad = default_quadrature(mesh.degree) if quad is None else quad
    ref = mesh.reference
    basis = ref.shape_values(quad.points)  # (n_qp, n_loc)
    dbasis = ref.shape_gradients(quad.points)  # (n_qp, n_loc, 2)
    xe = x[mesh.elements]  # (n_el, n_loc, 3)

    jac = np.einsum("qld,elk->eqdk", dbasis, xe, optimize=True)  # (n_el, n_qp, 2, 3)
    cross = np.cross(jac[..., 0, :], jac[..., 1, :])
    sqrt_det = np.linalg.norm(cross, axis=-1)
    if not (sqrt_det > 1e-14).all():
        bad = int(np.argwhere(~(sqrt_det > 1e-14))[0, 0])
        raise GeometryError(f"degenerate geometry in element {bad}")
    normals = cross / sqrt_det[..., None]

    g11 = np.einsum("eqk,eqk->eq", jac[..., 0, :], jac[..., 0, :])
    g12 = np.einsum("eqk,eqk->eq", jac[..., 0, :], jac[..., 1, :])
    g22 = np.einsum("eqk,eqk->eq", jac[..., 1, :], jac[..., 1, :])
    det = g11 * g22 - g12 * g12
    inv = np.empty(jac.shape[:2] + (2, 2))
    inv[..., 0, 0] = g22 / det
    inv[..., 1, 1] = g11 / det
    inv[..., 0, 1] = inv[..., 1, 0] = -g12 / det

    # tangential gradient of basis function l: J^T g^{-1} dN_l
    grads = np.einsum("qld,eqdc,eqck->eqlk", dbasis, inv, jac, optimize=True)
    wdet = quad.weights[None, :] * sqrt_det
    return Frames(basis, grads, wdet, normals, quad)


class ElementFrame:
    """Geometry map of one element at one reference point."""

    __slots__ = (
        "position", "tangents", "normal", "area_element",
        "basis_values", "basis_gradients",
    )

    def __init__(self, position, tangents, normal, area_element, basis_values,
                 basis_gradients):
        self.position = position
        self.tangents = tangents
        self.normal = normal
        self.area_element = area_element
        self.basis_values = basis_values
        self.basis_gradients = basis_gradients


def element_frame(mesh, elem, ref_point, x=None):
    """Evaluate position, tangents, normal, area element, and basis gradients."""
    x = mesh.nodes if x is None else np.asarray(x, dtype=float)
    ref_point = np.asarray(ref_point, dtype=float)
    xi, eta = ref_point
    if xi < -1e-12 or eta < -1e-12 or xi + eta > 1.0 + 1e-12:
        raise ValidationError(f"reference point {ref_point} outside the triangle")
    ref = mesh.reference
    vals = ref.shape_values(ref_point[None, :])[0]
    dvals = ref.shape_gradients(ref_point[None, :])[0]
    xe = x[mesh.elements[elem]]
    jac = dvals.T @ xe  # (2, 3)
    cross = np.cross(jac[0], jac[1])
    sqrt_det = np.linalg.norm(cross)
    if not sqrt_det > 1e-14:
        raise GeometryError(f"degenerate geometry in element {elem}")
    g = jac @ jac.T
    grads = dvals @ np.linalg.solve(g, jac)  # (n_loc, 3)
    return ElementFrame(
        position=vals @ xe,
        tangents=jac,
        normal=cross / sqrt_det,
        area_element=sqrt_det,
        basis_values=vals,
        basis_gradients=grads,
    )


def surface_area(mesh, x=None, quad=None):
    """Quadrature area of the discrete surface at positions x."""
    return float(compute_frames(mesh, x, quad).wdet.sum())
