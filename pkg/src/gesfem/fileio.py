"""OFF input and legacy-VTK ASCII output.

All floats are written with 17 significant digits so coordinates round-trip
bit-exactly through the decimal text.  POLYDATA snapshots of degree-2 meshes
subdivide each curved triangle into its four corner/midpoint sub-triangles
(point data is kept for all nodes); meshgen can instead emit genuine VTK
quadratic-triangle cells in an unstructured grid.
"""

import numpy as np

from .errors import ParseError, ValidationError
from .mesh import SurfaceMesh


def _fmt(x):
    return f"{x:.17g}"


def read_off(path):
    """Read an ASCII OFF file as a degree-1 SurfaceMesh.

    Raises ParseError (with line number) on malformed input and
    ValidationError if the mesh is not closed and consistently oriented.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    lines = []  # (lineno, tokens) with comments/blanks stripped
    for i, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            lines.append((i, body.split()))

    if not lines:
        raise ParseError("empty OFF file", line=1)
    ptr = 0
    lineno, tokens = lines[ptr]
    if tokens[0] != "OFF":
        raise ParseError("missing OFF header", line=lineno)
    if len(tokens) > 1:
        counts, ptr = tokens[1:], ptr + 1
    else:
        ptr += 1
        if ptr >= len(lines):
            raise ParseError("missing count line", line=lineno)
        lineno, counts = lines[ptr]
        ptr += 1
    if len(counts) < 2:
        raise ParseError("count line needs vertex and face counts", line=lineno)
    try:
        n_verts, n_faces = int(counts[0]), int(counts[1])
    except ValueError:
        raise ParseError("counts must be integers", line=lineno) from None

    if len(lines) - ptr < n_verts + n_faces:
        raise ParseError(
            f"expected {n_verts + n_faces} data lines, found {len(lines) - ptr}",
            line=lines[-1][0],
        )
    verts = np.empty((n_verts, 3))
    for k in range(n_verts):
        lineno, tokens = lines[ptr + k]
        if len(tokens) < 3:
            raise ParseError("vertex line needs three coordinates", line=lineno)
        try:
            verts[k] = [float(t) for t in tokens[:3]]
        except ValueError:
            raise ParseError("bad vertex coordinate", line=lineno) from None
    faces = np.empty((n_faces, 3), dtype=np.int64)
    for k in range(n_faces):
        lineno, tokens = lines[ptr + n_verts + k]
        try:
            arity = int(tokens[0])
            idx = [int(t) for t in tokens[1 : 1 + arity]]
        except (ValueError, IndexError):
            raise ParseError("bad face line", line=lineno) from None
        if arity != 3 or len(idx) != 3:
            raise ParseError("only triangular faces are supported", line=lineno)
        faces[k] = idx
    return SurfaceMesh(verts, faces, degree=1)


def write_off(path, mesh):
    """Write a degree-1 mesh as ASCII OFF."""
    if mesh.degree != 1:
        raise ValidationError("OFF output supports degree-1 meshes only")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_nodes} {mesh.n_elements} 0\n")
        for p in mesh.nodes:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        for f in mesh.elements:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


_SUBTRIANGLES = np.array([[0, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]])


def _display_triangles(mesh):
    if mesh.degree == 1:
        return mesh.elements
    return mesh.elements[:, _SUBTRIANGLES].reshape(-1, 3)


def _write_point_data(fh, n, fields):
    if not fields:
        return
    fh.write(f"POINT_DATA {n}\n")
    for name, values in fields.items():
        values = np.asarray(values, dtype=float)
        if values.shape == (n,):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in values:
                fh.write(_fmt(v) + "\n")
        elif values.shape == (n, 3):
            fh.write(f"VECTORS {name} double\n")
            for v in values:
                fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        else:
            raise ValidationError(
                f"field {name!r} has shape {values.shape}; expected ({n},) or ({n}, 3)"
            )


def write_vtk(path, mesh, fields=None, x=None, title="gesfem surface"):
    """Legacy ASCII VTK POLYDATA with named POINT_DATA scalars/vectors."""
    x = mesh.nodes if x is None else np.asarray(x, dtype=float)
    tris = _display_triangles(mesh)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(x)} double\n")
        for p in x:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"POLYGONS {len(tris)} {4 * len(tris)}\n")
        for t in tris:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")
        _write_point_data(fh, len(x), fields or {})


def write_vtk_quadratic(path, mesh, fields=None, x=None, title="gesfem surface"):
    """Legacy ASCII VTK unstructured grid with quadratic-triangle cells."""
    if mesh.degree != 2:
        raise ValidationError("quadratic VTK output requires a degree-2 mesh")
    x = mesh.nodes if x is None else np.asarray(x, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(title + "\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(x)} double\n")
        for p in x:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"CELLS {mesh.n_elements} {7 * mesh.n_elements}\n")
        for e in mesh.elements:
            fh.write("6 " + " ".join(str(i) for i in e) + "\n")
        fh.write(f"CELL_TYPES {mesh.n_elements}\n")
        fh.write("22\n" * mesh.n_elements)
        _write_point_data(fh, len(x), fields or {})
