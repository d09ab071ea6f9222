"""Simplicial complexes on the unit square and cube.

A mesh stores, for every dimension k, the list of k-subsimplices as sorted
vertex tuples, the incidence of cells to those entities, and boundary
flags.  Orientation conventions are fixed by the sorted vertex order:

* edges run from the lower to the higher vertex id (tangent ``tau``),
* a triangle face (i < j < k) in 3d carries the unit normal along
  ``(a_j - a_i) x (a_k - a_i)``,
* an edge in 2d carries the normal obtained by rotating the unit tangent
  clockwise, ``n = (tau_y, -tau_x)``,
* cells are weighted by their positive measure.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DIAG_LL_UR = "lower-left-to-upper-right"
DIAG_UL_LR = "upper-left-to-lower-right"
DIAGONALS = (DIAG_LL_UR, DIAG_UL_LR)


def local_subsimplices(n, k):
    """Index tuples of the k-subsimplices of an n-simplex (0..n), sorted."""
    return list(itertools.combinations(range(n + 1), k + 1))


@dataclass
class MeshComplex:
    """Simplicial complex with entity tables for every dimension.

    Attributes
    ----------
    dim : int
        Ambient (and cell) dimension, 2 or 3.
    vertices : (num_vertices, dim) ndarray
    simplices : dict
        Maps k to an (N_k, k+1) integer array of sorted vertex ids.
    cell_entities : dict
        Maps k to an (num_cells, n_local_k) array giving, per cell, the
        global entity id of each local k-subsimplex in the order of
        ``local_subsimplices(dim, k)``.
    boundary : dict
        Maps k to a boolean array flagging entities contained in the
        domain boundary.
    diagonal : str or None
        Diagonal convention used by the 2d builder, bookkeeping only.
    """

    dim: int
    vertices: np.ndarray
    simplices: dict = field(default_factory=dict)
    cell_entities: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    diagonal: str | None = None

    def num_entities(self, k):
        return self.simplices[k].shape[0]

    @property
    def num_cells(self):
        return self.simplices[self.dim].shape[0]

    @property
    def cells(self):
        return self.simplices[self.dim]


def _build_complex(dim, vertices, cells, diagonal=None):
    cells = np.asarray(cells, dtype=np.int64)
    cells = np.sort(cells, axis=1)
    simplices = {0: np.arange(vertices.shape[0], dtype=np.int64)[:, None]}
    cell_entities = {}
    for k in range(1, dim):
        locs = local_subsimplices(dim, k)
        raw = np.concatenate([cells[:, loc] for loc in locs], axis=0)
        uniq, inverse = np.unique(raw, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        simplices[k] = uniq
        cell_entities[k] = inverse.reshape(len(locs), cells.shape[0]).T.copy()
    simplices[dim] = cells
    cell_entities[0] = cells.copy()
    cell_entities[dim] = np.arange(cells.shape[0], dtype=np.int64)[:, None]

    # Boundary facets have exactly one adjacent cell; lower entities are
    # boundary when contained in a boundary facet.
    nfacets = simplices[dim - 1].shape[0]
    cofacets = np.zeros(nfacets, dtype=np.int64)
    np.add.at(cofacets, cell_entities[dim - 1].ravel(), 1)
    if not np.all((cofacets == 1) | (cofacets == 2)):
        raise ValueError("non-manifold facet detected")
    boundary = {dim - 1: cofacets == 1, dim: np.zeros(cells.shape[0], dtype=bool)}
    bverts = np.zeros(vertices.shape[0], dtype=bool)
    bfacets = simplices[dim - 1][boundary[dim - 1]]
    bverts[bfacets.ravel()] = True
    boundary[0] = bverts
    for k in range(1, dim - 1):
        # vertex containment is not sufficient; an entity is boundary only
        # if it is a subsimplex of some boundary facet
        on_boundary = set()
        for f in bfacets:
            on_boundary.update(itertools.combinations(f.tolist(), k + 1))
        boundary[k] = np.fromiter(
            (tuple(ent) in on_boundary for ent in simplices[k].tolist()),
            count=simplices[k].shape[0],
            dtype=bool,
        )
    return MeshComplex(
        dim=dim,
        vertices=np.asarray(vertices, dtype=float),
        simplices=simplices,
        cell_entities=cell_entities,
        boundary=boundary,
        diagonal=diagonal,
    )


def build_unit_square_mesh(n, diagonal=DIAG_LL_UR):
    """Structured triangulation of [0,1]^2 with n x n squares, two
    triangles each.

    Vertex ids are lexicographic in grid coordinates (x fastest).  The
    ``diagonal`` selector selects which square diagonal is drawn.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if diagonal not in DIAGONALS:
        raise ValueError(f"unknown diagonal {diagonal!r}")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i + (n + 1) * j

    cells = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            if diagonal == DIAG_LL_UR:
                cells.append((v00, v10, v11))
                cells.append((v00, v11, v01))
            else:
                cells.append((v00, v10, v01))
                cells.append((v10, v11, v01))
    return _build_complex(2, vertices, cells, diagonal=diagonal)


def build_unit_cube_mesh(n):
    """Kuhn triangulation of [0,1]^3: each of the n^3 subcubes is split
    into six tetrahedra sharing the main diagonal.

    Vertex ids are lexicographic in grid coordinates (x fastest).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    grid = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1)
    # id = ix + (n+1) iy + (n+1)^2 iz
    vertices = grid.transpose(2, 1, 0, 3).reshape(-1, 3)

    def vid(i, j, k):
        return i + (n + 1) * (j + (n + 1) * k)

    axes = np.eye(3, dtype=np.int64)
    cells = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                base = np.array([i, j, k])
                for perm in itertools.permutations(range(3)):
                    path = [base]
                    for ax in perm:
                        path.append(path[-1] + axes[ax])
                    cells.append(tuple(vid(*p) for p in path))
    return _build_complex(3, vertices, cells)


@dataclass
class CellGeometry:
    """Metric data of one cell.

    ``tangents`` holds the full antisymmetric table t[i, j] = a_j - a_i of
    vertex offsets; edge/face data follows the local subsimplex order.
    In 2d, ``facet_normals`` are the clockwise-rotated edge tangents; in
    3d they are the sorted-order face normals.
    """

    cell: int
    vertices: np.ndarray
    volume: float
    barycenter: np.ndarray
    lambda_grads: np.ndarray
    tangents: np.ndarray
    edge_lengths: np.ndarray
    edge_tangents: np.ndarray
    facet_measures: np.ndarray
    facet_normals: np.ndarray


def cell_geometry(mesh, cell_id):
    """Compute the CellGeometry of one cell, raising on degeneracy."""
    n = mesh.dim
    verts = mesh.vertices[mesh.cells[cell_id]]
    mat = verts[1:] - verts[0]
    det = np.linalg.det(mat)
    volume = abs(det) / math.factorial(n)
    scale = np.max(np.abs(mat)) ** n
    if volume <= 1e-14 * max(scale, 1e-300):
        raise ValueError(f"degenerate cell {cell_id}: measure {volume}")
    aug = np.hstack([np.ones((n + 1, 1)), verts])
    lambda_grads = np.linalg.inv(aug)[1:, :].T.copy()
    tangents = verts[None, :, :] - verts[:, None, :]

    edges = local_subsimplices(n, 1)
    tvec = np.array([verts[j] - verts[i] for i, j in edges])
    elen = np.linalg.norm(tvec, axis=1)
    etan = tvec / elen[:, None]

    facets = local_subsimplices(n, n - 1)
    if n == 2:
        fmeas = elen.copy()
        fnorm = np.column_stack([etan[:, 1], -etan[:, 0]])
    else:
        fmeas = np.empty(len(facets))
        fnorm = np.empty((len(facets), 3))
        for m, (i, j, k) in enumerate(facets):
            cr = np.cross(verts[j] - verts[i], verts[k] - verts[i])
            area = 0.5 * np.linalg.norm(cr)
            fmeas[m] = area
            fnorm[m] = cr / (2.0 * area)
    return CellGeometry(
        cell=cell_id,
        vertices=verts,
        volume=volume,
        barycenter=verts.mean(axis=0),
        lambda_grads=lambda_grads,
        tangents=tangents,
        edge_lengths=elen,
        edge_tangents=etan,
        facet_measures=fmeas,
        facet_normals=fnorm,
    )


def entity_vertices(mesh, k, entity_id):
    """Vertex coordinate array of a k-entity."""
    return mesh.vertices[mesh.simplices[k][entity_id]]


def save_vtk(mesh, path, cell_data=None, field_label=None):
    """Write the mesh as a legacy ASCII VTK unstructured grid.

    ``cell_data`` maps names to per-cell arrays, scalars of shape
    (num_cells,) or vectors of shape (num_cells, dim).  The count of
    boundary facets per cell is always included as cell data.
    """
    cells = mesh.cells
    verts = mesh.vertices
    bflag = mesh.boundary[mesh.dim - 1]
    bcount = bflag[mesh.cell_entities[mesh.dim - 1]].sum(axis=1)
    lines = []
    lines.append("# vtk DataFile Version 3.0")
    lines.append(field_label or "safefem mesh")
    lines.append("ASCII")
    lines.append("DATASET UNSTRUCTURED_GRID")
    lines.append(f"POINTS {verts.shape[0]} double")
    for p in verts:
        x, y = p[0], p[1]
        z = p[2] if mesh.dim == 3 else 0.0
        lines.append(f"{x:.16g} {y:.16g} {z:.16g}")
    npc = mesh.dim + 1
    lines.append(f"CELLS {cells.shape[0]} {cells.shape[0] * (npc + 1)}")
    for c in cells:
        lines.append(" ".join([str(npc)] + [str(v) for v in c]))
    lines.append(f"CELL_TYPES {cells.shape[0]}")
    ctype = 5 if mesh.dim == 2 else 10
    lines.extend([str(ctype)] * cells.shape[0])
    lines.append(f"CELL_DATA {cells.shape[0]}")
    lines.append("SCALARS boundary_facets int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(b)) for b in bcount)
    for name, data in (cell_data or {}).items():
        data = np.asarray(data)
        if data.ndim == 1:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.16g}" for v in data)
        else:
            lines.append(f"VECTORS {name} double")
            for row in data:
                x, y = row[0], row[1]
                z = row[2] if data.shape[1] == 3 else 0.0
                lines.append(f"{x:.16g} {y:.16g} {z:.16g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
