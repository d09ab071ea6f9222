"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from safefem.mesh import _build_complex
from safefem.quadrature import simplex_measure


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


def random_simplex(rng, dim, scale=1.0, min_measure=2e-2):
    """Random non-degenerate simplex, vertices (dim+1, dim)."""
    while True:
        verts = rng.uniform(-scale, scale, size=(dim + 1, dim))
        if simplex_measure(verts) > min_measure * scale**dim:
            return verts


def single_cell_mesh(vertices):
    """Mesh consisting of one simplex, vertex order as given."""
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    cells = np.arange(dim + 1, dtype=np.int64)[None, :]
    return _build_complex(dim, vertices, cells)


def random_cell_mesh(rng, dim, scale=1.0):
    return single_cell_mesh(random_simplex(rng, dim, scale))
