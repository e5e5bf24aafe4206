"""Convection-diffusion benchmark generator on the unit cube.

Centered 7-point finite differences for

    u_t = Laplace(u) - 10 x u_x - 1000 y u_y - 10 u_z

on (0, 1)^3 with homogeneous Dirichlet boundary, uniform spacing
h = 1/(g+1), and the variable convection coefficients frozen at the grid
coordinates. B and C are filled with i.i.d. uniform(-1, 1) entries from a
seeded PCG64 generator, so a (grid, p, m, seed) tuple reproduces the
problem exactly.
"""

import numpy as np
import scipy.sparse as sps

from .problem import RiccatiProblem


def _second_difference(g, h):
    return sps.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(g, g)) / (h * h)


def _first_difference(g, h):
    return sps.diags([-1.0, 1.0], [-1, 1], shape=(g, g)) / (2.0 * h)


def cube_operator(grid):
    """Sparse n x n convection-diffusion stencil with n = grid**3.

    Assembled as the Kronecker sum of one-dimensional operators; the x
    index runs fastest.
    """
    if grid < 2:
        raise ValueError(f"grid must be at least 2, got {grid}")
    g = int(grid)
    h = 1.0 / (g + 1)
    nodes = h * np.arange(1, g + 1)
    d2 = _second_difference(g, h)
    d1 = _first_difference(g, h)
    lx = d2 - sps.diags(10.0 * nodes) @ d1
    ly = d2 - sps.diags(1000.0 * nodes) @ d1
    lz = d2 - 10.0 * d1
    eye = sps.identity(g, format="csr")
    a = (
        sps.kron(eye, sps.kron(eye, lx))
        + sps.kron(eye, sps.kron(ly, eye))
        + sps.kron(lz, sps.kron(eye, eye))
    )
    return a.tocsr()


def generate_cube(grid, p=1, m=1, seed=None):
    """Riccati benchmark problem on a grid**3 cube.

    ``seed`` is mandatory because B and C are random; the same seed yields
    an identical problem.
    """
    if seed is None:
        raise ValueError("seed is required: B and C are generated at random")
    a = cube_operator(grid)
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    b = rng.uniform(-1.0, 1.0, size=(n, m))
    c = rng.uniform(-1.0, 1.0, size=(p, n))
    return RiccatiProblem(a, b, c)
