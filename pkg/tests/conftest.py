"""Shared fixtures: reference instances and cached Galerkin solves."""

import numpy as np
import pytest

from volcap import (
    MatrixFunction,
    QuadraticFormSpec,
    SubspaceSelector,
    SymplecticForm,
    solve,
)


def triangular_pair(xi1=(1.0,), xi2=(1.0,), xi3=(0.0,), breakpoints=()):
    """Upper-triangular 2x2 instance [[xi1, xi3], [0, xi2]] (n = 1, k = 2).

    Its kernel matrix is [[0, -xi1 xi2], [xi1 xi2, 0]] and the first-order
    leading coefficient is int |xi1 xi2| dt.
    """
    return MatrixFunction.from_entries(
        [[xi1, xi3], [(0.0,), xi2]], breakpoints=breakpoints)


def ramp_instance():
    """Z = [[t], [1]]: first order vanishes, second order is the constant 1."""
    return MatrixFunction.from_entries([[(0.0, 1.0)], [(1.0,)]])


def order3_instance():
    """6x2 instance with A_1 == A_2 == 0 and constant nonzero A_3.

    Columns z1 = e5 + t e4 + t^2 e6 and z2 = -e3/2 + t e1 - t^2 e2 / 2 pair
    only through their first derivatives, giving decay exponent 3 with
    leading coefficient 1.
    """
    rows = [
        [(0.0,), (0.0, 1.0)],
        [(0.0,), (0.0, 0.0, -0.5)],
        [(0.0,), (-0.5,)],
        [(0.0, 1.0), (0.0,)],
        [(1.0,), (0.0,)],
        [(0.0, 0.0, 1.0), (0.0,)],
    ]
    return MatrixFunction.from_entries(rows)


def vertical_spec(Z, H=None, sign=1):
    """QuadraticFormSpec restricted to the vertical Lagrangian subspace."""
    return QuadraticFormSpec(
        Z=Z, form=SymplecticForm(dim=Z.rows), H=H,
        constraint=SubspaceSelector.lagrangian_vertical(Z),
        volterra_sign=sign)


def random_poly_matrix(rng, rows, cols, degree, scale=1.0, breakpoints=()):
    entries = [[tuple(scale * rng.uniform(-1.0, 1.0, degree + 1))
                for _ in range(cols)] for _ in range(rows)]
    return MatrixFunction.from_entries(entries, breakpoints=breakpoints)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def spectra_cache():
    """Memoized solve(spec, N) keyed by instance name, for expensive cases."""
    builders = {
        "const": lambda: vertical_spec(triangular_pair()),
        "ramp": lambda: vertical_spec(ramp_instance()),
        "order3": lambda: vertical_spec(order3_instance()),
        "tilted": lambda: vertical_spec(triangular_pair(xi1=(1.0, 0.25))),
    }
    cache = {}

    def get(name, N):
        key = (name, N)
        if key not in cache:
            cache[key] = solve(builders[name](), N)
        return cache[key]

    return get
