"""Shared lattice fixtures: the intersection data used across the suite."""

from fractions import Fraction as F

import pytest

from deltaflag.lattice import Lattice


@pytest.fixture(scope="session")
def blowup_p3():
    """Rank-2 threefold lattice of the blown-up projective space."""
    return Lattice(
        "X",
        ["H", "E"],
        3,
        {
            ("H", "H", "H"): 1,
            ("H", "H", "E"): 0,
            ("H", "E", "E"): -6,
            ("E", "E", "E"): -30,
        },
    )


@pytest.fixture(scope="session")
def quadric_surface():
    """Smooth quadric, rank 2, two rulings."""
    return Lattice(
        "Q",
        ["l1", "l2"],
        2,
        {("l1", "l1"): 0, ("l1", "l2"): 1, ("l2", "l2"): 0},
    )


@pytest.fixture(scope="session")
def vertex_blowup():
    """Rank-3 lattice after blowing up the cone vertex."""
    return Lattice(
        "Xhat",
        ["Qh", "G", "Eh"],
        3,
        {
            ("Qh", "Qh", "Qh"): -6,
            ("Qh", "Qh", "G"): 4,
            ("Qh", "Qh", "Eh"): -6,
            ("Qh", "G", "G"): -2,
            ("Qh", "G", "Eh"): 0,
            ("Qh", "Eh", "Eh"): 18,
            ("G", "G", "G"): 1,
            ("G", "G", "Eh"): 0,
            ("G", "Eh", "Eh"): 0,
            ("Eh", "Eh", "Eh"): -30,
        },
    )


@pytest.fixture(scope="session")
def eckardt_blowup():
    """Rank-3 lattice after blowing up an Eckardt point."""
    return Lattice(
        "Xhat",
        ["Sh", "G", "Eh"],
        3,
        {
            ("Sh", "Sh", "Sh"): -24,
            ("Sh", "Sh", "G"): 9,
            ("Sh", "Sh", "Eh"): 6,
            ("Sh", "G", "G"): -3,
            ("Sh", "G", "Eh"): 0,
            ("Sh", "Eh", "Eh"): 12,
            ("G", "G", "G"): 1,
            ("G", "G", "Eh"): 0,
            ("G", "Eh", "Eh"): 0,
            ("Eh", "Eh", "Eh"): -30,
        },
    )


@pytest.fixture(scope="session")
def weighted_blowup_surface():
    """Cubic-surface blowup with a (2,3)-weighted exceptional curve."""
    return Lattice(
        "Shat",
        ["C", "G"],
        2,
        {("C", "C"): -3, ("C", "G"): 1, ("G", "G"): F(-1, 6)},
    )


@pytest.fixture(scope="session")
def nodal_blowup_surface():
    """Cubic-surface blowup at a node of its hyperplane section."""
    return Lattice(
        "Shat",
        ["C", "G"],
        2,
        {("C", "C"): -1, ("C", "G"): 2, ("G", "G"): -1},
    )
