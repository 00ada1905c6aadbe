"""Lattice layer: table reproduction, multilinearity, parametric consistency."""

import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltaflag.errors import LatticeMismatch, ValidationError
from deltaflag.exactmath import Poly, U, V
from deltaflag.lattice import (
    Lattice,
    RestrictionMap,
    curve_from_divisor,
    intersect,
    intersect_curve,
    param_intersect,
    param_pair,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=8)


class TestFormTables:
    def test_blowup_p3_table(self, blowup_p3):
        H = blowup_p3.basis_divisor("H")
        E = blowup_p3.basis_divisor("E")
        assert intersect(H, H, H) == 1
        assert intersect(H, E, E) == -6
        assert intersect(H, H, E) == 0
        assert intersect(E, E, E) == -30

    def test_anticanonical_cube(self, blowup_p3):
        H = blowup_p3.basis_divisor("H")
        E = blowup_p3.basis_divisor("E")
        mk = H.scaled(4) - E
        assert intersect(mk, mk, mk) == 22

    def test_vertex_blowup_table(self, vertex_blowup):
        Qh = vertex_blowup.basis_divisor("Qh")
        G = vertex_blowup.basis_divisor("G")
        Eh = vertex_blowup.basis_divisor("Eh")
        assert intersect(Qh, Qh, Eh) == -6
        assert intersect(Qh, G, G) == -2
        assert intersect(Qh, Qh, G) == 4
        assert intersect(G, G, Eh) == 0
        assert intersect(G, Eh, Eh) == 0
        assert intersect(Eh, Eh, Eh) == -30
        assert intersect(Qh, Eh, Eh) == 18
        assert intersect(Qh, Qh, Qh) == -6
        assert intersect(Qh, Eh, G) == 0
        assert intersect(G, G, G) == 1

    def test_eckardt_blowup_table(self, eckardt_blowup):
        Sh = eckardt_blowup.basis_divisor("Sh")
        G = eckardt_blowup.basis_divisor("G")
        Eh = eckardt_blowup.basis_divisor("Eh")
        assert intersect(Sh, Sh, Eh) == 6
        assert intersect(Sh, G, G) == -3
        assert intersect(Sh, Sh, G) == 9
        assert intersect(Sh, Sh, Sh) == -24
        assert intersect(Sh, Eh, Eh) == 12
        assert intersect(G, G, G) == 1

    def test_weighted_blowup_surface_numbers(self, weighted_blowup_surface):
        C = weighted_blowup_surface.basis_divisor("C")
        G = weighted_blowup_surface.basis_divisor("G")
        assert intersect(G, G) == F(-1, 6)
        assert intersect(C, G) == 1
        assert intersect(C, C) == -3

    def test_nodal_blowup_numbers(self, nodal_blowup_surface):
        C = nodal_blowup_surface.basis_divisor("C")
        G = nodal_blowup_surface.basis_divisor("G")
        assert intersect(G, G) == -1
        assert intersect(C, G) == 2
        assert intersect(C, C) == -1

    def test_missing_entry_rejected(self):
        with pytest.raises(ValidationError):
            Lattice("bad", ["A", "B"], 2, {("A", "A"): 1, ("B", "B"): 2})

    def test_conflicting_symmetric_entry_rejected(self):
        with pytest.raises(ValidationError):
            Lattice(
                "bad",
                ["A", "B"],
                2,
                {("A", "A"): 1, ("A", "B"): 2, ("B", "A"): 3, ("B", "B"): 0},
            )


class TestCurvePairings:
    def test_mori_cone_table(self, blowup_p3):
        f1 = blowup_p3.curve("f1", [0, -1])
        f2 = blowup_p3.curve("f2", [1, 3])
        H = blowup_p3.basis_divisor("H")
        E = blowup_p3.basis_divisor("E")
        Q = H.scaled(2) - E
        mk = H.scaled(4) - E
        assert intersect_curve(E, f1) == -1
        assert intersect_curve(Q, f2) == -1
        assert intersect_curve(E, f2) == 3
        assert intersect_curve(H, f2) == 1
        assert intersect_curve(Q, f1) == 1
        assert intersect_curve(H, f1) == 0
        assert intersect_curve(mk, f1) == 1
        assert intersect_curve(blowup_p3.zero(), f1) == 0

    def test_vertex_curve_table(self, vertex_blowup):
        curves = {
            "l": vertex_blowup.curve("l", [-3, 1, 3]),
            "fG": vertex_blowup.curve("fG", [2, -1, 0]),
            "fE": vertex_blowup.curve("fE", [1, 0, -1]),
        }
        Qh = vertex_blowup.basis_divisor("Qh")
        G = vertex_blowup.basis_divisor("G")
        Eh = vertex_blowup.basis_divisor("Eh")
        expect = {
            ("l",): (-3, 1, 3),
            ("fG",): (2, -1, 0),
            ("fE",): (1, 0, -1),
        }
        for (name,), (vq, vg, ve) in expect.items():
            assert intersect_curve(Qh, curves[name]) == vq
            assert intersect_curve(G, curves[name]) == vg
            assert intersect_curve(Eh, curves[name]) == ve

    def test_curve_from_divisor_on_quadric(self, quadric_surface):
        l1 = quadric_surface.basis_divisor("l1")
        l2 = quadric_surface.basis_divisor("l2")
        as_curve = curve_from_divisor(l1)
        assert intersect_curve(l1, as_curve) == 0
        assert intersect_curve(l2, as_curve) == 1


class TestMultilinearity:
    @given(a=rationals, b=rationals)
    def test_linear_in_first_slot(self, blowup_p3, a, b):
        H = blowup_p3.basis_divisor("H")
        E = blowup_p3.basis_divisor("E")
        D1 = H.scaled(2) - E
        D2 = H.scaled(a) + E.scaled(b)
        lhs = intersect(D1.scaled(a) + D2.scaled(b), H, E)
        rhs = a * intersect(D1, H, E) + b * intersect(D2, H, E)
        assert lhs == rhs

    @given(perm=st.permutations([0, 1, 2]))
    def test_symmetry(self, vertex_blowup, perm):
        divs = [
            vertex_blowup.divisor([2, 4, 1]),
            vertex_blowup.divisor([F(7, 3), -1, 0]),
            vertex_blowup.divisor([0, 1, -2]),
        ]
        base = intersect(*divs)
        assert intersect(*(divs[i] for i in perm)) == base

    def test_zero_argument(self, blowup_p3):
        H = blowup_p3.basis_divisor("H")
        D = H.scaled(3) - blowup_p3.basis_divisor("E")
        assert intersect(D, blowup_p3.zero(), D) == 0

    def test_wrong_count_rejected(self, blowup_p3):
        H = blowup_p3.basis_divisor("H")
        with pytest.raises(LatticeMismatch):
            intersect(H, H)

    def test_cross_lattice_rejected(self, blowup_p3, quadric_surface):
        with pytest.raises(LatticeMismatch):
            intersect_curve(
                quadric_surface.basis_divisor("l1"), blowup_p3.curve("f1", [0, -1])
            )


class TestParametricFamilies:
    def test_anticanonical_family_volume(self, blowup_p3):
        # ((4-2u)H + (u-1)E)^3 on the threefold lattice
        D = blowup_p3.param_divisor([4 - 2 * U, U - 1])
        vol = param_intersect(D, D, D)
        assert vol == Poly({(0, 0): 22, (1, 0): -6, (2, 0): -6, (3, 0): -2})

    def test_hyperplane_family_volume(self, blowup_p3):
        D = blowup_p3.param_divisor([4 - 3 * U, Poly()])
        vol = param_intersect(D, D, D)
        assert vol == Poly({(0, 0): 64, (1, 0): -144, (2, 0): 108, (3, 0): -27})

    def test_zero_family(self, blowup_p3):
        D = blowup_p3.param_divisor([Poly(), Poly()])
        f1 = blowup_p3.curve("f1", [0, -1])
        assert param_pair(D, f1).is_zero

    @given(u0=st.fractions(min_value=0, max_value=2, max_denominator=40))
    def test_specialisation_commutes(self, blowup_p3, u0):
        D = blowup_p3.param_divisor([4 - 2 * U, U - 1])
        vol = param_intersect(D, D, D)
        spec = D.at({"u": u0})
        assert vol.eval({"u": u0}) == intersect(spec, spec, spec)

    def test_specialisation_commutes_many_points(self, blowup_p3):
        rng = random.Random(50)
        D = blowup_p3.param_divisor([4 - 2 * U, U - 1])
        f2 = blowup_p3.curve("f2", [1, 3])
        pairing = param_pair(D, f2)
        for _ in range(50):
            u0 = F(rng.randrange(0, 160), 80)
            assert pairing.eval({"u": u0}) == intersect_curve(D.at({"u": u0}), f2)


class TestRestriction:
    def test_quadric_restriction(self, blowup_p3, quadric_surface):
        restriction = RestrictionMap(
            blowup_p3,
            quadric_surface,
            (
                quadric_surface.divisor([1, 1]),
                quadric_surface.divisor([3, 3]),
            ),
        )
        P = blowup_p3.param_divisor([4 - 2 * U, U - 1])
        restricted = restriction.apply(P)
        assert restricted.coords[0] == 1 + U
        assert restricted.coords[1] == 1 + U
        # degree consistency: (P^2 . Q) upstairs equals (P|_Q)^2 downstairs
        Q = blowup_p3.divisor([2, -1])
        upstairs = param_intersect(P, P, Q)
        downstairs = param_intersect(restricted, restricted)
        assert upstairs == downstairs

    def test_family_with_v(self, blowup_p3, quadric_surface):
        restriction = RestrictionMap(
            blowup_p3,
            quadric_surface,
            (
                quadric_surface.divisor([1, 1]),
                quadric_surface.divisor([3, 3]),
            ),
        )
        P = blowup_p3.param_divisor([4 - 2 * U, U - 1])
        L = quadric_surface.divisor([1, 0])
        D = restriction.apply(P) - L.as_param().scaled(V)
        vol = param_intersect(D, D)
        assert vol == 2 * (1 + U - V) * (1 + U)
