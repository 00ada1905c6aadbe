"""Decomposition engine against the known chamber structures."""

import random
from fractions import Fraction as F

import pytest

from deltaflag.errors import DecompositionError, SingularGram
from deltaflag.exactmath import Poly, U, V
from deltaflag.lattice import curve_from_divisor, param_intersect
from deltaflag.zariski import (
    Chamber,
    ChamberedDecomposition,
    NegativeCandidate,
    check_negative_definite,
    decompose,
    decompose_slice,
)
from oracle import decompose_at_point


@pytest.fixture
def anticanonical_minus_quadric(blowup_p3):
    family = blowup_p3.param_divisor([4 - 2 * U, U - 1])
    e_cand = NegativeCandidate(
        "Ecand", blowup_p3.basis_divisor("E"), blowup_p3.curve("f1", [0, -1])
    )
    nef = [blowup_p3.curve("f2", [1, 3])]
    return family, [e_cand], nef


class TestLineDecomposition:
    def test_smooth_quadric_chambers(self, anticanonical_minus_quadric):
        family, cands, nef = anticanonical_minus_quadric
        dec = decompose(family, cands, nef, (0, 2))
        assert [(c.u_lo, c.u_hi) for c in dec.chambers] == [(0, 1), (1, 2)]
        first, second = dec.chambers
        assert first.coefficients == {}
        assert second.coefficients == {"Ecand": U - 1}
        assert first.volume == Poly({(0, 0): 22, (1, 0): -6, (2, 0): -6, (3, 0): -2})
        assert second.volume == Poly({(0, 0): 64, (1, 0): -96, (2, 0): 48, (3, 0): -8})
        assert second.volume.eval({"u": F(2)}) == 0

    def test_ample_constant_family_single_chamber(self, blowup_p3):
        family = blowup_p3.param_divisor([4, -1])
        cand = NegativeCandidate(
            "Ecand", blowup_p3.basis_divisor("E"), blowup_p3.curve("f1", [0, -1])
        )
        dec = decompose(family, [cand], [blowup_p3.curve("f2", [1, 3])], (0, 1))
        assert len(dec.chambers) == 1
        assert dec.chambers[0].coefficients == {}
        assert dec.chambers[0].volume == Poly.const(22)

    def test_vertex_chambers(self, vertex_blowup):
        family = vertex_blowup.param_divisor([2, 4 - U, 1])
        cand = NegativeCandidate(
            "Qcand", vertex_blowup.basis_divisor("Qh"), vertex_blowup.curve("l", [-3, 1, 3])
        )
        nef = [vertex_blowup.curve("fG", [2, -1, 0]), vertex_blowup.curve("fE", [1, 0, -1])]
        dec = decompose(family, [cand], nef, (0, 4))
        assert [(c.u_lo, c.u_hi) for c in dec.chambers] == [(0, 1), (1, 4)]
        assert dec.chambers[1].coefficients["Qcand"] == (U - 1) * F(1, 3)
        assert dec.chambers[0].volume == 22 - U**3
        assert dec.chambers[1].volume.eval({"u": F(4)}) == 0

    def test_volume_fn_and_integral(self, anticanonical_minus_quadric):
        from deltaflag.exactmath import integrate_piecewise

        family, cands, nef = anticanonical_minus_quadric
        dec = decompose(family, cands, nef, (0, 2))
        vol = dec.volume_fn()
        vol.check_continuity()
        assert integrate_piecewise(vol) == F(37, 2)

    def test_ord_along(self, anticanonical_minus_quadric):
        family, cands, nef = anticanonical_minus_quadric
        dec = decompose(family, cands, nef, (0, 2))
        ord_fn = dec.ord_along("Ecand")
        assert ord_fn.eval(F(1, 2)) == 0
        assert ord_fn.eval(F(3, 2)) == F(1, 2)

    def test_hyperplane_section_of_cubic(self, blowup_p3):
        family = blowup_p3.param_divisor([4 - 3 * U, U - 1])
        cand = NegativeCandidate(
            "Ecand", blowup_p3.basis_divisor("E"), blowup_p3.curve("f1", [0, -1])
        )
        dec = decompose(family, [cand], [blowup_p3.curve("f2", [1, 3])], (0, F(4, 3)))
        assert [(c.u_lo, c.u_hi) for c in dec.chambers] == [(0, 1), (1, F(4, 3))]
        assert dec.chambers[1].volume == Poly(
            {(0, 0): 64, (1, 0): -144, (2, 0): 108, (3, 0): -27}
        )


class TestSliceDecomposition:
    def test_quadric_surface_slice(self, blowup_p3, quadric_surface):
        # P(u)|_Q - v L on the first chamber: single v-chamber, nef all the way
        family = quadric_surface.param_divisor([1 + U - V, 1 + U])
        nef = [
            curve_from_divisor(quadric_surface.basis_divisor("l1")),
            curve_from_divisor(quadric_surface.basis_divisor("l2")),
        ]
        dec = decompose_slice(family, [], nef, 0, 1)
        assert len(dec.chambers) == 1
        ch = dec.chambers[0]
        assert ch.v_lo == Poly()
        assert ch.v_hi == 1 + U
        assert ch.volume == 2 * (1 + U - V) * (1 + U)
        assert dec.threshold() == 1 + U

    def test_nodal_slice(self, nodal_blowup_surface):
        lat = nodal_blowup_surface
        family = lat.param_divisor([2 - U, 4 - 2 * U - V])
        cand = NegativeCandidate("Chat", lat.basis_divisor("C"))
        nef = [curve_from_divisor(lat.basis_divisor("G"))]
        dec = decompose_slice(family, [cand], nef, 0, 1)
        assert len(dec.chambers) == 2
        first, second = dec.chambers
        assert first.coefficients == {}
        assert first.v_hi == 3 - U * F(3, 2)
        assert second.coefficients["Chat"] == 2 * V + 3 * U - 6
        assert second.v_hi == 4 - 2 * U
        assert first.volume == 3 * U**2 - V**2 - 12 * U + 12
        # positive part proportional to 2C + G on the second chamber
        assert second.positive.coords[0] == (4 - 2 * U - V) * 2
        assert second.positive.coords[1] == 4 - 2 * U - V

    def test_nodal_second_piece(self, nodal_blowup_surface):
        lat = nodal_blowup_surface
        family = lat.param_divisor([4 - 3 * U, 8 - 6 * U - V])
        cand = NegativeCandidate("Chat", lat.basis_divisor("C"))
        nef = [curve_from_divisor(lat.basis_divisor("G"))]
        dec = decompose_slice(family, [cand], nef, 1, F(4, 3))
        assert [c.coefficients.get("Chat", Poly()) for c in dec.chambers] == [
            Poly(),
            2 * V + 9 * U - 12,
        ]
        assert dec.threshold() == 8 - 6 * U

    def test_cusp_slice(self, weighted_blowup_surface):
        lat = weighted_blowup_surface
        family = lat.param_divisor([2 - U, 12 - 6 * U - V])
        cand = NegativeCandidate("Chat", lat.basis_divisor("C"))
        nef = [curve_from_divisor(lat.basis_divisor("G"))]
        dec = decompose_slice(family, [cand], nef, 0, 1)
        first, second = dec.chambers
        assert first.v_hi == 6 - 3 * U
        assert second.coefficients["Chat"] == U - 2 + V * F(1, 3)
        assert dec.threshold() == 12 - 6 * U

    def test_middle_chamber_coefficient_on_bl6(self):
        # blown-up plane with the flag curve among the exceptional classes
        from deltaflag.lattice import Lattice

        lat = Lattice(
            "S",
            ["l", "E1", "Eb"],
            2,
            {
                ("l", "l"): 1,
                ("l", "E1"): 0,
                ("l", "Eb"): 0,
                ("E1", "E1"): -1,
                ("E1", "Eb"): 0,
                ("Eb", "Eb"): -5,
            },
        )
        family = lat.param_divisor([4 - U, -1 - V, Poly.const(-1)])
        conic = NegativeCandidate("Ctilde", lat.divisor([2, -1, -1]))
        lines = NegativeCandidate("Lsum", lat.divisor([5, -5, -1]))
        nef = [
            curve_from_divisor(lat.basis_divisor("E1")),
            curve_from_divisor(lat.basis_divisor("Eb")),
            curve_from_divisor(lat.divisor([1, -1, 0])),
        ]
        dec = decompose_slice(family, [conic, lines], nef, 0, 1)
        assert len(dec.chambers) == 3
        walls = [dec.chambers[0].v_hi, dec.chambers[1].v_hi, dec.chambers[2].v_hi]
        assert walls == [2 - 2 * U, 2 - U, (8 - 4 * U) * F(1, 3)]
        middle = dec.chambers[1]
        assert middle.coefficients["Ctilde"] == V * F(1, 2) + U - 1
        last = dec.chambers[2]
        assert last.coefficients["Lsum"] == V + U - 2
        ord_fn = dec.ord_along("Ctilde")
        assert ord_fn.eval(F(3, 2), {"u": F(1, 2)}) == F(3, 4) + F(1, 2) - 1

    def test_vertex_infinitesimal_slice(self):
        from deltaflag.lattice import Lattice

        lat = Lattice(
            "Ghat",
            ["lT", "Fc"],
            2,
            {("lT", "lT"): -1, ("lT", "Fc"): 1, ("Fc", "Fc"): F(-1, 2)},
        )
        family = lat.param_divisor([U, 2 * U - V])
        cand = NegativeCandidate("lTcand", lat.basis_divisor("lT"))
        nef = [curve_from_divisor(lat.basis_divisor("Fc"))]
        dec = decompose_slice(family, [cand], nef, 0, 1)
        first, second = dec.chambers
        assert first.v_hi == Poly.var("u")
        assert second.coefficients["lTcand"] == V - U
        assert dec.threshold() == 2 * U

    def test_volume_continuity_exact(self, nodal_blowup_surface):
        lat = nodal_blowup_surface
        family = lat.param_divisor([2 - U, 4 - 2 * U - V])
        cand = NegativeCandidate("Chat", lat.basis_divisor("C"))
        dec = decompose_slice(
            family, [cand], [curve_from_divisor(lat.basis_divisor("G"))], 0, 1
        )
        first, second = dec.chambers
        wall = first.v_hi
        assert first.volume.subs("v", wall) == second.volume.subs("v", wall)


class TestOracleEquivalence:
    def _check_line(self, dec, family, cands, nef, rng, count=25):
        for _ in range(count):
            u0 = None
            while u0 is None:
                cand = F(rng.randrange(1, 128), 128) * (
                    dec.chambers[-1].u_hi - dec.chambers[0].u_lo
                )
                if all(cand != c.u_lo and cand != c.u_hi for c in dec.chambers):
                    u0 = cand
            coeffs, coords = decompose_at_point(family.at({"u": u0}), cands, nef)
            chamber = next(c for c in dec.chambers if c.u_lo <= u0 <= c.u_hi)
            engine_coeffs = {
                n: p.eval({"u": u0})
                for n, p in chamber.coefficients.items()
                if p.eval({"u": u0}) != 0
            }
            assert engine_coeffs == coeffs
            assert chamber.positive.at({"u": u0}).coords == coords

    def test_line_oracle_smooth_quadric(self, anticanonical_minus_quadric):
        family, cands, nef = anticanonical_minus_quadric
        dec = decompose(family, cands, nef, (0, 2))
        self._check_line(dec, family, cands, nef, random.Random(7))

    def test_slice_oracle_nodal(self, nodal_blowup_surface):
        lat = nodal_blowup_surface
        family = lat.param_divisor([2 - U, 4 - 2 * U - V])
        cands = [NegativeCandidate("Chat", lat.basis_divisor("C"))]
        nef = [curve_from_divisor(lat.basis_divisor("G"))]
        dec = decompose_slice(family, cands, nef, 0, 1)
        rng = random.Random(11)
        for _ in range(25):
            u0 = F(rng.randrange(1, 127), 127)
            t_of_u = dec.threshold().eval({"u": u0})
            v0 = t_of_u * F(rng.randrange(1, 127), 128)
            coeffs, coords = decompose_at_point(family.at({"u": u0, "v": v0}), cands, nef)
            chamber = next(
                c
                for c in dec.chambers
                if c.v_lo.eval({"u": u0}) <= v0 <= c.v_hi.eval({"u": u0})
            )
            engine_coeffs = {
                n: p.eval({"u": u0, "v": v0})
                for n, p in chamber.coefficients.items()
                if p.eval({"u": u0, "v": v0}) != 0
            }
            assert engine_coeffs == coeffs
            assert chamber.positive.at({"u": u0, "v": v0}).coords == coords


class TestDegenerateInputs:
    def test_singular_gram(self, nodal_blowup_surface):
        lat = nodal_blowup_surface
        family = lat.param_divisor([2 - U, 4 - 2 * U - V])
        dup = [
            NegativeCandidate("c1", lat.basis_divisor("C")),
            NegativeCandidate("c2", lat.basis_divisor("C")),
        ]
        with pytest.raises((SingularGram, DecompositionError)):
            decompose_slice(family, dup, [], 0, 1)

    def test_threshold_wins_over_degenerate_candidate(self, quadric_surface):
        # a ruling pairs to zero exactly where the volume dies, so the
        # decomposition ends at the threshold without activating it
        family = quadric_surface.param_divisor([1 - V, Poly.const(1)])
        cand = NegativeCandidate("ruling", quadric_surface.basis_divisor("l2"))
        dec = decompose_slice(family, [cand], [], 0, 1)
        assert len(dec.chambers) == 1
        assert dec.threshold() == Poly.const(1)

    def test_gram_negative_definiteness_guard(self):
        # candidate with positive self-intersection activating early
        from deltaflag.lattice import Lattice

        lat = Lattice("bad", ["A", "B"], 2, {("A", "A"): 1, ("A", "B"): 0, ("B", "B"): 1})
        family = lat.param_divisor([Poly.const(1), -V])
        cand = NegativeCandidate("B", lat.basis_divisor("B"))
        with pytest.raises(DecompositionError):
            decompose_slice(family, [cand], [], 0, 1)

    def test_gram_check_helper(self):
        assert check_negative_definite([[F(-1)]])
        assert check_negative_definite([[F(-3), F(0)], [F(0), F(-6)]])
        assert not check_negative_definite([[F(-1), F(2)], [F(2), F(-1)]])
        assert not check_negative_definite([[F(1)]])
