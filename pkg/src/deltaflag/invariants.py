"""The flag invariants: threshold masses of volume along a flag and the
assembled local bound.

For a flag divisor Y with family K - uY, a flag curve Z on (a blowup of)
Y, and marked points on Z, the three quantities are

* s_divisor: normalised integral of vol(K - uY) over the u-range;
* s_curve:   the ord-term of the negative part along Z plus the double
  integral of vol(P(u)|_Y - vZ), normalised;
* s_point:   the double integral of (P(u,v) . Z)^2 plus the incidence
  term f_term, which integrates (P(u,v) . Z) against the local
  multiplicities at the point of everything in the negative parts.

The local bound is the minimum of discrepancy / mass ratios over the
divisor term, each curve term, and each point term.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping

from .errors import MissingIncidence, NotPseudoeffective, ValidationError
from .exactmath import Poly, U, V, integrate_piecewise, rat
from .lattice import curve_from_divisor, param_intersect
from .zariski import ChamberedDecomposition, decompose, decompose_slice

if TYPE_CHECKING:  # pragma: no cover
    from .scenarios import CurveFlag, FlagScenario


@dataclass(frozen=True)
class PointCase:
    """A marked point on the flag curve with its local data."""

    name: str
    different_order: Fraction
    mults: Mapping[str, Fraction]

    def __post_init__(self):
        if not (0 <= self.different_order < 1):
            raise ValidationError(
                f"point {self.name}: different order must lie in [0, 1)"
            )
        for cand, m in self.mults.items():
            if m < 0:
                raise ValidationError(
                    f"point {self.name}: negative multiplicity for {cand}"
                )


@dataclass(frozen=True)
class IncidenceTable:
    """Local multiplicities along the flag curve.

    ``pullback_ord`` maps an ambient candidate to the order along Z of the
    pullback of its restriction (the multiplier feeding the ord-term of
    s_curve); each point case maps candidate names (ambient and surface
    level alike) to the local multiplicity of that candidate's residual
    part at the point.
    """

    pullback_ord: Mapping[str, Fraction]
    points: tuple[PointCase, ...]

    def __post_init__(self):
        for cand, m in self.pullback_ord.items():
            if m < 0:
                raise ValidationError(f"negative pullback order for {cand}")

    def point(self, name: str) -> PointCase:
        for p in self.points:
            if p.name == name:
                return p
        raise MissingIncidence(f"no point case named {name!r}")

    def mult(self, candidate: str, point: str) -> Fraction:
        case = self.point(point)
        if candidate not in case.mults:
            raise MissingIncidence(
                f"no multiplicity for candidate {candidate!r} at point {point!r}"
            )
        return case.mults[candidate]

    def ord_multiplier(self, candidate: str) -> Fraction:
        if candidate not in self.pullback_ord:
            raise MissingIncidence(f"no pullback order for candidate {candidate!r}")
        return self.pullback_ord[candidate]


@dataclass(frozen=True)
class DeltaTerm:
    kind: str  # divisor | curve | point
    label: str
    numerator: Fraction
    mass: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.numerator / self.mass


@dataclass(frozen=True)
class DeltaReport:
    """All competing terms of the local bound, the minimum, and the
    divisor-term upper bound."""

    scenario: str
    terms: tuple[DeltaTerm, ...]
    bound: Fraction
    argmin: str
    upper_bound: Fraction

    def __post_init__(self):
        if self.bound != min(t.ratio for t in self.terms):
            raise ValidationError("reported bound is not the minimum of its terms")

    @property
    def attained(self) -> bool:
        """True when the lower bound meets the divisor-term upper bound,
        so the bound is an equality rather than an estimate."""
        return self.bound == self.upper_bound


class FlagComputation:
    """Everything derived for one curve flag: restricted family, chamber
    slices in v per u-chamber, and the three integrals."""

    def __init__(self, scenario: "FlagScenario", flag: "CurveFlag", u_dec: ChamberedDecomposition, k3: Fraction):
        self.scenario = scenario
        self.flag = flag
        self.u_dec = u_dec
        self.k3 = k3
        self.nef_curves = [curve_from_divisor(d) for d in flag.nef]
        self.slices: list[ChamberedDecomposition] = []
        self._consistency()
        z_param = flag.curve.as_param().scaled(V)
        for ch in u_dec.chambers:
            family = flag.restriction.apply(ch.positive) - z_param
            self.slices.append(
                decompose_slice(family, flag.candidates, self.nef_curves, ch.u_lo, ch.u_hi)
            )

    def _consistency(self):
        """Restricting then squaring must equal pairing the square with Y
        upstairs; this pins the declared restriction map to the form."""
        y = self.scenario.flag_divisor
        for ch in self.u_dec.chambers:
            upstairs = param_intersect(ch.positive, ch.positive, y)
            down = self.flag.restriction.apply(ch.positive)
            if param_intersect(down, down) != upstairs:
                raise ValidationError(
                    f"restriction map of flag {self.flag.name} is inconsistent "
                    f"with the form on [{ch.u_lo}, {ch.u_hi}]"
                )

    # -- integral helpers ---------------------------------------------

    def _double_integral(self, integrand_of_chamber) -> list[Fraction]:
        """Integrate a per-chamber (u,v)-polynomial over every slice
        chamber; one total per u-chamber."""
        totals = []
        for u_ch, slice_dec in zip(self.u_dec.chambers, self.slices):
            total = Fraction(0)
            for ch in slice_dec.chambers:
                integrand = integrand_of_chamber(u_ch, ch)
                if integrand.is_zero:
                    continue
                inner = integrand.definite_integral("v", ch.v_lo, ch.v_hi)
                total += inner.definite_integral("u", ch.u_lo, ch.u_hi).constant_value()
            totals.append(total)
        return totals

    def ord_term_contributions(self) -> list[Fraction]:
        """Per u-chamber integral of (P(u)^2 . Y) times the order of the
        negative part along Z."""
        y = self.scenario.flag_divisor
        out = []
        for ch in self.u_dec.chambers:
            d_of_u = Poly()
            for name, coeff in ch.coefficients.items():
                d_of_u = d_of_u + coeff * self.flag.incidence.ord_multiplier(name)
            if d_of_u.is_zero:
                out.append(Fraction(0))
                continue
            p2y = param_intersect(ch.positive, ch.positive, y)
            out.append(
                (p2y * d_of_u).definite_integral("u", ch.u_lo, ch.u_hi).constant_value()
            )
        return out

    def volume_contributions(self) -> list[Fraction]:
        return self._double_integral(lambda u_ch, ch: ch.volume)

    def curve_mass(self) -> Fraction:
        total = sum(self.ord_term_contributions()) + sum(self.volume_contributions())
        return Fraction(3) * total / self.k3

    def _pairing_with_curve(self, ch) -> Poly:
        return param_intersect(ch.positive, self.flag.curve.as_param())

    def point_base_contributions(self) -> list[Fraction]:
        """Per u-chamber integral of (P(u,v) . Z)^2, the point-independent
        part of s_point."""
        return self._double_integral(
            lambda u_ch, ch: self._pairing_with_curve(ch) ** 2
        )

    def incidence_contributions(self, point: str) -> list[Fraction]:
        """Per u-chamber integral of (P(u,v) . Z) times the local order of
        the negative parts at the point."""

        def integrand(u_ch, ch):
            order = Poly()
            for name, coeff in u_ch.coefficients.items():
                order = order + coeff * self.flag.incidence.mult(name, point)
            for name, coeff in ch.coefficients.items():
                order = order + coeff * self.flag.incidence.mult(name, point)
            if order.is_zero:
                return Poly()
            return self._pairing_with_curve(ch) * order

        return self._double_integral(integrand)

    def f_term(self, point: str) -> Fraction:
        return Fraction(6) * sum(self.incidence_contributions(point)) / self.k3

    def point_mass(self, point: str) -> Fraction:
        base = Fraction(3) * sum(self.point_base_contributions()) / self.k3
        return base + self.f_term(point)


class ScenarioComputation:
    """Full evaluation of one scenario: decompositions, masses, report."""

    def __init__(self, scenario: "FlagScenario"):
        self.scenario = scenario
        k = scenario.anticanonical
        self.k3 = param_intersect(k, k, k).constant_value()
        if self.k3 <= 0:
            raise ValidationError("anticanonical degree must be positive")
        family = k.as_param() - scenario.flag_divisor.as_param().scaled(U)
        self.u_dec = decompose(
            family, scenario.candidates, scenario.mori, (Fraction(0), scenario.tau)
        )
        if scenario.endpoint_vanishing:
            tail = self.u_dec.chambers[-1].volume.eval({"u": scenario.tau})
            if tail != 0:
                raise NotPseudoeffective(
                    f"volume at the declared threshold is {tail}, not zero"
                )
        self._flags = {
            flag.name: FlagComputation(scenario, flag, self.u_dec, self.k3)
            for flag in scenario.flags
        }

    def flag(self, name: str) -> FlagComputation:
        return self._flags[name]

    def s_divisor(self) -> Fraction:
        return integrate_piecewise(self.u_dec.volume_fn()) / self.k3

    def s_curve(self, flag: str) -> Fraction:
        return self._flags[flag].curve_mass()

    def s_point(self, flag: str, point: str) -> Fraction:
        return self._flags[flag].point_mass(point)

    def f_term(self, flag: str, point: str) -> Fraction:
        return self._flags[flag].f_term(point)

    def delta_bound(self) -> DeltaReport:
        terms = [
            DeltaTerm(
                "divisor",
                "divisor",
                rat(self.scenario.divisor_discrepancy),
                self.s_divisor(),
            )
        ]
        for flag in self.scenario.flags:
            terms.append(
                DeltaTerm(
                    "curve",
                    f"curve.{flag.name}",
                    rat(flag.curve_discrepancy),
                    self.s_curve(flag.name),
                )
            )
            for case in flag.incidence.points:
                terms.append(
                    DeltaTerm(
                        "point",
                        f"point.{flag.name}.{case.name}",
                        1 - case.different_order,
                        self.s_point(flag.name, case.name),
                    )
                )
        bound = min(t.ratio for t in terms)
        argmin = next(t.label for t in terms if t.ratio == bound)
        return DeltaReport(
            scenario=self.scenario.name,
            terms=tuple(terms),
            bound=bound,
            argmin=argmin,
            upper_bound=terms[0].ratio,
        )
