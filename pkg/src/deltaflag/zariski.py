"""Parametric chamber decomposition of divisor families.

Given a family D(u) (or D(u, v)) and a declared finite set of candidate
negative classes, split the parameter range into chambers on which the
active support is constant, with the positive part P orthogonal to every
active candidate.  Two regimes share one code path:

* surface (degree-2 lattice): candidates detect themselves, the active
  Gram matrix must be negative definite, and P is the classical positive
  part;
* threefold (degree-3 lattice): each candidate divisor comes with a
  declared detecting curve class, and a candidate is added exactly when
  the current P pairs negatively with its detector.

The algorithm is iterative support growth.  Starting from the empty
support just right of the chamber wall, candidates violated by the
current P are added all at once and the linear system P . C_i = 0 is
re-solved exactly; chamber walls are the rational roots of the
coefficient polynomials and of the pairings with inactive detectors.
Walls must be rational (polynomial in u for the v-direction): an
irrational wall aborts the run, it is never approximated.

For a one-parameter family the walk is exact from the start.  For a
two-parameter family the walk happens in v along a rational sample u0,
every wall is then re-derived symbolically as a polynomial in u, and the
result is validated across the whole u-interval (wall ordering, exact
orthogonality, volume continuity, sign checks at chamber corners and
random interior points).  If a wall ordering flips inside the interval
the u-interval is subdivided at the rational flip point and both halves
are redone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    DecompositionError,
    IrrationalBreakpoint,
    NotPseudoeffective,
    SingularGram,
    UnknownCurve,
)
from .exactmath import (
    Poly,
    PiecewiseFn,
    count_real_roots_inside,
    exact_div,
    first_root_after,
    has_root_inside,
    poly_sqrt,
    rat,
    rational_roots,
    rational_roots_tolerant,
    sign_just_after,
)
from .lattice import (
    CurveClass,
    DivisorClass,
    ParamDivisor,
    curve_from_divisor,
    intersect_curve,
    param_intersect,
    param_pair,
)

_MAX_WALK_STEPS = 64
_MAX_SUBDIVISION_DEPTH = 8
_INTERIOR_SAMPLES = 10


@dataclass(frozen=True)
class NegativeCandidate:
    """A class allowed to appear in the negative part.

    On a surface the class detects itself.  On a threefold the pairing
    that triggers it is against a declared curve class (``detector``).
    """

    name: str
    cls: DivisorClass
    detector: CurveClass | None = None

    def detecting_curve(self) -> CurveClass:
        if self.detector is not None:
            return self.detector
        return curve_from_divisor(self.cls, self.name)


@dataclass(frozen=True)
class Chamber:
    """One region of constant active support."""

    u_lo: Fraction
    u_hi: Fraction
    v_lo: Poly | None
    v_hi: Poly | None
    positive: ParamDivisor
    coefficients: dict[str, Poly]
    volume: Poly

    def v_span_at(self, u0: Fraction) -> tuple[Fraction, Fraction]:
        return (
            self.v_lo.eval({"u": u0}),
            self.v_hi.eval({"u": u0}),
        )


@dataclass
class ChamberedDecomposition:
    """Chambers of a decomposed family, in parameter order."""

    parameter: str
    chambers: tuple[Chamber, ...]
    candidates: tuple[NegativeCandidate, ...]
    nef_checks: tuple[CurveClass, ...] = ()
    u_span: tuple[Fraction, Fraction] | None = None

    def candidate(self, name: str) -> NegativeCandidate:
        for c in self.candidates:
            if c.name == name:
                return c
        raise UnknownCurve(f"no candidate named {name!r}")

    def volume_fn(self) -> PiecewiseFn:
        if self.parameter == "u":
            pieces = [(ch.u_lo, ch.u_hi, ch.volume) for ch in self.chambers]
        else:
            pieces = [(ch.v_lo, ch.v_hi, ch.volume) for ch in self.chambers]
        return PiecewiseFn(self.parameter, pieces)

    def ord_along(self, name: str) -> PiecewiseFn:
        self.candidate(name)
        if self.parameter == "u":
            pieces = [
                (ch.u_lo, ch.u_hi, ch.coefficients.get(name, Poly()))
                for ch in self.chambers
            ]
        else:
            pieces = [
                (ch.v_lo, ch.v_hi, ch.coefficients.get(name, Poly()))
                for ch in self.chambers
            ]
        return PiecewiseFn(self.parameter, pieces)

    def threshold(self) -> Poly | Fraction:
        """Upper end of the decomposed range (pseudoeffective threshold
        for a v-direction decomposition)."""
        last = self.chambers[-1]
        if self.parameter == "u":
            return last.u_hi
        return last.v_hi


# ---------------------------------------------------------------------------
# Exact linear algebra over the rationals


def _solve_linear(matrix: list[list[Fraction]], rhs: list[Poly]) -> list[Poly] | None:
    n = len(matrix)
    m = [row[:] for row in matrix]
    b = list(rhs)
    perm = list(range(n))
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        b[col], b[pivot] = b[pivot], b[col]
        perm[col], perm[pivot] = perm[pivot], perm[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        b[col] = b[col] * inv
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
                b[r] = b[r] - factor * b[col]
    return b


def _determinant(matrix: list[list[Fraction]]) -> Fraction:
    n = len(matrix)
    m = [row[:] for row in matrix]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                factor = m[r][col] * inv
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return det


def check_negative_definite(gram: list[list[Fraction]]) -> bool:
    """Leading principal minors must alternate sign starting negative."""
    for k in range(1, len(gram) + 1):
        minor = _determinant([row[:k] for row in gram[:k]])
        if minor == 0 or (minor > 0) != (k % 2 == 0):
            return False
    return True


# ---------------------------------------------------------------------------
# Support solving


class _Problem:
    """Shared data for one decomposition run."""

    def __init__(
        self,
        family: ParamDivisor,
        candidates: Sequence[NegativeCandidate],
        nef: Sequence[CurveClass],
    ):
        self.family = family
        self.lattice = family.lattice
        self.candidates = tuple(candidates)
        self.nef = tuple(nef)
        self.detectors = {c.name: c.detecting_curve() for c in candidates}
        self.surface = self.lattice.degree == 2
        for c in candidates:
            if self.lattice.degree == 3 and c.detector is None:
                raise DecompositionError(
                    f"threefold candidate {c.name} needs a detecting curve"
                )

    def solve(self, active: Sequence[str]) -> tuple[dict[str, Poly], ParamDivisor]:
        """Coefficients making P orthogonal to every active detector."""
        acts = [c for c in self.candidates if c.name in active]
        if not acts:
            return {}, self.family
        matrix = [
            [intersect_curve(cj.cls, self.detectors[ci.name]) for cj in acts]
            for ci in acts
        ]
        if self.surface and not check_negative_definite(matrix):
            if _determinant(matrix) == 0:
                raise SingularGram(
                    f"singular pairing matrix for support {[c.name for c in acts]}"
                )
            raise DecompositionError(
                f"support {[c.name for c in acts]} is not negative definite"
            )
        rhs = [param_pair(self.family, self.detectors[ci.name]) for ci in acts]
        solution = _solve_linear(matrix, rhs)
        if solution is None:
            raise SingularGram(
                f"singular pairing matrix for support {[c.name for c in acts]}"
            )
        coeffs = {c.name: t for c, t in zip(acts, solution)}
        positive = self.family
        for c in acts:
            positive = positive - c.cls.as_param().scaled(coeffs[c.name])
        return coeffs, positive

    def support_at(self, point: dict[str, Fraction]) -> list[str]:
        """Fixpoint support at a single rational parameter point."""
        active: list[str] = []
        for _ in range(2 * len(self.candidates) + 2):
            coeffs, positive = self.solve(active)
            at = positive.at(point)
            dropped = [n for n in active if coeffs[n].eval(point) < 0]
            if dropped:
                active = [n for n in active if n not in dropped]
                continue
            violated = [
                c.name
                for c in self.candidates
                if c.name not in active
                and intersect_curve(at, self.detectors[c.name]) < 0
            ]
            if not violated:
                return active
            active = [c.name for c in self.candidates if c.name in active or c.name in violated]
        raise DecompositionError("support iteration did not stabilise")

    def event_polys(
        self, active: Sequence[str], coeffs: dict[str, Poly], positive: ParamDivisor
    ) -> dict[str, Poly]:
        """Polynomials whose roots can end the current chamber."""
        polys: dict[str, Poly] = {}
        for name in active:
            polys[f"coefficient {name}"] = coeffs[name]
        for c in self.candidates:
            if c.name not in active:
                polys[f"pairing {c.name}"] = param_pair(positive, self.detectors[c.name])
        return polys

    def stable_support(
        self,
        fixed: dict[str, Fraction],
        walk_var: str,
        start: Fraction,
        limit: Fraction,
    ) -> list[str]:
        """Support valid on an open interval immediately right of ``start``.

        The sample point is shrunk toward ``start`` until no structural
        polynomial has a root between them, so the answer is certified.
        """
        step = limit - start
        for _ in range(_MAX_WALK_STEPS):
            s = start + step / 2
            point = dict(fixed)
            point[walk_var] = s
            active = self.support_at(point)
            coeffs, positive = self.solve(active)
            stable = True
            for poly in self.event_polys(active, coeffs, positive).values():
                slice_ = poly
                for var, value in fixed.items():
                    slice_ = slice_.subs(var, value)
                if slice_.is_zero:
                    continue
                if slice_.eval({walk_var: s}) == 0 or has_root_inside(slice_, start, s):
                    stable = False
                    break
            if stable:
                return active
            step /= 2
        raise DecompositionError(f"no stable support right of {walk_var} = {start}")


# ---------------------------------------------------------------------------
# One-parameter walk (threefold level: family in u)


def decompose(
    family: ParamDivisor,
    candidates: Sequence[NegativeCandidate],
    nef: Sequence[CurveClass],
    span: tuple[Fraction, Fraction],
    *,
    rng_seed: int = 2,
) -> ChamberedDecomposition:
    """Chamber decomposition of a one-parameter family over [lo, hi]."""
    lo, hi = rat(span[0]), rat(span[1])
    if "v" in family.variables():
        raise DecompositionError("one-parameter families may involve u only")
    problem = _Problem(family, candidates, nef)
    degree = problem.lattice.degree
    chambers: list[Chamber] = []
    u_cur = lo
    for _ in range(_MAX_WALK_STEPS):
        active = problem.stable_support({}, "u", u_cur, hi)
        coeffs, positive = problem.solve(active)
        volume = param_intersect(*([positive] * degree))
        cuts: list[Fraction] = []
        for poly in problem.event_polys(active, coeffs, positive).values():
            if poly.is_zero:
                continue
            for r in rational_roots(poly, (u_cur, hi)):
                if u_cur < r < hi and sign_just_after(poly, r, hi) < 0:
                    cuts.append(r)
        edge = min(cuts) if cuts else hi
        chambers.append(
            Chamber(u_cur, edge, None, None, positive, dict(coeffs), volume)
        )
        u_cur = edge
        if u_cur >= hi:
            break
    else:
        raise DecompositionError("too many chambers in the u-direction")
    dec = ChamberedDecomposition("u", tuple(chambers), problem.candidates, problem.nef, (lo, hi))
    _validate_line(dec, problem, rng_seed)
    return dec


def _validate_line(dec: ChamberedDecomposition, problem: _Problem, rng_seed: int) -> None:
    rng = random.Random(rng_seed)
    dec.volume_fn().check_continuity()
    for ch in dec.chambers:
        for name in ch.coefficients:
            pairing = param_pair(ch.positive, problem.detectors[name])
            if not pairing.is_zero:
                raise DecompositionError(
                    f"positive part not orthogonal to {name} on [{ch.u_lo}, {ch.u_hi}]"
                )
        samples = [ch.u_lo, ch.u_hi]
        span = ch.u_hi - ch.u_lo
        for _ in range(_INTERIOR_SAMPLES):
            samples.append(ch.u_lo + span * Fraction(rng.randrange(1, 64), 64))
        for u0 in samples:
            at = {"u": u0}
            if ch.volume.eval(at) < 0:
                raise NotPseudoeffective(f"negative volume at u = {u0}")
            interior = ch.u_lo < u0 < ch.u_hi
            for name, coeff in ch.coefficients.items():
                if interior and coeff.eval(at) < 0:
                    raise DecompositionError(f"negative coefficient of {name} at u = {u0}")
            point = ch.positive.at(at)
            for curve in list(problem.detectors.values()) + list(problem.nef):
                if interior and intersect_curve(point, curve) < 0:
                    raise DecompositionError(
                        f"positive part pairs negatively with {curve.name} at u = {u0}"
                    )


# ---------------------------------------------------------------------------
# Two-parameter walk (surface level: family in u and v)


def decompose_slice(
    family: ParamDivisor,
    candidates: Sequence[NegativeCandidate],
    nef: Sequence[CurveClass],
    u_lo: Fraction,
    u_hi: Fraction,
    *,
    rng_seed: int = 3,
    _depth: int = 0,
) -> ChamberedDecomposition:
    """Decompose D(u, v) in the v-direction over one u-interval.

    Chamber walls come out as polynomials in u.  The range in v runs from
    0 to the pseudoeffective threshold t(u), the first root of the final
    chamber's volume.
    """
    u_lo, u_hi = rat(u_lo), rat(u_hi)
    if _depth > _MAX_SUBDIVISION_DEPTH:
        raise DecompositionError("chamber subdivision did not terminate")
    problem = _Problem(family, candidates, nef)
    last_error: Exception | None = None
    for numerator, denominator in ((1, 2), (1, 3), (2, 3), (3, 7)):
        u0 = u_lo + (u_hi - u_lo) * Fraction(numerator, denominator)
        try:
            chambers = _walk_slice(problem, u_lo, u_hi, u0)
            flip = _ordering_flip(chambers, u_lo, u_hi)
            if flip is not None:
                left = decompose_slice(
                    family, candidates, nef, u_lo, flip,
                    rng_seed=rng_seed, _depth=_depth + 1,
                )
                right = decompose_slice(
                    family, candidates, nef, flip, u_hi,
                    rng_seed=rng_seed, _depth=_depth + 1,
                )
                merged = left.chambers + right.chambers
                dec = ChamberedDecomposition(
                    "v", merged, problem.candidates, problem.nef, (u_lo, u_hi)
                )
                _validate_slice(dec, problem, rng_seed)
                return dec
            dec = ChamberedDecomposition(
                "v", tuple(chambers), problem.candidates, problem.nef, (u_lo, u_hi)
            )
            _validate_slice(dec, problem, rng_seed)
            return dec
        except (SingularGram, DecompositionError) as err:
            last_error = err
            continue
    raise last_error if last_error is not None else DecompositionError("no usable sample")


def _walk_slice(
    problem: _Problem, u_lo: Fraction, u_hi: Fraction, u0: Fraction
) -> list[Chamber]:
    chambers: list[Chamber] = []
    v_wall: Poly = Poly()
    v_num = Fraction(0)
    for _ in range(_MAX_WALK_STEPS):
        # certified support immediately above the current wall at u = u0
        active = problem.stable_support({"u": u0}, "v", v_num, v_num + 1)
        coeffs, positive = problem.solve(active)
        volume = param_intersect(positive, positive)
        vol_slice = volume.subs("u", u0)
        if vol_slice.is_zero:
            raise DecompositionError(f"volume vanishes identically at u = {u0}")
        events = {
            label: poly
            for label, poly in problem.event_polys(active, coeffs, positive).items()
            if not poly.subs("u", u0).is_zero
        }
        # candidate activation / deactivation walls (rational, sign-changing)
        cuts: list[tuple[Fraction, Poly]] = []
        for label, poly in events.items():
            slice_ = poly.subs("u", u0)
            for r in rational_roots_tolerant(slice_, (v_num, None)):
                if r > v_num and sign_just_after(slice_, r, r + 1) < 0:
                    cuts.append((r, poly))
        cut = min((r for r, _ in cuts), default=None)
        # does the volume die before the first support change?
        if cut is None:
            vol_ends_first = True
        else:
            vol_ends_first = (
                vol_slice.eval({"v": cut}) <= 0
                or has_root_inside(vol_slice, v_num, cut)
            )
        if not vol_ends_first:
            # the chamber ends at the support-change wall; certify that no
            # irrational event root hides below it
            for label, poly in events.items():
                slice_ = poly.subs("u", u0)
                rational_inside = [
                    r for r in rational_roots_tolerant(slice_, (v_num, cut)) if r > v_num and r < cut
                ]
                if count_real_roots_inside(slice_, v_num, cut) != len(rational_inside):
                    raise IrrationalBreakpoint(
                        f"irrational support wall of {label} below v = {cut}"
                    )
            walls = [_symbolic_root_in_v(poly, u0, cut) for r, poly in cuts if r == cut]
            wall = walls[0]
            for other in walls[1:]:
                if other != wall:
                    raise DecompositionError(
                        f"ambiguous chamber wall at v = {cut} (sample u = {u0})"
                    )
            chambers.append(
                Chamber(u_lo, u_hi, v_wall, wall, positive, dict(coeffs), volume)
            )
            v_wall, v_num = wall, cut
            continue
        # the volume vanishes first: this chamber ends the range
        threshold = first_root_after(vol_slice, v_num)
        if threshold is None:
            raise NotPseudoeffective(
                f"volume never vanishes in v at u = {u0}; family is not bounded"
            )
        wall = _symbolic_root_in_v(volume, u0, threshold)
        chambers.append(
            Chamber(u_lo, u_hi, v_wall, wall, positive, dict(coeffs), volume)
        )
        return chambers
    raise DecompositionError("too many chambers in the v-direction")


def _symbolic_root_in_v(poly: Poly, u0: Fraction, root_at_u0: Fraction) -> Poly:
    """Solve poly(u, v) = 0 for v as a polynomial in u, picking the branch
    through (u0, root_at_u0)."""
    coeffs = poly.coeffs_in("v")
    while coeffs and coeffs[-1].is_zero:
        coeffs.pop()
    if len(coeffs) == 2:
        wall = exact_div(-coeffs[0], coeffs[1])
        if wall is None:
            raise IrrationalBreakpoint(f"wall of {poly} is not polynomial in u")
        return wall
    if len(coeffs) == 3:
        c0, c1, c2 = coeffs
        disc = c1 * c1 - 4 * c0 * c2
        root_disc = poly_sqrt(disc)
        if root_disc is None:
            raise IrrationalBreakpoint(f"irrational wall: discriminant of {poly}")
        options = []
        for sign in (1, -1):
            wall = exact_div(-c1 + root_disc * sign, c2 * 2)
            if wall is not None and wall.eval({"u": u0}) == root_at_u0:
                options.append(wall)
        if not options:
            raise IrrationalBreakpoint(f"wall of {poly} is not polynomial in u")
        return options[0]
    raise DecompositionError(f"cannot solve degree-{len(coeffs) - 1} wall equation")


def _ordering_flip(
    chambers: list[Chamber], u_lo: Fraction, u_hi: Fraction
) -> Fraction | None:
    """First interior u where some chamber's walls cross, if any."""
    flips: list[Fraction] = []
    for ch in chambers:
        width = ch.v_hi - ch.v_lo
        if width.is_zero:
            continue
        for r in rational_roots(width, (u_lo, u_hi)):
            if u_lo < r < u_hi and sign_just_after(width, r, u_hi) < 0:
                flips.append(r)
    return min(flips) if flips else None


def _validate_slice(dec: ChamberedDecomposition, problem: _Problem, rng_seed: int) -> None:
    rng = random.Random(rng_seed)
    chambers = dec.chambers
    if not chambers:
        raise DecompositionError("empty decomposition")
    if not chambers[0].v_lo.is_zero:
        raise DecompositionError("first chamber must start at v = 0")
    for left, right in zip(chambers, chambers[1:]):
        if left.u_hi == right.u_lo:
            continue  # consecutive u-subdivisions; v-walls need not match
        if left.v_hi != right.v_lo:
            raise DecompositionError("v-chambers do not share walls")
        boundary = left.v_hi
        if left.volume.subs("v", boundary) != right.volume.subs("v", boundary):
            raise DecompositionError(f"volume discontinuity across v = {boundary}")
    last = chambers[-1]
    if not last.volume.subs("v", last.v_hi).is_zero:
        raise DecompositionError("volume does not vanish at the pseudoeffective threshold")
    for ch in chambers:
        for name in ch.coefficients:
            pairing = param_pair(ch.positive, problem.detectors[name])
            if not pairing.is_zero:
                raise DecompositionError(f"positive part not orthogonal to {name}")
        if problem.surface and ch.coefficients:
            acts = [c for c in problem.candidates if c.name in ch.coefficients]
            gram = [
                [intersect_curve(cj.cls, problem.detectors[ci.name]) for cj in acts]
                for ci in acts
            ]
            if not check_negative_definite(gram):
                raise DecompositionError("active support is not negative definite")
        u_span = ch.u_hi - ch.u_lo
        for k in range(_INTERIOR_SAMPLES + 4):
            if k == 0:
                u_s, theta = ch.u_lo, Fraction(1, 2)
            elif k == 1:
                u_s, theta = ch.u_hi, Fraction(1, 2)
            elif k == 2:
                u_s, theta = ch.u_lo + u_span / 2, Fraction(0)
            elif k == 3:
                u_s, theta = ch.u_lo + u_span / 2, Fraction(1)
            else:
                u_s = ch.u_lo + u_span * Fraction(rng.randrange(1, 64), 64)
                theta = Fraction(rng.randrange(1, 64), 64)
            v_lo, v_hi = ch.v_span_at(u_s)
            if v_hi < v_lo:
                raise DecompositionError(f"inverted chamber walls at u = {u_s}")
            point = {"u": u_s, "v": v_lo + (v_hi - v_lo) * theta}
            if ch.volume.eval(point) < 0:
                raise NotPseudoeffective(f"negative volume at {point}")
            interior = 2 <= k
            if not interior:
                continue
            for name, coeff in ch.coefficients.items():
                if coeff.eval(point) < 0:
                    raise DecompositionError(f"negative coefficient of {name} at {point}")
            at = ch.positive.at(point)
            for curve in list(problem.detectors.values()) + list(problem.nef):
                if intersect_curve(at, curve) < 0:
                    raise DecompositionError(
                        f"positive part pairs negatively with {curve.name} at {point}"
                    )
