"""Exact scalars, polynomials in u and v, piecewise functions, integration.

Every scalar is an arbitrary-precision rational (``fractions.Fraction``);
nothing in here ever rounds.  Polynomials are stored as sparse exponent
maps over the fixed variable pair (u, v); a polynomial in u alone simply
never uses the second exponent.  Total degree is capped so that a runaway
symbolic computation fails loudly instead of silently exploding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    BadPartition,
    DegreeOverflow,
    EngineError,
    IrrationalBreakpoint,
    MissingAssignment,
)

Rational = Fraction

MAX_TOTAL_DEGREE = 16

_VAR_INDEX = {"u": 0, "v": 1}


def rat(value) -> Fraction:
    """Coerce an int, Fraction or 'p/q' string to an exact rational.

    Floats are rejected: they have no place on an exact path.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def _frac_sqrt(x: Fraction) -> Fraction | None:
    """Exact square root of a non-negative rational, or None."""
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


class Poly:
    """Polynomial in the variables u and/or v with rational coefficients.

    Immutable after construction; no zero coefficients are stored.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[tuple[int, int], Fraction | int] | None = None):
        c: dict[tuple[int, int], Fraction] = {}
        if coeffs:
            for (i, j), val in coeffs.items():
                f = rat(val)
                if f:
                    c[(int(i), int(j))] = f
        for (i, j) in c:
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            if i + j > MAX_TOTAL_DEGREE:
                raise DegreeOverflow(f"total degree {i + j} exceeds cap {MAX_TOTAL_DEGREE}")
        self._c = c

    # -- constructors ------------------------------------------------

    @classmethod
    def const(cls, value) -> "Poly":
        return cls({(0, 0): rat(value)})

    @classmethod
    def var(cls, name: str) -> "Poly":
        if name == "u":
            return cls({(1, 0): 1})
        if name == "v":
            return cls({(0, 1): 1})
        raise ValueError(f"unknown variable {name!r} (only u and v exist)")

    @staticmethod
    def coerce(value) -> "Poly":
        if isinstance(value, Poly):
            return value
        return Poly.const(value)

    # -- structure ---------------------------------------------------

    def items(self):
        return self._c.items()

    def coefficient(self, i: int, j: int = 0) -> Fraction:
        return self._c.get((i, j), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self._c

    @property
    def is_constant(self) -> bool:
        return all(k == (0, 0) for k in self._c)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise EngineError(f"{self} is not constant")
        return self._c.get((0, 0), Fraction(0))

    def variables(self) -> frozenset[str]:
        vs = set()
        for (i, j) in self._c:
            if i:
                vs.add("u")
            if j:
                vs.add("v")
        return frozenset(vs)

    def total_degree(self) -> int:
        return max((i + j for (i, j) in self._c), default=0)

    def degree_in(self, name: str) -> int:
        k = _VAR_INDEX[name]
        return max((key[k] for key in self._c), default=0)

    # -- arithmetic --------------------------------------------------

    def __add__(self, other) -> "Poly":
        other = Poly.coerce(other)
        c = dict(self._c)
        for k, val in other._c.items():
            c[k] = c.get(k, Fraction(0)) + val
        return Poly(c)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({k: -v for k, v in self._c.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-Poly.coerce(other))

    def __rsub__(self, other) -> "Poly":
        return Poly.coerce(other) - self

    def __mul__(self, other) -> "Poly":
        other = Poly.coerce(other)
        c: dict[tuple[int, int], Fraction] = {}
        for (i1, j1), v1 in self._c.items():
            for (i2, j2), v2 in other._c.items():
                k = (i1 + i2, j1 + j2)
                c[k] = c.get(k, Fraction(0)) + v1 * v2
        return Poly(c)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power")
        out = Poly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    # -- evaluation and substitution ----------------------------------

    def eval(self, assign: Mapping[str, Fraction]) -> Fraction:
        """Exact evaluation; every variable of the polynomial must be bound."""
        missing = self.variables() - set(assign)
        if missing:
            raise MissingAssignment(f"unassigned variable(s): {', '.join(sorted(missing))}")
        u = rat(assign.get("u", 0))
        v = rat(assign.get("v", 0))
        total = Fraction(0)
        for (i, j), coef in self._c.items():
            total += coef * u**i * v**j
        return total

    def subs(self, name: str, replacement) -> "Poly":
        """Substitute a polynomial (or rational) for one variable."""
        repl = Poly.coerce(replacement)
        k = _VAR_INDEX[name]
        # Horner in the substituted variable.
        by_power: dict[int, dict[tuple[int, int], Fraction]] = {}
        for (i, j), coef in self._c.items():
            p = (i, j)[k]
            rest = (0, j) if k == 0 else (i, 0)
            by_power.setdefault(p, {})[rest] = coef
        if not by_power:
            return Poly()
        top = max(by_power)
        out = Poly()
        for p in range(top, -1, -1):
            out = out * repl + Poly(by_power.get(p, {}))
        return out

    def antiderivative(self, name: str) -> "Poly":
        k = _VAR_INDEX[name]
        c = {}
        for (i, j), coef in self._c.items():
            if k == 0:
                c[(i + 1, j)] = coef / (i + 1)
            else:
                c[(i, j + 1)] = coef / (j + 1)
        return Poly(c)

    def derivative(self, name: str) -> "Poly":
        k = _VAR_INDEX[name]
        c = {}
        for (i, j), coef in self._c.items():
            p = (i, j)[k]
            if p == 0:
                continue
            key = (i - 1, j) if k == 0 else (i, j - 1)
            c[key] = coef * p
        return Poly(c)

    def definite_integral(self, name: str, lo, hi) -> "Poly":
        """Integrate in one variable between bounds (rationals or polys
        in the other variable); result no longer involves ``name``."""
        anti = self.antiderivative(name)
        return anti.subs(name, Poly.coerce(hi)) - anti.subs(name, Poly.coerce(lo))

    # -- univariate views ---------------------------------------------

    def coeffs_in(self, name: str) -> list["Poly"]:
        """Coefficients of powers of ``name``, ascending, as polynomials
        in the other variable."""
        k = _VAR_INDEX[name]
        top = self.degree_in(name)
        out: list[dict[tuple[int, int], Fraction]] = [{} for _ in range(top + 1)]
        for (i, j), coef in self._c.items():
            p = (i, j)[k]
            rest = (0, j) if k == 0 else (i, 0)
            out[p][rest] = coef
        return [Poly(d) for d in out]

    def univariate(self) -> tuple[str, list[Fraction]]:
        """Return (variable, ascending coefficient list) for a polynomial
        in at most one variable; constants report as polynomials in u."""
        vs = self.variables()
        if len(vs) > 1:
            raise EngineError(f"{self} is not univariate")
        name = next(iter(vs)) if vs else "u"
        return name, [p.constant_value() for p in self.coeffs_in(name)]

    # -- presentation --------------------------------------------------

    def __str__(self) -> str:
        if not self._c:
            return "0"
        parts = []
        for (i, j) in sorted(self._c, key=lambda k: (k[0] + k[1], k)):
            coef = self._c[(i, j)]
            mono = "*".join(
                [f"u^{i}" if i > 1 else "u"] * (i > 0) + [f"v^{j}" if j > 1 else "v"] * (j > 0)
            )
            if not mono:
                parts.append(str(coef))
            elif coef == 1:
                parts.append(mono)
            elif coef == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{coef}*{mono}")
        text = " + ".join(parts).replace("+ -", "- ")
        return text

    __repr__ = __str__


ZERO = Poly()
ONE = Poly.const(1)
U = Poly.var("u")
V = Poly.var("v")


def poly_eval(p: Poly, at: Mapping[str, Fraction]) -> Fraction:
    """Evaluate a polynomial at an exact point (all variables bound)."""
    return p.eval(at)


def integrate_inner(p: Poly, lo, hi) -> Poly:
    """Integrate ``p`` in v between bounds that are polynomials in u.

    The result is the exact antiderivative in v evaluated between the
    bounds, a polynomial in u.
    """
    lo, hi = Poly.coerce(lo), Poly.coerce(hi)
    if "v" in lo.variables() or "v" in hi.variables():
        raise EngineError("integration bounds may involve u only")
    return p.definite_integral("v", lo, hi)


# ---------------------------------------------------------------------------
# Piecewise functions


@dataclass(frozen=True)
class Piece:
    lo: Poly
    hi: Poly
    value: Poly


class PiecewiseFn:
    """A function of one outer variable given by polynomial pieces.

    Pieces are ordered; endpoints are rationals (usual case for the outer
    integration variable) or polynomials in u (case splits in v whose
    bounds move with u).  Membership is half-open [lo, hi) except for the
    final piece, which is closed.
    """

    def __init__(self, var: str, pieces: Iterable[tuple]):
        if var not in _VAR_INDEX:
            raise ValueError(f"unknown variable {var!r}")
        self.var = var
        self.pieces: tuple[Piece, ...] = tuple(
            Piece(Poly.coerce(lo), Poly.coerce(hi), Poly.coerce(val)) for lo, hi, val in pieces
        )

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self):
        return len(self.pieces)

    def _numeric_spans(self) -> list[tuple[Fraction, Fraction]]:
        spans = []
        for piece in self.pieces:
            if not (piece.lo.is_constant and piece.hi.is_constant):
                raise BadPartition("piece endpoints are not numeric")
            spans.append((piece.lo.constant_value(), piece.hi.constant_value()))
        return spans

    def eval(self, x: Fraction, assign: Mapping[str, Fraction] | None = None) -> Fraction:
        """Evaluate at a point of the outer variable; extra assignments
        cover any parameter appearing in endpoints or values."""
        x = rat(x)
        assign = dict(assign or {})
        assign[self.var] = x
        for idx, piece in enumerate(self.pieces):
            lo = piece.lo.eval(assign)
            hi = piece.hi.eval(assign)
            last = idx == len(self.pieces) - 1
            if lo <= x < hi or (last and x == hi):
                return piece.value.eval(assign)
        raise BadPartition(f"{x} outside the covered range")

    def check_continuity(self) -> None:
        """Adjacent pieces must agree where they meet (exact identity)."""
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.hi != right.lo:
                raise BadPartition("pieces do not share endpoints")
            boundary = left.hi
            a = left.value.subs(self.var, boundary)
            b = right.value.subs(self.var, boundary)
            if a != b:
                raise BadPartition(
                    f"discontinuity at {boundary}: {left.value} vs {right.value}"
                )


def integrate_piecewise(f: PiecewiseFn) -> Fraction:
    """Exact integral of a piecewise polynomial over its covered span.

    The pieces must tile the span exactly: ordered, no gap, no overlap.
    """
    spans = f._numeric_spans()
    total = Fraction(0)
    prev_hi: Fraction | None = None
    for (lo, hi), piece in zip(spans, f.pieces):
        if hi < lo:
            raise BadPartition(f"inverted piece [{lo}, {hi}]")
        if prev_hi is not None and lo != prev_hi:
            kind = "gap" if lo > prev_hi else "overlap"
            raise BadPartition(f"{kind} between pieces at {prev_hi} vs {lo}")
        prev_hi = hi
        if piece.value.variables() - {f.var}:
            raise BadPartition("piece value involves a free parameter")
        anti = piece.value.antiderivative(f.var)
        total += anti.eval({f.var: hi}) - anti.eval({f.var: lo})
    return total


# ---------------------------------------------------------------------------
# Univariate root machinery (exact; Sturm chains detect irrational roots)


def _as_int_coeffs(coeffs: list[Fraction]) -> list[int]:
    lcm = 1
    for c in coeffs:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    return [int(c * lcm) for c in coeffs]


def _poly_divmod(num: list[Fraction], den: list[Fraction]):
    num = list(num)
    quot = [Fraction(0)] * max(len(num) - len(den) + 1, 0)
    while len(num) >= len(den) and any(num):
        while num and num[-1] == 0:
            num.pop()
        if len(num) < len(den):
            break
        factor = num[-1] / den[-1]
        shift = len(num) - len(den)
        quot[shift] = factor
        for k, d in enumerate(den):
            num[shift + k] -= factor * d
        num.pop()
    while num and num[-1] == 0:
        num.pop()
    return quot, num


def _poly_gcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a, b = list(a), list(b)
    while any(b):
        _, r = _poly_divmod(a, b)
        a, b = b, r
    if any(a):
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def _eval_coeffs(coeffs: list[Fraction], x: Fraction) -> Fraction:
    total = Fraction(0)
    for c in reversed(coeffs):
        total = total * x + c
    return total


def _derivative_coeffs(coeffs: list[Fraction]) -> list[Fraction]:
    return [c * k for k, c in enumerate(coeffs)][1:]


def _sturm_chain(coeffs: list[Fraction]) -> list[list[Fraction]]:
    chain = [list(coeffs), _derivative_coeffs(coeffs)]
    while any(chain[-1]):
        _, rem = _poly_divmod(chain[-2], chain[-1])
        if not any(rem):
            break
        chain.append([-c for c in rem])
    return chain


def _sign_changes(chain: list[list[Fraction]], x: Fraction) -> int:
    signs = []
    for coeffs in chain:
        val = _eval_coeffs(coeffs, x)
        if val:
            signs.append(1 if val > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _count_real_roots(coeffs: list[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots in (lo, hi] of a square-free poly
    with nonzero value at lo."""
    chain = _sturm_chain(coeffs)
    return _sign_changes(chain, lo) - _sign_changes(chain, hi)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.add(d)
            out.add(n // d)
        d += 1
    return sorted(out)


def _rational_candidates(int_coeffs: list[int]) -> list[Fraction]:
    # Rational root theorem on a polynomial with integer coefficients and
    # nonzero constant term.
    a0, an = int_coeffs[0], int_coeffs[-1]
    cands = set()
    for p in _divisors(a0):
        for q in _divisors(an):
            cands.add(Fraction(p, q))
            cands.add(Fraction(-p, q))
    return sorted(cands)


def _root_bound(coeffs: list[Fraction]) -> Fraction:
    # Cauchy bound: all real roots lie in [-M, M].
    lead = abs(coeffs[-1])
    m = max((abs(c) / lead for c in coeffs[:-1]), default=Fraction(0))
    return m + 1


def _poly_gcd_reduce(coeffs: list[Fraction]) -> list[Fraction]:
    """Square-free part coeffs / gcd(coeffs, coeffs')."""
    deriv = _derivative_coeffs(coeffs)
    g = _poly_gcd(coeffs, deriv)
    if len(g) <= 1:
        return list(coeffs)
    q, _ = _poly_divmod(coeffs, g)
    return q


def _trimmed_univariate(p: Poly) -> list[Fraction]:
    if p.is_zero:
        raise EngineError("root search on the zero polynomial")
    _, coeffs = p.univariate()
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def _all_rational_roots(coeffs: list[Fraction]) -> list[Fraction]:
    """Every rational root of a nonzero univariate coefficient list."""
    coeffs = list(coeffs)
    roots: set[Fraction] = set()
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
        roots.add(Fraction(0))
    if len(coeffs) == 2:
        roots.add(-coeffs[0] / coeffs[1])
    elif len(coeffs) > 2:
        sq = _poly_gcd_reduce(coeffs)
        if len(sq) == 2:
            roots.add(-sq[0] / sq[1])
        elif len(sq) == 3:
            c0, c1, c2 = sq
            s = _frac_sqrt(c1 * c1 - 4 * c0 * c2)
            if s is not None:
                roots.add((-c1 + s) / (2 * c2))
                roots.add((-c1 - s) / (2 * c2))
        else:
            for cand in _rational_candidates(_as_int_coeffs(sq)):
                if _eval_coeffs(sq, cand) == 0:
                    roots.add(cand)
    return sorted(roots)


def _irrational_part(coeffs: list[Fraction], roots: list[Fraction]) -> list[Fraction]:
    """Square-free part with all (known rational) roots divided out; what
    remains has only irrational real roots."""
    stripped = list(coeffs)
    while stripped and stripped[0] == 0:
        stripped.pop(0)
    leftover = _poly_gcd_reduce(stripped)
    for r in roots:
        if r == 0:
            continue
        quot, rem = _poly_divmod(leftover, [-r, Fraction(1)])
        if not any(rem):
            leftover = quot
    return leftover


def rational_roots(p: Poly, window: tuple[Fraction | None, Fraction | None]) -> list[Fraction]:
    """All rational roots of a univariate polynomial inside a closed
    window, sorted ascending.

    If the polynomial provably has a real root in the window that is not
    rational, exact chamber bookkeeping is impossible and
    IrrationalBreakpoint is raised.  A window endpoint of None stands for
    the corresponding Cauchy root bound.
    """
    coeffs = _trimmed_univariate(p)
    found = _all_rational_roots(coeffs)
    lo, hi = window
    bound = _root_bound(coeffs) if len(coeffs) > 1 else Fraction(1)
    lo_eff = rat(lo) if lo is not None else -bound - 1
    hi_eff = rat(hi) if hi is not None else bound + 1
    inside = [r for r in found if lo_eff <= r <= hi_eff]
    leftover = _irrational_part(coeffs, found)
    if len(leftover) > 1 and hi_eff > lo_eff:
        n = _count_real_roots(leftover, lo_eff, hi_eff)
        if n:
            raise IrrationalBreakpoint(
                f"{p} has {n} irrational root(s) inside [{lo_eff}, {hi_eff}]"
            )
    return inside


def rational_roots_tolerant(p: Poly, window) -> list[Fraction]:
    """Rational roots in a window without certifying the absence of
    irrational ones (for callers that tolerate them elsewhere)."""
    coeffs = _trimmed_univariate(p)
    lo, hi = window
    return [
        r
        for r in _all_rational_roots(coeffs)
        if (lo is None or r >= lo) and (hi is None or r <= hi)
    ]


def first_root_after(p: Poly, start: Fraction, *, strict: bool = True) -> Fraction | None:
    """Smallest real root of ``p`` greater than (or equal to) ``start``.

    Raises IrrationalBreakpoint when that first root exists but is not
    rational; returns None when no real root lies beyond ``start``.
    """
    coeffs = _trimmed_univariate(p)
    start = rat(start)
    if len(coeffs) <= 1:
        return None
    if not strict and _eval_coeffs(coeffs, start) == 0:
        return start
    found = _all_rational_roots(coeffs)
    beyond = [r for r in found if r > start]
    first_rational = min(beyond) if beyond else None
    leftover = _irrational_part(coeffs, found)
    if len(leftover) > 1:
        probe = first_rational if first_rational is not None else _root_bound(coeffs) + 1
        if probe > start and _count_real_roots(leftover, start, probe) > 0:
            raise IrrationalBreakpoint(f"first root of {p} beyond {start} is irrational")
    return first_rational


def has_root_inside(p: Poly, lo: Fraction, hi: Fraction) -> bool:
    """Exact test for a real root strictly inside (lo, hi)."""
    return count_real_roots_inside(p, lo, hi) > 0


def count_real_roots_inside(p: Poly, lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots strictly inside (lo, hi), exact."""
    coeffs = _trimmed_univariate(p)
    lo, hi = rat(lo), rat(hi)
    if len(coeffs) <= 1 or hi <= lo:
        return 0
    sq = _poly_gcd_reduce(coeffs)
    inside_rational = 0
    for r in _all_rational_roots(coeffs):
        quot, rem = _poly_divmod(sq, [-r, Fraction(1)])
        if not any(rem):
            sq = quot
            if lo < r < hi:
                inside_rational += 1
    irrational = _count_real_roots(sq, lo, hi) if len(sq) > 1 else 0
    return inside_rational + irrational


def sign_just_after(p: Poly, point: Fraction, limit: Fraction) -> int:
    """Sign of a univariate polynomial immediately to the right of a point.

    The sample is Sturm-certified to sit before the next real root, so the
    answer is exact, not heuristic.
    """
    coeffs = _trimmed_univariate(p)
    point, limit = rat(point), rat(limit)
    sq = _poly_gcd_reduce(coeffs)
    quot, rem = _poly_divmod(sq, [-point, Fraction(1)])
    if not any(rem):
        sq = quot
    step = (limit - point) if limit > point else Fraction(1)
    for _ in range(64):
        sample = point + step / 2
        val = _eval_coeffs(coeffs, sample)
        if val != 0 and (len(sq) <= 1 or _count_real_roots(sq, point, sample) == 0):
            return 1 if val > 0 else -1
        step /= 2
    raise EngineError(f"could not certify the sign of {p} just after {point}")


def poly_sqrt(p: Poly) -> Poly | None:
    """Exact square root of a univariate polynomial, or None."""
    if p.is_zero:
        return ZERO
    var, coeffs = p.univariate()
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg % 2:
        return None
    half = deg // 2
    lead = _frac_sqrt(coeffs[-1])
    if lead is None:
        return None
    q = [Fraction(0)] * (half + 1)
    q[half] = lead
    for k in range(half - 1, -1, -1):
        # coefficient of x^(k+half) in q^2 must match coeffs[k+half]
        acc = Fraction(0)
        for i in range(k + 1, half + 1):
            j = k + half - i
            if 0 <= j <= half and j > k:
                acc += q[i] * q[j]
        q[k] = (coeffs[k + half] - acc) / (2 * q[half])
    candidate = Poly({((i, 0) if var == "u" else (0, i)): c for i, c in enumerate(q) if c})
    if candidate * candidate == p:
        return candidate
    return None


def exact_div(num: Poly, den: Poly) -> Poly | None:
    """Exact division of univariate polynomials (same variable), or None."""
    if den.is_zero:
        return None
    if num.is_zero:
        return ZERO
    var_n, cn = num.univariate()
    var_d, cd = den.univariate()
    if den.is_constant:
        return num * (1 / den.constant_value())
    if num.is_constant:
        return None
    if var_n != var_d:
        return None
    quot, rem = _poly_divmod(cn, cd)
    if any(rem):
        return None
    key = (lambda i: (i, 0)) if var_n == "u" else (lambda i: (0, i))
    return Poly({key(i): c for i, c in enumerate(quot) if c})
