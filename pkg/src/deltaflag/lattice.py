"""Lattices with a rational symmetric multilinear intersection form.

A degree-3 lattice models the Neron-Severi group of a threefold, a
degree-2 lattice a surface.  Divisor classes are coordinate vectors in a
chosen basis; parametric families carry polynomial coordinates.  Curve
classes on threefolds are primitive data: a declared pairing vector
against the basis divisors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import LatticeMismatch, ValidationError
from .exactmath import Poly, rat


def _canonical(index: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(index))


class Lattice:
    """Rank-n lattice with a symmetric degree-d form, d in {2, 3}."""

    def __init__(
        self,
        name: str,
        basis: Sequence[str],
        degree: int,
        entries: Mapping[Sequence[str] | Sequence[int], Fraction | int | str],
    ):
        if degree not in (2, 3):
            raise ValidationError(f"degree must be 2 or 3, got {degree}")
        if len(set(basis)) != len(basis) or not basis:
            raise ValidationError(f"basis names must be distinct and nonempty: {basis}")
        self.name = name
        self.basis = tuple(basis)
        self.degree = degree
        form: dict[tuple[int, ...], Fraction] = {}
        for raw_index, value in entries.items():
            index = tuple(
                self.index(b) if isinstance(b, str) else int(b) for b in raw_index
            )
            if len(index) != degree:
                raise ValidationError(f"form entry {raw_index} has {len(index)} factors")
            key = _canonical(index)
            val = rat(value)
            if key in form and form[key] != val:
                raise ValidationError(
                    f"conflicting values for symmetric entry {raw_index}: "
                    f"{form[key]} vs {val}"
                )
            form[key] = val
        expected = {
            _canonical(ix)
            for ix in itertools.combinations_with_replacement(range(len(self.basis)), degree)
        }
        missing = expected - set(form)
        if missing:
            names = ["*".join(self.basis[i] for i in ix) for ix in sorted(missing)]
            raise ValidationError(f"missing form entries: {', '.join(names)}")
        self._form = form

    @property
    def rank(self) -> int:
        return len(self.basis)

    def index(self, name: str) -> int:
        try:
            return self.basis.index(name)
        except ValueError:
            raise ValidationError(f"{name!r} is not a basis element of {self.name}") from None

    def form_entry(self, index: Sequence[int]) -> Fraction:
        return self._form[_canonical(index)]

    def form_entries(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._form)

    def divisor(self, coords: Sequence) -> "DivisorClass":
        return DivisorClass(self, tuple(rat(c) for c in coords))

    def param_divisor(self, coords: Sequence) -> "ParamDivisor":
        return ParamDivisor(self, tuple(Poly.coerce(c) for c in coords))

    def basis_divisor(self, name: str) -> "DivisorClass":
        coords = [Fraction(0)] * self.rank
        coords[self.index(name)] = Fraction(1)
        return self.divisor(coords)

    def curve(self, name: str, pairing: Sequence) -> "CurveClass":
        return CurveClass(self, name, tuple(rat(c) for c in pairing))

    def zero(self) -> "DivisorClass":
        return self.divisor([0] * self.rank)

    def __eq__(self, other):
        return (
            isinstance(other, Lattice)
            and self.name == other.name
            and self.basis == other.basis
            and self.degree == other.degree
            and self._form == other._form
        )

    def __repr__(self):
        return f"Lattice({self.name}, basis={self.basis}, degree={self.degree})"


def _same_lattice(*objs) -> Lattice:
    lattice = objs[0].lattice
    for o in objs[1:]:
        if o.lattice is not lattice and o.lattice != lattice:
            raise LatticeMismatch(f"{o} does not live on {lattice.name}")
    return lattice


@dataclass(frozen=True)
class DivisorClass:
    lattice: Lattice
    coords: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coords) != self.lattice.rank:
            raise ValidationError(
                f"expected {self.lattice.rank} coordinates, got {len(self.coords)}"
            )

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        _same_lattice(self, other)
        return DivisorClass(self.lattice, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        _same_lattice(self, other)
        return DivisorClass(self.lattice, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def scaled(self, factor) -> "DivisorClass":
        f = rat(factor)
        return DivisorClass(self.lattice, tuple(f * c for c in self.coords))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def as_param(self) -> "ParamDivisor":
        return ParamDivisor(self.lattice, tuple(Poly.const(c) for c in self.coords))

    def describe(self) -> str:
        parts = []
        for c, b in zip(self.coords, self.lattice.basis):
            if c == 0:
                continue
            if c == 1:
                parts.append(b)
            elif c == -1:
                parts.append(f"-{b}")
            else:
                parts.append(f"{c}*{b}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


@dataclass(frozen=True)
class ParamDivisor:
    """Divisor class whose coordinates are polynomials in u (and v)."""

    lattice: Lattice
    coords: tuple[Poly, ...]

    def __post_init__(self):
        if len(self.coords) != self.lattice.rank:
            raise ValidationError(
                f"expected {self.lattice.rank} coordinates, got {len(self.coords)}"
            )

    def __add__(self, other: "ParamDivisor") -> "ParamDivisor":
        _same_lattice(self, other)
        return ParamDivisor(self.lattice, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "ParamDivisor") -> "ParamDivisor":
        _same_lattice(self, other)
        return ParamDivisor(self.lattice, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def scaled(self, factor) -> "ParamDivisor":
        f = Poly.coerce(factor)
        return ParamDivisor(self.lattice, tuple(f * c for c in self.coords))

    def at(self, assign: Mapping[str, Fraction]) -> DivisorClass:
        assign = {k: rat(v) for k, v in assign.items()}
        full = {"u": assign.get("u", Fraction(0)), "v": assign.get("v", Fraction(0))}
        full.update(assign)
        return DivisorClass(self.lattice, tuple(c.eval(full) for c in self.coords))

    def subs(self, name: str, replacement) -> "ParamDivisor":
        return ParamDivisor(self.lattice, tuple(c.subs(name, replacement) for c in self.coords))

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.coords:
            out |= c.variables()
        return frozenset(out)

    def describe(self) -> str:
        parts = []
        for c, b in zip(self.coords, self.lattice.basis):
            if c.is_zero:
                continue
            if c == Poly.const(1):
                parts.append(b)
            elif c.is_constant or len(c.items()) == 1:
                parts.append(f"{c}*{b}")
            else:
                parts.append(f"({c})*{b}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


@dataclass(frozen=True)
class CurveClass:
    """A 1-cycle known only through its pairing with the basis divisors."""

    lattice: Lattice
    name: str
    pairing: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.pairing) != self.lattice.rank:
            raise ValidationError(
                f"curve {self.name}: expected {self.lattice.rank} pairing values"
            )


def intersect(*classes: DivisorClass) -> Fraction:
    """Multilinear evaluation of the form on degree-many divisor classes."""
    lattice = _same_lattice(*classes)
    if len(classes) != lattice.degree:
        raise LatticeMismatch(
            f"{lattice.name} needs {lattice.degree} factors, got {len(classes)}"
        )
    total = Fraction(0)
    for index in itertools.product(range(lattice.rank), repeat=lattice.degree):
        coef = Fraction(1)
        for cls, i in zip(classes, index):
            coef *= cls.coords[i]
            if coef == 0:
                break
        if coef:
            total += coef * lattice.form_entry(index)
    return total


def intersect_curve(div: DivisorClass, curve: CurveClass) -> Fraction:
    """Linear pairing of a divisor with a declared curve class."""
    _same_lattice(div, curve)
    return sum((c * p for c, p in zip(div.coords, curve.pairing)), Fraction(0))


def param_intersect(*classes: DivisorClass | ParamDivisor) -> Poly:
    """Form evaluation with polynomial coordinates; degree-many factors."""
    promoted = [c.as_param() if isinstance(c, DivisorClass) else c for c in classes]
    lattice = _same_lattice(*promoted)
    if len(promoted) != lattice.degree:
        raise LatticeMismatch(
            f"{lattice.name} needs {lattice.degree} factors, got {len(promoted)}"
        )
    total = Poly()
    for index in itertools.product(range(lattice.rank), repeat=lattice.degree):
        entry = lattice.form_entry(index)
        if entry == 0:
            continue
        term = Poly.const(entry)
        for cls, i in zip(promoted, index):
            term = term * cls.coords[i]
            if term.is_zero:
                break
        total = total + term
    return total


def param_pair(div: DivisorClass | ParamDivisor, curve: CurveClass) -> Poly:
    """Pairing of a parametric divisor with a curve class, as a polynomial."""
    promoted = div.as_param() if isinstance(div, DivisorClass) else div
    _same_lattice(promoted, curve)
    total = Poly()
    for c, p in zip(promoted.coords, curve.pairing):
        total = total + c * p
    return total


def curve_from_divisor(div: DivisorClass, name: str | None = None) -> CurveClass:
    """View a surface divisor class as the curve it is: pairing vector
    obtained from the degree-2 form."""
    lattice = div.lattice
    if lattice.degree != 2:
        raise LatticeMismatch("only surface classes can be viewed as curves")
    pairing = [
        sum((div.coords[j] * lattice.form_entry((i, j)) for j in range(lattice.rank)), Fraction(0))
        for i in range(lattice.rank)
    ]
    return CurveClass(lattice, name or div.describe(), tuple(pairing))


@dataclass(frozen=True)
class RestrictionMap:
    """Declared linear map from ambient coordinates to surface coordinates.

    Restrictions are geometric identifications the lattice cannot infer, so
    each scenario states the image of every ambient basis class explicitly.
    """

    source: Lattice
    target: Lattice
    images: tuple[DivisorClass, ...]

    def __post_init__(self):
        if len(self.images) != self.source.rank:
            raise ValidationError("one image per ambient basis class is required")
        for img in self.images:
            if img.lattice != self.target:
                raise LatticeMismatch("restriction image on the wrong lattice")

    def apply(self, div: DivisorClass | ParamDivisor) -> ParamDivisor:
        promoted = div.as_param() if isinstance(div, DivisorClass) else div
        if promoted.lattice != self.source:
            raise LatticeMismatch("restriction applied to a class on the wrong lattice")
        coords = [Poly() for _ in range(self.target.rank)]
        for coef, image in zip(promoted.coords, self.images):
            for k in range(self.target.rank):
                coords[k] = coords[k] + coef * image.coords[k]
        return ParamDivisor(self.target, tuple(coords))
