"""Declarative scenario files and the built-in registry.

A scenario file is line-oriented structured text with a version header
and eight sections.  All numbers are exact rationals written as p/q (or
integers); floats are rejected by construction.  Repeated items inside a
value are separated by '|'.

    deltaflag-scenario v1

    [lattice]
    name = family/flag-id
    notes = free-form description of the geometric setup
    ambient = H E
    surface.L = l1 l2

    [tensor]
    ambient = H.H.H: 1 | H.H.E: 0 | H.E.E: -6 | E.E.E: -30
    surface.L = l1.l1: 0 | l1.l2: 1 | l2.l2: 0

    [divisors]
    anticanonical = 4H - E
    flag_divisor = 2H - E
    divisor_discrepancy = 1
    tau = 2
    endpoint_vanishing = true
    restriction.L = H: l1 + l2 | E: 3l1 + 3l2
    flag_curve.L = l1
    curve_discrepancy.L = 1

    [candidates]
    ambient = Ecand: E @ f1
    surface.L =

    [mori]
    ambient = f1: 0 -1 | f2: 1 3
    surface.L = l1 | l2

    [flag]
    order = L
    points.L = generic

    [incidence]
    pullback_ord.L = Ecand: 0
    mult.L.generic = Ecand: 0
    different.L.generic = 0

    [expected]
    s_divisor = 37/44
    delta = 44/37

Unknown sections or keys are rejected, as are missing required ones.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ParseError, UnknownScenario, ValidationError
from .exactmath import rat
from .invariants import IncidenceTable, PointCase
from .lattice import CurveClass, DivisorClass, Lattice, RestrictionMap
from .zariski import NegativeCandidate

FORMAT_HEADER = "deltaflag-scenario v1"

BUILTIN_NAMES = (
    "coneQ-offVertex",
    "coneQ-vertex",
    "cusp",
    "eckardt",
    "nodal",
    "onE-offQ",
    "onE-onQ",
    "smoothQ-onQ",
    "smoothQ-onQ-andE",
)

_SECTIONS = (
    "lattice",
    "tensor",
    "divisors",
    "candidates",
    "mori",
    "flag",
    "incidence",
    "expected",
)

_EXPECTED_PATTERNS = (
    re.compile(r"^s_divisor$"),
    re.compile(r"^s_curve\.\w+$"),
    re.compile(r"^s_point\.\w+\.\w+$"),
    re.compile(r"^f\.\w+\.\w+$"),
    re.compile(r"^term\.divisor$"),
    re.compile(r"^term\.curve\.\w+$"),
    re.compile(r"^term\.point\.\w+\.\w+$"),
    re.compile(r"^delta$"),
)


@dataclass(frozen=True)
class CurveFlag:
    """One curve flag on (a blowup of) the flag divisor."""

    name: str
    surface: Lattice
    restriction: RestrictionMap
    curve: DivisorClass
    curve_discrepancy: Fraction
    candidates: tuple[NegativeCandidate, ...]
    nef: tuple[DivisorClass, ...]
    incidence: IncidenceTable


@dataclass(frozen=True)
class FlagScenario:
    """Complete declarative description of one flag computation."""

    name: str
    notes: str
    ambient: Lattice
    anticanonical: DivisorClass
    flag_divisor: DivisorClass
    divisor_discrepancy: Fraction
    tau: Fraction
    endpoint_vanishing: bool
    candidates: tuple[NegativeCandidate, ...]
    mori: tuple[CurveClass, ...]
    flags: tuple[CurveFlag, ...]
    expected: Mapping[str, Fraction]

    def flag(self, name: str) -> CurveFlag:
        for f in self.flags:
            if f.name == name:
                return f
        raise ValidationError(f"no flag named {name!r} in {self.name}")


# ---------------------------------------------------------------------------
# Raw parsing


_TERM_RE = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<coef>\d+(?:/\d+)?)?\s*\*?\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*$"
)


def _parse_rational(text: str, line: int) -> Fraction:
    try:
        return rat(text.strip())
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError(f"bad rational literal {text.strip()!r}", line) from None


def _parse_class_expr(text: str, lattice: Lattice, line: int) -> DivisorClass:
    coords = [Fraction(0)] * lattice.rank
    body = text.strip()
    if not body or body == "0":
        return lattice.divisor(coords)
    tokens = [t for t in re.findall(r"[+-]?\s*[^+-]+", body) if t.strip()]
    for token in tokens:
        m = _TERM_RE.match(token)
        if not m:
            raise ParseError(f"bad class term {token.strip()!r}", line)
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("sign") == "-":
            coef = -coef
        name = m.group("name")
        try:
            idx = lattice.index(name)
        except ValidationError:
            raise ParseError(f"unknown class name {name!r}", line) from None
        coords[idx] += coef
    return lattice.divisor(coords)


def _split_items(value: str) -> list[str]:
    return [item.strip() for item in value.split("|") if item.strip()]


class _RawFile:
    """Sections -> ordered key/value pairs with line numbers."""

    def __init__(self, text: str, origin: str = "<string>"):
        self.origin = origin
        self.sections: dict[str, dict[str, tuple[str, int]]] = {}
        header_seen = False
        section: str | None = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].rstrip()
            if not line.strip():
                continue
            if not header_seen:
                if line.strip() != FORMAT_HEADER:
                    raise ParseError(
                        f"first line must be {FORMAT_HEADER!r}", lineno
                    )
                header_seen = True
                continue
            if line.strip().startswith("["):
                name = line.strip()
                if not name.endswith("]"):
                    raise ParseError("unterminated section header", lineno)
                section = name[1:-1].strip()
                if section not in _SECTIONS:
                    raise ParseError(f"unknown section [{section}]", lineno)
                if section in self.sections:
                    raise ParseError(f"duplicate section [{section}]", lineno)
                self.sections[section] = {}
                continue
            if section is None:
                raise ParseError("content before the first section", lineno)
            if "=" not in line:
                raise ParseError("expected key = value", lineno)
            key, value = line.split("=", 1)
            key = key.strip()
            if key in self.sections[section]:
                raise ParseError(f"duplicate key {key!r} in [{section}]", lineno)
            self.sections[section][key] = (value.strip(), lineno)
        if not header_seen:
            raise ParseError(f"empty file; expected {FORMAT_HEADER!r} header", 1)
        missing = [s for s in _SECTIONS if s not in self.sections]
        if missing:
            raise ParseError(f"missing section(s): {', '.join(missing)}")

    def take(self, section: str, key: str, *, required: bool = True) -> tuple[str, int] | None:
        table = self.sections[section]
        if key not in table:
            if required:
                raise ParseError(f"missing key {key!r} in [{section}]")
            return None
        return table.pop(key)

    def leftovers(self) -> list[str]:
        out = []
        for section, table in self.sections.items():
            for key in table:
                out.append(f"[{section}] {key}")
        return out


# ---------------------------------------------------------------------------
# Building a scenario from the raw file


def _parse_tensor(value: str, basis: tuple[str, ...], line: int) -> dict:
    entries = {}
    for item in _split_items(value):
        if ":" not in item:
            raise ParseError(f"tensor entry {item!r} needs index: value", line)
        index_text, val_text = item.rsplit(":", 1)
        index = tuple(part.strip() for part in index_text.strip().split("."))
        for part in index:
            if part not in basis:
                raise ParseError(f"unknown basis name {part!r} in tensor", line)
        key = tuple(index)
        if key in entries:
            raise ParseError(f"duplicate tensor entry {index_text.strip()!r}", line)
        entries[key] = _parse_rational(val_text, line)
    return entries


def _build(raw: _RawFile) -> FlagScenario:
    name, _ = raw.take("lattice", "name")
    notes_kv = raw.take("lattice", "notes", required=False)
    notes = notes_kv[0] if notes_kv else ""
    ambient_basis_text, amb_line = raw.take("lattice", "ambient")
    ambient_basis = tuple(ambient_basis_text.split())

    tensor_text, tensor_line = raw.take("tensor", "ambient")
    try:
        ambient = Lattice(
            "ambient", ambient_basis, 3, _parse_tensor(tensor_text, ambient_basis, tensor_line)
        )
    except ValidationError as err:
        raise ValidationError(f"{name}: ambient lattice: {err}") from None

    flag_order_text, _ = raw.take("flag", "order")
    flag_names = tuple(flag_order_text.split())
    if len(set(flag_names)) != len(flag_names) or not flag_names:
        raise ValidationError(f"{name}: flag order must list distinct names")

    anticanonical = _take_class(raw, "divisors", "anticanonical", ambient)
    flag_divisor = _take_class(raw, "divisors", "flag_divisor", ambient)
    divisor_discrepancy = _take_rational(raw, "divisors", "divisor_discrepancy")
    tau = _take_rational(raw, "divisors", "tau")
    vanish_text, vanish_line = raw.take("divisors", "endpoint_vanishing")
    if vanish_text not in ("true", "false"):
        raise ParseError("endpoint_vanishing must be true or false", vanish_line)
    endpoint_vanishing = vanish_text == "true"
    if tau <= 0:
        raise ValidationError(f"{name}: tau must be positive")
    if divisor_discrepancy <= 0:
        raise ValidationError(f"{name}: divisor_discrepancy must be positive")

    mori_text, mori_line = raw.take("mori", "ambient")
    mori = []
    seen_curves = {}
    for item in _split_items(mori_text):
        if ":" not in item:
            raise ParseError(f"mori entry {item!r} needs name: pairings", mori_line)
        curve_name, numbers = item.split(":", 1)
        curve_name = curve_name.strip()
        pairing = [_parse_rational(x, mori_line) for x in numbers.split()]
        if len(pairing) != ambient.rank:
            raise ParseError(
                f"curve {curve_name}: expected {ambient.rank} pairing values", mori_line
            )
        curve = ambient.curve(curve_name, pairing)
        seen_curves[curve_name] = curve
        mori.append(curve)

    cand_text, cand_line = raw.take("candidates", "ambient")
    candidates = []
    for item in _split_items(cand_text):
        m = re.match(r"^(\w+)\s*:\s*(.+?)\s*@\s*(\w+)$", item)
        if not m:
            raise ParseError(
                f"ambient candidate {item!r} must be name: class @ curve", cand_line
            )
        cand_name, cls_text, detector_name = m.groups()
        if detector_name not in seen_curves:
            raise ValidationError(
                f"{name}: candidate {cand_name} detector {detector_name!r} is not a mori curve"
            )
        candidates.append(
            NegativeCandidate(
                cand_name,
                _parse_class_expr(cls_text, ambient, cand_line),
                seen_curves[detector_name],
            )
        )

    flags = []
    for flag_name in flag_names:
        flags.append(_build_flag(raw, name, flag_name, ambient))

    expected_table = dict(raw.sections["expected"])
    raw.sections["expected"] = {}
    expected: dict[str, Fraction] = {}
    for key, (value, line) in expected_table.items():
        if not any(p.match(key) for p in _EXPECTED_PATTERNS):
            raise ParseError(f"unknown expected key {key!r}", line)
        expected[key] = _parse_rational(value, line)

    leftovers = raw.leftovers()
    if leftovers:
        raise ParseError(f"unknown key(s): {', '.join(sorted(leftovers))}")

    scenario = FlagScenario(
        name=name,
        notes=notes,
        ambient=ambient,
        anticanonical=anticanonical,
        flag_divisor=flag_divisor,
        divisor_discrepancy=divisor_discrepancy,
        tau=tau,
        endpoint_vanishing=endpoint_vanishing,
        candidates=tuple(candidates),
        mori=tuple(mori),
        flags=tuple(flags),
        expected=expected,
    )
    _cross_validate(scenario)
    return scenario


def _take_class(raw: _RawFile, section: str, key: str, lattice: Lattice) -> DivisorClass:
    text, line = raw.take(section, key)
    return _parse_class_expr(text, lattice, line)


def _take_rational(raw: _RawFile, section: str, key: str) -> Fraction:
    text, line = raw.take(section, key)
    return _parse_rational(text, line)


def _build_flag(raw: _RawFile, scenario_name: str, flag_name: str, ambient: Lattice) -> CurveFlag:
    basis_text, basis_line = raw.take("lattice", f"surface.{flag_name}")
    basis = tuple(basis_text.split())
    tensor_text, tensor_line = raw.take("tensor", f"surface.{flag_name}")
    try:
        surface = Lattice(
            f"surface.{flag_name}", basis, 2, _parse_tensor(tensor_text, basis, tensor_line)
        )
    except ValidationError as err:
        raise ValidationError(f"{scenario_name}: flag {flag_name}: {err}") from None

    restr_text, restr_line = raw.take("divisors", f"restriction.{flag_name}")
    images: list[DivisorClass | None] = [None] * ambient.rank
    for item in _split_items(restr_text):
        if ":" not in item:
            raise ParseError(f"restriction entry {item!r} needs name: class", restr_line)
        src, expr = item.split(":", 1)
        idx = ambient.index(src.strip())
        if images[idx] is not None:
            raise ParseError(f"duplicate restriction image for {src.strip()!r}", restr_line)
        images[idx] = _parse_class_expr(expr, surface, restr_line)
    if any(img is None for img in images):
        missing = [ambient.basis[i] for i, img in enumerate(images) if img is None]
        raise ParseError(
            f"restriction.{flag_name} lacks image(s) for {', '.join(missing)}", restr_line
        )
    restriction = RestrictionMap(ambient, surface, tuple(images))

    curve = _take_class(raw, "divisors", f"flag_curve.{flag_name}", surface)
    curve_discrepancy = _take_rational(raw, "divisors", f"curve_discrepancy.{flag_name}")
    if curve_discrepancy <= 0:
        raise ValidationError(
            f"{scenario_name}: flag {flag_name}: curve_discrepancy must be positive"
        )

    cand_text, cand_line = raw.take("candidates", f"surface.{flag_name}")
    flag_candidates = []
    for item in _split_items(cand_text):
        if ":" not in item:
            raise ParseError(f"surface candidate {item!r} must be name: class", cand_line)
        cand_name, cls_text = item.split(":", 1)
        flag_candidates.append(
            NegativeCandidate(
                cand_name.strip(), _parse_class_expr(cls_text, surface, cand_line)
            )
        )

    nef_text, nef_line = raw.take("mori", f"surface.{flag_name}")
    nef = tuple(
        _parse_class_expr(item, surface, nef_line) for item in _split_items(nef_text)
    )

    points_text, _ = raw.take("flag", f"points.{flag_name}")
    point_names = tuple(points_text.split())
    if len(set(point_names)) != len(point_names) or not point_names:
        raise ValidationError(
            f"{scenario_name}: flag {flag_name}: point cases must be distinct and nonempty"
        )

    ord_text, ord_line = raw.take("incidence", f"pullback_ord.{flag_name}")
    pullback_ord = _parse_assignments(ord_text, ord_line)

    cases = []
    for point in point_names:
        mult_text, mult_line = raw.take("incidence", f"mult.{flag_name}.{point}")
        different = _take_rational(raw, "incidence", f"different.{flag_name}.{point}")
        cases.append(
            PointCase(
                name=point,
                different_order=different,
                mults=_parse_assignments(mult_text, mult_line),
            )
        )

    incidence = IncidenceTable(pullback_ord=pullback_ord, points=tuple(cases))
    return CurveFlag(
        name=flag_name,
        surface=surface,
        restriction=restriction,
        curve=curve,
        curve_discrepancy=curve_discrepancy,
        candidates=tuple(flag_candidates),
        nef=nef,
        incidence=incidence,
    )


def _parse_assignments(text: str, line: int) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for item in _split_items(text):
        if ":" not in item:
            raise ParseError(f"assignment {item!r} needs name: value", line)
        key, value = item.split(":", 1)
        key = key.strip()
        if key in out:
            raise ParseError(f"duplicate assignment for {key!r}", line)
        out[key] = _parse_rational(value, line)
    return out


def _cross_validate(scenario: FlagScenario) -> None:
    candidate_names = {c.name for c in scenario.candidates}
    for flag in scenario.flags:
        flag_cand_names = {c.name for c in flag.candidates}
        overlap = candidate_names & flag_cand_names
        if overlap:
            raise ValidationError(
                f"{scenario.name}: flag {flag.name}: candidate name(s) {sorted(overlap)} "
                "collide with ambient candidates"
            )
        known = candidate_names | flag_cand_names
        for key in flag.incidence.pullback_ord:
            if key not in candidate_names:
                raise ValidationError(
                    f"{scenario.name}: pullback_ord names unknown ambient candidate {key!r}"
                )
        for case in flag.incidence.points:
            for key in case.mults:
                if key not in known:
                    raise ValidationError(
                        f"{scenario.name}: point {case.name} names unknown candidate {key!r}"
                    )
    for key in scenario.expected:
        parts = key.split(".")
        if len(parts) >= 2 and parts[0] in ("s_curve", "s_point", "f") and parts[1] not in {
            f.name for f in scenario.flags
        }:
            raise ValidationError(f"{scenario.name}: expected key {key!r} names unknown flag")


# ---------------------------------------------------------------------------
# Public API


def load_scenario(source: str | Path) -> FlagScenario:
    """Load and validate a scenario from a file path."""
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from None
    return parse_scenario(text, origin=str(path))


def parse_scenario(text: str, origin: str = "<string>") -> FlagScenario:
    """Parse scenario text; raises ParseError / ValidationError."""
    return _build(_RawFile(text, origin))


def builtin(name: str) -> FlagScenario:
    """One of the shipped scenarios, by short name."""
    if name not in BUILTIN_NAMES:
        raise UnknownScenario(
            f"unknown scenario {name!r}; known: {', '.join(BUILTIN_NAMES)}"
        )
    text = resources.files("deltaflag").joinpath(f"data/{name}.scenario").read_text()
    return parse_scenario(text, origin=f"builtin:{name}")


def builtin_path(name: str) -> Path:
    """Filesystem path of a shipped scenario file."""
    if name not in BUILTIN_NAMES:
        raise UnknownScenario(f"unknown scenario {name!r}")
    return Path(str(resources.files("deltaflag").joinpath(f"data/{name}.scenario")))


def serialize(scenario: FlagScenario) -> str:
    """Canonical text form; load(serialize(s)) == s."""
    out = [FORMAT_HEADER, ""]

    def frac(x: Fraction) -> str:
        return str(x)

    def tensor_text(lat: Lattice) -> str:
        items = []
        for index, value in sorted(lat.form_entries().items()):
            label = ".".join(lat.basis[i] for i in index)
            items.append(f"{label}: {frac(value)}")
        return " | ".join(items)

    out.append("[lattice]")
    out.append(f"name = {scenario.name}")
    if scenario.notes:
        out.append(f"notes = {scenario.notes}")
    out.append(f"ambient = {' '.join(scenario.ambient.basis)}")
    for flag in scenario.flags:
        out.append(f"surface.{flag.name} = {' '.join(flag.surface.basis)}")
    out.append("")
    out.append("[tensor]")
    out.append(f"ambient = {tensor_text(scenario.ambient)}")
    for flag in scenario.flags:
        out.append(f"surface.{flag.name} = {tensor_text(flag.surface)}")
    out.append("")
    out.append("[divisors]")
    out.append(f"anticanonical = {scenario.anticanonical.describe()}")
    out.append(f"flag_divisor = {scenario.flag_divisor.describe()}")
    out.append(f"divisor_discrepancy = {frac(scenario.divisor_discrepancy)}")
    out.append(f"tau = {frac(scenario.tau)}")
    out.append(f"endpoint_vanishing = {'true' if scenario.endpoint_vanishing else 'false'}")
    for flag in scenario.flags:
        images = " | ".join(
            f"{src}: {img.describe()}"
            for src, img in zip(scenario.ambient.basis, flag.restriction.images)
        )
        out.append(f"restriction.{flag.name} = {images}")
        out.append(f"flag_curve.{flag.name} = {flag.curve.describe()}")
        out.append(f"curve_discrepancy.{flag.name} = {frac(flag.curve_discrepancy)}")
    out.append("")
    out.append("[candidates]")
    out.append(
        "ambient = "
        + " | ".join(
            f"{c.name}: {c.cls.describe()} @ {c.detector.name}" for c in scenario.candidates
        )
    )
    for flag in scenario.flags:
        out.append(
            f"surface.{flag.name} = "
            + " | ".join(f"{c.name}: {c.cls.describe()}" for c in flag.candidates)
        )
    out.append("")
    out.append("[mori]")
    out.append(
        "ambient = "
        + " | ".join(
            f"{c.name}: {' '.join(frac(x) for x in c.pairing)}" for c in scenario.mori
        )
    )
    for flag in scenario.flags:
        out.append(
            f"surface.{flag.name} = " + " | ".join(d.describe() for d in flag.nef)
        )
    out.append("")
    out.append("[flag]")
    out.append(f"order = {' '.join(f.name for f in scenario.flags)}")
    for flag in scenario.flags:
        out.append(
            f"points.{flag.name} = " + " ".join(p.name for p in flag.incidence.points)
        )
    out.append("")
    out.append("[incidence]")
    for flag in scenario.flags:
        ords = " | ".join(
            f"{k}: {frac(v)}" for k, v in sorted(flag.incidence.pullback_ord.items())
        )
        out.append(f"pullback_ord.{flag.name} = {ords}")
        for case in flag.incidence.points:
            mults = " | ".join(f"{k}: {frac(v)}" for k, v in sorted(case.mults.items()))
            out.append(f"mult.{flag.name}.{case.name} = {mults}")
            out.append(f"different.{flag.name}.{case.name} = {frac(case.different_order)}")
    out.append("")
    out.append("[expected]")
    for key in sorted(scenario.expected):
        out.append(f"{key} = {frac(scenario.expected[key])}")
    out.append("")
    return "\n".join(out)
