"""Power reports, five-sample expansion, component-to-unit mapping and the
``.ptrace`` format.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field

from ._fmt import fmt_float
from .errors import (IncompleteTriple, MappingNotFound, OrderViolation, ParseError,
                     RowLengthMismatch, UnknownComponent, UnknownUnit)
from .floorplan import SUBUNIT_KINDS, Floorplan

SAMPLES_PER_COMPONENT = 5


class MeanNotPreserved(UserWarning):
    """The interpolated samples had to be clamped at zero, so the sample mean exceeds avg."""


class UnmappedComponent(UserWarning):
    pass


@dataclass(frozen=True)
class ComponentPower:
    component: str
    min_W: float
    avg_W: float
    max_W: float

    def __post_init__(self):
        vals = (self.min_W, self.avg_W, self.max_W)
        if not all(math.isfinite(v) for v in vals) or not (0 <= self.min_W <= self.avg_W <= self.max_W):
            raise OrderViolation(self.component, vals)


@dataclass(frozen=True)
class PowerReport:
    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        names = [e.component for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("component names must be distinct")

    def __getitem__(self, component):
        for e in self.entries:
            if e.component == component:
                return e
        raise KeyError(component)

    @property
    def components(self):
        return [e.component for e in self.entries]


_TRIPLE_KEY = re.compile(r"^gpu_(min|avg|max)_(\S+)$")


def _parse_float(token, lineno):
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", lineno) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {token!r}", lineno)
    return v


def parse_power_report(text: str) -> PowerReport:
    """Parse ``C = min avg max`` lines and/or ``gpu_{min,avg,max}_C = x`` keys."""
    triples = {}  # component -> [values, first line]
    partial = {}  # component -> ({kind: value}, first line)
    order = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected '<component> = <values>', got {raw.strip()!r}", lineno)
        key, _, rhs = line.partition("=")
        key = key.strip()
        values = rhs.split()
        if not key or len(key.split()) != 1:
            raise ParseError(f"bad component name {key!r}", lineno)
        m = _TRIPLE_KEY.match(key)
        if m and len(values) == 1:
            kind, comp = m.groups()
            if comp in triples:
                raise ParseError(f"component {comp!r} given twice", lineno)
            slots, _ = partial.setdefault(comp, ({}, lineno))
            if kind in slots:
                raise ParseError(f"duplicate gpu_{kind}_{comp}", lineno)
            slots[kind] = _parse_float(values[0], lineno)
            if comp not in order:
                order.append(comp)
            continue
        if len(values) != 3:
            raise ParseError(f"expected 3 values (min avg max), got {len(values)}", lineno)
        if key in triples or key in partial:
            raise ParseError(f"component {key!r} given twice", lineno)
        triples[key] = ([_parse_float(v, lineno) for v in values], lineno)
        order.append(key)
    entries = []
    for comp in order:
        if comp in triples:
            vals, lineno = triples[comp]
        else:
            slots, lineno = partial[comp]
            if len(slots) != 3:
                raise IncompleteTriple(comp, lineno)
            vals = [slots["min"], slots["avg"], slots["max"]]
        if not (0 <= vals[0] <= vals[1] <= vals[2]):
            raise OrderViolation(comp, tuple(vals), lineno)
        entries.append(ComponentPower(comp, *vals))
    return PowerReport(entries)


def serialize_power_report(report: PowerReport) -> str:
    return "".join(
        f"{e.component} = {fmt_float(e.min_W)} {fmt_float(e.avg_W)} {fmt_float(e.max_W)}\n"
        for e in report.entries
    )


def expand_samples(min_W: float, avg_W: float, max_W: float):
    """Return ``([min, v, avg, v, max], warning)`` with ``v`` chosen so the
    five samples average to ``avg``.  ``warning`` is None unless ``v`` had to
    be clamped at zero.
    """
    v = (4.0 * avg_W - min_W - max_W) / 2.0
    warning = None
    if v < 0:
        warning = MeanNotPreserved(
            f"min={min_W}, avg={avg_W}, max={max_W}: interpolated sample {v} clamped to 0")
        v = 0.0
    return [min_W, v, avg_W, v, max_W], warning


# --- component mapping --------------------------------------------------------

@dataclass(frozen=True)
class UnitTarget:
    unit: str


@dataclass(frozen=True)
class PerSMTarget:
    kind: str

    def __post_init__(self):
        if self.kind not in SUBUNIT_KINDS:
            raise ValueError(f"unknown SM sub-unit kind {self.kind!r}")


@dataclass(frozen=True)
class SplitTarget:
    weights: tuple  # ((unit, weight), ...)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple((u, float(w)) for u, w in self.weights))
        if not self.weights:
            raise ValueError("split target needs at least one unit")
        if any(w < 0 for _, w in self.weights):
            raise ValueError("split weights must be >= 0")
        if abs(sum(w for _, w in self.weights) - 1.0) > 1e-12:
            raise ValueError("split weights must sum to 1")


DEFAULT_TARGET = PerSMTarget("EXE")


@dataclass(frozen=True)
class ComponentMapping:
    """Routes report components to floorplan units.

    Resolution order: explicit rule, then a component named ``<UNIT>P`` goes
    to unit ``<UNIT>``, then ``default_target`` (None disables the fallback).
    """
    rules: dict = field(default_factory=dict)
    default_target: object = DEFAULT_TARGET

    def resolve(self, component: str, unit_names):
        if component in self.rules:
            return self.rules[component]
        if component.endswith("P") and component[:-1] in unit_names:
            return UnitTarget(component[:-1])
        return None


def default_mapping(fp0: Floorplan) -> ComponentMapping:
    drams = [u.name for u in fp0.powered_units() if u.name.startswith("DRAM")]
    rules = {}
    for comp in ("RFP",):
        rules[comp] = PerSMTarget("RF")
    for comp in ("SHRDP", "DCP", "CCP", "TCP", "ICP", "IBP"):
        rules[comp] = PerSMTarget("L1SHM")
    for comp in ("FPUP", "SPP", "PIPEP", "IDLE_COREP", "CONSTP"):
        rules[comp] = PerSMTarget("EXE")
    rules["SCHEDP"] = PerSMTarget("SCHED")
    for comp in ("SFUP", "LDSTP"):
        rules[comp] = PerSMTarget("LDST")
    for comp in ("L2CP", "MCP", "NOCP"):
        rules[comp] = UnitTarget("L2")
    if drams:
        w = 1.0 / len(drams)
        rules["DRAMP"] = SplitTarget(tuple((d, w) for d in drams))
    return ComponentMapping(rules)


def _target_text(t) -> str:
    if t is None:
        return "none"
    if isinstance(t, UnitTarget):
        return f"unit {t.unit}"
    if isinstance(t, PerSMTarget):
        return f"per_sm {t.kind}"
    return "split " + " ".join(f"{u}={fmt_float(w)}" for u, w in t.weights)


def _parse_target(spec: str, lineno):
    parts = spec.split()
    if not parts:
        raise ParseError("missing target", lineno)
    head, args = parts[0], parts[1:]
    try:
        if head == "none" and not args:
            return None
        if head == "unit" and len(args) == 1:
            return UnitTarget(args[0])
        if head == "per_sm" and len(args) == 1:
            return PerSMTarget(args[0])
        if head == "split" and args:
            weights = []
            for a in args:
                unit, sep, w = a.partition("=")
                if not sep:
                    raise ValueError(f"expected UNIT=WEIGHT, got {a!r}")
                weights.append((unit, float(w)))
            return SplitTarget(tuple(weights))
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    raise ParseError(f"bad target {spec!r}", lineno)


def parse_mapping(text: str) -> ComponentMapping:
    """Lines ``<component> -> <target>``; ``default -> <target>`` sets the fallback."""
    rules = {}
    default = DEFAULT_TARGET
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        comp, sep, target = line.partition("->")
        comp = comp.strip()
        if not sep or not comp or len(comp.split()) != 1:
            raise ParseError(f"expected '<component> -> <target>', got {raw.strip()!r}", lineno)
        parsed = _parse_target(target.strip(), lineno)
        if comp == "default":
            default = parsed
        elif parsed is None:
            raise ParseError("'none' is only valid for the default target", lineno)
        else:
            rules[comp] = parsed
    return ComponentMapping(rules, default)


def serialize_mapping(mapping: ComponentMapping) -> str:
    lines = [f"default -> {_target_text(mapping.default_target)}"]
    lines += [f"{c} -> {_target_text(t)}" for c, t in mapping.rules.items()]
    return "\n".join(lines) + "\n"


def load_mapping(path) -> ComponentMapping:
    try:
        with open(path) as f:
            return parse_mapping(f.read())
    except FileNotFoundError:
        raise MappingNotFound(f"mapping file not found: {path}") from None


# --- power traces -------------------------------------------------------------

@dataclass(frozen=True)
class PowerTrace:
    unit_names: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "unit_names", tuple(self.unit_names))
        object.__setattr__(self, "rows", tuple(tuple(float(v) for v in r) for r in self.rows))
        n = len(self.unit_names)
        for k, r in enumerate(self.rows):
            if len(r) != n:
                raise RowLengthMismatch(f"row {k} has {len(r)} values, expected {n}")
            if any(not (v >= 0) or not math.isfinite(v) for v in r):
                raise ValueError(f"row {k} has negative or non-finite power")

    def column(self, unit):
        i = self.unit_names.index(unit)
        return [r[i] for r in self.rows]

    def mean_powers(self) -> dict:
        if not self.rows:
            return {u: 0.0 for u in self.unit_names}
        n = len(self.rows)
        return {u: math.fsum(r[i] for r in self.rows) / n for i, u in enumerate(self.unit_names)}


def _target_weights(target, sm_units):
    if isinstance(target, UnitTarget):
        return [(target.unit, 1.0)]
    if isinstance(target, PerSMTarget):
        units = sm_units[target.kind]
        if not units:
            raise UnknownUnit(f"no SM sub-units of kind {target.kind} in the floorplan")
        share = 1.0 / len(units)
        return [(u, share) for u in units]
    return list(target.weights)


def map_to_units(report: PowerReport, mapping: ComponentMapping,
                 fp0: Floorplan, fp2: Floorplan) -> PowerTrace:
    names = [u.name for u in fp0.powered_units()] + [u.name for u in fp2.powered_units()]
    index = {n: i for i, n in enumerate(names)}
    sm_pattern = re.compile(r"^SM(\d+)_(\w+)$")
    sm_units = {k: [] for k in SUBUNIT_KINDS}
    for n in names:
        m = sm_pattern.match(n)
        if m and m.group(2) in sm_units:
            sm_units[m.group(2)].append(n)

    rows = [[0.0] * len(names) for _ in range(SAMPLES_PER_COMPONENT)]
    for entry in report.entries:
        target = mapping.resolve(entry.component, index)
        if target is None:
            if mapping.default_target is None:
                raise UnknownComponent(f"no mapping for component {entry.component!r}")
            warnings.warn(f"component {entry.component!r} unmapped; using "
                          f"{_target_text(mapping.default_target)}", UnmappedComponent, stacklevel=2)
            target = mapping.default_target
        weights = _target_weights(target, sm_units)
        for unit, _ in weights:
            if unit not in index:
                raise UnknownUnit(f"component {entry.component!r} targets unknown unit {unit!r}")
        samples, warning = expand_samples(entry.min_W, entry.avg_W, entry.max_W)
        if warning is not None:
            warnings.warn(f"{entry.component}: {warning}", MeanNotPreserved, stacklevel=2)
        for k, s in enumerate(samples):
            row = rows[k]
            for unit, w in weights:
                row[index[unit]] += s * w
    return PowerTrace(names, rows)


def serialize_ptrace(trace: PowerTrace) -> str:
    lines = ["\t".join(trace.unit_names)]
    lines += ["\t".join(fmt_float(v) for v in row) for row in trace.rows]
    return "\n".join(lines) + "\n"


def parse_ptrace(text: str) -> PowerTrace:
    lines = [(n, raw) for n, raw in enumerate(text.splitlines(), start=1) if raw.strip()]
    if not lines:
        raise ParseError("empty ptrace: missing header line", 1)
    names = lines[0][1].split()
    if len(set(names)) != len(names):
        raise ParseError("duplicate unit names in header", lines[0][0])
    rows = []
    for lineno, raw in lines[1:]:
        fields = raw.split()
        if len(fields) != len(names):
            raise RowLengthMismatch(f"{len(fields)} values under a {len(names)}-unit header", lineno)
        row = [_parse_float(f, lineno) for f in fields]
        if any(v < 0 for v in row):
            raise ParseError("negative power value", lineno)
        rows.append(row)
    return PowerTrace(names, rows)


def read_ptrace(path) -> PowerTrace:
    with open(path) as f:
        return parse_ptrace(f.read())
