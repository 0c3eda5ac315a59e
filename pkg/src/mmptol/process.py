"""Declarative process plan: set-ups, part-holder contacts, machining operations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .part import Frame, NominalPart, Surface, validate_part
from .torsor import LinExpr, ParameterRegistry, RegistryError, Torsor, new_surface_torsor

CONTACTS = ("slipping", "floating")
HOLDER_CLASSES = ("plane", "cylinder", "vee")
SENSES = ("<=", ">=")

# constraint family by parameter category
FAMILY = {"DM": "CM", "DH": "CH", "LHP": "CHP"}


@dataclass(frozen=True)
class LinearConstraint:
    expr: LinExpr
    sense: str
    bound: float
    family: str = ""
    label: str = ""

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"constraint sense must be one of {SENSES}, got {self.sense!r}")
        if self.expr.is_constant():
            raise ValueError(f"constraint {self.label or self.expr!r} has no parameters")

    def as_le(self) -> tuple[LinExpr, float]:
        """``(expr, b)`` such that the constraint reads ``expr <= b``."""
        e = self.expr - self.expr.constant
        b = self.bound - self.expr.constant
        if self.sense == "<=":
            return e, b
        return -e, -b

    def params(self) -> set[str]:
        return self.expr.params()

    def slack(self, assignment: Mapping[str, float]) -> float:
        e, b = self.as_le()
        return b - e.evaluate(assignment, default=0.0)


def box_constraints(pid: str, bounds, family: str) -> list[LinearConstraint]:
    lo, hi = bounds
    v = LinExpr.var(pid)
    return [LinearConstraint(v, ">=", float(lo), family, f"{pid} lower"),
            LinearConstraint(v, "<=", float(hi), family, f"{pid} upper")]


@dataclass
class ElementaryConnection:
    part_surface: int
    rank: int
    contact: str = "slipping"
    holder: str | None = None
    bounds: dict = field(default_factory=dict)
    link_bounds: dict = field(default_factory=dict)
    clearance: float = 0.0
    fit: str = "hole"
    holder_normal: tuple | None = None
    vee_angle: float = np.pi / 2
    vee_opening: tuple | None = None


@dataclass
class MachiningOperation:
    surface: int
    bounds: dict = field(default_factory=dict)


@dataclass
class PartHolder:
    constraints: list[LinearConstraint] = field(default_factory=list)


@dataclass
class SetUp:
    id: int
    connections: list[ElementaryConnection] = field(default_factory=list)
    machining: list[MachiningOperation] = field(default_factory=list)
    holder: PartHolder = field(default_factory=PartHolder)
    constraints: list[LinearConstraint] = field(default_factory=list)

    def ordered_connections(self) -> list[ElementaryConnection]:
        return sorted(self.connections, key=lambda c: c.rank)


@dataclass
class ProcessPlan:
    part: NominalPart
    setups: list[SetUp] = field(default_factory=list)
    raw: dict[int, dict] = field(default_factory=dict)

    def setup(self, sid: int) -> SetUp:
        for s in self.setups:
            if s.id == sid:
                return s
        raise KeyError(f"no set-up {sid}")

    def produced_in(self) -> dict[int, int]:
        """Surface id -> producing set-up (0 for raw surfaces)."""
        out = {sid: 0 for sid in self.raw}
        for s in self.setups:
            for op in s.machining:
                out.setdefault(op.surface, s.id)
        return out


# --- contact geometry -------------------------------------------------------

@dataclass(frozen=True)
class ContactGeometry:
    """Where and how a part surface meets its holder surface.

    ``kinds`` are the components the contact can fix, in the order they are
    offered to the hierarchical resolver (rotations first). ``ra_shift``
    maps a component to the multiple of the part radius deviation that
    shifts the seated position along it.
    """

    frame: Frame
    kinds: tuple[str, ...]
    holder_class: str
    holder_kinds: tuple[str, ...]
    ra_shift: dict = field(default_factory=dict)


def contact_geometry(surface: Surface, conn: ElementaryConnection) -> ContactGeometry:
    holder = conn.holder or surface.cls
    F = surface.frame
    if surface.cls == "plane":
        if holder != "plane":
            raise ValueError(f"surface {surface.id}: a plane can only rest on a plane holder")
        return ContactGeometry(F, ("rx", "ry", "tz"), "plane", ("rx", "ry", "tz"))
    if holder == "cylinder":
        return ContactGeometry(F, ("rx", "ry", "tx", "ty"), "cylinder", ("rx", "ry", "tx", "ty", "ra"))
    axis = F.axis(2)
    if holder == "vee":
        opening = np.asarray(conn.vee_opening if conn.vee_opening is not None else F.axis(1), dtype=float)
        y = opening - (opening @ axis) * axis
        y /= np.linalg.norm(y)
        frame = Frame(F.origin, np.column_stack([np.cross(y, axis), y, axis]))
        half = 0.5 * conn.vee_angle
        return ContactGeometry(frame, ("rx", "ry", "tx", "ty"), "cylinder", ("rx", "ry", "tx", "ty"),
                               {"ty": 1.0 / np.sin(half)})
    if holder == "plane":
        if conn.holder_normal is None:
            raise ValueError(f"surface {surface.id}: cylinder on plane needs holder_normal")
        n = np.asarray(conn.holder_normal, dtype=float)
        n = n - (n @ axis) * axis
        n /= np.linalg.norm(n)
        frame = Frame(F.origin - surface.radius * n, np.column_stack([axis, np.cross(n, axis), n]))
        return ContactGeometry(frame, ("ry", "tz"), "plane", ("rx", "ry", "tz"), {"tz": 1.0})
    raise ValueError(f"surface {surface.id}: unsupported holder class {holder!r}")


_ROT = {"rx": 0, "ry": 1, "rz": 2}
_TR = {"tx": 0, "ty": 1, "tz": 2}


def contact_row(frame: Frame, kind: str) -> np.ndarray:
    """Coefficients of a rigid displacement ``(rotation, translation at the
    global origin)`` giving its ``kind`` component seen in ``frame``."""
    if kind in _ROT:
        e = frame.axis(_ROT[kind])
        return np.concatenate([e, np.zeros(3)])
    e = frame.axis(_TR[kind])
    return np.concatenate([np.cross(frame.origin, e), e])


class RankSelector:
    """Greedy row selection by rank increase (normalised Gram-Schmidt)."""

    def __init__(self, tol: float = 1e-9):
        self.tol = tol
        self.rows: list[np.ndarray] = []
        self._q: list[np.ndarray] = []

    def offer(self, row: np.ndarray) -> bool:
        nrm = np.linalg.norm(row)
        if nrm == 0.0:
            return False
        r = row / nrm
        for q in self._q:
            r = r - (q @ r) * q
        res = np.linalg.norm(r)
        if res <= self.tol:
            return False
        self._q.append(r / res)
        self.rows.append(np.asarray(row, dtype=float))
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


# --- declarations -----------------------------------------------------------

@dataclass
class Declarations:
    registry: ParameterRegistry
    raw: dict[int, Torsor]
    machining: dict[int, Torsor]
    holder: dict[tuple[int, int], Torsor]
    link: dict[tuple[int, int], Torsor]
    constraints: list[LinearConstraint]


def _bounded(torsor: Torsor, registry: ParameterRegistry) -> list[LinearConstraint]:
    out = []
    for pid in sorted(torsor.params()):
        p = registry[pid]
        if p.bounds is not None:
            out += box_constraints(pid, p.bounds, FAMILY[p.category])
    return out


def declare(plan: ProcessPlan) -> Declarations:
    """Register every DM / DH / LHP parameter of the plan and collect bounds."""
    reg = ParameterRegistry()
    raw, mach, holder, link = {}, {}, {}, {}
    cons: list[LinearConstraint] = []
    part = plan.part
    try:
        for sid in sorted(plan.raw):
            s = part[sid]
            t = new_surface_torsor(s.cls, sid, 0, "DM", reg, plan.raw[sid])
            raw[sid] = t
            cons += _bounded(t, reg)
        for su in plan.setups:
            for conn in su.ordered_connections():
                s = part[conn.part_surface]
                geo = contact_geometry(s, conn)
                key = (conn.part_surface, su.id)
                hcls = "cylinder" if geo.holder_class == "cylinder" else "plane"
                t = new_surface_torsor(hcls, conn.part_surface, su.id, "DH", reg, conn.bounds,
                                       frame=f"C{conn.part_surface}S{su.id}", kinds=geo.holder_kinds)
                holder[key] = t
                cons += _bounded(t, reg)
                if conn.contact == "floating":
                    t = new_surface_torsor(s.cls, conn.part_surface, su.id, "LHP", reg, conn.link_bounds,
                                           frame=f"C{conn.part_surface}S{su.id}", kinds=geo.kinds)
                    link[key] = t
                    cons += _bounded(t, reg)
            for op in su.machining:
                s = part[op.surface]
                t = new_surface_torsor(s.cls, op.surface, su.id, "DM", reg, op.bounds)
                mach[op.surface] = t
                cons += _bounded(t, reg)
            for c in su.holder.constraints + su.constraints:
                cons.append(c)
    except RegistryError as exc:
        raise RegistryError(f"parameter name collision: {exc}") from exc
    return Declarations(reg, raw, mach, holder, link, cons)


def registry_of(plan: ProcessPlan) -> ParameterRegistry:
    return declare(plan).registry


# --- validation -------------------------------------------------------------

@dataclass(frozen=True)
class PlanIssue:
    code: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


def validate_plan(plan: ProcessPlan) -> list[PlanIssue]:
    """Precedence, dof coverage and constraint checks; empty iff valid."""
    issues = [PlanIssue("part", str(v)) for v in validate_part(plan.part)]
    part = plan.part
    available: set[int] = set()
    produced: dict[int, int] = {}
    for sid in plan.raw:
        if sid not in part:
            issues.append(PlanIssue("reference", f"raw surface {sid} is not a surface of the part"))
        available.add(sid)
        produced[sid] = 0
    seen_ids = set()
    for su in plan.setups:
        if su.id in seen_ids:
            issues.append(PlanIssue("setup", f"duplicate set-up id {su.id}"))
        seen_ids.add(su.id)
        ranks = sorted(c.rank for c in su.connections)
        if ranks != list(range(1, len(ranks) + 1)):
            issues.append(PlanIssue("hierarchy", f"set-up {su.id}: connection ranks {ranks} are not 1..{len(ranks)}"))
        sel = RankSelector()
        dof_ok = True
        for conn in su.ordered_connections():
            sid = conn.part_surface
            if sid not in part:
                issues.append(PlanIssue("reference", f"set-up {su.id}: positioning surface {sid} is not a surface of the part"))
                dof_ok = False
                continue
            if sid not in available:
                later = [s.id for s in plan.setups if any(op.surface == sid for op in s.machining)]
                when = f"machined in set-up {later[0]}" if later else "never produced"
                issues.append(PlanIssue("precedence", f"set-up {su.id}: positions on surface {sid}, {when}"))
            if conn.contact not in CONTACTS:
                issues.append(PlanIssue("connection", f"set-up {su.id}: unknown contact {conn.contact!r}"))
            try:
                geo = contact_geometry(part[sid], conn)
            except ValueError as exc:
                issues.append(PlanIssue("connection", f"set-up {su.id}: {exc}"))
                dof_ok = False
                continue
            if conn.contact == "floating" and (geo.holder_class, part[sid].cls) not in (("plane", "plane"), ("cylinder", "cylinder")):
                issues.append(PlanIssue("connection", f"set-up {su.id}: floating contact on surface {sid} must be plane/plane or cylinder/cylinder"))
            gained = sum(sel.offer(contact_row(geo.frame, k)) for k in geo.kinds)
            if gained == 0:
                issues.append(PlanIssue("dof", f"set-up {su.id}: connection rank {conn.rank} (surface {sid}) fixes no new degree of freedom"))
        if dof_ok and sel.rank != 6:
            issues.append(PlanIssue("dof", f"set-up {su.id}: connections fix {sel.rank} of 6 degrees of freedom"))
        seen_here = set()
        for op in su.machining:
            if op.surface not in part:
                issues.append(PlanIssue("reference", f"set-up {su.id}: machined surface {op.surface} is not a surface of the part"))
                continue
            if op.surface in seen_here:
                issues.append(PlanIssue("machining", f"set-up {su.id}: surface {op.surface} machined twice"))
            elif op.surface in produced:
                issues.append(PlanIssue("machining", f"set-up {su.id}: surface {op.surface} already produced in set-up {produced[op.surface]}"))
            seen_here.add(op.surface)
        for op in su.machining:
            produced.setdefault(op.surface, su.id)
            available.add(op.surface)
    if issues:
        return issues
    try:
        decl = declare(plan)
    except (RegistryError, ValueError) as exc:
        return [PlanIssue("registry", str(exc))]
    constrained = set()
    for c in decl.constraints:
        constrained |= c.params()
        missing = sorted(p for p in c.params() if p not in decl.registry)
        if missing:
            issues.append(PlanIssue("constraint", f"constraint {c.label or c.expr!r} references undeclared parameters {missing}"))
    for p in decl.registry.by_category("DH"):
        if p.id not in constrained:
            issues.append(PlanIssue("constraint", f"holder parameter {p.id} has neither bounds nor a constraint"))
    return issues
