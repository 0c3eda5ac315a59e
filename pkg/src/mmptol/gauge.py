"""Virtual gauges: a perfect counterpart part carrying datum features and a
tolerance zone, seated on the MMP, and the signed gaps it measures."""
from __future__ import annotations

from dataclasses import dataclass, field

from .mmp import MMP, Seat, seat, view
from .part import circle_directions, sample_points_local
from .process import ElementaryConnection, LinearConstraint, contact_geometry
from .torsor import (DefectParameter, LinExpr, ParameterRegistry, Torsor, add, new_surface_torsor,
                     parameter_name)

SPEC_TYPES = ("location", "orientation")
GAUGE_KINDS = ("functional", "manufacturing")
ASSOCIATIONS = ("fixed", "contact")


class GaugeError(ValueError):
    pass


@dataclass(frozen=True)
class VirtualGauge:
    """Datum system plus tolerance zone around one toleranced surface.

    ``width`` is the full zone width. ``association="fixed"`` seats each
    datum feature exactly on the kept components of its MMP surface;
    ``"contact"`` lets it float under non-penetration at boundary points.
    """

    id: str
    toleranced: int
    datums: tuple[int, ...] = ()
    width: float = 0.1
    spec_type: str = "location"
    kind: str = "functional"
    association: str = "fixed"
    setup: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "datums", tuple(int(d) for d in self.datums))
        if not self.width > 0:
            raise GaugeError(f"gauge {self.id}: zone width must be positive, got {self.width}")
        if self.spec_type not in SPEC_TYPES:
            raise GaugeError(f"gauge {self.id}: unknown specification type {self.spec_type!r}")
        if self.kind not in GAUGE_KINDS:
            raise GaugeError(f"gauge {self.id}: unknown gauge kind {self.kind!r}")
        if self.association not in ASSOCIATIONS:
            raise GaugeError(f"gauge {self.id}: unknown association {self.association!r}")
        if len(set(self.datums)) != len(self.datums):
            raise GaugeError(f"gauge {self.id}: datum order {self.datums} repeats a surface")
        if self.toleranced in self.datums:
            raise GaugeError(f"gauge {self.id}: surface {self.toleranced} cannot be a datum of itself")

    @property
    def category(self) -> str:
        return "LGP" if self.kind == "functional" else "LMGP"

    @property
    def half_width(self) -> float:
        return 0.5 * self.width


@dataclass
class AssembledGauge:
    gauge: VirtualGauge
    registry: ParameterRegistry
    links: list[str]
    constraints: list[LinearConstraint]
    placement: Torsor
    deviation: Torsor
    zone_offset: dict = field(default_factory=dict)
    mmp: MMP | None = field(default=None, repr=False)


@dataclass
class GapSet:
    gauge: str
    gaps: list[LinExpr]
    labels: list[str]

    def __len__(self) -> int:
        return len(self.gaps)

    def as_constraints(self, family: str = "CMGP") -> list[LinearConstraint]:
        """``gap >= 0`` rows, used when a manufacturing gauge bounds the outer set."""
        return [LinearConstraint(g, ">=", 0.0, family, f"{self.gauge} {lab}")
                for g, lab in zip(self.gaps, self.labels) if not g.is_constant()]


def _fresh(registry: ParameterRegistry, token: str, category: str):
    def make(kind: str) -> LinExpr:
        pid = parameter_name(kind, token, None, category)
        registry.register(DefectParameter(pid, kind, token, None, category))
        return LinExpr.var(pid)
    return make


def assemble_gauge(g: VirtualGauge, m: MMP, registry: ParameterRegistry | None = None) -> AssembledGauge:
    """Seat the gauge on ``m``; residual mobilities become link parameters."""
    part = m.plan.part
    for sid in (g.toleranced,) + g.datums:
        if sid not in m.surfaces:
            where = f" at the end of set-up {m.upto}" if m.upto is not None else ""
            raise GaugeError(f"gauge {g.id}: surface {sid} does not exist on the part{where}")
    reg = (registry or m.registry).copy()
    cat = g.category
    before = set(reg.ids())
    entries = []
    for rank, sid in enumerate(g.datums, start=1):
        s = part[sid]
        conn = ElementaryConnection(sid, rank, "floating" if g.association == "contact" else "slipping")
        geo = contact_geometry(s, conn)
        D = view(m.global_torsor(sid), geo.frame)
        L = None
        if g.association == "contact":
            L = new_surface_torsor(s.cls, f"{g.id}.{sid}", None, cat, reg, frame=f"G{g.id}.{sid}", kinds=geo.kinds)
        entries.append(Seat(s, conn, geo, D, Torsor.zero(frame=D.frame), L, m.surfaces[sid].radius,
                            f"{g.id}.{sid}"))
    first = part[g.datums[0]].frame if g.datums else part.frame
    family = "CGP" if cat == "LGP" else "CMGP"
    Y, cons, _ = seat(entries, f"gauge {g.id}", family, (first, _fresh(reg, g.id, cat)))
    tol = part[g.toleranced]
    rel = view(add(m.global_torsor(g.toleranced), Y), tol.frame, f"S{g.toleranced}")
    offset = {}
    if g.spec_type == "orientation":
        make = _fresh(reg, f"{g.id}z", cat)
        kinds = ("tz",) if tol.cls == "plane" else ("tx", "ty")
        offset = {k: make(k) for k in kinds}
    links = [p for p in reg.ids() if p not in before]
    return AssembledGauge(g, reg, links, cons, Y, rel, offset, m)


def gap_expressions(a: AssembledGauge) -> GapSet:
    """Half-width minus signed distance from the zone mid-surface, per sample
    point and bounding surface; non-negative means inside the zone."""
    g = a.gauge
    s = a.mmp.plan.part[g.toleranced]
    d = a.deviation
    t2 = g.half_width
    gaps, labels = [], []
    if s.cls == "plane":
        shift = a.zone_offset.get("tz", LinExpr())
        for k, v in enumerate(sample_points_local(s)):
            dn = d.translation[2] + d.rotation[0] * float(v[1]) - d.rotation[1] * float(v[0]) - shift
            gaps.append(t2 - dn)
            labels.append(f"v{k} upper")
            gaps.append(t2 + dn)
            labels.append(f"v{k} lower")
        return GapSet(g.id, gaps, labels)
    if s.cls == "cylinder":
        sx = a.zone_offset.get("tx", LinExpr())
        sy = a.zone_offset.get("ty", LinExpr())
        z0, z1 = s.z_extent()
        for z in (z0, z1):
            ux = d.translation[0] + d.rotation[1] * z - sx
            uy = d.translation[1] - d.rotation[0] * z - sy
            for k, dk in enumerate(circle_directions()):
                gaps.append(t2 - (ux * float(dk[0]) + uy * float(dk[1])))
                labels.append(f"z{z:g} d{k}")
        return GapSet(g.id, gaps, labels)
    raise GaugeError(f"gauge {g.id}: unsupported zone form for surface class {s.cls!r}")
