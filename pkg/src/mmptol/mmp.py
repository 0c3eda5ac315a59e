"""Model of manufactured part: per-surface deviation torsors accumulated over set-ups.

Every set-up is expressed in the nominal part frame (the nominal part sits
at its nominal pose on the nominal machine), so machine and part frames
share axes and only the deviations differ.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .part import Frame, Surface, circle_directions, sample_points_local
from .process import (ContactGeometry, Declarations, ElementaryConnection, LinearConstraint,
                      ProcessPlan, RankSelector, SetUp, contact_geometry, contact_row, declare)
from .torsor import (ROTATION_KINDS, SURFACE_CLASSES, TRANSLATION_KINDS, ZERO, LinExpr,
                     ParameterRegistry, Torsor, add, change_basis, combine, negate, transport)

INVERSE_CLEAN = 1e-12


class PositioningError(ValueError):
    pass


def to_global(t: Torsor, frame: Frame) -> Torsor:
    """Local-frame torsor -> global components, reduced at its global point."""
    return change_basis(t, frame.basis, frame.origin, "global")


def view(t: Torsor, frame: Frame, name: str = "local") -> Torsor:
    """Global-frame torsor seen in ``frame``, reduced at the frame origin."""
    g = transport(t, frame.origin)
    R = frame.basis
    rot = tuple(combine(R[:, i], g.rotation) for i in range(3))
    trans = tuple(combine(R[:, i], g.translation) for i in range(3))
    return Torsor(rot, trans, (0.0, 0.0, 0.0), name, g.radius)


def project_free(t: Torsor, cls: str) -> Torsor:
    """Zero the components a surface class is invariant under."""
    free = SURFACE_CLASSES[cls]
    rot = tuple(e if k in free else ZERO for k, e in zip(ROTATION_KINDS, t.rotation))
    tr = tuple(e if k in free else ZERO for k, e in zip(TRANSLATION_KINDS, t.translation))
    return Torsor(rot, tr, t.point, t.frame, t.radius if "ra" in free else ZERO)


@dataclass
class MMP:
    """Symbolic deviations of every produced surface relative to the nominal part.

    ``surfaces`` holds torsors in each surface's local frame at its local
    origin, with the class-invariant components exactly zero.
    """

    plan: ProcessPlan
    registry: ParameterRegistry
    surfaces: dict[int, Torsor]
    produced_in: dict[int, int]
    positioning: dict[int, Torsor]
    constraints: list[LinearConstraint]
    upto: int | None = None
    links: dict = field(default_factory=dict)

    def surface(self, sid: int) -> Surface:
        return self.plan.part[sid]

    def global_torsor(self, sid: int) -> Torsor:
        return to_global(self.surfaces[sid], self.plan.part[sid].frame)

    def truncate(self, setup_id: int) -> "MMP":
        """Intermediate MMP at the end of set-up ``setup_id``."""
        order = [s.id for s in self.plan.setups]
        if setup_id not in order:
            raise KeyError(f"no set-up {setup_id}")
        keep = set(order[:order.index(setup_id) + 1]) | {0}
        surfaces = {sid: t for sid, t in self.surfaces.items() if self.produced_in[sid] in keep}
        produced = {sid: self.produced_in[sid] for sid in surfaces}
        cons = [c for c in self.constraints if c.params() <= _params_upto(self, keep)]
        return MMP(self.plan, self.registry, surfaces, produced,
                   {k: v for k, v in self.positioning.items() if k in keep}, cons, setup_id,
                   {k: v for k, v in self.links.items() if k[1] in keep})


def _params_upto(m: MMP, keep: set[int]) -> set[str]:
    out = set()
    for p in m.registry:
        if p.category in ("DM", "DH", "LHP"):
            setup = p.setup if p.setup is not None else 0
            if setup in keep:
                out.add(p.id)
    return out


@dataclass
class Seat:
    """One contact offered to the hierarchical resolver.

    ``D`` is the part surface deviation and ``H`` the counterpart surface
    deviation, both seen in the contact frame; ``L`` holds free link
    parameters for floating contacts.
    """

    surface: Surface
    conn: ElementaryConnection
    geo: ContactGeometry
    D: Torsor
    H: Torsor
    L: Torsor | None
    radius: LinExpr
    tag: str


def seat(entries: list[Seat], context: str, family: str = "CHP",
         completion: tuple[Frame, Callable[[str], LinExpr]] | None = None):
    """Rigid placement ``X`` (rotation, translation at the global origin) of a
    part seated on its counterpart.

    Connections are resolved in the given order; each offers its contact
    components (rotations first) and keeps those that fix a new degree of
    freedom, so that ``X_c + D_c = H_c (+ L_c)`` on every kept component.
    ``completion`` supplies the frame whose components take free parameters
    when the connections leave mobilities. Returns ``(X, constraints, links)``.
    """
    sel = RankSelector()
    rhs: list[LinExpr] = []
    kept_all = []
    for s in entries:
        kept = []
        for kind in s.geo.kinds:
            if sel.offer(contact_row(s.geo.frame, kind)):
                e = s.H.component(kind) - s.D.component(kind)
                if s.L is not None:
                    e = e + s.L.component(kind)
                if kind in s.geo.ra_shift:
                    e = e + s.radius * s.geo.ra_shift[kind]
                rhs.append(e)
                kept.append(kind)
        if not kept:
            raise PositioningError(
                f"{context}: over-constrained hierarchy, rank {s.conn.rank} "
                f"(surface {s.conn.part_surface}) fixes no new degree of freedom")
        kept_all.append(kept)
    if completion is not None:
        frame, fresh = completion
        for kind in ROTATION_KINDS + TRANSLATION_KINDS:
            if sel.rank == 6:
                break
            if sel.offer(contact_row(frame, kind)):
                rhs.append(fresh(kind))
    if sel.rank < 6:
        ranks = [s.conn.rank for s in entries]
        raise PositioningError(
            f"{context}: under-constrained, ranks {ranks} fix only {sel.rank} of 6 degrees of freedom")
    A = np.vstack(sel.rows)
    Ainv = np.linalg.inv(A)
    Ainv[np.abs(Ainv) < INVERSE_CLEAN * np.abs(Ainv).max()] = 0.0
    x = [combine(Ainv[i], rhs) for i in range(6)]
    X = Torsor(x[:3], x[3:], (0.0, 0.0, 0.0), "global")

    cons: list[LinearConstraint] = []
    links = {}
    for s, kept in zip(entries, kept_all):
        if s.L is None:
            continue
        Xc = view(X, s.geo.frame)
        link = {}
        for kind in s.geo.kinds:
            if kind in kept:
                link[kind] = s.L.component(kind)
            else:
                link[kind] = Xc.component(kind) + s.D.component(kind) - s.H.component(kind)
        links[s.tag] = link
        cons += _non_penetration(s, link, family)
    return X, cons, links


def solve_positioning(setup: SetUp, surfaces: dict[int, Torsor], plan: ProcessPlan,
                      decl: Declarations) -> tuple[Torsor, list[LinearConstraint], dict]:
    """Positioning torsor of the nominal part relative to the machine.

    Slipping contacts are seated exactly on their kept components; floating
    contacts keep their link parameters and emit non-penetration constraints.
    """
    entries = []
    for conn in setup.ordered_connections():
        s = plan.part[conn.part_surface]
        geo = contact_geometry(s, conn)
        key = (conn.part_surface, setup.id)
        D = view(to_global(surfaces[conn.part_surface], s.frame), geo.frame)
        entries.append(Seat(s, conn, geo, D, decl.holder[key], decl.link.get(key),
                            surfaces[conn.part_surface].radius, f"{conn.part_surface}S{setup.id}"))
    X, cons, links = seat(entries, f"set-up {setup.id}")
    return X, cons, {(c.conn.part_surface, setup.id): links[c.tag] for c in entries if c.tag in links}


def _non_penetration(s: Seat, link: dict, family: str) -> list[LinearConstraint]:
    out = []
    if s.surface.cls == "plane":
        # part relative to counterpart along the outward normal must not be positive
        for k, v in enumerate(sample_points_local(s.surface)):
            e = link["tz"] + link["rx"] * float(v[1]) - link["ry"] * float(v[0])
            if not e.is_constant():
                out.append(LinearConstraint(e, "<=", 0.0, family, f"non-penetration {s.tag} v{k}"))
        return out
    room = LinExpr.const(s.conn.clearance)
    if s.conn.fit == "hole":
        room = room + s.radius - s.H.radius
    else:
        room = room + s.H.radius - s.radius
    z0, z1 = s.surface.z_extent()
    rx, ry = link["rx"], link["ry"]
    for z in (z0, z1):
        # axis displacement at height z: t + r x (0, 0, z)
        ux = link["tx"] + ry * z
        uy = link["ty"] - rx * z
        for k, d in enumerate(circle_directions()):
            e = ux * float(d[0]) + uy * float(d[1]) - room
            if not e.is_constant():
                out.append(LinearConstraint(e, "<=", 0.0, family, f"non-penetration {s.tag} z{z:g} d{k}"))
    return out


def machining_deviation(decl: Declarations, surface: int) -> Torsor:
    """Fresh machining torsor of ``surface`` (local frame, local origin)."""
    return decl.machining[surface]


def build_mmp(plan: ProcessPlan, decl: Declarations | None = None) -> MMP:
    decl = decl or declare(plan)
    surfaces: dict[int, Torsor] = {}
    produced: dict[int, int] = {}
    for sid, t in decl.raw.items():
        surfaces[sid] = t
        produced[sid] = 0
    positioning = {}
    cons = list(decl.constraints)
    links = {}
    for su in plan.setups:
        X, extra, su_links = solve_positioning(su, surfaces, plan, decl)
        positioning[su.id] = X
        cons += extra
        links.update(su_links)
        for op in su.machining:
            s = plan.part[op.surface]
            M = to_global(machining_deviation(decl, op.surface), s.frame)
            T = add(M, negate(X))
            local = view(T, s.frame, f"S{op.surface}")
            surfaces[op.surface] = project_free(local, s.cls)
            produced[op.surface] = su.id
    return MMP(plan, decl.registry, surfaces, produced, positioning, cons, None, links)
