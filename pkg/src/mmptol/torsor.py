"""Small displacement torsors over sparse linear forms in defect parameters.

Transport convention: ``u(B) = u(A) + rotation x (B - A)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

ROTATION_KINDS = ("rx", "ry", "rz")
TRANSLATION_KINDS = ("tx", "ty", "tz")
KINDS = ROTATION_KINDS + TRANSLATION_KINDS + ("ra",)
CATEGORIES = ("DM", "DH", "LHP", "LGP", "LMGP")

# free components of each surface class in its local frame (z = normal / axis)
SURFACE_CLASSES = {
    "plane": ("rx", "ry", "tz"),
    "cylinder": ("rx", "ry", "tx", "ty", "ra"),
}


class RegistryError(ValueError):
    pass


class MissingParameterError(KeyError):
    pass


@dataclass(frozen=True)
class DefectParameter:
    id: str
    kind: str
    surface: int | str
    setup: int | None
    category: str
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown parameter category {self.category!r}")
        if self.bounds is not None:
            if self.category in ("LGP", "LMGP"):
                raise ValueError(f"{self.id}: gauge link parameters carry no bounds")
            lo, hi = self.bounds
            if lo > hi:
                raise ValueError(f"{self.id}: lower bound {lo} exceeds upper bound {hi}")


class ParameterRegistry:
    """Ordered, append-only set of defect parameters."""

    def __init__(self, params: Iterable[DefectParameter] = ()):
        self._params: dict[str, DefectParameter] = {}
        for p in params:
            self.register(p)

    def register(self, param: DefectParameter) -> DefectParameter:
        if param.id in self._params:
            raise RegistryError(f"parameter {param.id!r} already registered")
        self._params[param.id] = param
        return param

    def merge(self, other: "ParameterRegistry") -> "ParameterRegistry":
        out = ParameterRegistry(self._params.values())
        for p in other:
            if p.id in out:
                if out[p.id] != p:
                    raise RegistryError(f"conflicting definitions of {p.id!r}")
                continue
            out.register(p)
        return out

    def copy(self) -> "ParameterRegistry":
        return ParameterRegistry(self._params.values())

    def __getitem__(self, pid: str) -> DefectParameter:
        return self._params[pid]

    def get(self, pid, default=None):
        return self._params.get(pid, default)

    def __contains__(self, pid) -> bool:
        return pid in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def ids(self) -> list[str]:
        return list(self._params)

    def by_category(self, *categories: str) -> list[DefectParameter]:
        return [p for p in self._params.values() if p.category in categories]


# --- canonical names -------------------------------------------------------

_NAME_RE = re.compile(
    r"^(?P<prefix>l|g|m)?(?P<kind>rx|ry|rz|tx|ty|tz|ra)_(?P<rest>.+)$"
)
_SURF_RE = re.compile(r"^(?P<surface>\d+)(?:S(?P<setup>\d+))?$")


def parameter_name(kind: str, surface, setup, category: str) -> str:
    """Canonical id: ``rx_6`` (machined), ``rx_3S3`` (holder), ``lrx_3S3`` (link),
    ``grx_F`` / ``mrx_S3-6`` (functional / manufacturing gauge links)."""
    if category == "DM":
        return f"{kind}_{surface}"
    if category == "DH":
        return f"{kind}_{surface}S{setup}"
    if category == "LHP":
        return f"l{kind}_{surface}S{setup}"
    if category == "LGP":
        return f"g{kind}_{surface}"
    if category == "LMGP":
        return f"m{kind}_{surface}"
    raise ValueError(f"unknown category {category!r}")


def parse_name(name: str) -> dict:
    """Inverse of :func:`parameter_name`; returns kind, surface, setup, role."""
    m = _NAME_RE.match(name)
    if not m:
        raise ValueError(f"not a canonical parameter name: {name!r}")
    prefix, kind, rest = m.group("prefix"), m.group("kind"), m.group("rest")
    if prefix in ("g", "m"):
        return {"kind": kind, "surface": rest, "setup": None,
                "role": "functional_gauge" if prefix == "g" else "manufacturing_gauge"}
    sm = _SURF_RE.match(rest)
    if not sm:
        raise ValueError(f"not a canonical parameter name: {name!r}")
    surface = int(sm.group("surface"))
    setup = sm.group("setup")
    if prefix == "l":
        if setup is None:
            raise ValueError(f"link parameter without set-up: {name!r}")
        return {"kind": kind, "surface": surface, "setup": int(setup), "role": "link"}
    if setup is None:
        return {"kind": kind, "surface": surface, "setup": None, "role": "machined"}
    return {"kind": kind, "surface": surface, "setup": int(setup), "role": "positioning"}


# --- linear forms -----------------------------------------------------------

class LinExpr:
    """Immutable sparse affine form ``constant + sum(coeff * param)``."""

    __slots__ = ("_terms", "_constant")

    def __init__(self, terms: Mapping[str, float] | Iterable | None = None, constant: float = 0.0):
        acc: dict[str, float] = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for k, v in items:
                v = float(v)
                if v == 0.0:
                    continue
                s = acc.get(k, 0.0) + v
                if s == 0.0:
                    acc.pop(k, None)
                else:
                    acc[k] = s
        self._terms = MappingProxyType(acc)
        self._constant = float(constant)

    @classmethod
    def var(cls, pid: str, coeff: float = 1.0) -> "LinExpr":
        return cls({pid: coeff})

    @classmethod
    def const(cls, value: float) -> "LinExpr":
        return cls(None, value)

    @property
    def terms(self) -> Mapping[str, float]:
        return self._terms

    @property
    def constant(self) -> float:
        return self._constant

    def coeff(self, pid: str) -> float:
        return self._terms.get(pid, 0.0)

    def params(self) -> set[str]:
        return set(self._terms)

    def is_zero(self) -> bool:
        return not self._terms and self._constant == 0.0

    def is_constant(self) -> bool:
        return not self._terms

    def __add__(self, other) -> "LinExpr":
        if isinstance(other, (int, float)):
            return LinExpr(self._terms, self._constant + other)
        if not isinstance(other, LinExpr):
            return NotImplemented
        terms = dict(self._terms)
        for k, v in other._terms.items():
            s = terms.get(k, 0.0) + v
            if s == 0.0:
                terms.pop(k, None)
            else:
                terms[k] = s
        return LinExpr(terms, self._constant + other._constant)

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({k: -v for k, v in self._terms.items()}, -self._constant)

    def __sub__(self, other) -> "LinExpr":
        if isinstance(other, (int, float)):
            return LinExpr(self._terms, self._constant - other)
        if not isinstance(other, LinExpr):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "LinExpr":
        return (-self) + other

    def __mul__(self, k) -> "LinExpr":
        if not isinstance(k, (int, float, np.floating)):
            return NotImplemented
        k = float(k)
        if k == 0.0:
            return LinExpr()
        return LinExpr({p: v * k for p, v in self._terms.items()}, self._constant * k)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinExpr):
            return NotImplemented
        return dict(self._terms) == dict(other._terms) and self._constant == other._constant

    def __hash__(self):
        return hash((frozenset(self._terms.items()), self._constant))

    def evaluate(self, assignment: Mapping[str, float], default: float | None = None) -> float:
        total = self._constant
        for k, v in self._terms.items():
            if k in assignment:
                total += v * assignment[k]
            elif default is None:
                raise MissingParameterError(k)
            else:
                total += v * default
        return total

    def substitute(self, mapping: Mapping[str, "LinExpr"]) -> "LinExpr":
        out = LinExpr.const(self._constant)
        for k, v in self._terms.items():
            out = out + (mapping[k] * v if k in mapping else LinExpr.var(k, v))
        return out

    def to_dict(self) -> dict:
        return {"terms": dict(sorted(self._terms.items())), "constant": self._constant}

    def __repr__(self) -> str:
        if self.is_zero():
            return "0"
        parts = [f"{v:+.6g}*{k}" for k, v in sorted(self._terms.items())]
        if self._constant or not parts:
            parts.append(f"{self._constant:+.6g}")
        return " ".join(parts)


ZERO = LinExpr()


def combine(coeffs, exprs) -> LinExpr:
    """``sum(c * e)`` skipping exact zeros; used for matrix-times-LinExpr."""
    out = ZERO
    for c, e in zip(coeffs, exprs):
        c = float(c)
        if c != 0.0:
            out = out + e * c
    return out


# --- torsors ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Torsor:
    rotation: tuple[LinExpr, LinExpr, LinExpr]
    translation: tuple[LinExpr, LinExpr, LinExpr]
    point: tuple[float, float, float] = (0.0, 0.0, 0.0)
    frame: str = "global"
    radius: LinExpr = ZERO
    # (point, translation) the torsor was built at; transports are computed from
    # it so that moving away and back reproduces the coefficients bit for bit
    anchor: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rotation", tuple(self.rotation))
        object.__setattr__(self, "translation", tuple(self.translation))
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))
        if len(self.rotation) != 3 or len(self.translation) != 3 or len(self.point) != 3:
            raise ValueError("torsor needs 3 rotation, 3 translation components and a 3D point")
        if self.anchor is None:
            object.__setattr__(self, "anchor", (self.point, self.translation))

    @classmethod
    def zero(cls, point=(0.0, 0.0, 0.0), frame: str = "global") -> "Torsor":
        return cls((ZERO,) * 3, (ZERO,) * 3, point, frame)

    def component(self, kind: str) -> LinExpr:
        if kind in ROTATION_KINDS:
            return self.rotation[ROTATION_KINDS.index(kind)]
        if kind in TRANSLATION_KINDS:
            return self.translation[TRANSLATION_KINDS.index(kind)]
        if kind == "ra":
            return self.radius
        raise KeyError(kind)

    def components(self) -> tuple[LinExpr, ...]:
        return self.rotation + self.translation

    def params(self) -> set[str]:
        out = set(self.radius.params())
        for e in self.components():
            out |= e.params()
        return out

    def same_as(self, other: "Torsor") -> bool:
        return (self.frame == other.frame and self.point == other.point
                and self.rotation == other.rotation and self.translation == other.translation
                and self.radius == other.radius)

    def __repr__(self) -> str:
        rot = ", ".join(map(repr, self.rotation))
        tr = ", ".join(map(repr, self.translation))
        return f"Torsor(frame={self.frame!r}, point={self.point}, rot=[{rot}], trans=[{tr}])"


def _moment(rotation, translation, d):
    rx, ry, rz = rotation
    # rotation x d
    cross = (
        combine((d[2], -d[1]), (ry, rz)),
        combine((d[0], -d[2]), (rz, rx)),
        combine((d[1], -d[0]), (rx, ry)),
    )
    return tuple(a + b for a, b in zip(translation, cross))


def transport(t: Torsor, target) -> Torsor:
    """Move the reduction point; rotation is unchanged."""
    target = tuple(float(v) for v in target)
    base, base_trans = t.anchor
    if target == base:
        trans = base_trans
    else:
        trans = _moment(t.rotation, base_trans, np.subtract(target, base))
    return Torsor(t.rotation, trans, target, t.frame, t.radius, anchor=t.anchor)


def add(a: Torsor, b: Torsor) -> Torsor:
    if a.frame != b.frame:
        raise ValueError(f"cannot add torsors in frames {a.frame!r} and {b.frame!r}")
    if a.point != b.point:
        b = transport(b, a.point)
    return Torsor(
        tuple(x + y for x, y in zip(a.rotation, b.rotation)),
        tuple(x + y for x, y in zip(a.translation, b.translation)),
        a.point, a.frame, a.radius + b.radius,
    )


def negate(t: Torsor) -> Torsor:
    base, base_trans = t.anchor
    return Torsor(tuple(-e for e in t.rotation), tuple(-e for e in t.translation),
                  t.point, t.frame, -t.radius, anchor=(base, tuple(-e for e in base_trans)))


def change_basis(t: Torsor, R, origin, frame: str) -> Torsor:
    """Re-express ``t`` given in a frame whose axes are the columns of ``R``
    and whose origin is ``origin`` (both in the target frame)."""
    R = np.asarray(R, dtype=float)
    rot = tuple(combine(R[i], t.rotation) for i in range(3))
    trans = tuple(combine(R[i], t.translation) for i in range(3))
    point = np.asarray(origin, dtype=float) + R @ np.asarray(t.point)
    return Torsor(rot, trans, tuple(point), frame, t.radius)


def new_surface_torsor(surface_class: str, surface, setup, category: str,
                       registry: ParameterRegistry, bounds: Mapping[str, tuple] | None = None,
                       frame: str | None = None, kinds: Iterable[str] | None = None) -> Torsor:
    """Fresh surface deviation torsor with one parameter per free kind.

    Invariant components are exact zeros. ``kinds`` narrows the free set
    (defaults to the class template).
    """
    if surface_class not in SURFACE_CLASSES:
        raise ValueError(f"unsupported surface class {surface_class!r}")
    free = tuple(kinds) if kinds is not None else SURFACE_CLASSES[surface_class]
    bounds = bounds or {}
    comp = {}
    for kind in free:
        pid = parameter_name(kind, surface, setup, category)
        b = bounds.get(kind)
        registry.register(DefectParameter(pid, kind, surface, setup, category,
                                          tuple(map(float, b)) if b is not None else None))
        comp[kind] = LinExpr.var(pid)
    return Torsor(
        tuple(comp.get(k, ZERO) for k in ROTATION_KINDS),
        tuple(comp.get(k, ZERO) for k in TRANSLATION_KINDS),
        (0.0, 0.0, 0.0),
        frame or f"S{surface}",
        comp.get("ra", ZERO),
    )


def evaluate(t: Torsor, assignment: Mapping[str, float], default: float | None = None) -> np.ndarray:
    """Numeric ``[rx, ry, rz, tx, ty, tz]``; pass ``default=0.0`` to allow missing parameters."""
    return np.array([e.evaluate(assignment, default) for e in t.components()])


def displacement_at(t: Torsor, p) -> tuple[LinExpr, LinExpr, LinExpr]:
    """Symbolic displacement vector of the field at point ``p``."""
    return transport(t, p).translation
