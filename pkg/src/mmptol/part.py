"""Nominal part geometry: frames, plane and cylinder surfaces, boundaries."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-12
BOUNDARY_TOL = 1e-9
DEFAULT_CIRCLE_POINTS = 8


@dataclass(frozen=True, eq=False)
class Frame:
    """Origin plus basis; the columns of ``basis`` are the local x, y, z axes."""

    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    basis: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=float).reshape(3, 3))

    @classmethod
    def from_axes(cls, origin, z, x=None) -> "Frame":
        """Right-handed frame with local z along ``z``; ``x`` is orthogonalised."""
        z = np.asarray(z, dtype=float)
        z = z / np.linalg.norm(z)
        if x is None:
            helper = np.array([1.0, 0.0, 0.0]) if abs(z[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            x = helper
        x = np.asarray(x, dtype=float)
        x = x - (x @ z) * z
        nx = np.linalg.norm(x)
        if nx < 1e-9:
            raise ValueError("x direction is parallel to z")
        x = x / nx
        y = np.cross(z, x)
        return cls(origin, np.column_stack([x, y, z]))

    def orthonormality_error(self) -> float:
        return float(np.abs(self.basis.T @ self.basis - np.eye(3)).max())

    def is_valid(self) -> bool:
        return self.orthonormality_error() <= ORTHO_TOL and np.linalg.det(self.basis) > 0

    def to_global(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.origin + p @ self.basis.T

    def to_local(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return (p - self.origin) @ self.basis

    def axis(self, i: int) -> np.ndarray:
        return self.basis[:, i]


@dataclass(frozen=True, eq=False)
class Surface:
    id: int
    cls: str
    frame: Frame
    boundary: np.ndarray
    radius: float | None = None

    def __post_init__(self):
        if self.cls not in ("plane", "cylinder"):
            raise ValueError(f"surface {self.id}: unsupported class {self.cls!r}")
        object.__setattr__(self, "boundary", np.asarray(self.boundary, dtype=float).reshape(-1, 3))

    @classmethod
    def plane(cls, sid: int, frame: Frame, boundary) -> "Surface":
        b = np.asarray(boundary, dtype=float)
        if b.shape[-1] == 2:
            b = np.column_stack([b, np.zeros(len(b))])
        return cls(sid, "plane", frame, b)

    @classmethod
    def cylinder(cls, sid: int, frame: Frame, radius: float, length: float, z0: float = 0.0) -> "Surface":
        ang = np.arange(4) * (np.pi / 2)
        ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
        b = np.vstack([np.column_stack([ring, np.full(4, z0)]),
                       np.column_stack([ring, np.full(4, z0 + length)])])
        return cls(sid, "cylinder", frame, b, float(radius))

    @property
    def normal(self) -> np.ndarray:
        """Outward normal (planes) or axis direction (cylinders), global."""
        return self.frame.axis(2)

    def z_extent(self) -> tuple[float, float]:
        z = self.boundary[:, 2]
        return float(z.min()), float(z.max())


@dataclass
class NominalPart:
    surfaces: dict[int, Surface] = field(default_factory=dict)
    frame: Frame = field(default_factory=Frame)

    def add(self, s: Surface) -> Surface:
        if s.id in self.surfaces:
            raise ValueError(f"duplicate surface id {s.id}")
        self.surfaces[s.id] = s
        return s

    def __getitem__(self, sid: int) -> Surface:
        return self.surfaces[sid]

    def __contains__(self, sid) -> bool:
        return sid in self.surfaces


@dataclass(frozen=True)
class Violation:
    surface: int
    message: str

    def __str__(self) -> str:
        return f"surface {self.surface}: {self.message}"


def validate_part(p: NominalPart) -> list[Violation]:
    """All violated surface invariants; empty iff the part is valid."""
    out: list[Violation] = []
    if not p.frame.is_valid():
        out.append(Violation(-1, "global frame is not orthonormal and right-handed"))
    for sid, s in p.surfaces.items():
        if sid != s.id:
            out.append(Violation(sid, f"keyed as {sid} but carries id {s.id}"))
        if not s.frame.is_valid():
            out.append(Violation(sid, "local frame is not orthonormal and right-handed"))
        if len(s.boundary) < 3:
            out.append(Violation(sid, f"boundary has {len(s.boundary)} vertices, need at least 3"))
        if s.cls == "plane":
            for k, v in enumerate(s.boundary):
                if abs(v[2]) > BOUNDARY_TOL:
                    out.append(Violation(sid, f"vertex {k} off the plane (local z = {v[2]:.3g})"))
        else:
            if s.radius is None or s.radius <= 0:
                out.append(Violation(sid, "cylinder needs a positive radius"))
                continue
            for k, v in enumerate(s.boundary):
                d = float(np.hypot(v[0], v[1]))
                if abs(d - s.radius) > BOUNDARY_TOL:
                    out.append(Violation(sid, f"vertex {k} at distance {d:.6g} from the axis, radius {s.radius:.6g}"))
    return out


def circle_directions(n: int = DEFAULT_CIRCLE_POINTS) -> np.ndarray:
    ang = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(ang), np.sin(ang), np.zeros(n)])


def sample_points_local(s: Surface, n_circle: int = DEFAULT_CIRCLE_POINTS) -> np.ndarray:
    if s.cls == "plane":
        return s.boundary.copy()
    z0, z1 = s.z_extent()
    ring = circle_directions(n_circle) * s.radius
    return np.vstack([ring + [0.0, 0.0, z0], ring + [0.0, 0.0, z1]])


def sample_points(s: Surface, n_circle: int = DEFAULT_CIRCLE_POINTS) -> np.ndarray:
    """Boundary vertices (planes) or end-circle points (cylinders), global coordinates."""
    return s.frame.to_global(sample_points_local(s, n_circle))
