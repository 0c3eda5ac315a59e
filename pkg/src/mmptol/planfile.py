"""Plan documents: JSON text -> validated ProcessPlan, functional gauge, specs.

Errors are collected, classified (parse, schema, reference, semantic) and
located by line where the text allows it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .gauge import GaugeError, VirtualGauge
from .part import Frame, NominalPart, Surface
from .process import (ElementaryConnection, LinearConstraint, MachiningOperation, ProcessPlan, SetUp,
                      validate_plan)
from .synthesis import SpecProposal, SynthesisError
from .torsor import LinExpr

KINDS = ("parse", "schema", "reference", "semantic")


@dataclass(frozen=True)
class Problem:
    kind: str
    message: str
    line: int | None = None
    col: int | None = None
    path: str = ""

    def __str__(self) -> str:
        where = f"line {self.line}" + (f", col {self.col}" if self.col else "") if self.line else ""
        loc = ", ".join(x for x in (where, self.path) if x)
        return f"{self.kind} error{f' ({loc})' if loc else ''}: {self.message}"


class PlanError(ValueError):
    def __init__(self, problems: list[Problem], source: str = ""):
        self.problems = list(problems)
        self.source = source
        head = f"{source}: " if source else ""
        super().__init__(head + "; ".join(str(p) for p in self.problems))

    @property
    def kinds(self) -> set[str]:
        return {p.kind for p in self.problems}


@dataclass
class PlanDocument:
    plan: ProcessPlan
    functional_gauge: VirtualGauge
    specs: list[SpecProposal] = field(default_factory=list)
    source: str = ""
    description: str = ""


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("mmptol.data").joinpath("plan.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _node_at(root, path):
    """YAML node for a JSON path, or the deepest node reached."""
    node = root
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node


def _locator(text: str):
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        root = None

    def locate(path):
        if root is None:
            return None, None
        m = _node_at(root, list(path)).start_mark
        return m.line + 1, m.column + 1
    return locate


def _jpath(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _bounds(d: dict | None) -> dict:
    return {k: (float(v[0]), float(v[1])) for k, v in (d or {}).items()}


def _surface(d: dict) -> Surface:
    sid = int(d["id"])
    if d["class"] == "plane":
        frame = Frame.from_axes(d["origin"], d["normal"], d.get("xdir"))
        return Surface.plane(sid, frame, d["boundary"])
    frame = Frame.from_axes(d["origin"], d["axis"], d.get("xdir"))
    return Surface.cylinder(sid, frame, float(d["radius"]), float(d["length"]), float(d.get("z0", 0.0)))


def _constraint(d: dict, family: str) -> LinearConstraint:
    expr = LinExpr({k: float(v) for k, v in d["expr"].items()})
    return LinearConstraint(expr, d["sense"], float(d["bound"]), d.get("family", family), d.get("label", ""))


def _references(doc: dict, locate) -> list[Problem]:
    ids = {s["id"] for s in doc["nominal_part"]["surfaces"]}
    out = []

    def check(sid, path, what):
        if sid not in ids:
            line, col = locate(path)
            out.append(Problem("reference", f"{what} refers to undeclared surface {sid}", line, col, _jpath(path)))

    seen = set()
    for i, s in enumerate(doc["nominal_part"]["surfaces"]):
        if s["id"] in seen:
            line, col = locate(["nominal_part", "surfaces", i, "id"])
            out.append(Problem("reference", f"surface {s['id']} declared twice", line, col))
        seen.add(s["id"])
    for i, r in enumerate(doc.get("raw_surfaces", [])):
        check(r["surface"], ["raw_surfaces", i, "surface"], "raw surface")
    setup_ids = set()
    for i, su in enumerate(doc["setups"]):
        setup_ids.add(su["id"])
        for j, c in enumerate(su["connections"]):
            check(c["surface"], ["setups", i, "connections", j, "surface"], f"set-up {su['id']} connection")
        for j, m in enumerate(su.get("machining", [])):
            check(m["surface"], ["setups", i, "machining", j, "surface"], f"set-up {su['id']} machining")
    g = doc["functional_gauge"]
    check(g["toleranced"], ["functional_gauge", "toleranced"], "functional gauge")
    for j, d in enumerate(g.get("datums", [])):
        check(d, ["functional_gauge", "datums", j], "functional gauge datum")
    for i, sp in enumerate(doc.get("manufacturing_specs", [])):
        if sp["setup"] not in setup_ids:
            line, col = locate(["manufacturing_specs", i, "setup"])
            out.append(Problem("reference", f"specification refers to undeclared set-up {sp['setup']}",
                               line, col, _jpath(["manufacturing_specs", i, "setup"])))
        check(sp["toleranced"], ["manufacturing_specs", i, "toleranced"], "specification")
        for j, d in enumerate(sp.get("datums", [])):
            check(d, ["manufacturing_specs", i, "datums", j], "specification datum")
    return out


def _build(doc: dict) -> PlanDocument:
    part = NominalPart()
    for s in doc["nominal_part"]["surfaces"]:
        part.add(_surface(s))
    raw = {int(r["surface"]): _bounds(r.get("bounds")) for r in doc.get("raw_surfaces", [])}
    setups = []
    for su in doc["setups"]:
        conns = [ElementaryConnection(
            int(c["surface"]), int(c["rank"]), c.get("contact", "slipping"), c.get("holder"),
            _bounds(c.get("bounds")), _bounds(c.get("link_bounds")), float(c.get("clearance", 0.0)),
            c.get("fit", "hole"), tuple(c["holder_normal"]) if "holder_normal" in c else None,
            **({"vee_angle": float(c["vee_angle"])} if "vee_angle" in c else {}),
            vee_opening=tuple(c["vee_opening"]) if "vee_opening" in c else None)
            for c in su["connections"]]
        mach = [MachiningOperation(int(m["surface"]), _bounds(m.get("bounds"))) for m in su.get("machining", [])]
        cons = [_constraint(c, "CM") for c in su.get("constraints", [])]
        setups.append(SetUp(int(su["id"]), conns, mach, constraints=cons))
    plan = ProcessPlan(part, setups, raw)
    g = doc["functional_gauge"]
    gauge = VirtualGauge(g.get("id", "F"), int(g["toleranced"]), tuple(g.get("datums", ())), float(g["width"]),
                         g.get("type", "location"), "functional", g.get("association", "fixed"))
    specs = [SpecProposal(int(s["setup"]), int(s["toleranced"]), tuple(s.get("datums", ())), s["type"],
                          s.get("value"), float(s.get("weight", 1.0)))
             for s in doc.get("manufacturing_specs", [])]
    return PlanDocument(plan, gauge, specs, description=doc.get("description", ""))


def load_plan_text(text: str, name: str = "<string>") -> PlanDocument:
    if not text.strip():
        raise PlanError([Problem("parse", "document is empty", 1, 1)], name)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanError([Problem("parse", exc.msg, exc.lineno, exc.colno)], name) from None
    locate = _locator(text)
    validator = jsonschema.Draft202012Validator(schema())
    errs = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errs:
        probs = []
        for e in errs:
            line, col = locate(e.absolute_path)
            probs.append(Problem("schema", e.message, line, col, _jpath(e.absolute_path)))
        raise PlanError(probs, name)
    refs = _references(doc, locate)
    if refs:
        raise PlanError(refs, name)
    try:
        pd = _build(doc)
    except (ValueError, GaugeError, SynthesisError) as exc:
        raise PlanError([Problem("semantic", str(exc))], name) from None
    issues = validate_plan(pd.plan)
    if issues:
        raise PlanError([Problem("semantic", str(i)) for i in issues], name)
    pd.source = name
    return pd


def parse_plan(path) -> PlanDocument:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanError([Problem("parse", f"cannot read file: {exc.strerror or exc}")], str(p)) from None
    except UnicodeDecodeError as exc:
        raise PlanError([Problem("parse", f"not UTF-8 text: {exc.reason}")], str(p)) from None
    return load_plan_text(text, str(p))


def fixture_path(name: str = "four_setups") -> Path:
    """Path of a plan shipped with the package."""
    return Path(str(resources.files("mmptol.data").joinpath(f"{name}.json")))
