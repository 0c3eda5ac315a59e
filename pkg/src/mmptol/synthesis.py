"""From worst-case influence to per-set-up manufacturing specifications.

The functional tolerance is analysed on the full MMP; influential defect
parameters are grouped by set-up and surface, turned into datum systems and
orientation / location specifications, then checked by re-solving the worst
case with the specifications in place of the process capabilities.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .gauge import VirtualGauge, assemble_gauge, gap_expressions
from .mmp import MMP, build_mmp
from .optimizer import (BOUNDED, DIVERGENT, INFEASIBLE, OptimizationProblem, WorstCaseResult,
                        influence_details, worst_case)
from .process import LinearConstraint, ProcessPlan
from .torsor import ROTATION_KINDS, parse_name

log = logging.getLogger(__name__)

COMPLETE = "COMPLETE"
INCOMPLETE = "INCOMPLETE"
THRESHOLD = 1e-9
REDUNDANCY_TOL = 1e-9
SIZE_RTOL = 1e-4


class SynthesisError(ValueError):
    pass


# --- influence table ---------------------------------------------------------------

@dataclass(frozen=True)
class InfluenceRow:
    setup: int
    surface: int
    parameter: str
    kind: str
    role: str
    coefficient: float
    dual: float = 0.0

    def to_dict(self) -> dict:
        return {"setup": self.setup, "surface": self.surface, "parameter": self.parameter,
                "kind": self.kind, "role": self.role, "coefficient": self.coefficient, "dual": self.dual}

    @classmethod
    def from_dict(cls, d: dict) -> "InfluenceRow":
        return cls(int(d["setup"]), int(d["surface"]), d["parameter"], d["kind"], d["role"],
                   float(d["coefficient"]), float(d.get("dual", 0.0)))


@dataclass
class InfluenceTable:
    """Rows keyed by (set-up, surface, parameter); the role comes from the name:
    ``kind_iSj`` is a positioning parameter, ``kind_i`` a machined one."""

    rows: list[InfluenceRow] = field(default_factory=list)
    value: float = math.nan
    status: str = BOUNDED

    @classmethod
    def from_coefficients(cls, coefficients: dict[str, float], mmp: MMP, dual: dict[str, float] | None = None,
                          value: float = math.nan, status: str = BOUNDED) -> "InfluenceTable":
        rows = []
        for pid, c in coefficients.items():
            info = parse_name(pid)
            if info["role"] in ("functional_gauge", "manufacturing_gauge"):
                continue
            if info["setup"] is not None:
                role, setup = "positioning", info["setup"]
            else:
                role, setup = "machined", mmp.produced_in.get(info["surface"], 0)
            rows.append(InfluenceRow(setup, info["surface"], pid, info["kind"], role, float(c),
                                     float((dual or {}).get(pid, 0.0))))
        rows.sort(key=lambda r: (r.setup, r.role != "positioning", r.surface, r.parameter))
        return cls(rows, value, status)

    def influential(self, threshold: float = THRESHOLD) -> list[InfluenceRow]:
        return [r for r in self.rows if r.coefficient >= threshold]

    def coefficient(self, parameter: str) -> float:
        for r in self.rows:
            if r.parameter == parameter:
                return r.coefficient
        return 0.0

    def parameters(self, threshold: float = THRESHOLD) -> set[str]:
        return {r.parameter for r in self.influential(threshold)}

    def to_dict(self) -> dict:
        return {"value": self.value, "status": self.status, "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict) -> "InfluenceTable":
        return cls([InfluenceRow.from_dict(r) for r in d["rows"]], float(d["value"]), d["status"])


# --- functional analysis -------------------------------------------------------------

@dataclass
class Analysis:
    """Worst case of the functional tolerance over the process (process capabilities in force)."""

    mmp: MMP
    gauge: VirtualGauge
    problem: OptimizationProblem
    result: WorstCaseResult
    gaps: list
    inner: list[str]
    inner_constraints: list[LinearConstraint]


def functional_problem(plan: ProcessPlan, gauge: VirtualGauge, mmp: MMP | None = None):
    mmp = mmp or build_mmp(plan)
    ag = assemble_gauge(gauge, mmp)
    gs = gap_expressions(ag)
    order = ag.registry.ids()
    prob = OptimizationProblem.build(gs.gaps, list(mmp.constraints) + ag.constraints, ag.links, order, gs.labels)
    return mmp, ag, gs, prob


def analyze(plan: ProcessPlan, gauge: VirtualGauge, solver: str = "iterative", mmp: MMP | None = None,
            **kw) -> Analysis:
    mmp, ag, gs, prob = functional_problem(plan, gauge, mmp)
    res = worst_case(prob, solver, **kw)
    return Analysis(mmp, gauge, prob, res, gs.gaps, ag.links, ag.constraints)


def influence_table(analysis: Analysis, threshold: float = THRESHOLD) -> InfluenceTable:
    res = analysis.result
    if res.status != BOUNDED:
        return InfluenceTable([], res.value, res.status)
    inf = influence_details(analysis.problem, res, threshold=threshold)
    return InfluenceTable.from_coefficients(inf.coefficients, analysis.mmp, inf.dual, res.value, res.status)


# --- classification and proposals ------------------------------------------------------

@dataclass
class SetupClass:
    setup: int
    positioning: dict[int, str] = field(default_factory=dict)
    ranks: dict[int, int] = field(default_factory=dict)
    machined: dict[int, str] = field(default_factory=dict)
    kinds: dict[int, tuple[str, ...]] = field(default_factory=dict)


def _category(kinds) -> str:
    return "orientation" if all(k in ROTATION_KINDS for k in kinds) else "location"


def classify_parameters(table: InfluenceTable, plan: ProcessPlan,
                        threshold: float = THRESHOLD) -> dict[int, SetupClass]:
    """Per set-up: influential positioning surfaces (with their rank) and
    influential machined surfaces, each tagged orientation or location."""
    by_setup: dict[int, dict] = {}
    for r in table.influential(threshold):
        if r.setup == 0:
            # raw-surface defects are never toleranced by the process
            continue
        slot = by_setup.setdefault(r.setup, {"positioning": {}, "machined": {}})
        slot[r.role].setdefault(r.surface, []).append(r.kind)
    out = {}
    for sid in sorted(by_setup):
        slot = by_setup[sid]
        try:
            su = plan.setup(sid)
            ranks = {c.part_surface: c.rank for c in su.connections}
        except KeyError:
            ranks = {}
        sc = SetupClass(sid)
        for surf, kinds in sorted(slot["positioning"].items(), key=lambda kv: (ranks.get(kv[0], 99), kv[0])):
            sc.positioning[surf] = _category(kinds)
            sc.ranks[surf] = ranks.get(surf, 0)
        for surf, kinds in sorted(slot["machined"].items()):
            sc.machined[surf] = _category(kinds)
            sc.kinds[surf] = tuple(sorted(set(kinds)))
        out[sid] = sc
    return out


@dataclass
class SpecProposal:
    """Datum system and toleranced surface of one specification in a set-up.

    ``value`` is the full zone width; ``weight`` scales it during sizing.
    """

    setup: int
    toleranced: int
    datums: tuple[int, ...]
    spec_type: str
    value: float | None = None
    weight: float = 1.0
    active: bool = True
    warning: str = ""

    def __post_init__(self):
        self.datums = tuple(int(d) for d in self.datums)
        if self.toleranced in self.datums:
            raise SynthesisError(f"set-up {self.setup}: surface {self.toleranced} cannot be its own datum")

    @property
    def key(self) -> str:
        return f"S{self.setup}-{self.toleranced}"

    def label(self) -> str:
        datum = "|" + "|".join(map(str, self.datums)) + "|" if self.datums else "(no datum)"
        return f"set-up {self.setup}: {self.spec_type} of {self.toleranced} w.r.t. {datum}"

    def to_dict(self) -> dict:
        return {"setup": self.setup, "toleranced": self.toleranced, "datums": list(self.datums),
                "type": self.spec_type, "value": self.value, "weight": self.weight,
                "active": self.active, "warning": self.warning}

    @classmethod
    def from_dict(cls, d: dict) -> "SpecProposal":
        return cls(int(d["setup"]), int(d["toleranced"]), tuple(d.get("datums", ())), d["type"],
                   d.get("value"), float(d.get("weight", 1.0)), bool(d.get("active", True)),
                   d.get("warning", ""))


SPEC_MODES = ("location", "split")


def propose_specs(classes: dict[int, SetupClass], plan: ProcessPlan | None = None,
                  mode: str = "location") -> list[SpecProposal]:
    """One specification per influential machined surface, against the
    influential positioning surfaces in hierarchy order.

    With ``mode="split"`` a location spec whose surface also has influential
    rotations gets a companion orientation spec on the same datums.
    """
    if mode not in SPEC_MODES:
        raise SynthesisError(f"unknown proposal mode {mode!r}; expected one of {SPEC_MODES}")
    out = []
    for sid in sorted(classes):
        sc = classes[sid]
        datums = tuple(sorted(sc.positioning, key=lambda s: (sc.ranks.get(s, 99), s)))
        for surf in sorted(sc.machined):
            datum = tuple(d for d in datums if d != surf)
            warning = ""
            if not datum:
                warning = f"set-up {sid}: surface {surf} is influential but no positioning surface is"
                log.warning(warning)
            out.append(SpecProposal(sid, surf, datum, sc.machined[surf], warning=warning))
            rotations = [k for k in sc.kinds.get(surf, ()) if k in ROTATION_KINDS]
            if mode == "split" and sc.machined[surf] == "location" and rotations:
                out.append(SpecProposal(sid, surf, datum, "orientation", warning=warning))
    return out


# --- manufacturing specification model ------------------------------------------------------

@dataclass
class Verification:
    status: str
    value: float
    conform: bool
    result: WorstCaseResult
    released: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"status": self.status, "value": self.value, "conform": self.conform,
                "released": list(self.released), "message": self.result.message}

    @classmethod
    def from_dict(cls, d: dict) -> "Verification":
        st = d["status"]
        inner = {COMPLETE: BOUNDED, INCOMPLETE: DIVERGENT}.get(st, INFEASIBLE)
        return cls(st, float(d["value"]), bool(d["conform"]),
                   WorstCaseResult(inner, float(d["value"]), message=d.get("message", "")),
                   list(d.get("released", [])))


class SpecModel:
    """Functional gaps plus manufacturing gauges built once; the outer set is
    re-assembled cheaply for any choice of specification values."""

    def __init__(self, plan: ProcessPlan, gauge: VirtualGauge, proposals: Sequence[SpecProposal],
                 influential: set[str], mmp: MMP | None = None):
        self.plan = plan
        self.mmp = mmp or build_mmp(plan)
        fa = assemble_gauge(gauge, self.mmp)
        fg = gap_expressions(fa)
        self.gaps, self.labels = fg.gaps, fg.labels
        self.inner = list(fa.links)
        self.inner_constraints = list(fa.constraints)
        self.order = list(fa.registry.ids())
        self.released = sorted({c.label or repr(c.expr) for c in self.mmp.constraints
                                if c.params() & influential})
        self.kept = [c for c in self.mmp.constraints if not (c.params() & influential)]
        self.proposals = list(proposals)
        self.spec_gaps = []
        seen: dict[str, int] = {}
        for p in self.proposals:
            n = seen.get(p.key, 0)
            seen[p.key] = n + 1
            gid = p.key.replace("-", "x") + ("" if n == 0 else f"n{n}")
            mg = VirtualGauge(gid, p.toleranced, p.datums, 1.0, p.spec_type, "manufacturing", setup=p.setup)
            ag = assemble_gauge(mg, self.mmp.truncate(p.setup))
            gs = gap_expressions(ag)
            # strip the unit half-width so any value can be put back in
            self.spec_gaps.append(([g - 0.5 for g in gs.gaps], gs.labels, ag.constraints, gid))
            self.order += [q for q in ag.links if q not in self.order]

    def problem(self, values: Sequence[float], active: Sequence[bool] | None = None) -> OptimizationProblem:
        cons = list(self.kept) + list(self.inner_constraints)
        for i, (gaps, labels, extra, gid) in enumerate(self.spec_gaps):
            if active is not None and not active[i]:
                continue
            half = 0.5 * float(values[i])
            cons += [LinearConstraint(g + half, ">=", 0.0, "CMGP", f"{gid} {lab}")
                     for g, lab in zip(gaps, labels) if not g.is_constant()]
            cons += extra
        return OptimizationProblem.build(self.gaps, cons, self.inner, self.order, self.labels)

    def verify(self, values: Sequence[float], active: Sequence[bool] | None = None,
               solver: str = "iterative", **kw) -> Verification:
        res = worst_case(self.problem(values, active), solver, **kw)
        if res.status == BOUNDED:
            status = COMPLETE
        elif res.status == DIVERGENT:
            status = INCOMPLETE
        else:
            status = INFEASIBLE
        return Verification(status, res.value, status == COMPLETE and res.value >= 0.0, res, self.released)


def _values(proposals: Sequence[SpecProposal]) -> list[float]:
    vals = []
    for p in proposals:
        v = p.value if p.value is not None else p.weight
        if not v > 0:
            raise SynthesisError(f"{p.label()}: tolerance value must be positive")
        vals.append(float(v))
    return vals


def verify_specs(proposals: Sequence[SpecProposal], plan: ProcessPlan, gauge: VirtualGauge,
                 table: InfluenceTable, solver: str = "iterative", model: SpecModel | None = None,
                 **kw) -> Verification:
    """Worst case with manufacturing specifications replacing the capabilities
    of the influential parameters: COMPLETE iff bounded, conform iff >= 0."""
    for p in proposals:
        if p.value is None or not p.value > 0:
            raise SynthesisError(f"{p.label()}: needs a positive tolerance value before verification")
    model = model or SpecModel(plan, gauge, proposals, table.parameters())
    return model.verify([p.value for p in proposals], [p.active for p in proposals], solver, **kw)


@dataclass
class Sizing:
    alpha: float
    values: list[float]
    value: float
    evaluations: int

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "values": list(self.values), "value": self.value,
                "evaluations": self.evaluations}

    @classmethod
    def from_dict(cls, d: dict) -> "Sizing":
        return cls(float(d["alpha"]), [float(v) for v in d["values"]], float(d["value"]), int(d["evaluations"]))


def size_tolerances(proposals: Sequence[SpecProposal], plan: ProcessPlan, gauge: VirtualGauge,
                    table: InfluenceTable, solver: str = "iterative", model: SpecModel | None = None,
                    rtol: float = SIZE_RTOL, max_doublings: int = 60, **kw) -> tuple[list[SpecProposal], Sizing]:
    """Largest uniform scale ``alpha`` on the proposal values (or weights)
    keeping the worst case non-negative, by bracketing and bisection."""
    props = [p for p in proposals if p.active]
    if not props:
        raise SynthesisError("no active specification to size")
    base = _values(props)
    model = model or SpecModel(plan, gauge, props, table.parameters())
    evals = 0

    def f(alpha):
        nonlocal evals
        evals += 1
        v = model.verify([alpha * b for b in base], solver=solver, **kw)
        if v.status == INCOMPLETE:
            raise SynthesisError("specification set is incomplete; sizing needs a COMPLETE set")
        if v.status != COMPLETE:
            return -math.inf
        return v.value

    lo, hi = None, None
    a = 1.0
    va = f(a)
    if va >= 0:
        lo = a
        for _ in range(max_doublings):
            a *= 2.0
            if f(a) < 0:
                hi = a
                break
            lo = a
        if hi is None:
            log.warning("worst case stays non-negative up to alpha = %g; specifications do not bind", lo)
            vals = [lo * b for b in base]
            return _sized(proposals, props, vals), Sizing(lo, vals, f(lo), evals)
    else:
        hi = a
        for _ in range(max_doublings):
            a *= 0.5
            if f(a) >= 0:
                lo = a
                break
            hi = a
        if lo is None:
            raise SynthesisError("no positive tolerance value satisfies the functional tolerance")
    while (hi - lo) > rtol * lo:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    vals = [lo * b for b in base]
    check = f(lo)
    return _sized(proposals, props, vals), Sizing(lo, vals, check, evals)


def _sized(all_props, active_props, values):
    it = iter(values)
    out = []
    for p in all_props:
        out.append(replace(p, value=next(it)) if p in active_props and p.active else p)
    return out


def detect_redundant(proposals: Sequence[SpecProposal], plan: ProcessPlan, gauge: VirtualGauge,
                     table: InfluenceTable, solver: str = "iterative", model: SpecModel | None = None,
                     workers: int = 1, **kw) -> list[bool]:
    """Flag each specification whose removal leaves the worst case bounded
    and unchanged within 1e-9."""
    if not proposals:
        return []
    props = list(proposals)
    vals = [p.value for p in props]
    if any(v is None for v in vals):
        raise SynthesisError("redundancy detection needs tolerance values")
    model = model or SpecModel(plan, gauge, props, table.parameters())
    full = model.verify(vals, solver=solver, **kw)
    if full.status != COMPLETE:
        raise SynthesisError("redundancy detection needs a COMPLETE specification set")

    def without(i):
        active = [j != i for j in range(len(props))]
        v = model.verify(vals, active, solver=solver, **kw)
        return v.status == COMPLETE and abs(v.value - full.value) < REDUNDANCY_TOL

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(without, range(len(props))))
    return [without(i) for i in range(len(props))]


# --- report ------------------------------------------------------------------------------

@dataclass
class SynthesisReport:
    table: InfluenceTable
    proposals: list[SpecProposal]
    verification: Verification | None = None
    sizing: Sizing | None = None
    redundant: list[bool] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def status(self) -> str | None:
        return self.verification.status if self.verification else None

    def to_dict(self) -> dict:
        return {
            "influence": self.table.to_dict(),
            "proposals": [p.to_dict() for p in self.proposals],
            "verification": self.verification.to_dict() if self.verification else None,
            "sizing": self.sizing.to_dict() if self.sizing else None,
            "redundant": list(self.redundant),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisReport":
        return cls(InfluenceTable.from_dict(d["influence"]),
                   [SpecProposal.from_dict(p) for p in d["proposals"]],
                   Verification.from_dict(d["verification"]) if d.get("verification") else None,
                   Sizing.from_dict(d["sizing"]) if d.get("sizing") else None,
                   list(d.get("redundant", [])), list(d.get("warnings", [])))


def synthesize(plan: ProcessPlan, gauge: VirtualGauge, solver: str = "iterative", size: bool = True,
               mode: str = "location", **kw) -> SynthesisReport:
    """Analyse, propose, size and check redundancy in one pass."""
    an = analyze(plan, gauge, solver, **kw)
    table = influence_table(an)
    if table.status != BOUNDED:
        return SynthesisReport(table, [], warnings=[f"functional analysis is {table.status}"])
    props = propose_specs(classify_parameters(table, plan), plan, mode)
    rep = SynthesisReport(table, props, warnings=[p.warning for p in props if p.warning])
    if not props or not size:
        return rep
    model = SpecModel(plan, gauge, props, table.parameters(), an.mmp)
    sized, sz = size_tolerances(props, plan, gauge, table, solver, model, **kw)
    rep.proposals, rep.sizing = sized, sz
    rep.verification = model.verify(sz.values, solver=solver, **kw)
    rep.redundant = detect_redundant(sized, plan, gauge, table, solver, model, **kw)
    return rep
