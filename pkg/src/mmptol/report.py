"""Run reports: one record, two renderings (JSON and text) carrying the same numbers."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .optimizer import WorstCaseResult
from .synthesis import InfluenceTable, Sizing, SpecProposal, Verification
from .torsor import ROTATION_KINDS, parse_name

SCHEMA_VERSION = 1


def _enc(v):
    """JSON-safe floats: non-finite values become strings."""
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _enc(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_enc(x) for x in v]
    return v


def _dec(v):
    if v in ("inf", "-inf", "nan"):
        return float(v)
    if isinstance(v, dict):
        return {k: _dec(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_dec(x) for x in v]
    return v


def _wc_to_dict(r: WorstCaseResult) -> dict:
    return {"status": r.status, "value": r.value, "method": r.method, "converged": r.converged,
            "evaluations": r.evaluations, "message": r.message,
            "outer": dict(sorted(r.outer.items())), "inner": dict(sorted(r.inner.items()))}


def _wc_from_dict(d: dict) -> WorstCaseResult:
    return WorstCaseResult(d["status"], float(d["value"]), dict(d["outer"]), dict(d["inner"]), d["method"],
                           bool(d["converged"]), int(d["evaluations"]), d["message"])


@dataclass
class Report:
    command: str
    source: str
    metadata: dict = field(default_factory=dict)
    analysis: WorstCaseResult | None = None
    influence: InfluenceTable | None = None
    proposals: list[SpecProposal] = field(default_factory=list)
    verification: Verification | None = None
    sizing: Sizing | None = None
    redundant: list[bool] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    exit_code: int = 0

    def to_dict(self) -> dict:
        return _enc({
            "version": SCHEMA_VERSION,
            "command": self.command,
            "source": self.source,
            "metadata": dict(self.metadata),
            "analysis": _wc_to_dict(self.analysis) if self.analysis else None,
            "influence": self.influence.to_dict() if self.influence else None,
            "proposals": [p.to_dict() for p in self.proposals],
            "verification": self.verification.to_dict() if self.verification else None,
            "sizing": self.sizing.to_dict() if self.sizing else None,
            "redundant": list(self.redundant),
            "warnings": list(self.warnings),
            "exit_code": self.exit_code,
        })

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        d = _dec(d)
        return cls(d["command"], d["source"], dict(d["metadata"]),
                   _wc_from_dict(d["analysis"]) if d.get("analysis") else None,
                   InfluenceTable.from_dict(d["influence"]) if d.get("influence") else None,
                   [SpecProposal.from_dict(p) for p in d.get("proposals", [])],
                   Verification.from_dict(d["verification"]) if d.get("verification") else None,
                   Sizing.from_dict(d["sizing"]) if d.get("sizing") else None,
                   list(d.get("redundant", [])), list(d.get("warnings", [])), int(d["exit_code"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        return render_text(self)


def _num(v: float, nd: int = 2) -> str:
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return f"{v:.{nd}f}"


def _param_value(pid: str, v: float) -> str:
    try:
        kind = parse_name(pid)["kind"]
    except ValueError:
        kind = ""
    if kind in ROTATION_KINDS:
        return f"{v:.3e} rad ({math.degrees(v):.3e} deg)"
    return f"{v:.4f} mm"


def influence_lines(table: InfluenceTable, threshold: float = 1e-9) -> list[str]:
    """Set-up / surface / parameter layout; non-influential cells are blank."""
    lines = [f"{'set-up':>6}  {'surface':>7}  {'parameter':<12}  {'coefficient':>11}"]
    last = (None, None)
    for r in table.rows:
        su = str(r.setup) if (r.setup, None) != (last[0], None) else ""
        sf = str(r.surface) if (r.setup, r.surface) != last else ""
        coef = _num(r.coefficient) if r.coefficient >= threshold else ""
        lines.append(f"{su:>6}  {sf:>7}  {r.parameter:<12}  {coef:>11}")
        last = (r.setup, r.surface)
    return lines


def render_text(rep: Report) -> str:
    out = [f"mmptol {rep.command}: {rep.source}"]
    meta = ", ".join(f"{k}={rep.metadata[k]}" for k in sorted(rep.metadata))
    if meta:
        out.append(f"  {meta}")
    if rep.analysis:
        a = rep.analysis
        out.append("")
        out.append(f"worst case: {a.status}, value {_num(a.value, 6)} mm ({a.method}, "
                   f"{'converged' if a.converged else 'not converged'}, {a.evaluations} evaluations)")
        if a.message:
            out.append(f"  {a.message}")
        if a.outer and rep.command == "analyze":
            nz = [(pid, v) for pid, v in sorted(a.outer.items()) if v != 0.0]
            out.append(f"worst-case parameters ({len(a.outer) - len(nz)} at zero not shown):")
            for pid, v in nz:
                out.append(f"  {pid:<12} {_param_value(pid, v)}")
    if rep.influence and rep.command in ("influence", "synthesize"):
        out.append("")
        out.append("influence coefficients:")
        out += ["  " + ln for ln in influence_lines(rep.influence)]
    if rep.proposals:
        out.append("")
        out.append("specifications:")
        for i, p in enumerate(rep.proposals):
            val = f", value {_num(p.value, 4)} mm" if p.value is not None else ""
            flag = ""
            if i < len(rep.redundant):
                flag = ", unnecessary" if rep.redundant[i] else ", required"
            out.append(f"  {p.label()}{val}{flag}")
    if rep.sizing:
        s = rep.sizing
        out.append("")
        out.append(f"sizing: alpha {s.alpha:.6g}, worst case {_num(s.value, 6)} mm, {s.evaluations} evaluations")
    if rep.verification:
        v = rep.verification
        out.append("")
        verdict = "conform" if v.conform else "non-conform"
        out.append(f"verification: {v.status}, value {_num(v.value, 6)} mm, {verdict}")
        if v.status == "INCOMPLETE":
            out.append("  the worst case is DIVERGENT: some influential parameter is left unbounded by the specifications")
        if v.released:
            out.append(f"  process capabilities replaced by specifications: {len(v.released)} constraints")
    for w in rep.warnings:
        out.append(f"warning: {w}")
    return "\n".join(out) + "\n"
