"""Worst-case tolerance analysis and synthesis for machining process plans."""
from mmptol.gauge import AssembledGauge, GaugeError, VirtualGauge, assemble_gauge
from mmptol.mmp import MMP, PositioningError, build_mmp
from mmptol.optimizer import (GuardError, InnerUnboundedError, OptimizationProblem, WorstCaseResult,
                              influence_coefficients, worst_case, worst_case_enumerate, worst_case_iterative)
from mmptol.part import Frame, NominalPart, Surface
from mmptol.planfile import PlanDocument, PlanError, fixture_path, load_plan_text, parse_plan
from mmptol.process import (ElementaryConnection, LinearConstraint, MachiningOperation, PartHolder, ProcessPlan,
                            SetUp, validate_plan)
from mmptol.report import Report
from mmptol.synthesis import (InfluenceTable, SpecProposal, SynthesisError, analyze, detect_redundant,
                              influence_table, propose_specs, size_tolerances, synthesize, verify_specs)
from mmptol.torsor import LinExpr, ParameterRegistry, Torsor

__version__ = "0.1.0"

__all__ = [
    "AssembledGauge", "ElementaryConnection", "Frame", "GaugeError", "GuardError", "InfluenceTable",
    "InnerUnboundedError", "LinExpr", "LinearConstraint", "MMP", "MachiningOperation", "NominalPart",
    "OptimizationProblem", "ParameterRegistry", "PartHolder", "PlanDocument", "PlanError", "PositioningError",
    "ProcessPlan", "Report", "SetUp", "SpecProposal", "Surface", "SynthesisError", "Torsor", "VirtualGauge",
    "WorstCaseResult", "analyze", "assemble_gauge", "build_mmp", "detect_redundant", "fixture_path",
    "influence_coefficients", "influence_table", "load_plan_text", "parse_plan", "propose_specs",
    "size_tolerances", "synthesize", "validate_plan", "verify_specs", "worst_case", "worst_case_enumerate",
    "worst_case_iterative",
]
