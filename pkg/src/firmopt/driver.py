"""Fixed-point runner, the arithmetic oracle and report emitters."""

from __future__ import annotations

import copy
import html
import json
import time
from dataclasses import dataclass, field

from .errors import DivisionByZero, NonConvergence, NonPureSubgraph, UnknownNode
from .gxl import GxlDocument
from .local_opt import ChangeSet, FoldConfig, run_local_opt_once
from .model import RULES, ValidationReport

REPORT_FORMATS = ("text", "json", "html")


@dataclass
class PipelineConfig:
    max_iterations: int = 1000
    emit_stats: bool = False
    report_format: str = "text"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.report_format not in REPORT_FORMATS:
            raise ValueError("report_format must be one of %s" % (REPORT_FORMATS,))


@dataclass
class RunSummary:
    iterations: int = 0
    per_iteration: list = field(default_factory=list)
    wall_time_ms: float = 0.0
    converged: bool = False

    def total(self) -> ChangeSet:
        out = ChangeSet()
        for cs in self.per_iteration:
            out += cs
        return out

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time_ms": round(self.wall_time_ms, 3),
            "total": self.total().as_dict(),
            "per_iteration": [cs.as_dict() for cs in self.per_iteration],
        }


def run_to_fixpoint(doc: GxlDocument, fold_cfg: FoldConfig = None,
                    pipe_cfg: PipelineConfig = None, in_place: bool = False):
    """Repeat :func:`run_local_opt_once` until an execution changes nothing.

    Returns ``(document, summary)``.  The input is copied unless
    ``in_place`` is set.  Raises :class:`NonConvergence` if
    ``max_iterations`` executions all made changes.
    """
    fold_cfg = fold_cfg or FoldConfig()
    pipe_cfg = pipe_cfg or PipelineConfig()
    if not in_place:
        doc = copy.deepcopy(doc)
    summary = RunSummary()
    t0 = time.perf_counter()
    while summary.iterations < pipe_cfg.max_iterations:
        cs = run_local_opt_once(doc, fold_cfg)
        summary.iterations += 1
        summary.per_iteration.append(cs)
        if cs.is_empty():
            summary.converged = True
            break
    summary.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    if not summary.converged:
        raise NonConvergence("no fixed point after %d iterations" % summary.iterations, summary)
    return doc, summary


# -- oracle ----------------------------------------------------------------------

def _oracle_apply(op, a, b):
    if op == "Add":
        return a + b
    if op == "Sub":
        return a - b
    if op == "Mul":
        return a * b
    if op == "Div":
        if b == 0:
            raise DivisionByZero("oracle hit a division by zero")
        q = abs(a) // abs(b)
        return q if (a < 0) == (b < 0) else -q
    raise NonPureSubgraph("operation %r is not foldable arithmetic" % op)


def interpret_const_expression(doc: GxlDocument, root: str) -> int:
    """Evaluate the Const/arithmetic DAG hanging off ``root`` directly from the
    edge lists, without going through the model or the folding code."""
    for g in doc.default_graphs():
        nodes = {n.id: n for n in g.nodes}
        if root in nodes:
            break
    else:
        raise UnknownNode(root)

    operands = {}
    for e in g.edges:
        if e.type_ref.lstrip("#").lower() != "dataflow":
            continue
        operands.setdefault(e.from_id, []).append((e.get("position"), e.to_id))

    values = {}
    stack = [(root, False)]
    while stack:
        nid, expanded = stack.pop()
        if nid in values:
            continue
        node = nodes.get(nid)
        if node is None:
            raise NonPureSubgraph("dangling operand %r" % nid)
        name = node.type_name
        if name == "Const":
            v = node.get("value")
            if not isinstance(v, int) or isinstance(v, bool):
                raise NonPureSubgraph("Const %r has no int value" % nid)
            values[nid] = v
            continue
        if name not in ("Add", "Sub", "Mul", "Div"):
            raise NonPureSubgraph("node %r of type %s" % (nid, node.type_ref))
        ops = sorted(operands.get(nid, []), key=lambda p: p[0])
        if len(ops) != 2:
            raise NonPureSubgraph("node %r has %d operands" % (nid, len(ops)))
        if not expanded:
            stack.append((nid, True))
            stack.extend((o, False) for _, o in ops if o not in values)
            continue
        values[nid] = _oracle_apply(name, values[ops[0][1]], values[ops[1][1]])
    return values[root]


# -- reports ----------------------------------------------------------------------

def _violation_rows(report: ValidationReport):
    return [{"rule_id": v.rule_id, "element_id": v.element_id, "message": v.message}
            for v in report.violations]


def emit_validation_report(report: ValidationReport, fmt: str = "text", title: str = "") -> bytes:
    if fmt == "text":
        lines = ["%s\t%s\t%s" % (v.rule_id, v.element_id, v.message) for v in report.violations]
        return "".join(line + "\n" for line in lines).encode("utf-8")
    if fmt == "json":
        return (json.dumps(_violation_rows(report), indent=2) + "\n").encode("utf-8")
    if fmt != "html":
        raise ValueError("unknown report format %r" % fmt)

    n = len(report.violations)
    status = "PASS" if n == 0 else "FAIL"
    colour = "#2e7d32" if n == 0 else "#c62828"
    rows = "\n".join(
        "<tr><td>%s</td><td>%s</td><td>%s</td></tr>"
        % (html.escape(v.rule_id), html.escape(v.element_id), html.escape(v.message))
        for v in report.violations
    )
    rules = "\n".join("<li><b>%s</b> %s</li>" % (k, html.escape(d)) for k, d in RULES.items())
    page = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>Validation %(title)s</title>
<style>
body { font-family: sans-serif; margin: 2em; }
.banner { padding: 0.6em 1em; color: white; background: %(colour)s; font-weight: bold; }
table { border-collapse: collapse; margin-top: 1em; }
td, th { border: 1px solid #999; padding: 0.2em 0.6em; text-align: left; }
</style>
</head>
<body>
<h1>Validation report %(title)s</h1>
<div class="banner">%(status)s: %(n)d violations</div>
<table>
<tr><th>rule</th><th>element</th><th>message</th></tr>
%(rows)s
</table>
<h2>Rules checked</h2>
<ul>
%(rules)s
</ul>
</body>
</html>
""" % {"title": html.escape(title), "colour": colour, "status": status, "n": n,
       "rows": rows, "rules": rules}
    return page.encode("utf-8")


def format_stats(summary: RunSummary) -> str:
    """Per-iteration ``key=value`` lines followed by a totals line."""
    lines = []
    for i, cs in enumerate(summary.per_iteration, 1):
        kv = " ".join("%s=%d" % item for item in cs.as_dict().items())
        lines.append("iteration=%d %s" % (i, kv))
    total = " ".join("%s=%d" % item for item in summary.total().as_dict().items())
    lines.append("total iterations=%d converged=%s wall_time_ms=%.3f %s"
                 % (summary.iterations, str(summary.converged).lower(), summary.wall_time_ms, total))
    return "\n".join(lines) + "\n"
