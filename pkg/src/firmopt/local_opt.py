"""Constant folding and control-flow cleanup on FIRM default graphs.

One call of :func:`run_local_opt_once` is one execution of the in-place
rewrite: every rule sees the graph as it was when the execution started.
Candidates are collected up front, and a match that would read a node
already changed earlier in the same execution is left for the next one.
:func:`firmopt.driver.run_to_fixpoint` repeats executions until nothing
changes.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .errors import (
    AmbiguousOwner,
    ArithmeticOverflow,
    DivisionByZero,
    FoldError,
    MissingCondUser,
    MissingPosition,
    MissingRelationAttr,
    NoDefaultGraph,
    NoOwnerBlock,
    PositionMismatch,
    UnlabeledBranch,
    UnsupportedOp,
)
from .gxl import GxlDocument, GxlEdge
from .model import DEFAULT_BINARY_OPS, EdgeKind, FirmModel, Kind

log = logging.getLogger(__name__)

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


@dataclass
class ChangeSet:
    nodes_removed: int = 0
    edges_removed: int = 0
    nodes_retyped: int = 0
    attrs_rewritten: int = 0
    edges_repositioned: int = 0
    edges_retargeted: int = 0
    nodes_added: int = 0
    edges_added: int = 0

    def is_empty(self) -> bool:
        return not any(getattr(self, f.name) for f in fields(self))

    def __iadd__(self, other: "ChangeSet") -> "ChangeSet":
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def __add__(self, other: "ChangeSet") -> "ChangeSet":
        out = ChangeSet(**asdict(self))
        out += other
        return out

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FoldConfig:
    math_ops: frozenset = frozenset({"Add", "Sub", "Mul", "Div"})
    logic_ops: frozenset = frozenset({"LESS", "EQUAL", "GREATER"})
    relation_attr_name: str = "relation"
    cond_branch_attr: str = "when"

    @property
    def binary_ops(self) -> frozenset:
        return DEFAULT_BINARY_OPS | frozenset(self.math_ops)


# -- arithmetic --------------------------------------------------------------

def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def calcu_match(v0: int, v1: int, op: str) -> int:
    """Evaluate ``v0 op v1`` for ``#Add``, ``#Sub``, ``#Mul`` and ``#Div``.

    Division truncates toward zero.  Results outside the signed 64-bit range
    raise :class:`ArithmeticOverflow`.
    """
    name = op[1:] if op.startswith("#") else op
    if name == "Add":
        r = v0 + v1
    elif name == "Sub":
        r = v0 - v1
    elif name == "Mul":
        r = v0 * v1
    elif name == "Div":
        if v1 == 0:
            raise DivisionByZero("division of %d by zero" % v0)
        r = _trunc_div(v0, v1)
    else:
        raise UnsupportedOp("cannot fold %r" % op)
    if not INT64_MIN <= r <= INT64_MAX:
        raise ArithmeticOverflow("%d %s %d leaves the 64-bit range" % (v0, name, v1))
    return r


def calcu_logic(v0: int, v1: int, op: str) -> str:
    # equal operands under LESS/GREATER give "false" rather than ""
    if op == "LESS":
        holds = v0 < v1
    elif op == "GREATER":
        holds = v0 > v1
    elif op == "EQUAL":
        holds = v0 == v1
    else:
        raise UnsupportedOp("unknown relation %r" % op)
    return "true" if holds else "false"


# -- rewriting context ---------------------------------------------------------

class _Rewriter:
    """Applies mutations to a model while counting them and recording which
    nodes were touched during the current execution."""

    def __init__(self, m: FirmModel, cfg: FoldConfig, touched: Optional[set] = None):
        self.m = m
        self.cfg = cfg
        self.touched = touched
        self.cs = ChangeSet()

    def fresh(self, *ids) -> bool:
        if self.touched is None:
            return True
        return not any(i in self.touched for i in ids)

    def touch(self, *ids) -> None:
        if self.touched is not None:
            self.touched.update(ids)

    def remove_edge(self, e: GxlEdge) -> None:
        self.touch(e.from_id, e.to_id)
        self.m.remove_edge(e)
        self.cs.edges_removed += 1

    def remove_node(self, n: str) -> None:
        for e in self.m.out_index.get(n, []):
            self.touch(e.to_id)
        for e in self.m.in_index.get(n, []):
            self.touch(e.from_id)
        self.touch(n)
        self.cs.edges_removed += self.m.remove_node(n)
        self.cs.nodes_removed += 1

    def retype(self, n: str, type_ref: str) -> None:
        self.touch(n)
        self.m.retype_node(n, type_ref)
        self.cs.nodes_retyped += 1

    def set_attr(self, owner, name, value) -> None:
        owner.set_attr(name, value)
        self.m.dirty = True
        self.cs.attrs_rewritten += 1

    def del_attr(self, owner, name) -> None:
        if owner.del_attr(name):
            self.m.dirty = True
            self.cs.attrs_rewritten += 1

    def retarget(self, e: GxlEdge, new_to: str) -> None:
        self.touch(e.from_id, e.to_id, new_to)
        self.m.retarget_edge(e, new_to)
        self.cs.edges_retargeted += 1

    def resource(self, e: GxlEdge, new_from: str) -> None:
        self.touch(e.from_id, e.to_id, new_from)
        self.m.resource_edge(e, new_from)
        self.cs.edges_retargeted += 1

    def reposition(self, e: GxlEdge, p: int) -> None:
        self.touch(e.from_id, e.to_id)
        self.m.set_position(e, p)
        self.cs.edges_repositioned += 1


def _rw(m, cfg, touched):
    return _Rewriter(m, cfg or FoldConfig(), touched)


def _const_value(node):
    v = node.get_attr("value")
    if v is None or v.kind != "int":
        return None
    return v.value


def _label(edge: GxlEdge, attr: str) -> Optional[str]:
    v = edge.get_attr(attr)
    if v is None:
        return None
    if v.kind == "bool":
        return "true" if v.value else "false"
    s = str(v.value).strip().lower()
    return s if s in ("true", "false") else None


# -- mutation primitives -------------------------------------------------------

def remove_edge(m: FirmModel, e: GxlEdge) -> ChangeSet:
    rw = _Rewriter(m, FoldConfig())
    rw.remove_edge(e)
    return rw.cs


def remove_node(m: FirmModel, n: str) -> ChangeSet:
    rw = _Rewriter(m, FoldConfig())
    rw.remove_node(n)
    return rw.cs


def remove_block(m: FirmModel, b: str) -> ChangeSet:
    """Remove block ``b`` together with every node it owns."""
    rw = _Rewriter(m, FoldConfig())
    _remove_block(rw, b)
    return rw.cs


def _remove_block(rw: _Rewriter, b: str) -> None:
    for n in rw.m.get_owned_nodes(b):
        rw.remove_node(n.id)
    rw.remove_node(b)


def change_edge_position(m: FirmModel, e: GxlEdge, p: int) -> ChangeSet:
    rw = _Rewriter(m, FoldConfig())
    rw.reposition(e, p)
    return rw.cs


# -- FoldOper ------------------------------------------------------------------

def _const_operands(m: FirmModel, n: str):
    try:
        pairs = m.get_to_data(n)
    except MissingPosition:
        return None
    if len(pairs) != 2:
        return None
    if any(m.kind[node.id].kind is not Kind.CONST or _const_value(node) is None
           for _, node in pairs):
        return None
    return pairs


def fold_oper(m: FirmModel, n: str, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    """Fold a math op or ``Cmp`` whose two operands are constants."""
    rw = _rw(m, cfg, touched)
    if n not in m.nodes:
        return rw.cs
    k = m.kind[n]
    if not ((k.kind is Kind.BINARY_OP and k.name in rw.cfg.math_ops) or k.kind is Kind.CMP):
        return rw.cs
    pairs = _const_operands(m, n)
    if pairs is None or not rw.fresh(n, *(node.id for _, node in pairs)):
        return rw.cs
    if k.kind is Kind.CMP:
        _do_fold_cmp(rw, n, pairs)
    else:
        _do_fold_math(rw, n, pairs)
    return rw.cs


def do_fold_math(m: FirmModel, n: str, pairs, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    rw = _rw(m, cfg, touched)
    _do_fold_math(rw, n, pairs)
    return rw.cs


def _do_fold_math(rw: _Rewriter, n: str, pairs) -> None:
    m = rw.m
    (e0, c0), (e1, c1) = pairs
    try:
        value = calcu_match(_const_value(c0), _const_value(c1), m.nodes[n].type_ref)
    except FoldError as exc:
        log.info("not folding %s: %s", n, exc)
        return
    node = m.nodes[n]
    rw.retype(n, "#Const")
    rw.set_attr(node, "value", value)
    rw.remove_edge(e0)
    rw.remove_edge(e1)


def do_fold_cmp(m: FirmModel, cmp: str, pairs, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    rw = _rw(m, cfg, touched)
    _do_fold_cmp(rw, cmp, pairs)
    return rw.cs


def _cmp_plan(rw: _Rewriter, cmp: str, pairs):
    m, cfg = rw.m, rw.cfg
    node = m.nodes[cmp]
    rel = node.get(cfg.relation_attr_name)
    if not isinstance(rel, str) or rel not in cfg.logic_ops:
        raise MissingRelationAttr("Cmp %r has no usable %r attribute" % (cmp, cfg.relation_attr_name))
    users = m.get_in_edges(cmp, EdgeKind.DATAFLOW)
    if len(users) != 1 or m.kind.get(users[0].from_id, None) is None \
            or m.kind[users[0].from_id].kind is not Kind.COND:
        raise MissingCondUser("Cmp %r is not consumed by exactly one Cond" % cmp)
    cond = users[0].from_id
    branches = m.get_in_edges(cond, EdgeKind.CONTROL_FLOW)
    labels = [_label(e, cfg.cond_branch_attr) for e in branches]
    if not branches or None in labels:
        raise UnlabeledBranch("Cond %r has an unlabeled branch edge" % cond)
    (_, c0), (_, c1) = pairs
    taken = calcu_logic(_const_value(c0), _const_value(c1), rel)
    return cond, list(zip(branches, labels)), taken


def _do_fold_cmp(rw: _Rewriter, cmp: str, pairs) -> None:
    m, cfg = rw.m, rw.cfg
    try:
        cond, branches, taken = _cmp_plan(rw, cmp, pairs)
    except FoldError as exc:
        log.info("not folding %s: %s", cmp, exc)
        return
    if not rw.fresh(cond, *(e.from_id for e, _ in branches)):
        return
    for e, label in branches:
        if label != taken:
            rw.remove_edge(e)
        else:
            rw.retarget(e, cmp)
            rw.del_attr(e, cfg.cond_branch_attr)
    rw.remove_node(cond)
    node = m.nodes[cmp]
    rw.retype(cmp, "#Jmp")
    rw.del_attr(node, cfg.relation_attr_name)
    for e, _ in pairs:
        rw.remove_edge(e)


# -- FoldNode group --------------------------------------------------------------

def fold_phi(m: FirmModel, phi: str, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    """Replace a Phi in a single-predecessor block by its surviving operand."""
    rw = _rw(m, cfg, touched)
    if phi not in m.nodes or m.kind[phi].kind is not Kind.PHI:
        return rw.cs
    try:
        block = m.get_owner_block(phi).id
        operands = m.get_to_data(phi)
    except (NoOwnerBlock, AmbiguousOwner, MissingPosition):
        return rw.cs
    preds = m.get_out_edges(block, EdgeKind.CONTROL_FLOW)
    if len(preds) != 1:
        return rw.cs
    pos = preds[0].position
    chosen = [node for e, node in operands if e.position == pos]
    if len(chosen) != 1 or chosen[0].id == phi:
        log.info("not folding %s: %s", phi,
                 PositionMismatch("no unique operand at position %r" % (pos,)))
        return rw.cs
    target = chosen[0].id
    users = [e for e in m.get_in_edges(phi) if e.from_id != phi]
    involved = [phi, block, target] + [e.from_id for e in users] + [n.id for _, n in operands]
    if not rw.fresh(*involved):
        return rw.cs
    for e in users:
        rw.retarget(e, target)
    rw.remove_node(phi)
    return rw.cs


def fold_jmp_block(m: FirmModel, b: str, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    """Bypass a block whose only content is a Jmp."""
    rw = _rw(m, cfg, touched)
    if b not in m.nodes or m.kind[b].kind is not Kind.BLOCK:
        return rw.cs
    owned = m.get_owned_nodes(b)
    if len(owned) != 1 or m.kind[owned[0].id].kind is not Kind.JMP:
        return rw.cs
    jmp = owned[0].id
    preds = m.get_out_edges(b, EdgeKind.CONTROL_FLOW)
    if len(preds) != 1 or preds[0].to_id in (jmp, b) or m.is_block(preds[0].to_id):
        return rw.cs
    pred = preds[0]
    succs = m.get_in_edges(jmp, EdgeKind.CONTROL_FLOW)
    if any(e.from_id == b for e in succs):
        return rw.cs
    if not rw.fresh(b, jmp, pred.to_id, *(e.from_id for e in succs)):
        return rw.cs
    label = pred.get_attr(rw.cfg.cond_branch_attr)
    for e in succs:
        rw.retarget(e, pred.to_id)
        if label is not None:
            rw.set_attr(e, rw.cfg.cond_branch_attr, label)
    rw.remove_node(jmp)
    rw.remove_node(b)
    return rw.cs


def fold_no_out_block(m: FirmModel, b: str, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    """Delete an unreachable block (no control-flow predecessor) and its contents."""
    rw = _rw(m, cfg, touched)
    if b not in m.nodes or m.kind[b].kind is not Kind.BLOCK:
        return rw.cs
    if m.get_out_edges(b, EdgeKind.CONTROL_FLOW):
        return rw.cs
    owned = [n.id for n in m.get_owned_nodes(b)]
    if not rw.fresh(b, *owned):
        return rw.cs
    _remove_block(rw, b)
    return rw.cs


def fold_isolated_const(m: FirmModel, c: str, cfg: FoldConfig = None, touched: set = None) -> ChangeSet:
    rw = _rw(m, cfg, touched)
    if c not in m.nodes or m.kind[c].kind is not Kind.CONST:
        return rw.cs
    if m.get_in_edges(c, EdgeKind.DATAFLOW) or not rw.fresh(c):
        return rw.cs
    rw.remove_node(c)
    return rw.cs


FOLD_NODE_GROUP = (
    (Kind.PHI, fold_phi),
    (Kind.BLOCK, fold_jmp_block),
    (Kind.BLOCK, fold_no_out_block),
    (Kind.CONST, fold_isolated_const),
)


def run_local_opt_once(doc: GxlDocument, cfg: FoldConfig = None) -> ChangeSet:
    """Run one execution of the local optimization over every default graph."""
    cfg = cfg or FoldConfig()
    graphs = doc.default_graphs()
    if not graphs:
        raise NoDefaultGraph("document %r has no #DefaultGraph" % doc.source_name)
    total = ChangeSet()
    for g in graphs:
        m = FirmModel(g, cfg.binary_ops)
        touched = set()
        oper_candidates = [n.id for n in m.nodes_of(Kind.BINARY_OP, Kind.CMP)]
        group = [(rule, [n.id for n in m.nodes_of(kind)]) for kind, rule in FOLD_NODE_GROUP]
        for n in oper_candidates:
            total += fold_oper(m, n, cfg, touched)
        for rule, candidates in group:
            for n in candidates:
                total += rule(m, n, cfg, touched)
        m.sync()
    return total
