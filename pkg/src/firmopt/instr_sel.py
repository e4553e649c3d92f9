"""Instruction selection: source FIRM graph to a graph of ``#Target*`` ops.

The transformation builds a new document; the source is only read.  Binary
operations gain an immediate variant (``#Target<op>I``), ``Load``/``Store``
gain ``#TargetLoadI``/``#TargetStoreI``, and the remaining marked
operations are simply renamed.

Immediate variants are alternatives to the original op, so every edge of
the original is copied onto them, user edges included.  A user therefore
ends up with two operand edges at the same position, one per alternative.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from typing import Optional

from .errors import BadPivot, BadTypeRef, NoDefaultGraph
from .gxl import AttrValue, GxlAttr, GxlDocument, GxlEdge, GxlGraph, GxlNode
from .model import (
    CONTROL_FLOW,
    DATAFLOW,
    DEFAULT_BINARY_OPS,
    OWNER_POSITION,
    FirmModel,
    Kind,
)

DEFAULT_COMMUTATIVE = frozenset({"Add", "Mul", "And", "Or"})
DEFAULT_UNIQUE_OPS = frozenset(
    {"Jmp", "Cond", "Cmp", "Load", "Store", "Phi", "Proj", "Return", "Const", "Sync"}
)
LOAD_STORE = frozenset({"Load", "Store"})


@dataclass(frozen=True)
class SelConfig:
    binary_ops: frozenset = DEFAULT_BINARY_OPS
    commutative: frozenset = DEFAULT_COMMUTATIVE
    unique_ops: frozenset = DEFAULT_UNIQUE_OPS
    id_suffix: str = "t"
    id_pivot: int = 1

    def __post_init__(self):
        for name in ("binary_ops", "commutative", "unique_ops"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not self.commutative <= self.binary_ops:
            raise ValueError("commutative ops must be binary ops: %s"
                             % sorted(self.commutative - self.binary_ops))
        if self.binary_ops & self.unique_ops:
            raise ValueError("ops listed as both binary and unique: %s"
                             % sorted(self.binary_ops & self.unique_ops))
        if self.id_pivot < 1:
            raise BadPivot("id pivot must be >= 1")

    @classmethod
    def from_mapping(cls, data: dict) -> "SelConfig":
        """Build a config from ``{"binary": [...], "commutative": [...], "unique": [...]}``.

        Missing keys keep their defaults.
        """
        kw = {}
        for key, attr in (("binary", "binary_ops"), ("commutative", "commutative"),
                          ("unique", "unique_ops")):
            if key in data:
                kw[attr] = frozenset(str(x).lstrip("#") for x in data[key])
        if "id_suffix" in data:
            kw["id_suffix"] = str(data["id_suffix"])
        if "id_pivot" in data:
            kw["id_pivot"] = int(data["id_pivot"])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "SelConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))


def get_target_name(op: str) -> str:
    if not op.startswith("#") or len(op) < 2:
        raise BadTypeRef("type reference %r must look like '#Name'" % (op,))
    return "#Target" + op[1:]


def get_new_id(src: str, pos: int, suffix: str) -> str:
    """Rotate ``src`` around a 1-based pivot and prefix ``suffix``.

    ``get_new_id("n42", 1, "c") == "c42n"``: the first ``pos`` characters
    move to the end.
    """
    if not 1 <= pos <= len(src):
        raise BadPivot("pivot %d outside 1..%d for %r" % (pos, len(src), src))
    return suffix + src[pos:] + src[:pos]


# -- copy plumbing -------------------------------------------------------------

def copy_attr(a: GxlAttr) -> GxlAttr:
    return copy.deepcopy(a)


def copy_node(n: GxlNode) -> GxlNode:
    return GxlNode(n.id, n.type_ref, [copy_attr(a) for a in n.attrs],
                   dict(n.extra_attrs), list(n.extras))


def edge_to_edge(e: GxlEdge) -> GxlEdge:
    return GxlEdge(e.id, e.from_id, e.to_id, e.type_ref, [copy_attr(a) for a in e.attrs],
                   dict(e.extra_attrs), list(e.extras))


class _Selection:
    """Mutable state for translating one default graph."""

    def __init__(self, src: GxlGraph, cfg: SelConfig):
        self.cfg = cfg
        self.m = FirmModel(src, cfg.binary_ops)
        self.src = src
        self.nodes: list = []
        self.new_edges: list = []
        self.used = {n.id for n in src.nodes} | {e.id for e in src.edges if e.id is not None}
        starts = self.m.nodes_of(Kind.START_BLOCK)
        self.start_block = starts[0].id if starts else None

    def fresh_id(self, base: str, suffix: str) -> str:
        base = base or "x"
        cand = get_new_id(base, min(self.cfg.id_pivot, len(base)), suffix)
        if cand in self.used:
            k = 1
            while "%s_%d" % (cand, k) in self.used:
                k += 1
            cand = "%s_%d" % (cand, k)
        self.used.add(cand)
        return cand

    def connected_edges(self, n: str) -> list:
        out = self.m.get_out_edges(n)
        return out + [e for e in self.m.get_in_edges(n) if e.from_id != n]

    def make_edge(self, e: GxlEdge, old: str, new: str) -> GxlEdge:
        """Duplicate ``e`` with endpoint ``old`` replaced by ``new``."""
        dup = edge_to_edge(e)
        dup.id = self.fresh_id(e.id or new, "e")
        if dup.from_id == old:
            dup.from_id = new
        if dup.to_id == old:
            dup.to_id = new
        self.new_edges.append(dup)
        return dup

    def make_new_edge(self, src: str, dst: str, type_ref: str, position: int) -> GxlEdge:
        e = GxlEdge(self.fresh_id(src, "e"), src, dst, type_ref,
                    [GxlAttr("position", AttrValue("int", position))])
        self.new_edges.append(e)
        return e

    def owner_edge_type(self, n: str) -> str:
        for e in self.m.owner_edges(n):
            return e.type_ref
        return CONTROL_FLOW


def select_binary_op(ctx: _Selection, n: GxlNode) -> None:
    target = copy_node(n)
    target.type_ref = get_target_name(n.type_ref)
    ctx.nodes.append(target)
    make_binary_immediate(ctx, n)


def make_binary_immediate(ctx: _Selection, n: GxlNode) -> GxlNode:
    top = copy_node(n)
    top.id = ctx.fresh_id(n.id, ctx.cfg.id_suffix)
    top.type_ref = get_target_name(n.type_ref) + "I"
    top.set_attr("value", 0)
    ctx.nodes.append(top)
    for e in ctx.connected_edges(n.id):
        ctx.make_edge(e, n.id, top.id)
    if n.type_name not in ctx.cfg.commutative:
        make_new_const(ctx, top, n)
    return top


def make_new_const(ctx: _Selection, top: GxlNode, origin: Optional[GxlNode] = None) -> GxlNode:
    const = GxlNode(ctx.fresh_id(top.id, "c"), get_target_name("#Const"),
                    [GxlAttr("value", AttrValue("int", 0))])
    ctx.nodes.append(const)
    owner_type = ctx.owner_edge_type(origin.id) if origin is not None else CONTROL_FLOW
    if ctx.start_block is not None:
        ctx.make_new_edge(const.id, ctx.start_block, owner_type, OWNER_POSITION)
    ctx.make_new_edge(top.id, const.id, DATAFLOW, 1)
    return const


def select_unique_op(ctx: _Selection, n: GxlNode) -> None:
    target = copy_node(n)
    target.type_ref = get_target_name(n.type_ref)
    ctx.nodes.append(target)
    if n.type_name in LOAD_STORE:
        make_load_store_immediate(ctx, n)


def make_load_store_immediate(ctx: _Selection, n: GxlNode) -> GxlNode:
    imm = copy_node(n)
    imm.id = ctx.fresh_id(n.id, ctx.cfg.id_suffix)
    imm.type_ref = get_target_name(n.type_ref) + "I"
    imm.set_attr("symbol", "global")
    ctx.nodes.append(imm)
    for e in ctx.connected_edges(n.id):
        ctx.make_edge(e, n.id, imm.id)
    return imm


def _select_graph(src: GxlGraph, cfg: SelConfig) -> GxlGraph:
    ctx = _Selection(src, cfg)
    for n in src.nodes:
        kind = ctx.m.kind.get(n.id)
        if kind is not None and kind.kind is Kind.BINARY_OP and n.type_name in cfg.binary_ops:
            select_binary_op(ctx, n)
        elif kind is not None and not kind.is_block and n.type_name in cfg.unique_ops:
            select_unique_op(ctx, n)
        else:
            ctx.nodes.append(copy_node(n))
    edges = [edge_to_edge(e) for e in src.edges] + ctx.new_edges
    return GxlGraph(src.id, src.type_ref, ctx.nodes, edges,
                    dict(src.extra_attrs), list(src.extras))


def run_instruction_selection(src: GxlDocument, cfg: SelConfig = None) -> GxlDocument:
    """Return a new document with every default graph translated."""
    cfg = cfg or SelConfig()
    if not src.default_graphs():
        raise NoDefaultGraph("document %r has no #DefaultGraph" % src.source_name)
    out = GxlDocument(source_name=src.source_name, extra_attrs=dict(src.extra_attrs),
                      extras=list(src.extras))
    for g in src.graphs:
        out.graphs.append(_select_graph(g, cfg) if g.is_default else copy.deepcopy(g))
    return out
