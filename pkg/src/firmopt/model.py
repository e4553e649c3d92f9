"""Typed view of a FIRM default graph.

GXL gives us flat node and edge lists with no navigation between them, so
:class:`FirmModel` keeps per-node incoming/outgoing edge indices and a kind
table next to the graph.  All mutation goes through the model so that the
indices never drift from the edge list.

Graph conventions (all queries assume them):

* a dataflow edge points from the user to its operand, with an int
  ``position`` naming the operand slot;
* every operation node has exactly one edge to the block-kinded node it
  lives in (its owner);
* a block points at the control-flow operation (``Jmp`` or ``Cond``) of each
  predecessor block with a ``#ControlFlow`` edge; edges into a ``Cond`` carry
  a ``when`` label naming the branch.
"""

from __future__ import annotations

import enum
from bisect import insort
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    AmbiguousOwner,
    MissingPosition,
    NoOwnerBlock,
    UnknownElement,
    UnknownNode,
)
from .gxl import GxlDocument, GxlEdge, GxlGraph, GxlNode

DEFAULT_BINARY_OPS = frozenset({"Add", "Sub", "Mul", "Div", "And", "Or"})


class Kind(enum.Enum):
    START_BLOCK = "StartBlock"
    BLOCK = "Block"
    END = "End"
    CONST = "Const"
    PHI = "Phi"
    JMP = "Jmp"
    COND = "Cond"
    CMP = "Cmp"
    LOAD = "Load"
    STORE = "Store"
    BINARY_OP = "BinaryOp"
    OTHER = "Other"


BLOCK_KINDS = frozenset({Kind.START_BLOCK, Kind.BLOCK, Kind.END})

_FIXED_KINDS = {k.value: k for k in Kind if k not in (Kind.BINARY_OP, Kind.OTHER)}


@dataclass(frozen=True)
class NodeKind:
    kind: Kind
    name: str

    @property
    def is_block(self) -> bool:
        return self.kind in BLOCK_KINDS

    def __repr__(self):
        if self.kind in (Kind.BINARY_OP, Kind.OTHER):
            return "%s(%r)" % (self.kind.name, self.name)
        return self.kind.name


def classify_type(type_ref: str, binary_ops: Iterable[str] = DEFAULT_BINARY_OPS) -> NodeKind:
    name = type_ref[1:] if type_ref.startswith("#") else type_ref
    fixed = _FIXED_KINDS.get(name)
    if fixed is not None:
        return NodeKind(fixed, name)
    if name in binary_ops:
        return NodeKind(Kind.BINARY_OP, name)
    return NodeKind(Kind.OTHER, name)


def classify(node: GxlNode, binary_ops: Iterable[str] = DEFAULT_BINARY_OPS) -> NodeKind:
    return classify_type(node.type_ref, binary_ops)


class EdgeKind(enum.Enum):
    DATAFLOW = "Dataflow"
    CONTROL_FLOW = "ControlFlow"
    OTHER = "Other"


def edge_kind(edge: GxlEdge) -> EdgeKind:
    name = edge.type_ref.lstrip("#").lower()
    if name == "dataflow":
        return EdgeKind.DATAFLOW
    if name == "controlflow":
        return EdgeKind.CONTROL_FLOW
    return EdgeKind.OTHER


DATAFLOW = "#Dataflow"
CONTROL_FLOW = "#ControlFlow"
OWNER_POSITION = -1


def _drop(lst: list, item) -> None:
    for i, x in enumerate(lst):
        if x is item:
            del lst[i]
            return
    raise UnknownElement(item)


class FirmModel:
    """Indexed, mutable overlay on one default graph.

    Mutations update the indices immediately; :meth:`sync` writes the node
    and edge lists back into the underlying :class:`GxlGraph`.
    """

    def __init__(self, graph: GxlGraph, binary_ops: Iterable[str] = DEFAULT_BINARY_OPS):
        self.graph = graph
        self.binary_ops = frozenset(binary_ops)
        self.nodes: dict = {}
        self.kind: dict = {}
        self.in_index: dict = defaultdict(list)
        self.out_index: dict = defaultdict(list)
        self._edges: dict = {}
        self._seq: dict = {}
        self._next_seq = 0
        self.dirty = False
        for n in graph.nodes:
            if n.id not in self.nodes:
                self.nodes[n.id] = n
                self.kind[n.id] = classify(n, self.binary_ops)
        for e in graph.edges:
            self._index_edge(e)

    # -- index plumbing ----------------------------------------------------

    def _key(self, edge):
        return self._seq[id(edge)]

    def _index_edge(self, e: GxlEdge) -> None:
        seq = self._next_seq
        self._next_seq += 1
        self._seq[id(e)] = seq
        self._edges[seq] = e
        self.out_index[e.from_id].append(e)
        self.in_index[e.to_id].append(e)

    def edges(self) -> list:
        return list(self._edges.values())

    def has_edge(self, e: GxlEdge) -> bool:
        return id(e) in self._seq

    def _check(self, node_id: str) -> None:
        if node_id not in self.nodes:
            raise UnknownNode(node_id)

    def node(self, node_id: str) -> GxlNode:
        self._check(node_id)
        return self.nodes[node_id]

    def is_block(self, node_id: str) -> bool:
        k = self.kind.get(node_id)
        return k is not None and k.is_block

    def sync(self) -> None:
        if self.dirty:
            self.graph.nodes = list(self.nodes.values())
            self.graph.edges = list(self._edges.values())
            self.dirty = False

    def rebuilt(self) -> "FirmModel":
        """A fresh model over the current (synced) state, for consistency audits."""
        g = GxlGraph(self.graph.id, self.graph.type_ref,
                     list(self.nodes.values()), list(self._edges.values()))
        return FirmModel(g, self.binary_ops)

    def audit(self) -> bool:
        fresh = self.rebuilt()

        def ident(index):
            return {k: [id(e) for e in v] for k, v in index.items() if v}

        return (ident(fresh.in_index) == ident(self.in_index)
                and ident(fresh.out_index) == ident(self.out_index)
                and fresh.kind == self.kind)

    # -- queries -----------------------------------------------------------

    def get_in_edges(self, n: str, kind: Optional[EdgeKind] = None) -> list:
        self._check(n)
        edges = self.in_index.get(n, [])
        if kind is None:
            return list(edges)
        return [e for e in edges if edge_kind(e) is kind]

    def get_out_edges(self, n: str, kind: Optional[EdgeKind] = None) -> list:
        self._check(n)
        edges = self.out_index.get(n, [])
        if kind is None:
            return list(edges)
        return [e for e in edges if edge_kind(e) is kind]

    def get_from_nodes(self, n: str, kind: Optional[EdgeKind] = None) -> list:
        return [self.nodes[e.from_id] for e in self.get_in_edges(n, kind) if e.from_id in self.nodes]

    def get_to_nodes(self, n: str, kind: Optional[EdgeKind] = None) -> list:
        return [self.nodes[e.to_id] for e in self.get_out_edges(n, kind) if e.to_id in self.nodes]

    def get_edges_between(self, a: str, b: str) -> list:
        self._check(a)
        self._check(b)
        return [e for e in self.out_index.get(a, []) if e.to_id == b]

    def owner_edges(self, n: str) -> list:
        return [e for e in self.out_index.get(n, []) if self.is_block(e.to_id)]

    def get_owner_block(self, n: str) -> GxlNode:
        self._check(n)
        if self.is_block(n):
            raise NoOwnerBlock("%r is itself a block" % n)
        edges = self.owner_edges(n)
        if not edges:
            raise NoOwnerBlock("node %r has no edge to a block" % n)
        if len({e.to_id for e in edges}) > 1 or len(edges) > 1:
            raise AmbiguousOwner("node %r has %d block edges" % (n, len(edges)))
        return self.nodes[edges[0].to_id]

    def get_owned_nodes(self, b: str) -> list:
        self._check(b)
        seen, out = set(), []
        for e in self.in_index.get(b, []):
            src = e.from_id
            if src in self.nodes and not self.is_block(src) and src not in seen:
                seen.add(src)
                out.append(self.nodes[src])
        return out

    def get_typed_nodes(self, type_ref: str) -> list:
        return [n for n in self.nodes.values() if n.type_ref == type_ref]

    def nodes_of(self, *kinds: Kind) -> list:
        return [n for n in self.nodes.values() if self.kind[n.id].kind in kinds]

    def get_to_data(self, n: str) -> list:
        """(edge, operand) pairs of ``n``'s dataflow edges, by ascending position."""
        pairs = []
        for e in self.get_out_edges(n, EdgeKind.DATAFLOW):
            if e.position is None:
                raise MissingPosition("dataflow edge %s->%s has no int position" % (e.from_id, e.to_id))
            if e.to_id not in self.nodes:
                raise UnknownNode(e.to_id)
            pairs.append((e, self.nodes[e.to_id]))
        pairs.sort(key=lambda p: p[0].position)
        return pairs

    def control_preds(self, b: str) -> list:
        """Outgoing control-flow edges of a block, one per predecessor."""
        return [e for e in self.get_out_edges(b, EdgeKind.CONTROL_FLOW) if not self.is_block(e.to_id)]

    # -- mutation ----------------------------------------------------------

    def add_node(self, node: GxlNode) -> GxlNode:
        if node.id in self.nodes:
            raise ValueError("duplicate node id %r" % node.id)
        self.nodes[node.id] = node
        self.kind[node.id] = classify(node, self.binary_ops)
        self.dirty = True
        return node

    def add_edge(self, edge: GxlEdge) -> GxlEdge:
        self._index_edge(edge)
        self.dirty = True
        return edge

    def remove_edge(self, edge: GxlEdge) -> None:
        seq = self._seq.pop(id(edge), None)
        if seq is None:
            raise UnknownElement("edge %s->%s is not in the graph" % (edge.from_id, edge.to_id))
        del self._edges[seq]
        _drop(self.out_index[edge.from_id], edge)
        _drop(self.in_index[edge.to_id], edge)
        self.dirty = True

    def remove_node(self, n: str) -> int:
        """Remove ``n`` and every edge touching it; returns the edge count removed."""
        self._check(n)
        incident = self.out_index.get(n, []) + [e for e in self.in_index.get(n, []) if e.from_id != n]
        for e in incident:
            self.remove_edge(e)
        del self.nodes[n]
        del self.kind[n]
        self.in_index.pop(n, None)
        self.out_index.pop(n, None)
        self.dirty = True
        return len(incident)

    def retype_node(self, n: str, type_ref: str) -> None:
        node = self.node(n)
        node.type_ref = type_ref
        self.kind[n] = classify(node, self.binary_ops)
        self.dirty = True

    def retarget_edge(self, edge: GxlEdge, new_to: str) -> None:
        self._check(new_to)
        if not self.has_edge(edge):
            raise UnknownElement(edge)
        _drop(self.in_index[edge.to_id], edge)
        edge.to_id = new_to
        insort(self.in_index[new_to], edge, key=self._key)
        self.dirty = True

    def resource_edge(self, edge: GxlEdge, new_from: str) -> None:
        self._check(new_from)
        if not self.has_edge(edge):
            raise UnknownElement(edge)
        _drop(self.out_index[edge.from_id], edge)
        edge.from_id = new_from
        insort(self.out_index[new_from], edge, key=self._key)
        self.dirty = True

    def set_position(self, edge: GxlEdge, position: int) -> None:
        if not self.has_edge(edge):
            raise UnknownElement(edge)
        edge.set_attr("position", int(position))
        self.dirty = True


# -- validation ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule_id: str
    element_id: str
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule_id, element_id, message):
        self.violations.append(Violation(rule_id, element_id, message))

    def rules(self) -> Counter:
        return Counter(v.rule_id for v in self.violations)

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


RULES = {
    "R1": "every attribute has a name and exactly one value",
    "R2": "the document has at least one #DefaultGraph",
    "R3": "node ids are unique within a default graph",
    "R4": "edge endpoints resolve to existing nodes",
    "R5": "every non-block node has exactly one owner block",
    "R6": "dataflow edges of a node have distinct int positions",
}


def _edge_label(e: GxlEdge) -> str:
    return e.id if e.id is not None else "%s->%s" % (e.from_id, e.to_id)


def validate(doc: GxlDocument) -> ValidationReport:
    report = ValidationReport()

    for g in doc.graphs:
        for n in g.nodes:
            for a in n.attrs:
                if a.payload_count() != 1:
                    report.add("R1", n.id, "attribute %r has %d values" % (a.name, a.payload_count()))
        for e in g.edges:
            for a in e.attrs:
                if a.payload_count() != 1:
                    report.add("R1", _edge_label(e), "attribute %r has %d values" % (a.name, a.payload_count()))

    defaults = doc.default_graphs()
    if not defaults:
        report.add("R2", doc.source_name or "document", "no graph of type #DefaultGraph")

    for g in defaults:
        counts = Counter(n.id for n in g.nodes)
        for nid, c in counts.items():
            if c > 1:
                report.add("R3", nid, "node id %r used by %d nodes in graph %r" % (nid, c, g.id))

        kinds = {}
        for n in g.nodes:
            kinds.setdefault(n.id, classify(n))
        out = defaultdict(list)
        for e in g.edges:
            missing = [x for x in (e.from_id, e.to_id) if x not in kinds]
            if missing:
                report.add("R4", _edge_label(e), "dangling endpoint(s) %s" % ", ".join(map(repr, missing)))
                continue
            out[e.from_id].append(e)

        for nid, k in kinds.items():
            if k.is_block:
                continue
            owners = [e for e in out[nid] if kinds[e.to_id].is_block]
            if len(owners) != 1:
                report.add("R5", nid, "node has %d owner blocks" % len(owners))

        for nid, edges in out.items():
            positions = []
            for e in edges:
                if edge_kind(e) is not EdgeKind.DATAFLOW:
                    continue
                if e.position is None:
                    report.add("R6", _edge_label(e), "dataflow edge without an int position")
                else:
                    positions.append(e.position)
            for p, c in sorted(Counter(positions).items()):
                if c > 1:
                    report.add("R6", nid, "%d dataflow edges share position %d" % (c, p))
    return report
