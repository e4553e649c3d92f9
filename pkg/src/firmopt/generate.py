"""Graph construction helpers and seeded random FIRM models.

:class:`GraphBuilder` writes graphs in the conventions documented in
:mod:`firmopt.model`.  The generators feed the property tests and the
acceptance suite; every model they return validates cleanly.
"""

from __future__ import annotations

import random
from typing import Optional

from .gxl import AttrValue, GxlAttr, GxlDocument, GxlEdge, GxlGraph, GxlNode
from .model import CONTROL_FLOW, DATAFLOW, OWNER_POSITION

MATH_OPS = ("Add", "Sub", "Mul", "Div")
RELATIONS = ("LESS", "EQUAL", "GREATER")
_BOUND = 2 ** 62


class GraphBuilder:
    """Incrementally assemble one default graph.

    >>> b = GraphBuilder()
    >>> b.block("b0", "StartBlock")
    'b0'
    >>> b.const("c1", 7, block="b0")
    'c1'
    """

    def __init__(self, graph_id: str = "main", type_ref: Optional[str] = "#DefaultGraph"):
        self.graph = GxlGraph(graph_id, type_ref, extra_attrs={"edgeids": "true", "edgemode": "directed"})
        self._edge_seq = 0

    def _edge(self, src, dst, type_ref, position=None, **attrs) -> GxlEdge:
        self._edge_seq += 1
        e = GxlEdge("e%d" % self._edge_seq, src, dst, type_ref)
        if position is not None:
            e.attrs.append(GxlAttr("position", AttrValue("int", position)))
        for k, v in attrs.items():
            e.attrs.append(GxlAttr(k, AttrValue.of(v)))
        self.graph.edges.append(e)
        return e

    def node(self, nid: str, type_name: str, block: Optional[str] = None, **attrs) -> str:
        n = GxlNode(nid, "#" + type_name.lstrip("#"))
        for k, v in attrs.items():
            n.attrs.append(GxlAttr(k, AttrValue.of(v)))
        self.graph.nodes.append(n)
        if block is not None:
            self.own(nid, block)
        return nid

    def own(self, nid: str, block: str) -> GxlEdge:
        return self._edge(nid, block, CONTROL_FLOW, OWNER_POSITION)

    def block(self, nid: str, kind: str = "Block") -> str:
        return self.node(nid, kind)

    def const(self, nid: str, value: int, block: str) -> str:
        return self.node(nid, "Const", block, value=value)

    def op(self, nid: str, type_name: str, block: str, *operands: str, **attrs) -> str:
        self.node(nid, type_name, block, **attrs)
        for pos, o in enumerate(operands):
            self.data(nid, o, pos)
        return nid

    def data(self, user: str, operand: str, pos: int) -> GxlEdge:
        return self._edge(user, operand, DATAFLOW, pos)

    def control(self, block: str, pred_op: str, pos: int = 0, when: Optional[str] = None) -> GxlEdge:
        """Record that control reaches ``block`` from ``pred_op`` (a Jmp or Cond)."""
        if when is None:
            return self._edge(block, pred_op, CONTROL_FLOW, pos)
        return self._edge(block, pred_op, CONTROL_FLOW, pos, when=when)

    def build(self, source_name: str = "", extra_graphs=()) -> GxlDocument:
        return GxlDocument([self.graph, *extra_graphs], source_name=source_name)


def _combine(rng: random.Random, a: int, b: int):
    """Pick an arithmetic op for (a, b) whose result stays well inside int64."""
    ops = list(MATH_OPS)
    rng.shuffle(ops)
    for op in ops:
        if op == "Add":
            r = a + b
        elif op == "Sub":
            r = a - b
        elif op == "Mul":
            r = a * b
        else:
            if b == 0:
                continue
            r = abs(a) // abs(b) * (1 if (a < 0) == (b < 0) else -1)
        if abs(r) <= _BOUND:
            return op, r
    # unreachable for |a|, |b| <= _BOUND: Add or Sub always shrinks
    raise AssertionError("no safe op for %d, %d" % (a, b))


def generate_arith_dag(seed: int, n_ops: int = None, lo: int = -100, hi: int = 100):
    """A pure Const/arithmetic DAG in the start block with a single root.

    Every Const and op is reachable from the root, which is consumed by a
    ``#Return`` node so it survives folding.  Returns ``(doc, root_id)``.
    """
    rng = random.Random(seed)
    if n_ops is None:
        n_ops = rng.randint(1, 50)
    if n_ops < 1:
        raise ValueError("n_ops must be >= 1")
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("end", "End")
    n_consts = rng.randint(1, n_ops + 1)
    values = {}
    for i in range(n_consts):
        cid = "c%d" % i
        values[cid] = rng.randint(lo, hi)
        b.const(cid, values[cid], "b0")
    pending = list(values)
    rng.shuffle(pending)
    for i in range(n_ops):
        remaining = n_ops - i
        left = pending.pop(rng.randrange(len(pending)))
        if len(pending) + 1 > remaining and pending:
            right = pending.pop(rng.randrange(len(pending)))
        else:
            right = rng.choice(list(values))
        if rng.random() < 0.5:
            left, right = right, left
        op, r = _combine(rng, values[left], values[right])
        nid = "n%d" % i
        b.op(nid, op, "b0", left, right)
        values[nid] = r
        pending.append(nid)
    assert len(pending) == 1
    root = pending[0]
    b.op("ret", "Return", "b0", root)
    return b.build("dag%d" % seed), root


def generate_random_model(seed: int, n_blocks: int = 6, n_ops: int = 30,
                          const_ratio: float = 0.4) -> GxlDocument:
    """A validator-clean FIRM model mixing foldable and unfoldable regions.

    The control skeleton is a chain of blocks with occasional Cmp/Cond
    diamonds whose merge block carries a Phi.  ``n_ops`` counts data
    operations (Consts, arithmetic, Load/Store); a fraction ``const_ratio``
    of them are Consts.  With ``n_ops == 0`` every block hangs directly off
    the start block's Jmp, leaving nothing for the local optimizer to do.
    """
    rng = random.Random(seed)
    b = GraphBuilder()
    start = b.block("b0", "StartBlock")
    b.block("end", "End")
    ids = iter(range(1, 10 ** 9))

    def fresh(prefix):
        return "%s%d" % (prefix, next(ids))

    if n_ops == 0:
        j = b.node(fresh("j"), "Jmp", start)
        for _ in range(n_blocks):
            b.control(b.block(fresh("b")), j)
        return b.build("model%d" % seed)

    # data ops first so Cmp/Phi can draw on them
    n_consts = max(1, round(n_ops * const_ratio))
    values = []
    const_values = {}
    for _ in range(n_consts):
        c = b.const(fresh("c"), rng.randint(-50, 50), start)
        values.append(c)
        const_values[c] = b.graph.nodes[-1].get("value")

    blocks = [start]
    current = start
    k = n_blocks
    pending_ops = n_ops - n_consts
    diamonds = []
    while k > 0:
        if k >= 3 and rng.random() < 0.4:
            bt, bf, bm = b.block(fresh("b")), b.block(fresh("b")), b.block(fresh("b"))
            diamonds.append((current, bt, bf, bm))
            blocks += [bt, bf, bm]
            current = bm
            k -= 3
        else:
            nb = b.block(fresh("b"))
            diamonds.append((current, nb))
            blocks.append(nb)
            current = nb
            k -= 1

    def place(nid, type_name, *operands, **attrs):
        b.op(nid, type_name, rng.choice(blocks), *operands, **attrs)
        return nid

    for _ in range(max(0, pending_ops)):
        r = rng.random()
        if r < 0.12:
            ld = place(fresh("ld"), "Load", rng.choice(values))
            values.append(ld)
        elif r < 0.2:
            place(fresh("st"), "Store", rng.choice(values), rng.choice(values))
        else:
            op = rng.choice(("Add", "Sub", "Mul", "Div", "Add", "Mul", "And", "Or"))
            left, right = rng.choice(values), rng.choice(values)
            if op == "Div" and const_values.get(right) == 0:
                op = "Add"
            values.append(place(fresh("op"), op, left, right))

    # control skeleton
    for step in diamonds:
        if len(step) == 2:
            src, dst = step
            j = b.node(fresh("j"), "Jmp", src)
            b.control(dst, j)
            continue
        src, bt, bf, bm = step
        x, y = rng.choice(values), rng.choice(values)
        cmp_ = b.op(fresh("cmp"), "Cmp", src, x, y, relation=rng.choice(RELATIONS))
        cond = b.op(fresh("cond"), "Cond", src, cmp_)
        b.control(bt, cond, 0, when="true")
        b.control(bf, cond, 0, when="false")
        jt = b.node(fresh("j"), "Jmp", bt)
        jf = b.node(fresh("j"), "Jmp", bf)
        b.control(bm, jt, 0)
        b.control(bm, jf, 1)
        phi = b.op(fresh("phi"), "Phi", bm, rng.choice(values), rng.choice(values))
        values.append(phi)
        user = b.op(fresh("op"), rng.choice(MATH_OPS[:3]), bm, phi, rng.choice(values))
        values.append(user)
    last = b.node(fresh("j"), "Jmp", current)
    b.control("end", last)
    return b.build("model%d" % seed)

