from fractions import Fraction

import pytest

from branch_case import CASES, branch_gxl, expected_gxl
from conftest import model_of
from firmopt.driver import interpret_const_expression, run_to_fixpoint
from firmopt.errors import ArithmeticOverflow, DivisionByZero, NoDefaultGraph, UnknownNode, UnsupportedOp
from firmopt.generate import GraphBuilder
from firmopt.gxl import GxlDocument, GxlGraph, parse_gxl, serialize_gxl
from firmopt.local_opt import (
    ChangeSet,
    FoldConfig,
    calcu_logic,
    calcu_match,
    change_edge_position,
    fold_isolated_const,
    fold_jmp_block,
    fold_no_out_block,
    fold_oper,
    fold_phi,
    remove_block,
    remove_edge,
    remove_node,
    run_local_opt_once,
)
from firmopt.model import EdgeKind, validate

RANGE = range(-10, 11)


# -- pure functions ------------------------------------------------------------------

def reference_arith(a, b, op):
    if op == "#Add":
        return a + b
    if op == "#Sub":
        return a - b
    if op == "#Mul":
        return a * b
    return int(Fraction(a, b))  # int() of a Fraction truncates toward zero


def reference_logic(v0, v1, op):
    less = "true" if op == "LESS" and v0 < v1 else ""
    noless = "false" if op == "LESS" and v0 > v1 else ""
    grt = "true" if op == "GREATER" and v0 > v1 else ""
    nogrt = "false" if op == "GREATER" and v0 < v1 else ""
    eq = "true" if op == "EQUAL" and v0 == v1 else ""
    noeq = "false" if op == "EQUAL" and v0 != v1 else ""
    return less + noless + grt + nogrt + eq + noeq


def test_calcu_match_examples():
    assert calcu_match(2, 3, "#Add") == 5
    assert calcu_match(7, 2, "#Div") == 3
    assert calcu_match(-7, 2, "#Div") == -3
    assert calcu_match(7, -2, "#Div") == -3
    for x in RANGE:
        assert calcu_match(x, 0, "#Sub") == x


@pytest.mark.parametrize("op", ["#Add", "#Sub", "#Mul", "#Div"])
def test_calcu_match_brute_force(op):
    for a in RANGE:
        for b in RANGE:
            if op == "#Div" and b == 0:
                with pytest.raises(DivisionByZero):
                    calcu_match(a, b, op)
                continue
            assert calcu_match(a, b, op) == reference_arith(a, b, op), (a, b)


def test_calcu_match_errors():
    with pytest.raises(UnsupportedOp):
        calcu_match(1, 2, "#Shl")
    with pytest.raises(ArithmeticOverflow):
        calcu_match(2 ** 62, 2, "#Mul")
    with pytest.raises(ArithmeticOverflow):
        calcu_match(-(2 ** 63), -1, "#Div")
    assert calcu_match(2 ** 62, 2 ** 62 - 1, "#Add") == 2 ** 63 - 1


def test_calcu_logic_examples():
    assert calcu_logic(1, 2, "LESS") == "true"
    assert calcu_logic(5, 5, "EQUAL") == "true"
    assert calcu_logic(4, 4, "LESS") == "false"
    with pytest.raises(UnsupportedOp):
        calcu_logic(1, 2, "NOT_EQUAL")


@pytest.mark.parametrize("rel", ["LESS", "EQUAL", "GREATER"])
def test_calcu_logic_agrees_with_original_formula(rel):
    for a in RANGE:
        for b in RANGE:
            got = calcu_logic(a, b, rel)
            original = reference_logic(a, b, rel)
            if original == "":
                # only the equal-operand cell of LESS/GREATER is undefined there
                assert a == b and rel != "EQUAL"
                assert got == "false"
            else:
                assert got == original


# -- FoldOper --------------------------------------------------------------------------

def single_op(type_name, v0, v1):
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("end", "End")
    b.const("x", v0, "b0")
    b.const("y", v1, "b0")
    b.op("n", type_name, "b0", "x", "y")
    b.op("ret", "Return", "b0", "n")
    return b.build()


def test_add_folds_in_one_execution(add23):
    m = model_of(add23)
    cs = fold_oper(m, "add")
    assert cs == ChangeSet(nodes_retyped=1, edges_removed=2, attrs_rewritten=1)
    assert m.nodes["add"].type_ref == "#Const"
    assert m.nodes["add"].get("value") == 5
    assert m.get_to_data("add") == []
    assert {"c2", "c3"} <= set(m.nodes)


def test_first_execution_counts(add23):
    cs = run_local_opt_once(add23)
    assert cs == ChangeSet(nodes_retyped=1, edges_removed=2, attrs_rewritten=1)
    cs = run_local_opt_once(add23)
    assert cs == ChangeSet(nodes_removed=2, edges_removed=2)
    assert run_local_opt_once(add23).is_empty()


@pytest.mark.parametrize("op, v0, v1, expected", [
    ("Mul", 4, 5, 20),
    ("Sub", 5, 2, 3),
    ("Div", -7, 2, -3),
])
def test_math_fold_uses_position_order(op, v0, v1, expected):
    doc = single_op(op, v0, v1)
    m = model_of(doc)
    assert fold_oper(m, "n").edges_removed == 2
    assert m.nodes["n"].get("value") == expected


def test_operand_order_follows_position_not_document_order():
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.const("x", 5, "b0")
    b.const("y", 2, "b0")
    b.node("n", "Sub", "b0")
    b.data("n", "y", 1)
    b.data("n", "x", 0)
    m = model_of(b.build())
    fold_oper(m, "n")
    assert m.nodes["n"].get("value") == 3


def test_division_by_zero_leaves_graph_intact():
    doc = single_op("Div", 1, 0)
    before = serialize_gxl(doc)
    assert run_local_opt_once(doc).is_empty()
    assert serialize_gxl(doc) == before


def test_overflow_leaves_node_intact():
    doc = single_op("Mul", 2 ** 62, 4)
    assert run_local_opt_once(doc).is_empty()


def test_non_const_operand_is_skipped():
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.const("x", 2, "b0")
    b.const("y", 3, "b0")
    b.op("phi", "Phi", "b0", "x", "y")
    b.op("n", "Add", "b0", "x", "phi")
    b.node("j", "Jmp", "b0")
    m = model_of(b.build())
    assert fold_oper(m, "n").is_empty()
    assert fold_oper(m, "j").is_empty()
    assert fold_oper(m, "missing").is_empty()


def test_nested_folds_inner_first(nested):
    assert interpret_const_expression(nested, "mul") == 20
    run_local_opt_once(nested)
    m = model_of(nested)
    assert m.nodes["add"].type_ref == "#Const"
    assert m.nodes["mul"].type_ref == "#Mul"
    run_local_opt_once(nested)
    m = model_of(nested)
    assert m.nodes["mul"].type_ref == "#Const"
    assert m.nodes["mul"].get("value") == 20


# -- Cmp / Cond -------------------------------------------------------------------------

@pytest.mark.parametrize("rel, values, taken", CASES)
def test_cmp_fold_matches_expected(rel, values, taken):
    doc = parse_gxl(branch_gxl(*values, rel))
    out, summary = run_to_fixpoint(doc)
    assert out == parse_gxl(expected_gxl(taken))
    assert validate(out).ok


def test_cmp_fold_first_execution():
    doc = parse_gxl(branch_gxl(1, 2, "LESS"))
    m = model_of(doc)
    cs = fold_oper(m, "cmp")
    assert "cond" not in m.nodes
    assert m.nodes["cmp"].type_ref == "#Jmp"
    assert m.nodes["cmp"].get("relation") is None
    assert [e.from_id for e in m.get_in_edges("cmp", EdgeKind.CONTROL_FLOW)] == ["bt"]
    assert m.get_out_edges("bf", EdgeKind.CONTROL_FLOW) == []
    assert cs.nodes_removed == 1 and cs.nodes_retyped == 1 and cs.edges_retargeted == 1


def test_cmp_without_relation_is_skipped():
    data = branch_gxl(1, 2, "LESS").replace(b"relation", b"rel")
    m = model_of(parse_gxl(data))
    assert fold_oper(m, "cmp").is_empty()


def test_cmp_with_unlabeled_branch_is_skipped():
    data = branch_gxl(1, 2, "LESS").replace(b"<string>false</string>", b"<string>maybe</string>")
    m = model_of(parse_gxl(data))
    assert fold_oper(m, "cmp").is_empty()


def test_cmp_without_cond_is_skipped():
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.const("x", 1, "b0")
    b.const("y", 2, "b0")
    b.op("cmp", "Cmp", "b0", "x", "y", relation="LESS")
    m = model_of(b.build())
    assert fold_oper(m, "cmp").is_empty()


# -- Phi ------------------------------------------------------------------------------------

def phi_graph(pred_positions, users=1):
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("bm")
    b.node("j0", "Jmp", "b0")
    b.const("k1", 1, "b0")
    b.const("k2", 2, "b0")
    b.const("k3", 10, "b0")
    for p in pred_positions:
        b.control("bm", "j0", p)
    b.op("phi", "Phi", "bm", "k1", "k2")
    for i in range(users):
        b.op("u%d" % i, "Add", "bm", "k3", "phi")
        b.op("r%d" % i, "Return", "bm", "u%d" % i)
    return b.build()


@pytest.mark.parametrize("pos, value", [(0, 1), (1, 2)])
def test_phi_picks_operand_at_surviving_position(pos, value):
    doc = phi_graph([pos])
    m = model_of(doc)
    cs = fold_phi(m, "phi")
    assert "phi" not in m.nodes
    edge = m.get_edges_between("u0", "k%d" % value)[0]
    assert edge.position == 1
    assert cs.edges_retargeted == 1 and cs.nodes_removed == 1
    out, _ = run_to_fixpoint(doc)
    assert model_of(out).nodes["u0"].get("value") == 10 + value


def test_phi_with_two_predecessors_is_kept():
    m = model_of(phi_graph([0, 1]))
    assert fold_phi(m, "phi").is_empty()


def test_phi_without_users_is_removed():
    m = model_of(phi_graph([0], users=0))
    edges_before = len(m.edges())
    cs = fold_phi(m, "phi")
    assert cs == ChangeSet(nodes_removed=1, edges_removed=3)
    assert len(m.edges()) == edges_before - 3


def test_phi_position_mismatch_is_skipped():
    m = model_of(phi_graph([4]))
    assert fold_phi(m, "phi").is_empty()


# -- blocks -------------------------------------------------------------------------------------

def test_jmp_block_chain_collapses_over_two_executions(cfg_chain):
    run_local_opt_once(cfg_chain)
    m = model_of(cfg_chain)
    assert "b1" not in m.nodes and "b2" in m.nodes
    assert [e.to_id for e in m.get_out_edges("b2", EdgeKind.CONTROL_FLOW)] == ["j0"]
    run_local_opt_once(cfg_chain)
    m = model_of(cfg_chain)
    assert "b2" not in m.nodes
    assert [e.to_id for e in m.get_out_edges("b3", EdgeKind.CONTROL_FLOW)] == ["j0"]
    assert validate(cfg_chain).ok


def test_jmp_block_with_extra_content_is_kept(cfg_chain):
    b = GraphBuilder()
    b.graph = cfg_chain.graphs[0]
    b._edge_seq = 100
    b.const("extra", 3, "b1")
    m = model_of(cfg_chain)
    assert fold_jmp_block(m, "b1").is_empty()


def test_jmp_block_keeps_branch_label():
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("b1")
    b.block("b2")
    b.block("b3")
    b.const("x", 1, "b0")
    b.op("cond", "Cond", "b0", "x")
    b.control("b1", "cond", 0, when="true")
    b.control("b3", "cond", 0, when="false")
    b.node("j1", "Jmp", "b1")
    b.control("b2", "j1")
    m = model_of(b.build())
    fold_jmp_block(m, "b1")
    (e,) = m.get_out_edges("b2", EdgeKind.CONTROL_FLOW)
    assert e.to_id == "cond" and e.get("when") == "true"


def test_no_out_block():
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.block("dead")
    b.block("live")
    b.node("j0", "Jmp", "b0")
    b.control("live", "j0")
    b.const("k", 1, "dead")
    b.node("jd", "Jmp", "dead")
    m = model_of(b.build())
    assert fold_no_out_block(m, "b0").is_empty()
    assert fold_no_out_block(m, "live").is_empty()
    cs = fold_no_out_block(m, "dead")
    assert cs.nodes_removed == 3
    assert set(m.nodes) == {"b0", "live", "j0"}


def test_isolated_consts():
    b = GraphBuilder()
    b.block("b0", "StartBlock")
    b.const("a", 1, "b0")
    b.const("b", 2, "b0")
    b.const("used", 3, "b0")
    b.op("ret", "Return", "b0", "used")
    doc = b.build()
    m = model_of(doc)
    assert fold_isolated_const(m, "used").is_empty()
    cs = run_local_opt_once(doc)
    assert cs == ChangeSet(nodes_removed=2, edges_removed=2)
    assert [n.id for n in doc.graphs[0].nodes] == ["b0", "used", "ret"]


# -- primitives ---------------------------------------------------------------------------------

def test_primitives(nested):
    m = model_of(nested)
    (e,) = m.get_edges_between("add", "c2")
    assert remove_edge(m, e) == ChangeSet(edges_removed=1)
    assert m.get_edges_between("add", "c2") == []

    assert remove_node(m, "c4") == ChangeSet(nodes_removed=1, edges_removed=2)
    assert "c4" not in m.nodes
    assert [n.id for _, n in m.get_to_data("mul")] == ["add"]
    with pytest.raises(UnknownNode):
        remove_node(m, "c4")

    (e_c3,) = m.get_edges_between("add", "c3")
    change_edge_position(m, e_c3, 0)
    assert [n.id for _, n in m.get_to_data("add")] == ["c3"]
    assert m.audit()


def test_remove_block(cfg_chain):
    m = model_of(cfg_chain)
    cs = remove_block(m, "b3")
    assert cs.nodes_removed == 2
    assert "ret" not in m.nodes and "b3" not in m.nodes
    assert m.audit()


def test_requires_default_graph():
    with pytest.raises(NoDefaultGraph):
        run_local_opt_once(GxlDocument([GxlGraph("g", "#Other")]))


def test_non_default_graphs_untouched(add23):
    extra = GxlGraph("aux", "#Other")
    add23.graphs.append(extra)
    before = serialize_gxl(GxlDocument([extra]))
    run_to_fixpoint(add23, in_place=True)
    assert serialize_gxl(GxlDocument([add23.graphs[1]])) == before


def test_custom_config_restricts_math_ops(add23):
    cfg = FoldConfig(math_ops=frozenset({"Mul"}))
    assert run_local_opt_once(add23, cfg).is_empty()
