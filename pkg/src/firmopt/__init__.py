"""firmopt: local optimization and instruction selection for FIRM graphs in GXL."""

from .driver import (
    PipelineConfig,
    RunSummary,
    emit_validation_report,
    interpret_const_expression,
    run_to_fixpoint,
)
from .generate import GraphBuilder, generate_arith_dag, generate_random_model
from .gxl import (
    AttrValue,
    GxlAttr,
    GxlDocument,
    GxlEdge,
    GxlGraph,
    GxlNode,
    load_gxl,
    parse_gxl,
    save_gxl,
    serialize_gxl,
)
from .instr_sel import SelConfig, get_new_id, get_target_name, run_instruction_selection
from .local_opt import ChangeSet, FoldConfig, calcu_logic, calcu_match, run_local_opt_once
from .model import EdgeKind, FirmModel, Kind, NodeKind, ValidationReport, classify, validate

__version__ = "0.1.0"
