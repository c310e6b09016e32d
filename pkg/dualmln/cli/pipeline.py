"""Parse, ground, compile and infer: the work behind the management commands."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from compiler.explain import explain
from compiler.planner import assign_tasks
from compiler.types import LogicalPlan
from core import constants
from core.types import InputError
from logic.grounding import ground
from logic.types import GroundDatabase
from master.engine import InferenceResult, run_map, run_marginal
from master.trace import write_chart, write_trace
from parsing.loader import load_program
from parsing.program import MLNProgram
from relational.cost_model import CostModelParams
from solvers.dmos import describe_dmos, dmo_catalog, register_dmos

from .config import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class Compiled:
    program: MLNProgram
    db: GroundDatabase
    plan: LogicalPlan


def compile_run(run: RunConfig) -> Compiled:
    """
    Raises:
        InputError: Unreadable input, parse errors or an unknown query relation.
    """
    program = load_program(run.program, run.evidence)
    unknown = [q for q in run.queries if not program.is_query(q)]
    if unknown:
        raise InputError(f"Not a query relation: {', '.join(unknown)}")
    db = ground(program)
    plan = assign_tasks(program, monolithic=run.monolithic)
    return Compiled(program, db, plan)


def compile_report(run: RunConfig, explain_plan: bool = False) -> str:
    """The plan dump, followed by the chosen materialization of every view."""
    compiled = compile_run(run)
    report = explain(compiled.plan)
    if explain_plan:
        catalog = dmo_catalog(compiled.program, compiled.db)
        params = CostModelParams.from_settings()
        solver_config = run.solver_config()
        lines = ["dmos:"]
        for task in compiled.plan.scheduled():
            views = register_dmos(task, compiled.program, compiled.db, solver_config)
            lines += [f"  {line}" for line in describe_dmos(views, catalog, params)]
        report += "\n".join(lines) + "\n"
    return report


def infer(run: RunConfig) -> tuple[Compiled, InferenceResult]:
    compiled = compile_run(run)
    runner = run_marginal if run.mode == constants.MODE_MARGINAL else run_map
    result = runner(
        compiled.program,
        compiled.db,
        compiled.plan,
        run.master_config(),
        run.solver_config(),
    )
    return compiled, result


def result_rows(
    compiled: Compiled, result: InferenceResult, queries: tuple[str, ...] = ()
) -> list[str]:
    """``relation<TAB>args...<TAB>value`` per atom, sorted."""
    wanted = set(queries or compiled.program.query_relations())
    rows: list[tuple[str, ...]] = []
    for atom in compiled.db.atoms:
        if atom.predicate not in wanted:
            continue
        value = result.values[atom.id]
        if result.mode == constants.MODE_MAP:
            text = "1" if value >= 0.5 else "0"
        else:
            text = f"{value:.6f}"
        rows.append((atom.predicate, *atom.args, text))
    return ["\t".join(row) for row in sorted(rows)]


def write_outputs(
    run: RunConfig, compiled: Compiled, result: InferenceResult
) -> list[str]:
    """Write the result file, the trace and the chart that ``run`` asks for."""
    rows = result_rows(compiled, result, run.queries)
    if run.output is not None:
        Path(run.output).write_text(
            "".join(f"{row}\n" for row in rows), encoding="utf-8"
        )
        logger.info("Wrote %d row(s) to %s", len(rows), run.output)
    if run.trace is not None:
        write_trace(run.trace, result.stats.records)
    if run.plot is not None:
        write_chart(run.plot, result.stats.records)
    return rows
