"""Human-readable dump of a logical plan, in deterministic order."""

from __future__ import annotations

from collections.abc import Iterable

from .types import LogicalPlan, Property


def rule_label(index: int) -> str:
    return f"F{index + 1}"


def format_rules(rules: Iterable[int]) -> str:
    """Compress rule indices into ranges: ``F1-F3, F6``."""
    ordered = sorted(set(rules))
    parts: list[str] = []
    start = prev = None
    for index in [*ordered, None]:
        if start is not None and index is not None and index == prev + 1:
            prev = index
            continue
        if start is not None:
            label = rule_label(start)
            parts.append(label if start == prev else f"{label}-{rule_label(prev)}")
        start = prev = index
    return ", ".join(parts) or "-"


def format_properties(properties: Iterable[Property]) -> str:
    found = set(properties)
    return ", ".join(p.value for p in Property if p in found) or "-"


def explain(plan: LogicalPlan) -> str:
    lines = ["relations:"]
    width = max((len(r) for r in plan.relations), default=0)
    for relation in plan.relations:
        found = format_properties(plan.properties.get(relation, ()))
        lines.append(f"  {relation.ljust(width)}  {found}")
    lines.append("tasks:")
    for task in plan.scheduled():
        reads = [r for r in task.relations if r not in task.owned]
        line = (
            f"  {task.name} [{task.kind.label}] rules {format_rules(task.rules)}"
            f"; owns {', '.join(task.owned) or '-'}"
        )
        if reads:
            line += f"; reads {', '.join(reads)}"
        if task.chain is not None:
            line += f"; chain on argument {task.chain.position} via {task.chain.link}"
        if task.pinned:
            line += "; pinned"
        lines.append(line)
    lines.append(f"shared: {', '.join(plan.shared_relations()) or '-'}")
    lines.append(f"order: {' -> '.join(plan.order) or '-'}")
    return "\n".join(lines) + "\n"
