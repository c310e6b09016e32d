"""Options of one command invocation."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from core import constants
from core.config import (
    MasterConfig,
    SolverConfig,
    get_master_defaults,
    get_solver_defaults,
)
from core.types import InputError


@dataclass(frozen=True)
class RunConfig:
    """
    Attributes:
        program: Program file.
        evidence: Evidence file, if any.
        queries: Relations to report; empty means every query relation.
        output: Result file; None writes to stdout.
        mode: ``map`` or ``marginal``.
        iterations: Round budget of the master loop.
        step: Initial step size.
        schedule: ``decay`` or ``constant``.
        seed: Seed for every randomized solver.
        monolithic: Solve the whole program as one generic task.
        trace: Path of the per-round TSV trace.
        workers: Concurrent task solves.
        plot: Path of the convergence chart.
        max_flips: MaxWalkSAT flip budget per restart.
        restarts: MaxWalkSAT restarts.
        samples: Gibbs samples kept per component.
    """

    program: Path
    evidence: Path | None = None
    queries: tuple[str, ...] = ()
    output: Path | None = None
    mode: str = constants.MODE_MAP
    iterations: int | None = None
    step: float | None = None
    schedule: str | None = None
    seed: int = 0
    monolithic: bool = False
    trace: Path | None = None
    workers: int | None = None
    plot: Path | None = None
    max_flips: int | None = None
    restarts: int | None = None
    samples: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in constants.MODES:
            raise InputError(f"Unknown mode {self.mode!r}; use map or marginal")
        if self.iterations is not None and self.iterations < 1:
            raise InputError("--iters must be at least 1")
        if self.workers is not None and self.workers < 1:
            raise InputError("--workers must be at least 1")
        if self.step is not None and not self.step > 0:
            raise InputError("--step must be positive")
        schedules = constants.STEP_SCHEDULES
        if self.schedule is not None and self.schedule not in schedules:
            raise InputError(f"Unknown step schedule {self.schedule!r}")
        for flag, count in (
            ("--max-flips", self.max_flips),
            ("--restarts", self.restarts),
            ("--samples", self.samples),
        ):
            if count is not None and count < 1:
                raise InputError(f"{flag} must be at least 1")
        if not -(2**63) <= self.seed < 2**64:
            raise InputError("--seed must fit in 64 bits")

    @classmethod
    def from_options(cls, options: Mapping[str, Any]) -> RunConfig:
        def path(key: str) -> Path | None:
            value = options.get(key)
            return Path(value) if value else None

        queries = tuple(
            q.strip() for item in options.get("queries") or () for q in item.split(",")
        )
        return cls(
            program=Path(options["program"]),
            evidence=path("evidence"),
            queries=tuple(q for q in queries if q),
            output=path("output"),
            mode=options.get("mode") or constants.MODE_MAP,
            iterations=options.get("iters"),
            step=options.get("step"),
            schedule=options.get("schedule"),
            seed=options.get("seed") or 0,
            monolithic=bool(options.get("monolithic")),
            trace=path("trace"),
            workers=options.get("workers"),
            plot=path("plot"),
            max_flips=options.get("max_flips"),
            restarts=options.get("restarts"),
            samples=options.get("samples"),
        )

    def master_config(self) -> MasterConfig:
        return get_master_defaults(
            step=self.step,
            schedule=self.schedule,
            max_iterations=self.iterations,
            workers=self.workers,
            seed=self.seed,
            monolithic=self.monolithic,
        )

    def solver_config(self) -> SolverConfig:
        return get_solver_defaults(
            max_flips=self.max_flips,
            restarts=self.restarts,
            gibbs_samples=self.samples,
        )
