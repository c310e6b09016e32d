"""
Engine configuration objects.

Each accessor merges the matching ``DUALMLN_*`` section of the Django settings
over the built-in constants, so library code can run with or without a
configured settings module.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, TypeVar

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from . import constants

logger = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by the task solvers."""

    noise: float = constants.WALKSAT_NOISE
    max_flips: int = constants.WALKSAT_MAX_FLIPS
    restarts: int = constants.WALKSAT_RESTARTS
    hard_surrogate_base: float = constants.HARD_SURROGATE_BASE
    gibbs_samples: int = constants.GIBBS_SAMPLES
    gibbs_burn_in: int = constants.GIBBS_BURN_IN
    refine_rounds: int = constants.INPUT_REFINE_ROUNDS
    coref_degree: float | None = constants.COREF_DEGREE_ESTIMATE
    exact_atoms: int = constants.EXACT_COMPONENT_ATOMS


@dataclass(frozen=True)
class MasterConfig:
    """Parameters of the dual-decomposition loop."""

    step: float = constants.STEP_INITIAL
    schedule: str = constants.STEP_SCHEDULE_DECAY
    decay_horizon: float = constants.STEP_DECAY_HORIZON
    threshold: float = constants.DISAGREEMENT_THRESHOLD
    max_iterations: int = constants.MAX_ITERATIONS
    workers: int = constants.WORKERS
    seed: int = 0
    monolithic: bool = False


def _settings_section(name: str) -> dict[str, Any]:
    try:
        if not settings.configured:
            return {}
        return dict(getattr(settings, name, None) or {})
    except ImproperlyConfigured:
        return {}


def _build(cls: type[ConfigT], section: str, overrides: dict[str, Any]) -> ConfigT:
    names = {field.name for field in dataclasses.fields(cls)}  # type: ignore[arg-type]
    values = {k: v for k, v in _settings_section(section).items() if k in names}
    unknown = set(overrides) - names
    if unknown:
        raise TypeError(f"Unknown {cls.__name__} option(s): {sorted(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**values)


def get_solver_defaults(**overrides: Any) -> SolverConfig:
    """
    Return solver parameters from settings, with keyword overrides applied.

    Args:
        **overrides: Field values that take precedence; ``None`` is ignored.

    Returns:
        SolverConfig: The merged configuration.
    """
    return _build(SolverConfig, "DUALMLN_SOLVERS", overrides)


def get_master_defaults(**overrides: Any) -> MasterConfig:
    """Return master-loop parameters from settings, with overrides applied."""
    config = _build(MasterConfig, "DUALMLN_MASTER", overrides)
    if config.schedule not in constants.STEP_SCHEDULES:
        raise ValueError(f"Unknown step schedule: {config.schedule}")
    return config


def settings_section(name: str) -> dict[str, Any]:
    """Expose a raw ``DUALMLN_*`` settings section (used by the cost model)."""
    return _settings_section(name)
