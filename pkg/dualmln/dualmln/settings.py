"""
Django settings for the dualmln project.

The project has no web surface; Django supplies configuration, logging and
the management-command runner. Engine parameters live in the ``DUALMLN_*``
sections below and may be overridden from the environment.
"""

import logging
import os
from pathlib import Path
from typing import Any, TypedDict

import sentry_sdk
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class SolverDefaults(TypedDict, total=False):
    """
    Overrides for the task solvers.

    Attributes:
    ----------
    noise : float
        Probability of a random flip in MaxWalkSAT.
    max_flips : int
        Flip budget per MaxWalkSAT restart.
    restarts : int
        Number of MaxWalkSAT restarts.
    gibbs_samples : int
        Samples kept by the Gibbs sampler.
    gibbs_burn_in : int
        Samples discarded before averaging.
    exact_atoms : int
        Generic components up to this size are solved by enumeration.
    """

    noise: float
    max_flips: int
    restarts: int
    hard_surrogate_base: float
    gibbs_samples: int
    gibbs_burn_in: int
    refine_rounds: int
    coref_degree: float | None
    exact_atoms: int


class MasterDefaults(TypedDict, total=False):
    """
    Overrides for the dual-decomposition loop.

    Attributes:
    ----------
    step : float
        Initial step size.
    schedule : str
        ``decay`` or ``constant``.
    threshold : float
        Stop once the fraction of disagreeing shared atoms is at most this.
    max_iterations : int
        Round budget.
    workers : int
        Concurrent task solves per round.
    """

    step: float
    schedule: str
    decay_horizon: float
    threshold: float
    max_iterations: int
    workers: int


class CostModelDefaults(TypedDict, total=False):
    """Overrides for the materialization cost model."""

    alpha_io: float
    beta: float
    buffer_tuples: float
    write_cost: float
    max_subgoals: int


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {value!r}") from exc


def _env_float(name: str) -> float | None:
    value = os.getenv(name)
    if value is None or value == "":
        return None
    try:
        return float(value)
    except ValueError as exc:
        raise ValueError(f"{name} must be a number, got {value!r}") from exc


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "dualmln-insecure-local-key")

DEBUG = os.getenv("DJANGO_DEBUG", "False").lower() in ("true", "1")

INSTALLED_APPS = [
    "core",
    "logic",
    "parsing",
    "relational",
    "compiler",
    "solvers",
    "master",
    "cli",
]

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

USE_TZ = True

DUALMLN_SOLVERS: SolverDefaults = {}

DUALMLN_MASTER: MasterDefaults = {}

DUALMLN_COST_MODEL: CostModelDefaults = {}

_step = _env_float("DUALMLN_STEP")
if _step is not None:
    DUALMLN_MASTER["step"] = _step
if os.getenv("DUALMLN_MAX_ITERATIONS"):
    DUALMLN_MASTER["max_iterations"] = _env_int("DUALMLN_MAX_ITERATIONS", 100)
_threshold = _env_float("DUALMLN_THRESHOLD")
if _threshold is not None:
    DUALMLN_MASTER["threshold"] = _threshold
if os.getenv("DUALMLN_WORKERS"):
    DUALMLN_MASTER["workers"] = _env_int("DUALMLN_WORKERS", 1)
if os.getenv("DUALMLN_MAX_FLIPS"):
    DUALMLN_SOLVERS["max_flips"] = _env_int("DUALMLN_MAX_FLIPS", 100_000)
_beta = _env_float("DUALMLN_COST_BETA")
if _beta is not None:
    DUALMLN_COST_MODEL["beta"] = _beta

# Per-round DEBUG records of the master loop are kept for every n-th round.
DUALMLN_TRACE_EVERY = _env_int("DUALMLN_TRACE_EVERY", 10)

DUALMLN_LOG_LEVEL = os.getenv(
    "DUALMLN_LOG_LEVEL", "INFO" if DEBUG else "WARNING"
).upper()


def validate_settings(
    master: MasterDefaults | None = None,
    cost_model: CostModelDefaults | None = None,
    trace_every: int | None = None,
    log_level: str | None = None,
) -> None:
    """
    Check the engine sections for values the engine cannot run with.

    Arguments default to the module settings.

    Raises:
        ValueError: On the first out-of-range value.
    """
    master = DUALMLN_MASTER if master is None else master
    cost_model = DUALMLN_COST_MODEL if cost_model is None else cost_model
    trace_every = DUALMLN_TRACE_EVERY if trace_every is None else trace_every
    log_level = DUALMLN_LOG_LEVEL if log_level is None else log_level
    if trace_every < 1:
        raise ValueError("DUALMLN_TRACE_EVERY must be at least 1")
    if not isinstance(logging.getLevelName(log_level), int):
        raise ValueError(f"Unknown DUALMLN_LOG_LEVEL {log_level!r}")
    if not master.get("step", 1.0) > 0:
        raise ValueError("DUALMLN_STEP must be positive")
    if not 0 <= master.get("threshold", 0.01) <= 1:
        raise ValueError("DUALMLN_THRESHOLD must lie in [0, 1]")
    if master.get("max_iterations", 1) < 1:
        raise ValueError("DUALMLN_MAX_ITERATIONS must be at least 1")
    if master.get("workers", 1) < 1:
        raise ValueError("DUALMLN_WORKERS must be at least 1")
    if not 0 < cost_model.get("beta", 0.1) <= 1:
        raise ValueError("DUALMLN_COST_BETA must lie in (0, 1]")


validate_settings()

LOGS_DIR = BASE_DIR / "logs"
LOGS_DIR.mkdir(exist_ok=True)


class IterationSampler(logging.Filter):
    """
    Thin per-round DEBUG records of the master loop to every n-th round.

    Records without an ``iteration`` attribute, records above DEBUG and
    round 0 always pass.
    """

    def __init__(self, every: int = 10) -> None:
        super().__init__()
        self.every = max(1, every)

    def filter(self, record: logging.LogRecord) -> bool:
        """
        Determine if the log record should be logged.

        Args:
            record (logging.LogRecord): The log record to filter.

        Returns:
            bool: False for a master round that falls between samples.
        """
        iteration = getattr(record, "iteration", None)
        if record.levelno > logging.DEBUG or not isinstance(iteration, int):
            return True
        return iteration % self.every == 0


LOGGING: dict[str, Any] = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "filters": {
        "iteration_sampler": {
            "()": IterationSampler,
            "every": DUALMLN_TRACE_EVERY,
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "level": DUALMLN_LOG_LEVEL,
            "formatter": "simple",
            "filters": ["iteration_sampler"],
        },
        "file": {
            "class": "logging.FileHandler",
            "level": "DEBUG" if DEBUG else "INFO",
            "filename": str(LOGS_DIR / "dualmln.log"),
            "formatter": "verbose",
            "filters": ["iteration_sampler"],
        },
    },
    "loggers": {
        "django": {
            "handlers": ["file"],
            "level": "WARNING",
            "propagate": False,
        },
        **{
            app: {
                "handlers": ["console", "file"],
                "level": "DEBUG" if DEBUG else "INFO",
                "propagate": False,
            }
            for app in INSTALLED_APPS
            if app != "core"
        },
    },
    "root": {
        "handlers": ["console", "file"],
        "level": "INFO",
    },
}

# Error reporting is opt-in; nothing leaves the machine without a DSN.
SENTRY_DSN = os.getenv("SENTRY_DSN")
if SENTRY_DSN:
    sentry_sdk.init(
        dsn=SENTRY_DSN,
        send_default_pii=False,
    )
