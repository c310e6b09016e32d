"""
Pytest configuration file for the dualmln project.

Defines fixtures for the bundled programs and their ground databases.
"""

# pylint: disable=import-error
from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import TextIO, cast

import django
import numpy as np
import pytest
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# The apps are top-level packages inside the project directory.
root_dir = Path(__file__).parent.absolute()
project_dir = root_dir / "dualmln"
if str(project_dir) not in sys.path:
    sys.path.insert(0, str(project_dir))

# Configure Django settings
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "dualmln.settings")

# Import Django after setting the environment variable
django.setup()

# pylint: disable=wrong-import-position
from compiler.planner import assign_tasks  # noqa: E402
from compiler.types import LogicalPlan  # noqa: E402
from logic.grounding import ground  # noqa: E402
from logic.types import (  # noqa: E402
    HARD,
    GroundAtom,
    GroundClause,
    GroundDatabase,
    make_ground_clause,
)
from parsing.loader import load_program  # noqa: E402
from parsing.program import MLNProgram  # noqa: E402

# Setup console logger for debugging
logger = logging.getLogger(__name__)
handler = logging.StreamHandler(cast(TextIO, sys.stdout))
handler.setLevel(logging.DEBUG)
handler.setFormatter(logging.Formatter("%(levelname)s - %(message)s"))
logger.addHandler(handler)
logger.setLevel(logging.DEBUG)

PROGRAMS_DIR = project_dir / "programs"


def bundled(name: str, evidence: bool = True) -> MLNProgram:
    """Load ``programs/<name>.mln`` with its ``.db`` file when there is one."""
    db_path = PROGRAMS_DIR / f"{name}.db"
    if not db_path.exists():
        db_path = PROGRAMS_DIR / f"{name.removesuffix('_tasks')}.db"
    return load_program(
        PROGRAMS_DIR / f"{name}.mln", db_path if evidence and db_path.exists() else None
    )


@pytest.fixture(name="programs_dir")
def programs_dir_fixture() -> Path:
    """Return the directory of the bundled programs."""
    return PROGRAMS_DIR


@pytest.fixture(name="happy_sad")
def happy_sad_fixture() -> MLNProgram:
    """Return the Happy/Sad program left to the compiler."""
    return bundled("happy_sad")


@pytest.fixture(name="happy_sad_tasks")
def happy_sad_tasks_fixture() -> MLNProgram:
    """Return the Happy/Sad program split into two user tasks."""
    return bundled("happy_sad_tasks")


@pytest.fixture(name="happy_sad_db")
def happy_sad_db_fixture(happy_sad: MLNProgram) -> GroundDatabase:
    """Return the ground Happy/Sad database."""
    return ground(happy_sad)


@pytest.fixture(name="affiliation")
def affiliation_fixture() -> MLNProgram:
    """Return the affiliation and coreference program with its evidence."""
    return bundled("affiliation")


@pytest.fixture(name="affiliation_plan")
def affiliation_plan_fixture(affiliation: MLNProgram) -> LogicalPlan:
    """Return the compiled plan of the affiliation program."""
    return assign_tasks(affiliation)


@pytest.fixture(name="packers")
def packers_fixture() -> MLNProgram:
    """Return the phrase labelling and winner program."""
    return bundled("packers")


@pytest.fixture(name="chain")
def chain_fixture() -> MLNProgram:
    """Return the token tagging chain program."""
    return bundled("chain")


@pytest.fixture(name="load_bundled")
def load_bundled_fixture():
    """Return the loader for bundled programs by name."""
    return bundled


def random_ground_db(
    rng: np.random.Generator,
    num_atoms: int,
    num_clauses: int,
    hard_share: float = 0.0,
    max_literals: int = 3,
    max_weight: float = 3.0,
) -> GroundDatabase:
    """
    Random ground database over atoms ``p(C0) .. p(Cn-1)``.

    Soft weights are drawn from ``[-max_weight, max_weight]``; a
    ``hard_share`` of the clauses is HARD.
    """
    atoms = tuple(GroundAtom(i, "p", (f"C{i}",)) for i in range(num_atoms))
    clauses: list[GroundClause] = []
    while len(clauses) < num_clauses:
        width = int(rng.integers(1, min(max_literals, num_atoms) + 1))
        chosen = rng.choice(num_atoms, size=width, replace=False)
        literals = [(int(a), bool(rng.random() < 0.5)) for a in chosen]
        if rng.random() < hard_share:
            weight = HARD
        else:
            weight = float(np.round(rng.uniform(-max_weight, max_weight), 2)) or 1.0
        clause = make_ground_clause(weight, literals)
        if clause is not None:
            clauses.append(clause)
    return GroundDatabase(atoms, tuple(clauses))


@pytest.fixture(name="random_db")
def random_db_fixture():
    """Return the builder of random ground databases."""
    return random_ground_db
