#!/usr/bin/env python3
"""
Time eager, lazy and cost-chosen materialization plans on a synthetic
coreference view.

The view is ``dmo(x, y) <- affil(x, o), affil(y, o), pSimSoft(x, y)`` probed
once per mention with ``x`` bound, the access pattern of the coref solver.
Each row reports the wall-clock time of materializing the plan's blocks and
answering every probe, next to the modeled ExecCost.
"""

import os
import sys
import time
from argparse import ArgumentParser
from pathlib import Path

import django
import numpy as np

PROJECT_DIR = Path(__file__).resolve().parent.parent / "dualmln"
sys.path.insert(0, str(PROJECT_DIR))
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "dualmln.settings")
django.setup()

# pylint: disable=wrong-import-position
from logic.types import Variable  # noqa: E402
from relational.cost_model import CostModelParams  # noqa: E402
from relational.optimizer import (  # noqa: E402
    choose_plan,
    eager_plan,
    lazy_plan,
    score_plan,
)
from relational.relation import Catalog, Relation  # noqa: E402
from relational.views import (  # noqa: E402
    AdornedView,
    Subgoal,
    eval_bound,
    materialize,
)

X, Y, O = Variable("x"), Variable("y"), Variable("o")


def workload(mentions: int, orgs: int, seed: int) -> tuple[Catalog, list[str]]:
    """Random affiliations (one or two per mention) and sparse similarities."""
    rng = np.random.default_rng(seed)
    names = [f"M{i}" for i in range(mentions)]
    affil = Relation("affil", 2)
    for name in names:
        for org in rng.choice(orgs, size=rng.integers(1, 3), replace=False):
            affil.add((name, f"O{org}"))
    similar = Relation("pSimSoft", 2)
    for _ in range(mentions * 3):
        a, b = rng.choice(mentions, size=2, replace=False)
        similar.add((names[a], names[b]))
    return Catalog([affil, similar]), names


def coref_view(access_count: float) -> AdornedView:
    return AdornedView(
        "dmo",
        (X, Y),
        "bf",
        (
            Subgoal("affil", (X, O)),
            Subgoal("affil", (Y, O)),
            Subgoal("pSimSoft", (X, Y)),
        ),
        access_count=access_count,
    )


def run_plan(view, plan, catalog, probes) -> tuple[float, int]:
    start = time.perf_counter()
    done = materialize(view, plan, catalog)
    answers = sum(len(eval_bound(view, done, (name,))) for name in probes)
    return time.perf_counter() - start, answers


def main() -> int:
    """Print one TSV row per size and strategy."""
    parser = ArgumentParser(description="Benchmark view materialization plans")
    parser.add_argument(
        "--sizes",
        type=int,
        nargs="+",
        default=[250, 500, 1000, 2000],
        help="Numbers of mentions to benchmark",
    )
    parser.add_argument(
        "--orgs-ratio",
        type=float,
        default=0.1,
        help="Organizations per mention",
    )
    parser.add_argument("--seed", type=int, default=0, help="Workload seed")
    args = parser.parse_args()

    params = CostModelParams()
    print("mentions\tplan\tseconds\tanswers\tmodeled")
    for size in args.sizes:
        catalog, names = workload(size, max(int(size * args.orgs_ratio), 1), args.seed)
        view = coref_view(float(size))
        stats = catalog.stats()
        plans = {
            "opt": choose_plan(view, stats, params),
            "lazy": lazy_plan(view),
            "eager": eager_plan(view),
        }
        answers_seen = set()
        for label, plan in plans.items():
            seconds, answers = run_plan(view, plan, catalog, names)
            answers_seen.add(answers)
            modeled = score_plan(view, plan, stats, params).exec_cost
            print(f"{size}\t{label}\t{seconds:.4f}\t{answers}\t{modeled:.1f}")
        if len(answers_seen) != 1:
            print(f"Plans disagree on {size} mentions", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
