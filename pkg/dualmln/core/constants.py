"""Built-in defaults; settings.py may override any of them."""

from typing import Final

# Generic MaxSAT / sampling
WALKSAT_NOISE: Final = 0.5
WALKSAT_MAX_FLIPS: Final = 100_000
WALKSAT_RESTARTS: Final = 3
HARD_SURROGATE_BASE: Final = 1.0e4
GIBBS_SAMPLES: Final = 10_000
GIBBS_BURN_IN: Final = 1_000
INPUT_REFINE_ROUNDS: Final = 5
# Generic components up to this many atoms are solved by enumeration.
EXACT_COMPONENT_ATOMS: Final = 12
# Expected average positive degree for coref access-count estimates;
# None means "estimate from the positive edge count".
COREF_DEGREE_ESTIMATE: Final = None

# Master loop
STEP_INITIAL: Final = 1.0
STEP_SCHEDULE_DECAY: Final = "decay"
STEP_SCHEDULE_CONSTANT: Final = "constant"
STEP_SCHEDULES: Final = (STEP_SCHEDULE_DECAY, STEP_SCHEDULE_CONSTANT)
STEP_DECAY_HORIZON: Final = 10.0
DISAGREEMENT_THRESHOLD: Final = 0.01
# Marginal copies within this distance count as agreeing.
MARGINAL_AGREEMENT: Final = 0.01
MAX_ITERATIONS: Final = 100
WORKERS: Final = 1

# Relational cost model
COST_ALPHA_IO: Final = 1.0
COST_BETA: Final = 0.1
COST_BUFFER_TUPLES: Final = 1_000_000
COST_WRITE: Final = 1.0
MAX_ENUMERATED_SUBGOALS: Final = 8

# Oracles
MAX_MAP_ORACLE_ATOMS: Final = 25
MAX_MARGINAL_ORACLE_ATOMS: Final = 20

# Inference modes
MODE_MAP: Final = "map"
MODE_MARGINAL: Final = "marginal"
MODES: Final = (MODE_MAP, MODE_MARGINAL)

# Command exit codes
EXIT_OK: Final = 0
EXIT_INPUT_ERROR: Final = 2
EXIT_INFEASIBLE: Final = 3
