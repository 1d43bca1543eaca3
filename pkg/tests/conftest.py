import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from loopcharge.smt import SolverConfig, default_solver_command  # noqa: E402


@pytest.fixture(scope="session")
def solver_config() -> SolverConfig:
    """Solver reachable from the repo; generous per-query budget for CI noise."""
    return SolverConfig(command=default_solver_command(), timeout_secs=600.0)
