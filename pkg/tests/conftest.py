import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dmdextrap.solvers import make_problem, solve  # noqa: E402

N_DESK = 100
N_SNAP = 500


@lru_cache(maxsize=None)
def reference(test_id, n_grid=N_DESK, n_out=N_SNAP):
    """Resolved trajectory subsampled to ``n_out`` states (cached per session)."""
    problem = make_problem(test_id, n_grid, step_multiple=n_out - 1)
    return problem, solve(problem, n_out)


@pytest.fixture
def ref():
    return reference


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
