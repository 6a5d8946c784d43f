"""Shared fixtures: batches of seeded benchmark runs reused across tests."""

import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from peleg import PelegConfig, make_setting1, run

ACCEPT_BASE_SEED = 20240

_WORKERS = max(1, min(2, os.cpu_count() or 1))


def _one_standard_run(args):
    delta_gap, trial = args
    inst = make_setting1(delta_gap)
    rng = np.random.default_rng(np.random.SeedSequence([ACCEPT_BASE_SEED, trial]))
    return run(inst, PelegConfig(delta=0.1), rng)


def _standard_runs(delta_gap, n_trials=50):
    start = time.perf_counter()
    tasks = [(delta_gap, t) for t in range(n_trials)]
    if _WORKERS > 1:
        with ProcessPoolExecutor(max_workers=_WORKERS) as pool:
            results = list(pool.map(_one_standard_run, tasks))
    else:
        results = [_one_standard_run(t) for t in tasks]
    elapsed = time.perf_counter() - start
    return results, elapsed


@pytest.fixture(scope="session")
def runs_d03():
    """50 seeded benchmark runs, gap 0.3, confidence 0.1 (with wall time)."""
    return _standard_runs(0.3)


@pytest.fixture(scope="session")
def runs_d05():
    """50 seeded benchmark runs, gap 0.5, confidence 0.1 (with wall time)."""
    return _standard_runs(0.5)


@pytest.fixture(scope="session")
def fig3a_sweep():
    """Gap sweep 0.1..0.5, 50 trials per point (records, elapsed seconds)."""
    from peleg.experiments import ExperimentSpec, run_experiment

    spec = ExperimentSpec(setting="standard", sweep=(0.1, 0.2, 0.3, 0.4, 0.5),
                          delta=0.1, trials=50, base_seed=ACCEPT_BASE_SEED,
                          algorithms=("peleg",))
    start = time.perf_counter()
    records = run_experiment(spec, workers=_WORKERS)
    return records, time.perf_counter() - start
