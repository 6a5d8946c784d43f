"""Seeded multi-trial runner for the three benchmark settings.

Per-trial randomness is derived from (base_seed, swept-parameter bits,
trial index) through numpy SeedSequence, so any cell of a sweep is
reproducible in isolation and results are independent of execution order
or worker count.  Records are sorted by key before CSV output.
"""

from __future__ import annotations

import math
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .algorithm import (
    NonTerminationError,
    PelegConfig,
    RunResult,
    eliminate,
    ols_estimate,
    run,
)
from .env import Instance, make_setting1, make_setting2, make_setting3, summarize
from .linalg import spd_factor
from .learners import _pair_inv_quads
from .oracle import AllocationResult, d_theta_star, oracle_baseline_run

__all__ = [
    "ExperimentSpec",
    "TrialRecord",
    "SummaryRow",
    "uniform_static_run",
    "run_experiment",
    "aggregate",
    "records_to_csv",
    "summary_to_csv",
    "RECORD_HEADER",
    "SUMMARY_HEADER",
]

SETTINGS = ("standard", "sphere", "confound")
ALGORITHMS = ("peleg", "oracle_baseline", "uniform_static")

RECORD_HEADER = "setting,param,algorithm,trial,seed,tau,success,phases,wall_time_ms"
SUMMARY_HEADER = "setting,param,algorithm,mean_tau,std_tau,success_rate,n_trials"

DEFAULT_SWEEPS = {
    "standard": [0.1, 0.2, 0.3, 0.4, 0.5],
    "sphere": [10, 20],          # desk-scale cap; --full extends to 50
    "confound": [2, 4, 6, 8, 10],
}
FULL_SWEEPS = {
    "standard": [0.1, 0.2, 0.3, 0.4, 0.5],
    "sphere": [10, 20, 30, 40, 50],
    "confound": [2, 3, 4, 5, 6, 7, 8, 9, 10],
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a setting, its swept parameter values, and the protocol."""

    setting: str
    sweep: tuple
    delta: float = 0.1
    trials: int = 50
    base_seed: int = 0
    algorithms: tuple = ("peleg",)
    omega: float = 0.1           # confound setting only
    use_ball: bool = False

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.sweep:
            raise ValueError("sweep must be nonempty")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        object.__setattr__(self, "sweep", tuple(self.sweep))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))


@dataclass(frozen=True)
class TrialRecord:
    setting: str
    param: float
    algorithm: str
    trial: int
    seed: int
    tau: int
    success: int
    phases: int
    wall_time_ms: float


@dataclass(frozen=True)
class SummaryRow:
    setting: str
    param: float
    algorithm: str
    mean_tau: float
    std_tau: float
    success_rate: float
    n_trials: int


def _param_words(param) -> tuple:
    """Stable 32-bit words encoding a swept value (so seeds track the value)."""
    bits = struct.unpack(">Q", struct.pack(">d", float(param)))[0]
    return bits >> 32, bits & 0xFFFFFFFF


def trial_seed_seq(base_seed: int, param, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((base_seed, *_param_words(param), trial))


def _build_instance(setting, param, omega, inst_rng) -> Instance:
    if setting == "standard":
        return make_setting1(float(param))
    if setting == "sphere":
        return make_setting2(int(param), inst_rng)
    return make_setting3(int(param), omega)


def uniform_static_run(inst: Instance, delta: float, rng: np.random.Generator,
                       max_phases: int = 64,
                       max_rounds_per_phase: int = 10_000_000) -> RunResult:
    """Round-robin sampler with the per-phase pair certificate and elimination.

    Pulls arms 0..K-1 cyclically (deterministic order) until every active
    pair satisfies ||x - x'||^2_{V^-1} < (2^-(m+1))^2 / (8 log(K^2 m^2/delta)),
    then estimates and eliminates exactly like the game-based algorithm.
    """
    arms = inst.arms
    K, d = arms.shape
    means = inst.mean_rewards()
    active = list(range(K))
    phase_lengths = []
    m = 1
    while len(active) > 1:
        if m > max_phases:
            raise NonTerminationError(f"exceeded {max_phases} phases",
                                      {"phases_completed": len(phase_lengths)})
        delta_m = delta / m**2
        r_sq = 8.0 * math.log(K * K / delta_m)
        thr = (0.5 ** (m + 1)) ** 2 / r_sq
        act_arr = np.asarray(sorted(active), dtype=np.int64)
        noise = rng.standard_normal(K)
        V = arms.T @ arms
        b = ((means + inst.noise_std * noise) * arms.T).sum(axis=1)
        pulls = np.ones(K, dtype=np.int64)
        state = np.array([K, 0], dtype=np.int64)
        Vinv = np.linalg.solve(V, np.eye(d))
        Vinv = np.ascontiguousarray(0.5 * (Vinv + Vinv.T))
        G = np.ascontiguousarray(arms[act_arr] @ Vinv @ arms[act_arr].T)
        while True:
            _, quads = _pair_inv_quads(spd_factor(V), arms, active)
            if quads.max() < thr:
                break
            if state[0] >= max_rounds_per_phase:
                raise NonTerminationError(
                    f"phase {m} exceeded {max_rounds_per_phase} rounds",
                    {"phases_completed": len(phase_lengths), "t": int(state[0])})
            noise = rng.standard_normal(_kernels.BATCH)
            state[1] = 0
            status, _, _ = _kernels.run_static_rounds(
                arms, act_arr, means, inst.noise_std,
                V, Vinv, G, b, pulls, state, thr, noise, max_rounds_per_phase,
            )
            if status == _kernels.CAP:
                raise NonTerminationError(
                    f"phase {m} exceeded {max_rounds_per_phase} rounds",
                    {"phases_completed": len(phase_lengths), "t": int(state[0])})
            Vinv2 = np.linalg.solve(V, np.eye(d))
            Vinv = np.ascontiguousarray(0.5 * (Vinv2 + Vinv2.T))
            G = np.ascontiguousarray(arms[act_arr] @ Vinv @ arms[act_arr].T)
        theta_hat = ols_estimate(V, b)
        phase_lengths.append(int(state[0]))
        active = eliminate(active, arms, theta_hat, m)
        m += 1
    return RunResult(
        recommended=active[0], tau=sum(phase_lengths),
        phase_lengths=phase_lengths, phase_diag=[],
        meta={"algorithm": "uniform_static (this repo)"},
    )


def _run_cell_trial(args):
    spec, param, algorithm, trial, alloc = args
    ss = trial_seed_seq(spec.base_seed, param, trial)
    seed = int(ss.generate_state(1)[0])
    inst_ss, run_ss = ss.spawn(2)
    inst = _build_instance(spec.setting, param, spec.omega,
                           np.random.default_rng(inst_ss))
    rng = np.random.default_rng(run_ss)
    best = summarize(inst).best_arm
    start = time.perf_counter()
    try:
        if algorithm == "peleg":
            cfg = PelegConfig(delta=spec.delta, use_ball=spec.use_ball)
            res = run(inst, cfg, rng)
        elif algorithm == "oracle_baseline":
            res = oracle_baseline_run(inst, spec.delta, rng, alloc=alloc)
        else:
            res = uniform_static_run(inst, spec.delta, rng)
        tau, phases = res.tau, len(res.phase_lengths)
        success = int(res.recommended == best)
    except NonTerminationError as exc:
        tau = int(exc.partial.get("tau_so_far", exc.partial.get("t", 0)))
        phases = int(exc.partial.get("phases_completed", 0))
        success = 0
    wall_ms = (time.perf_counter() - start) * 1e3
    return TrialRecord(
        setting=spec.setting, param=param, algorithm=algorithm, trial=trial,
        seed=seed, tau=tau, success=success, phases=phases,
        wall_time_ms=wall_ms,
    )


def _cell_allocation(spec: ExperimentSpec, param) -> AllocationResult | None:
    """Shared oracle allocation for settings whose instance is trial-independent."""
    if spec.setting == "sphere" or "oracle_baseline" not in spec.algorithms:
        return None
    inst = _build_instance(spec.setting, param, spec.omega, None)
    return d_theta_star(inst)


def run_experiment(spec: ExperimentSpec, workers: int | None = None):
    """Run every (param, algorithm, trial) cell; failures become records."""
    if workers is None:
        workers = int(os.environ.get("PELEG_WORKERS", "1"))
    tasks = []
    for param in spec.sweep:
        alloc = _cell_allocation(spec, param)
        for algorithm in spec.algorithms:
            for trial in range(spec.trials):
                tasks.append((spec, param, algorithm, trial,
                              alloc if algorithm == "oracle_baseline" else None))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell_trial, tasks, chunksize=1))
    else:
        records = [_run_cell_trial(t) for t in tasks]
    records.sort(key=lambda r: (r.setting, r.param, r.algorithm, r.trial))
    return records


def aggregate(records):
    """Per-cell mean/std of tau (population std) and the success rate."""
    if not records:
        raise ValueError("no records to aggregate")
    cells: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        cells.setdefault((rec.setting, rec.param, rec.algorithm), []).append(rec)
    rows = []
    for (setting, param, algorithm), cell in sorted(cells.items()):
        taus = np.asarray([r.tau for r in cell], dtype=np.float64)
        rows.append(SummaryRow(
            setting=setting, param=param, algorithm=algorithm,
            mean_tau=float(taus.mean()), std_tau=float(taus.std()),
            success_rate=float(np.mean([r.success for r in cell])),
            n_trials=len(cell),
        ))
    return rows


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def records_to_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write(RECORD_HEADER + "\n")
        for r in records:
            fh.write(f"{r.setting},{_fmt(r.param)},{r.algorithm},{r.trial},"
                     f"{r.seed},{r.tau},{r.success},{r.phases},"
                     f"{r.wall_time_ms!r}\n")


def summary_to_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for r in rows:
            fh.write(f"{r.setting},{_fmt(r.param)},{r.algorithm},"
                     f"{r.mean_tau!r},{r.std_tau!r},{r.success_rate!r},"
                     f"{r.n_trials}\n")
