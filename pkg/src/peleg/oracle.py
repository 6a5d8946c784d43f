"""Instance-hardness and optimal-design quantities.

The max-min hardness of an instance and the matching oracle allocation are
computed two ways: an exhaustive simplex-grid reference (small arm counts
only) and a saddle-point game between an exponential-weights allocation
player and an exact best response, mirroring the machinery the main
algorithm runs per phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algorithm import RunResult, ols_estimate
from .env import Instance, summarize
from .learners import ExpWtsLearner

__all__ = [
    "AllocationResult",
    "d_theta_star",
    "oracle_allocation",
    "b_m_value",
    "oracle_baseline_run",
    "s_m_membership",
    "s_m_set",
    "prop_f1_check",
]

GRID_STEP_SMALL = 1e-3   # K <= 3
GRID_STEP_LARGE = 2e-2   # K in {4, 5}
GRID_MAX_ARMS = 5
GRID_RIDGE = 1e-12       # keeps boundary grid points solvable; biases ~1e-12
DEFAULT_BUDGET = 50_000


@dataclass(frozen=True)
class AllocationResult:
    """Allocation over arms with the attained objective value.

    duality_gap is populated by the game solver (fixed budget, no gap-based
    stopping); grid results carry None.
    """

    w: np.ndarray
    value: float
    iterations: int
    method: str
    duality_gap: float | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("allocation must be a probability vector")
        object.__setattr__(self, "w", w)


def _simplex_grid(K, n):
    """All compositions of n into K parts, as an (N, K) array of weights."""
    comps = []
    comp = np.zeros(K, dtype=np.int64)

    def rec(pos, remaining):
        if pos == K - 1:
            comp[pos] = remaining
            comps.append(comp.copy())
            return
        for v in range(remaining + 1):
            comp[pos] = v
            rec(pos + 1, remaining - v)

    rec(0, n)
    return np.asarray(comps, dtype=np.float64) / n


def _pair_quads_at(w, arms, ys, ridge=0.0):
    """||y||^2_{W(w)^-1} for each row y of ys, at one allocation."""
    W = (w * arms.T) @ arms
    if ridge:
        W = W + ridge * np.eye(W.shape[0])
    return np.einsum("pd,pd->p", ys, np.linalg.solve(W, ys.T).T)


def _grid_minimax(arms, ys, eps, step):
    """Grid-exhaustive saddle value for max_w min_p eps_p^2 / ||y_p||^2_{W^-1}."""
    K, d = arms.shape
    n = int(round(1.0 / step))
    grid = _simplex_grid(K, n)
    outers = np.einsum("kd,ke->kde", arms, arms)
    eye = GRID_RIDGE * np.eye(d)
    best_val = -np.inf
    best_w = None
    eps_sq = eps**2
    for start in range(0, grid.shape[0], 20_000):
        wb = grid[start:start + 20_000]
        W = np.einsum("bk,kde->bde", wb, outers) + eye
        Z = np.linalg.solve(W, np.broadcast_to(ys.T, (wb.shape[0],) + ys.T.shape))
        quads = np.einsum("pd,bdp->bp", ys, Z)
        vals = np.min(eps_sq[None, :] / quads, axis=1)
        idx = int(np.argmax(vals))
        if vals[idx] > best_val:
            best_val = float(vals[idx])
            best_w = wb[idx].copy()
    return best_w, best_val, grid.shape[0]


def _game_minimax(arms, ys, eps, budget):
    """Hedge-vs-best-response saddle solver; returns averaged allocation.

    The allocation player receives gains (lambda . x_k)^2 where lambda is the
    exact minimizer for the currently worst pair.  The loss scale is
    calibrated on a uniform-allocation warmup; out-of-scale gains are clamped
    by the learner (counted, harmless to the averaged iterate).
    """
    K, d = arms.shape
    eps_sq = eps**2
    w0 = np.full(K, 1.0 / K)
    quads0 = _pair_quads_at(w0 + 1e-12, arms, ys)
    p0 = int(np.argmin(eps_sq / quads0))
    lam0 = eps[p0] * np.linalg.solve((w0 * arms.T) @ arms, ys[p0]) / quads0[p0]
    loss_bound = max(8.0 * float(np.max((arms @ lam0) ** 2)), 1e-12)

    learner = ExpWtsLearner(K, loss_bound)
    w_sum = np.zeros(K)
    gain_sum = np.zeros(K)
    for _ in range(budget):
        w = learner.distribution()
        w_sum += w
        quads = _pair_quads_at(w + 1e-12, arms, ys)
        vals = eps_sq / quads
        p = int(np.argmin(vals))
        W = ((w + 1e-12) * arms.T) @ arms
        lam = eps[p] * np.linalg.solve(W, ys[p]) / quads[p]
        gains = (arms @ lam) ** 2
        gain_sum += gains
        learner.update(-gains)
    w_bar = w_sum / budget
    value = float(np.min(eps_sq / _pair_quads_at(w_bar, arms, ys)))
    upper = float(np.max(gain_sum / budget))
    return w_bar, value, max(upper - value, 0.0)


def _resolve_method(method, K):
    if method == "auto":
        return "grid" if K <= 3 else "game-solver"
    if method in ("grid", "game-solver"):
        return method
    raise ValueError(f"unknown method {method!r}")


def _grid_step_for(K):
    if K > GRID_MAX_ARMS:
        raise ValueError(f"grid reference restricted to K <= {GRID_MAX_ARMS}")
    return GRID_STEP_SMALL if K <= 3 else GRID_STEP_LARGE


def d_theta_star(inst: Instance, method: str = "auto",
                 budget: int = DEFAULT_BUDGET) -> AllocationResult:
    """Hardness max over allocations of the worst gap-to-uncertainty ratio."""
    summary = summarize(inst)
    arms = inst.arms
    K = inst.n_arms
    others = [k for k in range(K) if k != summary.best_arm]
    ys = arms[summary.best_arm] - arms[others]
    eps = summary.gaps[others]
    method = _resolve_method(method, K)
    if method == "grid":
        w, value, its = _grid_minimax(arms, ys, eps, _grid_step_for(K))
        return AllocationResult(w=w, value=value, iterations=its, method="grid")
    w, value, gap = _game_minimax(arms, ys, eps, budget)
    return AllocationResult(w=w, value=value, iterations=budget,
                            method="game-solver", duality_gap=gap)


def oracle_allocation(inst: Instance, method: str = "auto",
                      budget: int = DEFAULT_BUDGET) -> AllocationResult:
    """Minimizing allocation of the reciprocal objective (same saddle point)."""
    res = d_theta_star(inst, method=method, budget=budget)
    return AllocationResult(w=res.w, value=1.0 / res.value,
                            iterations=res.iterations, method=res.method,
                            duality_gap=res.duality_gap)


def b_m_value(active, arms, method: str = "auto",
              budget: int = DEFAULT_BUDGET) -> AllocationResult:
    """Transductive design value: min over w of the max pair uncertainty."""
    if len(active) < 2:
        raise ValueError("need at least two active arms")
    arms = np.asarray(arms, dtype=np.float64)
    K = arms.shape[0]
    act = sorted(active)
    ys = np.asarray([arms[j] - arms[i]
                     for ai, i in enumerate(act) for j in act[ai + 1:]])
    eps = np.ones(ys.shape[0])
    method = _resolve_method(method, K)
    if method == "grid":
        w, value, its = _grid_minimax(arms, ys, eps, _grid_step_for(K))
        return AllocationResult(w=w, value=1.0 / value, iterations=its,
                                method="grid")
    w, value, gap = _game_minimax(arms, ys, eps, budget)
    b_at_w = 1.0 / value
    b_lower = 1.0 / (value + gap) if value + gap > 0 else 0.0
    return AllocationResult(w=w, value=b_at_w, iterations=budget,
                            method="game-solver",
                            duality_gap=max(b_at_w - b_lower, 0.0))


def oracle_baseline_run(inst: Instance, delta: float, rng: np.random.Generator,
                        alloc: AllocationResult | None = None) -> RunResult:
    """Non-adaptive baseline: sample the oracle allocation, then pick the OLS max.

    Pull counts are 2*floor(w_k N) + 1 with N = ceil(log(K/delta)/hardness);
    the +1 keeps zero-mass arms from leaving the design matrix singular and
    is recorded in the result metadata.
    """
    if alloc is None:
        alloc = d_theta_star(inst)
    arms = inst.arms
    K = inst.n_arms
    N = math.ceil(math.log(K / delta) / alloc.value)
    counts = 2 * np.floor(alloc.w * N).astype(np.int64) + 1
    tau = int(counts.sum())
    means = inst.mean_rewards()
    V = (counts * arms.T) @ arms
    b = np.zeros(inst.dim)
    for k in range(K):
        noise_sum = float(rng.standard_normal(counts[k]).sum())
        b += (counts[k] * means[k] + inst.noise_std * noise_sum) * arms[k]
    theta_hat = ols_estimate(V, b)
    recommended = int(np.argmax(arms @ theta_hat))
    return RunResult(
        recommended=recommended, tau=tau, phase_lengths=[tau], phase_diag=[],
        meta={"algorithm": "oracle_baseline", "N": N,
              "pull_rule": "2*floor(w*N)+1", "hardness": alloc.value,
              "alloc_method": alloc.method},
    )


def s_m_set(inst: Instance, m: int):
    """Arms whose gap is below 2^-m (the best arm always qualifies)."""
    summary = summarize(inst)
    return [k for k in range(inst.n_arms) if summary.gaps[k] < 0.5**m]


def s_m_membership(inst: Instance, active, m: int) -> bool:
    """Ground-truth check: active set within the 2^-m gap shell, best arm kept."""
    summary = summarize(inst)
    if summary.best_arm not in active:
        return False
    return all(summary.gaps[k] < 0.5**m for k in active)


def prop_f1_check(inst: Instance, n_phases: int, method: str = "auto",
                  budget: int = DEFAULT_BUDGET):
    """Aggregate design bound: (sum_m 4^m B_m*, 4 log2(1/gap_min)/hardness).

    B_m* is the design value over the ground-truth gap shell; shells with
    fewer than two arms contribute zero.
    """
    summary = summarize(inst)
    lhs = 0.0
    for m in range(1, n_phases + 1):
        shell = s_m_set(inst, m)
        if len(shell) < 2:
            continue
        lhs += 4.0**m * b_m_value(shell, inst.arms, method=method,
                                  budget=budget).value
    hardness = d_theta_star(inst, method=method, budget=budget).value
    rhs = 4.0 * math.log2(1.0 / summary.delta_min) / hardness
    return lhs, rhs
