"""Phased-elimination exploration game: the full phase loop.

A run proceeds in phases.  Each phase burns in by playing every arm once,
then repeats {stop check; MAX-player distribution; MIN-player best response;
gains; weight update; tracking; pull; design update} until the stop
criterion certifies every surviving pair difference, computes the
least-squares estimate from all phase samples, and eliminates arms whose
estimated deficit exceeds 2^-(m+2).

Two interchangeable engines drive the inner loop: a compiled kernel (the
default; the ball constraint dropped from the stop criterion makes the
criterion closed-form) and a pure-python engine composed from the public
learner/linalg operations, which also supports the ball-constrained
variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .env import Instance
from .learners import (
    ExpWtsLearner,
    InfeasibleBallError,
    _pair_inv_quads,
    best_response_ball,
    best_response_unconstrained,
)
from .linalg import SingularMatrixError, min_eigenvalue, spd_factor, spd_solve, _cho_solve

__all__ = [
    "PelegConfig",
    "PhaseParams",
    "PhaseState",
    "PhaseDiag",
    "RunResult",
    "NonTerminationError",
    "phase_params",
    "stop_check",
    "track_select",
    "ols_estimate",
    "eliminate",
    "run",
]

TRACE_HEADER = "phase,t,arm,margin"

# numerical floor added to the MAX-player weights when assembling the
# weighted design matrix, so it stays positive definite even after the
# distribution has collapsed onto a few arms
WEIGHT_FLOOR = 1e-12


class NonTerminationError(RuntimeError):
    """A safety cap fired; .partial carries the diagnostics so far."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial or {}


@dataclass(frozen=True)
class PelegConfig:
    """Run configuration.

    use_ball=False drops the ball from the stop criterion (the variant the
    benchmarks use; the criterion then has a closed form).  The burn-in
    plays every arm of the full set each phase; burnin_active_only restricts
    it to the surviving arms instead.
    """

    delta: float = 0.1
    use_ball: bool = False
    max_phases: int = 64
    max_rounds_per_phase: int = 10_000_000
    burnin_active_only: bool = False

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class PhaseParams:
    """Per-phase constants; branch records which side of the min set eps_m."""

    delta_m: float
    D_m: float
    eps_m: float
    r_sq: float
    branch: str  # "unit" when eps_m = 2^-(m+1), else "shrunk"


@dataclass
class PhaseState:
    """Mutable within-phase state (python engine and introspection)."""

    m: int
    active: list
    arms: np.ndarray
    delta_m: float
    D_m: float
    eps_m: float
    r_sq: float
    V: np.ndarray
    b: np.ndarray
    pulls: np.ndarray
    cum_w: np.ndarray
    t: int


@dataclass(frozen=True)
class PhaseDiag:
    """Per-phase record kept in RunResult."""

    m: int
    n_rounds: int
    delta_m: float
    D_m: float
    eps_m: float
    r_sq: float
    eps_branch: str
    max_pair_inv_quad: float  # exact value at phase end
    clamped_losses: int
    active_before: tuple
    active_after: tuple
    theta_hat: tuple


@dataclass
class RunResult:
    recommended: int
    tau: int
    phase_lengths: list
    phase_diag: list
    success: bool | None = None
    meta: dict = field(default_factory=dict)


def phase_params(m: int, active, arms, delta: float, C: float) -> PhaseParams:
    """Phase constants: confidence share, ball radius, gap width, ellipsoid radius."""
    if len(active) < 2:
        raise ValueError("need at least two active arms")
    if C <= 0:
        raise ValueError("C must be positive")
    arms = np.asarray(arms, dtype=np.float64)
    K = arms.shape[0]
    act = arms[np.asarray(sorted(active))]
    diffs = act[:, None, :] - act[None, :, :]
    maxdist_sq = float(np.max(np.einsum("ijk,ijk->ij", diffs, diffs)))
    delta_m = delta / m**2
    D_m = 2.0 * (math.sqrt(2.0) - 1.0) * math.sqrt(C / (maxdist_sq * math.log(K)))
    r_sq = 8.0 * math.log(K * K / delta_m)
    ratio = D_m * math.sqrt(C) / math.sqrt(r_sq)
    branch = "unit" if ratio >= 1.0 else "shrunk"
    eps_m = min(1.0, ratio) * 0.5 ** (m + 1)
    return PhaseParams(delta_m=delta_m, D_m=D_m, eps_m=eps_m, r_sq=r_sq, branch=branch)


def _max_pair_inv_quad(V, active, arms):
    """Exact max over active pairs of ||x - x'||^2_{V^-1}; +inf if V singular."""
    try:
        L = spd_factor(V)
    except SingularMatrixError:
        return math.inf
    _, quads = _pair_inv_quads(L, arms, active)
    return float(quads.max())


def _stop_eval(V, active, arms, eps_m, r_sq, D_m, use_ball):
    """(stop, exact max pair inv quad) for the phase stopping criterion."""
    maxq = _max_pair_inv_quad(V, active, arms)
    if not use_ball:
        return maxq < eps_m * eps_m / r_sq, maxq
    if not math.isfinite(maxq):
        return False, maxq
    try:
        sol = best_response_ball(V, active, arms, eps_m, D_m)
    except InfeasibleBallError:
        return True, maxq
    return sol.value > r_sq, maxq


def stop_check(state: PhaseState, cfg: PelegConfig) -> bool:
    """Phase stopping criterion on the current design matrix."""
    stop, _ = _stop_eval(
        state.V, state.active, state.arms, state.eps_m, state.r_sq, state.D_m,
        cfg.use_ball,
    )
    return stop


def track_select(pulls, cum_w) -> int:
    """Arm furthest behind its cumulative weight; ties to the lowest index."""
    pulls = np.asarray(pulls, dtype=np.float64)
    cum_w = np.asarray(cum_w, dtype=np.float64)
    if np.any(cum_w <= 0):
        raise ValueError("cumulative weights must be positive")
    return int(np.argmin(pulls / cum_w))


def ols_estimate(V, b) -> np.ndarray:
    """Least-squares estimate V^{-1} b."""
    return spd_solve(V, b)


def eliminate(active, arms, theta_hat, m: int):
    """Drop every arm some other active arm beats by more than 2^-(m+2)."""
    if len(active) < 2:
        raise ValueError("need at least two active arms")
    act = sorted(active)
    arms = np.asarray(arms, dtype=np.float64)
    rewards = arms[act] @ np.asarray(theta_hat, dtype=np.float64)
    thr = 0.5 ** (m + 2)
    best = float(rewards.max())
    return [a for a, r in zip(act, rewards) if best - r <= thr]


def _rebuild_inverse_state(V, act_arr, arms):
    """Exact V^{-1} and active-pair Gram X_a V^{-1} X_a^T from scratch."""
    L = spd_factor(V)
    Vinv = _cho_solve(L, np.eye(V.shape[0]))
    Vinv = 0.5 * (Vinv + Vinv.T)
    Xa = arms[act_arr]
    G = Xa @ Vinv @ Xa.T
    return np.ascontiguousarray(Vinv), np.ascontiguousarray(G)


def _check_tracking(pulls, cum_w, K):
    if np.any(pulls > cum_w + 1.0 + 1e-9) or np.any(pulls < cum_w - (K - 1) - 1e-9):
        raise RuntimeError("tracking invariant violated")


class _TraceWriter:
    def __init__(self, path):
        self._fh = open(path, "w")
        self._fh.write(TRACE_HEADER + "\n")

    def rows(self, m, rows):
        for t, arm, margin in rows:
            self._fh.write(f"{m},{int(t)},{int(arm)},{margin!r}\n")

    def close(self):
        self._fh.close()


def _burn_in(inst: Instance, active, cfg: PelegConfig, rng, tracer, m):
    arms = inst.arms
    K, d = arms.shape
    burn = sorted(active) if cfg.burnin_active_only else list(range(K))
    noise = rng.standard_normal(len(burn))
    means = inst.mean_rewards()
    V = np.zeros((d, d))
    b = np.zeros(d)
    pulls = np.zeros(K, dtype=np.int64)
    cum_w = np.zeros(K)
    rows = []
    for i, k in enumerate(burn):
        y = means[k] + inst.noise_std * noise[i]
        V += np.outer(arms[k], arms[k])
        b += y * arms[k]
        pulls[k] += 1
        cum_w[k] += 1.0
        rows.append((i + 1, k, math.nan))
    if tracer is not None:
        tracer.rows(m, rows)
    return V, b, pulls, cum_w, len(burn)


def _game_round(inst, means, active, pp, cfg, learner, V, b, pulls, cum_w,
                noise_val):
    """One post-burn-in round of the exploration game (python path).

    Mutates b, pulls, cum_w and the learner; returns the updated V and the
    arm played.
    """
    arms = inst.arms
    w = learner.distribution()
    cum_w += w
    Wt = ((w + WEIGHT_FLOOR) * arms.T) @ arms
    if cfg.use_ball:
        sol = best_response_ball(Wt, active, arms, pp.eps_m, pp.D_m)
    else:
        sol = best_response_unconstrained(Wt, active, arms, pp.eps_m)
    gains = (arms @ sol.lam) ** 2
    learner.update(-gains)
    kt = track_select(pulls, cum_w)
    y = means[kt] + inst.noise_std * noise_val
    pulls[kt] += 1
    b += y * arms[kt]
    return V + np.outer(arms[kt], arms[kt]), kt


def _phase_numba(inst, active, pp, cfg, rng, tracer, m, partial):
    arms = inst.arms
    K = inst.n_arms
    means = inst.mean_rewards()
    act_arr = np.asarray(sorted(active), dtype=np.int64)
    V, b, pulls, cum_w, t = _burn_in(inst, active, cfg, rng, tracer, m)
    log_w = np.zeros(K)
    state = np.array([t, 1, 0, 0], dtype=np.int64)
    thr = pp.eps_m**2 / pp.r_sq
    loss_bound = pp.D_m**2
    log_K = math.log(K)
    clamped_pre = 0
    Vinv = G = None
    since_refresh = _kernels.REFRESH_ROUNDS  # force initial build
    while True:
        stop, maxq = _stop_eval(V, active, arms, pp.eps_m, pp.r_sq, pp.D_m, False)
        if stop:
            break
        if state[0] >= cfg.max_rounds_per_phase:
            raise NonTerminationError(
                f"phase {m} exceeded {cfg.max_rounds_per_phase} rounds", partial
            )
        noise = rng.standard_normal(_kernels.BATCH)
        noise_used = 0
        try:
            if since_refresh >= _kernels.REFRESH_ROUNDS:
                Vinv, G = _rebuild_inverse_state(V, act_arr, arms)
                since_refresh = 0
        except SingularMatrixError:
            # active-only burn-in can leave V rank-deficient; tracking fills
            # the unplayed arms within a few rounds, so step in python until
            # the design matrix becomes invertible
            learner = ExpWtsLearner(K, loss_bound)
            learner.log_weights = log_w.copy()
            learner.round = int(state[1])
            while noise_used < noise.shape[0]:
                V, kt = _game_round(inst, means, active, pp, cfg, learner,
                                    V, b, pulls, cum_w, noise[noise_used])
                noise_used += 1
                state[0] += 1
                if tracer is not None:
                    tracer.rows(m, [(int(state[0]), kt, math.nan)])
                try:
                    Vinv, G = _rebuild_inverse_state(V, act_arr, arms)
                    break
                except SingularMatrixError:
                    continue
            else:
                raise NonTerminationError(
                    f"phase {m}: design matrix still singular after "
                    f"{noise.shape[0]} rounds", partial
                )
            log_w = learner.log_weights.copy()
            state[1] = learner.round
            clamped_pre += learner.clamped
            since_refresh = 0
        state[2] = noise_used
        trace_buf = np.empty((noise.shape[0] if tracer else 0, 3))
        status, rounds, _ = _kernels.run_phase_rounds(
            arms, act_arr, means, inst.noise_std,
            V, Vinv, G, b, pulls, cum_w, log_w, state,
            pp.eps_m, loss_bound, thr, log_K,
            noise, cfg.max_rounds_per_phase, trace_buf,
        )
        since_refresh += rounds
        if tracer is not None and rounds:
            tracer.rows(m, trace_buf[:rounds])
        _check_tracking(pulls, cum_w, K)
        if status == _kernels.CAP:
            raise NonTerminationError(
                f"phase {m} exceeded {cfg.max_rounds_per_phase} rounds", partial
            )
        if status == _kernels.STOP:
            # re-verified exactly at the top of the loop; rank-one drift in
            # the maintained inverse must never decide the phase
            Vinv, G = _rebuild_inverse_state(V, act_arr, arms)
            since_refresh = 0
    return int(state[0]), maxq, int(state[3]) + clamped_pre, V, b, pulls, cum_w


def _phase_python(inst, active, pp, cfg, rng, tracer, m, partial):
    arms = inst.arms
    K = inst.n_arms
    means = inst.mean_rewards()
    V, b, pulls, cum_w, t = _burn_in(inst, active, cfg, rng, tracer, m)
    learner = ExpWtsLearner(K, pp.D_m**2)
    thr = pp.eps_m**2 / pp.r_sq
    noise = np.empty(0)
    noise_i = 0
    while True:
        stop, maxq = _stop_eval(
            V, active, arms, pp.eps_m, pp.r_sq, pp.D_m, cfg.use_ball
        )
        if stop:
            break
        if t >= cfg.max_rounds_per_phase:
            raise NonTerminationError(
                f"phase {m} exceeded {cfg.max_rounds_per_phase} rounds", partial
            )
        if noise_i >= noise.shape[0]:
            noise = rng.standard_normal(_kernels.BATCH)
            noise_i = 0
        t += 1
        V, kt = _game_round(inst, means, active, pp, cfg, learner,
                            V, b, pulls, cum_w, noise[noise_i])
        noise_i += 1
        if tracer is not None:
            tracer.rows(m, [(t, kt, thr - maxq)])
        _check_tracking(pulls, cum_w, K)
    return t, maxq, learner.clamped, V, b, pulls, cum_w


def run(inst: Instance, cfg: PelegConfig, rng: np.random.Generator,
        trace_path=None, engine: str = "auto") -> RunResult:
    """Run the full phased elimination game and return the surviving arm.

    engine: "numba" (compiled inner loop, stop criterion in closed form),
    "python" (public-operation composition; required when cfg.use_ball), or
    "auto" to pick based on the config.
    """
    if engine == "auto":
        engine = "python" if cfg.use_ball else "numba"
    if engine not in ("numba", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if cfg.use_ball and engine != "python":
        raise ValueError("use_ball requires the python engine")
    phase_fn = _phase_python if engine == "python" else _phase_numba

    arms = inst.arms
    C = min_eigenvalue(arms.T @ arms)
    active = list(range(inst.n_arms))
    phase_lengths: list[int] = []
    diags: list[PhaseDiag] = []
    tracer = _TraceWriter(trace_path) if trace_path else None
    m = 1
    try:
        while len(active) > 1:
            partial = {
                "phases_completed": len(phase_lengths),
                "tau_so_far": sum(phase_lengths),
                "active": tuple(active),
                "phase": m,
            }
            if m > cfg.max_phases:
                raise NonTerminationError(
                    f"exceeded {cfg.max_phases} phases", partial
                )
            pp = phase_params(m, active, arms, cfg.delta, C)
            n_m, maxq, clamped, V, b, pulls, cum_w = phase_fn(
                inst, active, pp, cfg, rng, tracer, m, partial
            )
            theta_hat = ols_estimate(V, b)
            new_active = eliminate(active, arms, theta_hat, m)
            diags.append(PhaseDiag(
                m=m, n_rounds=n_m, delta_m=pp.delta_m, D_m=pp.D_m,
                eps_m=pp.eps_m, r_sq=pp.r_sq, eps_branch=pp.branch,
                max_pair_inv_quad=maxq, clamped_losses=clamped,
                active_before=tuple(active), active_after=tuple(new_active),
                theta_hat=tuple(float(v) for v in theta_hat),
            ))
            phase_lengths.append(n_m)
            active = new_active
            m += 1
    finally:
        if tracer is not None:
            tracer.close()
    return RunResult(
        recommended=active[0],
        tau=sum(phase_lengths),
        phase_lengths=phase_lengths,
        phase_diag=diags,
        meta={"engine": engine, "use_ball": cfg.use_ball},
    )
