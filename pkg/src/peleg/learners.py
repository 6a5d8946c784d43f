"""The two no-regret players of the pure-exploration game.

The MAX player is exponential weights over the K arms (experts are the
canonical basis vectors); the MIN player is an exact best response that
minimizes a quadratic over a union of halfspaces, optionally intersected
with a Euclidean ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import spd_factor, _cho_solve

__all__ = [
    "ExpWtsLearner",
    "BestResponseSolution",
    "InfeasibleBallError",
    "best_response_unconstrained",
    "best_response_ball",
]


class InfeasibleBallError(ValueError):
    """No halfspace intersects the ball for any candidate pair."""


class ExpWtsLearner:
    """Exponential-weights learner over K experts, log-space weights.

    Losses passed to update() must lie in [-loss_bound, 0] (they are negated
    gains); out-of-range entries are clamped and counted in self.clamped.
    The default learning rate at round t is (1/loss_bound) * sqrt(8 log K / t);
    rate="doubling" instead restarts with the fixed optimal rate for horizon
    2^j in epoch j.
    """

    def __init__(self, K: int, loss_bound: float, rate: str = "sqrt-t"):
        if K < 2:
            raise ValueError("need at least two experts")
        if loss_bound <= 0:
            raise ValueError("loss_bound must be positive")
        if rate not in ("sqrt-t", "doubling"):
            raise ValueError(f"unknown rate schedule {rate!r}")
        self.K = K
        self.loss_bound = float(loss_bound)
        self.rate = rate
        self.round = 1
        self.clamped = 0
        self.log_weights = np.zeros(K)
        self._epoch_end = 1  # doubling only: first round of the next epoch

    def distribution(self) -> np.ndarray:
        """Current probability vector (softmax of the log weights)."""
        z = self.log_weights - self.log_weights.max()
        w = np.exp(z)
        return w / w.sum()

    def _eta(self) -> float:
        if self.rate == "sqrt-t":
            return np.sqrt(8.0 * np.log(self.K) / self.round) / self.loss_bound
        # doubling trick: restart weights at epoch boundaries 1, 2, 4, 8, ...
        if self.round >= self._epoch_end:
            self.log_weights = np.zeros(self.K)
            horizon = max(self._epoch_end, 1)
            self._epoch_end = 2 * horizon
            self._epoch_eta = np.sqrt(8.0 * np.log(self.K) / horizon) / self.loss_bound
        return self._epoch_eta

    def update(self, loss) -> None:
        """Apply one loss vector; smaller loss means larger weight."""
        loss = np.asarray(loss, dtype=np.float64)
        if loss.shape != (self.K,):
            raise ValueError(f"loss must have shape ({self.K},)")
        clipped = np.clip(loss, -self.loss_bound, 0.0)
        self.clamped += int(np.count_nonzero(clipped != loss))
        eta = self._eta()
        self.log_weights = self.log_weights - eta * clipped
        self.round += 1


@dataclass(frozen=True)
class BestResponseSolution:
    """Minimizer of the MIN-player subproblem.

    lam: the minimizing direction lambda.
    pair: (i, j) arm indices whose halfspace {lam @ (x_j - x_i) >= eps}
        attains the minimum.
    value: the attained squared norm ||lam||^2_W.
    """

    lam: np.ndarray
    pair: tuple[int, int]
    value: float


def _pair_inv_quads(L, arms, active):
    """For Cholesky factor L of W: ||x_j - x_i||^2_{W^-1} for active pairs.

    Returns (pairs, quads) in lexicographic (i, j), i < j order.
    """
    act = np.asarray(sorted(active), dtype=np.int64)
    Z = _cho_solve(L, arms[act].T).T  # rows: W^{-1} x_a
    pairs = []
    quads = []
    for a in range(len(act)):
        for b in range(a + 1, len(act)):
            y = arms[act[b]] - arms[act[a]]
            quads.append(float(y @ (Z[b] - Z[a])))
            pairs.append((int(act[a]), int(act[b])))
    return pairs, np.asarray(quads)


def best_response_unconstrained(W, active, arms, eps: float) -> BestResponseSolution:
    """Exact minimizer of ||lam||^2_W over the union of pair halfspaces.

    For each ordered pair of distinct active arms the constrained minimum is
    eps^2 / ||x' - x||^2_{W^-1} with minimizer eps * W^{-1}(x' - x) / ||.||^2;
    the best pair wins, ties broken by lexicographic pair order.
    """
    arms = np.asarray(arms, dtype=np.float64)
    if len(active) < 2:
        raise ValueError("need at least two active arms")
    if eps <= 0:
        raise ValueError("eps must be positive")
    L = spd_factor(W)
    pairs, quads = _pair_inv_quads(L, arms, active)
    best = int(np.argmax(quads))  # max quad <=> min eps^2/quad; first hit wins ties
    i, j = pairs[best]
    y = arms[j] - arms[i]
    lam = eps * _cho_solve(L, y) / quads[best]
    return BestResponseSolution(lam=lam, pair=(i, j), value=float(eps * eps / quads[best]))


def _ball_pair_solution(W, y, eps, D, tol=1e-10, max_iter=200):
    """Minimize ||lam||^2_W s.t. lam @ y >= eps and ||lam||_2 <= D, one pair.

    Returns (lam, value) or None when the pair is infeasible (eps/||y|| > D).
    """
    norm_y = np.linalg.norm(y)
    if eps / norm_y > D * (1 + 1e-12):
        return None
    L = spd_factor(W)
    z = _cho_solve(L, y)
    quad = float(y @ z)
    lam = eps * z / quad
    if np.linalg.norm(lam) <= D:
        return lam, float(eps * eps / quad)

    def lam_of(mu):
        z_mu = np.linalg.solve(W + mu * np.eye(W.shape[0]), y)
        return eps * z_mu / float(y @ z_mu)

    # ||lam(mu)||_2 decreases monotonically from ||lam(0)|| > D to eps/||y|| <= D
    lo, hi = 0.0, 1.0
    while np.linalg.norm(lam_of(hi)) > D:
        hi *= 4.0
        if hi > 1e18:  # boundary case eps/||y|| == D: take the limit point
            lam = eps * y / (norm_y * norm_y)
            return lam, float(lam @ W @ lam)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        lam_mid = lam_of(mid)
        r = np.linalg.norm(lam_mid) - D
        if abs(r) <= tol:
            break
        if r > 0:
            lo = mid
        else:
            hi = mid
    lam = lam_of(0.5 * (lo + hi))
    return lam, float(lam @ W @ lam)


def best_response_ball(W, active, arms, eps: float, D: float) -> BestResponseSolution:
    """Exact minimizer of ||lam||^2_W over pair halfspaces intersected with B(0, D).

    Per pair: the unconstrained halfspace minimizer if it lies in the ball,
    otherwise both constraints are active and the ball multiplier is found by
    bisection.  Pairs whose halfspace misses the ball are skipped; if every
    pair is infeasible an InfeasibleBallError is raised (the caller treats the
    minimum as +inf).
    """
    arms = np.asarray(arms, dtype=np.float64)
    if len(active) < 2:
        raise ValueError("need at least two active arms")
    if eps <= 0 or D <= 0:
        raise ValueError("eps and D must be positive")
    W = np.asarray(W, dtype=np.float64)
    best = None
    for i in sorted(active):
        for j in sorted(active):
            if i == j:
                continue
            y = arms[j] - arms[i]
            sol = _ball_pair_solution(W, y, eps, D)
            if sol is None:
                continue
            lam, value = sol
            if best is None or value < best.value:
                best = BestResponseSolution(lam=lam, pair=(i, j), value=value)
    if best is None:
        raise InfeasibleBallError(
            f"no pair halfspace intersects the ball of radius {D:.3g}"
        )
    return best
