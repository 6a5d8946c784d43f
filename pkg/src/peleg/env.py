"""Simulated linear-bandit environment and the three benchmark arm sets."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import min_eigenvalue

__all__ = [
    "DegenerateInstanceError",
    "Instance",
    "InstanceSummary",
    "pull",
    "summarize",
    "make_setting1",
    "make_setting2",
    "make_setting3",
    "instance_to_json",
    "instance_from_json",
]

ARM_NORM_TOL = 1e-9


class DegenerateInstanceError(ValueError):
    """The instance violates the unique-best-arm requirement."""


@dataclass(frozen=True)
class Instance:
    """Ground truth the simulator knows and the algorithm does not.

    arms: (K, d) feature matrix, rows are arms with 2-norm <= 1.
    theta_star: (d,) hidden parameter; argmax_k theta_star @ arms[k] unique.
    noise_std: Gaussian reward-noise standard deviation.
    """

    arms: np.ndarray
    theta_star: np.ndarray
    noise_std: float = 1.0

    def __post_init__(self):
        arms = np.asarray(self.arms, dtype=np.float64)
        theta = np.asarray(self.theta_star, dtype=np.float64)
        if arms.ndim != 2:
            raise ValueError("arms must be a (K, d) matrix")
        K, d = arms.shape
        if K < 2 or d < 1:
            raise ValueError(f"need K >= 2 and d >= 1, got K={K}, d={d}")
        if theta.shape != (d,):
            raise ValueError("theta_star dimension does not match arms")
        if not (np.all(np.isfinite(arms)) and np.all(np.isfinite(theta))):
            raise ValueError("arms and theta_star must be finite")
        norms = np.linalg.norm(arms, axis=1)
        if np.any(norms > 1.0 + ARM_NORM_TOL):
            raise ValueError(f"arm 2-norms must be <= 1, max is {norms.max():.6g}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        rewards = arms @ theta
        order = np.argsort(rewards)[::-1]
        if rewards[order[0]] <= rewards[order[1]]:
            raise DegenerateInstanceError("best arm is not unique")
        arms.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "theta_star", theta)

    @property
    def n_arms(self) -> int:
        return self.arms.shape[0]

    @property
    def dim(self) -> int:
        return self.arms.shape[1]

    def mean_rewards(self) -> np.ndarray:
        return self.arms @ self.theta_star


@dataclass(frozen=True)
class InstanceSummary:
    """Exact gap structure of an instance (0-based best arm index)."""

    best_arm: int
    gaps: np.ndarray
    delta_min: float
    C: float  # smallest eigenvalue of sum_k x_k x_k^T


def pull(inst: Instance, k: int, rng: np.random.Generator) -> float:
    """Sample one reward of arm k: theta_star @ x_k plus Gaussian noise."""
    if not 0 <= k < inst.n_arms:
        raise IndexError(f"arm index {k} out of range [0, {inst.n_arms})")
    mean = float(inst.arms[k] @ inst.theta_star)
    return mean + rng.normal(0.0, inst.noise_std)


def summarize(inst: Instance) -> InstanceSummary:
    """Compute best arm, gaps, minimum gap and the arm-geometry constant C."""
    rewards = inst.mean_rewards()
    best = int(np.argmax(rewards))
    gaps = rewards[best] - rewards
    positive = gaps[gaps > 0]
    if positive.size != inst.n_arms - 1:
        raise DegenerateInstanceError("best arm is not unique")
    gram = inst.arms.T @ inst.arms
    return InstanceSummary(
        best_arm=best,
        gaps=gaps,
        delta_min=float(positive.min()),
        C=min_eigenvalue(gram),
    )


def make_setting1(Delta: float) -> Instance:
    """Standard 5-armed basis bandit with the first coordinate carrying the gap."""
    if Delta <= 0:
        raise ValueError("Delta must be positive")
    d = 5
    theta = np.zeros(d)
    theta[0] = Delta
    return Instance(arms=np.eye(d), theta_star=theta)


def make_setting2(d: int, rng: np.random.Generator, n_arms: int = 100,
                  gamma: float = 0.01, max_retries: int = 100) -> Instance:
    """Unit-sphere arm set; the hidden parameter sits just off the closest pair.

    Draws n_arms uniform points on S^{d-1}, finds the pair (u, v) with the
    largest inner product and sets theta_star = u + gamma (v - u), which makes
    u the best arm.  Regenerates the whole sample (up to max_retries) if the
    closest pair or the best arm is not unique.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    for _ in range(max_retries):
        pts = rng.standard_normal((n_arms, d))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        dots = pts @ pts.T
        np.fill_diagonal(dots, -np.inf)
        flat = np.argmax(dots)
        i, j = divmod(flat, n_arms)
        c = dots[i, j]
        # require a strictly unique closest pair
        dots[i, j] = dots[j, i] = -np.inf
        if np.max(dots) >= c:
            continue
        u, v = min(i, j), max(i, j)
        theta = pts[u] + gamma * (pts[v] - pts[u])
        try:
            inst = Instance(arms=pts, theta_star=theta)
        except DegenerateInstanceError:
            continue
        if int(np.argmax(inst.mean_rewards())) != u:
            continue
        return inst
    raise DegenerateInstanceError(
        f"failed to draw a non-degenerate sphere instance in {max_retries} tries"
    )


def make_setting3(d: int, omega: float) -> Instance:
    """Basis arms plus a confounding arm at angle omega from the best arm."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0 < omega < np.pi / 2:
        raise ValueError("omega must lie in (0, pi/2)")
    arms = np.vstack([np.eye(d), np.zeros(d)])
    arms[d, 0] = np.cos(omega)
    arms[d, 1] = np.sin(omega)
    theta = np.zeros(d)
    theta[0] = 1.0
    return Instance(arms=arms, theta_star=theta)


def instance_to_json(inst: Instance) -> str:
    """Serialize to the {"arms", "theta_star", "noise_std"} JSON document."""
    return json.dumps({
        "arms": inst.arms.tolist(),
        "theta_star": inst.theta_star.tolist(),
        "noise_std": inst.noise_std,
    })


def instance_from_json(doc: str) -> Instance:
    data = json.loads(doc)
    return Instance(
        arms=np.asarray(data["arms"], dtype=np.float64),
        theta_star=np.asarray(data["theta_star"], dtype=np.float64),
        noise_std=float(data.get("noise_std", 1.0)),
    )
