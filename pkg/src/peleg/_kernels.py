"""Compiled inner loops for the phase game and the round-robin baseline.

The per-round work is tiny dense algebra (d, K <= ~100), so everything is
hand-rolled loops under numba: BLAS/LAPACK call overhead would dominate at
these sizes.  The design-matrix inverse and the active-pair Gram matrix
G = X_a V^{-1} X_a^T are maintained by Sherman-Morrison rank-one updates;
callers periodically rebuild both from V exactly and re-verify any stop
decision against an exact solve, so accumulated drift never decides a phase.

Status codes returned by the round loops:
    0 stop criterion fired, 1 noise buffer exhausted, 2 round cap reached.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STOP = 0
NEED_NOISE = 1
CAP = 2

BATCH = 8192
REFRESH_ROUNDS = 65536  # rebuild Vinv/G from V at least this often


@njit(cache=True, inline="always")
def _cholesky(A, L):
    """Lower Cholesky of A into L; returns False if a pivot is non-positive."""
    d = A.shape[0]
    for i in range(d):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return True


@njit(cache=True, inline="always")
def _chol_solve_into(L, rhs, out):
    """Solve (L L^T) out = rhs for one right-hand side."""
    d = L.shape[0]
    for i in range(d):
        s = rhs[i]
        for k in range(i):
            s -= L[i, k] * out[k]
        out[i] = s / L[i, i]
    for i in range(d - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, d):
            s -= L[k, i] * out[k]
        out[i] = s / L[i, i]


@njit(cache=True)
def _max_pair_quad(G):
    """Max over i<j of G_ii + G_jj - 2 G_ij, with the attaining pair."""
    n = G.shape[0]
    best = -1.0
    bi = 0
    bj = 1
    for i in range(n):
        for j in range(i + 1, n):
            q = G[i, i] + G[j, j] - 2.0 * G[i, j]
            if q > best:
                best = q
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def run_phase_rounds(
    arms,        # (K, d)
    act,         # (Ka,) active arm indices, sorted
    means,       # (K,) true mean rewards
    noise_std,
    V,           # (d, d) exact design matrix, mutated
    Vinv,        # (d, d) maintained inverse, mutated
    G,           # (Ka, Ka) active-pair Gram under Vinv, mutated
    b,           # (d,) response accumulator, mutated
    pulls,       # (K,) int64, mutated
    cum_w,       # (K,) cumulative MAX-player weights, mutated
    log_w,       # (K,) EXP-WTS log weights, mutated
    state,       # (4,) int64: t, exp_wts_round, noise_used, clamped; mutated
    eps,
    loss_bound,
    stop_thr,    # eps^2 / r_m^2
    log_K,
    noise,       # (B,) pre-drawn standard normals
    max_t,       # phase-length safety cap
    trace,       # (B, 3) per-round rows [t, arm, margin]; (0, 3) disables
):
    K, d = arms.shape
    Ka = act.shape[0]
    tracing = trace.shape[0] > 0
    w = np.empty(K)
    W = np.empty((d, d))
    LW = np.empty((d, d))
    Z = np.empty((Ka, d))
    zdiff = np.empty(d)
    u = np.empty(d)
    h = np.empty(Ka)
    rounds = 0
    while True:
        maxq, _, _ = _max_pair_quad(G)
        if maxq < stop_thr:
            return STOP, rounds, maxq
        if state[0] >= max_t:
            return CAP, rounds, maxq
        if state[2] >= noise.shape[0]:
            return NEED_NOISE, rounds, maxq
        state[0] += 1

        # MAX player distribution (softmax of log weights)
        mx = log_w[0]
        for k in range(1, K):
            if log_w[k] > mx:
                mx = log_w[k]
        tot = 0.0
        for k in range(K):
            w[k] = np.exp(log_w[k] - mx)
            tot += w[k]
        for k in range(K):
            w[k] /= tot
            cum_w[k] += w[k]

        # weighted design matrix; tiny floor keeps W positive definite when
        # the distribution has numerically collapsed onto few arms
        for a in range(d):
            for c in range(a + 1):
                s = 0.0
                for k in range(K):
                    s += (w[k] + 1e-12) * arms[k, a] * arms[k, c]
                W[a, c] = s
                W[c, a] = s
        if not _cholesky(W, LW):
            return CAP, rounds, maxq  # unreachable when arms span R^d

        # MIN player best response over active pairs (ball ignored)
        for a in range(Ka):
            _chol_solve_into(LW, arms[act[a]], Z[a])
        bestq = -1.0
        bi = 0
        bj = 1
        for i in range(Ka):
            for j in range(i + 1, Ka):
                q = 0.0
                for c in range(d):
                    q += (arms[act[j], c] - arms[act[i], c]) * (Z[j, c] - Z[i, c])
                if q > bestq:
                    bestq = q
                    bi = i
                    bj = j
        for c in range(d):
            zdiff[c] = Z[bj, c] - Z[bi, c]
        scale = eps / bestq

        # gains (lambda . x_k)^2 for every arm, clamped to the loss bound
        eta = np.sqrt(8.0 * log_K / state[1]) / loss_bound
        state[1] += 1
        for k in range(K):
            g = 0.0
            for c in range(d):
                g += arms[k, c] * zdiff[c]
            g = (scale * g) ** 2
            if g > loss_bound:
                g = loss_bound
                state[3] += 1
            log_w[k] += eta * g

        # tracking: play the arm furthest behind its cumulative weight
        kt = 0
        bratio = pulls[0] / cum_w[0]
        for k in range(1, K):
            r = pulls[k] / cum_w[k]
            if r < bratio:
                bratio = r
                kt = k
        y = means[kt] + noise_std * noise[state[2]]
        state[2] += 1
        pulls[kt] += 1
        for c in range(d):
            b[c] += y * arms[kt, c]

        # Sherman-Morrison update of Vinv and the pair Gram, exact update of V
        alpha = 0.0
        for a in range(d):
            s = 0.0
            for c in range(d):
                s += Vinv[a, c] * arms[kt, c]
            u[a] = s
        for a in range(d):
            alpha += arms[kt, a] * u[a]
        coef = 1.0 / (1.0 + alpha)
        for a in range(d):
            for c in range(d):
                Vinv[a, c] -= coef * u[a] * u[c]
                V[a, c] += arms[kt, a] * arms[kt, c]
        for a in range(Ka):
            s = 0.0
            for c in range(d):
                s += arms[act[a], c] * u[c]
            h[a] = s
        for a in range(Ka):
            for c in range(Ka):
                G[a, c] -= coef * h[a] * h[c]

        if tracing:
            trace[rounds, 0] = state[0]
            trace[rounds, 1] = kt
            trace[rounds, 2] = stop_thr - maxq
        rounds += 1


@njit(cache=True)
def run_static_rounds(
    arms, act, means, noise_std,
    V, Vinv, G, b, pulls,
    state,       # (2,) int64: t, noise_used; mutated
    stop_thr,
    noise, max_t,
):
    """Round-robin sampler with the same maintained stop certificate."""
    K, d = arms.shape
    Ka = act.shape[0]
    u = np.empty(d)
    h = np.empty(Ka)
    rounds = 0
    while True:
        maxq, _, _ = _max_pair_quad(G)
        if maxq < stop_thr:
            return STOP, rounds, maxq
        if state[0] >= max_t:
            return CAP, rounds, maxq
        if state[1] >= noise.shape[0]:
            return NEED_NOISE, rounds, maxq
        kt = state[0] % K
        state[0] += 1
        y = means[kt] + noise_std * noise[state[1]]
        state[1] += 1
        pulls[kt] += 1
        for c in range(d):
            b[c] += y * arms[kt, c]
        alpha = 0.0
        for a in range(d):
            s = 0.0
            for c in range(d):
                s += Vinv[a, c] * arms[kt, c]
            u[a] = s
        for a in range(d):
            alpha += arms[kt, a] * u[a]
        coef = 1.0 / (1.0 + alpha)
        for a in range(d):
            for c in range(d):
                Vinv[a, c] -= coef * u[a] * u[c]
                V[a, c] += arms[kt, a] * arms[kt, c]
        for a in range(Ka):
            s = 0.0
            for c in range(d):
                s += arms[act[a], c] * u[c]
            h[a] = s
        for a in range(Ka):
            for c in range(Ka):
                G[a, c] -= coef * h[a] * h[c]
        rounds += 1
