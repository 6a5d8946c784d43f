"""Command-line harness: single runs, sweeps, oracle quantities, selftest."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .algorithm import PelegConfig, run
from .env import make_setting1, make_setting2, make_setting3, summarize
from .experiments import (
    DEFAULT_SWEEPS,
    FULL_SWEEPS,
    ExperimentSpec,
    aggregate,
    records_to_csv,
    run_experiment,
    summary_to_csv,
    trial_seed_seq,
)
from .learners import ExpWtsLearner, best_response_unconstrained
from .oracle import d_theta_star, oracle_allocation

__all__ = ["main"]

SPEC_FIELDS = {"setting", "sweep", "delta", "trials", "base_seed",
               "algorithms", "omega", "use_ball"}


class UsageError(Exception):
    pass


def _build_parser():
    p = argparse.ArgumentParser(
        prog="peleg",
        description="Phased-elimination best-arm identification for linear bandits",
    )
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, with_param=True):
        sp.add_argument("--setting", choices=("standard", "sphere", "confound"),
                        default="standard")
        if with_param:
            sp.add_argument("--param", type=float,
                            help="gap (standard) or dimension (sphere/confound)")
        sp.add_argument("--delta", type=float, default=0.1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--omega", type=float, default=0.1,
                        help="confounder angle for the confound setting")

    sp = sub.add_parser("run", help="single seeded run with optional trace")
    common(sp)
    sp.add_argument("--use-ball", action="store_true",
                    help="keep the ball constraint in the stop criterion (slow)")
    sp.add_argument("--trace", help="per-round CSV trace path")

    sp = sub.add_parser("sweep", help="multi-trial experiment, CSV output")
    sp.add_argument("--config", help="JSON experiment spec (flags override)")
    sp.add_argument("--setting", choices=("standard", "sphere", "confound"),
                    default=None)
    sp.add_argument("--sweep", help="comma-separated swept values")
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--omega", type=float, default=None,
                    help="confounder angle for the confound setting")
    sp.add_argument("--algorithms", default=None,
                    help="comma list from peleg,oracle_baseline,uniform_static")
    sp.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: PELEG_WORKERS or 1)")
    sp.add_argument("--use-ball", action="store_true")
    sp.add_argument("--full", action="store_true",
                    help="full-scale sweep (slow; hours for the sphere setting)")
    sp.add_argument("--out", required=True, help="records CSV path")

    sp = sub.add_parser("oracle", help="hardness, oracle allocation, lower bound")
    common(sp)
    sp.add_argument("--method", choices=("auto", "grid", "game-solver"),
                    default="auto")
    sp.add_argument("--budget", type=int, default=50_000)

    sub.add_parser("selftest", help="run the runtime invariant suites")
    return p


def _instance_for(setting, param, omega, seed):
    if param is None:
        raise UsageError("--param is required for this subcommand")
    if setting == "standard":
        return make_setting1(float(param))
    if setting == "sphere":
        rng = np.random.default_rng(trial_seed_seq(seed, param, 0).spawn(2)[0])
        return make_setting2(int(param), rng)
    return make_setting3(int(param), omega)


def _cmd_run(args) -> int:
    inst = _instance_for(args.setting, args.param, args.omega, args.seed)
    cfg = PelegConfig(delta=args.delta, use_ball=args.use_ball)
    rng = np.random.default_rng(args.seed)
    res = run(inst, cfg, rng, trace_path=args.trace)
    best = summarize(inst).best_arm
    print(f"recommended arm: {res.recommended} (truth: {best})")
    print(f"tau: {res.tau}  phases: {len(res.phase_lengths)}")
    for d in res.phase_diag:
        print(f"  phase {d.m}: N={d.n_rounds} eps={d.eps_m:.4g} "
              f"branch={d.eps_branch} cert={d.max_pair_inv_quad:.4g} "
              f"active {len(d.active_before)}->{len(d.active_after)}")
    return 0 if res.recommended == best else 1


def _parse_sweep_values(setting, text):
    vals = [v.strip() for v in text.split(",") if v.strip()]
    if not vals:
        raise UsageError("--sweep must list at least one value")
    return [float(v) if setting == "standard" else int(v) for v in vals]


def _spec_from_args(args) -> ExperimentSpec:
    """Resolve the sweep spec: explicit flags beat the config file beat defaults."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        unknown = set(cfg) - SPEC_FIELDS
        if unknown:
            raise UsageError(
                f"unknown config field: {sorted(unknown)[0]!r}")

    def pick(flag_value, key, default):
        return flag_value if flag_value is not None else cfg.get(key, default)

    setting = pick(args.setting, "setting", "standard")
    if args.sweep is not None:
        sweep = _parse_sweep_values(setting, args.sweep)
    elif "sweep" in cfg:
        sweep = cfg["sweep"]
    else:
        sweep = (FULL_SWEEPS if args.full else DEFAULT_SWEEPS)[setting]
    if args.algorithms is not None:
        algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    else:
        algorithms = cfg.get("algorithms",
                             ["peleg", "oracle_baseline", "uniform_static"])
    try:
        return ExperimentSpec(
            setting=setting,
            sweep=tuple(sweep),
            delta=pick(args.delta, "delta", 0.1),
            trials=pick(args.trials, "trials", 50),
            base_seed=pick(args.seed, "base_seed", 0),
            algorithms=tuple(algorithms),
            omega=pick(args.omega, "omega", 0.1),
            use_ball=args.use_ball or cfg.get("use_ball", False),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid experiment spec: {exc}") from exc


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    records = run_experiment(spec, workers=args.workers)
    records_to_csv(records, args.out)
    stem, ext = os.path.splitext(args.out)
    summary_path = f"{stem}.summary{ext or '.csv'}"
    summary_to_csv(aggregate(records), summary_path)
    print(f"wrote {len(records)} records to {args.out}")
    print(f"wrote summary to {summary_path}")
    return 0


def _cmd_oracle(args) -> int:
    inst = _instance_for(args.setting, args.param, args.omega, args.seed)
    hard = d_theta_star(inst, method=args.method, budget=args.budget)
    alloc = oracle_allocation(inst, method=args.method, budget=args.budget)
    lower = math.log(1.0 / (2.4 * args.delta)) / hard.value
    print(f"hardness D: {hard.value:.6g}  (method={hard.method}"
          + (f", duality_gap={hard.duality_gap:.3g}" if hard.duality_gap is not None else "")
          + ")")
    print(f"oracle allocation w*: {np.array2string(alloc.w, precision=4)}")
    print(f"sample-complexity lower bound log(1/2.4 delta)/D: {lower:.6g}")
    return 0


def _qp_halfspace_min(W, y, eps, iters=4000):
    """Projected-gradient reference for min ||lam||^2_W s.t. lam.y >= eps."""
    L = float(np.linalg.eigvalsh(W)[-1])
    lam = eps * y / float(y @ y)
    step = 0.5 / L
    for _ in range(iters):
        lam = lam - step * 2.0 * (W @ lam)
        short = eps - float(lam @ y)
        if short > 0:
            lam = lam + short * y / float(y @ y)
    return float(lam @ W @ lam)


def _selftest_tracking(rng) -> bool:
    from .algorithm import track_select
    for _ in range(100):
        K = int(rng.integers(2, 11))
        pulls = np.ones(K)
        cum_w = np.ones(K)
        for _ in range(2000):
            w = rng.dirichlet(np.ones(K))
            cum_w += w
            k = track_select(pulls, cum_w)
            pulls[k] += 1
            if np.any(pulls > cum_w + 1.0) or np.any(pulls < cum_w - (K - 1)):
                return False
    return True


def _selftest_regret(rng) -> bool:
    for _ in range(20):
        K = int(rng.integers(2, 9))
        D_sq = float(rng.uniform(0.5, 4.0))
        T = 3000
        losses = rng.uniform(0.0, D_sq, size=(T, K))
        learner = ExpWtsLearner(K, D_sq)
        inc = 0.0
        cum = np.zeros(K)
        for t in range(T):
            w = learner.distribution()
            inc += float(w @ losses[t])
            cum += losses[t]
            learner.update(losses[t] - D_sq)  # shift into [-D^2, 0]
            bound = D_sq / (math.sqrt(2) - 1) * math.sqrt((t + 1) * math.log(K))
            if inc - cum.min() > bound:
                return False
    return True


def _selftest_closed_form(rng) -> bool:
    for _ in range(25):
        d = int(rng.integers(1, 5))
        A = rng.standard_normal((d, d))
        W = A @ A.T + 0.5 * np.eye(d)
        arms = rng.standard_normal((2, d))
        arms /= np.maximum(np.linalg.norm(arms, axis=1, keepdims=True), 1.0)
        if np.allclose(arms[0], arms[1]):
            continue
        eps = float(rng.uniform(0.05, 1.0))
        sol = best_response_unconstrained(W, [0, 1], arms, eps)
        ref = _qp_halfspace_min(W, arms[sol.pair[1]] - arms[sol.pair[0]], eps)
        if abs(sol.value - ref) > 1e-6 * max(ref, 1e-12):
            return False
    return True


def _selftest_certificate() -> bool:
    from .env import Instance
    arms = np.array([[1.0], [-1.0]])
    inst = Instance(arms=arms, theta_star=np.array([0.6]))
    for seed in range(2):
        res = run(inst, PelegConfig(delta=0.2), np.random.default_rng(seed))
        for diag in res.phase_diag:
            bound = (0.5 ** (diag.m + 1)) ** 2 / diag.r_sq
            if diag.max_pair_inv_quad > bound:
                return False
    res = run(make_setting1(0.5), PelegConfig(delta=0.1),
              np.random.default_rng(0))
    return all(
        d.max_pair_inv_quad <= (0.5 ** (d.m + 1)) ** 2 / d.r_sq
        for d in res.phase_diag
    )


def _cmd_selftest(_args) -> int:
    rng = np.random.default_rng(2024)
    checks = [
        ("tracking bounds", lambda: _selftest_tracking(rng)),
        ("exp-wts regret bound", lambda: _selftest_regret(rng)),
        ("halfspace closed form vs QP", lambda: _selftest_closed_form(rng)),
        ("post-phase certificate", _selftest_certificate),
    ]
    failed = 0
    for name, fn in checks:
        ok = fn()
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += 0 if ok else 1
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "oracle": _cmd_oracle,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.subcommand](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
