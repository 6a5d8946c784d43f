import math

import numpy as np
import pytest

from peleg import (
    Instance,
    NonTerminationError,
    PelegConfig,
    PhaseState,
    eliminate,
    make_setting1,
    make_setting3,
    ols_estimate,
    phase_params,
    run,
    stop_check,
    summarize,
    track_select,
)
from peleg.algorithm import TRACE_HEADER


def two_arm_line(theta=0.6):
    """Tiny d=1 instance with short phases, for fast end-to-end runs."""
    return Instance(arms=np.array([[1.0], [-1.0]]),
                    theta_star=np.array([theta]))


class TestPhaseParams:
    def test_setting1_phase1_values(self):
        # evaluate the phase constants independently in 64-bit arithmetic
        inst = make_setting1(0.3)
        pp = phase_params(1, range(5), inst.arms, 0.1, 1.0)
        assert pp.delta_m == 0.1
        assert pp.r_sq == pytest.approx(8 * math.log(250), rel=1e-15)
        assert pp.r_sq == pytest.approx(44.17, abs=5e-3)
        expect_D = 2 * (math.sqrt(2) - 1) * math.sqrt(1.0 / (2.0 * math.log(5)))
        assert pp.D_m == pytest.approx(expect_D, rel=1e-15)
        assert pp.D_m == pytest.approx(0.4618, abs=1e-4)
        assert pp.branch == "shrunk"
        expect_eps = expect_D / math.sqrt(8 * math.log(250)) * 0.25
        assert pp.eps_m == pytest.approx(expect_eps, rel=1e-15)
        assert pp.eps_m == pytest.approx(0.01737, abs=5e-6)

    def test_delta_quartering_shifts_r_sq(self):
        inst = make_setting1(0.3)
        for m in (1, 2, 5):
            a = phase_params(m, range(5), inst.arms, 0.2, 1.0)
            b = phase_params(m, range(5), inst.arms, 0.05, 1.0)
            assert b.r_sq - a.r_sq == pytest.approx(8 * math.log(4), rel=1e-12)

    def test_unit_branch_exact_power_of_two(self):
        # two nearly-parallel arms: tiny max pair distance makes the ball
        # radius large enough that the gap width is not shrunk
        inst = make_setting3(2, 0.1)
        for m in (1, 2, 3):
            pp = phase_params(m, [0, 2], inst.arms, 0.1, 1.0)
            assert pp.branch == "unit"
            assert pp.eps_m == 0.5 ** (m + 1)

    def test_requires_two_active(self):
        with pytest.raises(ValueError):
            phase_params(1, [0], make_setting1(0.3).arms, 0.1, 1.0)


def make_state(V, active, arms, eps_m, r_sq, D_m=1.0, t=None):
    K = arms.shape[0]
    return PhaseState(m=1, active=list(active), arms=arms, delta_m=0.1,
                      D_m=D_m, eps_m=eps_m, r_sq=r_sq, V=V,
                      b=np.zeros(arms.shape[1]), pulls=np.ones(K, dtype=np.int64),
                      cum_w=np.ones(K), t=t if t is not None else K)


class TestStopCheck:
    def test_hand_evaluated_inequality(self):
        # pair uncertainty 2e-4 against threshold eps^2/r^2 = 2.264e-4
        arms = np.eye(2)
        state = make_state(10_000 * np.eye(2), [0, 1], arms, 0.1, 44.17)
        assert stop_check(state, PelegConfig(delta=0.1)) is True

    def test_burn_in_never_suffices(self):
        inst = make_setting1(0.3)
        pp = phase_params(1, range(5), inst.arms, 0.1, 1.0)
        state = make_state(np.eye(5), range(5), inst.arms, pp.eps_m, pp.r_sq,
                           D_m=pp.D_m)
        assert stop_check(state, PelegConfig(delta=0.1)) is False

    def test_ball_with_huge_radius_matches_plain(self):
        rng = np.random.default_rng(0)
        arms = rng.standard_normal((4, 2)) * 0.5
        for scale in (30.0, 3000.0, 300000.0):
            V = scale * np.eye(2) + arms.T @ arms
            plain = make_state(V, range(4), arms, 0.05, 40.0)
            balled = make_state(V.copy(), range(4), arms, 0.05, 40.0, D_m=1e9)
            assert stop_check(plain, PelegConfig(delta=0.1)) == \
                stop_check(balled, PelegConfig(delta=0.1, use_ball=True))

    def test_singular_design_means_continue(self):
        arms = np.eye(2)
        state = make_state(np.diag([1.0, 0.0]), [0, 1], arms, 0.1, 44.17)
        assert stop_check(state, PelegConfig(delta=0.1)) is False


class TestTrackSelect:
    def test_tie_lowest_index(self):
        assert track_select([1, 1], [1.5, 1.5]) == 0

    def test_ratio_comparison(self):
        assert track_select([2, 1], [2.0, 2.0]) == 1

    def test_bounds_on_random_streams(self):
        rng = np.random.default_rng(42)
        K = 5
        for _ in range(10):
            pulls = np.ones(K)
            cum_w = np.ones(K)
            for _ in range(2000):
                w = rng.dirichlet(np.ones(K))
                cum_w += w
                k = track_select(pulls, cum_w)
                pulls[k] += 1
                assert np.all(pulls <= cum_w + 1.0)
                assert np.all(pulls >= cum_w - (K - 1))

    def test_requires_positive_weights(self):
        with pytest.raises(ValueError):
            track_select([0, 0], [0.0, 1.0])


class TestOlsEstimate:
    def test_canonical_noiseless_exact(self):
        theta = np.array([0.4, -0.2, 0.7])
        V = np.eye(3)
        b = theta.copy()
        np.testing.assert_allclose(ols_estimate(V, b), theta, rtol=1e-12)

    def test_doubling_counts_cancels(self):
        rng = np.random.default_rng(1)
        arms = rng.standard_normal((4, 3)) * 0.5
        counts = np.array([3, 1, 2, 5])
        rewards = rng.standard_normal(4)
        V = (counts * arms.T) @ arms
        b = ((counts * rewards) * arms.T).sum(axis=1)
        t1 = ols_estimate(V, b)
        t2 = ols_estimate(2 * V, 2 * b)
        np.testing.assert_allclose(t1, t2, rtol=1e-10)

    def test_estimate_improves_across_phases(self):
        # two-phase instance; later phases draw many more samples, so the
        # median parameter error shrinks phase over phase
        inst = two_arm_line(0.045)
        errs = {1: [], 2: []}
        for seed in range(11):
            res = run(inst, PelegConfig(delta=0.2), np.random.default_rng(seed))
            for diag in res.phase_diag:
                err = abs(diag.theta_hat[0] - 0.045)
                errs[diag.m].append(err)
        assert len(errs[2]) == 11
        assert np.median(errs[2]) < np.median(errs[1])


class TestEliminate:
    def test_threshold_crossing(self):
        arms = np.eye(2)
        out = eliminate([0, 1], arms, np.array([0.2, 0.0]), m=1)
        assert out == [0]

    def test_zero_estimate_keeps_all(self):
        arms = np.eye(4)
        assert eliminate(range(4), arms, np.zeros(4), m=1) == [0, 1, 2, 3]

    def test_noiseless_setting1_first_phase(self):
        inst = make_setting1(0.5)
        out = eliminate(range(5), inst.arms, inst.theta_star, m=1)
        assert out == [0]

    def test_never_empties(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            arms = rng.standard_normal((5, 3)) * 0.5
            theta = rng.standard_normal(3)
            out = eliminate(range(5), arms, theta, m=int(rng.integers(1, 6)))
            assert len(out) >= 1
            rewards = arms @ theta
            assert int(np.argmax(rewards)) in out


class TestRun:
    def test_noiseless_one_phase(self):
        inst = Instance(arms=np.eye(5),
                        theta_star=np.array([0.5, 0, 0, 0, 0.0]),
                        noise_std=0.0)
        res = run(inst, PelegConfig(delta=0.1), np.random.default_rng(0))
        assert res.recommended == 0
        assert len(res.phase_lengths) == 1

    def test_noiseless_best_arm_survives(self):
        rng = np.random.default_rng(3)
        for seed in range(3):
            arms = rng.standard_normal((4, 2))
            arms /= np.maximum(np.linalg.norm(arms, axis=1, keepdims=True), 1.0)
            try:
                inst = Instance(arms=arms, theta_star=rng.standard_normal(2) * 0.5,
                                noise_std=0.0)
            except ValueError:
                continue
            res = run(inst, PelegConfig(delta=0.2), np.random.default_rng(seed))
            assert res.recommended == summarize(inst).best_arm

    def test_engines_agree(self):
        inst = two_arm_line()
        cfg = PelegConfig(delta=0.3)
        rn = run(inst, cfg, np.random.default_rng(5), engine="numba")
        rp = run(inst, cfg, np.random.default_rng(5), engine="python")
        assert rn.recommended == rp.recommended
        assert rn.phase_lengths == rp.phase_lengths
        assert [d.max_pair_inv_quad for d in rn.phase_diag] == \
            pytest.approx([d.max_pair_inv_quad for d in rp.phase_diag])

    def test_deterministic_given_seed(self):
        inst = two_arm_line()
        cfg = PelegConfig(delta=0.3)
        a = run(inst, cfg, np.random.default_rng(9))
        b = run(inst, cfg, np.random.default_rng(9))
        assert a.tau == b.tau and a.recommended == b.recommended

    def test_ball_variant_inactive_ball_same_result(self):
        inst = two_arm_line()
        plain = run(inst, PelegConfig(delta=0.3), np.random.default_rng(5),
                    engine="python")
        balled = run(inst, PelegConfig(delta=0.3, use_ball=True),
                     np.random.default_rng(5))
        assert balled.tau == plain.tau
        assert balled.recommended == plain.recommended

    def test_certificate_every_phase(self):
        inst = two_arm_line(0.045)
        for seed in range(3):
            res = run(inst, PelegConfig(delta=0.2), np.random.default_rng(seed))
            for d in res.phase_diag:
                assert d.max_pair_inv_quad <= (0.5 ** (d.m + 1)) ** 2 / d.r_sq

    def test_tau_is_sum_and_burn_in_floor(self):
        inst = two_arm_line()
        res = run(inst, PelegConfig(delta=0.3), np.random.default_rng(1))
        assert res.tau == sum(res.phase_lengths)
        assert all(n >= inst.n_arms for n in res.phase_lengths)

    def test_round_cap_raises_with_partial(self):
        inst = make_setting1(0.3)
        cfg = PelegConfig(delta=0.1, max_rounds_per_phase=500)
        with pytest.raises(NonTerminationError) as exc:
            run(inst, cfg, np.random.default_rng(0))
        assert exc.value.partial["phase"] == 1
        assert exc.value.partial["phases_completed"] == 0

    def test_burnin_active_only_with_rank_deficient_start(self):
        # phase 2 burns in only two basis arms, so its design matrix starts
        # singular until tracking reaches the unplayed arms
        inst = Instance(arms=np.eye(5),
                        theta_star=np.array([0.3, 0, 0, 0, 0.23]))
        cfg = PelegConfig(delta=0.4, burnin_active_only=True)
        res = run(inst, cfg, np.random.default_rng(2))
        assert res.recommended == 0
        assert res.phase_diag[0].active_after == (0, 4)
        for d in res.phase_diag:
            assert d.max_pair_inv_quad <= (0.5 ** (d.m + 1)) ** 2 / d.r_sq

    def test_trace_file(self, tmp_path):
        inst = two_arm_line()
        path = tmp_path / "trace.csv"
        res = run(inst, PelegConfig(delta=0.3), np.random.default_rng(5),
                  trace_path=str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == TRACE_HEADER
        assert len(lines) - 1 == res.tau  # one row per pull, burn-in included
        phase, t, arm, margin = lines[1].split(",")
        assert (phase, t) == ("1", "1")
        assert margin == "nan"
        last = lines[-1].split(",")
        assert int(last[1]) == res.phase_lengths[-1]
