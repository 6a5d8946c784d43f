import json

import numpy as np
import pytest

from peleg.env import (
    DegenerateInstanceError,
    Instance,
    instance_from_json,
    instance_to_json,
    make_setting1,
    make_setting2,
    make_setting3,
    pull,
    summarize,
)


def noiseless(arms, theta):
    return Instance(arms=np.asarray(arms, float), theta_star=np.asarray(theta, float),
                    noise_std=0.0)


class TestInstance:
    def test_rejects_long_arms(self):
        with pytest.raises(ValueError, match="2-norms"):
            Instance(arms=np.array([[2.0, 0.0], [0.0, 1.0]]),
                     theta_star=np.array([1.0, 0.0]))

    def test_rejects_tied_best(self):
        with pytest.raises(DegenerateInstanceError):
            Instance(arms=np.eye(2), theta_star=np.array([0.5, 0.5]))

    def test_rejects_single_arm(self):
        with pytest.raises(ValueError):
            Instance(arms=np.array([[1.0]]), theta_star=np.array([1.0]))

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="finite"):
            Instance(arms=np.array([[np.nan, 0.0], [0.0, 1.0]]),
                     theta_star=np.array([1.0, 0.0]))

    def test_arms_immutable(self):
        inst = make_setting1(0.3)
        with pytest.raises(ValueError):
            inst.arms[0, 0] = 2.0


class TestPull:
    def test_noiseless_best(self):
        inst = noiseless(np.eye(2), [0.5, 0.0])
        assert pull(inst, 0, np.random.default_rng(0)) == 0.5

    def test_noiseless_other(self):
        inst = noiseless(np.eye(2), [0.5, 0.0])
        assert pull(inst, 1, np.random.default_rng(0)) == 0.0

    def test_law_of_large_numbers(self):
        inst = Instance(arms=np.eye(2), theta_star=np.array([0.5, 0.0]))
        rng = np.random.default_rng(123)
        n = 100_000
        mean = np.mean([pull(inst, 0, rng) for _ in range(n)])
        assert abs(mean - 0.5) < 3e-2

    def test_reproducible(self):
        inst = make_setting1(0.2)
        a = [pull(inst, 1, np.random.default_rng(9)) for _ in range(10)]
        b = [pull(inst, 1, np.random.default_rng(9)) for _ in range(10)]
        assert a == b

    def test_index_out_of_range(self):
        inst = make_setting1(0.2)
        with pytest.raises(IndexError):
            pull(inst, 5, np.random.default_rng(0))


class TestSummarize:
    def test_setting1(self):
        s = summarize(make_setting1(0.3))
        assert s.best_arm == 0
        np.testing.assert_allclose(s.gaps, [0.0, 0.3, 0.3, 0.3, 0.3])
        assert s.delta_min == pytest.approx(0.3)
        assert s.C == pytest.approx(1.0)

    def test_scaling_theta(self):
        inst = make_setting3(3, 0.4)
        scaled = Instance(arms=inst.arms, theta_star=2.0 * inst.theta_star)
        s1, s2 = summarize(inst), summarize(scaled)
        assert s1.best_arm == s2.best_arm
        np.testing.assert_allclose(s2.gaps, 2.0 * s1.gaps, rtol=1e-12)

    def test_setting3_confounder_gap(self):
        s = summarize(make_setting3(2, 0.1))
        assert s.gaps[2] == pytest.approx(1.0 - np.cos(0.1), rel=1e-12)


class TestSetting1:
    def test_delta_min(self):
        assert summarize(make_setting1(0.5)).delta_min == pytest.approx(0.5)

    def test_best_arm(self):
        assert summarize(make_setting1(0.1)).best_arm == 0

    def test_identity_gram(self):
        for delta in (0.1, 0.3, 0.5):
            assert summarize(make_setting1(delta)).C == pytest.approx(1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            make_setting1(0.0)


class TestSetting2:
    def test_unit_norms(self):
        inst = make_setting2(6, np.random.default_rng(0))
        np.testing.assert_allclose(np.linalg.norm(inst.arms, axis=1), 1.0,
                                   rtol=1e-12)
        assert inst.n_arms == 100

    def test_best_is_closest_pair_member(self):
        rng = np.random.default_rng(17)
        inst = make_setting2(5, rng)
        dots = inst.arms @ inst.arms.T
        np.fill_diagonal(dots, -np.inf)
        i, j = divmod(int(np.argmax(dots)), inst.n_arms)
        u = min(i, j)
        assert summarize(inst).best_arm == u

    def test_gap_structure(self):
        # gap to the runner-up v equals (1 - 2 gamma)(1 - u.v); recompute the
        # gaps directly from the constructed parameter
        rng = np.random.default_rng(3)
        inst = make_setting2(10, rng)
        s = summarize(inst)
        dots = inst.arms @ inst.arms.T
        np.fill_diagonal(dots, -np.inf)
        i, j = divmod(int(np.argmax(dots)), inst.n_arms)
        u, v = min(i, j), max(i, j)
        c = float(inst.arms[u] @ inst.arms[v])
        expected = (1.0 - 2 * 0.01) * (1.0 - c)
        assert s.gaps[v] == pytest.approx(expected, rel=1e-10)
        assert s.delta_min == pytest.approx(expected, rel=1e-10)

    def test_rejects_low_dim(self):
        with pytest.raises(ValueError):
            make_setting2(1, np.random.default_rng(0))


class TestSetting3:
    def test_direct_gap(self):
        s = summarize(make_setting3(2, np.pi / 4))
        assert s.gaps[2] == pytest.approx(1.0 - np.cos(np.pi / 4), rel=1e-12)

    def test_best_arm_first(self):
        for omega in (0.05, 0.3, 1.0):
            assert summarize(make_setting3(4, omega)).best_arm == 0

    def test_small_omega_small_gap(self):
        assert summarize(make_setting3(2, 1e-3)).delta_min == pytest.approx(
            1.0 - np.cos(1e-3), rel=1e-6)

    def test_arm_count(self):
        assert make_setting3(7, 0.2).n_arms == 8

    def test_omega_range(self):
        with pytest.raises(ValueError):
            make_setting3(2, 0.0)
        with pytest.raises(ValueError):
            make_setting3(2, np.pi / 2)


class TestJson:
    def test_round_trip(self):
        inst = make_setting3(3, 0.25)
        doc = instance_to_json(inst)
        data = json.loads(doc)
        assert set(data) == {"arms", "theta_star", "noise_std"}
        back = instance_from_json(doc)
        np.testing.assert_array_equal(back.arms, inst.arms)
        np.testing.assert_array_equal(back.theta_star, inst.theta_star)
        assert back.noise_std == inst.noise_std
