import math

import numpy as np
import pytest

from uavqubo.evaluate import (
    NetworkAssignment,
    InfeasibleAssignmentError,
    interference,
    link_reports,
    sum_rate,
    reports_to_csv,
)
from uavqubo.netmodel import GainMatrix, RadioParams, generate_scenario, gain_matrix


def fixture_gains(values):
    g = np.asarray(values, dtype=float)
    return GainMatrix(linear_gain=g, pathloss_db=-10.0 * np.log10(g))


def brute_force_sum_rate(assignment, gains, power_w, noise_w):
    # Independent per-link recomputation with explicit loops over (m,n,k,l).
    M, N = assignment.association.shape
    K = assignment.subchannel.shape[1]
    L = assignment.power.shape[1]
    total = 0.0
    for n in range(N):
        for m in range(M):
            if not assignment.association[m, n]:
                continue
            for k in range(K):
                if not assignment.subchannel[m, k]:
                    continue
                for l in range(L):
                    if not assignment.power[m, l]:
                        continue
                    sig = gains.linear_gain[m, n] * power_w[l]
                    intf = 0.0
                    for m2 in range(M):
                        if m2 == m or not assignment.subchannel[m2, k]:
                            continue
                        for l2 in range(L):
                            if assignment.power[m2, l2]:
                                intf += gains.linear_gain[m2, n] * power_w[l2]
                    total += math.log2(1.0 + sig / (intf + noise_w))
    return total


class TestInterference:
    power_w = np.array([0.1, 1.0])

    def test_distinct_subchannels_no_interference(self):
        gains = fixture_gains([[1e-9, 2e-9], [3e-9, 4e-9]])
        a = NetworkAssignment(association=[[1, 0], [0, 1]],
                              subchannel=[[1, 0], [0, 1]],
                              power=[[0, 1], [0, 1]])
        for n in range(2):
            k = 0 if n == 0 else 1
            assert interference(a, gains, self.power_w, n, k) == 0.0

    def test_single_uav_never_interferes(self):
        gains = fixture_gains([[1e-9, 2e-9]])
        a = NetworkAssignment(association=[[1, 1]], subchannel=[[1, 0]],
                              power=[[1, 0]])
        assert interference(a, gains, self.power_w, 0, 0) == 0.0

    def test_shared_channel_hand_summed(self):
        gains = fixture_gains([[5e-10, 2e-10], [7e-10, 3e-10]])
        a = NetworkAssignment(association=[[1, 0], [0, 1]],
                              subchannel=[[1, 0], [1, 0]],
                              power=[[1, 0], [0, 1]])
        # GU 0 served by UAV 0; interferer UAV 1 at level 1 (1.0 W)
        assert interference(a, gains, self.power_w, 0, 0) == pytest.approx(
            7e-10 * 1.0, rel=1e-12)
        # GU 1 served by UAV 1; interferer UAV 0 at level 0 (0.1 W)
        assert interference(a, gains, self.power_w, 1, 0) == pytest.approx(
            2e-10 * 0.1, rel=1e-12)


class TestSumRate:
    noise_w = 10 ** (-126 / 10)

    def test_single_link_shannon_form(self):
        g = 4e-10
        gains = fixture_gains([[g]])
        a = NetworkAssignment(association=[[1]], subchannel=[[1]], power=[[1]])
        power_w = np.array([0.5])
        want = math.log2(1.0 + g * 0.5 / self.noise_w)
        assert sum_rate(a, gains, power_w, self.noise_w) == pytest.approx(want)

    def test_no_subchannel_means_zero_rate(self):
        gains = fixture_gains([[1e-9, 2e-9], [3e-9, 4e-9]])
        a = NetworkAssignment(association=[[1, 0], [0, 1]],
                              subchannel=[[0, 0], [0, 0]],
                              power=[[1, 0], [0, 1]])
        assert sum_rate(a, gains, np.array([0.1, 1.0]), self.noise_w) == 0.0

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(21)
        scenario = generate_scenario(RadioParams(), 2, 4, 2000.0, seed=21)
        gains = gain_matrix(scenario)
        power_w = scenario.radio.power_levels_w[:2]
        for _ in range(10):
            assoc = np.zeros((2, 4), dtype=int)
            assoc[rng.integers(0, 2, size=4), np.arange(4)] = 1
            sub = np.zeros((2, 2), dtype=int)
            sub[np.arange(2), rng.integers(0, 2, size=2)] = 1
            pw = np.zeros((2, 2), dtype=int)
            pw[np.arange(2), rng.integers(0, 2, size=2)] = 1
            a = NetworkAssignment(association=assoc, subchannel=sub, power=pw)
            got = sum_rate(a, gains, power_w, self.noise_w)
            want = brute_force_sum_rate(a, gains, power_w, self.noise_w)
            assert got == pytest.approx(want, rel=1e-12)

    def test_infeasible_assignment_reports_violations(self):
        gains = fixture_gains([[1e-9, 2e-9], [3e-9, 4e-9]])
        a = NetworkAssignment(association=[[1, 1], [1, 0]],
                              subchannel=[[1, 0], [0, 1]],
                              power=[[1, 0], [0, 1]])
        with pytest.raises(InfeasibleAssignmentError) as err:
            sum_rate(a, gains, np.array([0.1, 1.0]), self.noise_w)
        assert any("GU 0" in v for v in err.value.violations)

    def test_uav_relabeling_invariance(self):
        rng = np.random.default_rng(33)
        scenario = generate_scenario(RadioParams(num_subchannels=2), 3, 6,
                                     2000.0, seed=33)
        gains = gain_matrix(scenario)
        power_w = scenario.radio.power_levels_w
        assoc = np.zeros((3, 6), dtype=int)
        assoc[rng.integers(0, 3, size=6), np.arange(6)] = 1
        sub = np.zeros((3, 2), dtype=int)
        sub[np.arange(3), rng.integers(0, 2, size=3)] = 1
        pw = np.zeros((3, 5), dtype=int)
        pw[np.arange(3), rng.integers(0, 5, size=3)] = 1
        a = NetworkAssignment(association=assoc, subchannel=sub, power=pw)
        base = sum_rate(a, gains, power_w, self.noise_w)
        perm = np.array([2, 0, 1])
        gains_p = GainMatrix(linear_gain=gains.linear_gain[perm],
                             pathloss_db=gains.pathloss_db[perm])
        a_p = NetworkAssignment(association=assoc[perm], subchannel=sub[perm],
                                power=pw[perm])
        assert sum_rate(a_p, gains_p, power_w, self.noise_w) == pytest.approx(
            base, rel=1e-12)


class TestDirectionalMonotonicity:
    noise_w = 10 ** (-126 / 10)

    def _fixture(self, seed):
        rng = np.random.default_rng(seed)
        scenario = generate_scenario(RadioParams(), 3, 9, 2200.0, seed=seed)
        gains = gain_matrix(scenario)
        assoc = np.zeros((3, 9), dtype=int)
        assoc[rng.integers(0, 3, size=9), np.arange(9)] = 1
        sub = np.zeros((3, 2), dtype=int)
        sub[:, 0] = 1  # everyone co-channel to maximize coupling
        return scenario, gains, assoc, sub

    def test_raising_power_helps_own_gus_hurts_cochannel(self):
        for seed in range(5):
            scenario, gains, assoc, sub = self._fixture(seed)
            power_w = scenario.radio.power_levels_w
            low = np.zeros((3, 5), dtype=int)
            low[:, 1] = 1
            high = low.copy()
            high[0, 1], high[0, 3] = 0, 1  # raise UAV 0 two levels
            a_low = NetworkAssignment(association=assoc, subchannel=sub, power=low)
            a_high = NetworkAssignment(association=assoc, subchannel=sub, power=high)
            r_low = link_reports(a_low, gains, power_w, self.noise_w)
            r_high = link_reports(a_high, gains, power_w, self.noise_w)
            for lo, hi in zip(r_low, r_high):
                if lo.uav == 0:
                    assert hi.sinr >= lo.sinr - 1e-15
                else:
                    assert hi.sinr <= lo.sinr + 1e-15

    def test_moving_interferer_to_free_channel_never_hurts(self):
        for seed in range(5):
            scenario, gains, assoc, sub = self._fixture(seed)
            power_w = scenario.radio.power_levels_w
            pw = np.zeros((3, 5), dtype=int)
            pw[:, 4] = 1
            moved = sub.copy()
            moved[2] = [0, 1]  # UAV 2 moves to the unused sub-channel
            a0 = NetworkAssignment(association=assoc, subchannel=sub, power=pw)
            a1 = NetworkAssignment(association=assoc, subchannel=moved, power=pw)
            assert (sum_rate(a1, gains, power_w, self.noise_w)
                    >= sum_rate(a0, gains, power_w, self.noise_w) - 1e-12)


class TestCsv:
    def test_report_csv_columns(self, tmp_path):
        gains = fixture_gains([[1e-9, 2e-9]])
        a = NetworkAssignment(association=[[1, 1]], subchannel=[[0, 1]],
                              power=[[1, 0]])
        reports = link_reports(a, gains, np.array([0.1, 1.0]), 1e-12)
        path = tmp_path / "links.csv"
        reports_to_csv(reports, (20.0, 30.0), path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ("gu,uav,subchannel,power_dbm,signal_w,"
                            "interference_w,sinr_db,rate")
        assert len(lines) == 3
