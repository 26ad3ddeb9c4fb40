import itertools

import numpy as np
import pytest

from uavqubo.qubo import (
    QuboModel,
    energy,
    to_ising,
    penalty_exactly_one,
    penalty_values,
    scale_and_add,
    export_qubo_file,
    import_qubo_file,
    heuristic_penalty_bound,
    enumerated_penalty_bound,
)


def random_model(rng, n, density=0.5, offset=None):
    model = QuboModel(n)
    for i in range(n):
        if rng.random() < density:
            model.add_linear(i, rng.normal())
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                model.add_quadratic(i, j, rng.normal())
    model.add_offset(rng.normal() if offset is None else offset)
    return model


def dense_energy_oracle(model, x):
    # Independent dense x^T Q x + c^T x + offset evaluation.
    n = model.num_vars
    Q = np.zeros((n, n))
    c = np.zeros(n)
    for i, v in model.linear.items():
        c[i] = v
    for (i, j), v in model.quadratic.items():
        Q[i, j] = v
    x = np.asarray(x, dtype=float)
    return float(x @ Q @ x + c @ x + model.offset)


def all_bits(n):
    return [np.array(bits, dtype=np.uint8)
            for bits in itertools.product((0, 1), repeat=n)]


class TestEnergy:
    def test_empty_model_returns_offset(self):
        model = QuboModel(0, offset=2.5)
        assert energy(model, np.array([], dtype=np.uint8)) == 2.5

    def test_single_variable(self):
        model = QuboModel(1, offset=0.25)
        model.add_linear(0, 1.0)
        assert energy(model, [1]) == 1.25
        assert energy(model, [0]) == 0.25

    def test_length_mismatch_rejected(self):
        model = QuboModel(3)
        with pytest.raises(ValueError):
            energy(model, [0, 1])

    def test_matches_dense_matrix_oracle(self):
        rng = np.random.default_rng(7)
        model = random_model(rng, 10)
        for _ in range(50):
            x = rng.integers(0, 2, size=10)
            assert abs(energy(model, x) - dense_energy_oracle(model, x)) < 1e-12

    def test_batch_energies_match_scalar(self):
        rng = np.random.default_rng(8)
        model = random_model(rng, 9)
        states = rng.integers(0, 2, size=(40, 9)).astype(np.uint8)
        batch = model.energies(states)
        for row, e in zip(states, batch):
            assert abs(model.energy(row) - e) < 1e-12

    def test_zero_coefficients_pruned(self):
        model = QuboModel(3)
        model.add_linear(1, 2.0)
        model.add_linear(1, -2.0)
        model.add_quadratic(0, 2, 1.5)
        model.add_quadratic(2, 0, -1.5)
        assert model.linear == {}
        assert model.quadratic == {}


class TestToIsing:
    def test_single_variable_identity(self):
        c = 3.7
        model = QuboModel(1)
        model.add_linear(0, c)
        ising = to_ising(model)
        assert ising.h[0] == pytest.approx(c / 2)
        assert ising.offset == pytest.approx(c / 2)
        assert ising.energy([-1]) == pytest.approx(0.0)
        assert ising.energy([+1]) == pytest.approx(c)

    def test_pure_quadratic_four_states(self):
        model = QuboModel(2)
        model.add_quadratic(0, 1, 4.0)
        ising = to_ising(model)
        assert ising.j[(0, 1)] == pytest.approx(1.0)
        assert ising.h[0] == pytest.approx(1.0)
        assert ising.h[1] == pytest.approx(1.0)
        assert ising.offset == pytest.approx(1.0)
        for x in all_bits(2):
            sigma = 2 * x.astype(int) - 1
            assert ising.energy(sigma) == pytest.approx(model.energy(x))

    def test_random_12var_exhaustive_equivalence(self):
        rng = np.random.default_rng(11)
        model = random_model(rng, 12)
        ising = to_ising(model)
        for x in all_bits(12):
            sigma = 2 * x.astype(int) - 1
            assert abs(model.energy(x) - ising.energy(sigma)) <= 1e-9


class TestPenaltyExactlyOne:
    def test_satisfied_pair(self):
        model = penalty_exactly_one([[0, 1]])
        assert model.energy([1, 0]) == pytest.approx(0.0)
        assert model.energy([0, 1]) == pytest.approx(0.0)

    def test_one_unit_violations(self):
        model = penalty_exactly_one([[0, 1]])
        assert model.energy([1, 1]) == pytest.approx(1.0)
        assert model.energy([0, 0]) == pytest.approx(1.0)

    def test_group_of_five_all_set(self):
        model = penalty_exactly_one([list(range(5))])
        assert model.energy(np.ones(5, dtype=np.uint8)) == pytest.approx(16.0)

    def test_nonnegative_and_zero_exactly_on_feasible(self):
        groups = [[0, 1, 2], [3, 4]]
        model = penalty_exactly_one(groups)
        for x in all_bits(5):
            e = model.energy(x)
            assert e >= -1e-12
            feasible = x[:3].sum() == 1 and x[3:].sum() == 1
            assert (abs(e) < 1e-12) == feasible

    def test_batch_penalty_values_match_model(self):
        groups = [[0, 2], [1, 3, 4]]
        model = penalty_exactly_one(groups)
        states = np.array(all_bits(5))
        np.testing.assert_allclose(
            penalty_values(states, groups), model.energies(states), atol=1e-12)

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError):
            penalty_exactly_one([[]])


class TestScaleAndAdd:
    def test_weight_zero_keeps_target(self):
        rng = np.random.default_rng(3)
        target = random_model(rng, 6)
        addend = random_model(rng, 6)
        out = scale_and_add(target, addend, 0.0)
        assert out.linear == target.linear
        assert out.quadratic == target.quadratic
        assert out.offset == target.offset

    def test_adding_model_to_itself_doubles(self):
        rng = np.random.default_rng(4)
        target = random_model(rng, 5)
        out = scale_and_add(target, target, 1.0)
        for i, v in target.linear.items():
            assert out.linear[i] == pytest.approx(2 * v)
        for k, v in target.quadratic.items():
            assert out.quadratic[k] == pytest.approx(2 * v)

    def test_pointwise_linearity(self):
        rng = np.random.default_rng(5)
        a = random_model(rng, 8)
        b = random_model(rng, 8)
        lam = 2.625
        combined = scale_and_add(a, b, lam)
        for _ in range(100):
            x = rng.integers(0, 2, size=8)
            expect = a.energy(x) + lam * b.energy(x)
            assert combined.energy(x) == pytest.approx(expect, abs=1e-9)

    def test_label_collision_rejected(self):
        a = QuboModel(2, var_labels={0: ("assoc", 0, 0)})
        b = QuboModel(2, var_labels={0: ("alloc", 0, 0, 0)})
        with pytest.raises(ValueError):
            scale_and_add(a, b, 1.0)


class TestQuboFile:
    def test_empty_model_header_only(self, tmp_path):
        model = QuboModel(0, offset=1.5)
        path = tmp_path / "empty.qubo"
        export_qubo_file(model, path)
        text = path.read_text()
        assert text == "c offset 1.5\np qubo 0 0 0 0\n"

    def test_byte_stable_output(self, tmp_path):
        rng = np.random.default_rng(6)
        model = random_model(rng, 3)
        p1, p2 = tmp_path / "a.qubo", tmp_path / "b.qubo"
        export_qubo_file(model, p1)
        export_qubo_file(model, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_round_trip_idempotent(self, tmp_path):
        rng = np.random.default_rng(9)
        for trial in range(10):
            model = random_model(rng, rng.integers(1, 10))
            p1 = tmp_path / f"m{trial}_1.qubo"
            p2 = tmp_path / f"m{trial}_2.qubo"
            export_qubo_file(model, p1)
            back = import_qubo_file(p1)
            export_qubo_file(back, p2)
            assert p1.read_bytes() == p2.read_bytes()
            assert back.linear == model.linear
            assert back.quadratic == model.quadratic
            assert back.offset == model.offset

    def test_malformed_file_rejected(self, tmp_path):
        path = tmp_path / "bad.qubo"
        path.write_text("not a qubo file\n")
        with pytest.raises(ValueError):
            import_qubo_file(path)

    def test_duplicate_entry_rejected(self, tmp_path):
        path = tmp_path / "dup.qubo"
        path.write_text("c offset 0.0\np qubo 0 2 2 0\n0 0 1.0\n0 0 2.0\n")
        with pytest.raises(ValueError):
            import_qubo_file(path)


class TestPenaltyBounds:
    def test_heuristic_exceeds_max_flip_gain(self):
        model = QuboModel(3)
        model.add_linear(0, 600.0)
        model.add_linear(1, -20.0)
        model.add_quadratic(0, 1, 5.0)
        est = heuristic_penalty_bound(model)
        assert est.chosen >= 600.0
        assert est.method == "heuristic-bound"

    def test_enumerated_guarantees_feasible_ground_state(self):
        # Two groups of two vars, costs chosen so small penalties fail.
        cost = QuboModel(4)
        for i, d in enumerate([10.0, 20.0, 30.0, 5.0]):
            cost.add_linear(i, d)
        groups = [[0, 1], [2, 3]]
        est = enumerated_penalty_bound(cost, groups)
        assert est.lower <= est.chosen <= est.upper
        pen = penalty_exactly_one(groups)
        full = scale_and_add(cost, pen, est.chosen)
        states = np.array(all_bits(4))
        energies = full.energies(states)
        ground = states[int(np.argmin(energies))]
        assert ground[:2].sum() == 1 and ground[2:].sum() == 1
        # At a hundredth of the lower bound the all-zeros state wins instead.
        weak = scale_and_add(cost, pen, max(est.lower / 100.0, 1e-9))
        weak_ground = states[int(np.argmin(weak.energies(states)))]
        assert weak_ground.sum() == 0

    def test_enumeration_cap(self):
        model = QuboModel(25)
        with pytest.raises(ValueError):
            enumerated_penalty_bound(model, [[0, 1]], cap=20)
