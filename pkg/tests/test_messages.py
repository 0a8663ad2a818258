import json
import math

import numpy as np
import pytest

from bvmp.messages import (
    W2LTable,
    build_w2l_row,
    enforce_monotone_antisymmetric,
    fill_from_nearest,
    l_to_prob,
    prob_to_weight,
    quantize_state,
    round_half_away,
    sample_vector,
    syndrome_information,
    w2l_from_distribution,
    xor_vectors,
)

LN4 = math.log(4.0)


class TestLToProb:
    def test_zero_is_half(self):
        assert l_to_prob(0.0) == 0.5

    def test_closed_forms(self):
        assert l_to_prob(math.log(3)) == pytest.approx(0.25, abs=1e-15)
        assert l_to_prob(-math.log(9)) == pytest.approx(0.9, abs=1e-15)

    def test_strictly_decreasing(self):
        ls = np.linspace(-30, 30, 201)
        ps = l_to_prob(ls)
        assert np.all(np.diff(ps) < 0)


class TestProbToWeight:
    def test_exact_integer(self):
        assert prob_to_weight(0.5, 10) == 5

    def test_plain_rounding(self):
        assert prob_to_weight(0.26, 10) == 3

    def test_half_rounds_away_from_zero(self):
        # rnd(2.5) must give 3 under the half-away convention
        assert prob_to_weight(0.25, 10) == 3
        assert round_half_away(2.5) == 3.0
        assert round_half_away(-2.5) == -3.0

    def test_bounds(self):
        assert prob_to_weight(0.0, 10) == 0
        assert prob_to_weight(1.0, 10) == 10

    def test_round_trip_monotone_non_increasing(self):
        ls = np.linspace(-20, 20, 400)
        ws = prob_to_weight(l_to_prob(ls), 10)
        assert np.all(np.diff(ws) <= 0)


class TestW2L:
    def test_uniform_gives_zero_row(self):
        row = w2l_from_distribution(np.full(11, 1 / 11))
        assert np.array_equal(row, np.zeros(11))

    def test_binomial_closed_form(self):
        # per-bit one-probability 0.2: mass ratio p[w]/p[q-w] = 4^(q-2w)
        from scipy.stats import binom

        pmf = binom.pmf(np.arange(11), 10, 0.2)
        row = w2l_from_distribution(pmf / pmf.sum())
        expected = (10 - 2 * np.arange(11)) * LN4
        assert row == pytest.approx(expected, abs=1e-12)
        assert row[0] == pytest.approx(13.862943611, abs=1e-8)
        assert row[5] == 0.0

    def test_length_one_message(self):
        row = w2l_from_distribution([0.8, 0.2])
        assert row == pytest.approx([LN4, -LN4], abs=1e-15)

    def test_antisymmetry_bit_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            pmf = rng.random(9)
            pmf /= pmf.sum()
            row = w2l_from_distribution(pmf)
            assert np.array_equal(row, -row[::-1])

    def test_zero_mass_handling(self):
        # one-sided zero saturates, double-sided zero maps to 0
        row = w2l_from_distribution([0.5, 0.0, 0.0, 0.0, 0.5], l_max=25.0)
        assert row[1] == 0.0 and row[3] == 0.0
        row = w2l_from_distribution([0.6, 0.4, 0.0], l_max=25.0)
        assert row[0] == 25.0 and row[2] == -25.0

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            w2l_from_distribution([0.5, 0.6])
        with pytest.raises(ValueError):
            w2l_from_distribution([1.5, -0.5])

    def test_clamp(self):
        row = w2l_from_distribution([1.0 - 1e-30, 1e-30], l_max=10.0)
        assert row[0] == 10.0 and row[1] == -10.0


class TestMonotonePass:
    def test_sorts_out_small_inversions(self):
        row = np.array([5.0, 4.0, 4.1, 0.0, -4.1, -4.0, -5.0])
        fixed = enforce_monotone_antisymmetric(row)
        assert np.all(np.diff(fixed) <= 0)
        assert np.array_equal(fixed, -fixed[::-1])

    def test_keeps_monotone_rows(self):
        row = (10 - 2 * np.arange(11)) * LN4
        row = np.clip(row, -25, 25)
        assert enforce_monotone_antisymmetric(row) == pytest.approx(row, abs=1e-12)

    def test_build_pipeline_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            pmf = rng.random(11)
            pmf /= pmf.sum()
            row = build_w2l_row(pmf)
            assert np.array_equal(row, -row[::-1])
            assert np.all(np.diff(row) <= 0)
            assert np.all(np.abs(row) <= 25.0)


class TestSampleVector:
    def test_degenerate_weights(self):
        rng = np.random.default_rng(0)
        assert np.array_equal(sample_vector(0, 7, rng), np.zeros(7, dtype=np.uint8))
        assert np.array_equal(sample_vector(7, 7, rng), np.ones(7, dtype=np.uint8))

    def test_weight_exact_all_pairs_up_to_64(self):
        rng = np.random.default_rng(1)
        for q in range(1, 65):
            for w in range(q + 1):
                vec = sample_vector(w, q, rng)
                assert vec.sum() == w and vec.size == q

    def test_out_of_range(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_vector(5, 4, rng)
        with pytest.raises(ValueError):
            sample_vector(-1, 4, rng)

    def test_positions_uniform(self):
        # weight 1 in length 4: each position should appear ~1/4 of the time
        rng = np.random.default_rng(42)
        counts = np.zeros(4)
        n = 100_000
        for _ in range(n):
            counts += sample_vector(1, 4, rng)
        freqs = counts / n
        assert freqs == pytest.approx(0.25, abs=0.01)


class TestXor:
    def test_self_inverse(self):
        a = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
        assert np.array_equal(xor_vectors(a, a), np.zeros(5, dtype=np.uint8))

    def test_direct(self):
        out = xor_vectors([1, 0, 1, 0], [0, 0, 1, 1])
        assert np.array_equal(out, [1, 0, 0, 1])
        assert out.sum() == 2

    def test_identity(self):
        a = np.array([0, 1, 1, 0], dtype=np.uint8)
        assert np.array_equal(xor_vectors(a, np.zeros(4, dtype=np.uint8)), a)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            xor_vectors([1, 0], [1, 0, 1])

    def test_weight_bounds(self):
        rng = np.random.default_rng(5)
        q = 12
        for _ in range(200):
            wa, wb = rng.integers(0, q + 1, size=2)
            a = sample_vector(int(wa), q, rng)
            b = sample_vector(int(wb), q, rng)
            w = int(xor_vectors(a, b).sum())
            assert abs(int(wa) - int(wb)) <= w <= min(wa + wb, 2 * q - wa - wb)


class TestSyndromeInformation:
    def test_point_mass_is_one(self):
        pmf = np.zeros(11)
        pmf[0] = 1.0
        assert syndrome_information(pmf) == 1.0

    def test_symmetric_is_zero(self):
        assert syndrome_information([0.3, 0.4, 0.3]) == 0.0
        rng = np.random.default_rng(9)
        half = rng.random(5)
        pmf = np.concatenate([half, half[::-1]])
        pmf /= pmf.sum()
        assert syndrome_information(pmf) == 0.0

    def test_worked_case(self):
        assert syndrome_information([0.5, 0.5, 0.0]) == pytest.approx(0.5, abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            pmf = rng.random(8)
            pmf /= pmf.sum()
            assert 0.0 <= syndrome_information(pmf) <= 1.0


class TestQuantizeState:
    def test_edges(self):
        assert quantize_state(0.0, 20) == 0
        assert quantize_state(1.0, 20) == 19
        assert quantize_state(0.999999, 20) == 19
        assert quantize_state(0.05, 20) == 1
        assert quantize_state(0.049999, 20) == 0


class TestFillFromNearest:
    def test_nearest_with_lower_tie_break(self):
        out = fill_from_nearest({3: "a", 6: "b"}, 8)
        assert out == ["a", "a", "a", "a", "a", "b", "b", "b"]
        # equidistant: lower bin wins
        out = fill_from_nearest({2: "a", 4: "b"}, 5)
        assert out[3] == "a"

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            fill_from_nearest({}, 4)


class TestW2LTable:
    def _state_table(self):
        rng = np.random.default_rng(2)
        rows = []
        for _ in range(4):
            pmf = rng.random(11)
            pmf /= pmf.sum()
            rows.append(build_w2l_row(pmf))
        return W2LTable(rows=rows, row_semantics="state", bins=4, design_snr_db=3.0)

    def test_validate_passes(self):
        self._state_table().validate()

    def test_validate_catches_broken_rows(self):
        table = self._state_table()
        table.rows[1] = table.rows[1].copy()
        table.rows[1][0] += 1e-9
        with pytest.raises(ValueError):
            table.validate()

    def test_json_round_trip_exact(self, tmp_path):
        table = self._state_table()
        path = tmp_path / "table.json"
        table.save(path)
        loaded = W2LTable.load(path)
        assert loaded.row_semantics == "state"
        assert loaded.bins == 4
        assert loaded.design_snr_db == 3.0
        for a, b in zip(table.rows, loaded.rows):
            assert np.array_equal(a, b)
        loaded.validate()

    def test_json_schema_fields(self, tmp_path):
        table = self._state_table()
        path = tmp_path / "table.json"
        table.save(path)
        d = json.loads(path.read_text())
        assert set(d) == {"q", "row_semantics", "bin_edges", "rows", "l_max", "design_snr_db"}
        assert d["q"] == 10
        assert len(d["bin_edges"]) == 5

    def test_iteration_lookup_clamps(self):
        rows = [build_w2l_row([0.7, 0.2, 0.1]) for _ in range(3)]
        table = W2LTable(rows=rows, row_semantics="iteration")
        assert np.array_equal(table.row_for_iteration(1), rows[0])
        assert np.array_equal(table.row_for_iteration(3), rows[2])
        assert np.array_equal(table.row_for_iteration(99), rows[2])
        with pytest.raises(ValueError):
            table.row_for_iteration(0)

    def test_state_table_requires_matching_bins(self):
        rows = [np.zeros(11)] * 3
        with pytest.raises(ValueError):
            W2LTable(rows=rows, row_semantics="state", bins=5)
