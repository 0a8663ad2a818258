import itertools
import json

import numpy as np
import pytest
from scipy.special import expit

from bvmp.channel import ChannelParams
from bvmp.density import (
    WeightDistribution,
    build_iteration_tables,
    build_state_tables,
    channel_weight_distribution,
    cnd_de_step,
    hypergeometric_xor_fold,
    run_de,
    syndrome_de,
    vnd_de_step,
    weight_boundaries,
)
from bvmp.messages import build_w2l_row, quantize_state, syndrome_information


def enumerate_xor_fold(q, pmf1, pmf2):
    """Brute-force oracle: average over all uniform-position vector pairs."""
    out = np.zeros(q + 1)
    vectors = list(itertools.product([0, 1], repeat=q))
    by_weight = {w: [v for v in vectors if sum(v) == w] for w in range(q + 1)}
    for w1 in range(q + 1):
        for w2 in range(q + 1):
            mass = pmf1[w1] * pmf2[w2]
            if mass == 0:
                continue
            pairs = [(a, b) for a in by_weight[w1] for b in by_weight[w2]]
            for a, b in pairs:
                u = sum(x ^ y for x, y in zip(a, b))
                out[u] += mass / len(pairs)
    return out


def random_dist(q, rng):
    pmf = rng.random(q + 1)
    return WeightDistribution(pmf / pmf.sum())


class TestXorFold:
    def test_matches_enumeration_for_all_weight_pairs(self):
        for q in (1, 2, 3, 4):
            for w1 in range(q + 1):
                for w2 in range(q + 1):
                    p1 = WeightDistribution.point_mass(w1, q)
                    p2 = WeightDistribution.point_mass(w2, q)
                    got = hypergeometric_xor_fold(p1, p2).pmf
                    want = enumerate_xor_fold(q, p1.pmf, p2.pmf)
                    assert np.abs(got - want).max() < 1e-12

    def test_xor_with_zero_vector_is_identity(self):
        rng = np.random.default_rng(0)
        p1 = random_dist(6, rng)
        p2 = WeightDistribution.point_mass(0, 6)
        assert hypergeometric_xor_fold(p1, p2).pmf == pytest.approx(p1.pmf, abs=1e-14)

    def test_two_single_weight_vectors(self):
        p = WeightDistribution.point_mass(1, 2)
        out = hypergeometric_xor_fold(p, p).pmf
        assert out == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)

    def test_all_ones_complements(self):
        p1 = WeightDistribution.point_mass(1, 3)
        p2 = WeightDistribution.point_mass(3, 3)
        out = hypergeometric_xor_fold(p1, p2).pmf
        assert out == pytest.approx([0, 0, 1, 0], abs=1e-15)

    def test_commutative_associative_normalized(self):
        rng = np.random.default_rng(1)
        for q in (2, 5, 8):
            a, b, c = (random_dist(q, rng) for _ in range(3))
            ab = hypergeometric_xor_fold(a, b)
            ba = hypergeometric_xor_fold(b, a)
            assert np.abs(ab.pmf - ba.pmf).max() < 1e-12
            abc1 = hypergeometric_xor_fold(ab, c)
            abc2 = hypergeometric_xor_fold(a, hypergeometric_xor_fold(b, c))
            assert np.abs(abc1.pmf - abc2.pmf).max() < 1e-12
            assert abs(abc1.pmf.sum() - 1.0) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hypergeometric_xor_fold(
                WeightDistribution.point_mass(0, 2), WeightDistribution.point_mass(0, 3)
            )


class TestCndDeStep:
    def test_degree_two_is_identity(self):
        rng = np.random.default_rng(2)
        p = random_dist(5, rng)
        assert cnd_de_step(p, 2).pmf == pytest.approx(p.pmf, abs=1e-15)

    def test_degree_three_single_weight(self):
        p = WeightDistribution.point_mass(1, 2)
        assert cnd_de_step(p, 3).pmf == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)

    def test_symmetry_preserved(self):
        pmf = np.array([0.1, 0.25, 0.3, 0.25, 0.1])
        out = cnd_de_step(WeightDistribution(pmf), 6).pmf
        assert out == pytest.approx(out[::-1], abs=1e-14)


class TestSyndromeDe:
    def test_point_mass_zero(self):
        p = WeightDistribution.point_mass(0, 10)
        _, i_s = syndrome_de(p, 6)
        assert i_s == 1.0

    def test_symmetric_input(self):
        pmf = np.array([0.2, 0.3, 0.3, 0.2])
        _, i_s = syndrome_de(WeightDistribution(pmf), 4)
        assert i_s == 0.0

    def test_worked_case_q2(self):
        p = WeightDistribution.point_mass(1, 2)
        dist, i_s = syndrome_de(p, 2)
        assert dist.pmf == pytest.approx([0.5, 0.0, 0.5], abs=1e-15)
        assert i_s == 0.0


class TestVndDeStep:
    def test_noiseless_limit_concentrates_at_zero(self):
        params = ChannelParams(60.0, 0.5)
        c2v = WeightDistribution(np.full(11, 1 / 11))
        out = vnd_de_step(c2v, np.zeros(11), 3, params, 10)
        assert out.pmf[0] == pytest.approx(1.0, abs=1e-12)

    def test_zero_row_equals_channel_distribution(self):
        params = ChannelParams(2.0, 0.5)
        c2v = WeightDistribution(np.full(11, 1 / 11))
        out = vnd_de_step(c2v, np.zeros(11), 3, params, 10)
        want = channel_weight_distribution(params, 10)
        assert out.pmf == pytest.approx(want.pmf, abs=1e-14)

    def test_degree_one_has_no_apriori_terms(self):
        params = ChannelParams(2.0, 0.5)
        rng = np.random.default_rng(3)
        pmf = rng.random(11)
        c2v = WeightDistribution(pmf / pmf.sum())
        row = build_w2l_row(c2v.pmf)
        out = vnd_de_step(c2v, row, 1, params, 10)
        want = channel_weight_distribution(params, 10)
        assert out.pmf == pytest.approx(want.pmf, abs=1e-14)

    def test_row_length_mismatch(self):
        params = ChannelParams(2.0, 0.5)
        with pytest.raises(ValueError):
            vnd_de_step(WeightDistribution.point_mass(0, 4), np.zeros(4), 3, params, 4)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_monte_carlo_oracle(self, seed):
        """Simulated variable-node updates must match the exact computation."""
        rng = np.random.default_rng(seed)
        q_in, q_out, dv = 10, 10, 3
        ebno = float(rng.uniform(0.5, 3.5))
        params = ChannelParams(ebno, 0.5)
        pmf = rng.random(q_in + 1) ** 2
        c2v = WeightDistribution(pmf / pmf.sum())
        row = build_w2l_row(c2v.pmf)

        exact = vnd_de_step(c2v, row, dv, params, q_out).pmf

        n = 1_000_000
        w_in = rng.choice(q_in + 1, size=(n, dv - 1), p=c2v.pmf)
        l_sum = row[w_in].sum(axis=1)
        l_ch = params.llr_mean + params.llr_std * rng.standard_normal(n)
        w_out = np.floor(expit(-(l_ch + l_sum)) * q_out + 0.5).astype(int)
        empirical = np.bincount(w_out, minlength=q_out + 1) / n

        tv = 0.5 * np.abs(empirical - exact).sum()
        assert tv < 0.005


class TestBoundaries:
    def test_antisymmetric_thresholds(self):
        t = weight_boundaries(10)
        assert t[0] == pytest.approx(np.log(19.0), abs=1e-15)
        assert t == pytest.approx(-t[::-1], abs=1e-12)

    def test_interval_semantics_match_rounding(self):
        # weights computed from sampled L-values agree with the intervals
        q = 7
        t = weight_boundaries(q)
        for l in np.linspace(-8, 8, 101):
            w_direct = int(np.floor(expit(-l) * q + 0.5))
            w_interval = int((t >= l).sum())  # T_w = (t[w], t[w-1]]
            assert w_direct == w_interval


class TestRunDe:
    def test_convergence_above_threshold(self):
        trace = run_de(ChannelParams(3.0, 0.5), 3, 6, 10, 100)
        assert trace.converged
        i_s = [st.i_s for st in trace.states]
        assert all(b > a for a, b in zip(i_s, i_s[1:]))
        assert len(trace.states) <= 100

    def test_plateau_below_threshold(self):
        trace = run_de(ChannelParams(0.0, 0.5), 3, 6, 10, 100)
        assert not trace.converged
        assert trace.states[-1].i_s < 0.2

    def test_bootstrap_state(self):
        params = ChannelParams(3.0, 0.5)
        trace = run_de(params, 3, 6, 10, 100)
        want = channel_weight_distribution(params, 10)
        assert trace.states[0].v2c.pmf == pytest.approx(want.pmf, abs=1e-15)

    def test_state_self_consistency(self):
        trace = run_de(ChannelParams(3.0, 0.5), 3, 6, 10, 100)
        for st in trace.states:
            assert st.i_s == pytest.approx(syndrome_information(st.syndrome.pmf), abs=1e-12)
            assert st.q == 10
        assert [st.iteration for st in trace.states] == list(
            range(1, len(trace.states) + 1)
        )

    def test_variable_length_schedule(self):
        trace = run_de(ChannelParams(3.0, 0.5), 3, 6, [2, 4, 10, 10], 6)
        assert [st.q for st in trace.states] == [2, 4, 10, 10, 10, 10]

    def test_trace_serialization(self, tmp_path):
        trace = run_de(ChannelParams(3.0, 0.5), 3, 6, 10, 100)
        path = tmp_path / "trace.json"
        trace.save(path)
        d = json.loads(path.read_text())
        assert d["dv"] == 3 and d["dc"] == 6 and d["ebno_db"] == 3.0
        assert len(d["states"]) == len(trace.states)
        first = d["states"][0]
        assert set(first) == {"iteration", "q", "i_s", "v2c_pmf", "c2v_pmf", "syndrome_pmf"}


@pytest.fixture(scope="module")
def trace():
    return run_de(ChannelParams(3.0, 0.5), 3, 6, 10, 100)


class TestTableBuilders:

    def test_iteration_table_rows(self, trace):
        table = build_iteration_tables(trace)
        table.validate()
        assert table.row_semantics == "iteration"
        assert table.num_rows == len(trace.states) <= 100
        assert np.array_equal(table.rows[0], build_w2l_row(trace.states[0].c2v.pmf))
        assert table.design_snr_db == 3.0

    def test_symmetric_c2v_gives_zero_row(self):
        pmf = np.array([0.25, 0.25, 0.25, 0.25])
        assert np.array_equal(build_w2l_row(pmf), np.zeros(4))

    def test_state_table_rows(self, trace):
        table = build_state_tables(trace, bins=20)
        table.validate()
        assert table.row_semantics == "state"
        assert table.num_rows == 20
        populated = {quantize_state(st.i_s, 20) for st in trace.states}
        assert len(populated) <= 20

    def test_single_iteration_trace_fills_all_bins(self, trace):
        import dataclasses

        single = dataclasses.replace(trace, states=trace.states[:1])
        table = build_state_tables(single, bins=8)
        for row in table.rows[1:]:
            assert np.array_equal(row, table.rows[0])

    def test_averaging_on_collision(self, trace):
        import dataclasses

        # two iterations forced into one bin: row is built from the mean pmf
        two = dataclasses.replace(trace, states=trace.states[:2])
        table = build_state_tables(two, bins=2)
        b0 = quantize_state(two.states[0].i_s, 2)
        assert b0 == quantize_state(two.states[1].i_s, 2) == 0
        want = build_w2l_row(
            np.mean([two.states[0].c2v.pmf, two.states[1].c2v.pmf], axis=0)
        )
        assert np.array_equal(table.rows[0], want)
