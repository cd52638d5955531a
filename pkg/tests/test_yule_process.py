import io
import math

import numpy as np
import pytest
from scipy import integrate

from padyule import graph_process as G
from padyule import yule_process as Y
from padyule.errors import DomainError
from padyule.params import ModelParams

P121 = ModelParams(1, 2, 1)


class TestGillespieStep:
    def test_event_shares_from_single_household(self):
        p = ModelParams(1, 1, 1)
        counts, hold = Y.embedded_transition_frequencies([1], p, 300_000, seed=2)
        n = sum(counts.values())
        for word in [(2,), (0,), (1, 1)]:
            share = counts[word] / n
            assert abs(share - 1 / 3) < 4 * math.sqrt((1 / 3) * (2 / 3) / n)
        # holding time is Exp(3)
        assert abs(hold.mean() - 1 / 3) < 4 * (1 / 3) / math.sqrt(hold.size)

    def test_extinct_household_stays_extinct(self):
        counts, _ = Y.embedded_transition_frequencies([0, 2], P121, 100_000, seed=1)
        assert all(w[0] == 0 for w in counts)

    def test_mean_holding_pure_birth(self):
        _, hold = Y.embedded_transition_frequencies([1], ModelParams(1, 2, 0), 100_000, seed=8)
        assert abs(hold.mean() - 1 / 3) < 3 * (1 / 3) / math.sqrt(hold.size)

    def test_holding_is_exponential(self):
        from scipy import stats
        _, hold = Y.embedded_transition_frequencies([2, 1], P121, 50_000, seed=5)
        rate = 3 * 3 + 2 * 1
        assert stats.kstest(hold, "expon", args=(0, 1 / rate)).pvalue > 1e-3

    def test_step_api(self):
        s, e = Y.gillespie_step(Y.initial_state(), P121, np.random.default_rng(0))
        assert s.census_index == 1 and s.clock == pytest.approx(e.holding_time)
        assert e.holding_time > 0

    @pytest.mark.parametrize("state", [[1], [2], [1, 1]])
    def test_embedded_kernel_matches_graph(self, state):
        trials = 1_000_000
        probs = G.transition_probabilities(G.DegreeState(state), P121)
        counts, _ = Y.embedded_transition_frequencies(state, P121, trials, seed=17)
        assert set(counts) <= set(probs)
        for word, p in probs.items():
            sd = math.sqrt(trials * p * (1 - p))
            assert abs(counts.get(word, 0) - trials * p) <= 4 * sd


class TestSimulateCensuses:
    def test_single_census_pure_birth(self):
        for seed in range(20):
            log = Y.simulate_censuses(ModelParams(1, 1, 0), 1, seed)
            assert Y.embedded_chain(log)[-1] in [(2,), (1, 1)]

    @pytest.mark.parametrize("seed", range(5))
    def test_census_times_increasing(self, seed):
        log = Y.simulate_censuses(P121, 2000, seed)
        assert np.all(np.diff(log.census_times) > 0)
        assert set(log.formation_times) <= set(log.census_times)

    def test_deterministic(self):
        a = Y.simulate_censuses(P121, 500, 3)
        b = Y.simulate_censuses(P121, 500, 3)
        np.testing.assert_array_equal(a.clocks, b.clocks)
        assert Y.embedded_chain(a) == Y.embedded_chain(b)

    def test_bad_count(self):
        with pytest.raises(DomainError):
            Y.simulate_censuses(P121, 0, 1)

    def test_first_formation_mean(self):
        lam1 = 1.5
        p = ModelParams(lam1, 0.5, 0.5)
        firsts = np.array([Y.simulate_censuses(p, 2000, 7, trajectory=k).formation_times[0]
                           for k in range(20_000)])
        se = firsts.std(ddof=1) / math.sqrt(firsts.size)
        assert abs(firsts.mean() - 1 / lam1) < 3 * se

    def test_formation_spacings(self):
        p = ModelParams(1, 1, 1)
        times = np.array([Y.simulate_censuses(p, 400, 5, trajectory=k).formation_times[:3]
                          for k in range(10_000)])
        gaps = np.diff(np.hstack([np.zeros((times.shape[0], 1)), times]), axis=1)
        for t in (1, 2, 3):
            g = gaps[:, t - 1]
            se = g.std(ddof=1) / math.sqrt(g.size)
            assert abs(g.mean() - 1 / t) < 3 * se


class TestEmbeddedChain:
    def test_initial_log(self):
        assert Y.embedded_chain(Y.CensusLog.initial()) == [(1,)]

    def test_word_shape(self):
        chain = Y.embedded_chain(Y.simulate_censuses(P121, 3000, 4))
        for a, b in zip(chain, chain[1:]):
            assert len(b) >= len(a)
            if len(b) == len(a) + 1:
                assert b[:-1] == a and b[-1] == 1
            else:
                diffs = [y - x for x, y in zip(a, b) if y != x]
                assert diffs in ([1], [-1])

    def test_extinct_households_persist(self):
        chain = Y.embedded_chain(Y.simulate_censuses(ModelParams(1, 1, 2), 3000, 4))
        for a, b in zip(chain, chain[1:]):
            assert all(b[i] == 0 for i, x in enumerate(a) if x == 0)

    def test_state_at_matches_replay(self):
        log = Y.simulate_censuses(P121, 300, 6)
        states = log.jump_states
        for t in (0, 1, 17, 300):
            assert log.state_at(t) == states[t]
            assert states[t].census_index == t

    def test_state_at_time(self):
        log = Y.simulate_censuses(P121, 50, 6)
        t = log.census_times
        assert Y.state_at_time(log, 0.0).census_index == 0
        assert Y.state_at_time(log, (t[4] + t[5]) / 2).census_index == 4
        assert Y.state_at_time(log, t[5]).census_index == 5
        assert Y.state_at_time(log, t[-1] + 10).census_index == 50

    def test_census_csv(self):
        log = Y.simulate_censuses(P121, 5, 2)
        buf = io.StringIO()
        Y.write_census_log(log, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "census_index,clock,kind,household" and len(lines) == 6
        assert [float(line.split(",")[1]) for line in lines[1:]] == log.clocks.tolist()


class TestUniformHousehold:
    def test_single(self):
        rng = np.random.default_rng(0)
        assert all(Y.sample_uniform_household_size(Y.initial_state(), rng) == 1 for _ in range(20))

    def test_zero_four(self):
        rng = np.random.default_rng(5)
        s = Y.YuleState([0, 4])
        draws = np.array([Y.sample_uniform_household_size(s, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 2.0) < 0.02
        share = np.mean(draws == 0)
        assert abs(share - 0.5) < 4 * math.sqrt(0.25 / draws.size)


class TestFormationDensity:
    @pytest.mark.parametrize("u", [0.5, 1.0, 5.0])
    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    def test_normalized(self, u, lam):
        val, _ = integrate.quad(lambda s: Y.formation_density(u, s, lam), 0, u, epsabs=1e-14)
        assert abs(val - 1) < 1e-10

    def test_increasing(self):
        s = np.linspace(0, 3, 100)
        f = Y.formation_density(3.0, s, 1.2)
        assert np.all(np.diff(f) > 0)

    def test_small_rate_uniform(self):
        s = np.linspace(0, 2, 50)
        assert np.max(np.abs(Y.formation_density(2.0, s, 1e-8) - 0.5)) < 1e-6

    @pytest.mark.parametrize("args", [(0.0, 0.0, 1.0), (1.0, 2.0, 1.0), (1.0, -0.1, 1.0),
                                      (1.0, 0.5, 0.0)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            Y.formation_density(*args)

    def test_uniform_household_formation_times(self):
        # households other than the founding one have iid formation times with
        # the density above, given how many formed by time u
        p = ModelParams(1.0, 1.0, 0.0)
        rng = np.random.default_rng(3)
        u = 3.0
        picks = []
        for k in range(4000):
            log = Y.simulate_censuses(p, 5000, 11, trajectory=k)
            assert log.census_times[-1] > u
            f = log.formation_times
            f = f[f <= u]
            if f.size:
                picks.append(f[rng.integers(f.size)])
        picks = np.array(picks)
        mean, _ = integrate.quad(lambda s: s * Y.formation_density(u, s, 1.0), 0, u)
        se = picks.std(ddof=1) / math.sqrt(picks.size)
        assert abs(picks.mean() - mean) < 4 * se
