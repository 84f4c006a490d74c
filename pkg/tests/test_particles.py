import math
import warnings
from collections import Counter

import numpy as np
import pytest

from lookdown import engine, laws, particles, stats
from lookdown.errors import ConfigurationError, SampleSizeError
from lookdown.seeding import rng_from


class TestParticleConfig:
    def test_trailing_ones_stripped(self):
        assert particles.ParticleConfig((5, 2, 1, 1)).levels == (5, 2)
        assert particles.ParticleConfig((1, 1)).z == 0

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            particles.ParticleConfig((2, 5))
        with pytest.raises(ConfigurationError):
            particles.ParticleConfig((4, 4))


class TestRates:
    def test_spec_examples(self):
        assert particles.transition_rates((5, 2)) == [
            ("push", 1, 12), ("push", 2, 2), ("arrival", None, 1)]
        assert particles.transition_rates((2,)) == [
            ("push", 1, 2), ("arrival", None, 1)]
        assert particles.transition_rates(()) == [("arrival", None, 1)]

    def test_total_rate_identity(self):
        for levels in [(), (2,), (7,), (9, 4, 2), (20, 11, 5, 3, 2)]:
            rates = particles.transition_rates(levels)
            total = sum(r for _, _, r in rates)
            expected = laws.comb2(levels[0] + 1) if levels else 1
            assert total == expected


class TestStep:
    def test_empty_goes_to_single(self, rng):
        state, ev = particles.step(particles.ParticleConfig.empty(), rng)
        assert state.levels == (2,)
        assert ev.kind == "arrival"
        assert ev.time > 0

    def test_holding_time_rate(self):
        # state (5,2): holding ~ Exp(15)
        rng = rng_from(5, "hold")
        times = []
        state = particles.ParticleConfig((5, 2))
        for _ in range(20_000):
            _, ev = particles.step(state, rng)
            times.append(ev.time)
        assert np.mean(times) == pytest.approx(1 / 15, rel=0.03)

    def test_branch_frequencies(self):
        rng = rng_from(6, "branch")
        state = particles.ParticleConfig((5, 2))
        kinds = Counter()
        for _ in range(30_000):
            _, ev = particles.step(state, rng)
            kinds[(ev.kind, ev.k)] += 1
        # rates 12 : 2 : 1
        assert kinds[("push", 1)] / 30_000 == pytest.approx(12 / 15, abs=0.01)
        assert kinds[("push", 2)] / 30_000 == pytest.approx(2 / 15, abs=0.01)
        assert kinds[("arrival", None)] / 30_000 == pytest.approx(1 / 15, abs=0.01)

    def test_push_semantics(self, rng):
        state = particles.ParticleConfig((5, 2))
        for _ in range(50):
            new, ev = particles.step(state, rng)
            if ev.kind == "push" and ev.k == 1:
                assert new.levels == (6, 2)
            elif ev.kind == "push" and ev.k == 2:
                assert new.levels == (6, 3)
            else:
                assert new.levels == (6, 3, 2)


class TestSimulate:
    def test_deterministic(self):
        cfg = particles.ParticleSimConfig(particle_cap=200, horizon=50.0, seed=3)
        a = particles.simulate(cfg, record_trajectory=True)
        b = particles.simulate(cfg, record_trajectory=True)
        assert np.array_equal(a.exits, b.exits)
        assert a.trajectory == b.trajectory

    def test_exit_rate_near_one(self):
        cfg = particles.ParticleSimConfig(particle_cap=2_000, horizon=4_000.0,
                                          seed=11, burn_in=30.0)
        run = particles.simulate(cfg)
        rate = run.exits.size / cfg.horizon
        assert rate == pytest.approx(1.0, abs=4 / math.sqrt(cfg.horizon))

    def test_trajectory_replay_valid(self):
        cfg = particles.ParticleSimConfig(particle_cap=50, horizon=120.0, seed=9)
        run = particles.simulate(cfg, record_trajectory=True)
        cur: list[int] = []
        n_exits = 0
        for ev in run.trajectory:
            assert all(a > b for a, b in zip(ev.levels, ev.levels[1:]))
            if ev.kind == "arrival":
                assert ev.levels == tuple(l + 1 for l in cur) + (2,)
            elif ev.kind == "push":
                assert ev.levels == tuple(
                    l + 1 if m < ev.k else l for m, l in enumerate(cur))
            else:  # exit: some push of 1..k crossed the cap, leader removed
                n_exits += 1
                candidates = []
                for k in range(1, len(cur) + 1):
                    bumped = [l + 1 if m < k else l for m, l in enumerate(cur)]
                    if bumped[0] >= 50:
                        candidates.append(tuple(bumped[1:]))
                bumped_arrival = [l + 1 for l in cur] + [2]
                if bumped_arrival and bumped_arrival[0] >= 50:
                    candidates.append(tuple(bumped_arrival[1:]))
                assert ev.levels in candidates
            cur = list(ev.levels)
        assert n_exits == run.exits.size > 50

    def test_burn_in_discards_prefix(self):
        cfg = particles.ParticleSimConfig(particle_cap=100, horizon=30.0,
                                          seed=4, burn_in=10.0)
        run = particles.simulate(cfg, record_trajectory=True,
                                 sample_spacing=1.0)
        assert all(ev.time >= 0 for ev in run.trajectory)
        assert np.all(run.exits >= 0)
        assert np.all(np.asarray(run.sample_times) >= 0)

    def test_residual_tail_mode(self):
        cfg = particles.ParticleSimConfig(particle_cap=1_000, horizon=300.0,
                                          seed=13)
        plain = particles.simulate(cfg)
        adj = particles.simulate(cfg, residual_tail=True)
        assert plain.exit_time_bias == pytest.approx(2 / 1_000)
        assert adj.exit_time_bias == 0.0
        shift = adj.exits - plain.exits
        assert np.all(shift > 0)
        assert shift.mean() == pytest.approx(2 / 1_000, rel=0.3)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            particles.ParticleSimConfig(particle_cap=5, horizon=10.0, seed=0)
        with pytest.raises(ConfigurationError):
            particles.ParticleSimConfig(particle_cap=100, horizon=-1.0, seed=0)


class TestStationarySampler:
    def test_reference_probabilities(self):
        rng = rng_from(21, "pi")
        n = 150_000
        cfgs = particles.sample_stationary_many(rng, n)
        p_empty = sum(1 for c in cfgs if not c) / n
        p_32 = sum(1 for c in cfgs if c == (3, 2)) / n
        assert abs(p_empty - 1 / 3) < 4 * math.sqrt((1 / 3) * (2 / 3) / n)
        assert abs(p_32 - 1 / 30) < 4 * math.sqrt((1 / 30) * (29 / 30) / n)

    def test_matches_pi_lambda_chi2(self):
        rng = rng_from(22, "pi")
        cfgs = particles.sample_stationary_many(rng, 60_000)
        cells = [c if (len(c) <= 3 and (not c or c[0] <= 10)) else "other"
                 for c in cfgs]
        rep = stats.chi_square_gof(stats.empirical_pmf(cells),
                                   laws.pi_table(10, 3))
        assert rep.passed

    @pytest.mark.slow
    def test_matches_long_run_occupation(self):
        cfg = particles.ParticleSimConfig(particle_cap=10_000, horizon=30_000.0,
                                          seed=23, burn_in=50.0)
        run = particles.simulate(cfg, sample_spacing=5.0)
        occ = [c if (len(c) <= 3 and (not c or c[0] <= 8)) else "other"
               for c in run.sample_configs]
        draws = [c if (len(c) <= 3 and (not c or c[0] <= 8)) else "other"
                 for c in particles.sample_stationary_many(
                     rng_from(24, "pi"), len(occ))]
        rep = stats.chi_square_two_sample(occ, draws)
        assert rep.passed


class TestExitStatistics:
    def test_summary_fields(self):
        cfg = particles.ParticleSimConfig(particle_cap=2_000, horizon=2_000.0,
                                          seed=31, burn_in=30.0)
        run = particles.simulate(cfg)
        summ = particles.exit_gap_statistics(run.exits)
        assert summ.n_gaps >= 100
        assert summ.mean_gap == pytest.approx(1.0, abs=0.15)
        assert summ.ks_report.passed
        assert abs(summ.lag1_autocorrelation) < 4 / math.sqrt(summ.n_gaps)
        assert abs(summ.dispersion - 1) < 4 * math.sqrt(2 / summ.n_windows)

    def test_too_few_exits(self):
        with pytest.raises(SampleSizeError):
            particles.exit_gap_statistics(np.arange(50, dtype=float))

    def test_post_exit_configs_in_equilibrium(self):
        cfg = particles.ParticleSimConfig(particle_cap=5_000, horizon=6_000.0,
                                          seed=32, burn_in=30.0)
        run = particles.simulate(cfg, collect_exit_configs=True)
        cells = [c if (len(c) <= 3 and (not c or c[0] <= 8)) else "other"
                 for c in run.exit_configs]
        rep = stats.chi_square_gof(stats.empirical_pmf(cells),
                                   laws.pi_table(8, 3))
        assert rep.passed


@pytest.mark.slow
class TestCouplingWithLookdown:
    def test_L_Z_law_matches_stationary_sampler(self):
        # (L, Z) read off look-down fixation curves at fixed times vs the
        # exact stationary sampler: two-sample chi-square on a joint cell map
        cfg = engine.EngineConfig(level_cap=100, t_start=0.0, t_end=1_500.0,
                                  burn_in=30.0, seed=77)
        stream = engine.generate_event_stream(cfg)
        lookdown_cells = []
        for t in np.arange(5.0, 1_500.0, 1.5):
            obs = engine.observables_at(stream, float(t))
            l = obs.fixation_level if obs.fixation_level <= 8 else "L>8"
            z = obs.curve_count if obs.curve_count <= 3 else ">3"
            lookdown_cells.append((l, z))
        sampler_cells = []
        rng = rng_from(78, "couple")
        for _ in range(len(lookdown_cells)):
            levels = particles.sample_stationary(rng).levels
            l = levels[0] if levels else 1
            l = l if l <= 8 else "L>8"
            z = len(levels) if len(levels) <= 3 else ">3"
            sampler_cells.append((l, z))
        rep = stats.chi_square_two_sample(lookdown_cells, sampler_cells)
        assert rep.passed
