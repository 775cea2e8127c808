"""Monte Carlo sampler: elementary updates, python/compiled bit-identity,
worker invariance, distributional laws, censoring semantics, serialization.
"""
import math

import numpy as np
import pytest

from kol import _philox, ratefn, stats
from kol.errors import ConfigurationError, InvalidSpecError
from kol.sde import (
    OUParams,
    SampleStream,
    SimConfig,
    ou_exact_transition,
    read_dataset,
    sample_waiting_time,
    simulate_batch,
    write_dataset,
)

SQRT2 = math.sqrt(2.0)
UNIT_RATE = ratefn.PiecewiseConstant(c_plus=1.0)


class TestElementaryUpdates:
    def test_em_step_literal(self):
        from kol.sde import clock_step, em_step
        x, eps, dt, db = 0.37, 0.2, 1e-3, -0.011
        assert em_step(x, eps, dt, db) == x - eps * x * dt + SQRT2 * db
        assert clock_step(1.5, 0.8, 1e-3) == 1.5 + 0.8 * 1e-3

    def test_exact_transition_moments(self):
        # deterministic formula: mean factor e^{-eps t}, sd from -expm1
        x0, eps, t = 2.0, 0.5, 3.0
        mean = ou_exact_transition(x0, eps, t, 0.0)
        assert mean == pytest.approx(x0 * math.exp(-eps * t), rel=1e-15)
        sd = ou_exact_transition(0.0, eps, t, 1.0)
        assert sd == pytest.approx(
            math.sqrt(-math.expm1(-2.0 * eps * t) / eps), rel=1e-15)

    def test_exact_transition_driftfree_limit(self):
        t, z = 2.0, 0.7
        free = ou_exact_transition(1.0, 0.0, t, z)
        assert free == 1.0 + math.sqrt(2.0 * t) * z
        # eps -> 0 limit is continuous thanks to expm1
        tiny = ou_exact_transition(1.0, 1e-12, t, z)
        assert tiny == pytest.approx(free, rel=1e-10)

    def test_exact_transition_domain(self):
        from kol.errors import DomainError
        with pytest.raises(DomainError):
            ou_exact_transition(0.0, 0.1, 0.0, 0.0)
        with pytest.raises(DomainError):
            ou_exact_transition(0.0, -0.1, 1.0, 0.0)

    def test_em_chain_moments_match_discrete_recursion(self):
        # vectorized EM chain vs the exact moments of its own recursion:
        # mean_k = x0 (1 - eps dt)^k, var_k = 2 dt (1-(1-eps dt)^{2k})/(1-(1-eps dt)^2)
        rng = np.random.default_rng(42)
        n, k, eps, dt, x0 = 40_000, 1500, 0.5, 1e-3, 1.5
        x = np.full(n, x0)
        sdt = math.sqrt(dt)
        for _ in range(k):
            x = x - eps * x * dt + SQRT2 * sdt * rng.standard_normal(n)
        r = 1.0 - eps * dt
        mean_k = x0 * r ** k
        var_k = 2.0 * dt * (1.0 - r ** (2 * k)) / (1.0 - r * r)
        se_mean = math.sqrt(var_k / n)
        assert abs(x.mean() - mean_k) <= 5.0 * se_mean
        se_var = var_k * math.sqrt(2.0 / (n - 1))
        assert abs(x.var() - var_k) <= 5.0 * se_var


RATE_FAMILIES = [
    ratefn.PiecewiseConstant(c_plus=1.0),
    ratefn.Arctan(stiffness=1.5, offset=math.pi / 2.0),
    ratefn.Exponential(prefactor=0.5, alpha0=2.0, y0=1.0, max_rate=30.0),
    ratefn.Tabulated(knots=((-1.0, 0.05), (0.0, 0.6), (2.0, 2.0))),
]


class TestBitIdentity:
    @pytest.mark.parametrize("rate", RATE_FAMILIES,
                             ids=lambda r: type(r).__name__)
    def test_python_reference_equals_compiled(self, rate):
        params = OUParams(eps=0.3, x0=0.2)
        cfg = SimConfig(dt=1e-3, n_samples=48, t_max=3.0, seed=99)
        batch = simulate_batch(params, rate, cfg)
        for i in range(cfg.n_samples):
            ref = sample_waiting_time(params, rate, cfg, SampleStream(99, i))
            got = batch.outcomes[i]
            assert got.tau == ref.tau  # bitwise
            assert got.censored == ref.censored
            assert got.steps == ref.steps

    @pytest.mark.parametrize("workers", [1, 2, 3, 7])
    def test_worker_count_invariance(self, workers):
        params = OUParams(eps=0.05)
        cfg = SimConfig(dt=1e-3, n_samples=333, t_max=10.0, seed=5,
                        workers=workers)
        ds = simulate_batch(params, UNIT_RATE, cfg)
        base = simulate_batch(params, UNIT_RATE,
                              SimConfig(dt=1e-3, n_samples=333, t_max=10.0,
                                        seed=5, workers=1))
        assert np.array_equal(ds.taus, base.taus)
        assert np.array_equal(ds.censored, base.censored)
        assert np.array_equal(ds.steps, base.steps)

    def test_seed_changes_data(self):
        cfg = dict(dt=1e-3, n_samples=64, t_max=5.0)
        a = simulate_batch(OUParams(0.0), UNIT_RATE, SimConfig(seed=1, **cfg))
        b = simulate_batch(OUParams(0.0), UNIT_RATE, SimConfig(seed=2, **cfg))
        assert not np.array_equal(a.taus, b.taus)

    def test_sample_substreams_do_not_overlap(self):
        # tau of sample i depends only on (seed, i): simulating a prefix
        # then a larger batch reproduces the shared indices bitwise
        cfg_small = SimConfig(dt=1e-3, n_samples=10, t_max=4.0, seed=3)
        cfg_big = SimConfig(dt=1e-3, n_samples=40, t_max=4.0, seed=3)
        small = simulate_batch(OUParams(0.1), UNIT_RATE, cfg_small)
        big = simulate_batch(OUParams(0.1), UNIT_RATE, cfg_big)
        assert np.array_equal(small.taus, big.taus[:10])


class TestDistributionalLaws:
    def test_constant_rate_gives_exponential_law(self):
        # Arctan with zero stiffness is a spatially constant rate c = 2.0;
        # the waiting time is then Exp(c) up to the O(dt) grid rounding.
        # Exp(1) thresholds are bounded by 53 log 2, so t_max = 40 > 36.8/c
        # guarantees zero censoring.
        c = 2.0
        rate = ratefn.Arctan(stiffness=0.0, offset=c)
        cfg = SimConfig(dt=1e-3, n_samples=10_000, t_max=40.0, seed=77)
        ds = simulate_batch(OUParams(eps=0.0), rate, cfg)
        assert ds.n_censored == 0
        d = stats.ks_distance(ds, lambda t: -math.expm1(-c * t))
        # 99% KS band plus the c*dt discretization skew
        band = stats.KS_COEFF_99 / math.sqrt(cfg.n_samples) + c * cfg.dt
        assert d <= band
        mean = ds.taus.mean()
        se = ds.taus.std() / math.sqrt(cfg.n_samples)
        # discrete grid biases the mean up by about dt/2
        assert abs(mean - (1.0 / c + cfg.dt / 2.0)) <= 4.0 * se

    def test_constant_rate_taus_match_thresholds_exactly(self):
        # with a constant rate the firing step is ceil(gamma/(c dt)) up to
        # float accumulation at the boundary; check exact agreement on the
        # overwhelming majority and one-step slack everywhere
        c = 2.0
        rate = ratefn.Arctan(stiffness=0.0, offset=c)
        cfg = SimConfig(dt=1e-3, n_samples=2_000, t_max=40.0, seed=13)
        ds = simulate_batch(OUParams(eps=0.0), rate, cfg)
        exact = 0
        for i, o in enumerate(ds.outcomes):
            gamma = _philox.exp1_from_raw(_philox.raw_draw(13, i, 0))
            k_pred = max(1, int(math.ceil(gamma / (c * cfg.dt))))
            assert abs(o.steps - k_pred) <= 1
            exact += o.steps == k_pred
        assert exact >= 0.999 * cfg.n_samples

    def test_tau_on_grid_and_positive(self):
        ds = simulate_batch(OUParams(eps=0.0), UNIT_RATE,
                            SimConfig(dt=1e-3, n_samples=500, t_max=5.0,
                                      seed=21))
        k = np.round(ds.taus / 1e-3).astype(int)
        assert np.all(np.abs(k * 1e-3 - ds.taus) < 1e-12)
        assert np.all(ds.taus >= 1e-3 - 1e-15)
        assert np.array_equal(k[~ds.censored], ds.steps[~ds.censored])


class TestCensoring:
    def test_zero_rate_censors_everything(self):
        rate = ratefn.PiecewiseConstant(c_plus=0.0)
        cfg = SimConfig(dt=1e-3, n_samples=16, t_max=0.25, seed=1)
        ds = simulate_batch(OUParams(eps=0.0), rate, cfg)
        assert ds.n_censored == 16
        assert np.all(ds.taus == 0.25)
        assert np.all(ds.steps == 250)

    def test_longer_horizon_only_resolves_censored(self):
        cfg5 = SimConfig(dt=1e-3, n_samples=400, t_max=5.0, seed=9)
        cfg10 = SimConfig(dt=1e-3, n_samples=400, t_max=10.0, seed=9)
        a = simulate_batch(OUParams(eps=0.5), UNIT_RATE, cfg5)
        b = simulate_batch(OUParams(eps=0.5), UNIT_RATE, cfg10)
        assert b.n_censored <= a.n_censored
        fired = ~a.censored
        assert np.array_equal(a.taus[fired], b.taus[fired])
        # a sample censored at 5 either fires later or is censored at 10
        assert np.all(b.taus[a.censored] >= 5.0)

    def test_default_horizon_resolution(self):
        cfg = SimConfig(dt=1e-3)
        assert cfg.effective_t_max(OUParams(eps=0.01)) == 1000.0
        assert cfg.effective_t_max(OUParams(eps=0.0)) == 10_000.0

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            SimConfig(dt=0.0)
        with pytest.raises(ConfigurationError):
            SimConfig(n_samples=0)
        with pytest.raises(ConfigurationError):
            SimConfig(t_max=1e-6)  # below one step
        with pytest.raises(ConfigurationError):
            SimConfig(seed=2**64)
        with pytest.raises(ConfigurationError):
            SimConfig(workers=0)
        with pytest.raises(InvalidSpecError):
            OUParams(eps=-1.0)

    def test_inadmissible_rate_rejected(self):
        class Weird:
            pass
        with pytest.raises(InvalidSpecError):
            simulate_batch(OUParams(0.0), Weird(),
                           SimConfig(n_samples=2, t_max=0.1))


class TestSerialization:
    def make(self):
        cfg = SimConfig(dt=1e-3, n_samples=37, t_max=2.0, seed=4, workers=2)
        return simulate_batch(OUParams(eps=0.2, x0=-0.5),
                              RATE_FAMILIES[3], cfg)

    def test_round_trip(self, tmp_path):
        ds = self.make()
        csv = tmp_path / "run.csv"
        side = write_dataset(ds, str(csv))
        back = read_dataset(str(csv))
        assert np.array_equal(back.taus, ds.taus)
        assert np.array_equal(back.censored, ds.censored)
        assert np.array_equal(back.steps, ds.steps)
        assert back.config_hash() == ds.config_hash()
        assert back.manifest() == ds.manifest()
        assert back.rate == ds.rate
        assert side.endswith(".json")

    def test_file_headers(self, tmp_path):
        import json
        ds = self.make()
        csv = tmp_path / "run.csv"
        side = write_dataset(ds, str(csv))
        lines = csv.read_text().splitlines()
        assert lines[0].startswith("# kol_version=")
        assert lines[1] == f"# config_hash={ds.config_hash()}"
        assert lines[2] == "index,tau,censored,steps"
        meta = json.loads(open(side).read())
        assert meta["config_hash"] == ds.config_hash()
        assert "kol_version" in meta

    def test_manifest_excludes_workers(self):
        cfg1 = SimConfig(dt=1e-3, n_samples=8, t_max=1.0, seed=2, workers=1)
        cfg4 = SimConfig(dt=1e-3, n_samples=8, t_max=1.0, seed=2, workers=4)
        a = simulate_batch(OUParams(0.0), UNIT_RATE, cfg1)
        b = simulate_batch(OUParams(0.0), UNIT_RATE, cfg4)
        assert a.manifest() == b.manifest()
        assert a.config_hash() == b.config_hash()

    def test_hash_mismatch_detected(self, tmp_path):
        ds = self.make()
        csv = tmp_path / "run.csv"
        write_dataset(ds, str(csv))
        text = csv.read_text().splitlines()
        text[1] = "# config_hash=" + "0" * 64
        csv.write_text("\n".join(text) + "\n")
        with pytest.raises(ConfigurationError):
            read_dataset(str(csv))

    def test_byte_identical_rewrites(self, tmp_path):
        ds = self.make()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_dataset(ds, str(p1))
        write_dataset(ds, str(p2))
        assert p1.read_bytes() == p2.read_bytes()
