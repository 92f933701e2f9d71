import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftcomm.modulation import (
    CountDistribution,
    Mode,
    ModulationConfig,
    NoiseModel,
    count_distribution,
    enumerate_triplets,
    joint_for_mode,
    pa_no_isi,
    pa_one_isi,
    tail_ge,
    tail_lt,
    triplet_terms,
)
from oracles import exact_binomial_tail_ge, triplet_probability


def test_config_validation():
    with pytest.raises(ValueError):
        ModulationConfig(alphabet_size=3)
    with pytest.raises(ValueError):
        ModulationConfig(n=0)
    with pytest.raises(ValueError):
        ModulationConfig(tau=-1.0)
    with pytest.raises(ValueError):
        NoiseModel(mean=0.0, variance=1.0)
    with pytest.raises(ValueError):
        NoiseModel(mean=-1.0)
    assert NoiseModel.poisson(4.0) == NoiseModel(4.0, 4.0)


def test_count_distribution_moments():
    c = count_distribution(1000, 0.3)
    assert c.mean == pytest.approx(300.0) and c.variance == pytest.approx(210.0)
    assert (c + CountDistribution(5.0, 2.0)) == CountDistribution(305.0, 212.0)
    with pytest.raises(ValueError):
        count_distribution(10, 1.5)


def test_zero_variance_tail_is_indicator():
    c = CountDistribution(10.0, 0.0)
    assert tail_ge(c, 10.0) == 1.0
    assert tail_ge(c, 10.5) == 0.0
    np.testing.assert_array_equal(tail_lt(c, np.array([5.0, 11.0])), [0.0, 1.0])


@pytest.mark.parametrize("n", [1000, 5000])
@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.8, 0.95])
def test_normal_tail_close_to_exact_binomial(n, p):
    dist = count_distribution(n, p)
    mean, sd = n * p, math.sqrt(n * p * (1 - p))
    for k in np.linspace(mean - 3 * sd, mean + 3 * sd, 13):
        # continuity: the Gaussian approximates P(N >= k) best at half-integers
        approx = tail_ge(dist, math.ceil(k) - 0.5)
        assert abs(approx - exact_binomial_tail_ge(n, p, k)) < 0.01


def _random_config(rng):
    n = int(rng.integers(100, 5000))
    p_cur = float(rng.uniform(0.05, 0.95))
    p_res = float(rng.uniform(0.0, 1.0 - p_cur))
    noise_mean = float(rng.choice([0.0, rng.uniform(0.1, 500.0)]))
    noise = NoiseModel(noise_mean, 0.0 if noise_mean == 0 else float(rng.uniform(0.1, 2.0)) * noise_mean**2)
    tau = float(rng.uniform(0.0, n * (p_cur + p_res) + noise_mean))
    return ModulationConfig(n=n, tau=tau), noise, p_cur, p_res


def test_triplets_marginalize_to_joint():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        cfg, noise, p_cur, p_res = _random_config(rng)
        trip = enumerate_triplets(cfg, noise, p_cur, p_res)
        assert len(trip) == 64
        pb = np.zeros((4, 4, 4))
        for z, x, y, p in trip:
            pb[z, x, y] = p
        pa = pb.sum(axis=0)
        diag = pa_one_isi(True, cfg, noise, p_cur, p_res)
        off = pa_one_isi(False, cfg, noise, p_cur, p_res)
        expected = np.where(np.eye(4, dtype=bool), diag, off)
        np.testing.assert_allclose(pa, expected, rtol=1e-12, atol=0)


def test_triplets_match_independent_construction():
    rng = np.random.default_rng(7)
    for _ in range(20):
        cfg, noise, p_cur, p_res = _random_config(rng)
        for z, x, y, p in enumerate_triplets(cfg, noise, p_cur, p_res):
            ref = triplet_probability(z, x, y, cfg.n, p_cur, p_res, noise.mean, noise.variance, cfg.tau)
            assert p == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_one_isi_reduces_to_no_isi_without_residual():
    cfg = ModulationConfig(n=1000, tau=450.0)
    noise = NoiseModel(100.0, 1e4)
    for same in (True, False):
        assert pa_one_isi(same, cfg, noise, 0.9, 0.0) == pytest.approx(pa_no_isi(same, cfg, noise, 0.9), rel=1e-14)


def test_noiseless_no_isi_is_perfect():
    cfg = ModulationConfig(n=1000, tau=500.0)
    j = joint_for_mode(Mode.NO_ISI, cfg, NoiseModel(), 0.999999, 0.0)
    np.testing.assert_allclose(j.entries, np.eye(4) / 4, atol=1e-12)
    assert j.total_mass == pytest.approx(1.0)
    assert j.size == 4


def test_terms_keys_and_vectorization():
    cfg = ModulationConfig(n=1000)
    terms = triplet_terms(cfg, NoiseModel(10.0, 100.0), 0.8, 0.1, tau=np.array([100.0, 400.0, 800.0]))
    assert set(terms) == {(True, "same"), (True, "other"), (False, "same"), (False, "other")}
    assert all(v.shape == (3,) for v in terms.values())


def test_rejects_excess_probability():
    with pytest.raises(ValueError):
        pa_one_isi(True, ModulationConfig(), NoiseModel(), 0.8, 0.3)


def test_binary_alphabet_reuses_quaternary_weights():
    cfg2 = ModulationConfig(n=1000, tau=400.0, alphabet_size=2)
    cfg4 = ModulationConfig(n=1000, tau=400.0, alphabet_size=4)
    noise = NoiseModel(50.0, 2500.0)
    assert pa_one_isi(True, cfg2, noise, 0.8, 0.15) == pa_one_isi(True, cfg4, noise, 0.8, 0.15)
    assert joint_for_mode(Mode.ONE_ISI, cfg2, noise, 0.8, 0.15).size == 2
    with pytest.raises(ValueError):
        enumerate_triplets(cfg2, noise, 0.8, 0.15)


@settings(max_examples=80, deadline=None)
@given(
    p_cur=st.floats(0.01, 0.99),
    frac=st.floats(0.0, 1.0),
    noise_mean=st.floats(0.0, 1e3),
    tau=st.floats(0.0, 3000.0),
)
def test_joint_entries_are_probabilities(p_cur, frac, noise_mean, tau):
    p_res = frac * (1 - p_cur)
    noise = NoiseModel(noise_mean, noise_mean**2)
    cfg = ModulationConfig(n=1000, tau=tau)
    for mode in Mode:
        j = joint_for_mode(mode, cfg, noise, p_cur, p_res)
        assert np.all(j.entries >= 0)
        assert np.all(j.entries.sum(axis=1) <= 0.25 + 1e-12)
