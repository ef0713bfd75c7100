import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gnnqs.ansatz import Amplitudes
from gnnqs.errors import Polarized
from gnnqs.estimators import WeightedSet, energy, local_energies
from gnnqs.exact import exact_energy
from gnnqs.hamiltonian import SectorBasis
from gnnqs.sampler import (
    ChainState,
    SamplerConfig,
    _exchange,
    advance,
    burn_in,
    draw_samples,
    init_chains,
    mh_step,
    propose,
    restore_rngs,
    rng_states,
)

from conftest import make_ansatz, perturbed


def uniform(configs):
    return Amplitudes(np.zeros(len(configs)), np.zeros(len(configs)))


def _chains_at(log_amp: float, n_chains: int, n_sites: int = 8, seed: int = 0) -> ChainState:
    chains = init_chains(SamplerConfig(n_chains=n_chains, seed=seed), n_sites)
    chains.log_amp[:] = log_amp
    return chains


def test_equal_amplitudes_always_accepted():
    chains = _chains_at(0.0, 64)
    mh_step(chains, uniform)
    assert chains.acceptance == 1.0


def test_acceptance_matches_probability_ratio():
    # every proposal has |psi'/psi|^2 = 0.1 relative to the cached amplitude
    chains = _chains_at(0.0, 40000)
    lower = math.log(10.0) / 2

    def evaluate(configs):
        return Amplitudes(np.full(len(configs), -lower), np.zeros(len(configs)))

    mh_step(chains, evaluate)
    assert chains.acceptance == pytest.approx(0.1, abs=0.006)


def test_nan_proposals_rejected_and_counted():
    chains = _chains_at(0.0, 16)
    before = chains.configs.copy()

    def evaluate(configs):
        return Amplitudes(np.full(len(configs), np.nan), np.zeros(len(configs)))

    advance(chains, evaluate, 3)
    assert np.array_equal(chains.configs, before)
    assert chains.accepted.sum() == 0
    assert np.all(chains.nan_rejections == 3)


def test_minus_infinity_never_accepted():
    chains = _chains_at(0.0, 16)

    def evaluate(configs):
        return Amplitudes(np.full(len(configs), -np.inf), np.zeros(len(configs)))

    advance(chains, evaluate, 5)
    assert chains.accepted.sum() == 0
    assert chains.nan_rejections.sum() == 0


def test_proposal_kernel_is_symmetric():
    """Exact proposal matrix on N=4 from a fine grid over the two uniforms."""
    n = 4
    basis = SectorBasis(n)
    grid = (np.arange(12) + 0.5) / 12  # 12 is a multiple of n_up = n_down = 2
    u_up, u_down = np.meshgrid(grid, grid, indexing="ij")
    u_up, u_down = u_up.ravel(), u_down.ravel()
    kernel = np.zeros((len(basis), len(basis)))
    for s, config in enumerate(basis.configs):
        moved = _exchange(np.repeat(config[None], len(u_up), axis=0), u_up, u_down)
        np.add.at(kernel[s], basis.index(moved), 1.0 / len(u_up))
    assert np.allclose(kernel.sum(axis=1), 1.0)
    assert np.allclose(kernel, kernel.T)
    assert np.all(np.diag(kernel) == 0)


@settings(max_examples=50, deadline=None)
@given(half=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
def test_proposal_conserves_magnetization(half, seed):
    rng = np.random.default_rng(seed)
    config = rng.permutation(np.repeat(np.array([1, -1], dtype=np.int8), half))
    moved = propose(config, rng)
    assert moved.sum() == 0
    assert np.sum(moved != config) == 2


def test_chains_stay_in_sector():
    model, ansatz = make_ansatz("chain8")
    params = perturbed(ansatz, 0, 0.3)
    cfg = SamplerConfig(n_chains=8, seed=1)
    chains = init_chains(cfg, 8, lambda c: ansatz.evaluate(params, c))
    samples = draw_samples(chains, 20, lambda c: ansatz.evaluate(params, c), cfg)
    assert np.all(samples.configs.sum(axis=1) == 0)
    assert 0.0 < chains.acceptance <= 1.0


def test_polarized():
    with pytest.raises(Polarized):
        init_chains(SamplerConfig(), 7)
    with pytest.raises(Polarized):
        _exchange(np.ones((1, 4), dtype=np.int8), np.array([0.3]), np.array([0.3]))


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(n_chains=0)
    with pytest.raises(ValueError):
        SamplerConfig(thin_steps=0)
    cfg = SamplerConfig().resolved(16)
    assert (cfg.thin_steps, cfg.burn_in_sweeps) == (16, 160)


def test_uniform_ansatz_visits_sector_uniformly():
    basis = SectorBasis(8)
    cfg = SamplerConfig(n_chains=50, thin_steps=1, burn_in_sweeps=10, seed=5)
    chains = init_chains(cfg, 8, uniform)
    burn_in(chains, uniform, cfg)
    samples = draw_samples(chains, 20000, uniform, cfg)  # 10^6 steps in total
    freq = np.bincount(basis.index(samples.configs), minlength=len(basis)) / len(samples)
    tv = 0.5 * np.abs(freq - 1.0 / len(basis)).sum()
    assert tv < 0.02


def test_samples_follow_born_distribution():
    model, ansatz = make_ansatz("chain10")
    params = perturbed(ansatz, 2, 0.15)
    evaluate = lambda c: ansatz.evaluate(params, c)  # noqa: E731
    basis = SectorBasis(10)
    exact = ansatz.evaluate(params, basis.configs)
    prob = np.exp(2 * (exact.log_amp - exact.log_amp.max()))
    prob /= prob.sum()
    cfg = SamplerConfig(n_chains=32, seed=3)
    chains = init_chains(cfg, 10, evaluate)
    burn_in(chains, evaluate, cfg)
    samples = draw_samples(chains, 250, evaluate, cfg)
    counts = np.bincount(basis.index(samples.configs), minlength=len(basis))
    expected = prob * len(samples)
    # pool the sparsely populated states into one bin
    rare = expected < 5
    counts = np.append(counts[~rare], counts[rare].sum())
    expected = np.append(expected[~rare], expected[rare].sum())
    _, p = stats.chisquare(counts, expected)
    assert p > 0.01


def test_mcmc_energy_matches_rayleigh_quotient():
    model, ansatz = make_ansatz("chain10", j2=0.2)
    params = perturbed(ansatz, 1, 0.15)
    evaluate = lambda c: ansatz.evaluate(params, c)  # noqa: E731
    cfg = SamplerConfig(n_chains=32, seed=7)
    chains = init_chains(cfg, 10, evaluate)
    burn_in(chains, evaluate, cfg)
    samples = draw_samples(chains, 60, evaluate, cfg)
    wset = WeightedSet.from_samples(samples)
    est = energy(wset, local_energies(model, wset.configs, wset.log_amp, wset.phase, evaluate))
    exact = ansatz.evaluate(params, SectorBasis(10).configs)
    e0, _ = exact_energy(exact.log_amp, exact.phase, model)
    assert abs(est.mean.real - e0) < 3 * est.stderr


def test_seeded_runs_are_identical():
    model, ansatz = make_ansatz("chain8")
    params = perturbed(ansatz, 1)
    evaluate = lambda c: ansatz.evaluate(params, c)  # noqa: E731
    cfg = SamplerConfig(n_chains=4, seed=11)
    runs = []
    for _ in range(2):
        chains = init_chains(cfg, 8, evaluate)
        burn_in(chains, evaluate, cfg)
        runs.append(draw_samples(chains, 10, evaluate, cfg))
    assert np.array_equal(runs[0].configs, runs[1].configs)
    assert np.array_equal(runs[0].log_amp, runs[1].log_amp)
    other = init_chains(SamplerConfig(n_chains=4, seed=12), 8)
    assert not np.array_equal(other.configs, init_chains(cfg, 8).configs)


def test_rng_state_roundtrip():
    cfg = SamplerConfig(n_chains=3, seed=2)
    chains = init_chains(cfg, 6, uniform)
    advance(chains, uniform, 5)
    saved = rng_states(chains)
    copy = ChainState(chains.configs.copy(), chains.log_amp.copy(), chains.phase.copy(),
                      restore_rngs(saved), chains.steps_taken.copy(), chains.accepted.copy(),
                      chains.nan_rejections.copy())
    advance(chains, uniform, 7)
    advance(copy, uniform, 7)
    assert np.array_equal(chains.configs, copy.configs)


def test_chain_count_does_not_change_a_chain():
    # chain k's trajectory depends only on its own stream
    small = init_chains(SamplerConfig(n_chains=2, seed=9), 8, uniform)
    large = init_chains(SamplerConfig(n_chains=5, seed=9), 8, uniform)
    advance(small, uniform, 30)
    advance(large, uniform, 30)
    assert np.array_equal(small.configs, large.configs[:2])
