"""Batched Metropolis-Hastings chains over zero-magnetization configurations.

Each chain owns a ``numpy.random.Generator`` spawned from one seed, so a
chain's trajectory depends only on its own stream.  All chains move in
lockstep so that one ansatz call evaluates every proposal of a step.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from .ansatz import Amplitudes
from .errors import Polarized

Evaluator = Callable[[np.ndarray], Amplitudes]


@dataclass(frozen=True)
class SamplerConfig:
    """Chain count, thinning and burn-in.

    ``thin_steps`` and ``burn_in_sweeps`` left as ``None`` resolve to ``N``
    and ``10 * N`` for an ``N``-site cluster (one sweep is ``N`` steps).
    """

    n_chains: int = 32
    thin_steps: int | None = None
    burn_in_sweeps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        if self.thin_steps is not None and self.thin_steps < 1:
            raise ValueError("thin_steps must be >= 1")
        if self.burn_in_sweeps is not None and self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")

    def resolved(self, n_sites: int) -> "SamplerConfig":
        return replace(
            self,
            thin_steps=n_sites if self.thin_steps is None else self.thin_steps,
            burn_in_sweeps=10 * n_sites if self.burn_in_sweeps is None else self.burn_in_sweeps,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ChainState:
    """State of ``C`` chains; row ``k`` of every array belongs to chain ``k``."""

    configs: np.ndarray  # (C, N) int8
    log_amp: np.ndarray  # (C,)
    phase: np.ndarray  # (C,)
    rngs: list
    steps_taken: np.ndarray  # (C,) int64
    accepted: np.ndarray  # (C,) int64
    nan_rejections: np.ndarray  # (C,) int64

    @property
    def n_chains(self) -> int:
        return len(self.configs)

    @property
    def acceptance(self) -> float:
        """Fraction of accepted proposals over all chains so far."""
        total = int(self.steps_taken.sum())
        return float(self.accepted.sum()) / total if total else float("nan")

    def refresh(self, evaluate: Evaluator) -> None:
        """Recompute cached amplitudes after a parameter change."""
        amp = evaluate(self.configs)
        self.log_amp = np.asarray(amp.log_amp, dtype=np.float64).copy()
        self.phase = np.asarray(amp.phase, dtype=np.float64).copy()

    def reset_statistics(self) -> None:
        self.accepted[:] = 0
        self.steps_taken[:] = 0
        self.nan_rejections[:] = 0


@dataclass(frozen=True)
class Samples:
    """Configurations drawn from ``|psi|^2`` with their amplitudes.

    ``chain[k]`` names the chain that produced sample ``k``; samples are
    ordered round by round, chains in order within a round.
    """

    configs: np.ndarray
    log_amp: np.ndarray
    phase: np.ndarray
    chain: np.ndarray

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def n_chains(self) -> int:
        return int(self.chain.max()) + 1 if len(self.chain) else 0


def init_chains(config: SamplerConfig, n_sites: int, evaluate: Evaluator | None = None) -> ChainState:
    """Uniformly random balanced start for every chain."""
    if n_sites % 2:
        raise Polarized("an odd number of sites has no zero-magnetization configuration")
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_chains)
    rngs = [np.random.default_rng(s) for s in seeds]
    base = np.repeat(np.array([1, -1], dtype=np.int8), n_sites // 2)
    configs = np.stack([rng.permutation(base) for rng in rngs])
    zeros = np.zeros(config.n_chains, dtype=np.int64)
    chains = ChainState(configs, np.zeros(config.n_chains), np.zeros(config.n_chains), rngs,
                        zeros.copy(), zeros.copy(), zeros.copy())
    if evaluate is not None:
        chains.refresh(evaluate)
    return chains


def _exchange(configs: np.ndarray, u_up: np.ndarray, u_down: np.ndarray) -> np.ndarray:
    """Swap the ``floor(u_up * n_up)``-th up spin with the ``floor(u_down * n_down)``-th down spin."""
    up = configs > 0
    n_up = up.sum(axis=1)
    n_down = configs.shape[1] - n_up
    if np.any(n_up == 0) or np.any(n_down == 0):
        raise Polarized("configuration has no pair of opposite spins")
    k_up = np.minimum((u_up * n_up).astype(np.int64), n_up - 1)
    k_down = np.minimum((u_down * n_down).astype(np.int64), n_down - 1)
    rows = np.arange(len(configs))
    i = np.argmax(np.cumsum(up, axis=1) > k_up[:, None], axis=1)
    j = np.argmax(np.cumsum(~up, axis=1) > k_down[:, None], axis=1)
    out = configs.copy()
    out[rows, i], out[rows, j] = configs[rows, j], configs[rows, i]
    return out


def propose(config: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exchange one uniformly chosen up spin with one uniformly chosen down spin."""
    u = rng.random(2)
    return _exchange(np.asarray(config)[None, :], u[:1], u[1:])[0]


def _step(chains: ChainState, evaluate: Evaluator, draws: np.ndarray) -> None:
    """One MH step for all chains; ``draws (C, 3)`` are uniforms in [0, 1)."""
    proposal = _exchange(chains.configs, draws[:, 0], draws[:, 1])
    amp = evaluate(proposal)
    la = np.asarray(amp.log_amp, dtype=np.float64)
    ph = np.asarray(amp.phase, dtype=np.float64)
    with np.errstate(invalid="ignore", over="ignore"):
        log_ratio = 2.0 * (la - chains.log_amp)
        bad = ~np.isfinite(la) | ~np.isfinite(ph)
        # log(1 - u) is finite since u < 1; -inf log_amp is never accepted
        accept = (np.log1p(-draws[:, 2]) < log_ratio) & ~bad
    chains.nan_rejections += bad & ~np.isneginf(la)
    chains.configs[accept] = proposal[accept]
    chains.log_amp[accept] = la[accept]
    chains.phase[accept] = ph[accept]
    chains.accepted += accept
    chains.steps_taken += 1


def mh_step(chains: ChainState, evaluate: Evaluator) -> ChainState:
    """Advance every chain by one Metropolis-Hastings step (in place)."""
    return advance(chains, evaluate, 1)


def advance(chains: ChainState, evaluate: Evaluator, steps: int) -> ChainState:
    if steps <= 0:
        return chains
    draws = np.stack([rng.random((steps, 3)) for rng in chains.rngs], axis=1)
    for t in range(steps):
        _step(chains, evaluate, draws[t])
    return chains


def burn_in(chains: ChainState, evaluate: Evaluator, config: SamplerConfig) -> ChainState:
    cfg = config.resolved(chains.configs.shape[1])
    advance(chains, evaluate, cfg.burn_in_sweeps * chains.configs.shape[1])
    chains.reset_statistics()
    return chains


def draw_samples(chains: ChainState, count_per_chain: int, evaluate: Evaluator,
                 config: SamplerConfig) -> Samples:
    """``count_per_chain`` samples per chain, each ``thin_steps`` steps after the last."""
    thin = config.resolved(chains.configs.shape[1]).thin_steps
    configs, log_amp, phase = [], [], []
    for _ in range(count_per_chain):
        advance(chains, evaluate, thin)
        configs.append(chains.configs.copy())
        log_amp.append(chains.log_amp.copy())
        phase.append(chains.phase.copy())
    chain = np.tile(np.arange(chains.n_chains), count_per_chain)
    if count_per_chain == 0:
        n = chains.configs.shape[1]
        return Samples(np.zeros((0, n), np.int8), np.zeros(0), np.zeros(0), chain)
    return Samples(np.concatenate(configs), np.concatenate(log_amp), np.concatenate(phase), chain)


def rng_states(chains: ChainState) -> list[dict]:
    return [rng.bit_generator.state for rng in chains.rngs]


def restore_rngs(states: list[dict]) -> list:
    rngs = []
    for state in states:
        bg = getattr(np.random, state["bit_generator"])()
        bg.state = state
        rngs.append(np.random.Generator(bg))
    return rngs
