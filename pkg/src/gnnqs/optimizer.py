"""Adam, the learning-rate schedule and the two training loops.

Imaginary-time supervised optimization (``itswo``) freezes a copy ``r`` of
the parameters every ``inner_steps`` updates and, in between, maximizes the
overlap of ``psi_w`` with ``phi = (1 - time_step H) psi_r``.  Direct energy
descent (``energy``) follows the gradient of the variational energy.

Both loops run either on Markov-chain samples or, in test mode, on the
exactly weighted full sector, which makes training deterministic without
sampling noise.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from . import checkpoint
from .ansatz import Ansatz
from .enumeration import SectorEnumeration
from .errors import DegenerateOverlap, Diverged, ShapeMismatch
from .estimators import (
    WeightedSet,
    energy,
    energy_coefficients,
    itswo_coefficients,
    local_energies,
    sector_local_energies,
    target_log_ratio,
)
from .exact import ExactState, exact_energy, exact_overlap, symmetric_fraction
from .hamiltonian import HeisenbergModel
from .sampler import ChainState, SamplerConfig, burn_in, draw_samples, init_chains, restore_rngs, rng_states

METRICS_SCHEMA = 1
METHODS = ("itswo", "energy")

# -------------------------------------------------------------------- Adam


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    b1: float = 0.9
    b2: float = 0.99
    epsilon: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kwargs) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **kwargs)


def adam_update(params: np.ndarray, grad: np.ndarray, state: AdamState, lr: float) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step; returns new arrays and leaves inputs untouched."""
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape or state.first_moment.shape != params.shape:
        raise ShapeMismatch(f"params {params.shape}, grad {grad.shape}, moments {state.first_moment.shape}")
    t = state.step_count + 1
    m = state.b1 * state.first_moment + (1.0 - state.b1) * grad
    v = state.b2 * state.second_moment + (1.0 - state.b2) * grad * grad
    m_hat = m / (1.0 - state.b1**t)
    v_hat = v / (1.0 - state.b2**t)
    new = params - lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new, replace(state, first_moment=m, second_moment=v, step_count=t)


# ------------------------------------------------------------ configuration


@dataclass(frozen=True)
class TrainConfig:
    """Training-loop settings.

    ``time_step`` is the imaginary-time increment of the target state.
    ``samples_per_update`` is split evenly over the chains (rounded up).
    ``eval_samples`` defaults to ``samples_per_update``.  ``checkpoint_every``
    of 0 writes checkpoints only when a run ends.
    """

    method: str = "itswo"
    time_step: float = 0.05
    inner_steps: int = 30
    lr0: float = 7e-4
    decay_rate: float = 0.1
    decay_horizon: float = 8e5
    total_updates: int = 3000
    samples_per_update: int = 256
    eval_every: int = 30
    eval_samples: int | None = None
    test_mode: bool = False
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "itswo" and not self.time_step > 0:
            raise ValueError("time_step must be positive for itswo")
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.decay_rate < 1 or not self.decay_horizon > 0:
            raise ValueError("decay_rate must lie in (0, 1) and decay_horizon be positive")
        for name in ("inner_steps", "samples_per_update", "eval_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.total_updates < 0 or self.checkpoint_every < 0:
            raise ValueError("total_updates and checkpoint_every must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def lr_at(update_index: int, config: TrainConfig) -> float:
    if update_index < 0:
        raise ValueError("update index must be >= 0")
    return config.lr0 * config.decay_rate ** (update_index / config.decay_horizon)


# -------------------------------------------------------------- diagnostics


@dataclass
class Monitor:
    """Exact diagnostics over an enumerable sector, added to each metrics record."""

    enumeration: SectorEnumeration
    ground: ExactState | None = None
    translation_action: np.ndarray | None = None

    def __call__(self, params) -> dict:
        amp = self.enumeration.amplitudes(params)
        out = {"energy_exact": exact_energy(amp.log_amp, amp.phase, None, hamiltonian=self.enumeration.hamiltonian)[0]}
        if self.ground is not None:
            out["overlap_exact"] = exact_overlap(amp.log_amp, amp.phase, self.ground)
        if self.translation_action is not None:
            out["symmetric_fraction"] = symmetric_fraction(
                amp.log_amp, amp.phase, self.enumeration.basis, None, action=self.translation_action)
        return out


# ----------------------------------------------------------------- trainer


@dataclass
class Trainer:
    """Stateful training loop that can be checkpointed and resumed exactly.

    Parameters
    ----------
    model, ansatz
        Hamiltonian and wave-function family.
    config, sampler
        Loop and chain settings; ``sampler`` is unused in test mode.
    params
        Initial flat parameters; defaults to ``ansatz.init_params()``.
    monitor
        Optional exact diagnostics.  Test mode builds its own enumeration
        and reuses the monitor's when one is given.
    """

    model: HeisenbergModel
    ansatz: Ansatz
    config: TrainConfig
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    params: np.ndarray | None = None
    monitor: Monitor | None = None

    def __post_init__(self):
        self.sampler = self.sampler.resolved(self.model.n_sites)
        if self.params is None:
            self.params = self.ansatz.init_params().flat.copy()
        self.params = np.array(self.params, dtype=np.float64)
        if self.params.shape != (self.ansatz.n_params,):
            raise ShapeMismatch(f"parameter vector has {self.params.size} entries, ansatz needs {self.ansatz.n_params}")
        self.frozen = self.params.copy()
        self.adam = AdamState.zeros(self.ansatz.n_params)
        self.update = 0
        self.outer_iter = 0
        self.degenerate_streak = 0
        self.degenerate_total = 0
        self.chains: ChainState | None = None
        self.enumeration: SectorEnumeration | None = None
        self._frozen_sector = None
        if self.config.test_mode:
            if self.monitor is not None:
                self.enumeration = self.monitor.enumeration
            else:
                self.enumeration = SectorEnumeration(self.ansatz, self.model)
        else:
            self.chains = init_chains(self.sampler, self.model.n_sites, self._evaluator(self.params))
            burn_in(self.chains, self._evaluator(self.params), self.sampler)

    # ------------------------------------------------------------ helpers

    def _evaluator(self, flat: np.ndarray):
        return lambda configs: self.ansatz.evaluate(flat, configs)

    @property
    def per_chain(self) -> int:
        return math.ceil(self.config.samples_per_update / self.sampler.n_chains)

    def _draw(self, count: int):
        ev = self._evaluator(self.params)
        self.chains.refresh(ev)
        return draw_samples(self.chains, count, ev, self.sampler)

    def _frozen_on_sector(self):
        if self._frozen_sector is None:
            amp = self.enumeration.amplitudes(self.frozen)
            eloc = sector_local_energies(self.enumeration.hamiltonian, amp.log_amp, amp.phase)
            self._frozen_sector = (amp, eloc)
        return self._frozen_sector

    # ------------------------------------------------------------- update

    def _gradient(self) -> np.ndarray:
        cfg = self.config
        if cfg.test_mode:
            enum = self.enumeration
            amp = enum.amplitudes(self.params)
            wset = WeightedSet.enumerated(enum.basis.configs, amp)
            if cfg.method == "energy":
                eloc = sector_local_energies(enum.hamiltonian, amp.log_amp, amp.phase)
                ca, cb = energy_coefficients(wset, eloc)
            else:
                r_amp, r_eloc = self._frozen_on_sector()
                log_re, log_im = target_log_ratio(self.model, wset, None, cfg.time_step, r_amp, r_eloc)
                ca, cb = itswo_coefficients(wset, log_re, log_im)
            return enum.vjp(self.params, ca, cb)

        samples = self._draw(self.per_chain)
        wset = WeightedSet.from_samples(samples)
        if cfg.method == "energy":
            eloc = local_energies(self.model, wset.configs, wset.log_amp, wset.phase, self._evaluator(self.params))
            ca, cb = energy_coefficients(wset, eloc)
        else:
            log_re, log_im = target_log_ratio(self.model, wset, self._evaluator(self.frozen), cfg.time_step)
            ca, cb = itswo_coefficients(wset, log_re, log_im)
        return self.ansatz.vjp(self.params, wset.configs, ca, cb)

    def step(self) -> None:
        """One parameter update (refreshing the frozen copy on schedule)."""
        cfg = self.config
        if cfg.method == "itswo" and self.update % cfg.inner_steps == 0:
            self.frozen = self.params.copy()
            self._frozen_sector = None
            self.outer_iter += 1
        try:
            grad = self._gradient()
        except DegenerateOverlap as exc:
            self.degenerate_streak += 1
            self.degenerate_total += 1
            self.update += 1
            if self.degenerate_streak >= 2:
                raise Diverged(f"degenerate overlap twice in a row at update {self.update}") from exc
            return
        self.degenerate_streak = 0
        new, adam = adam_update(self.params, grad, self.adam, lr_at(self.update, cfg))
        if not np.all(np.isfinite(new)):
            raise Diverged(f"non-finite parameters at update {self.update + 1}")
        self.params, self.adam = new, adam
        self.update += 1

    # ------------------------------------------------------------ metrics

    def evaluate(self) -> dict:
        """Metrics record for the current parameters."""
        cfg = self.config
        record = {"schema": METRICS_SCHEMA, "update": self.update, "outer_iter": self.outer_iter}
        if cfg.test_mode:
            enum = self.enumeration
            amp = enum.amplitudes(self.params)
            psi = WeightedSet.enumerated(enum.basis.configs, amp)
            est = energy(psi, sector_local_energies(enum.hamiltonian, amp.log_amp, amp.phase))
            acceptance = None
        else:
            acceptance = self.chains.acceptance
            self.chains.reset_statistics()
            count = math.ceil((cfg.eval_samples or cfg.samples_per_update) / self.sampler.n_chains)
            samples = self._draw(count)
            wset = WeightedSet.from_samples(samples)
            est = energy(wset, local_energies(self.model, wset.configs, wset.log_amp, wset.phase,
                                              self._evaluator(self.params)))
        n = self.model.n_sites
        record.update(
            energy_mean=est.mean.real,
            energy_stderr=est.stderr,
            energy_per_site=est.mean.real / n,
            acceptance=acceptance,
            lr=lr_at(self.update, cfg),
        )
        if self.monitor is not None:
            record.update(self.monitor(self.params))
        return record

    def run(self, until: int | None = None, hooks: Iterable[Callable[[dict], None]] = (),
            on_checkpoint: Callable[["Trainer"], None] | None = None,
            stop: Callable[[dict], bool] | None = None) -> np.ndarray:
        """Train until ``until`` (default ``total_updates``) updates are done.

        Metrics go to every hook at update 0, every ``eval_every`` updates
        and at the end.  Training ends early once ``stop(record)`` is true
        for an emitted record.  A :class:`Diverged` error leaves ``params``
        at the last good values.
        """
        until = self.config.total_updates if until is None else until
        hooks = list(hooks)

        def emit() -> bool:
            record = self.evaluate()
            for hook in hooks:
                hook(record)
            return stop is not None and stop(record)

        if self.update == 0 and emit():
            return self.params
        while self.update < until:
            self.step()
            done = False
            if self.update % self.config.eval_every == 0 or self.update == until:
                done = emit()
            if on_checkpoint and self.config.checkpoint_every and self.update % self.config.checkpoint_every == 0:
                on_checkpoint(self)
            if done:
                break
        return self.params

    # --------------------------------------------------------- checkpoint

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        meta = {
            "update": self.update,
            "outer_iter": self.outer_iter,
            "degenerate_streak": self.degenerate_streak,
            "degenerate_total": self.degenerate_total,
            "adam_step": self.adam.step_count,
            "train": self.config.to_dict(),
            "sampler": self.sampler.to_dict(),
            "arch": self.ansatz.arch.to_dict(),
            "code_width": self.ansatz.code_width,
        }
        arrays = {
            "params": self.params,
            "frozen": self.frozen,
            "adam_m": self.adam.first_moment,
            "adam_v": self.adam.second_moment,
        }
        if self.chains is not None:
            c = self.chains
            meta["rng_states"] = rng_states(c)
            arrays.update(chain_configs=c.configs, chain_log_amp=c.log_amp, chain_phase=c.phase,
                          chain_steps=c.steps_taken, chain_accepted=c.accepted, chain_nan=c.nan_rejections)
        return meta, arrays

    def save(self, path, extra: dict | None = None) -> None:
        meta, arrays = self.state()
        if extra:
            meta = {**meta, **extra}
        checkpoint.save(path, meta, arrays)

    def restore(self, meta: dict, arrays: dict[str, np.ndarray]) -> "Trainer":
        """Load a state written by :meth:`state` into this trainer."""
        if arrays["params"].shape != self.params.shape:
            raise ShapeMismatch("checkpoint parameters do not match the ansatz")
        self.params = arrays["params"].copy()
        self.frozen = arrays["frozen"].copy()
        self.adam = AdamState(arrays["adam_m"].copy(), arrays["adam_v"].copy(), int(meta["adam_step"]))
        self.update = int(meta["update"])
        self.outer_iter = int(meta["outer_iter"])
        self.degenerate_streak = int(meta["degenerate_streak"])
        self.degenerate_total = int(meta.get("degenerate_total", 0))
        self._frozen_sector = None
        if self.chains is not None:
            self.chains = ChainState(
                arrays["chain_configs"].copy(), arrays["chain_log_amp"].copy(), arrays["chain_phase"].copy(),
                restore_rngs(meta["rng_states"]), arrays["chain_steps"].copy(),
                arrays["chain_accepted"].copy(), arrays["chain_nan"].copy(),
            )
        return self


# --------------------------------------------------------------- wrappers


def run_itswo(model: HeisenbergModel, ansatz: Ansatz, sampler: SamplerConfig, config: TrainConfig,
              hooks: Iterable[Callable[[dict], None]] = (), params=None, monitor: Monitor | None = None) -> np.ndarray:
    trainer = Trainer(model, ansatz, replace(config, method="itswo"), sampler, params, monitor)
    return trainer.run(hooks=hooks)


def run_energy_gradient(model: HeisenbergModel, ansatz: Ansatz, sampler: SamplerConfig, config: TrainConfig,
                        hooks: Iterable[Callable[[dict], None]] = (), params=None,
                        monitor: Monitor | None = None) -> np.ndarray:
    trainer = Trainer(model, ansatz, replace(config, method="energy"), sampler, params, monitor)
    return trainer.run(hooks=hooks)


def metrics_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True)
