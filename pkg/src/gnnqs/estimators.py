"""Estimators over weighted configuration sets.

Every estimator works on a :class:`WeightedSet`: MCMC samples carry equal
weights ``1/S``, an enumerated sector carries the exact ``|psi|^2`` weights.
The same expressions then give stochastic estimates or exact values.

Gradients are returned as VJP coefficients ``(c_a, c_b)`` per configuration
so the caller can contract them with the ansatz in one backward pass:
``grad = sum_k c_a[k] d log_amp_k + c_b[k] d phase_k``.  Functions that take
per-sample :class:`GradientPair` arrays do that contraction directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ansatz import Amplitudes, GradientPair
from .errors import DegenerateOverlap, TooFewSamples
from .hamiltonian import HeisenbergModel, connected_batch
from .sampler import Samples

Evaluator = Callable[[np.ndarray], Amplitudes]

DEGENERATE_OVERLAP = 1e-24


@dataclass(frozen=True)
class WeightedSet:
    """Configurations with amplitudes, normalized weights and chain labels."""

    configs: np.ndarray
    log_amp: np.ndarray
    phase: np.ndarray
    weights: np.ndarray
    chain: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.configs)

    @classmethod
    def from_samples(cls, samples: Samples) -> "WeightedSet":
        n = len(samples)
        if n == 0:
            raise TooFewSamples("no samples")
        return cls(samples.configs, samples.log_amp, samples.phase, np.full(n, 1.0 / n), samples.chain)

    @classmethod
    def enumerated(cls, configs: np.ndarray, amplitudes: Amplitudes) -> "WeightedSet":
        """Full sector with ``|psi|^2 / sum |psi|^2`` weights."""
        la = np.asarray(amplitudes.log_amp, dtype=np.float64)
        w = np.exp(2.0 * (la - la.max()))
        return cls(configs, la, np.asarray(amplitudes.phase, dtype=np.float64), w / w.sum(), None)


def _weighted(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``weights * values`` with zero-weight entries forced to zero.

    Configurations whose weight underflowed may carry overflowing ratios;
    they must not turn a sum into NaN.
    """
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(weights > 0, weights * values, 0.0)


# -------------------------------------------------------------- local energy


def local_energies(model: HeisenbergModel, configs: np.ndarray, log_amp: np.ndarray, phase: np.ndarray,
                   evaluate: Evaluator) -> np.ndarray:
    """``[H psi](c) / psi(c)`` for each row of ``configs`` (complex)."""
    configs = np.atleast_2d(configs)
    diag, owner, neighbors, elements = connected_batch(model, configs)
    out = diag.astype(complex)
    if len(owner):
        # neighbors repeat heavily once |psi|^2 concentrates; evaluate each once
        unique, inverse = np.unique(neighbors, axis=0, return_inverse=True)
        amp = evaluate(unique)
        inverse = inverse.reshape(-1)
        d = ((np.asarray(amp.log_amp)[inverse] - log_amp[owner])
             + 1j * (np.asarray(amp.phase)[inverse] - phase[owner]))
        with np.errstate(over="ignore", invalid="ignore"):
            terms = elements * np.exp(d)
        out += np.bincount(owner, weights=terms.real, minlength=len(configs))
        out += 1j * np.bincount(owner, weights=terms.imag, minlength=len(configs))
    return out


def local_energy(model: HeisenbergModel, config: np.ndarray, evaluate: Evaluator) -> complex:
    amp = evaluate(np.atleast_2d(config))
    la, ph = np.atleast_1d(amp.log_amp), np.atleast_1d(amp.phase)
    return complex(local_energies(model, config, la, ph, evaluate)[0])


def sector_local_energies(hamiltonian, log_amp: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Local energies over a full sector from its sparse matrix (no ansatz calls)."""
    shift = log_amp.max()
    # clip keeps exp finite for states whose weight underflows anyway
    psi = np.exp(np.clip(log_amp - shift, -700.0, None) + 1j * phase)
    hpsi = hamiltonian @ psi
    with np.errstate(over="ignore", invalid="ignore"):
        return hpsi / psi


# ------------------------------------------------------------------- energy


@dataclass(frozen=True)
class EnergyEstimate:
    mean: complex
    stderr: float
    n_samples: int


def _chain_stderr(values: np.ndarray, chain: np.ndarray | None) -> float:
    """Standard error from the spread of per-chain means."""
    if chain is None:
        return 0.0
    n_chains = int(chain.max()) + 1
    if n_chains < 2:
        return float("nan")
    counts = np.bincount(chain, minlength=n_chains)
    means = np.bincount(chain, weights=values, minlength=n_chains) / counts
    return float(np.std(means, ddof=1) / np.sqrt(n_chains))


def energy(wset: WeightedSet, eloc: np.ndarray) -> EnergyEstimate:
    """Weighted mean of local energies.

    Raises
    ------
    TooFewSamples
        With fewer than two configurations.
    """
    if len(wset) < 2:
        raise TooFewSamples("energy needs at least two samples")
    mean = complex(np.sum(_weighted(wset.weights, eloc)))
    return EnergyEstimate(mean, _chain_stderr(eloc.real, wset.chain), len(wset))


def energy_coefficients(wset: WeightedSet, eloc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """VJP coefficients of ``d<E>/dw``.

    ``2 E[Re(Eloc) da + Im(Eloc) db] - 2 Re(E[Eloc]) E[da]``; the real part
    of the mean is used because for a Hermitian ``H`` the imaginary part is
    sampling noise.
    """
    if len(wset) < 2:
        raise TooFewSamples("energy gradient needs at least two samples")
    e_re = float(np.sum(_weighted(wset.weights, eloc.real)))
    return 2.0 * _weighted(wset.weights, eloc.real - e_re), 2.0 * _weighted(wset.weights, eloc.imag)


def energy_gradient(wset: WeightedSet, grads: GradientPair, eloc: np.ndarray) -> np.ndarray:
    ca, cb = energy_coefficients(wset, eloc)
    return ca @ grads.d_log_amp + cb @ grads.d_phase


# ------------------------------------------------------------------ overlap


@dataclass(frozen=True)
class OverlapEstimate:
    value: float
    stderr: float


def _shifted_ratios(d_log: np.ndarray, d_phase: np.ndarray):
    """``exp(d_log + i d_phase)`` divided by ``exp(max d_log)``, and that shift."""
    shift = d_log.max()
    terms = np.exp(d_log - shift + 1j * d_phase)
    return shift, terms


def overlap(psi_set: WeightedSet, phi_at_psi: Amplitudes, phi_set: WeightedSet, psi_at_phi: Amplitudes) -> OverlapEstimate:
    """``|sqrt(E_phi[psi/phi]) sqrt(E_psi[phi/psi])|`` with between-chain error.

    ``phi_at_psi`` holds ``phi`` evaluated on the configurations of
    ``psi_set``, and vice versa.
    """
    if len(psi_set) == 0 or len(phi_set) == 0:
        raise TooFewSamples("overlap needs samples from both states")
    sa, ta = _shifted_ratios(phi_at_psi.log_amp - psi_set.log_amp, phi_at_psi.phase - psi_set.phase)
    sb, tb = _shifted_ratios(psi_at_phi.log_amp - phi_set.log_amp, psi_at_phi.phase - phi_set.phase)
    a = np.sum(_weighted(psi_set.weights, ta))
    b = np.sum(_weighted(phi_set.weights, tb))
    log_value = 0.5 * (np.log(abs(a)) + sa + np.log(abs(b)) + sb)
    value = float(np.exp(log_value)) if np.isfinite(log_value) else 0.0
    stderr = 0.0
    if psi_set.chain is not None and phi_set.chain is not None and value > 0:
        # delta method on |A| and |B| from their per-chain means
        rel_a = _chain_stderr(np.abs(ta) * np.cos(np.angle(ta) - np.angle(a)), psi_set.chain) / abs(a)
        rel_b = _chain_stderr(np.abs(tb) * np.cos(np.angle(tb) - np.angle(b)), phi_set.chain) / abs(b)
        stderr = float(0.5 * value * np.hypot(rel_a, rel_b))
    return OverlapEstimate(value, stderr)


# ------------------------------------------------------------------- IT-SWO


@dataclass(frozen=True)
class ItswoAverages:
    r_re: float
    r_im: float
    gamma: np.ndarray
    eta: np.ndarray
    delta: float


def target_log_ratio(model: HeisenbergModel, wset: WeightedSet, frozen: Evaluator, time_step: float,
                     frozen_amp: Amplitudes | None = None, frozen_eloc: np.ndarray | None = None):
    """``log(phi/psi)`` on ``wset`` for ``phi = (1 - time_step H) psi_r``.

    ``phi(c) = psi_r(c) (1 - time_step Eloc_r(c))``, so only ratios of the
    frozen state appear.  Returns the real and imaginary parts.
    """
    if frozen_amp is None:
        frozen_amp = frozen(wset.configs)
    r_la = np.asarray(frozen_amp.log_amp, dtype=np.float64)
    r_ph = np.asarray(frozen_amp.phase, dtype=np.float64)
    if frozen_eloc is None:
        frozen_eloc = local_energies(model, wset.configs, r_la, r_ph, frozen)
    factor = 1.0 - time_step * frozen_eloc
    with np.errstate(divide="ignore"):
        log_re = (r_la - wset.log_amp) + np.log(np.abs(factor))
    log_im = (r_ph - wset.phase) + np.angle(factor)
    return log_re, log_im


def itswo_averages(wset: WeightedSet, log_re: np.ndarray, log_im: np.ndarray,
                   grads: GradientPair | None = None) -> tuple[ItswoAverages, np.ndarray]:
    """Averages over ``rho = phi/psi``, plus the weighted terms ``w rho``.

    ``rho`` is rescaled so that the largest weighted term has magnitude 1;
    every normalized quantity is unchanged by the rescaling, and
    ``|r|^2 < 1e-24`` then means the terms cancel.  ``gamma`` and ``eta``
    are empty without ``grads``.
    """
    with np.errstate(divide="ignore"):
        log_w = np.log(wset.weights) + log_re
    shift = np.max(log_w)
    wrho = np.exp(log_w - shift + 1j * log_im)
    r = complex(np.sum(wrho))
    if not np.isfinite(abs(r)) or abs(r) ** 2 < DEGENERATE_OVERLAP:
        raise DegenerateOverlap(f"|E[phi/psi]|^2 = {abs(r) ** 2:.3e} after rescaling")
    if grads is None:
        gamma = eta = np.zeros(0)
    else:
        gamma = wrho.real @ grads.d_log_amp + wrho.imag @ grads.d_phase
        eta = wrho.imag @ grads.d_log_amp - wrho.real @ grads.d_phase
    return ItswoAverages(r.real, r.imag, gamma, eta, float(np.arctan2(r.imag, r.real))), wrho


def itswo_coefficients(wset: WeightedSet, log_re: np.ndarray, log_im: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """VJP coefficients of ``-2 d log O(psi_w, phi) / dw``.

    With ``rho = phi/psi`` and ``r = E[rho]`` this is
    ``2 E[(1 - Re(rho/r)) da - Im(rho/r) db]``.
    """
    avg, wrho = itswo_averages(wset, log_re, log_im)
    q = wrho / complex(avg.r_re, avg.r_im)
    return 2.0 * (wset.weights - q.real), -2.0 * q.imag


def itswo_gradient(wset: WeightedSet, grads: GradientPair, log_re: np.ndarray, log_im: np.ndarray) -> np.ndarray:
    """``-2 grad log O`` from the averages ``(r, gamma, eta, delta)``.

    Equals ``2 (E[da] - (gamma cos delta + eta sin delta) / |r|)``.
    """
    avg, _ = itswo_averages(wset, log_re, log_im, grads)
    mean_da = wset.weights @ grads.d_log_amp
    norm = np.hypot(avg.r_re, avg.r_im)
    return 2.0 * (mean_da - (avg.gamma * np.cos(avg.delta) + avg.eta * np.sin(avg.delta)) / norm)
