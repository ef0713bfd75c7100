"""Exact treatment of small sectors: ground states, energies, overlaps.

Two independent eigensolvers are provided.  ``dense`` diagonalizes the
Hamiltonian fully, split into translation-momentum blocks when the
cluster's translations are supplied (the blocks are exact; they only make
the dense route affordable at 16 sites).  ``iterative`` runs ARPACK's
Lanczos on the sparse sector matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import eigsh

from .errors import SectorTooLarge
from .hamiltonian import HeisenbergModel, SectorBasis, pack, sector_coo, sparse_matrix
from .lattice import _torus_cells, translations

ITERATIVE_CAP = math.comb(20, 10)
DENSE_CAP = math.comb(16, 8)


@dataclass(frozen=True, eq=False)
class ExactState:
    amplitudes: np.ndarray  # complex, unit norm, ordered as ``basis``
    energy: float
    basis: SectorBasis


def sector_basis(model: HeisenbergModel, cap: int = ITERATIVE_CAP) -> SectorBasis:
    return SectorBasis(model.n_sites, cap=cap)


def _check_dim(n_sites: int, cap: int) -> None:
    dim = math.comb(n_sites, n_sites // 2)
    if dim > cap:
        raise SectorTooLarge(f"sector dimension {dim} exceeds cap {cap}")


# ------------------------------------------------------------------ solvers


def dense_eigenpairs(model: HeisenbergModel, k: int = 1, basis: SectorBasis | None = None,
                     cap: int = DENSE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs from a full dense diagonalization (no symmetry)."""
    _check_dim(model.n_sites, cap)
    basis = basis or SectorBasis(model.n_sites)
    h = sparse_matrix(model, basis).toarray()
    w, v = np.linalg.eigh(h)
    return w[:k], v[:, :k]


def _group_action(basis: SectorBasis, perms: np.ndarray) -> np.ndarray:
    """``idx[g, s]`` is the sector index of ``perm_g`` applied to state ``s``."""
    idx = np.empty((len(perms), len(basis)), dtype=np.int64)
    for g, perm in enumerate(perms):
        moved = np.empty_like(basis.configs)
        moved[:, perm] = basis.configs
        idx[g] = basis.index_codes(pack(moved))
    return idx


def momentum_block_spectrum(model: HeisenbergModel, basis: SectorBasis | None = None,
                            cap: int = DENSE_CAP, lowest: int | None = None) -> list[tuple]:
    """Dense diagonalization of every translation-momentum block.

    Returns ``(energies, vectors, k, representatives)`` per block, with
    vectors in the block's orbit basis; :func:`dense_ground_state` expands
    the lowest one onto the sector.  ``lowest`` keeps only that many
    eigenpairs per block (all of them by default).
    """
    return _momentum_blocks(model, basis, cap, lowest)[0]


def _block_eigh(h: np.ndarray, lowest: int | None):
    if not np.iscomplexobj(h) or not np.any(h.imag):
        h = h.real
    if lowest is None or lowest >= len(h):
        return np.linalg.eigh(h)
    return scipy.linalg.eigh(h, subset_by_index=[0, lowest - 1], driver="evr")


def _momentum_blocks(model, basis, cap, lowest=None):
    _check_dim(model.n_sites, cap)
    basis = basis or SectorBasis(model.n_sites)
    cluster = model.cluster
    m = cluster.spec.cell_matrix()
    shifts = _torus_cells(m).astype(float)
    perms = translations(cluster)
    idx = _group_action(basis, perms)
    best = idx.argmin(axis=0)
    rep = idx[best, np.arange(len(basis))]
    # shift carrying the representative onto each state
    state_shift = -shifts[best]
    is_rep = rep == np.arange(len(basis))
    reps = np.flatnonzero(is_rep)
    orbit_size = np.bincount(rep, minlength=len(basis))
    stab_shifts = [shifts[idx[:, r] == r] for r in reps]

    diagonal, owner, cols, vals = sector_coo(model, basis)
    src = np.concatenate([np.arange(len(basis)), owner])
    tgt = np.concatenate([np.arange(len(basis)), cols])
    val = np.concatenate([diagonal, vals])
    keep = is_rep[src]
    src, tgt, val = src[keep], tgt[keep], val[keep]

    momenta = _momenta(m)
    blocks = []
    for k in momenta:
        compatible = np.array([np.allclose(np.exp(2j * np.pi * (s @ k)), 1.0) for s in stab_shifts])
        block_reps = reps[compatible]
        if len(block_reps) == 0:
            continue
        pos = np.full(len(basis), -1)
        pos[block_reps] = np.arange(len(block_reps))
        r_prime = rep[tgt]
        ok = (pos[src] >= 0) & (pos[r_prime] >= 0)
        phase = np.exp(2j * np.pi * (state_shift[tgt[ok]] @ k))
        weight = np.sqrt(orbit_size[src[ok]] / orbit_size[r_prime[ok]])
        h = np.zeros((len(block_reps), len(block_reps)), dtype=complex)
        np.add.at(h, (pos[r_prime[ok]], pos[src[ok]]), val[ok] * weight * phase)
        w, v = _block_eigh(h, lowest)
        blocks.append((w, v, k, block_reps))
    return blocks, basis, rep, state_shift, orbit_size


def _momenta(m: np.ndarray) -> list[np.ndarray]:
    minv = np.linalg.inv(m)
    seen, out = set(), []
    det = abs(int(round(np.linalg.det(m))))
    for m1 in range(det):
        for m2 in range(det):
            k = minv @ np.array([m1, m2], dtype=float)
            k = k - np.floor(k + 1e-9)
            key = tuple(np.round(k, 9))
            if key not in seen:
                seen.add(key)
                out.append(k)
    return out


def dense_ground_state(model: HeisenbergModel, basis: SectorBasis | None = None,
                       cap: int = DENSE_CAP, use_translations: bool = True) -> ExactState:
    if not use_translations:
        basis = basis or SectorBasis(model.n_sites)
        w, v = dense_eigenpairs(model, 1, basis, cap)
        return ExactState(v[:, 0].astype(complex), float(w[0]), basis)
    blocks, basis, rep, state_shift, orbit_size = _momentum_blocks(model, basis, cap, lowest=1)
    w, v, k, block_reps = min(blocks, key=lambda b: b[0][0])
    pos = np.full(len(basis), -1)
    pos[block_reps] = np.arange(len(block_reps))
    amp = np.zeros(len(basis), dtype=complex)
    member = pos[rep] >= 0
    amp[member] = (v[pos[rep[member]], 0] * np.exp(-2j * np.pi * (state_shift[member] @ k))
                   / np.sqrt(orbit_size[rep[member]]))
    amp /= np.linalg.norm(amp)
    return ExactState(_fix_global_phase(amp), float(w[0]), basis)


def iterative_ground_state(model: HeisenbergModel, basis: SectorBasis | None = None,
                           cap: int = ITERATIVE_CAP) -> ExactState:
    _check_dim(model.n_sites, cap)
    basis = basis or SectorBasis(model.n_sites)
    h = sparse_matrix(model, basis)
    if len(basis) <= 3:
        w, v = np.linalg.eigh(h.toarray())
        return ExactState(v[:, 0].astype(complex), float(w[0]), basis)
    v0 = 1.0 + 0.01 * np.cos(np.arange(len(basis)))
    w, v = eigsh(h, k=1, which="SA", v0=v0, tol=0.0)
    vec = v[:, 0] / np.linalg.norm(v[:, 0])
    return ExactState(_fix_global_phase(vec.astype(complex)), float(w[0]), basis)


def _fix_global_phase(amp: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(amp))
    return amp * np.exp(-1j * np.angle(amp[k]))


def ground_state(model: HeisenbergModel, cap: int = ITERATIVE_CAP, method: str = "auto") -> ExactState:
    """Lowest eigenpair of the zero-magnetization sector.

    ``method`` is ``"dense"``, ``"iterative"`` or ``"auto"`` (iterative
    above 64 states, dense below).
    """
    _check_dim(model.n_sites, cap)
    if method == "auto":
        method = "dense" if math.comb(model.n_sites, model.n_sites // 2) <= 64 else "iterative"
    if method == "dense":
        return dense_ground_state(model, cap=min(cap, DENSE_CAP))
    if method == "iterative":
        return iterative_ground_state(model, cap=cap)
    raise ValueError(f"unknown method {method!r}")


# -------------------------------------------------------- ansatz quantities


def state_vector(log_amp: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Unit-norm complex vector from ``(log_amp, phase)``, shifted by ``max(log_amp)``."""
    psi = np.exp((log_amp - np.max(log_amp)) + 1j * phase)
    return psi / np.linalg.norm(psi)


def sector_amplitudes(ansatz, params, basis: SectorBasis):
    return ansatz.evaluate(params, basis.configs)


def exact_energy(log_amp: np.ndarray, phase: np.ndarray, model: HeisenbergModel,
                 basis: SectorBasis | None = None, hamiltonian=None) -> tuple[float, float]:
    """Rayleigh quotient ``<psi|H|psi> / <psi|psi>`` as ``(real, imaginary residual)``."""
    if hamiltonian is None:
        basis = basis or SectorBasis(model.n_sites)
        hamiltonian = sparse_matrix(model, basis)
    psi = state_vector(log_amp, phase)
    value = np.vdot(psi, hamiltonian @ psi)
    return float(value.real), float(value.imag)


def exact_overlap(log_amp: np.ndarray, phase: np.ndarray, state: ExactState) -> float:
    """``|<psi_0|psi>| / ||psi||``."""
    psi = state_vector(log_amp, phase)
    return float(min(1.0, abs(np.vdot(state.amplitudes, psi))))


def symmetric_fraction(log_amp: np.ndarray, phase: np.ndarray, basis: SectorBasis,
                       perms: np.ndarray, action: np.ndarray | None = None) -> float:
    """Weight of ``psi`` in the subspace invariant under the permutation group ``perms``.

    ``action`` may carry a precomputed ``_group_action(basis, perms)``.
    """
    if action is None:
        action = _group_action(basis, perms)
    psi = state_vector(log_amp, phase)
    projected = psi[action].mean(axis=0)
    return float(np.vdot(projected, projected).real)


def group_action(basis: SectorBasis, perms: np.ndarray) -> np.ndarray:
    return _group_action(basis, perms)
