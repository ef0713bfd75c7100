"""Row-wise action of the J1-J2 Heisenberg Hamiltonian in the S^z basis.

Configurations are int8 arrays of +1 (up) / -1 (down).  For a bond
``(i, j)`` with coupling ``J`` the operator ``J S_i.S_j`` contributes
``J s_i s_j / 4`` to the diagonal and, when the spins are anti-parallel,
an element ``J / 2`` connecting to the configuration with ``i`` and ``j``
exchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy import sparse

from .errors import LengthMismatch, SectorTooLarge
from .lattice import Cluster

DEFAULT_DENSE_CAP = math.comb(20, 10)


@dataclass(frozen=True, eq=False)
class HeisenbergModel:
    cluster: Cluster
    j2: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.j2):
            raise ValueError("j2 must be finite")

    @property
    def n_sites(self) -> int:
        return self.cluster.n_sites

    @cached_property
    def bonds(self) -> tuple[np.ndarray, np.ndarray]:
        """Interacting pairs ``(B, 2)`` and their couplings ``(B,)``.

        Next-nearest pairs are dropped when ``j2 == 0`` since they do not
        interact.
        """
        pairs = [self.cluster.edges_nn]
        couplings = [np.ones(len(self.cluster.edges_nn))]
        if self.j2 != 0.0 and len(self.cluster.edges_nnn):
            pairs.append(self.cluster.edges_nnn)
            couplings.append(np.full(len(self.cluster.edges_nnn), float(self.j2)))
        return np.concatenate(pairs).astype(np.int64), np.concatenate(couplings)


@dataclass(frozen=True)
class ConnectedRow:
    diagonal: float
    configs: np.ndarray  # (M, N) off-diagonal neighbors
    elements: np.ndarray  # (M,)


# ------------------------------------------------------------------ bit packing


def pack(configs: np.ndarray) -> np.ndarray:
    """Integer code of each configuration: bit ``i`` set when spin ``i`` is up."""
    configs = np.atleast_2d(configs)
    if configs.shape[1] > 62:
        raise ValueError("bit packing supports at most 62 sites")
    weights = np.left_shift(np.int64(1), np.arange(configs.shape[1], dtype=np.int64))
    return (configs > 0).astype(np.int64) @ weights


def unpack(codes: np.ndarray, n_sites: int) -> np.ndarray:
    bits = (np.asarray(codes, dtype=np.int64)[:, None] >> np.arange(n_sites, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


class SectorBasis:
    """All zero-magnetization configurations, sorted by their packed code."""

    def __init__(self, n_sites: int, cap: int | None = None):
        if n_sites % 2:
            raise ValueError("zero-magnetization sector needs an even number of sites")
        dim = math.comb(n_sites, n_sites // 2)
        if cap is not None and dim > cap:
            raise SectorTooLarge(f"sector dimension {dim} exceeds cap {cap}")
        self.n_sites = n_sites
        codes = np.fromiter(
            (sum(1 << i for i in ups) for ups in combinations(range(n_sites), n_sites // 2)),
            dtype=np.int64,
            count=dim,
        )
        self.codes = np.sort(codes)
        self.configs = unpack(self.codes, n_sites)

    def __len__(self) -> int:
        return len(self.codes)

    def index(self, configs: np.ndarray) -> np.ndarray:
        return self.index_codes(pack(configs))

    def index_codes(self, codes: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.codes, codes)
        idx = np.minimum(idx, len(self.codes) - 1)
        if not np.array_equal(self.codes[idx], codes):
            raise KeyError("configuration outside the zero-magnetization sector")
        return idx


# ----------------------------------------------------------------- row action


def _check_configs(model: HeisenbergModel, configs: np.ndarray, check_sector: bool) -> np.ndarray:
    configs = np.asarray(configs)
    if configs.shape[-1] != model.n_sites:
        raise LengthMismatch(f"configuration has {configs.shape[-1]} spins, cluster has {model.n_sites}")
    if check_sector and np.any(configs.sum(axis=-1) != 0):
        raise ValueError("configuration is outside the zero-magnetization sector")
    return configs


def connected_row(model: HeisenbergModel, config: np.ndarray, check_sector: bool = True) -> ConnectedRow:
    config = _check_configs(model, config, check_sector)
    if config.ndim != 1:
        raise LengthMismatch("connected_row expects a single configuration")
    diag, _, neighbors, elements = connected_batch(model, config[None, :], check_sector=False)
    return ConnectedRow(float(diag[0]), neighbors, elements)


def connected_batch(model: HeisenbergModel, configs: np.ndarray, check_sector: bool = True):
    """Vectorised :func:`connected_row` over a batch ``(S, N)``.

    Returns ``diagonal (S,)``, ``owner (M,)``, ``neighbors (M, N)`` and
    ``elements (M,)`` where ``owner[m]`` is the row that produced
    ``neighbors[m]``.  Entries are ordered by row, then by bond.
    """
    configs = _check_configs(model, np.atleast_2d(configs), check_sector)
    pairs, couplings = model.bonds
    si = configs[:, pairs[:, 0]].astype(np.float64)
    sj = configs[:, pairs[:, 1]].astype(np.float64)
    diagonal = (si * sj) @ couplings / 4.0
    flip = si != sj
    owner, bond = np.nonzero(flip)
    neighbors = configs[owner].copy()
    rows = np.arange(len(owner))
    i, j = pairs[bond, 0], pairs[bond, 1]
    neighbors[rows, i], neighbors[rows, j] = configs[owner, j], configs[owner, i]
    elements = couplings[bond] / 2.0
    return diagonal, owner, neighbors, elements


# ------------------------------------------------------------- sector matrices


def sector_coo(model: HeisenbergModel, basis: SectorBasis):
    """Diagonal and off-diagonal ``(row, col, value)`` triplets over ``basis``."""
    diagonal, owner, neighbors, elements = connected_batch(model, basis.configs, check_sector=False)
    cols = basis.index(neighbors)
    return diagonal, owner, cols, elements


def sparse_matrix(model: HeisenbergModel, basis: SectorBasis | None = None) -> sparse.csr_matrix:
    basis = basis or SectorBasis(model.n_sites)
    diagonal, rows, cols, vals = sector_coo(model, basis)
    n = len(basis)
    h = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)) + sparse.diags(diagonal)
    return h.tocsr()


def dense_matrix(model: HeisenbergModel, basis: SectorBasis | None = None, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    dim = math.comb(model.n_sites, model.n_sites // 2) if basis is None else len(basis)
    if dim > cap:
        raise SectorTooLarge(f"sector dimension {dim} exceeds cap {cap}")
    return sparse_matrix(model, basis).toarray()
