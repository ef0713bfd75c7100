"""Finite periodic clusters, neighbor shells and sublattice encodings.

A cluster is defined by primitive vectors ``a1, a2``, a list of basis
offsets and two periodicity vectors ``b1, b2`` that must be integer
combinations of the primitive ones.  Sites are the distinct points
``n1*a1 + n2*a2 + offset`` on the torus spanned by ``b1, b2``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import NonCommensurate, PatternIncompatible, SiteCountMismatch

SHELL_TOL = 1e-6  # squared-distance tolerance when grouping shells
_FRAC_TOL = 1e-9

_S3 = math.sqrt(3.0)


class LatticeKind(str, Enum):
    CHAIN = "chain"
    SQUARE = "square"
    HONEYCOMB = "honeycomb"
    TRIANGULAR = "triangular"
    KAGOME = "kagome"


BASIS_OFFSETS: dict[LatticeKind, tuple[tuple[float, float], ...]] = {
    LatticeKind.CHAIN: ((0.0, 0.0),),
    LatticeKind.SQUARE: ((0.0, 0.0),),
    LatticeKind.TRIANGULAR: ((0.0, 0.0),),
    LatticeKind.HONEYCOMB: ((0.0, 0.0), (0.0, 1.0)),
    LatticeKind.KAGOME: ((0.0, 0.0), (0.5, 0.0), (0.25, _S3 / 4)),
}

PRIMITIVE_VECTORS: dict[LatticeKind, tuple[tuple[float, float], tuple[float, float]]] = {
    LatticeKind.CHAIN: ((1.0, 0.0), (0.0, 1.0)),
    LatticeKind.SQUARE: ((1.0, 0.0), (0.0, 1.0)),
    LatticeKind.TRIANGULAR: ((1.0, 0.0), (0.5, _S3 / 2)),
    LatticeKind.HONEYCOMB: ((_S3 / 2, 1.5), (_S3 / 2, -1.5)),
    LatticeKind.KAGOME: ((1.0, 0.0), (0.5, _S3 / 2)),
}

NN_COORDINATION = {
    LatticeKind.CHAIN: 2,
    LatticeKind.SQUARE: 4,
    LatticeKind.HONEYCOMB: 3,
    LatticeKind.TRIANGULAR: 6,
    LatticeKind.KAGOME: 4,
}


@dataclass(frozen=True)
class ClusterSpec:
    kind: LatticeKind
    a1: tuple[float, float]
    a2: tuple[float, float]
    b1: tuple[float, float]
    b2: tuple[float, float]
    basis_offsets: tuple[tuple[float, float], ...]

    @classmethod
    def from_periods(cls, kind: LatticeKind | str, b1, b2) -> "ClusterSpec":
        """Spec with the default primitive vectors and basis of ``kind``."""
        kind = LatticeKind(kind)
        a1, a2 = PRIMITIVE_VECTORS[kind]
        return cls(kind, a1, a2, tuple(map(float, b1)), tuple(map(float, b2)), BASIS_OFFSETS[kind])

    @classmethod
    def chain(cls, length: int) -> "ClusterSpec":
        # second direction is a dummy of period 1 so the 2D machinery applies
        return cls.from_periods(LatticeKind.CHAIN, (float(length), 0.0), (0.0, 1.0))

    @property
    def basis_size(self) -> int:
        return len(self.basis_offsets)

    def cell_matrix(self) -> np.ndarray:
        """Integer matrix ``M`` with rows ``b_k = M[k, 0] a1 + M[k, 1] a2``."""
        a = np.array([self.a1, self.a2], dtype=float)
        b = np.array([self.b1, self.b2], dtype=float)
        m = b @ np.linalg.inv(a)
        mi = np.rint(m)
        if not np.allclose(m, mi, atol=1e-6):
            raise NonCommensurate(f"periodicity vectors {self.b1}, {self.b2} are not lattice vectors")
        mi = mi.astype(np.int64)
        if round(np.linalg.det(mi)) == 0:
            raise NonCommensurate("periodicity vectors are collinear")
        return mi

    @property
    def n_cells(self) -> int:
        return abs(int(round(np.linalg.det(self.cell_matrix()))))

    @property
    def n_sites(self) -> int:
        return self.n_cells * self.basis_size

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "a1": list(self.a1),
            "a2": list(self.a2),
            "b1": list(self.b1),
            "b2": list(self.b2),
            "basis_offsets": [list(o) for o in self.basis_offsets],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClusterSpec":
        kind = LatticeKind(doc["kind"])
        a1, a2 = PRIMITIVE_VECTORS[kind]
        return cls(
            kind,
            tuple(doc.get("a1", a1)),
            tuple(doc.get("a2", a2)),
            tuple(doc["b1"]),
            tuple(doc["b2"]),
            tuple(tuple(o) for o in doc.get("basis_offsets", BASIS_OFFSETS[kind])),
        )


@dataclass(frozen=True, eq=False)
class Cluster:
    spec: ClusterSpec
    positions: np.ndarray  # (N, 2)
    cells: np.ndarray  # (N, 2) integer cell coordinates, reduced to the torus
    basis: np.ndarray  # (N,) basis index of every site
    edges_nn: np.ndarray  # (E1, 2), i < j, lexicographically sorted
    edges_nnn: np.ndarray  # (E2, 2)
    name: str = ""
    _site_index: dict = field(default_factory=dict, repr=False)

    @property
    def n_sites(self) -> int:
        return len(self.positions)

    @property
    def kind(self) -> LatticeKind:
        return self.spec.kind

    def site_at(self, cell: Sequence[int], basis: int) -> int:
        n = _reduce_cell(np.asarray(cell, dtype=np.int64), self.spec.cell_matrix())
        return self._site_index[(int(n[0]), int(n[1]), int(basis))]


def _reduce_cell(n: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Map integer cell coordinates (..., 2) into the fundamental domain of ``m``."""
    frac = n @ np.linalg.inv(m)
    frac = frac - np.floor(frac + _FRAC_TOL)
    return np.rint(frac @ m).astype(np.int64)


def _torus_cells(m: np.ndarray) -> np.ndarray:
    corners = np.array([[0, 0], m[0], m[1], m[0] + m[1]])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    n1, n2 = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    cand = np.stack([n1.ravel(), n2.ravel()], axis=1)
    frac = cand @ np.linalg.inv(m)
    keep = np.all((frac > -_FRAC_TOL) & (frac < 1 - _FRAC_TOL), axis=1)
    cells = cand[keep]
    order = np.lexsort((cells[:, 0], cells[:, 1]))
    return cells[order]


def _periodic_images(spec: ClusterSpec) -> np.ndarray:
    b = np.array([spec.b1, spec.b2])
    k2_range = (0,) if spec.kind is LatticeKind.CHAIN else (-1, 0, 1)
    return np.array([k1 * b[0] + k2 * b[1] for k1 in (-1, 0, 1) for k2 in k2_range])


def minimum_image_distances(spec: ClusterSpec, positions: np.ndarray) -> np.ndarray:
    """Squared distances between all site pairs, minimised over periodic images."""
    diff = positions[None, :, :] - positions[:, None, :]
    shifts = _periodic_images(spec)
    d2 = ((diff[:, :, None, :] + shifts[None, None, :, :]) ** 2).sum(-1)
    return d2.min(axis=2)


def build_cluster(spec: ClusterSpec, expected_sites: int | None = None, name: str = "") -> Cluster:
    m = spec.cell_matrix()
    cells = _torus_cells(m)
    if len(cells) != spec.n_cells:
        raise NonCommensurate(f"enumerated {len(cells)} cells, expected {spec.n_cells}")
    nb = spec.basis_size
    n_sites = len(cells) * nb
    if expected_sites is not None and n_sites != expected_sites:
        raise SiteCountMismatch(f"cluster has {n_sites} sites, expected {expected_sites}")

    a = np.array([spec.a1, spec.a2])
    offsets = np.array(spec.basis_offsets, dtype=float)
    site_cells = np.repeat(cells, nb, axis=0)
    basis = np.tile(np.arange(nb), len(cells))
    positions = site_cells @ a + offsets[basis]

    d2 = minimum_image_distances(spec, positions)
    iu, ju = np.triu_indices(n_sites, k=1)
    pair_d2 = d2[iu, ju]
    shells = _distance_shells(pair_d2)
    if len(shells) >= 2:
        assert shells[1] - shells[0] > 1e-9
    edges = []
    for shell in shells[:2]:
        mask = np.abs(pair_d2 - shell) < SHELL_TOL
        edges.append(np.stack([iu[mask], ju[mask]], axis=1))
    while len(edges) < 2:
        edges.append(np.zeros((0, 2), dtype=np.int64))

    index = {(int(c[0]), int(c[1]), int(s)): i for i, (c, s) in enumerate(zip(site_cells, basis))}
    cluster = Cluster(spec, positions, site_cells, basis, edges[0], edges[1], name, index)
    covered = np.zeros(n_sites, dtype=bool)
    covered[cluster.edges_nn.ravel()] = True
    if not covered.all():
        raise ValueError("some sites have no nearest neighbor")
    return cluster


def _distance_shells(d2: np.ndarray) -> list[float]:
    values = np.sort(np.unique(np.round(d2, 9)))
    shells: list[float] = []
    for v in values:
        if v < SHELL_TOL:
            continue
        if not shells or v - shells[-1] > SHELL_TOL:
            shells.append(float(v))
    return shells


def translations(cluster: Cluster) -> np.ndarray:
    """Site permutations for every torus translation, shape (n_cells, N).

    Row ``t`` maps site ``i`` to the site reached by shifting it by the
    ``t``-th cell vector; row 0 is the identity.
    """
    m = cluster.spec.cell_matrix()
    shifts = _torus_cells(m)
    perms = np.empty((len(shifts), cluster.n_sites), dtype=np.int64)
    for t, shift in enumerate(shifts):
        moved = _reduce_cell(cluster.cells + shift, m)
        perms[t] = [cluster._site_index[(int(c[0]), int(c[1]), int(s))] for c, s in zip(moved, cluster.basis)]
    return perms


# ---------------------------------------------------------------- sublattices


class SublatticePattern(str, Enum):
    NONE = "none"
    NEEL = "neel"
    ORTHOGONAL = "orthogonal"
    AF = "af"
    CUBIC = "cubic"
    COPLANAR = "coplanar"
    TETRAHEDRAL = "tetrahedral"
    QZERO = "qzero"
    ROOTTHREE = "rootthree"
    CUSTOM = "custom"


# label(n1, n2, basis) and number of classes for each built-in pattern
_PATTERN_RULES: dict[SublatticePattern, tuple[set, int, Callable]] = {
    SublatticePattern.NEEL: ({LatticeKind.CHAIN, LatticeKind.SQUARE}, 2, lambda n1, n2, s: (n1 + n2) % 2),
    SublatticePattern.ORTHOGONAL: ({LatticeKind.SQUARE}, 4, lambda n1, n2, s: n1 % 2 + 2 * (n2 % 2)),
    SublatticePattern.AF: ({LatticeKind.HONEYCOMB}, 2, lambda n1, n2, s: s),
    SublatticePattern.CUBIC: ({LatticeKind.HONEYCOMB}, 4, lambda n1, n2, s: 2 * s + (n1 + n2) % 2),
    SublatticePattern.COPLANAR: ({LatticeKind.TRIANGULAR}, 3, lambda n1, n2, s: (n1 - n2) % 3),
    SublatticePattern.TETRAHEDRAL: ({LatticeKind.TRIANGULAR}, 4, lambda n1, n2, s: n1 % 2 + 2 * (n2 % 2)),
    SublatticePattern.QZERO: ({LatticeKind.KAGOME}, 3, lambda n1, n2, s: s),
    SublatticePattern.ROOTTHREE: ({LatticeKind.KAGOME}, 9, lambda n1, n2, s: 3 * s + (n1 - n2) % 3),
}


@dataclass(frozen=True, eq=False)
class SublatticeEncoding:
    pattern: SublatticePattern
    labels: np.ndarray  # (N,) integer class per site
    codes: np.ndarray  # (N, K) one-hot rows; K == 0 for the NONE pattern

    @property
    def width(self) -> int:
        return self.codes.shape[1]


def _one_hot(labels: np.ndarray, width: int) -> np.ndarray:
    codes = np.zeros((len(labels), width))
    codes[np.arange(len(labels)), labels] = 1.0
    return codes


def assign_sublattice(cluster: Cluster, pattern: SublatticePattern | str | Sequence[int]) -> SublatticeEncoding:
    """One-hot sublattice codes for ``cluster``.

    ``pattern`` is a pattern name or, for custom encodings, a per-site
    sequence of integer labels.
    """
    if not isinstance(pattern, (str, SublatticePattern)):
        labels = np.asarray(pattern, dtype=np.int64)
        if labels.shape != (cluster.n_sites,) or labels.min() < 0:
            raise PatternIncompatible("custom labels must be one non-negative integer per site")
        width = int(labels.max()) + 1
        if len(np.unique(labels)) != width:
            raise PatternIncompatible("custom labels leave a class empty")
        return SublatticeEncoding(SublatticePattern.CUSTOM, labels, _one_hot(labels, width))

    pattern = SublatticePattern(pattern)
    if pattern is SublatticePattern.NONE:
        return SublatticeEncoding(pattern, np.zeros(cluster.n_sites, dtype=np.int64), np.zeros((cluster.n_sites, 0)))
    if pattern is SublatticePattern.CUSTOM:
        raise PatternIncompatible("custom pattern requires explicit labels")
    kinds, width, rule = _PATTERN_RULES[pattern]
    if cluster.kind not in kinds:
        raise PatternIncompatible(f"{pattern.value} is not defined on a {cluster.kind.value} lattice")

    m = cluster.spec.cell_matrix()
    rows = [m[0]] if cluster.kind is LatticeKind.CHAIN else [m[0], m[1]]
    n1, n2, s = cluster.cells[:, 0], cluster.cells[:, 1], cluster.basis
    labels = np.asarray(rule(n1, n2, s), dtype=np.int64)
    for row in rows:
        if not np.array_equal(rule(n1 + row[0], n2 + row[1], s), labels):
            raise PatternIncompatible(f"{pattern.value} pattern is not periodic on this torus")
    counts = np.bincount(labels, minlength=width)
    if counts.min() == 0 or counts.max() != counts.min():
        raise PatternIncompatible(f"{pattern.value} classes are unbalanced on this cluster: {counts.tolist()}")
    return SublatticeEncoding(pattern, labels, _one_hot(labels, width))


def recommended_pattern(kind: LatticeKind | str, j2: float) -> SublatticePattern:
    """Sublattice pattern for the regime ``j2`` falls in."""
    kind = LatticeKind(kind)
    if kind is LatticeKind.CHAIN:
        return SublatticePattern.NEEL
    if kind is LatticeKind.SQUARE:
        return SublatticePattern.NEEL if j2 <= 0.5 else SublatticePattern.ORTHOGONAL
    if kind is LatticeKind.HONEYCOMB:
        return SublatticePattern.AF if j2 <= 0.5 else SublatticePattern.CUBIC
    if kind is LatticeKind.TRIANGULAR:
        return SublatticePattern.COPLANAR if j2 <= 0.14 else SublatticePattern.TETRAHEDRAL
    return SublatticePattern.QZERO if j2 >= 0 else SublatticePattern.ROOTTHREE


# -------------------------------------------------------------------- presets


def _preset(kind: str, b1, b2, n: int) -> tuple[ClusterSpec, int]:
    return ClusterSpec.from_periods(kind, b1, b2), n


PRESETS: dict[str, tuple[ClusterSpec, int]] = {
    "square16": _preset("square", (4, 0), (0, 4), 16),
    "square36": _preset("square", (6, 0), (0, 6), 36),
    "square64": _preset("square", (8, 0), (0, 8), 64),
    "square100": _preset("square", (10, 0), (0, 10), 100),
    "honeycomb8": _preset("honeycomb", (_S3, 3.0), (_S3, -3.0), 8),
    "honeycomb32": _preset("honeycomb", (2 * _S3, 6.0), (2 * _S3, -6.0), 32),
    "honeycomb98": _preset("honeycomb", (3.5 * _S3, 10.5), (3.5 * _S3, -10.5), 98),
    "triangular12": _preset("triangular", (3, _S3), (0, 2 * _S3), 12),
    "triangular36": _preset("triangular", (6, 0), (3, 3 * _S3), 36),
    "triangular48": _preset("triangular", (6, 2 * _S3), (6, -2 * _S3), 48),
    "triangular108": _preset("triangular", (9, 3 * _S3), (9, -3 * _S3), 108),
    "kagome12": _preset("kagome", (2, 0), (1, _S3), 12),
    "kagome36": _preset("kagome", (3, -_S3), (0, 2 * _S3), 36),
    "kagome48": _preset("kagome", (4, 0), (2, 2 * _S3), 48),
    "kagome108": _preset("kagome", (6, 0), (3, 3 * _S3), 108),
}
for _length in (2, 4, 6, 8, 10, 12, 14, 16, 20, 24, 32):
    PRESETS[f"chain{_length}"] = (ClusterSpec.chain(_length), _length)


def preset(name: str) -> Cluster:
    try:
        spec, n = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown cluster preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
    return build_cluster(spec, expected_sites=n, name=name)


def load_cluster(source: str | Path | dict) -> tuple[Cluster, np.ndarray | None]:
    """Build a cluster from a preset name, a JSON file path or a parsed document.

    Returns the cluster and the custom sublattice labels if the document
    carries a ``codes`` field.
    """
    if isinstance(source, str) and source in PRESETS:
        return preset(source), None
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    spec = ClusterSpec.from_dict(doc)
    name = doc.get("name", "")
    cluster = build_cluster(spec, expected_sites=doc.get("n_sites"), name=name)
    codes = doc.get("codes")
    return cluster, (np.asarray(codes, dtype=np.int64) if codes is not None else None)
