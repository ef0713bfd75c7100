"""Exact sector averages by enumeration, reduced by the ansatz's own symmetry.

A graph network is invariant under every automorphism of its interaction
graph that preserves the sublattice codes (and, when couplings are an edge
input, the couplings).  Amplitudes are therefore constant on orbits of the
sector under that group, and so are per-configuration gradients.  Evaluating
one representative per orbit gives the full-sector quantities exactly while
costing a fraction of the passes.
"""
from __future__ import annotations

import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from .ansatz import Amplitudes, Ansatz
from .exact import group_action
from .hamiltonian import HeisenbergModel, SectorBasis, sparse_matrix

MAX_AUTOMORPHISMS = 4096


def code_automorphisms(ansatz: Ansatz, limit: int = MAX_AUTOMORPHISMS) -> np.ndarray:
    """Node permutations ``(G, N)`` under which ``ansatz`` is exactly invariant.

    The ResNet baseline has no such symmetry and gets the identity alone.
    Enumeration stops after ``limit`` permutations; a truncated set is
    discarded in favour of the identity, since orbits need a full group.
    """
    n = ansatz.n_sites
    identity = np.arange(n)[None, :]
    if ansatz.arch.variant == "resnet":
        return identity
    graph = nx.Graph()
    for i in range(n):
        graph.add_node(i, code=tuple(ansatz.codes[i]))
    use_coupling = ansatz.arch.include_coupling_edge_feature
    for s, r, c in zip(ansatz.graph.senders, ansatz.graph.receivers, ansatz.graph.couplings):
        graph.add_edge(int(s), int(r), coupling=float(c) if use_coupling else 0.0)
    matcher = GraphMatcher(
        graph, graph,
        node_match=lambda a, b: a["code"] == b["code"],
        edge_match=lambda a, b: a["coupling"] == b["coupling"],
    )
    perms = []
    for mapping in matcher.isomorphisms_iter():
        perms.append([mapping[i] for i in range(n)])
        if len(perms) > limit:
            return identity
    return np.array(perms, dtype=np.int64)


class SectorEnumeration:
    """Full zero-magnetization sector with weights ``|psi|^2 / sum |psi|^2``.

    Parameters
    ----------
    ansatz, model
        The wave-function family and the Hamiltonian whose sector is enumerated.
    use_symmetry
        Evaluate one configuration per automorphism orbit.  Results match
        the plain enumeration to rounding.
    """

    def __init__(self, ansatz: Ansatz, model: HeisenbergModel, basis: SectorBasis | None = None,
                 use_symmetry: bool = True):
        self.ansatz = ansatz
        self.model = model
        self.basis = basis or SectorBasis(model.n_sites)
        self.hamiltonian = sparse_matrix(model, self.basis)
        perms = code_automorphisms(ansatz) if use_symmetry else np.arange(model.n_sites)[None, :]
        self.n_automorphisms = len(perms)
        if len(perms) > 1:
            rep = group_action(self.basis, perms).min(axis=0)
        else:
            rep = np.arange(len(self.basis))
        reps, self.orbit = np.unique(rep, return_inverse=True)
        self.representatives = self.basis.configs[reps]

    def __len__(self) -> int:
        return len(self.basis)

    @property
    def n_orbits(self) -> int:
        return len(self.representatives)

    def amplitudes(self, params) -> Amplitudes:
        out = self.ansatz.evaluate(params, self.representatives)
        return Amplitudes(out.log_amp[self.orbit], out.phase[self.orbit])

    def vjp(self, params, cot_log_amp, cot_phase) -> np.ndarray:
        """Gradient of ``sum_c cot_log_amp[c] log_amp(c) + cot_phase[c] phase(c)`` over the sector."""
        ca = np.bincount(self.orbit, weights=np.broadcast_to(cot_log_amp, len(self)), minlength=self.n_orbits)
        cp = np.bincount(self.orbit, weights=np.broadcast_to(cot_phase, len(self)), minlength=self.n_orbits)
        return self.ansatz.vjp(params, self.representatives, ca, cp)
