"""Variational wave-functions mapping spin configurations to ``log psi``.

Every ansatz returns two real numbers per configuration: ``log_amp``
(``Re log psi``) and ``phase`` (``Im log psi``).  Three variants exist:

``gnn``
    One encode-process-decode graph network; a bias-free linear head maps
    the pooled latent vector to both outputs.
``gnn2``
    Two independent graph networks, one per output.
``resnet``
    Residual MLP over the flattened spins and sublattice codes.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from ..errors import ShapeMismatch
from .layers import lecun_uniform
from .networks import gnn_backward, gnn_forward, gnn_layout, resnet_backward, resnet_forward, resnet_layout
from .params import ParameterSet

__all__ = [
    "Amplitudes",
    "Ansatz",
    "ArchConfig",
    "GradientPair",
    "Graph",
    "ParameterSet",
]

VARIANTS = ("gnn", "gnn2", "resnet")

# rows of edge latents processed per chunk; bounds peak memory of a pass
_CHUNK_EDGE_ROWS = 1 << 16


@dataclass(frozen=True)
class ArchConfig:
    embed_dim: int = 64
    hidden_width: int = 128
    hidden_layers: int = 3
    mp_steps: int = 6
    variant: str = "gnn"
    include_coupling_edge_feature: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("embed_dim", "hidden_width", "hidden_layers", "mp_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    @classmethod
    def small(cls, **overrides) -> "ArchConfig":
        """Reduced model used for ablations and desk-scale training."""
        base = dict(embed_dim=16, hidden_width=16, mp_steps=2)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)


class Amplitudes(NamedTuple):
    log_amp: np.ndarray
    phase: np.ndarray


class GradientPair(NamedTuple):
    d_log_amp: np.ndarray
    d_phase: np.ndarray


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed interaction graph; each undirected pair yields two edges."""

    n_nodes: int
    senders: np.ndarray
    receivers: np.ndarray
    couplings: np.ndarray = field(repr=False)

    @classmethod
    def from_pairs(cls, n_nodes: int, pairs: np.ndarray, couplings: np.ndarray | None = None) -> "Graph":
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if couplings is None:
            couplings = np.ones(len(pairs))
        senders = np.stack([pairs[:, 0], pairs[:, 1]], axis=1).ravel()
        receivers = np.stack([pairs[:, 1], pairs[:, 0]], axis=1).ravel()
        return cls(n_nodes, senders, receivers, np.repeat(np.asarray(couplings, dtype=float), 2))

    @classmethod
    def from_model(cls, model) -> "Graph":
        pairs, couplings = model.bonds
        return cls.from_pairs(model.n_sites, pairs, couplings)

    @property
    def n_edges(self) -> int:
        return len(self.senders)

    @cached_property
    def sender_incidence(self) -> np.ndarray:
        inc = np.zeros((self.n_nodes, self.n_edges))
        inc[self.senders, np.arange(self.n_edges)] = 1.0
        return inc

    @cached_property
    def receiver_incidence(self) -> np.ndarray:
        inc = np.zeros((self.n_nodes, self.n_edges))
        inc[self.receivers, np.arange(self.n_edges)] = 1.0
        return inc

    def relabeled(self, perm: np.ndarray) -> "Graph":
        """Graph with node ``i`` renamed ``perm[i]``; edge order is kept."""
        perm = np.asarray(perm)
        return Graph(self.n_nodes, perm[self.senders], perm[self.receivers], self.couplings)

    def disjoint_union(self, other: "Graph") -> "Graph":
        return Graph(
            self.n_nodes + other.n_nodes,
            np.concatenate([self.senders, other.senders + self.n_nodes]),
            np.concatenate([self.receivers, other.receivers + self.n_nodes]),
            np.concatenate([self.couplings, other.couplings]),
        )


def _flat(params) -> np.ndarray:
    return params.flat if isinstance(params, ParameterSet) else np.asarray(params, dtype=np.float64)


class Ansatz:
    """A wave-function family bound to one graph and one set of sublattice codes.

    Parameters are passed to every call, so one ``Ansatz`` serves both the
    trained parameters and frozen copies of them.
    """

    def __init__(self, arch: ArchConfig, graph: Graph, codes: np.ndarray | None = None):
        codes = np.zeros((graph.n_nodes, 0)) if codes is None else np.asarray(codes, dtype=np.float64)
        if codes.ndim != 2 or codes.shape[0] != graph.n_nodes:
            raise ShapeMismatch(f"codes shape {codes.shape} does not match {graph.n_nodes} nodes")
        self.arch = arch
        self.graph = graph
        self.codes = codes
        self.n_sites = graph.n_nodes
        a = arch
        if a.variant == "resnet":
            self._nets = [("resnet", 2)]
            layout = resnet_layout("resnet", graph.n_nodes * (1 + self.code_width), a.hidden_width, a.mp_steps)
        else:
            self._nets = [("gnn", 2)] if a.variant == "gnn" else [("amp", 1), ("phase", 1)]
            layout = []
            for prefix, n_out in self._nets:
                layout += gnn_layout(prefix, 1 + self.code_width, 1, a.embed_dim, a.hidden_width,
                                     a.hidden_layers, a.mp_steps, n_out)
        self.template = ParameterSet(layout)
        edge_value = graph.couplings if a.include_coupling_edge_feature else np.zeros(graph.n_edges)
        self._edge_in = edge_value.reshape(-1, 1).astype(np.float64)

    @property
    def code_width(self) -> int:
        return self.codes.shape[1]

    @property
    def n_params(self) -> int:
        return self.template.total_count

    def init_params(self, seed: int | None = None) -> ParameterSet:
        """Fan-in scaled uniform weights and zero biases, deterministic in ``seed``."""
        rng = np.random.default_rng(self.arch.seed if seed is None else seed)
        params = self.template.zeros_like()
        for name, shape in params.layout:
            if len(shape) == 2:
                params[name][...] = lecun_uniform(rng, shape)
        return params

    def zero_params(self) -> ParameterSet:
        return self.template.zeros_like()

    def parameters_from(self, flat) -> ParameterSet:
        return self.template.with_flat(_flat(flat))

    # ------------------------------------------------------------ evaluation

    def _check(self, configs) -> tuple[np.ndarray, bool]:
        configs = np.asarray(configs)
        single = configs.ndim == 1
        configs = np.atleast_2d(configs)
        if configs.shape[1] != self.n_sites:
            raise ShapeMismatch(f"configurations have {configs.shape[1]} spins, graph has {self.n_sites} nodes")
        return configs, single

    def _chunk(self) -> int:
        rows = self.graph.n_edges if self.arch.variant != "resnet" else 1
        return max(1, _CHUNK_EDGE_ROWS // max(rows, 1))

    def _node_inputs(self, configs: np.ndarray) -> np.ndarray:
        b = len(configs)
        spins = configs.astype(np.float64)[:, :, None]
        if self.code_width == 0:
            return spins
        return np.concatenate([spins, np.broadcast_to(self.codes, (b, *self.codes.shape))], axis=2)

    def _forward(self, p: dict, configs: np.ndarray):
        if self.arch.variant == "resnet":
            x = self._node_inputs(configs).reshape(len(configs), -1)
            out, cache = resnet_forward(p, "resnet", self.arch.mp_steps, x)
            return out, [cache]
        node_in = self._node_inputs(configs)
        outs, caches = [], []
        for prefix, _ in self._nets:
            out, cache = gnn_forward(p, prefix, self.arch.mp_steps, self.graph, node_in, self._edge_in)
            outs.append(out)
            caches.append(cache)
        return np.concatenate(outs, axis=1), caches

    def _backward(self, p: dict, g: dict, caches, grad_out: np.ndarray) -> None:
        if self.arch.variant == "resnet":
            resnet_backward(p, g, "resnet", caches[0], grad_out)
            return
        if self.arch.variant == "gnn":
            gnn_backward(p, g, "gnn", self.graph, caches[0], grad_out)
            return
        for k, ((prefix, _), cache) in enumerate(zip(self._nets, caches)):
            cot = grad_out[:, k : k + 1]
            if np.any(cot):
                gnn_backward(p, g, prefix, self.graph, cache, cot)

    def evaluate(self, params, configs) -> Amplitudes:
        """``(log_amp, phase)`` for a batch ``(B, N)`` or a single configuration."""
        configs, single = self._check(configs)
        p = self.template.views(_flat(params))
        chunk = self._chunk()
        out = np.empty((len(configs), 2))
        for start in range(0, len(configs), chunk):
            out[start : start + chunk] = self._forward(p, configs[start : start + chunk])[0]
        if single:
            return Amplitudes(out[0, 0], out[0, 1])
        return Amplitudes(out[:, 0].copy(), out[:, 1].copy())

    def vjp(self, params, configs, cot_log_amp, cot_phase) -> np.ndarray:
        """Gradient of ``sum_b cot_log_amp[b] * log_amp_b + cot_phase[b] * phase_b``."""
        configs, _ = self._check(configs)
        cot = np.stack([np.broadcast_to(cot_log_amp, len(configs)), np.broadcast_to(cot_phase, len(configs))], 1)
        p = self.template.views(_flat(params))
        grad = np.zeros(self.n_params)
        g = self.template.views(grad)
        chunk = self._chunk()
        for start in range(0, len(configs), chunk):
            sl = slice(start, start + chunk)
            if not np.any(cot[sl]):
                continue
            _, caches = self._forward(p, configs[sl])
            self._backward(p, g, caches, cot[sl])
        return grad

    def gradients(self, params, configs) -> GradientPair:
        """Per-configuration gradients of ``log_amp`` and ``phase``.

        For a single configuration the vectors have length ``n_params``;
        for a batch they are stacked into ``(B, n_params)``.
        """
        configs, single = self._check(configs)
        p = self.template.views(_flat(params))
        d_amp = np.zeros((len(configs), self.n_params))
        d_phase = np.zeros((len(configs), self.n_params))
        for b in range(len(configs)):
            _, caches = self._forward(p, configs[b : b + 1])
            self._backward(p, self.template.views(d_amp[b]), caches, np.array([[1.0, 0.0]]))
            self._backward(p, self.template.views(d_phase[b]), caches, np.array([[0.0, 1.0]]))
        if single:
            return GradientPair(d_amp[0], d_phase[0])
        return GradientPair(d_amp, d_phase)

    def log_psi(self, params):
        """Closure ``configs -> Amplitudes`` with frozen parameters."""
        flat = _flat(params).copy()
        return lambda configs: self.evaluate(flat, configs)
