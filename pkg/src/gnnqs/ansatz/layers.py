"""MLP building blocks with explicit forward caches and backward passes.

All arrays are 2D ``(rows, features)``.  An MLP is stored as weight/bias
pairs ``{prefix}/{k}/w`` and ``{prefix}/{k}/b``; every layer but the last
is followed by a ReLU whose subgradient at zero is taken as zero.
"""
from __future__ import annotations

import numpy as np


def mlp_layout(prefix: str, sizes: list[int]) -> list[tuple[str, tuple[int, ...]]]:
    layout = []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        layout.append((f"{prefix}/{k}/w", (fan_in, fan_out)))
        layout.append((f"{prefix}/{k}/b", (fan_out,)))
    return layout


def mlp_depth(p: dict, prefix: str) -> int:
    k = 0
    while f"{prefix}/{k}/w" in p:
        k += 1
    return k


def tail_forward(p: dict, prefix: str, pre0: np.ndarray):
    """Run an MLP from the pre-activation of its first layer.

    Returns the output and the list of post-ReLU activations needed by
    :func:`tail_backward`.
    """
    acts = []
    z = pre0
    for k in range(1, mlp_depth(p, prefix)):
        a = np.maximum(z, 0.0)
        acts.append(a)
        z = a @ p[f"{prefix}/{k}/w"]
        z += p[f"{prefix}/{k}/b"]
    return z, acts


def tail_backward(p: dict, g: dict, prefix: str, acts: list, grad_out: np.ndarray) -> np.ndarray:
    """Accumulate parameter gradients of layers 1.. and return d/d(pre0)."""
    grad = grad_out
    for k in range(len(acts), 0, -1):
        a = acts[k - 1]
        g[f"{prefix}/{k}/w"] += a.T @ grad
        g[f"{prefix}/{k}/b"] += grad.sum(axis=0)
        grad = grad @ p[f"{prefix}/{k}/w"].T
        grad *= a > 0
    return grad


def mlp_forward(p: dict, prefix: str, x: np.ndarray):
    pre0 = x @ p[f"{prefix}/0/w"]
    pre0 += p[f"{prefix}/0/b"]
    out, acts = tail_forward(p, prefix, pre0)
    return out, (x, acts)


def mlp_backward(p: dict, g: dict, prefix: str, cache, grad_out: np.ndarray, need_input_grad: bool = True):
    x, acts = cache
    grad_pre0 = tail_backward(p, g, prefix, acts, grad_out)
    g[f"{prefix}/0/w"] += x.T @ grad_pre0
    g[f"{prefix}/0/b"] += grad_pre0.sum(axis=0)
    if need_input_grad:
        return grad_pre0 @ p[f"{prefix}/0/w"].T
    return None


def lecun_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = shape[0]
    limit = np.sqrt(3.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)
