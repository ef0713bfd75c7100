"""Forward and reverse passes of the graph network and the ResNet baseline.

Shapes: ``B`` configurations, ``N`` nodes, ``E`` directed edges, ``D``
embedding width, ``H`` hidden width.
"""
from __future__ import annotations

import numpy as np

from .layers import mlp_backward, mlp_forward, mlp_layout, tail_backward, tail_forward


def gnn_layout(prefix: str, node_features: int, edge_features: int, embed: int, hidden: int,
               hidden_layers: int, mp_steps: int, n_out: int):
    inner = [hidden] * hidden_layers
    layout = mlp_layout(f"{prefix}/node_enc", [node_features, *inner, embed])
    layout += mlp_layout(f"{prefix}/edge_enc", [edge_features, *inner, embed])
    for t in range(mp_steps):
        layout += mlp_layout(f"{prefix}/step{t}/edge", [3 * embed, *inner, embed])
        layout += mlp_layout(f"{prefix}/step{t}/node", [2 * embed, *inner, embed])
    layout += mlp_layout(f"{prefix}/node_dec", [embed, *inner, embed])
    layout += mlp_layout(f"{prefix}/edge_dec", [embed, *inner, embed])
    layout.append((f"{prefix}/out/w", (2 * embed, n_out)))
    return layout


def gnn_forward(p: dict, prefix: str, mp_steps: int, graph, node_in: np.ndarray, edge_in: np.ndarray):
    """Encode-process-decode pass; returns ``(outputs (B, n_out), cache)``."""
    B, N, _ = node_in.shape
    E = graph.n_edges
    senders, receivers = graph.senders, graph.receivers
    recv_inc = graph.receiver_incidence

    v, c_nenc = mlp_forward(p, f"{prefix}/node_enc", node_in.reshape(B * N, -1))
    D = v.shape[1]
    v = v.reshape(B, N, D)
    e0, c_eenc = mlp_forward(p, f"{prefix}/edge_enc", edge_in)
    e = np.broadcast_to(e0, (B, E, D))

    steps = []
    for t in range(mp_steps):
        pe = f"{prefix}/step{t}/edge"
        w1 = p[f"{pe}/0/w"]
        v2 = v.reshape(B * N, D)
        e2 = np.ascontiguousarray(e).reshape(B * E, D)
        from_src = (v2 @ w1[D : 2 * D]).reshape(B, N, -1)
        from_dst = (v2 @ w1[2 * D :]).reshape(B, N, -1)
        pre = (e2 @ w1[:D]).reshape(B, E, -1)
        pre += from_src[:, senders]
        pre += from_dst[:, receivers]
        pre += p[f"{pe}/0/b"]
        e_upd, acts_e = tail_forward(p, pe, pre.reshape(B * E, -1))
        e_upd = e_upd.reshape(B, E, D)

        pn = f"{prefix}/step{t}/node"
        w1n = p[f"{pn}/0/w"]
        agg = np.matmul(recv_inc, e_upd).reshape(B * N, D)
        pre_n = v2 @ w1n[:D]
        pre_n += agg @ w1n[D:]
        pre_n += p[f"{pn}/0/b"]
        v_upd, acts_v = tail_forward(p, pn, pre_n)

        steps.append((v2, e2, agg, acts_e, acts_v))
        e = e + e_upd
        v = v + v_upd.reshape(B, N, D)

    v_dec, c_vdec = mlp_forward(p, f"{prefix}/node_dec", v.reshape(B * N, D))
    e_dec, c_edec = mlp_forward(p, f"{prefix}/edge_dec", np.ascontiguousarray(e).reshape(B * E, D))
    z = np.concatenate([v_dec.reshape(B, N, D).sum(axis=1), e_dec.reshape(B, E, D).sum(axis=1)], axis=1)
    out = z @ p[f"{prefix}/out/w"]
    cache = (B, N, E, D, c_nenc, c_eenc, steps, c_vdec, c_edec, z)
    return out, cache


def gnn_backward(p: dict, g: dict, prefix: str, graph, cache, grad_out: np.ndarray) -> None:
    """Accumulate into ``g`` the vector-Jacobian product for ``grad_out (B, n_out)``."""
    B, N, E, D, c_nenc, c_eenc, steps, c_vdec, c_edec, z = cache
    send_inc, recv_inc = graph.sender_incidence, graph.receiver_incidence

    g[f"{prefix}/out/w"] += z.T @ grad_out
    gz = grad_out @ p[f"{prefix}/out/w"].T
    g_vdec = np.repeat(gz[:, None, :D], N, axis=1).reshape(B * N, D)
    g_edec = np.repeat(gz[:, None, D:], E, axis=1).reshape(B * E, D)
    g_v = mlp_backward(p, g, f"{prefix}/node_dec", c_vdec, g_vdec).reshape(B, N, D)
    g_e = mlp_backward(p, g, f"{prefix}/edge_dec", c_edec, g_edec).reshape(B, E, D)

    for t in range(len(steps) - 1, -1, -1):
        v2, e2, agg, acts_e, acts_v = steps[t]
        pn = f"{prefix}/step{t}/node"
        w1n = p[f"{pn}/0/w"]
        gw1n = g[f"{pn}/0/w"]
        g_pre_n = tail_backward(p, g, pn, acts_v, g_v.reshape(B * N, D))
        gw1n[:D] += v2.T @ g_pre_n
        gw1n[D:] += agg.T @ g_pre_n
        g[f"{pn}/0/b"] += g_pre_n.sum(axis=0)
        g_v = g_v + (g_pre_n @ w1n[:D].T).reshape(B, N, D)
        g_agg = (g_pre_n @ w1n[D:].T).reshape(B, N, D)
        g_eupd = g_e + np.matmul(recv_inc.T, g_agg)

        pe = f"{prefix}/step{t}/edge"
        w1 = p[f"{pe}/0/w"]
        gw1 = g[f"{pe}/0/w"]
        g_pre = tail_backward(p, g, pe, acts_e, g_eupd.reshape(B * E, D))
        H = g_pre.shape[1]
        g_pre3 = g_pre.reshape(B, E, H)
        g_src = np.matmul(send_inc, g_pre3).reshape(B * N, H)
        g_dst = np.matmul(recv_inc, g_pre3).reshape(B * N, H)
        gw1[:D] += e2.T @ g_pre
        gw1[D : 2 * D] += v2.T @ g_src
        gw1[2 * D :] += v2.T @ g_dst
        g[f"{pe}/0/b"] += g_pre.sum(axis=0)
        g_e = g_e + (g_pre @ w1[:D].T).reshape(B, E, D)
        g_v = g_v + (g_src @ w1[D : 2 * D].T + g_dst @ w1[2 * D :].T).reshape(B, N, D)

    mlp_backward(p, g, f"{prefix}/edge_enc", c_eenc, g_e.sum(axis=0), need_input_grad=False)
    mlp_backward(p, g, f"{prefix}/node_enc", c_nenc, g_v.reshape(B * N, D), need_input_grad=False)


# ------------------------------------------------------------------ ResNet


def resnet_layout(prefix: str, n_in: int, width: int, blocks: int, n_out: int = 2):
    layout = [(f"{prefix}/in/w", (n_in, width)), (f"{prefix}/in/b", (width,))]
    for t in range(blocks):
        layout += [
            (f"{prefix}/block{t}/w1", (width, width)),
            (f"{prefix}/block{t}/b1", (width,)),
            (f"{prefix}/block{t}/w2", (width, width)),
            (f"{prefix}/block{t}/b2", (width,)),
        ]
    layout.append((f"{prefix}/out/w", (width, n_out)))
    return layout


def resnet_forward(p: dict, prefix: str, blocks: int, x: np.ndarray):
    h = x @ p[f"{prefix}/in/w"] + p[f"{prefix}/in/b"]
    acts = []
    for t in range(blocks):
        a = np.maximum(h @ p[f"{prefix}/block{t}/w1"] + p[f"{prefix}/block{t}/b1"], 0.0)
        acts.append((h, a))
        h = h + a @ p[f"{prefix}/block{t}/w2"] + p[f"{prefix}/block{t}/b2"]
    f = np.maximum(h, 0.0)
    return f @ p[f"{prefix}/out/w"], (x, acts, f)


def resnet_backward(p: dict, g: dict, prefix: str, cache, grad_out: np.ndarray) -> None:
    x, acts, f = cache
    g[f"{prefix}/out/w"] += f.T @ grad_out
    g_h = (grad_out @ p[f"{prefix}/out/w"].T) * (f > 0)
    for t in range(len(acts) - 1, -1, -1):
        h, a = acts[t]
        g[f"{prefix}/block{t}/w2"] += a.T @ g_h
        g[f"{prefix}/block{t}/b2"] += g_h.sum(axis=0)
        g_a = (g_h @ p[f"{prefix}/block{t}/w2"].T) * (a > 0)
        g[f"{prefix}/block{t}/w1"] += h.T @ g_a
        g[f"{prefix}/block{t}/b1"] += g_a.sum(axis=0)
        g_h = g_h + g_a @ p[f"{prefix}/block{t}/w1"].T
    g[f"{prefix}/in/w"] += x.T @ g_h
    g[f"{prefix}/in/b"] += g_h.sum(axis=0)
