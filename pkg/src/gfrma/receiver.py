"""Joint iterative channel estimation, active-user detection, and decoding.

The factor graph has four node types: resource-element nodes (one per RE),
variable nodes (one per coded symbol), check nodes (LDPC), and one user
status node per user carrying its channel estimate and activity posterior.
Messages flow RE -> symbol -> LDPC -> symbol -> RE each iteration, with the
user status nodes refreshed from the symbol-wise channel estimates.

The scalar functions below are the per-edge update rules; joint_decode is
the production path and applies the same rules vectorized over all edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ldpc
from .config import SystemConfig
from .pattern import AccessGraph

LLR_CLAMP = ldpc.LLR_CLAMP
Q_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# scalar update rules

def interference_moments(contributors):
    """Gaussian moments of the aggregate interference at one RE.

    contributors: iterable of (q, mu_h, xi_h, L) for every (user, symbol)
    pair on the RE other than the target. Soft symbol mean is tanh(L/2);
    activity enters as an independent Bernoulli(q) factor and E[x^2] = 1
    for +/-1 symbols.
    """
    mu = 0.0
    var = 0.0
    for q, mu_h, xi_h, L in contributors:
        m = math.tanh(L / 2.0)
        mu += q * mu_h * m
        var += q * (mu_h * mu_h + xi_h) - (q * mu_h * m) ** 2
    return mu, var


def ren_to_vn(mu_h, xi_h, y, mu_i, xi_i, xi_w):
    """LLR from an RE to a symbol: 2 mu_h (y - mu_i) / (xi_h + xi_i + xi_w)."""
    L = 2.0 * mu_h * (y - mu_i) / (xi_h + xi_i + xi_w)
    return float(np.clip(L, -LLR_CLAMP, LLR_CLAMP))


def vn_total(re_messages):
    """Channel portion of a symbol's LLR: sum over its connected REs."""
    return float(np.sum(re_messages)) if len(re_messages) else 0.0


def channel_edge_estimate(L, y, mu_i, xi_i, xi_w):
    """Symbol-wise channel estimate from one edge, in information form.

    Returns (w, w*mu) with w = tanh^2(L/2) / (xi_i + xi_w) and
    w*mu = (y - mu_i) tanh(L/2) / (xi_i + xi_w): the precision and scaled
    mean of the per-edge estimate. Finite for all L including L = 0, where
    the edge simply contributes nothing.
    """
    th = math.tanh(L / 2.0)
    denom = xi_i + xi_w
    return th * th / denom, (y - mu_i) * th / denom


def usn_combine(edge_pairs, prior_mean, prior_var):
    """Precision-weighted fusion of edge estimates with the channel prior."""
    w_sum = 1.0 / prior_var
    wm_sum = prior_mean / prior_var
    for w, wm in edge_pairs:
        w_sum += w
        wm_sum += wm
    return wm_sum / w_sum, 1.0 / w_sum


def activity_posterior(mu_h, xi_h, prior_mean, prior_var, p_a):
    """MAP activity probability from the fused channel estimate.

    Two-hypothesis ratio: active with density N(prior_mean, prior_var)
    evaluated at mu_h, against inactive (gain 0) smoothed by xi_h.
    Computed in the log domain; clamped away from exactly 0 and 1.
    """
    if p_a >= 1.0:
        return 1.0 - Q_FLOOR
    if p_a <= 0.0:
        return Q_FLOOR
    log_a = (math.log(p_a) - 0.5 * math.log(prior_var)
             - (mu_h - prior_mean) ** 2 / (2.0 * prior_var))
    log_i = (math.log(1.0 - p_a) - 0.5 * math.log(xi_h)
             - mu_h ** 2 / (2.0 * xi_h))
    q = 1.0 / (1.0 + math.exp(min(log_i - log_a, 700.0)))
    return float(np.clip(q, Q_FLOOR, 1.0 - Q_FLOOR))


# ---------------------------------------------------------------------------
# full joint decoder

@dataclass
class BeliefState:
    """All messages of the joint decoder at one iteration."""

    v2r: np.ndarray      # LLR per access-graph edge, symbol -> RE
    r2v: np.ndarray      # LLR per access-graph edge, RE -> symbol
    c2v: np.ndarray      # (K, E_ldpc) LDPC check -> variable messages
    mu_h: np.ndarray     # per-user channel mean estimate
    xi_h: np.ndarray     # per-user channel variance estimate
    q: np.ndarray        # per-user activity posterior
    iteration: int = 0


@dataclass
class TrialOutcome:
    decoded_bits: np.ndarray      # (K, m); meaningful only for declared users
    syndrome_pass: np.ndarray     # bool per user
    declared: np.ndarray          # bool per user: q > threshold at the end
    q: np.ndarray
    mu_h: np.ndarray
    xi_h: np.ndarray
    iterations: int = 0
    converged: str = "max_iterations"


def initial_state(cfg: SystemConfig, graph: AccessGraph, n_ldpc_edges):
    return BeliefState(
        v2r=np.zeros(graph.n_edges),
        r2v=np.zeros(graph.n_edges),
        c2v=np.zeros((cfg.K, n_ldpc_edges)),
        mu_h=np.full(cfg.K, cfg.prior.mean),
        xi_h=np.full(cfg.K, cfg.prior.var),
        q=np.full(cfg.K, cfg.p_a),
    )


def joint_decode(cfg: SystemConfig, received, graph: AccessGraph,
                 pc: ldpc.ParityCheck, known_active=None, pinned_csi=None,
                 stall_tol=1e-7, trace=None,
                 collect_states=None) -> TrialOutcome:
    """Run the full joint iteration on one received block.

    known_active: bool mask for the registration-based baseline; users known
    inactive are removed from the graph and actives have q pinned to 1.
    pinned_csi: (gains, variance) for the genie baseline; channel estimates
    are pinned instead of estimated.
    trace: optional list collecting per-iteration diagnostic strings.
    collect_states: optional list collecting a BeliefState copy per iteration.
    """
    y = np.asarray(received, dtype=float)
    if known_active is not None:
        known_active = np.asarray(known_active, dtype=bool)
        keep = known_active[graph.edge_user]
        graph = AccessGraph(graph.K, graph.N, graph.T,
                            graph.edge_user[keep], graph.edge_sym[keep],
                            graph.edge_re[keep])

    layout = ldpc.EdgeLayout.from_code(pc)
    e_user = graph.edge_user
    e_re = graph.edge_re
    e_gsym = graph.edge_user * graph.N + graph.edge_sym  # global symbol id
    xi_w = cfg.noise_variance
    prior = cfg.prior

    state = initial_state(cfg, graph, len(layout.edge_var))
    if known_active is not None:
        state.q = np.where(known_active, 1.0 - Q_FLOOR, Q_FLOOR)
    if pinned_csi is not None:
        gains, var = pinned_csi
        state.mu_h = np.asarray(gains, dtype=float).copy()
        state.xi_h = np.full(cfg.K, var)

    total = np.zeros((cfg.K, pc.n))
    prev_total = None
    converged = "max_iterations"
    n_iter = 0
    for n in range(1, cfg.max_iterations + 1):
        n_iter = n
        # (1) interference moments per edge, leave-one-out via RE aggregates
        m_soft = np.tanh(state.v2r / 2.0)
        a = state.q[e_user]
        mu = state.mu_h[e_user]
        xi = state.xi_h[e_user]
        term_mu = a * mu * m_soft
        # per-edge variance term: q (mu^2 + xi) - q^2 mu^2 m^2
        term_var = a * (mu * mu + xi) - term_mu ** 2
        S_mu = np.bincount(e_re, weights=term_mu, minlength=graph.T)
        S_var = np.bincount(e_re, weights=term_var, minlength=graph.T)
        mu_i = S_mu[e_re] - term_mu
        xi_i = np.maximum(S_var[e_re] - term_var, 0.0)

        # (2) RE -> symbol messages
        r2v = np.clip(2.0 * mu * (y[e_re] - mu_i) / (xi + xi_i + xi_w),
                      -LLR_CLAMP, LLR_CLAMP)
        state.r2v = r2v
        Lch = np.bincount(e_gsym, weights=r2v,
                          minlength=cfg.K * pc.n).reshape(cfg.K, pc.n)

        # (3) one flooding LDPC iteration per user
        c2v_sum = _sum_per_var(state.c2v, layout, cfg.K, pc.n)
        v2c = (Lch[:, layout.edge_var] + c2v_sum[:, layout.edge_var]
               - state.c2v)
        state.c2v = ldpc.check_messages(v2c, layout.chk_ptr)
        total = Lch + _sum_per_var(state.c2v, layout, cfg.K, pc.n)
        # extrinsic symbol -> RE messages
        state.v2r = np.clip(total.reshape(-1)[e_gsym] - r2v,
                            -LLR_CLAMP, LLR_CLAMP)

        # (4) symbol-wise channel estimates, fused per user
        if pinned_csi is None:
            th = np.tanh(state.v2r / 2.0)
            denom = xi_i + xi_w
            w = th * th / denom
            wm = (y[e_re] - mu_i) * th / denom
            W = np.bincount(e_user, weights=w, minlength=cfg.K)
            WM = np.bincount(e_user, weights=wm, minlength=cfg.K)
            prec = W + 1.0 / prior.var
            state.mu_h = (WM + prior.mean / prior.var) / prec
            state.xi_h = 1.0 / prec

        # (5) activity posteriors; users with no edges have no evidence and
        # keep the prior activity rate
        if known_active is None:
            q_new = _activity_posterior_vec(state.mu_h, state.xi_h,
                                            prior.mean, prior.var, cfg.p_a)
            has_edges = np.bincount(e_user, minlength=cfg.K) > 0
            state.q = np.where(has_edges, q_new, state.q)
        state.iteration = n
        if collect_states is not None:
            collect_states.append(BeliefState(
                state.v2r.copy(), state.r2v.copy(), state.c2v.copy(),
                state.mu_h.copy(), state.xi_h.copy(), state.q.copy(), n))

        hard = (total < 0).astype(np.uint8)
        synd = _syndrome_vec(hard, pc)
        declared = state.q > cfg.activity_threshold
        if trace is not None:
            for k in range(cfg.K):
                trace.append(f"{n}, {k}, {state.mu_h[k]:.6g}, "
                             f"{state.xi_h[k]:.6g}, {state.q[k]:.6g}, "
                             f"{bool(synd[k])}")
        if declared.any() and synd[declared].all():
            converged = "all_declared_decoded"
            break
        if stall_tol is not None and prev_total is not None:
            if np.max(np.abs(total - prev_total)) < stall_tol:
                converged = "stalled"
                break
        prev_total = total.copy()

    hard = (total < 0).astype(np.uint8)
    synd = _syndrome_vec(hard, pc)
    declared = state.q > cfg.activity_threshold
    return TrialOutcome(
        decoded_bits=hard[:, :pc.m],
        syndrome_pass=synd,
        declared=declared,
        q=state.q.copy(),
        mu_h=state.mu_h.copy(),
        xi_h=state.xi_h.copy(),
        iterations=n_iter,
        converged=converged,
    )


def joint_decode_incremental(cfg, received, graph, pc, t_limit,
                             **kwargs) -> TrialOutcome:
    """Decode from the first t_limit REs only (rateless prefix)."""
    sub = graph.restricted(t_limit)
    return joint_decode(cfg, np.asarray(received)[:t_limit], sub, pc,
                        **kwargs)


def _sum_per_var(c2v, layout, K, n):
    """Sum LDPC edge messages onto variables, for all users at once."""
    flat_idx = (np.arange(K)[:, None] * n + layout.edge_var[None, :]).ravel()
    return np.bincount(flat_idx, weights=c2v.ravel(),
                       minlength=K * n).reshape(K, n)


def _activity_posterior_vec(mu_h, xi_h, prior_mean, prior_var, p_a):
    if p_a >= 1.0:
        return np.full_like(mu_h, 1.0 - Q_FLOOR)
    log_a = (np.log(p_a) - 0.5 * np.log(prior_var)
             - (mu_h - prior_mean) ** 2 / (2.0 * prior_var))
    log_i = (np.log(1.0 - p_a) - 0.5 * np.log(xi_h)
             - mu_h ** 2 / (2.0 * xi_h))
    q = 1.0 / (1.0 + np.exp(np.minimum(log_i - log_a, 700.0)))
    return np.clip(q, Q_FLOOR, 1.0 - Q_FLOOR)


def _syndrome_vec(hard_bits, pc):
    """Per-user syndrome check for a (K, n) bit matrix."""
    ok = np.ones(hard_bits.shape[0], dtype=bool)
    for vs in pc.chk_vars:
        ok &= hard_bits[:, vs].sum(axis=1) % 2 == 0
    return ok
