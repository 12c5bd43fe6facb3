"""Density-evolution performance predictor.

Tracks per-user mutual information through the joint iteration using the
J-function (MI of a symmetric Gaussian LLR as a function of its standard
deviation), with the channel-estimate uncertainty folded in by averaging
the MI over a truncated Gaussian model of the estimated gain.

j_function / j_inverse are the exact quadrature-backed operations; the DE
recursion internally uses monotone-spline tables built from them once (the
tables agree with the exact operations to ~1e-8, far below the threshold
tolerance).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize

from .config import (SystemConfig, db_to_linear, linear_to_db,
                     noise_variance_for_snr, racf_mean_degree)

_X_MAX = 60.0          # J saturates to 1 well below this
_MI_CONVERGED = 1.0 - 1e-4


def j_function(x):
    """MI of an LLR distributed N(x^2/2, x^2); adaptive quadrature.

    J(0) = 0, strictly increasing, J(x) -> 1 as x -> infinity.
    """
    x = float(x)
    if x < 0:
        raise ValueError("j_function requires x >= 0")
    if x == 0.0:
        return 0.0

    def integrand(u):
        # substitution xi = x^2/2 + x*u, u ~ N(0,1); stable softplus
        v = x * x / 2.0 + x * u
        return (math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
                * np.logaddexp(0.0, -v) / math.log(2.0))

    val, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-11,
                            limit=200)
    return 1.0 - val


def j_inverse(mi):
    """Solve j_function(x) = mi by bracketing root-find."""
    mi = float(mi)
    if not (0.0 <= mi < 1.0):
        raise ValueError("j_inverse requires 0 <= mi < 1")
    if mi == 0.0:
        return 0.0
    hi = 1.0
    while j_function(hi) < mi:
        hi *= 2.0
        if hi > _X_MAX:
            return _X_MAX
    return float(optimize.brentq(lambda x: j_function(x) - mi, 0.0, hi,
                                 xtol=1e-12, rtol=1e-14))


class _Tables:
    """Lazily built spline tables for the DE hot path."""

    def __init__(self):
        self._j = None
        self._j_inv = None
        self._omega = None

    def build(self):
        x = np.concatenate([np.linspace(0.0, 12.0, 1200),
                            np.linspace(12.02, _X_MAX, 400)])
        jv = np.array([j_function(v) for v in x])
        self._j = interpolate.PchipInterpolator(x, jv)
        # strictly increasing part for the inverse
        keep = np.concatenate([[True], np.diff(jv) > 1e-15])
        self._j_inv = interpolate.PchipInterpolator(jv[keep], x[keep])
        self._j_max = jv[keep][-1]
        iv = np.linspace(0.0, 0.9995, 500)
        self._omega = interpolate.PchipInterpolator(
            iv, [_omega_exact(v) for v in iv])

    def j(self, x):
        if self._j is None:
            self.build()
        return np.clip(self._j(np.minimum(x, _X_MAX)), 0.0, 1.0)

    def j_inv(self, mi):
        if self._j is None:
            self.build()
        return self._j_inv(np.clip(mi, 0.0, self._j_max))

    def omega(self, mi):
        if self._j is None:
            self.build()
        mi = np.asarray(mi, dtype=float)
        return np.where(mi >= 0.9995, 1.0 - (1.0 - mi) * 1e-9,
                        np.clip(self._omega(np.minimum(mi, 0.9995)), 0.0, 1.0))


_tables = _Tables()


def _omega_exact(mi):
    """E[tanh^2(L/2)] for L ~ N(s^2/2, s^2) with s = j_inverse(mi)."""
    if mi <= 0.0:
        return 0.0
    s = j_inverse(mi)

    def integrand(u):
        return (math.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
                * math.tanh((s * s / 2.0 + s * u) / 2.0) ** 2)

    val, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-10,
                            limit=200)
    return val


def omega(mi):
    """Residual soft-symbol power E[tanh^2(L/2)] at mutual information mi."""
    return _omega_exact(float(mi))


def l1(h, mean_degree, T, N, mu_h, xi_total):
    """Mean of the channel-side LLR: 2 h E[d] T mu_h / (xi_total N).

    xi_total = xi_interference + xi_channel + xi_noise.
    """
    return 2.0 * h * mean_degree * T * mu_h / (xi_total * N)


def check_degree_profile(N, m, d_v):
    """Edge-perspective check degrees of the regular code: [(d_c, fraction)]."""
    n_checks = N - m
    edges = N * d_v
    lo = edges // n_checks
    n_hi = edges - lo * n_checks          # checks of degree lo+1
    n_lo = n_checks - n_hi
    prof = []
    if n_lo:
        prof.append((lo, n_lo * lo / edges))
    if n_hi:
        prof.append((lo + 1, n_hi * (lo + 1) / edges))
    return prof


def l2(mu_channel, d_v, dc_profile, mu_c2v_prev):
    """One Gaussian-approximation LDPC DE step: mean of check-to-variable LLR.

    Variable-to-check mean is mu_channel + (d_v - 1) * mu_c2v_prev; the
    check update runs through the J-function MI algebra averaged over the
    edge-perspective check-degree profile.
    """
    mu_vc = np.maximum(np.asarray(mu_channel, dtype=float)
                       + (d_v - 1) * np.asarray(mu_c2v_prev, dtype=float),
                       0.0)
    i_vc = _tables.j(np.sqrt(2.0 * mu_vc))
    x_rev = _tables.j_inv(1.0 - i_vc)
    i_cv = np.zeros_like(np.asarray(mu_vc, dtype=float))
    for dc, frac in dc_profile:
        i_cv = i_cv + frac * (1.0 - _tables.j(math.sqrt(dc - 1) * x_rev))
    return _tables.j_inv(np.clip(i_cv, 0.0, 1.0)) ** 2 / 2.0


def de_interference_variance(active_gains, racf, mi, xi_h):
    """Aggregate interference variance left after soft cancellation.

    Per active user: E[d] * ((h^2 + xi_h) - h^2 * Omega(I)); the activity
    factor is 1 because the DE analyzes the actual active set.
    """
    g = np.asarray(active_gains, dtype=float)
    ed = racf_mean_degree(racf)
    om = _tables.omega(np.asarray(mi, dtype=float))
    return float(np.sum(ed * ((g * g + np.asarray(xi_h)) - g * g * om)))


def de_channel_variance(racf, T, xi_s, xi_w, prior_var, mi):
    """Expected fused channel-estimate variance at mutual information mi.

    T E[d] edges each contribute mean precision Omega(I)/(xi_s + xi_w);
    fused with the prior precision.
    """
    ed = racf_mean_degree(racf)
    prec = T * ed * _tables.omega(np.asarray(mi, dtype=float)) / (xi_s + xi_w) \
        + 1.0 / prior_var
    return 1.0 / prec


@dataclass
class DeState:
    """Density-evolution trajectory state for the active users."""

    mi: np.ndarray        # per-user mutual information, in [0, 1]
    xi_h: np.ndarray      # per-user channel-estimate variance
    mu_c2v: np.ndarray    # per-user inner LDPC state (check-to-variable mean)
    xi_s: float           # shared interference variance
    iteration: int = 0


def initial_de_state(cfg: SystemConfig, active_gains) -> DeState:
    g = np.asarray(active_gains, dtype=float)
    mi0 = np.zeros(len(g))
    xi_h0 = np.full(len(g), cfg.prior.var)
    xi_s0 = de_interference_variance(g, cfg.racf, mi0, xi_h0)
    return DeState(mi0, xi_h0, np.zeros(len(g)), xi_s0)


def mi_step(state: DeState, cfg: SystemConfig, active_gains,
            n_nodes=64) -> DeState:
    """Advance the MI recursion by one iteration.

    The per-user MI update averages J over the truncated Gaussian model of
    the estimated gain (mu <= h, density doubled) by Gauss-Legendre
    quadrature on [h - 8 sqrt(xi_h), h]. The interference and channel
    variance recursions are then refreshed from the new MI values.
    """
    g = np.asarray(active_gains, dtype=float)
    ed = racf_mean_degree(cfg.racf)
    dc_prof = check_degree_profile(cfg.N, cfg.m, cfg.d_v)
    xi_w = cfg.noise_variance
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)

    mi_new = np.zeros(len(g))
    mu_c2v_new = np.zeros(len(g))
    for k, h in enumerate(g):
        xi_h = state.xi_h[k]
        xi_total = state.xi_s + xi_h + xi_w
        if xi_h < 1e-30:
            mu_l = max(l1(h, ed, cfg.T, cfg.N, h, xi_total), 0.0)
            mu_cv = l2(mu_l, cfg.d_v, dc_prof, state.mu_c2v[k])
            mi_new[k] = _tables.j(
                math.sqrt(2.0 * max(mu_l + cfg.d_v * mu_cv, 0.0)))
            mu_c2v_new[k] = mu_cv
            continue
        sd = math.sqrt(xi_h)
        lo, hi = h - 8.0 * sd, h
        mu = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        wq = 0.5 * (hi - lo) * weights
        pdf2 = 2.0 * np.exp(-(mu - h) ** 2 / (2.0 * xi_h)) \
            / math.sqrt(2.0 * math.pi * xi_h)
        mu_l = np.maximum(l1(h, ed, cfg.T, cfg.N, mu, xi_total), 0.0)
        mu_cv = l2(mu_l, cfg.d_v, dc_prof, state.mu_c2v[k])
        jvals = _tables.j(np.sqrt(2.0 * np.maximum(
            mu_l + cfg.d_v * mu_cv, 0.0)))
        mass = float(np.sum(wq * pdf2))
        mi_new[k] = float(np.sum(wq * pdf2 * jvals))
        mu_c2v_new[k] = float(np.sum(wq * pdf2 * mu_cv) / max(mass, 1e-300))
    mi_new = np.clip(mi_new, 0.0, 1.0)
    xi_s_new = de_interference_variance(g, cfg.racf, mi_new, state.xi_h)
    xi_h_new = de_channel_variance(cfg.racf, cfg.T, xi_s_new, xi_w,
                                   cfg.prior.var, mi_new)
    return DeState(mi_new, xi_h_new, mu_c2v_new, xi_s_new,
                   state.iteration + 1)


def run_de(cfg: SystemConfig, active_gains, max_iter=1000, stall_tol=1e-10,
           trace=None):
    """Iterate the recursion; returns the final DeState.

    trace, if given, is a list collecting (iteration, DeState) snapshots.
    """
    state = initial_de_state(cfg, active_gains)
    if trace is not None:
        trace.append(state)
    for _ in range(max_iter):
        new = mi_step(state, cfg, active_gains)
        if trace is not None:
            trace.append(new)
        done = np.all(new.mi > _MI_CONVERGED)
        stalled = np.max(np.abs(new.mi - state.mi)) < stall_tol
        state = new
        if done or stalled:
            break
    return state


def de_converges(cfg: SystemConfig, active_gains, gamma,
                 max_iter=1000) -> bool:
    """True if every active user's MI reaches 1 at linear SNR gamma."""
    xi_w = noise_variance_for_snr(cfg, gamma, active_gains)
    final = run_de(cfg.with_noise_variance(xi_w), active_gains,
                   max_iter=max_iter)
    return bool(np.all(final.mi > _MI_CONVERGED))


def threshold_search(cfg: SystemConfig, active_gains, gamma_lo_db=-10.0,
                     gamma_hi_db=20.0, tol_db=0.05, gamma_max_db=40.0):
    """Bisection for the threshold SNR (dB) above which DE converges.

    Returns the threshold in dB, or +inf if no success below gamma_max_db.
    The initial bracket is auto-expanded until it straddles the threshold.
    """
    if not de_converges(cfg, active_gains, db_to_linear(gamma_max_db)):
        return float("inf")
    lo, hi = float(gamma_lo_db), min(float(gamma_hi_db), gamma_max_db)
    while de_converges(cfg, active_gains, db_to_linear(lo)):
        hi = lo
        lo -= 10.0
        if lo < -60.0:
            return lo
    while not de_converges(cfg, active_gains, db_to_linear(hi)):
        lo = hi
        hi = min(hi + 5.0, gamma_max_db)
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if de_converges(cfg, active_gains, db_to_linear(mid)):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def write_de_trace(cfg: SystemConfig, active_gains, gamma_db_list, path,
                   threshold_db=None):
    """CSV trace: gamma_db, iteration, user, mi, xi_h, xi_sigma."""
    with open(path, "w", newline="") as f:
        f.write("gamma_db,iteration,user,mi,xi_h,xi_sigma\n")
        for gdb in gamma_db_list:
            xi_w = noise_variance_for_snr(cfg, db_to_linear(gdb),
                                          active_gains)
            trace = []
            run_de(cfg.with_noise_variance(xi_w), active_gains, trace=trace)
            for st in trace:
                for k in range(len(st.mi)):
                    f.write(f"{gdb:.6g},{st.iteration},{k},"
                            f"{st.mi[k]:.10g},{st.xi_h[k]:.10g},"
                            f"{st.xi_s:.10g}\n")
        if threshold_db is not None:
            f.write(f"# gamma_th_db,{threshold_db:.6g}\n")
