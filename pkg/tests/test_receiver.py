import dataclasses
import itertools
import math

import numpy as np
import pytest

from gfrma import config as C
from gfrma import ldpc as L
from gfrma import pattern as P
from gfrma import phy
from gfrma import receiver as R


# ---------------------------------------------------------------------------
# scalar update rules

def test_interference_moments_trivial():
    assert R.interference_moments([]) == (0.0, 0.0)
    mu, var = R.interference_moments([(1.0, 1.0, 0.0, 1e9)])
    assert mu == pytest.approx(1.0)
    assert var == pytest.approx(0.0, abs=1e-12)
    mu, var = R.interference_moments([(0.5, 1.0, 0.0, 0.0)])
    assert mu == pytest.approx(0.0) and var == pytest.approx(0.5)


def _enumerated_moments(contributors):
    """Exhaustive mean/variance over (activity, symbol) outcomes, xi_h = 0."""
    terms = []   # per contributor: list of (prob, value)
    for q, mu_h, _, llr in contributors:
        p1 = 1.0 / (1.0 + math.exp(-llr)) if np.isfinite(llr) else (
            1.0 if llr > 0 else 0.0)
        terms.append([(q * p1, mu_h), (q * (1 - p1), -mu_h), (1 - q, 0.0)])
    mean = 0.0
    second = 0.0
    for combo in itertools.product(*terms):
        p = np.prod([c[0] for c in combo])
        s = sum(c[1] for c in combo)
        mean += p * s
        second += p * s * s
    return mean, second - mean * mean


def test_interference_moments_enumeration_oracle():
    llrs = [0.0, 1.0, -1.0, np.inf, -np.inf]
    qs = [0.0, 0.5, 1.0]
    rng = np.random.default_rng(11)
    pools = [(q, float(rng.uniform(0.2, 2.0)), 0.0, llr)
             for q in qs for llr in llrs]
    for n_contrib in (1, 2, 3):
        for _ in range(60):
            idx = rng.integers(0, len(pools), n_contrib)
            contribs = [pools[i] for i in idx]
            mu, var = R.interference_moments(contribs)
            mu_ref, var_ref = _enumerated_moments(contribs)
            assert mu == pytest.approx(mu_ref, abs=1e-12)
            assert var == pytest.approx(var_ref, abs=1e-12)


def test_interference_moments_random_channel_mc():
    # with channel uncertainty, compare against direct Monte Carlo
    rng = np.random.default_rng(2)
    contribs = [(0.7, 1.2, 0.3, 0.8), (0.4, 0.9, 0.5, -1.5)]
    mu, var = R.interference_moments(contribs)
    n = 400000
    total = np.zeros(n)
    for q, mu_h, xi_h, llr in contribs:
        act = rng.random(n) < q
        h = rng.normal(mu_h, np.sqrt(xi_h), n)
        p1 = 1.0 / (1.0 + np.exp(-llr))
        x = np.where(rng.random(n) < p1, 1.0, -1.0)
        total += act * h * x
    se_mu = total.std() / np.sqrt(n)
    assert abs(mu - total.mean()) < 3 * se_mu
    # variance estimator std ~ var * sqrt(2/n) for near-normal sums
    assert abs(var - total.var()) < 4 * total.var() / np.sqrt(n) + 3 * se_mu


def test_ren_to_vn_examples():
    assert R.ren_to_vn(1.0, 0.0, 0.5, 0.0, 0.0, 1.0) == pytest.approx(1.0)
    assert R.ren_to_vn(0.7, 0.2, 1.3, 1.3, 0.4, 0.5) == 0.0
    big = R.ren_to_vn(1.0, 0.0, 100.0, 0.0, 0.0, 0.1)
    assert big == R.LLR_CLAMP          # clamped


def test_ren_to_vn_bpsk_limit():
    # interference-free, perfect CSI: must equal the exact BPSK LLR
    rng = np.random.default_rng(3)
    for _ in range(1000):
        y = rng.normal(0, 2)
        h = rng.uniform(0.1, 3.0)
        xi_w = rng.uniform(0.5, 5.0)
        exact = 2 * h * y / xi_w
        got = R.ren_to_vn(h, 0.0, y, 0.0, 0.0, xi_w)
        assert got == pytest.approx(np.clip(exact, -30, 30), abs=1e-12)


def test_vn_total():
    assert R.vn_total([]) == 0.0
    assert R.vn_total([1.0, -0.5, 0.25]) == pytest.approx(0.75)
    assert R.vn_total([-2.0]) == -2.0


def test_channel_edge_estimate_examples():
    assert R.channel_edge_estimate(0.0, 1.0, 0.3, 0.2, 0.1) == (0.0, 0.0)
    w, wm = R.channel_edge_estimate(1e6, 1.0, 0.2, 0.7, 0.3)
    assert w == pytest.approx(1.0) and wm == pytest.approx(0.8)
    # tanh(L/2) = 0.5, y - mu_i = 0.4, denom 1 -> estimate 0.8, variance 4
    Lval = 2 * np.arctanh(0.5)
    w, wm = R.channel_edge_estimate(Lval, 0.4, 0.0, 0.6, 0.4)
    assert w == pytest.approx(0.25) and wm == pytest.approx(0.2)


def test_usn_combine_examples():
    assert R.usn_combine([], 1.0, 10.0) == (1.0, 10.0)
    mu, xi = R.usn_combine([(1.0, 1.0)], 1.0, 10.0)
    assert mu == pytest.approx(1.0) and xi == pytest.approx(1 / 1.1)
    mu, xi = R.usn_combine([(1.0, 2.0), (1.0, 0.0)], 1.0, 1e12)
    assert mu == pytest.approx(1.0, abs=1e-9)
    assert xi == pytest.approx(0.5, abs=1e-9)


def test_usn_combine_grid_oracle():
    # product of Gaussian densities on a fine grid, numerically normalized
    rng = np.random.default_rng(5)
    grid = np.linspace(-30, 30, 600001)
    dx = grid[1] - grid[0]
    for _ in range(100):
        n_edges = rng.integers(0, 5)
        means = rng.normal(0.5, 1.0, n_edges)
        vars_ = rng.uniform(0.3, 4.0, n_edges)
        pm, pv = rng.normal(1.0, 0.5), rng.uniform(0.5, 8.0)
        pairs = [(1 / v, m / v) for m, v in zip(means, vars_)]
        mu, xi = R.usn_combine(pairs, pm, pv)
        logpdf = -(grid - pm) ** 2 / (2 * pv)
        for m, v in zip(means, vars_):
            logpdf = logpdf - (grid - m) ** 2 / (2 * v)
        pdf = np.exp(logpdf - logpdf.max())
        pdf /= pdf.sum() * dx
        mean_ref = np.sum(grid * pdf) * dx
        var_ref = np.sum((grid - mean_ref) ** 2 * pdf) * dx
        assert mu == pytest.approx(mean_ref, abs=1e-6)
        assert xi == pytest.approx(var_ref, abs=1e-6)


def test_activity_posterior_examples():
    assert R.activity_posterior(0.3, 1.0, 1.0, 1.0, 1.0) == 1.0 - R.Q_FLOOR
    q = R.activity_posterior(1.0, 1.0, 1.0, 1.0, 0.5)
    assert q == pytest.approx(1 / (1 + math.exp(-0.5)), abs=1e-12)
    assert q == pytest.approx(0.6225, abs=1e-4)
    q = R.activity_posterior(0.0, 1.0, 10.0, 1.0, 0.5)
    assert q == pytest.approx(math.exp(-50), rel=1e-6)


def test_activity_posterior_bounds():
    rng = np.random.default_rng(6)
    for _ in range(200):
        q = R.activity_posterior(rng.normal(0, 5), rng.uniform(1e-6, 10),
                                 rng.normal(0, 3), rng.uniform(1e-3, 20),
                                 rng.random())
        assert R.Q_FLOOR <= q <= 1 - R.Q_FLOOR


def test_usn_variance_monotone_in_edges():
    # equal finite edge variances: xi_h non-increasing as edges are added
    pairs = [(1 / 0.8, 0.5 / 0.8)] * 10
    prev = np.inf
    for n in range(len(pairs) + 1):
        _, xi = R.usn_combine(pairs[:n], 1.0, 10.0)
        assert xi <= prev + 1e-15
        prev = xi


# ---------------------------------------------------------------------------
# joint decoder

def tiny_cfg(**kw):
    base = dict(K=6, p_a=0.3, m=12, code_rate=0.6, T=250, system_seed=17,
                noise_variance=0.05)
    base.update(kw)
    return C.SystemConfig(**base)


@pytest.fixture(scope="module")
def tiny():
    cfg = tiny_cfg()
    pc = L.construct_parity_check(cfg.m, cfg.code_rate, cfg.d_v,
                                  cfg.system_seed)
    graph = P.build_access_graph(cfg)
    return cfg, pc, graph


def test_vectorized_first_iteration_matches_scalar(tiny):
    cfg, pc, graph = tiny
    truth = phy.make_ground_truth(cfg, pc, trial_index=0)
    y = phy.superpose(cfg, truth, graph)
    states = []
    cfg1 = dataclasses.replace(cfg, max_iterations=1)
    R.joint_decode(cfg1, y, graph, pc, collect_states=states)
    st = states[0]

    # scalar recomputation of the first-iteration REN -> VN messages from
    # the initial state (v2r = 0, q = p_a, channel estimate = prior)
    for e in range(graph.n_edges):
        t = graph.edge_re[e]
        contribs = []
        for e2 in np.flatnonzero(graph.edge_re == t):
            if e2 == e:
                continue
            contribs.append((cfg.p_a, cfg.prior.mean, cfg.prior.var, 0.0))
        mu_i, xi_i = R.interference_moments(contribs)
        ref = R.ren_to_vn(cfg.prior.mean, cfg.prior.var, y[t], mu_i, xi_i,
                          cfg.noise_variance)
        assert st.r2v[e] == pytest.approx(ref, abs=1e-9)

    # scalar recomputation of the per-user channel fusion from the decoder's
    # own extrinsic messages and the same first-iteration moments
    for k in range(cfg.K):
        pairs = []
        for e in np.flatnonzero(graph.edge_user == k):
            t = graph.edge_re[e]
            contribs = [(cfg.p_a, cfg.prior.mean, cfg.prior.var, 0.0)
                        for e2 in np.flatnonzero(graph.edge_re == t)
                        if e2 != e]
            mu_i, xi_i = R.interference_moments(contribs)
            pairs.append(R.channel_edge_estimate(
                st.v2r[e], y[t], mu_i, xi_i, cfg.noise_variance))
        mu, xi = R.usn_combine(pairs, cfg.prior.mean, cfg.prior.var)
        assert st.mu_h[k] == pytest.approx(mu, abs=1e-9)
        assert st.xi_h[k] == pytest.approx(xi, abs=1e-9)
        ref_q = R.activity_posterior(mu, xi, cfg.prior.mean, cfg.prior.var,
                                     cfg.p_a)
        assert st.q[k] == pytest.approx(ref_q, abs=1e-9)


def test_single_user_genie_prior_decodes():
    cfg = tiny_cfg(K=1, p_a=1.0, T=400, noise_variance=1e-6,
                   prior=C.ChannelPrior(1.0, 0.01), max_iterations=10)
    pc = L.construct_parity_check(cfg.m, cfg.code_rate, cfg.d_v, 2)
    graph = P.build_access_graph(cfg)
    truth = phy.make_ground_truth(cfg, pc, 0)
    truth = dataclasses.replace(truth, gains=np.ones(1))
    y = phy.superpose(cfg, truth, graph)
    out = R.joint_decode(cfg, y, graph, pc)
    assert out.syndrome_pass[0] and out.declared[0]
    assert out.iterations <= 10
    assert out.q[0] > 0.999
    assert np.array_equal(out.decoded_bits[0], truth.info_bits[0])


def test_noise_only_block_rarely_declares():
    # needs a code long enough that noise cannot fit a spurious codeword
    cfg = tiny_cfg(p_a=0.1, m=120, T=4000)
    pc = L.construct_parity_check(cfg.m, cfg.code_rate, cfg.d_v,
                                  cfg.system_seed)
    graph = P.build_access_graph(cfg)
    false_free = 0
    trials = 100
    rng = np.random.default_rng(1234)
    for _ in range(trials):
        y = rng.normal(0, np.sqrt(cfg.noise_variance), cfg.T)
        out = R.joint_decode(cfg, y, graph, pc)
        false_free += int(not out.declared.any())
    assert false_free / trials >= 0.95


def test_outcome_consistency(tiny):
    cfg, pc, graph = tiny
    truth = phy.make_ground_truth(cfg, pc, 3)
    y = phy.superpose(cfg, truth, graph)
    out = R.joint_decode(cfg, y, graph, pc)
    assert np.array_equal(out.declared, out.q > cfg.activity_threshold)
    assert out.decoded_bits.shape == (cfg.K, cfg.m)
    assert 1 <= out.iterations <= cfg.max_iterations


def test_registration_mode_pins_activity(tiny):
    cfg, pc, graph = tiny
    truth = phy.make_ground_truth(cfg, pc, 4)
    y = phy.superpose(cfg, truth, graph)
    out = R.joint_decode(cfg, y, graph, pc, known_active=truth.active)
    assert np.array_equal(out.declared, truth.active)


def test_incremental_full_prefix_identical(tiny):
    cfg, pc, graph = tiny
    truth = phy.make_ground_truth(cfg, pc, 5)
    y = phy.superpose(cfg, truth, graph)
    a = R.joint_decode(cfg, y, graph, pc)
    b = R.joint_decode_incremental(cfg, y, graph, pc, t_limit=cfg.T)
    assert np.array_equal(a.q, b.q)
    assert np.array_equal(a.decoded_bits, b.decoded_bits)
    assert a.iterations == b.iterations


def test_incremental_zero_prefix(tiny):
    cfg, pc, graph = tiny
    truth = phy.make_ground_truth(cfg, pc, 6)
    y = phy.superpose(cfg, truth, graph)
    out = R.joint_decode_incremental(cfg, y, graph, pc, t_limit=0)
    assert not out.declared.any()
    # with no observations the posterior stays at the prior activity rate
    assert np.allclose(out.q, cfg.p_a, atol=1e-9)
