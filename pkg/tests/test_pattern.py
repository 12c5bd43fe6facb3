import numpy as np
import pytest

from gfrma import config as C
from gfrma import pattern as P


def test_degenerate_racf_empty_draw():
    racf = C.Racf((1.0,))
    for k, t in [(0, 0), (3, 17), (99, 6399)]:
        d = P.derive_draw(42, k, t, racf, 400)
        assert d.degree == 0 and d.symbols == ()


def test_draw_is_pure():
    racf = C.DEFAULT_RACF
    a = P.derive_draw(7, 5, 123, racf, 200)
    b = P.derive_draw(7, 5, 123, racf, 200)
    assert a == b


def test_draw_subset_valid():
    racf = C.Racf((0.0, 0.0, 0.0, 0.0, 1.0))   # always degree 4
    for t in range(200):
        d = P.derive_draw(3, 1, t, racf, 10)
        assert d.degree == 4
        assert len(set(d.symbols)) == 4
        assert all(0 <= j < 10 for j in d.symbols)


def test_degree_frequencies_match_racf():
    # empirical frequency of d=1 over many draws, 3-sigma binomial band
    racf = C.DEFAULT_RACF
    n = 10**6
    count = 0
    for i in range(n):
        if P.derive_draw(99, i % 1000, i // 1000, racf, 50).degree == 1:
            count += 1
    p = 0.06
    sigma = np.sqrt(p * (1 - p) / n)
    assert abs(count / n - p) < 3 * sigma


def test_subset_uniformity():
    # each symbol index should be selected equally often
    racf = C.Racf((0.0, 1.0))
    N = 8
    counts = np.zeros(N)
    n = 20000
    for i in range(n):
        d = P.derive_draw(5, 0, i, racf, N)
        counts[d.symbols[0]] += 1
    expected = n / N
    assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))


def small_cfg(**kw):
    base = dict(K=20, p_a=0.1, m=12, code_rate=0.6, T=500, system_seed=13)
    base.update(kw)
    return C.SystemConfig(**base)


def test_single_edge_graph():
    cfg = small_cfg(K=1, T=1, racf=C.Racf((0.0, 1.0)), m=3, code_rate=0.75)
    g = P.build_access_graph(cfg)
    assert g.n_edges == 1
    (pair,) = g.re_contributors(0)
    k, j = pair
    assert g.symbol_res(k, j) == {0}
    assert g.user_edges(0) == {(j, 0)}


def test_empty_graph():
    cfg = small_cfg(racf=C.Racf((1.0,)))
    g = P.build_access_graph(cfg)
    assert g.n_edges == 0


def test_three_view_consistency():
    cfg = small_cfg()
    g = P.build_access_graph(cfg)
    edges = set(zip(g.edge_user.tolist(), g.edge_sym.tolist(),
                    g.edge_re.tolist()))
    assert len(edges) == g.n_edges          # no duplicate edges
    # every edge appears in all three views
    for k, j, t in list(edges)[:200]:
        assert (k, j) in g.re_contributors(t)
        assert t in g.symbol_res(k, j)
        assert (j, t) in g.user_edges(k)
    # edge-count conservation across views
    assert sum(len(g.re_contributors(t)) for t in range(cfg.T)) == g.n_edges


def test_draws_match_graph():
    cfg = small_cfg()
    g = P.build_access_graph(cfg)
    for t in (0, 17, 250):
        expected = set()
        for k in range(cfg.K):
            d = P.derive_draw(cfg.system_seed, k, t, cfg.racf, cfg.N)
            expected |= {(k, j) for j in d.symbols}
        assert g.re_contributors(t) == expected


def test_edge_count_concentration():
    cfg = small_cfg(K=30, m=120, T=2000)
    g = P.build_access_graph(cfg)
    expected = cfg.K * P.expected_edges_per_user(cfg)
    assert abs(g.n_edges - expected) / expected < 0.05


def test_expected_edges_per_user():
    cfg = small_cfg(T=6400)
    assert P.expected_edges_per_user(cfg) == pytest.approx(896.0)
    assert P.expected_edges_per_user(small_cfg(racf=C.Racf((1.0,)))) == 0.0
    cfg1 = small_cfg(T=1, racf=C.Racf((0.0, 1.0)))
    assert P.expected_edges_per_user(cfg1) == 1.0


def test_re_occupancy_distribution():
    # |M(t)| histogram vs the K-fold convolution of the degree pmf
    from scipy import stats
    cfg = small_cfg(K=20, T=4000)
    g = P.build_access_graph(cfg)
    occ = np.bincount(g.edge_re, minlength=cfg.T)
    pmf = np.array([1.0])
    for _ in range(cfg.K):
        pmf = np.convolve(pmf, np.asarray(cfg.racf.probs))
    counts = np.bincount(occ, minlength=len(pmf))[:len(pmf)]
    expected = pmf * cfg.T
    # merge the tail so all expected bins are >= 5
    cut = np.argmax(np.cumsum(expected[::-1]) >= 5)
    cut = len(expected) - cut
    obs = np.append(counts[:cut - 1], counts[cut - 1:].sum())
    exp = np.append(expected[:cut - 1], expected[cut - 1:].sum())
    _, pval = stats.chisquare(obs, exp * obs.sum() / exp.sum())
    assert pval > 0.001


def test_graph_dump_format(tmp_path):
    cfg = small_cfg(K=3, T=50)
    g = P.build_access_graph(cfg)
    out = tmp_path / "graph.txt"
    P.dump_graph(g, out)
    lines = out.read_text().strip().split("\n")
    assert len(lines) == g.n_edges
    k, j, t = map(int, lines[0].split())
    assert k >= 1 and j >= 1 and t >= 1       # 1-based

    # receiver rebuilding from the same seed gets identical adjacency
    g2 = P.build_access_graph(cfg)
    out2 = tmp_path / "graph2.txt"
    P.dump_graph(g2, out2)
    assert out.read_bytes() == out2.read_bytes()
