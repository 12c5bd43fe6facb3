"""Pseudo-random access patterns and the tripartite access graph.

Every draw is a pure function of (system_seed, user, re): both the user and
the receiver rebuild exactly the same pattern from the shared seed, which is
what lets the receiver identify users without any registration handshake.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, racf_mean_degree

_MASK = (1 << 64) - 1


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer: a 64-bit avalanche mixer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix(*words) -> int:
    """Chain-mix a tuple of integers into one 64-bit value."""
    h = 0
    for w in words:
        h = splitmix64((h ^ int(w)) & _MASK)
    return h


def _u01(seed, counter):
    return splitmix64((seed + counter) & _MASK) / 2.0**64


@dataclass(frozen=True)
class PatternDraw:
    """One user's action on one RE: degree d and the selected symbol indices.

    symbols are 0-based internally; external dumps are 1-based.
    """

    degree: int
    symbols: tuple

    def __post_init__(self):
        assert len(self.symbols) == self.degree


def derive_draw(system_seed, user, re, racf, N) -> PatternDraw:
    """Counter-based draw of (degree, symbol subset) for (user, re).

    Degree by inverse CDF over the RACf; subset by partial Fisher-Yates over
    0..N-1, fed by successive SplitMix64 outputs. Stateless: any (user, re)
    pair is computable without generating predecessors.
    """
    stream = mix(system_seed, user, re)
    u = _u01(stream, 0)
    acc = 0.0
    degree = racf.d_max
    for d, p in enumerate(racf.probs):
        acc += p
        if u < acc:
            degree = d
            break
    degree = min(degree, N)
    if degree == 0:
        return PatternDraw(0, ())
    # sparse partial Fisher-Yates: O(degree) memory
    repl = {}
    out = []
    for i in range(degree):
        r = i + int(_u01(stream, 1 + i) * (N - i))
        out.append(repl.get(r, r))
        repl[r] = repl.get(i, i)
    return PatternDraw(degree, tuple(out))


@dataclass(frozen=True)
class AccessGraph:
    """Edge set of the tripartite (user-symbol)-RE graph, as flat arrays.

    One entry per edge: user index, symbol index within the user's codeword,
    and RE index (all 0-based). The three classic views M(t), R(k,j), Q(k)
    are derived from this single edge list.
    """

    K: int
    N: int
    T: int
    edge_user: np.ndarray
    edge_sym: np.ndarray   # within-user symbol index, 0..N-1
    edge_re: np.ndarray

    @property
    def n_edges(self):
        return len(self.edge_user)

    def re_contributors(self, t):
        """M(t): set of (user, symbol) pairs on RE t."""
        sel = self.edge_re == t
        return set(zip(self.edge_user[sel].tolist(), self.edge_sym[sel].tolist()))

    def symbol_res(self, k, j):
        """R(k,j): set of REs touching symbol j of user k."""
        sel = (self.edge_user == k) & (self.edge_sym == j)
        return set(self.edge_re[sel].tolist())

    def user_edges(self, k):
        """Q(k): set of (symbol, RE) edges of user k."""
        sel = self.edge_user == k
        return set(zip(self.edge_sym[sel].tolist(), self.edge_re[sel].tolist()))

    def restricted(self, t_limit):
        """Subgraph keeping only REs 0..t_limit-1 (rateless prefix)."""
        sel = self.edge_re < t_limit
        return AccessGraph(self.K, self.N, t_limit,
                           self.edge_user[sel], self.edge_sym[sel],
                           self.edge_re[sel])


def build_access_graph(cfg: SystemConfig) -> AccessGraph:
    """Materialize every user's pattern over all T REs into one edge list."""
    users, syms, res = [], [], []
    for k in range(cfg.K):
        for t in range(cfg.T):
            draw = derive_draw(cfg.system_seed, k, t, cfg.racf, cfg.N)
            for j in draw.symbols:
                users.append(k)
                syms.append(j)
                res.append(t)
    return AccessGraph(
        cfg.K, cfg.N, cfg.T,
        np.asarray(users, dtype=np.int64),
        np.asarray(syms, dtype=np.int64),
        np.asarray(res, dtype=np.int64),
    )


def expected_edges_per_user(cfg: SystemConfig) -> float:
    """T * E[d]: the mean number of (symbol, RE) edges per user."""
    return cfg.T * racf_mean_degree(cfg.racf)


def dump_graph(graph: AccessGraph, path):
    """Write one `k j t` line per edge, 1-based, for differential testing."""
    order = np.lexsort((graph.edge_re, graph.edge_sym, graph.edge_user))
    with open(path, "w") as f:
        for i in order:
            f.write(f"{graph.edge_user[i] + 1} {graph.edge_sym[i] + 1} "
                    f"{graph.edge_re[i] + 1}\n")
