"""Regular LDPC code: construction, systematic encoding, BP primitives.

Construction is progressive-edge-growth flavoured: each new edge goes to a
check of minimal current degree (keeping check degrees within one of each
other), preferring checks as far as possible from the variable's current
subtree so short cycles only appear when unavoidable.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

LLR_CLAMP = 30.0
# largest |tanh(L/2)| representable under the clamp
_TANH_CLAMP = np.tanh(LLR_CLAMP / 2.0)


@dataclass
class ParityCheck:
    """Sparse parity-check matrix with encoder side-structures.

    Columns are ordered so that the first m positions are systematic
    (information) bits and the last n_checks positions carry parity.
    """

    n: int
    m: int
    d_v: int
    chk_vars: list            # per-check list of variable indices
    var_chks: list            # per-variable list of check indices
    seed: int
    _enc: np.ndarray = field(repr=False, default=None)  # (rank, m) GF(2)
    _n_pinned: int = 0        # surplus free positions pinned to 0 (rank < n-m)

    @property
    def n_checks(self):
        return self.n - self.m

    @property
    def check_degrees(self):
        return [len(c) for c in self.chk_vars]

    def h_dense(self):
        H = np.zeros((self.n_checks, self.n), dtype=np.uint8)
        for c, vs in enumerate(self.chk_vars):
            H[c, vs] = 1
        return H


def _gf2_rref(H):
    """Reduced row echelon form over GF(2); returns (R, pivot_columns)."""
    M = H.copy()
    n_rows, n_cols = M.shape
    piv_cols = []
    row = 0
    for col in range(n_cols):
        if row >= n_rows:
            break
        r = row + int(np.argmax(M[row:, col]))
        if not M[r, col]:
            continue
        if r != row:
            M[[row, r]] = M[[r, row]]
        others = np.flatnonzero(M[:, col])
        others = others[others != row]
        M[others] ^= M[row]
        piv_cols.append(col)
        row += 1
    return M, piv_cols


def _peg_edges(n, n_checks, d_v, rng):
    """Place n*d_v edges; returns per-variable check lists."""
    chk_deg = np.zeros(n_checks, dtype=int)
    chk_vars = [[] for _ in range(n_checks)]
    var_chks = [[] for _ in range(n)]
    for v in range(n):
        for _ in range(d_v):
            # BFS over the bipartite graph from v's current neighborhood
            dist = np.full(n_checks, np.inf)
            seen_v = {v}
            frontier = list(var_chks[v])
            depth = 0
            for c in frontier:
                dist[c] = depth
            while frontier:
                depth += 1
                nxt = set()
                for c in frontier:
                    for v2 in chk_vars[c]:
                        if v2 not in seen_v:
                            seen_v.add(v2)
                            for c2 in var_chks[v2]:
                                if not np.isfinite(dist[c2]):
                                    nxt.add(c2)
                for c2 in nxt:
                    dist[c2] = depth
                frontier = list(nxt)
            # uniformity first: only checks at the global minimum degree,
            # excluding ones already wired to v
            cand = np.flatnonzero(chk_deg == chk_deg[
                np.setdiff1d(np.arange(n_checks), var_chks[v])].min())
            cand = np.setdiff1d(cand, var_chks[v])
            # then distance: prefer unreached (inf), else deepest
            far = cand[dist[cand] == dist[cand].max()]
            c = int(far[rng.integers(len(far))])
            chk_deg[c] += 1
            chk_vars[c].append(v)
            var_chks[v].append(c)
    return chk_vars, var_chks


def construct_parity_check(m, code_rate, d_v, seed) -> ParityCheck:
    """Build a (d_v)-regular code of length N = m/code_rate.

    Deterministic in seed. Rank deficiency in the parity-check matrix is
    absorbed by pinning the surplus free positions to zero in the encoder.
    """
    n_exact = m / code_rate
    n = int(round(n_exact))
    if abs(n - n_exact) > 1e-9:
        raise ValueError(f"m/code_rate = {n_exact:.6g} is not an integer")
    n_checks = n - m
    if d_v < 2 or d_v > n_checks:
        raise ValueError(f"infeasible variable degree d_v = {d_v}")
    rng = np.random.default_rng(seed)
    chk_vars, var_chks = _peg_edges(n, n_checks, d_v, rng)
    H = np.zeros((n_checks, n), dtype=np.uint8)
    for c, vs in enumerate(chk_vars):
        H[c, vs] = 1
    # permute columns so free variables come first (info positions), pivot
    # variables last (parity); rank deficiency just widens the free block,
    # whose surplus positions the encoder pins to 0.
    R, piv_cols = _gf2_rref(H)
    rank = len(piv_cols)
    free_cols = np.setdiff1d(np.arange(n), piv_cols)
    perm = np.concatenate([free_cols, piv_cols]).astype(int)
    # pivot expressions over the first m (info) free columns
    enc = R[:rank][:, free_cols[:m]].astype(np.uint8)
    n_pinned = n - rank - m
    inv_pos = np.empty(n, dtype=int)
    inv_pos[perm] = np.arange(n)
    chk_vars2 = [sorted(int(inv_pos[v]) for v in vs) for vs in chk_vars]
    var_chks2 = [[] for _ in range(n)]
    for c, vs in enumerate(chk_vars2):
        for v in vs:
            var_chks2[v].append(c)
    return ParityCheck(n, m, d_v, chk_vars2, var_chks2, seed, enc, n_pinned)


def encode(info_bits, pc: ParityCheck):
    """Systematic encode: codeword = [info | parity], H @ c = 0 over GF(2)."""
    b = np.asarray(info_bits, dtype=np.uint8)
    if b.shape != (pc.m,):
        raise ValueError(f"expected {pc.m} info bits, got {b.shape}")
    parity = (pc._enc @ b) % 2
    return np.concatenate([b, np.zeros(pc._n_pinned, dtype=np.uint8),
                           parity.astype(np.uint8)])


def bits_to_symbols(bits):
    """Map bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def syndrome_ok(hard_bits, pc: ParityCheck) -> bool:
    b = np.asarray(hard_bits, dtype=np.uint8)
    return all(int(b[vs].sum()) % 2 == 0 for vs in pc.chk_vars)


def cn_update(incoming):
    """Check-node rule: 2 atanh(prod tanh(L_i/2)) over the other edges.

    `incoming` already excludes the target edge.
    """
    t = np.tanh(np.clip(np.asarray(incoming, dtype=float),
                        -LLR_CLAMP, LLR_CLAMP) / 2.0)
    prod = float(np.prod(t)) if len(t) else 1.0
    prod = np.clip(prod, -_TANH_CLAMP, _TANH_CLAMP)
    return float(2.0 * np.arctanh(prod))


def vn_update(channel_llr, incoming_checks):
    """Variable-node rule: channel LLR plus the other checks' messages."""
    return float(channel_llr) + float(np.sum(incoming_checks))


def check_messages(v2c, chk_ptr):
    """Leave-one-out check update for a flat edge array grouped by check.

    v2c has shape (..., E) with edges sorted by check; chk_ptr are the group
    start offsets (as for reduceat). Returns the outgoing c2v array of the
    same shape. Matches cn_update edge by edge, with exact handling of zero
    inputs (tanh = 0 annihilates the product on every other edge).
    """
    t = np.tanh(np.clip(v2c, -LLR_CLAMP, LLR_CLAMP) / 2.0)
    absr = np.abs(t)
    iszero = absr < 1e-300
    logt = np.where(iszero, 0.0, np.log(np.where(iszero, 1.0, absr)))
    neg = ((t < 0) & ~iszero).astype(np.int64)
    sum_log = np.add.reduceat(logt, chk_ptr, axis=-1)
    n_zero = np.add.reduceat(iszero.astype(np.int64), chk_ptr, axis=-1)
    n_neg = np.add.reduceat(neg, chk_ptr, axis=-1)
    # expand per-check aggregates back onto edges
    reps = np.diff(np.append(chk_ptr, v2c.shape[-1]))
    sum_log = np.repeat(sum_log, reps, axis=-1)
    n_zero = np.repeat(n_zero, reps, axis=-1)
    n_neg = np.repeat(n_neg, reps, axis=-1)
    other_zero = n_zero - iszero
    mag = np.exp(sum_log - logt)
    mag = np.where(other_zero > 0, 0.0, np.minimum(mag, _TANH_CLAMP))
    sign = 1.0 - 2.0 * ((n_neg - neg) % 2)
    return 2.0 * np.arctanh(sign * mag)


@dataclass
class EdgeLayout:
    """Flat edge indexing of a ParityCheck for vectorized message passing."""

    edge_var: np.ndarray   # variable of each edge (sorted by check)
    edge_chk: np.ndarray
    chk_ptr: np.ndarray    # reduceat offsets per check

    @classmethod
    def from_code(cls, pc: ParityCheck):
        ev, ec, ptr = [], [], []
        for c, vs in enumerate(pc.chk_vars):
            ptr.append(len(ev))
            ev.extend(vs)
            ec.extend([c] * len(vs))
        return cls(np.asarray(ev), np.asarray(ec), np.asarray(ptr))


def bp_decode(pc: ParityCheck, channel_llrs, max_iter=50):
    """Flooding sum-product decoder; returns (hard_bits, ok, iterations)."""
    layout = EdgeLayout.from_code(pc)
    Lch = np.asarray(channel_llrs, dtype=float)
    c2v = np.zeros(len(layout.edge_var))
    for it in range(1, max_iter + 1):
        c2v_sum = np.bincount(layout.edge_var, weights=c2v, minlength=pc.n)
        v2c = Lch[layout.edge_var] + c2v_sum[layout.edge_var] - c2v
        c2v = check_messages(v2c, layout.chk_ptr)
        total = Lch + np.bincount(layout.edge_var, weights=c2v, minlength=pc.n)
        hard = (total < 0).astype(np.uint8)
        if syndrome_ok(hard, pc):
            return hard, True, it
    return hard, False, max_iter


def write_alist(pc: ParityCheck, path):
    """Export H in MacKay's alist text format (1-based indices)."""
    n, nc = pc.n, pc.n_checks
    with open(path, "w") as f:
        f.write(f"{n} {nc}\n")
        f.write(f"{max(len(c) for c in pc.var_chks)} "
                f"{max(len(c) for c in pc.chk_vars)}\n")
        f.write(" ".join(str(len(c)) for c in pc.var_chks) + "\n")
        f.write(" ".join(str(len(c)) for c in pc.chk_vars) + "\n")
        for chks in pc.var_chks:
            f.write(" ".join(str(c + 1) for c in chks) + "\n")
        for vs in pc.chk_vars:
            f.write(" ".join(str(v + 1) for v in vs) + "\n")


def read_alist(path):
    """Parse an alist file; returns (chk_vars, var_chks)."""
    with open(path) as f:
        tokens = f.read().split("\n")
    n, nc = (int(x) for x in tokens[0].split())
    var_chks = [[int(x) - 1 for x in tokens[4 + v].split()] for v in range(n)]
    chk_vars = [[int(x) - 1 for x in tokens[4 + n + c].split()]
                for c in range(nc)]
    return chk_vars, var_chks
