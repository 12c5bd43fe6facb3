"""Monte Carlo experiment orchestration: trials, sweeps, CSV reports.

Every trial is a pure function of (config, master seed, trial index), so
results are byte-identical regardless of worker count or scheduling.
"""
from __future__ import annotations

import dataclasses
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from . import de, ldpc, phy, receiver
from .config import (SystemConfig, db_to_linear, noise_variance_for_snr,
                     validate_config)
from .pattern import AccessGraph, build_access_graph

MODES = ("grant-free", "registration", "genie-csi")
CSV_HEADER = ("snr_db,trials,bler,ber,miss_rate,false_alarm_rate,"
              "mean_iterations,bler_ci95")


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: SystemConfig
    snr_db_grid: tuple
    trials: int = 200
    mode: str = "grant-free"
    checkpoints: tuple = ()        # optional list of RE prefixes T'
    master_seed: int = 1
    out_path: str | None = None
    workers: int = 1

    def validate(self):
        validate_config(self.cfg)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db_grid:
            raise ValueError("SNR grid must be non-empty")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        return self


@dataclass
class PointResult:
    snr_db: float
    trials: int
    bler: float
    ber: float
    miss_rate: float
    false_alarm_rate: float
    mean_iterations: float
    bler_ci95: float


@dataclass
class ExperimentResult:
    points: list
    de_mi: list | None = None     # converged MI per SNR point, optional


def expected_active_gains(cfg: SystemConfig):
    """Gains of the nominal active set (ceil(K p_a) users at the shared gain)."""
    n_active = int(np.ceil(cfg.K * cfg.p_a))
    return cfg.true_gains()[:n_active]


def run_trial(cfg: SystemConfig, pc, graph, trial_index, mode="grant-free",
              t_limit=None):
    """One end-to-end trial; returns (truth, TrialOutcome)."""
    truth = phy.make_ground_truth(cfg, pc, trial_index)
    y = phy.superpose(cfg, truth, graph)
    kwargs = {}
    if mode in ("registration", "genie-csi"):
        kwargs["known_active"] = truth.active
    if mode == "genie-csi":
        kwargs["pinned_csi"] = (truth.gains, 1e-6)
    if t_limit is not None:
        outcome = receiver.joint_decode_incremental(cfg, y, graph, pc,
                                                    t_limit, **kwargs)
    else:
        outcome = receiver.joint_decode(cfg, y, graph, pc, **kwargs)
    return truth, outcome


def trial_stats(cfg, truth, outcome):
    """Per-trial counters: (active blocks, block errors, bit errors,
    info bits, misses, false alarms, inactive users)."""
    active = truth.active
    n_active = int(active.sum())
    declared = outcome.declared
    ok_bits = outcome.decoded_bits == truth.info_bits
    block_err = 0
    bit_err = 0
    for k in np.flatnonzero(active):
        good = declared[k] and bool(ok_bits[k].all())
        block_err += not good
        if declared[k]:
            bit_err += int((~ok_bits[k]).sum())
        else:
            bit_err += cfg.m     # undeclared active: whole packet lost
    misses = int((active & ~declared).sum())
    false_alarms = int((~active & declared).sum())
    return (n_active, block_err, bit_err, n_active * cfg.m, misses,
            false_alarms, int((~active).sum()))


def wilson_halfwidth(errors, n, z=1.96):
    """Half-width of the Wilson 95% interval for a binomial rate."""
    if n == 0:
        return float("nan")
    p = errors / n
    denom = 1.0 + z * z / n
    return z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom


_POOL_STATE = {}


def _pool_init(cfg, pc, graph, mode):
    _POOL_STATE["args"] = (cfg, pc, graph, mode)


def _pool_trial(trial_index):
    cfg, pc, graph, mode = _POOL_STATE["args"]
    truth, outcome = run_trial(cfg, pc, graph, trial_index, mode)
    return trial_stats(cfg, truth, outcome) + (outcome.iterations,)


def monte_carlo(spec: ExperimentSpec) -> ExperimentResult:
    """Aggregate run_trial over the SNR grid."""
    spec.validate()
    base = dataclasses.replace(spec.cfg, system_seed=spec.master_seed)
    pc = ldpc.construct_parity_check(base.m, base.code_rate, base.d_v,
                                     base.system_seed)
    graph = build_access_graph(base)
    gains = expected_active_gains(base)
    points = []
    for snr_db in spec.snr_db_grid:
        xi_w = noise_variance_for_snr(base, db_to_linear(snr_db), gains)
        cfg = base.with_noise_variance(xi_w)
        indices = range(spec.trials)
        if spec.workers > 1:
            with multiprocessing.Pool(
                    spec.workers, initializer=_pool_init,
                    initargs=(cfg, pc, graph, spec.mode)) as pool:
                rows = pool.map(_pool_trial, indices)
        else:
            _pool_init(cfg, pc, graph, spec.mode)
            rows = [_pool_trial(i) for i in indices]
        # deterministic reduction in trial order
        agg = np.sum(np.asarray(rows, dtype=float), axis=0)
        (n_active, block_err, bit_err, n_bits, misses,
         false_alarms, n_inactive, iter_sum) = agg
        points.append(PointResult(
            snr_db=float(snr_db),
            trials=spec.trials,
            bler=block_err / n_active if n_active else float("nan"),
            ber=bit_err / n_bits if n_bits else float("nan"),
            miss_rate=misses / n_active if n_active else float("nan"),
            false_alarm_rate=(false_alarms / n_inactive
                              if n_inactive else float("nan")),
            mean_iterations=iter_sum / spec.trials,
            bler_ci95=wilson_halfwidth(block_err, n_active),
        ))
    return ExperimentResult(points)


def attach_de(result: ExperimentResult, spec: ExperimentSpec):
    """Add the converged-MI column from the DE recursion."""
    base = dataclasses.replace(spec.cfg, system_seed=spec.master_seed)
    gains = expected_active_gains(base)
    mis = []
    for snr_db in spec.snr_db_grid:
        xi_w = noise_variance_for_snr(base, db_to_linear(snr_db), gains)
        final = de.run_de(base.with_noise_variance(xi_w), gains)
        mis.append(float(np.min(final.mi)))
    result.de_mi = mis
    return result


def _fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.6g}"


def snr_sweep_report(result: ExperimentResult, path):
    """Write the sweep CSV (RFC-4180, LF line endings)."""
    header = CSV_HEADER + (",de_mi" if result.de_mi is not None else "")
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        for i, p in enumerate(result.points):
            row = [_fmt(p.snr_db), str(p.trials), _fmt(p.bler), _fmt(p.ber),
                   _fmt(p.miss_rate), _fmt(p.false_alarm_rate),
                   _fmt(p.mean_iterations), _fmt(p.bler_ci95)]
            if result.de_mi is not None:
                row.append(_fmt(result.de_mi[i]))
            f.write(",".join(row) + "\n")


# Desk-scale profile used throughout the demos and acceptance runs.
# T is chosen so each user places T*E[d] = 896 symbol copies over the block
# (dense access graph: the law-of-large-numbers argument behind the DE
# predictor is accurate there), while K, p_a, rate mirror the full setup.
DESK_CONFIG = SystemConfig(K=30, p_a=0.1, m=120, code_rate=0.6, T=6400)

# the full-scale configuration from the reference experiment
PAPER_CONFIG = SystemConfig(K=100, p_a=0.1, m=240, code_rate=0.6, T=6400)
