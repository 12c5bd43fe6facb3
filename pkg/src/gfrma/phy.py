"""Transmitter-side superposition and the multi-user AWGN channel.

Real-valued baseband: +/-1 coded symbols, real channel amplitudes, real
Gaussian noise. Everything is a pure function of (config, seeds).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ldpc
from .config import SystemConfig
from .pattern import AccessGraph, PatternDraw, mix

# domain tags keeping the activity / bits / noise substreams independent
_TAG_ACTIVITY = 0xA11CE
_TAG_BITS = 0xB175
_TAG_NOISE = 0x4015E


@dataclass
class TrialGroundTruth:
    """Everything the channel knows and the receiver must infer."""

    active: np.ndarray      # bool, length K
    gains: np.ndarray       # amplitude per user; 0 for inactive
    info_bits: np.ndarray   # (K, m) uint8; zero rows for inactive users
    symbols: np.ndarray     # (K, N) float +/-1; zero rows for inactive users
    noise: np.ndarray       # length T


def sample_activity(cfg: SystemConfig, trial_seed) -> np.ndarray:
    """Bool activity vector; deterministic in trial_seed.

    "fixed" mode activates exactly ceil(K * p_a) uniformly chosen users;
    "bernoulli" mode activates each user independently with probability p_a.
    """
    rng = np.random.default_rng(mix(trial_seed, _TAG_ACTIVITY))
    active = np.zeros(cfg.K, dtype=bool)
    if cfg.activity_mode == "fixed":
        n_active = int(np.ceil(cfg.K * cfg.p_a))
        active[rng.choice(cfg.K, size=n_active, replace=False)] = True
    else:
        active = rng.random(cfg.K) < cfg.p_a
    return active


def make_ground_truth(cfg: SystemConfig, pc: ldpc.ParityCheck,
                      trial_index) -> TrialGroundTruth:
    """Sample activity, packets, and noise for one trial."""
    trial_seed = mix(cfg.system_seed, trial_index)
    active = sample_activity(cfg, trial_seed)
    gains = np.where(active, cfg.true_gains(), 0.0)
    rng_bits = np.random.default_rng(mix(trial_seed, _TAG_BITS))
    info_bits = np.zeros((cfg.K, cfg.m), dtype=np.uint8)
    symbols = np.zeros((cfg.K, cfg.N))
    for k in np.flatnonzero(active):
        info_bits[k] = rng_bits.integers(0, 2, cfg.m)
        symbols[k] = ldpc.bits_to_symbols(ldpc.encode(info_bits[k], pc))
    rng_noise = np.random.default_rng(mix(trial_seed, _TAG_NOISE))
    noise = rng_noise.normal(0.0, np.sqrt(cfg.noise_variance), cfg.T)
    return TrialGroundTruth(active, gains, info_bits, symbols, noise)


def transmit_symbol(codeword_symbols, draw: PatternDraw) -> float:
    """Sum of the selected +/-1 symbols; 0 when the degree is 0."""
    if draw.degree == 0:
        return 0.0
    return float(np.sum(np.asarray(codeword_symbols)[list(draw.symbols)]))


def superpose(cfg: SystemConfig, truth: TrialGroundTruth,
              graph: AccessGraph) -> np.ndarray:
    """Received block: y_t = sum_k h_k x'_{k,t} + z_t for every RE."""
    contrib = (truth.gains[graph.edge_user]
               * truth.symbols[graph.edge_user, graph.edge_sym])
    y = np.bincount(graph.edge_re, weights=contrib, minlength=cfg.T)
    return y + truth.noise
