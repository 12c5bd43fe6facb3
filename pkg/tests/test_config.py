import dataclasses

import numpy as np
import pytest

from gfrma import config as C


def paper_like_config(**kw):
    base = dict(K=100, p_a=0.1, m=240, code_rate=0.6, T=6400)
    base.update(kw)
    return C.SystemConfig(**base)


def test_validate_paper_config():
    cfg = C.validate_config(paper_like_config())
    assert cfg.N == 400


def test_racf_sum_violation():
    racf = C.Racf((0.5, 0.4))
    with pytest.raises(C.ConfigError, match="sums to 0.9"):
        C.validate_config(paper_like_config(racf=racf))


def test_non_integer_n():
    with pytest.raises(C.ConfigError, match="non-integer"):
        C.validate_config(paper_like_config(m=240, code_rate=0.7))


def test_validate_idempotent():
    cfg = paper_like_config()
    assert C.validate_config(C.validate_config(cfg)) is cfg


def test_racf_mean_degree():
    assert C.racf_mean_degree(C.Racf((1.0,))) == 0.0
    assert C.racf_mean_degree(C.DEFAULT_RACF) == pytest.approx(0.14, abs=1e-15)
    assert C.racf_mean_degree(C.Racf((0.0, 1.0))) == 1.0


def test_racf_mean_degree_linear():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = rng.random(4)
        a = C.racf_mean_degree(C.Racf(tuple(p)))
        b = C.racf_mean_degree(C.Racf(tuple(2 * p)))
        assert b == pytest.approx(2 * a, rel=1e-12)


def test_throughput():
    assert C.throughput(paper_like_config()) == pytest.approx(0.375)
    # one bit per RE
    cfg = C.SystemConfig(K=1, p_a=1.0, m=120, code_rate=0.6, T=120)
    assert C.throughput(cfg) == 1.0


def test_avg_snr():
    cfg = paper_like_config(noise_variance=0.14)
    assert C.avg_snr(cfg, [1.0]) == pytest.approx(1.0)
    assert C.avg_snr(cfg, []) == 0.0
    assert C.avg_snr(cfg, [1.0, 1.0]) == pytest.approx(2.0)


def test_noise_variance_for_snr():
    cfg = paper_like_config()
    assert C.noise_variance_for_snr(cfg, 1.0, [1.0]) == pytest.approx(0.14)
    assert C.noise_variance_for_snr(cfg, 2.0, [1.0]) == pytest.approx(0.07)
    with pytest.raises(C.ConfigError):
        C.noise_variance_for_snr(cfg, 0.0, [1.0])


def test_snr_round_trip_property():
    rng = np.random.default_rng(1)
    cfg = paper_like_config()
    for _ in range(50):
        gains = rng.uniform(0.1, 3.0, rng.integers(1, 6))
        gamma = rng.uniform(0.01, 100.0)
        xi = C.noise_variance_for_snr(cfg, gamma, gains)
        back = C.avg_snr(cfg.with_noise_variance(xi), gains)
        assert back == pytest.approx(gamma, abs=1e-12 * max(1, gamma))


def test_d_max_exceeding_n_rejected():
    racf = C.Racf.from_dict({0: 0.5, 500: 0.5})
    with pytest.raises(C.ConfigError, match="d_max"):
        C.validate_config(paper_like_config(racf=racf))


def test_config_file_round_trip(tmp_path):
    p = tmp_path / "sys.cfg"
    p.write_text(
        "# experiment setup\n"
        "K = 100\n"
        "p_a = 0.1\n"
        "m = 240\n"
        "code_rate = 0.6\n"
        "T = 6400\n"
        "racf = 0:0.90,1:0.06,2:0.04\n"
        "prior_mean = 1\n"
        "prior_var = 10\n"
        "noise_variance = 0.2\n"
        "system_seed = 7\n"
    )
    cfg = C.read_config_file(p)
    assert cfg.K == 100 and cfg.N == 400 and cfg.system_seed == 7
    assert cfg.racf == C.DEFAULT_RACF
    assert cfg.prior == C.ChannelPrior(1.0, 10.0)


def test_config_file_unknown_key(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("bogus = 3\n")
    with pytest.raises(C.ConfigError, match="unknown config keys"):
        C.read_config_file(p)


def test_metrics():
    cfg = paper_like_config(noise_variance=0.14)
    met = C.system_metrics(cfg, [1.0])
    assert met.throughput == pytest.approx(0.375)
    assert met.avg_snr == pytest.approx(1.0)
