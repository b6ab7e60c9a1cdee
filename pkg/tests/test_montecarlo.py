import math
from dataclasses import replace

import numpy as np
import pytest

from coopharq.channel import LinkModel, SnrScale
from coopharq.harq import dlt, outage_table
from coopharq.montecarlo import (
    CHUNK,
    SimulatorUnsupported,
    estimate_dlt,
    estimate_outage,
    run_episode,
    sample_correlated_gamma,
    simulate,
)
from oracles import reference_config


def test_same_seed_same_result():
    cfg = reference_config(5.0, K=3)
    assert simulate(cfg, 50_000, 3) == simulate(cfg, 50_000, 3)
    assert simulate(cfg, 50_000, 3) != simulate(cfg, 50_000, 4)


def test_worker_count_does_not_change_result():
    cfg = reference_config(5.0, K=3)
    n = 3 * CHUNK + 123
    assert simulate(cfg, n, 17, workers=1) == simulate(cfg, n, 17, workers=3)


def test_episode_floor():
    with pytest.raises(ValueError):
        simulate(reference_config(), 9_999, 0)


def test_non_half_integer_order_declined():
    with pytest.raises(SimulatorUnsupported):
        simulate(reference_config(m=1.3), 10_000, 0)
    with pytest.raises(SimulatorUnsupported):
        sample_correlated_gamma(LinkModel(0.7, (1.0,)), SnrScale(1.0), 1, np.random.default_rng(0))


def test_all_episodes_fail():
    cfg = reference_config(gamma_t_db=-80.0, K=2)
    est = estimate_outage(cfg, 10_000, 1)
    assert [e.mean for e in est] == [1.0, 1.0]
    assert all(e.half_width_3sigma == 0.0 for e in est)
    assert estimate_dlt(cfg, 10_000, 1).mean == 0.0


def test_all_episodes_succeed_first_round():
    cfg = reference_config(gamma_t_db=90.0, K=2, rate=1.0)
    summary = simulate(cfg, 10_000, 1)
    assert [e.mean for e in summary.outage()] == [0.0, 0.0]
    assert summary.dlt().mean == pytest.approx(1.0, abs=1e-12)
    assert summary.mean_rounds == 1.0


def test_vanishing_rate_decodes_at_round_one():
    cfg = reference_config(gamma_t_db=0.0, K=3, rate=1e-12)
    rng = np.random.default_rng(2)
    for _ in range(20):
        out = run_episode(cfg, rng)
        assert out.dest_decode_round == 1
        assert out.rounds_used == 1


def test_episode_invariants():
    cfg = reference_config(gamma_t_db=2.0, K=3)
    rng = np.random.default_rng(8)
    for _ in range(200):
        out = run_episode(cfg, rng)
        assert 1 <= out.rounds_used <= cfg.K
        if out.dest_decode_round is not None:
            assert out.dest_decode_round == out.rounds_used


def test_half_width_scales_with_root_n():
    cfg = reference_config(3.0, K=2)
    a = estimate_outage(cfg, 200_000, 5)[-1]
    b = estimate_outage(cfg, 400_000, 5)[-1]
    assert a.half_width_3sigma / b.half_width_3sigma == pytest.approx(math.sqrt(2), rel=0.1)


def test_single_round_rayleigh_power_is_exponential():
    z = sample_correlated_gamma(LinkModel(1.0, (2.0,)), SnrScale(1.5), 1, np.random.default_rng(3), 1_000_000)[:, 0]
    mean = 3.0
    assert abs(z.mean() - mean) <= 3 * mean / math.sqrt(z.size)
    for q in (0.5, 2.0, 6.0):
        p = 1 - math.exp(-q / mean)
        assert abs(np.mean(z <= q) - p) <= 3 * math.sqrt(p * (1 - p) / z.size)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 3.0])
def test_marginals(m):
    n = 1_000_000
    omega = (0.5, 1.0, 2.0)
    z = sample_correlated_gamma(LinkModel(m, omega, 0.0), SnrScale(2.0), 3, np.random.default_rng(4), n)
    for k, w in enumerate(omega):
        mean = 2.0 * w
        sd = mean / math.sqrt(m)
        assert abs(z[:, k].mean() - mean) <= 3 * sd / math.sqrt(n)
        shape = z[:, k].mean() ** 2 / z[:, k].var()
        assert shape == pytest.approx(m, rel=0.05)


@pytest.mark.parametrize("rho", [0.0, 0.2, 0.8])
def test_envelope_correlation(rho):
    n = 1_000_000
    z = sample_correlated_gamma(LinkModel(1.0, (1.0,) * 3, rho), SnrScale(1.0), 3, np.random.default_rng(6), n)
    c = np.corrcoef(z.T)
    for i in range(3):
        for j in range(i + 1, 3):
            target = rho ** abs(i - j)
            # delta-method sd of a correlation estimate is at most ~(1 - r^2) * 2 / sqrt(n) for these marginals
            assert abs(c[i, j] - target) <= 3 * 2 * (1 - target**2 + 0.1) / math.sqrt(n)


def test_relay_link_silent_before_relay_decodes():
    # with a dead source-relay hop the destination sees the direct link only
    cfg = reference_config(3.0, 0.2, 1.0, K=3)
    dead = replace(cfg, links=replace(cfg.links, sr=LinkModel.constant(1.0, 1e-12, 0.2, 3)))
    silent = replace(dead, links=replace(dead.links, rd=LinkModel.constant(1.0, 1e6, 0.2, 3)))
    assert simulate(dead, 20_000, 9).dest_fail == simulate(silent, 20_000, 9).dest_fail


def test_reference_point_against_analytic():
    cfg = reference_config(0.0, 0.2, 1.0, K=2)
    table = outage_table(cfg)
    summary = simulate(cfg, 1_000_000, 21)
    est = summary.outage()[-1]
    p = table.dest[2]
    assert abs(est.mean - p) <= 3 * math.sqrt(p * (1 - p) / est.n)
    assert summary.dlt().contains(dlt(cfg))
