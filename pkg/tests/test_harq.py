import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopharq.channel import LinkModel, ModelError, SnrScale, spectrum_of
from coopharq.distributions import SnrCdf
from coopharq.harq import (
    HarqConfig,
    Links,
    dlt,
    dlt_from_table,
    outage_dest,
    outage_dest_given_relay,
    outage_relay,
    outage_table,
    snr_threshold,
)
from coopharq.montecarlo import sample_correlated_gamma, simulate
from coopharq.specfun import reg_lower_incomplete_gamma
from oracles import reference_config


def test_threshold():
    assert snr_threshold(1.0) == 1.0
    assert snr_threshold(2.0) == 3.0
    assert snr_threshold(0.5) == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    with pytest.raises(ModelError):
        snr_threshold(0.0)


def test_config_validation():
    cfg = reference_config(K=2)
    with pytest.raises(ModelError):
        replace(cfg, K=3)
    with pytest.raises(ModelError):
        replace(cfg, K=0)
    with pytest.raises(ModelError):
        replace(cfg, rate=-1.0)
    assert cfg.with_rate(1.0).threshold == 1.0


def test_relay_outage_examples():
    link = LinkModel.constant(1.0, 1.0, 0.0, 2)
    cfg = HarqConfig(K=2, rate=1.0, scale=SnrScale(1.0), links=Links(link, link, link))
    assert outage_relay(cfg, 0) == 1.0
    assert outage_relay(cfg, 1) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    # two independent unit exponentials: Erlang-2 at 1
    assert outage_relay(cfg, 2) == pytest.approx(1 - 2 * math.exp(-1), abs=1e-10)
    with pytest.raises(ValueError):
        outage_relay(cfg, 3)


def test_dest_first_round_is_gamma():
    cfg = reference_config(gamma_t_db=0.0, m=2.0, K=2)
    expect = reg_lower_incomplete_gamma(2.0, 3.0 / (0.5 / 2.0))
    assert outage_dest_given_relay(cfg, 1, 1) == expect
    assert outage_dest(cfg, 1) == expect
    assert outage_dest(cfg, 0) == 1.0


def test_relay_rounds_after_k_do_not_matter():
    cfg = reference_config(K=3)
    for k in (1, 2, 3):
        base = outage_dest_given_relay(cfg, k, k)
        for r in range(k, 6):
            assert outage_dest_given_relay(cfg, k, r) == base


def test_conditional_outage_against_sampler():
    # relay decoded after round 1: destination combines SD rounds 1-2 and RD round 2
    cfg = reference_config(gamma_t_db=3.0, rho=0.5, m=1.0, K=2)
    n = 1_000_000
    rng = np.random.default_rng(5)
    sd = sample_correlated_gamma(cfg.links.sd, cfg.scale, 2, rng, n)
    rd = sample_correlated_gamma(cfg.links.rd, cfg.scale, 2, rng, n)
    est = np.mean(sd.sum(axis=1) + rd[:, 1] < cfg.threshold)
    p = outage_dest_given_relay(cfg, 2, 1)
    assert abs(est - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_total_probability_form():
    cfg = reference_config(K=3)
    k = 3
    relay = [outage_relay(cfg, r) for r in range(k)]
    expect = sum((relay[r - 1] - relay[r]) * outage_dest_given_relay(cfg, k, r) for r in range(1, k))
    expect += outage_dest_given_relay(cfg, k, k) * relay[k - 1]
    assert outage_dest(cfg, k) == pytest.approx(expect, abs=1e-15)


def test_table_matches_operations_exactly():
    cfg = reference_config(K=3, rho=0.8, m=1.0)
    table = outage_table(cfg)
    assert table.K == 3
    for k in range(4):
        assert table.dest[k] == outage_dest(cfg, k)
        assert table.relay[k] == outage_relay(cfg, k)
    for k in range(1, 4):
        for r in range(4):
            assert table.given(k, r) == outage_dest_given_relay(cfg, k, r)


def test_single_round_table():
    cfg = reference_config(K=1)
    table = outage_table(cfg)
    assert table.relay == (1.0, outage_relay(cfg, 1))
    assert table.dest == (1.0, outage_dest(cfg, 1))
    assert dlt(cfg) == pytest.approx(cfg.rate * (1 - table.dest[1]), abs=1e-15)


def test_dlt_vanishes_with_rate():
    cfg = reference_config(K=2)
    assert dlt(cfg.with_rate(1e-6)) < 1e-5


configs = st.builds(
    reference_config,
    gamma_t_db=st.floats(-5.0, 20.0),
    rho=st.floats(0.0, 0.95),
    m=st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]),
    K=st.integers(1, 4),
    rate=st.floats(0.1, 6.0),
    correlation=st.sampled_from(["exponential", "product"]),
)


@settings(max_examples=30, deadline=None)
@given(configs)
def test_table_invariants(cfg):
    table = outage_table(cfg)
    assert table.relay[0] == 1.0 and table.dest[0] == 1.0
    for row in (table.relay, table.dest):
        assert all(0.0 <= p <= 1.0 for p in row)
        assert all(b <= a + 1e-9 for a, b in zip(row, row[1:]))
    K = cfg.K
    tele = sum(table.dest[k - 1] - table.dest[k] for k in range(1, K + 1))
    assert tele == pytest.approx(1 - table.dest[K], abs=1e-12)
    value = dlt_from_table(table, cfg.rate)
    success = 1 - table.dest[K]
    assert cfg.rate / K * success - 1e-12 <= value <= cfg.rate * success + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(-5.0, 15.0), st.floats(0.0, 0.9), st.sampled_from([1.0, 2.0]), st.floats(0.2, 5.0))
def test_more_rounds_never_hurt(db, rho, m, rate):
    values = [reference_config(db, rho, m, K, rate) for K in (1, 2, 3, 4)]
    succ = [1 - outage_dest(c, c.K) for c in values]
    thr = [dlt(c) for c in values]
    assert all(b >= a - 1e-9 for a, b in zip(succ, succ[1:]))
    assert all(b >= a - 1e-9 for a, b in zip(thr, thr[1:]))


def test_phase_two_uses_relay_destination_link():
    # weakening the relay-destination hop must raise the two-phase outage
    cfg = reference_config(K=2)
    weak = replace(cfg, links=replace(cfg.links, rd=LinkModel.constant(2.0, 0.1, 0.2, 2)))
    assert outage_dest_given_relay(weak, 2, 1) > outage_dest_given_relay(cfg, 2, 1)
    assert outage_dest_given_relay(weak, 2, 2) == outage_dest_given_relay(cfg, 2, 2)


@pytest.mark.parametrize("db,rho,m", [(5.0, 0.2, 2.0), (0.0, 0.8, 1.0), (10.0, 0.5, 0.5)])
def test_table_against_simulation(db, rho, m):
    cfg = reference_config(db, rho, m, K=3)
    table = outage_table(cfg)
    summary = simulate(cfg, 1_000_000, seed=99)
    for r, est in enumerate(summary.relay_outage(), start=1):
        p = table.relay[r]
        assert abs(est.mean - p) <= 3 * math.sqrt(max(p * (1 - p), 1e-6) / est.n)
    for k, est in enumerate(summary.outage(), start=1):
        p = table.dest[k]
        assert abs(est.mean - p) <= 3 * math.sqrt(max(p * (1 - p), 1e-6) / est.n)
    assert summary.dlt().contains(dlt(cfg))


def test_uncorrelated_relay_outage_matches_sum_of_gammas():
    cfg = reference_config(rho=0.0, m=2.0, K=2)
    spec = spectrum_of(cfg.links.sr, cfg.scale, 2)
    assert outage_relay(cfg, 2) == SnrCdf(spec).cdf(cfg.threshold)
    # two equal Gamma(2) terms: Gamma(4)
    beta = cfg.scale.gamma_t / 2.0
    assert outage_relay(cfg, 2) == pytest.approx(reg_lower_incomplete_gamma(4.0, 3.0 / beta), abs=1e-12)
