import math

import pytest

from fixtures import D1, S1, figure_one
from risroute.config import defaults
from risroute.errors import ParameterError
from risroute.routing import DIRECT, MRIRS, PROPOSED, RAND, VIA_RIS, Hop, RouteTrace, build_route
from risroute.sim.metrics import (data_throughput, energy_consumption, energy_efficiency,
                                  mean_se, phase_shifters, replication_means, route_metrics)


def trace(*hops, delivered=True):
    return RouteTrace("proposed", 0, 9, list(hops), delivered)


def test_throughput_examples():
    assert data_throughput(trace(Hop(DIRECT, 0, 9, 1.0, m=2)), 0.0) == 2
    assert data_throughput(trace(Hop(VIA_RIS, 0, 9, 4.0)), 0.0) == 4
    mixed = trace(Hop(DIRECT, 0, 1, 2.0, m=4), Hop(VIA_RIS, 1, 9, 2.0))
    expected = 1 / (1 / ((1 - 1e-6) * 4) + 1 / 2)
    assert data_throughput(mixed, 1e-6) == pytest.approx(expected, rel=1e-12)
    assert data_throughput(mixed, 1e-6) == pytest.approx(1.3333, abs=1e-4)
    assert data_throughput(trace(Hop(DIRECT, 0, 9, 2.0, m=4)), 0.0, "bits") == 2


def test_throughput_rejects_bad_traces():
    with pytest.raises(ParameterError):
        data_throughput(trace(), 0.0)
    with pytest.raises(ParameterError):
        data_throughput(trace(Hop(VIA_RIS, 0, 9, 0.0)), 0.0)


def test_energy_examples():
    p, proc, phase = 1.0, 0.01, 0.003
    assert energy_consumption(trace(Hop(DIRECT, 0, 9, 1.0, m=2)), 1, 1, p, proc, phase, 0.0) == p / 2
    assert energy_consumption(trace(Hop(VIA_RIS, 0, 9, 1.0)), 1, 1, p, proc, phase, 0.0) == p + phase


def test_efficiency_examples():
    assert energy_efficiency(2.0, 4.0) == 0.5
    with pytest.raises(ParameterError):
        energy_efficiency(1.0, 0.0)


def test_figure_one_ledger():
    cfg = defaults()
    tr = build_route(PROPOSED, S1, D1, figure_one(), cfg.coverage)
    pb = cfg.target_ber
    # hop by hop: S1-U1 16-QAM, U1-R1-U3 at 6 bits/slot, U3-D1 16-QAM
    terms = [1 / ((1 - pb) * 16), 1 / 6.0, 1 / ((1 - pb) * 16)]
    powers = [cfg.tx_power, cfg.tx_power + cfg.proc_power + cfg.phase_power,
              cfg.tx_power + cfg.proc_power]
    e_ref = cfg.packets * cfg.bits_per_packet * sum(t * w for t, w in zip(terms, powers))
    d_ref = 1 / sum(terms)
    rec = route_metrics(0, tr, PROPOSED, cfg)
    assert rec.d_t == pytest.approx(d_ref, rel=1e-12)
    assert rec.e_c == pytest.approx(e_ref, rel=1e-12)
    assert rec.e_eff == pytest.approx(d_ref / e_ref, rel=1e-12)


def test_per_element_phase_energy_is_linear():
    cfg = defaults()
    tr = build_route(PROPOSED, S1, D1, figure_one(), cfg.coverage)
    base = energy_consumption(tr, 1, 1, 1.0, 0.1, 0.01, 0.0, phase_shifters=1)
    for k in (4, 10, 25):
        e = energy_consumption(tr, 1, 1, 1.0, 0.1, 0.01, 0.0, phase_shifters=k)
        assert e - base == pytest.approx((k - 1) * 0.01 / 6.0, rel=1e-12)
    assert phase_shifters(MRIRS, 25) == 25 and phase_shifters(RAND, 25) == 25
    assert phase_shifters(PROPOSED, 25) == 1


def test_aborted_attempts_are_charged():
    done = Hop(DIRECT, 0, 9, 2.0, m=4)
    cut = Hop(DIRECT, 0, 5, 2.0, m=4, sent=0.5)
    tr = trace(done)
    tr.aborted.append(cut)
    assert data_throughput(tr, 0.0) == pytest.approx(1 / (0.25 + 0.125))
    assert energy_consumption(tr, 1, 1, 1.0, 0, 0, 0.0) == pytest.approx(0.25 + 0.125)


def test_undelivered_record():
    cfg = defaults()
    tr = trace(Hop(DIRECT, 0, 1, 2.0, m=4), delivered=False)
    tr.failure = "budget"
    rec = route_metrics(3, tr, PROPOSED, cfg)
    assert rec.d_t == 0.0 and math.isnan(rec.e_c) and math.isnan(rec.e_eff)
    assert rec.row()["failure"] == "budget"


def test_replication_means_and_se():
    cfg = defaults()
    ok = route_metrics(0, trace(Hop(DIRECT, 0, 9, 1.0, m=2)), PROPOSED, cfg)
    bad = route_metrics(1, trace(delivered=False), PROPOSED, cfg)
    d_t, e_c, e_eff = replication_means([ok, bad])
    assert d_t == pytest.approx(ok.d_t / 2)
    assert e_c == ok.e_c and e_eff == ok.e_eff
    m, se, n = mean_se([1.0, 3.0, math.nan])
    assert (m, n) == (2.0, 2) and se == pytest.approx(1.0)
    assert mean_se([math.nan])[2] == 0
