"""Per-route throughput, energy and efficiency, plus seed-level summaries."""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError


def hop_term(hop, p_b, basis="constellation"):
    """Time-like cost of one hop: 1/((1-P_b) m) for direct hops, 1/R via a RIS.

    ``basis="bits"`` replaces the constellation size by bits per symbol.
    """
    if hop.uses_ris:
        if not hop.rate > 0:
            raise ParameterError("RIS hop with zero rate")
        return 1.0 / hop.rate
    m = hop.m
    if m is None or m < 2:
        raise ParameterError("direct hop without a transmitting constellation")
    size = m if basis == "constellation" else math.log2(m)
    return 1.0 / ((1.0 - p_b) * size)


def _attempts(trace):
    """Completed hops plus aborted attempts, each with the share of the batch it sent."""
    return list(trace.hops) + list(getattr(trace, "aborted", ()))


def data_throughput(trace, p_b, basis="constellation"):
    """Inverse of the summed per-hop terms.

    Airtime lost to aborted attempts is charged in proportion to the share
    of the batch they had sent.
    """
    if not trace.hops:
        raise ParameterError("route has no hops")
    return 1.0 / sum(h.sent * hop_term(h, p_b, basis) for h in _attempts(trace))


def energy_consumption(trace, packets, bits, tx_power, proc_power, phase_power, p_b,
                       basis="constellation", phase_shifters=1):
    """Energy of moving the batch along the route.

    The first hop pays no processing power; a RIS hop pays ``phase_power``
    once per phase shifter (1 for group-level control, K_g per element).
    """
    if not trace.hops:
        raise ParameterError("route has no hops")
    total = 0.0
    for i, h in enumerate(trace.hops):
        total += _hop_energy(h, i, p_b, basis, tx_power, proc_power, phase_power, phase_shifters)
    for h in getattr(trace, "aborted", ()):
        total += h.sent * _hop_energy(h, h.index, p_b, basis, tx_power, proc_power, phase_power,
                                      phase_shifters)
    return packets * bits * total


def _hop_energy(h, i, p_b, basis, tx_power, proc_power, phase_power, phase_shifters):
    s = 0.0 if i == 0 else 1.0
    t = 1.0 if h.uses_ris else 0.0
    return hop_term(h, p_b, basis) * (tx_power + s * proc_power + t * phase_power * phase_shifters)


def energy_efficiency(d_t, e_c):
    if not e_c > 0:
        raise ParameterError("energy must be positive")
    return d_t / e_c


@dataclass
class MetricsRecord:
    rid: int
    strategy: str
    delivered: bool
    hops: int
    d_t: float
    e_c: float  # NaN when undelivered
    e_eff: float  # NaN when undelivered
    slots: int
    failure: str | None = None
    aborts: int = 0

    def row(self):
        return {
            "rid": self.rid, "strategy": self.strategy, "delivered": int(self.delivered),
            "hops": self.hops, "d_t": self.d_t, "e_c": self.e_c, "e_eff": self.e_eff,
            "slots": self.slots, "failure": self.failure or "", "aborts": self.aborts,
        }


def phase_shifters(strategy, group_size):
    return group_size if strategy.per_element_phase else 1


def route_metrics(rid, trace, strategy, cfg):
    if not trace.delivered:
        return MetricsRecord(rid, strategy.name, False, len(trace.hops), 0.0, math.nan, math.nan,
                             trace.total_slots, trace.failure, trace.aborts)
    basis = cfg.throughput_basis
    d_t = data_throughput(trace, cfg.target_ber, basis)
    e_c = energy_consumption(trace, cfg.packets, cfg.bits_per_packet, cfg.tx_power, cfg.proc_power,
                             cfg.phase_power, cfg.target_ber, basis,
                             phase_shifters(strategy, cfg.group_size))
    return MetricsRecord(rid, strategy.name, True, len(trace.hops), d_t, e_c,
                         energy_efficiency(d_t, e_c), trace.total_slots, None, trace.aborts)


def replication_means(records):
    """(mean D_T over all requests, mean E_C and mean E_eff over delivered ones)."""
    d_t = float(np.mean([r.d_t for r in records])) if records else math.nan
    ok = [r for r in records if r.delivered]
    e_c = float(np.mean([r.e_c for r in ok])) if ok else math.nan
    e_eff = float(np.mean([r.e_eff for r in ok])) if ok else math.nan
    return d_t, e_c, e_eff


def mean_se(values):
    """Mean and standard error over the finite entries of ``values``."""
    v = np.asarray([x for x in values if x == x], dtype=float)
    if v.size == 0:
        return math.nan, math.nan, 0
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se, int(v.size)
