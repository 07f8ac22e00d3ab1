"""Slot-synchronous replication engine.

Time advances in whole slots but the loop jumps straight to the next slot at
which something happens (a transfer ends, a relay wakes, a deadline passes),
so idle stretches cost nothing.  Within one slot, events are handled in a
fixed order: transfer ends and aborts, then deadlines, then relay wake-ups,
then routing decisions.

A request sits at a *holder* (its source, or a relay serving it).  The holder
picks a next hop, the batch is sent at the hop's rate fixed at the start of
the transfer, and on arrival the next relay queues it.  With mobility, a hop
whose leg stretches beyond the coverage radius mid-transfer is aborted and the
holder chooses again; the time spent is lost.
"""
import copy
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetViolation
from ..link import DEFAULT_TABLE, direct_snr, slots_for_batch
from ..ris import RisPanel, group_snrs, ris_hop_rate, snr_scale
from ..routing import (BUDGET, DEAD_END, DIRECT, HOP_LIMIT, Hop, RouteTrace,
                       enumerate_candidates, get_strategy, ranked, with_progress)
from ..scheduler import HopBudget, IuQueue, QueueEntry, min_hops, rank
from ..streams import ACTIVITY, stream
from ..traffic import ON, ActivityTimeline, TrafficParams, estimate_idle_time, estimate_wait_time
from .field import ChannelField
from .metrics import route_metrics
from .mobility import RandomWaypoint
from .world import generate_world

CAP = "cap"

# event kinds in processing order within a slot
_END, _ABORT, _DEADLINE, _WAKE, _DECIDE = range(5)


def _at(segs, t):
    """Index of the segment in force at time ``t``."""
    k = 0
    while k + 1 < len(segs) and segs[k + 1][0] <= t:
        k += 1
    return k


def _first_exit(seg_a, seg_b, start, end, r):
    """Earliest time in [start, end) at which two piecewise-linear tracks are
    more than ``r`` apart, or None."""
    cuts = sorted({start} | {s[0] for s in seg_a + seg_b if start < s[0] < end})
    cuts.append(end)
    ka = kb = 0
    for t0, t1 in zip(cuts[:-1], cuts[1:]):
        ka = ka + _at(seg_a[ka:], t0)
        kb = kb + _at(seg_b[kb:], t0)
        ta, pa, ua = seg_a[ka]
        tb, pb, ub = seg_b[kb]
        p0 = (pa + ua * (t0 - ta)) - (pb + ub * (t0 - tb))
        w = ua - ub
        c = float(p0 @ p0) - r * r
        if c > 0:
            return t0
        a = float(w @ w)
        if a <= 0:
            continue
        b = 2.0 * float(p0 @ w)
        tau = (-b + math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
        if t0 + tau < t1:
            return t0 + tau
    return None


class _View:
    """Radio environment seen by routing at one slot."""

    def __init__(self, eng, slot):
        self.eng = eng
        self.slot = slot
        self._pos = {}

    def position(self, n):
        p = self._pos.get(n)
        if p is None:
            p = self.eng.position(n, self.slot)
            self._pos[n] = p
        return p

    def relays(self):
        return range(self.eng.world.n_relays)

    def los(self, a, b):
        return bool(self.eng.world.los[a, b])

    def direct_link(self, a, b, strategy):
        eng = self.eng
        cfg = eng.cfg
        d = math.dist(self.position(a), self.position(b))
        if d <= 0:
            d = 1e-3
        g2 = eng.field.direct_gain_sq(self.slot, a, b)
        snr = direct_snr(eng.tx_power, g2, cfg.rho_l, cfg.alpha_direct, d, eng.noise)
        m, rate = eng.table.select(10.0 * math.log10(max(snr, 1e-300)))
        if rate > 0 and strategy.fixed_m is not None:
            m = strategy.fixed_m
            rate = math.log2(m)
        return m, rate

    def panels(self):
        return enumerate(map(tuple, self.eng.world.panel_pos))

    def ris_link(self, a, pid, b, strategy, exclude=()):
        eng = self.eng
        cfg = eng.cfg
        panel = eng.panels[pid]
        mask = panel.available_mask()
        for p, g in exclude:
            if p == pid:
                mask[g] = False
        if not mask.any():
            return None
        ppos = tuple(eng.world.panel_pos[pid])
        d1 = max(math.dist(self.position(a), ppos), 1e-3)
        d2 = max(math.dist(ppos, self.position(b)), 1e-3)
        zeta = snr_scale(eng.tx_power, cfg.rho_l, d1, d2, cfg.alpha_ris, eng.noise)
        h = eng.field.group_channels(self.slot, a, pid)
        g = eng.field.group_channels(self.slot, b, pid)
        snr = np.where(mask, group_snrs(h, g, zeta, panel.k_b, None, cfg.phase_loss), -np.inf)
        grp = int(np.argmax(snr))
        rate = float(ris_hop_rate(snr[grp], cfg.coherence_slots))
        if not strategy.random_phase:
            return grp, rate
        applied = eng.field.random_phases(self.slot, pid, panel.n_groups)
        got = group_snrs(h[grp:grp + 1], g[grp:grp + 1], zeta, panel.k_b, applied[grp:grp + 1],
                         cfg.phase_loss)[0]
        return grp, rate, float(ris_hop_rate(got, cfg.coherence_slots))


@dataclass
class _Request:
    rid: int
    src: int
    dst: int
    budget_slots: int
    hop_limit: int
    trace: RouteTrace
    budget: HopBudget
    holder: int
    arrival: int = 0  # slot the batch reached the holder
    visited: set = field(default_factory=set)
    used: set = field(default_factory=set)
    token: int = 0
    done: bool = False
    pending: object = None  # (candidate, entry, start, end, abort) of the hop in flight
    queued_at: int | None = None  # relay whose queue holds the request


class Engine:
    def __init__(self, cfg, seed, strategy, world=None, field=None, log_queue=False):
        self.cfg = cfg
        self.seed = seed
        self.strategy = get_strategy(strategy) if isinstance(strategy, str) else strategy
        self.world = world if world is not None else generate_world(cfg, seed)
        self.field = field if field is not None else ChannelField(cfg, self.world.n_nodes, seed)
        self.table = DEFAULT_TABLE
        self.tx_power = cfg.tx_power
        self.noise = cfg.noise
        self.mobility = RandomWaypoint(self.world.relay_pos, self.world.area, cfg.v_max, cfg.slot, seed)
        self.panels = [RisPanel(i, tuple(p), cfg.elements, cfg.group_size, cfg.phase_bits)
                       for i, p in enumerate(self.world.panel_pos)]
        tp = TrafficParams(cfg.mean_off, cfg.mean_on, cfg.slot)
        self.activity = [ActivityTimeline(tp, stream(seed, ACTIVITY, i))
                         for i in range(self.world.n_relays)]
        # estimates in slots
        eta = estimate_wait_time(cfg.mean_on / cfg.slot, cfg.wait_threshold, cfg.eta_form)
        kappa = estimate_idle_time(cfg.mean_off / cfg.slot, cfg.idle_confidence)
        self.queues = [IuQueue(eta, kappa, cfg.beta_weight) for _ in range(self.world.n_relays)]
        self._scoring = (cfg.throughput_basis, cfg.target_ber)
        self.log_queue = log_queue
        self.queue_log = []
        self._events = []
        self._seq = 0
        self._wake_at = {}
        self.partial = False
        self.requests = []

    # geometry -------------------------------------------------------------
    def position(self, n, slot):
        if n < self.world.n_relays:
            return tuple(self.mobility.position(n, slot))
        return tuple(self.world.node_pos[n])

    def _segments(self, n, start, end, panel=None):
        if n is None:
            return [(start, np.asarray(self.world.panel_pos[panel], dtype=float), np.zeros(2))]
        if n < self.world.n_relays:
            return self.mobility.segments(n, start, end)
        return [(start, np.asarray(self.world.node_pos[n], dtype=float), np.zeros(2))]

    def _abort_slot(self, holder, cand, start, end):
        """First slot in (start, end) at which a leg of the hop is out of range."""
        if self.mobility.static or end - start <= 1:
            return None
        r = self.cfg.coverage
        moving = [n for n in (holder, cand.target) if n < self.world.n_relays]
        if not moving:
            return None
        if cand.kind == DIRECT:
            legs = [(holder, None, cand.target)]
        else:
            legs = [(holder, cand.panel, None), (None, cand.panel, cand.target)]
        reach = len(moving) * self.cfg.v_max * (end - start) * self.cfg.slot
        first = None
        for a, p, b in legs:
            pa = self._segments(a, start, end, p)
            pb = self._segments(b, start, end, p)
            if math.dist(pa[0][1] + pa[0][2] * (start - pa[0][0]),
                         pb[0][1] + pb[0][2] * (start - pb[0][0])) + reach <= r:
                continue
            t = _first_exit(pa, pb, start, end, r)
            if t is None:
                continue
            s = math.floor(t) + 1
            while s < end and math.dist(self.position(a, s) if a is not None else self.world.panel_pos[p],
                                        self.position(b, s) if b is not None else self.world.panel_pos[p]) <= r:
                s += 1
            if s < end:
                first = s if first is None else min(first, s)
        return first

    # events ---------------------------------------------------------------
    def _push(self, slot, kind, key, token=None):
        self._seq += 1
        heapq.heappush(self._events, (int(slot), kind, self._seq, key, token))

    def _log(self, slot, event, iu, rid, reason=None):
        if self.log_queue:
            self.queue_log.append({"slot": int(slot), "event": event, "iu": int(iu),
                                   "rid": int(rid), "reason": reason})

    def _iu_on(self, iu, slot):
        return self.activity[iu].state(slot) == ON

    def _try_start(self, iu, now):
        q = self.queues[iu]
        if not q.idle or q.head() is None:
            return
        head = q.head()
        if head.needs_idle and self._iu_on(iu, now):
            wake = self.activity[iu].next_off(now)
            if self._wake_at.get(iu) != wake:
                self._wake_at[iu] = wake
                self._push(wake, _WAKE, iu)
            return
        entry = q.start(now)
        req = self.requests[entry.rid]
        req.queued_at = None
        self._log(now, "start", iu, entry.rid)
        self._push(now, _DECIDE, entry.rid, req.token)

    def _fail(self, req, reason, now):
        if req.done:
            return
        req.done = True
        req.token += 1
        req.trace.failure = reason
        req.trace.total_slots = now
        if req.pending is not None:
            cand = req.pending[0]
            if cand.kind != DIRECT:
                self.panels[cand.panel].groups[cand.group].busy = False
            req.pending = None
        if req.queued_at is not None:
            self.queues[req.queued_at].remove(req.rid)
            self._log(now, "drop", req.queued_at, req.rid, reason)
            req.queued_at = None
        self._release_holder(req, now)

    def _release_holder(self, req, now):
        iu = req.holder
        if iu < self.world.n_relays:
            q = self.queues[iu]
            if q.serving is not None and q.serving.rid == req.rid:
                q.finish()
                self._log(now, "finish", iu, req.rid)
                self._try_start(iu, now)

    # decisions ------------------------------------------------------------
    def _lookahead_rate(self, view, req, cand):
        dst = req.dst
        if cand.target == dst:
            return None
        visited = req.visited | {cand.target}
        used = set(req.used)
        if cand.ris_key is not None:
            used.add(cand.ris_key)
        here = math.dist(view.position(cand.target), view.position(dst))
        nxt = with_progress(enumerate_candidates(view, cand.target, dst, visited, self.cfg.coverage,
                                                 self.strategy, used, *self._scoring), here)
        if not nxt:
            return 0.0
        return ranked(nxt, self.strategy)[0].rate

    def _decide(self, req, now):
        cfg = self.cfg
        strat = self.strategy
        view = _View(self, now)
        here = math.dist(view.position(req.holder), view.position(req.dst))
        raw = with_progress(enumerate_candidates(view, req.holder, req.dst, req.visited,
                                                 cfg.coverage, strat, req.used, *self._scoring), here)
        if not raw:
            self._fail(req, DEAD_END, now)
            return
        deadline_total = req.budget_slots
        chosen = None
        for cand in ranked(raw, strat):
            end = now + slots_for_batch(cfg.packets, cfg.bits_per_packet, cand.rate)
            if end > deadline_total:
                continue
            spent = end - req.arrival
            if strat.admission and spent > req.budget.current:
                continue
            entry = None
            if cand.target != req.dst:
                entry = self._reserve(view, req, cand, end, spent)
                if entry is None:
                    continue
            chosen = (cand, entry, now, end)
            break
        if chosen is None:
            nxt = now + cfg.retry_slots
            limit = deadline_total
            if strat.admission:
                limit = min(limit, self._hop_deadline(req))
            if nxt < limit:
                self._push(nxt, _DECIDE, req.rid, req.token)
            else:
                self._fail(req, BUDGET, now)
            return
        cand, entry, start, end = chosen
        if cand.actual is not None:
            end = start + slots_for_batch(cfg.packets, cfg.bits_per_packet, cand.actual)
        if cand.kind != DIRECT:
            self.panels[cand.panel].groups[cand.group].busy = True
        abort = self._abort_slot(req.holder, cand, start, end)
        req.pending = (cand, entry, start, end, abort)
        req.token += 1
        if abort is not None:
            self._push(abort, _ABORT, req.rid, req.token)
        else:
            self._push(end, _END, req.rid, req.token)
        if strat.admission:
            self._push(self._hop_deadline(req), _DEADLINE, req.rid, req.token)

    def _hop_deadline(self, req):
        return req.arrival + int(math.floor(req.budget.current))

    def _reserve(self, view, req, cand, arrive, spent):
        """Admission check at the relay that would receive the batch."""
        cfg = self.cfg
        iu = cand.target
        if self.strategy.admission and cfg.admission_lookahead:
            rate = self._lookahead_rate(view, req, cand)
            if not rate:
                return None
        else:
            rate = 1.0
        probe = copy.copy(req.budget)
        try:
            nb = probe.close_hop(spent)
        except BudgetViolation:
            return None
        entry = QueueEntry(req.rid, nb if self.strategy.admission else math.inf, rate,
                           slots_for_batch(cfg.packets, cfg.bits_per_packet, rate),
                           slack=req.budget_slots - arrive)
        if not self.strategy.admission:
            return entry
        q = self.queues[iu]
        on = self._iu_on(iu, view.slot)
        adm, _ = q.evaluate(entry, arrive, on)
        if not adm.admitted:
            self._log(view.slot, "reject", iu, req.rid, adm.reason)
            return None
        self._log(view.slot, "admit", iu, req.rid)
        entry.needs_idle = on
        entry.deadline = arrive + min(q.horizon(on), nb)
        return entry

    # transfer outcomes ----------------------------------------------------
    def _arrive(self, req, now):
        cand, entry, start, end, _ = req.pending
        req.pending = None
        if cand.kind != DIRECT:
            self.panels[cand.panel].groups[cand.group].busy = False
        hop = Hop(cand.kind, req.holder, cand.target, cand.realised, cand.m, end - start,
                  cand.panel, cand.group, wait=start - req.arrival, index=len(req.trace.hops))
        req.trace.hops.append(hop)
        spent = now - req.arrival
        if cand.target == req.dst:
            req.done = True
            req.token += 1
            req.trace.delivered = True
            req.trace.total_slots = now
            self._release_holder(req, now)
            return
        if self.strategy.admission:
            req.budget.close_hop(spent)
        else:
            req.budget.consumed += spent
        self._release_holder(req, now)
        req.holder = cand.target
        req.arrival = now
        req.visited.add(cand.target)
        if cand.ris_key is not None:
            req.used.add(cand.ris_key)
        if len(req.trace.hops) >= req.hop_limit:
            self._fail(req, HOP_LIMIT, now)
            return
        iu = cand.target
        q = self.queues[iu]
        if self.strategy.admission:
            q.waiting = rank(q.waiting + [entry], q.c)
            self._push(self._hop_deadline(req), _DEADLINE, req.rid, req.token)
        else:
            entry.slack = req.budget_slots - now
            q.admit(entry, now, self._iu_on(iu, now), check=False)
        req.queued_at = iu
        self._try_start(iu, now)

    def _abort(self, req, now):
        cand, _, start, end, _ = req.pending
        req.pending = None
        if cand.kind != DIRECT:
            self.panels[cand.panel].groups[cand.group].busy = False
        req.trace.aborted.append(Hop(cand.kind, req.holder, cand.target, cand.realised, cand.m,
                                     now - start, cand.panel, cand.group, wait=start - req.arrival,
                                     sent=(now - start) / (end - start), index=len(req.trace.hops)))
        req.token += 1
        if self.strategy.admission:
            self._push(self._hop_deadline(req), _DEADLINE, req.rid, req.token)
        self._decide(req, now)

    # main loop ------------------------------------------------------------
    def run(self):
        cfg = self.cfg
        w = self.world
        for n, (s, d) in enumerate(w.pairs()):
            dist = math.dist(w.node_pos[s], w.node_pos[d])
            psi = max(min_hops(dist, cfg.coverage), 1)
            budget = int(math.floor(w.budgets[n] / cfg.slot))
            req = _Request(n, s, d, budget, cfg.hop_limit_factor * psi,
                           RouteTrace(self.strategy.name, s, d), HopBudget(budget, psi), s,
                           visited={s})
            self.requests.append(req)
            self._push(0, _DECIDE, n, req.token)
            self._push(budget, _DEADLINE, n, -1)
        while self._events:
            slot, kind, _, key, token = heapq.heappop(self._events)
            if slot > cfg.max_slots:
                # stale events of finished requests may lie past the cap
                for req in self.requests:
                    if not req.done:
                        self.partial = True
                        self._fail(req, CAP, cfg.max_slots)
                break
            if kind == _WAKE:
                if self._wake_at.get(key) == slot:
                    del self._wake_at[key]
                self._try_start(key, slot)
                continue
            req = self.requests[key]
            if req.done:
                continue
            if kind == _DEADLINE:
                if token == -1 or token == req.token:
                    self._fail(req, BUDGET, slot)
                continue
            if token != req.token:
                continue
            if kind == _END:
                self._arrive(req, slot)
            elif kind == _ABORT:
                self._abort(req, slot)
            elif kind == _DECIDE:
                if req.pending is None:
                    self._decide(req, slot)
        return self

    def results(self):
        return [route_metrics(r.rid, r.trace, self.strategy, self.cfg) for r in self.requests]


@dataclass
class Replication:
    seed: int
    strategy: str
    traces: list
    records: list
    queue_log: list
    partial: bool


def run_replication(cfg, seed, strategies=("proposed",), log_queue=False, world=None):
    """Run each strategy on the same world and channel realisations."""
    world = world if world is not None else generate_world(cfg, seed)
    field = ChannelField(cfg, world.n_nodes, seed)
    out = {}
    for name in strategies:
        eng = Engine(cfg, seed, name, world=world, field=field, log_queue=log_queue).run()
        out[eng.strategy.name] = Replication(seed, eng.strategy.name, [r.trace for r in eng.requests],
                                             eng.results(), eng.queue_log, eng.partial)
    return out
