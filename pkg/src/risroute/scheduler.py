"""Per-relay admission and non-preemptive priority ordering.

All durations here are in slots.  A relay keeps at most one request in
service; waiting requests are ordered by the weight
``beta = c * p + (1 - c) * q`` where ``p`` reflects deadline tightness and
``q`` the achievable next-hop rate, both scaled to [0, 1] over the current
contenders.
"""
import heapq
import math
from dataclasses import dataclass, field

from .errors import BudgetViolation, ParameterError

REASON_HORIZON = "horizon"
REASON_BUDGET = "budget"


def compute_beta(p, q, c):
    for name, v in (("p", p), ("q", q), ("c", c)):
        if not 0.0 <= v <= 1.0:
            raise ParameterError(f"{name}={v} is outside [0, 1]")
    return c * p + (1.0 - c) * q


def min_hops(distance, coverage):
    if distance < 0 or coverage <= 0:
        raise ParameterError("distance must be >= 0 and coverage > 0")
    return math.ceil(distance / coverage)


def carry_forward(budget, actual, next_budget):
    """Move the unused part of this hop's allowance onto the next hop."""
    if actual > budget:
        raise BudgetViolation(f"hop took {actual} against a budget of {budget}")
    return next_budget + (budget - actual)


def waiting_time(k, service, busy_offset=0.0, residual=0.0):
    """Wait of the k-th queued request (1-based).

    ``service`` lists the service times of the requests ahead in order;
    ``residual`` is what remains of the request currently in service.
    """
    if k < 1:
        raise ParameterError("queue positions start at 1")
    return busy_offset + residual + sum(service[: k - 1])


class HopBudget:
    """Splits a route's delay budget evenly over the minimum hop count and
    carries leftovers forward, never granting more than what remains."""

    def __init__(self, total, psi):
        self.total = total
        self.share = total / max(psi, 1)
        self.current = min(self.share, total)
        self.consumed = 0

    @property
    def remaining(self):
        return self.total - self.consumed

    def close_hop(self, actual):
        nxt = carry_forward(self.current, actual, self.share)
        self.consumed += actual
        self.current = min(nxt, self.remaining)
        return self.current


@dataclass
class QueueEntry:
    rid: int
    budget: float  # per-hop allowance granted at this relay
    rate: float  # next-hop bits per slot
    service: int  # slots of service
    slack: float = 0.0  # remaining end-to-end budget, used for tie-breaks
    needs_idle: bool = False
    deadline: float = math.inf  # latest completion slot promised at admission
    admitted_at: int = 0
    beta: float = 0.0


@dataclass
class Admission:
    admitted: bool
    reason: str | None
    wait: float
    total: float
    position: int  # 1-based place among waiting requests


def rank(entries, c):
    """Assign beta to every entry and return them in service order."""
    if not entries:
        return []
    inv = [1.0 / max(e.budget, 1e-300) for e in entries]
    top_inv = max(inv)
    top_rate = max(e.rate for e in entries)
    for e, v in zip(entries, inv):
        p = v / top_inv if top_inv > 0 else 1.0
        q = e.rate / top_rate if top_rate > 0 else 0.0
        e.beta = compute_beta(min(p, 1.0), min(q, 1.0), c)
    return sorted(entries, key=lambda e: (-e.beta, e.slack, e.rid))


@dataclass
class IuQueue:
    eta_w: float  # slots a busy relay is expected to stay busy
    kappa_i: float  # slots an idle relay is expected to stay idle
    c: float = 0.5
    serving: QueueEntry | None = None
    serving_end: int = 0
    waiting: list = field(default_factory=list)

    def horizon(self, on):
        return self.eta_w + self.kappa_i if on else self.kappa_i

    def _projection(self, order, now, on):
        offset = self.eta_w if on else 0.0
        residual = max(self.serving_end - now, 0) if self.serving is not None else 0
        out, acc = [], offset + residual
        for e in order:
            out.append((e, acc, acc + e.service))
            acc += e.service
        return out

    def projection(self, now, on):
        """(entry, wait, total) for every waiting request."""
        return self._projection(self.waiting, now, on)

    def evaluate(self, entry, now, on):
        order = rank(self.waiting + [entry], self.c)
        proj = self._projection(order, now, on)
        pos = next(i for i, (e, _, _) in enumerate(proj) if e is entry)
        _, w, t = proj[pos]
        reason = None
        if t > self.horizon(on):
            reason = REASON_HORIZON
        elif t > entry.budget:
            reason = REASON_BUDGET
        elif any(now + tt > e.deadline for e, _, tt in proj if e is not entry):
            # the newcomer would push an earlier promise past its limit
            reason = REASON_HORIZON
        rank(self.waiting, self.c)
        return Admission(reason is None, reason, w, t, pos + 1), order

    def admit(self, entry, now, on, check=True):
        """Queue ``entry`` if its projected time fits; ``check=False`` always queues."""
        adm, order = self.evaluate(entry, now, on)
        if check and not adm.admitted:
            return adm
        entry.admitted_at = now
        entry.deadline = now + min(self.horizon(on), entry.budget) if check else math.inf
        entry.needs_idle = on
        self.waiting = rank(order, self.c)
        return Admission(True, None, adm.wait, adm.total, adm.position)

    def remove(self, rid):
        self.waiting = [e for e in self.waiting if e.rid != rid]
        if self.waiting:
            self.waiting = rank(self.waiting, self.c)

    def head(self):
        return self.waiting[0] if self.waiting else None

    def start(self, now):
        entry = self.waiting.pop(0)
        self.serving = entry
        self.serving_end = now + entry.service
        if self.waiting:
            self.waiting = rank(self.waiting, self.c)
        return entry

    def finish(self):
        entry, self.serving = self.serving, None
        return entry

    @property
    def idle(self):
        return self.serving is None


# Small closed queueing instances, used to cross-check the queue logic.

@dataclass
class InstanceRequest:
    rid: int
    arrival: int
    path: list  # relay ids visited in order
    rates: list  # bits per slot on the hop leaving each relay
    bits: int  # packets * bits per packet
    budget: int  # end-to-end budget in slots


@dataclass
class QueueInstance:
    eta_w: list  # per relay
    kappa_i: list
    on_until: list  # relay is busy with its own traffic before this slot
    requests: list
    c: float = 0.5


@dataclass
class HopRecord:
    rid: int
    relay: int
    arrival: int
    start: int | None = None
    end: int | None = None
    admitted: bool = True
    reason: str | None = None
    projected_wait: float = 0.0
    projected_total: float = 0.0
    ahead_service: list = field(default_factory=list)  # snapshot at admission
    ahead_rids: list = field(default_factory=list)
    serving_rid: int | None = None
    residual: float = 0.0
    busy_offset: float = 0.0

    @property
    def wait(self):
        return self.start - self.arrival

    @property
    def total(self):
        return self.end - self.arrival


def service_slots(bits, rate):
    n = math.ceil(bits / rate)
    while n * rate < bits:
        n += 1
    return n


def run_queue_instance(inst):
    """Event-driven run of a queueing instance; returns one record per hop visit.

    Each slot is handled in three phases: transfers that end, then arrivals
    (fresh ones and batches just forwarded, by request id), then service
    starts (by relay id).  A relay may start a request that was admitted
    while the relay was busy only once ``on_until`` has passed.
    """
    n = len(inst.eta_w)
    queues = [IuQueue(inst.eta_w[i], inst.kappa_i[i], inst.c) for i in range(n)]
    budgets = {r.rid: HopBudget(r.budget, len(r.path)) for r in inst.requests}
    reqs = {r.rid: r for r in inst.requests}
    hop_of = {r.rid: 0 for r in inst.requests}
    records, live = [], {}
    events = []  # (slot, kind, key): kind 0 finish, 1 arrival, 2 wake
    for r in inst.requests:
        heapq.heappush(events, (r.arrival, 1, r.rid))

    while events:
        now = events[0][0]
        batch = []
        while events and events[0][0] == now:
            batch.append(heapq.heappop(events))
        arrivals = sorted(key for _, kind, key in batch if kind == 1)
        for key in sorted(key for _, kind, key in batch if kind == 0):
            rec = live.pop(key)
            rec.end = now
            queues[rec.relay].finish()
            try:
                budgets[key].close_hop(rec.total)
            except BudgetViolation:
                rec.reason = "overrun"
                continue
            hop_of[key] += 1
            if hop_of[key] < len(reqs[key].path):
                arrivals.append(key)
        for key in sorted(arrivals):
            r = reqs[key]
            h = hop_of[key]
            relay = r.path[h]
            q = queues[relay]
            on = now < inst.on_until[relay]
            hb = budgets[key]
            entry = QueueEntry(key, hb.current, r.rates[h], service_slots(r.bits, r.rates[h]),
                               slack=hb.remaining)
            residual = max(q.serving_end - now, 0) if q.serving is not None else 0
            adm = q.admit(entry, now, on)
            rec = HopRecord(key, relay, now, admitted=adm.admitted, reason=adm.reason,
                            projected_wait=adm.wait, projected_total=adm.total,
                            residual=residual, busy_offset=q.eta_w if on else 0.0,
                            serving_rid=q.serving.rid if q.serving is not None else None)
            records.append(rec)
            if adm.admitted:
                ahead = q.waiting[: adm.position - 1]
                rec.ahead_service = [e.service for e in ahead]
                rec.ahead_rids = [e.rid for e in ahead]
                live[key] = rec
        for i in range(n):
            q = queues[i]
            if not q.idle or q.head() is None:
                continue
            if q.head().needs_idle and now < inst.on_until[i]:
                heapq.heappush(events, (inst.on_until[i], 2, i))
                continue
            e = q.start(now)
            live[e.rid].start = now
            heapq.heappush(events, (now + e.service, 0, e.rid))
    return records
