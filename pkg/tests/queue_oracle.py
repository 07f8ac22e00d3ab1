"""Slot-by-slot reference simulation of small relay queueing instances.

Written without the scheduler module's classes: every slot it rebuilds the
priority order from scratch and tracks budgets with plain arithmetic.  It is
slow and only meant for a handful of requests.
"""
import math

from risroute.scheduler import InstanceRequest, QueueInstance


def _service(bits, rate):
    n = math.ceil(bits / rate)
    while n * rate < bits:
        n += 1
    return n


def _order(items, c):
    """items: dicts with keys allow, rate, slack, rid."""
    if not items:
        return []
    inv = [1.0 / max(it["allow"], 1e-300) for it in items]
    top_inv, top_rate = max(inv), max(it["rate"] for it in items)
    keyed = []
    for it, v in zip(items, inv):
        p = min(v / top_inv, 1.0) if top_inv > 0 else 1.0
        q = min(it["rate"] / top_rate, 1.0) if top_rate > 0 else 0.0
        keyed.append(((-(c * p + (1 - c) * q), it["slack"], it["rid"]), it))
    keyed.sort(key=lambda x: x[0])
    return [it for _, it in keyed]


def simulate(inst, slot_limit=10**6):
    n_relay = len(inst.eta_w)
    reqs = {r.rid: r for r in inst.requests}
    hop = {r.rid: 0 for r in inst.requests}
    # plain per-request budget state: share, allowance for this hop, time used
    share = {r.rid: r.budget / max(len(r.path), 1) for r in inst.requests}
    allow = {r.rid: min(share[r.rid], r.budget) for r in inst.requests}
    used = {r.rid: 0 for r in inst.requests}
    serving = [None] * n_relay  # (rid, start, end)
    waiting = [[] for _ in range(n_relay)]
    arrivals = {}  # slot -> list of rids
    for r in inst.requests:
        arrivals.setdefault(r.arrival, []).append(r.rid)
    out = []
    cur = {}  # rid -> record dict of the visit in progress
    active = len(inst.requests)
    for now in range(slot_limit):
        if active == 0:
            break
        todo = list(arrivals.pop(now, []))
        # phase 1: transfers ending now
        for i in range(n_relay):
            srv = serving[i]
            if srv is not None and srv[2] == now:
                rid = srv[0]
                serving[i] = None
                rec = cur.pop(rid)
                rec["end"] = now
                took = now - rec["arrival"]
                if took > allow[rid]:
                    rec["reason"] = "overrun"
                    active -= 1
                    continue
                nxt_allow = share[rid] + allow[rid] - took
                used[rid] += took
                allow[rid] = min(nxt_allow, reqs[rid].budget - used[rid])
                hop[rid] += 1
                if hop[rid] < len(reqs[rid].path):
                    todo.append(rid)
                else:
                    active -= 1
        # phase 2: arrivals in request order
        for rid in sorted(todo):
            r = reqs[rid]
            relay = r.path[hop[rid]]
            on = now < inst.on_until[relay]
            horizon = inst.eta_w[relay] + inst.kappa_i[relay] if on else inst.kappa_i[relay]
            me = {"rid": rid, "allow": allow[rid], "rate": r.rates[hop[rid]],
                  "service": _service(r.bits, r.rates[hop[rid]]),
                  "slack": r.budget - used[rid]}
            order = _order(waiting[relay] + [me], inst.c)
            t = (inst.eta_w[relay] if on else 0.0)
            if serving[relay] is not None:
                t += max(serving[relay][2] - now, 0)
            totals = {}
            waits = {}
            for it in order:
                waits[it["rid"]] = t
                t += it["service"]
                totals[it["rid"]] = t
            reason = None
            if totals[rid] > horizon:
                reason = "horizon"
            elif totals[rid] > me["allow"]:
                reason = "budget"
            elif any(now + totals[it["rid"]] > it["deadline"] for it in waiting[relay]):
                reason = "horizon"
            rec = {"rid": rid, "relay": relay, "arrival": now, "admitted": reason is None,
                   "reason": reason, "wait": waits[rid], "total": totals[rid],
                   "start": None, "end": None}
            out.append(rec)
            if reason is None:
                me["deadline"] = now + min(horizon, me["allow"])
                me["needs_idle"] = on
                waiting[relay].append(me)
                cur[rid] = rec
            else:
                active -= 1
        # phase 3: starts
        for i in range(n_relay):
            if serving[i] is not None or not waiting[i]:
                continue
            head = _order(waiting[i], inst.c)[0]
            if head["needs_idle"] and now < inst.on_until[i]:
                continue
            waiting[i].remove(head)
            serving[i] = (head["rid"], now, now + head["service"])
            cur[head["rid"]]["start"] = now
    return out


def random_instance(rng):
    n = rng.randint(1, 3)
    eta = [rng.randint(1, 30) for _ in range(n)]
    kappa = [rng.randint(20, 300) for _ in range(n)]
    # a relay's own traffic never outlasts its busy estimate
    on_until = [rng.choice([0, rng.randint(0, e)]) for e in eta]
    reqs = []
    for rid in range(rng.randint(1, 5)):
        path = rng.sample(range(n), rng.randint(1, n))
        reqs.append(InstanceRequest(rid, rng.randint(0, 40), path,
                                    [rng.choice([1, 2, 3, 4, 6, 8]) for _ in path],
                                    rng.randint(1, 60), rng.randint(20, 400)))
    return QueueInstance(eta, kappa, on_until, reqs, c=rng.choice([0.0, 0.3, 0.5, 1.0]))
