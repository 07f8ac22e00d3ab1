"""Greedy hop-by-hop route construction.

Routing reads the radio environment through a *view* object that exposes:

``position(node)``
    planar coordinates in meters.
``relays()``
    ids of every intermediate user.
``los(a, b)``
    whether a direct line-of-sight link exists.
``direct_link(a, b, strategy)``
    ``(m, rate)`` of the direct hop, rate 0 when it cannot carry data.
``panels()``
    iterable of ``(panel_id, position)``.
``ris_link(a, panel_id, b, strategy, exclude)``
    ``(group, rate)`` of the best available group not listed in ``exclude``
    (a set of ``(panel_id, group)``), or ``None``.  A third item, when
    present, is the rate the hop actually gets once its phases are
    configured, if that differs from the rate routing plans with.

The simulation engine and hand-built test fixtures both implement it.
"""
import math
from dataclasses import dataclass, field

DIRECT = "direct"
VIA_RIS = "ris"
_KIND_ORDER = {DIRECT: 0, VIA_RIS: 1}

DEAD_END = "dead_end"
BUDGET = "budget"
HOP_LIMIT = "hop_limit"


@dataclass(frozen=True)
class Strategy:
    name: str
    rule: str  # "rate" or "distance"
    admission: bool = True  # traffic-aware admission and per-hop budgets
    fixed_m: int | None = None  # constellation pinned on direct hops
    random_phase: bool = False
    per_element_phase: bool = False


PROPOSED = Strategy("proposed", "rate")
LRD = Strategy("LRD", "distance")
MRIRS = Strategy("MRIRS", "distance", admission=False, fixed_m=2, per_element_phase=True)
# RAND routes exactly like the proposed scheme but its panels apply random phases
RAND = Strategy("RAND", "rate", random_phase=True, per_element_phase=True)
STRATEGIES = {s.name: s for s in (PROPOSED, LRD, MRIRS, RAND)}


def get_strategy(name):
    for key, s in STRATEGIES.items():
        if key.lower() == str(name).lower():
            return s
    raise KeyError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}")


@dataclass(frozen=True)
class HopCandidate:
    kind: str
    target: int
    rate: float  # bits per slot
    remaining: float  # distance from target to destination
    panel: int | None = None
    group: int | None = None
    m: int | None = None  # constellation size on direct hops
    score: float | None = None  # effective throughput used for ranking; defaults to rate
    actual: float | None = None  # realised rate when it differs from the planned one

    @property
    def value(self):
        return self.rate if self.score is None else self.score

    @property
    def realised(self):
        return self.rate if self.actual is None else self.actual

    @property
    def ris_key(self):
        return None if self.kind == DIRECT else (self.panel, self.group)


@dataclass
class Hop:
    kind: str
    source: int
    target: int
    rate: float
    m: int | None = None
    slots: int = 0
    panel: int | None = None
    group: int | None = None
    wait: int = 0  # slots between arrival at the sender and the start of this hop
    sent: float = 1.0  # share of the batch transmitted; below 1 for aborted attempts
    index: int = 0  # position of the hop on the route (0 for the source's hop)

    @property
    def uses_ris(self):
        return self.kind == VIA_RIS


@dataclass
class RouteTrace:
    strategy: str
    source: int
    dest: int
    hops: list = field(default_factory=list)
    delivered: bool = False
    failure: str | None = None
    total_slots: int = 0
    aborted: list = field(default_factory=list)  # attempts cut short by mobility

    @property
    def aborts(self):
        return len(self.aborted)

    @property
    def nodes(self):
        return [self.source] + [h.target for h in self.hops]


def _dist(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


def effective_rate(kind, m, rate, p_b=0.0, basis="constellation"):
    """Per-hop throughput on the scale the route throughput metric adds up:
    ``(1 - P_b) * m`` (or bits per symbol) for direct hops, the rate via a RIS."""
    if kind == VIA_RIS:
        return rate
    return (1.0 - p_b) * (m if basis == "constellation" else math.log2(m))


def enumerate_candidates(view, holder, dest, visited, coverage, strategy=PROPOSED, used_groups=(),
                         basis=None, p_b=0.0):
    """Every direct and reflected next hop reachable from ``holder``.

    With ``basis`` set, candidates are scored by :func:`effective_rate`;
    otherwise by their raw rate.
    """
    hp = view.position(holder)
    dp = view.position(dest)
    targets = [n for n in view.relays() if n not in visited and n != holder]
    if dest not in visited and dest != holder:
        targets.append(dest)
    tpos = {n: view.position(n) for n in targets}
    out = []
    for n in targets:
        if _dist(hp, tpos[n]) <= coverage and view.los(holder, n):
            m, rate = view.direct_link(holder, n, strategy)
            if rate > 0:
                score = None if basis is None else effective_rate(DIRECT, m, rate, p_b, basis)
                out.append(HopCandidate(DIRECT, n, rate, _dist(tpos[n], dp), m=m, score=score))
    for pid, ppos in view.panels():
        if _dist(hp, ppos) > coverage:
            continue
        for n in targets:
            if _dist(ppos, tpos[n]) > coverage:
                continue
            res = view.ris_link(holder, pid, n, strategy, used_groups)
            if res is not None and res[1] > 0:
                actual = res[2] if len(res) > 2 else None
                out.append(HopCandidate(VIA_RIS, n, res[1], _dist(tpos[n], dp), panel=pid,
                                        group=res[0], actual=actual))
    return out


def with_progress(candidates, current_remaining):
    """Keep hops that end strictly closer to the destination than the sender."""
    return [c for c in candidates if c.remaining < current_remaining]


def _rate_key(c):
    return (-c.value, c.remaining, c.target, _KIND_ORDER[c.kind], c.panel or 0, c.group or 0)


def _distance_key(c):
    return (c.remaining, c.target, _KIND_ORDER[c.kind], -c.value, c.panel or 0, c.group or 0)


def ranked(candidates, strategy):
    key = _rate_key if strategy.rule == "rate" else _distance_key
    return sorted(candidates, key=key)


def next_hop_proposed(candidates):
    """Highest (effective) rate; ties prefer less remaining distance, then lower node id."""
    if not candidates:
        raise ValueError("no candidates")
    return min(candidates, key=_rate_key)


def next_hop_lrd(candidates):
    """Least remaining distance to the destination; ties prefer lower node id."""
    if not candidates:
        raise ValueError("no candidates")
    return min(candidates, key=_distance_key)


def build_route(strategy, source, dest, view, coverage, hop_limit=None, accept=None,
                basis=None, p_b=0.0):
    """Route ``source`` to ``dest`` on a frozen snapshot of the view.

    ``accept(holder, candidate)`` may veto a candidate (relay admission);
    vetoed candidates are skipped in rule order.  Hop timing is left at zero:
    the engine fills it in when it replays routes over time.
    """
    if hop_limit is None:
        psi = math.ceil(_dist(view.position(source), view.position(dest)) / coverage)
        hop_limit = 4 * max(psi, 1)
    trace = RouteTrace(strategy.name, source, dest)
    visited = {source}
    used = set()
    holder = source
    while holder != dest:
        if len(trace.hops) >= hop_limit:
            trace.failure = HOP_LIMIT
            return trace
        here = _dist(view.position(holder), view.position(dest))
        cands = with_progress(
            enumerate_candidates(view, holder, dest, visited, coverage, strategy, used, basis, p_b),
            here)
        choice = None
        for c in ranked(cands, strategy):
            if accept is None or c.target == dest or accept(holder, c):
                choice = c
                break
        if choice is None:
            trace.failure = DEAD_END
            return trace
        trace.hops.append(Hop(choice.kind, holder, choice.target, choice.realised, choice.m,
                              panel=choice.panel, group=choice.group))
        visited.add(choice.target)
        if choice.ris_key is not None:
            used.add(choice.ris_key)
        holder = choice.target
    trace.delivered = True
    return trace
