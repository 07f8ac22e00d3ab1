import math

import numpy as np
import pytest

from risroute.config import defaults
from risroute.errors import ConfigError
from risroute.link import slots_for_batch
from risroute.routing import DIRECT, VIA_RIS, HopCandidate
from risroute.sim.engine import Engine, _first_exit, run_replication
from risroute.sim.field import ChannelField
from risroute.sim.mobility import RandomWaypoint, step_rwp
from risroute.sim.world import World, generate_world, los_matrix, panel_grid


def line_world(cfg, budget=1e3):
    """Source, one relay and destination on a line, 50 m apart."""
    relay = np.array([[50.0, 0.0]])
    node_pos = np.vstack([relay, [[0.0, 0.0]], [[100.0, 0.0]]])
    los = np.zeros((3, 3), dtype=bool)
    for a, b in ((0, 1), (0, 2)):
        los[a, b] = los[b, a] = True
    return World(0, (200.0, 200.0), relay, np.zeros((0, 2)), [1], [2], node_pos, los,
                 np.array([budget]))


def test_world_is_deterministic_and_in_bounds():
    cfg = defaults().replace(relays=50, panels=10)
    a, b = generate_world(cfg, 4), generate_world(cfg, 4)
    assert np.array_equal(a.node_pos, b.node_pos) and np.array_equal(a.los, b.los)
    assert np.all((a.node_pos >= 0) & (a.node_pos <= 400))
    assert np.all((a.panel_pos >= 0) & (a.panel_pos <= 400))
    for s, d in a.pairs():
        assert cfg.coverage < math.dist(a.node_pos[s], a.node_pos[d]) <= cfg.pair_max_distance
        assert not a.los[s, d]
    assert np.all(a.budgets >= cfg.delay_budget * 0.75) and np.all(a.budgets <= cfg.delay_budget * 1.25)


def test_world_without_panels():
    w = generate_world(defaults().replace(panels=0), 1)
    assert w.panel_pos.shape == (0, 2)


def test_world_infeasible():
    cfg = defaults().replace(width=30.0, height=30.0, coverage=42.0, pair_max_distance=70.0)
    with pytest.raises(ConfigError):
        generate_world(cfg, 0, max_tries=20)


def test_panel_grid_and_los():
    g = panel_grid(4, 100, 100)
    assert g.tolist() == [[25, 25], [75, 25], [25, 75], [75, 75]]
    los = los_matrix(5, 1.0, np.random.default_rng(0), [(1, 3)])
    assert np.array_equal(los, los.T) and not los[1, 3] and not los.diagonal().any()


def test_static_mobility():
    m = RandomWaypoint(np.array([[1.0, 2.0]]), (10, 10), 0.0, 1e-4, 0)
    assert m.static and tuple(m.position(0, 10 ** 6)) == (1.0, 2.0)
    pos = np.array([[1.0, 2.0]])
    assert step_rwp(pos.copy(), np.array([[5.0, 5.0]]), np.array([1.0]), 0.0, 1e-4, (10, 10),
                    np.random.default_rng(0)).tolist() == [[1.0, 2.0]]


def test_one_slot_step():
    pos = np.array([[0.0, 0.0]])
    way = np.array([[3.0, 4.0]])
    out = step_rwp(pos, way, np.array([2.0]), 4.0, 0.5, (10, 10), np.random.default_rng(0))
    assert out[0] == pytest.approx([0.6, 0.8])


def test_lazy_positions_follow_speed_limit():
    m = RandomWaypoint(np.array([[50.0, 50.0], [10.0, 300.0]]), (400, 400), 4.0, 1e-4, 7)
    slots = np.arange(0, 10 ** 7, 10 ** 4)
    for i in range(2):
        p = m.positions(i, slots)
        step = np.hypot(*np.diff(p, axis=0).T)
        assert np.all(step <= 4.0 * 1e4 * 1e-4 + 1e-9)
        assert np.all((p >= 0) & (p <= 400))


def reference_rwp_centre_share(n_walkers, legs, area, v_max, rng):
    """Continuous-time random waypoint written from scratch: share of time in the centre."""
    inside = total = 0.0
    for _ in range(n_walkers):
        p = rng.uniform(0, area, 2)
        for _ in range(legs):
            q = rng.uniform(0, area, 2)
            v = rng.uniform(0, v_max) or v_max
            n = 40
            pts = p + (q - p) * (np.arange(n) + 0.5)[:, None] / n
            dur = math.dist(p, q) / v
            c = np.all((pts > area / 4) & (pts < 3 * area / 4), axis=1)
            inside += c.mean() * dur
            total += dur
            p = q
    return inside / total


def test_rwp_centre_bias_matches_reference():
    area = 400.0
    m = RandomWaypoint(np.random.default_rng(1).uniform(0, area, (60, 2)), (area, area), 4.0, 1e-2, 3)
    slots = np.arange(10 ** 5, 4 * 10 ** 5, 500)
    pts = np.vstack([m.positions(i, slots) for i in range(60)])
    share = np.mean(np.all((pts > area / 4) & (pts < 3 * area / 4), axis=1))
    ref = reference_rwp_centre_share(200, 30, area, 4.0, np.random.default_rng(2))
    assert share > 0.3 and ref > 0.3  # uniform placement would give 0.25
    assert share == pytest.approx(ref, abs=0.05)


def test_segments_reproduce_positions():
    m = RandomWaypoint(np.array([[10.0, 10.0]]), (400, 400), 4.0, 1e-4, 3)
    segs = m.segments(0, 10 ** 6, 9 * 10 ** 6)
    xs = np.arange(10 ** 6, 9 * 10 ** 6, 777)
    ts = np.array([s[0] for s in segs])
    k = np.searchsorted(ts, xs, side="right") - 1
    got = np.array([segs[j][1] + segs[j][2] * (x - segs[j][0]) for j, x in zip(k, xs)])
    assert np.allclose(got, m.positions(0, xs), atol=1e-9)


def test_first_exit_closed_form():
    still = [(0, np.array([0.0, 0.0]), np.zeros(2))]
    moving = [(0, np.array([10.0, 0.0]), np.array([1.0, 0.0]))]
    assert _first_exit(still, moving, 0, 100, 60.0) == pytest.approx(50.0)
    assert _first_exit(still, moving, 0, 40, 60.0) is None


def test_abort_slot_matches_slot_scan():
    cfg = defaults().replace(v_max=4.0)
    eng = Engine(cfg, 2, "proposed")
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 60:
        a = int(rng.integers(eng.world.n_relays))
        b = int(rng.integers(eng.world.n_relays))
        start = int(rng.integers(0, 10 ** 6))
        end = start + int(rng.integers(2, 300_000))
        if a == b or math.dist(eng.position(a, start), eng.position(b, start)) > cfg.coverage:
            continue
        checked += 1
        cand = HopCandidate(DIRECT, b, 1.0, 0.0)
        slots = np.arange(start + 1, end)
        d = np.hypot(*(eng.mobility.positions(a, slots) - eng.mobility.positions(b, slots)).T)
        bad = np.flatnonzero(d > cfg.coverage)
        expect = int(slots[bad[0]]) if bad.size else None
        assert eng._abort_slot(a, cand, start, end) == expect


def test_field_is_order_independent():
    cfg = defaults()
    f1, f2 = ChannelField(cfg, 30, 5), ChannelField(cfg, 30, 5)
    x = f1.direct_gain_sq(10, 3, 7)
    f2.direct_gain_sq(10, 1, 2)
    assert f2.direct_gain_sq(10, 7, 3) == x
    assert f1.direct_gain_sq(10 + cfg.coherence_slots, 3, 7) != x
    a = f1.group_channels(0, 4, 2)
    f2.group_channels(0, 9, 2)
    assert np.array_equal(f2.group_channels(0, 4, 2), a)
    assert a.shape == (cfg.groups,)


def test_single_relay_schedule_is_closed_form():
    cfg = defaults().replace(packets=10_000, delay_budget=100.0, mean_off=1e6, mean_on=1.0,
                             pairs=1, relays=1)
    eng = Engine(cfg, 0, "proposed", world=line_world(cfg)).run()
    tr = eng.requests[0].trace
    assert tr.delivered and tr.nodes == [1, 0, 2]
    assert all(h.wait == 0 for h in tr.hops)
    assert all(h.slots == slots_for_batch(cfg.packets, cfg.bits_per_packet, h.rate) for h in tr.hops)
    assert tr.total_slots == sum(h.slots for h in tr.hops)


def test_budget_failure_when_budget_too_small():
    cfg = defaults().replace(packets=10_000, delay_budget=0.01, mean_off=1e6, mean_on=1.0,
                             pairs=1, relays=1, retry_slots=10)
    eng = Engine(cfg, 0, "proposed", world=line_world(cfg, budget=0.01)).run()
    rec = eng.results()[0]
    assert not rec.delivered and rec.failure == "budget" and math.isnan(rec.e_c)


def small_cfg(**kw):
    base = dict(packets=50_000, delay_budget=20.0, mean_off=60.0, mean_on=1.0, relays=60)
    base.update(kw)
    return defaults().replace(**base)


def test_replication_determinism():
    cfg = small_cfg()
    a = run_replication(cfg, 3, ("proposed", "LRD", "MRIRS", "RAND"))
    b = run_replication(cfg, 3, ("RAND", "MRIRS", "LRD", "proposed"))
    for name in a:
        assert [r.row() for r in a[name].records] == [r.row() for r in b[name].records]


@pytest.mark.parametrize("seed", range(6))
def test_engine_invariants(seed):
    cfg = small_cfg(v_max=2.0)
    out = run_replication(cfg, seed, ("proposed", "LRD", "MRIRS", "RAND"), log_queue=True)
    for name, rep in out.items():
        for tr, rec in zip(rep.traces, rep.records):
            nodes = tr.nodes
            assert len(set(nodes)) == len(nodes)
            if tr.delivered:
                assert nodes[-1] == tr.dest
                assert tr.total_slots <= math.floor(cfg.delay_budget * 1.25 / cfg.slot)
                assert rec.d_t > 0 and rec.e_c > 0
            ris = [(h.panel, h.group) for h in tr.hops if h.kind == VIA_RIS]
            assert len(ris) == len(set(ris))
            for h in tr.aborted:
                assert 0 <= h.sent < 1
        events = {e["event"] for e in rep.queue_log}
        assert events <= {"admit", "reject", "start", "finish", "drop"}
