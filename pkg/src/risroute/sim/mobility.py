"""Random waypoint motion of the relays.

Each relay walks straight to a waypoint drawn uniformly over the area at a
speed drawn uniformly from [0, v_max], then draws the next waypoint and speed.
Legs are generated lazily, so the position at any slot is available without
stepping through the slots before it.  With v_max = 0 nothing moves.
"""
import math

import numpy as np

from ..streams import MOBILITY, stream


def step_rwp(positions, waypoints, speeds, v_max, slot, area, rng):
    """Advance every walker by one slot (in place) and return the positions.

    A walker that reaches its waypoint within the slot stops there and draws
    a new waypoint and speed for the next slot.
    """
    if v_max <= 0:
        return positions
    delta = waypoints - positions
    dist = np.hypot(delta[:, 0], delta[:, 1])
    reach = speeds * slot
    arrived = dist <= reach
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(arrived, 1.0, reach / np.where(dist > 0, dist, 1.0))
    positions += delta * frac[:, None]
    n = int(arrived.sum())
    if n:
        waypoints[arrived] = rng.uniform((0.0, 0.0), area, size=(n, 2))
        speeds[arrived] = rng.uniform(0.0, v_max, size=n)
    return positions


class _Walker:
    __slots__ = ("rng", "starts", "points", "speeds", "ends")

    def __init__(self, start, rng):
        self.rng = rng
        self.starts = [0]  # slot at which each leg begins
        self.points = [np.asarray(start, dtype=float)]  # leg origins
        self.speeds = []
        self.ends = []  # leg destinations


class RandomWaypoint:
    def __init__(self, start, area, v_max, slot, seed):
        self.start = np.asarray(start, dtype=float)
        self.area = (float(area[0]), float(area[1]))
        self.v_max = float(v_max)
        self.slot = float(slot)
        self.seed = seed
        self._walkers = {}

    @property
    def static(self):
        return self.v_max <= 0

    def _walker(self, i):
        w = self._walkers.get(i)
        if w is None:
            w = _Walker(self.start[i], stream(self.seed, MOBILITY, i))
            self._walkers[i] = w
        return w

    def _grow(self, w, upto):
        while w.starts[-1] <= upto:
            a = w.points[-1]
            b = w.rng.uniform((0.0, 0.0), self.area)
            v = 0.0
            while v <= 0.0:
                v = w.rng.uniform(0.0, self.v_max)
            n = max(1, math.ceil(math.hypot(*(b - a)) / (v * self.slot)))
            w.speeds.append(v)
            w.ends.append(b)
            w.points.append(b)
            w.starts.append(w.starts[-1] + n)

    def position(self, i, s):
        if self.static:
            return self.start[i]
        return self.positions(i, np.array([s]))[0]

    def positions(self, i, slots):
        """Positions of relay ``i`` at an array of slots."""
        slots = np.asarray(slots)
        if self.static:
            return np.broadcast_to(self.start[i], (len(slots), 2))
        w = self._walker(i)
        self._grow(w, int(slots.max()))
        starts = np.asarray(w.starts)
        k = np.searchsorted(starts, slots, side="right") - 1
        a = np.asarray(w.points)[k]
        b = np.asarray(w.ends)[k]
        length = np.hypot(*(b - a).T)
        travelled = (slots - starts[k]) * np.asarray(w.speeds)[k] * self.slot
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(length > 0, np.minimum(travelled / length, 1.0), 1.0)
        return a + (b - a) * frac[:, None]

    def segments(self, i, s0, s1):
        """Piecewise-linear motion of relay ``i`` over slots [s0, s1].

        Returns ``(t, p, u)`` triples: from slot ``t`` on, the relay sits at
        ``p + u * (s - t)`` until the next triple starts.
        """
        if self.static:
            return [(s0, self.start[i].copy(), np.zeros(2))]
        w = self._walker(i)
        self._grow(w, int(s1))
        k = int(np.searchsorted(w.starts, s0, side="right")) - 1
        out = []
        while k < len(w.speeds) and w.starts[k] <= s1:
            a, b, v = w.points[k], w.ends[k], w.speeds[k]
            length = math.hypot(*(b - a))
            t = w.starts[k]
            if length > 0:
                u = (b - a) / length * v * self.slot
                out.append((t, a, u))
                out.append((t + length / (v * self.slot), b.copy(), np.zeros(2)))
            else:
                out.append((t, a, np.zeros(2)))
            k += 1
        return out
