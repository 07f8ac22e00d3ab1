"""Hand-built routing views."""
import math

# node ids
U1, U2, U3, S1, D1 = 0, 1, 2, 3, 4
R1 = 0  # panel id


class FixedView:
    """A view with explicit positions, LoS pairs and per-link rates."""

    def __init__(self, pos, relays, los, direct, panels, ris):
        self.pos = pos
        self._relays = relays
        self._los = {frozenset(p) for p in los}
        self.direct = {frozenset(k): v for k, v in direct.items()}  # -> (m, rate)
        self._panels = panels
        self.ris = ris  # (a, panel, b) -> list of (group, rate)

    def position(self, n):
        return self.pos[n]

    def relays(self):
        return list(self._relays)

    def los(self, a, b):
        return frozenset((a, b)) in self._los

    def direct_link(self, a, b, strategy):
        m, rate = self.direct.get(frozenset((a, b)), (1, 0.0))
        if rate > 0 and strategy.fixed_m is not None:
            return strategy.fixed_m, math.log2(strategy.fixed_m)
        return m, rate

    def panels(self):
        return list(self._panels.items())

    def ris_link(self, a, pid, b, strategy, exclude=()):
        opts = [(g, r) for g, r in self.ris.get((a, pid, b), []) if (pid, g) not in exclude]
        if not opts:
            return None
        return max(opts, key=lambda x: (x[1], -x[0]))


def figure_one():
    """S1 reaches U1 directly; U1 has no line of sight onward, but panel R1
    bridges it to U2 (closer to D1, slow) and U3 (farther, fast)."""
    pos = {S1: (0.0, 0.0), U1: (40.0, 0.0), U2: (100.0, 0.0), U3: (95.0, 35.0), D1: (140.0, 0.0)}
    los = [(S1, U1), (U2, D1), (U3, D1)]
    direct = {(S1, U1): (16, 4.0), (U2, D1): (64, 6.0), (U3, D1): (16, 4.0)}
    ris = {(U1, R1, U2): [(0, 3.0), (1, 2.5)], (U1, R1, U3): [(0, 6.0), (1, 5.0)]}
    return FixedView(pos, [U1, U2, U3], los, direct, {R1: (70.0, 20.0)}, ris)
