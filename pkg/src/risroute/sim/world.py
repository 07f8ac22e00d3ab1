"""Random network layouts.

Node ids: relays are ``0..M-1``, sources ``M..M+N-1`` and destinations
``M+N..M+2N-1``; source ``M+n`` sends to destination ``M+N+n``.
"""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..streams import LOS, WORLD, stream


@dataclass
class World:
    seed: int
    area: tuple
    relay_pos: np.ndarray
    panel_pos: np.ndarray
    sources: list
    dests: list
    node_pos: np.ndarray  # initial positions of every node
    los: np.ndarray  # symmetric boolean matrix over nodes
    budgets: np.ndarray  # end-to-end delay budget of each pair, seconds

    @property
    def n_relays(self):
        return len(self.relay_pos)

    @property
    def n_nodes(self):
        return len(self.node_pos)

    def pairs(self):
        return list(zip(self.sources, self.dests))


def panel_grid(n, width, height):
    """Centres of a row-major grid of ``n`` cells covering the area."""
    if n <= 0:
        return np.zeros((0, 2))
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    k = np.arange(n)
    return np.column_stack([((k % cols) + 0.5) * width / cols, ((k // cols) + 0.5) * height / rows])


def los_matrix(n_nodes, p, rng, blocked=()):
    upper = np.triu(rng.random((n_nodes, n_nodes)) < p, 1)
    los = upper | upper.T
    for a, b in blocked:
        los[a, b] = los[b, a] = False
    return los


def generate_world(cfg, seed, max_tries=100_000):
    area = (cfg.width, cfg.height)
    if cfg.pair_max_distance <= cfg.coverage or cfg.coverage >= math.hypot(*area):
        raise ConfigError(["world.pair_max_distance: no pair separation satisfies the limits"])
    rng = stream(seed, WORLD)
    relays = rng.uniform((0.0, 0.0), area, size=(cfg.relays, 2))
    src, dst = [], []
    for _ in range(cfg.pairs):
        for _ in range(max_tries):
            s = rng.uniform((0.0, 0.0), area)
            d = rng.uniform((0.0, 0.0), area)
            if cfg.coverage < math.dist(s, d) <= cfg.pair_max_distance:
                break
        else:
            raise ConfigError(["world.pair_max_distance: could not place a pair in the area"])
        src.append(s)
        dst.append(d)
    lo = 1.0 - cfg.delay_spread / 2.0
    budgets = cfg.delay_budget * rng.uniform(lo, 2.0 - lo, size=cfg.pairs)
    m, n = cfg.relays, cfg.pairs
    node_pos = np.vstack([relays, np.array(src).reshape(-1, 2), np.array(dst).reshape(-1, 2)])
    sources = list(range(m, m + n))
    dests = list(range(m + n, m + 2 * n))
    los = los_matrix(len(node_pos), cfg.p_los, stream(seed, LOS), zip(sources, dests))
    return World(seed, area, relays, panel_grid(cfg.panels, *area), sources, dests,
                 node_pos, los, budgets)
