"""Block-fading channel realisations for a whole world.

Channels are constant over a coherence block of ``T_c`` slots and redrawn per
block.  Every realisation comes from its own keyed stream, so a link's gain
in a block is the same no matter which strategy asks for it or when.
"""
import numpy as np

from ..channel import (RicianParams, correlation_profile, panel_group_channels,
                       sample_rician_element)
from ..streams import DIRECT, RAND_PHASE, RIS, stream


class ChannelField:
    def __init__(self, cfg, n_nodes, seed):
        self.seed = seed
        self.n_nodes = n_nodes
        self.block_slots = cfg.coherence_slots
        self.elements = cfg.elements
        self.params = RicianParams.from_db(cfg.rician_k_db)
        wl = cfg.wavelength
        self.profile = correlation_profile(cfg.group_size, cfg.spacing_x * wl,
                                           cfg.spacing_y * wl, wl)
        self._block = None
        self._direct = {}
        self._ris = {}
        self._phases = {}

    def block(self, slot):
        return int(slot) // self.block_slots

    def _enter(self, b):
        if b != self._block:
            self._block = b
            self._direct = {}
            self._ris.clear()
            self._phases.clear()

    def direct_gain_sq(self, slot, a, b):
        """|h|^2 of the direct link between nodes ``a`` and ``b``."""
        blk = self.block(slot)
        self._enter(blk)
        key = (a, b) if a < b else (b, a)
        g2 = self._direct.get(key)
        if g2 is None:
            h = sample_rician_element(self.params, stream(self.seed, DIRECT, blk, *key))
            g2 = float(abs(h) ** 2)
            self._direct[key] = g2
        return g2

    def group_channels(self, slot, node, panel):
        """Composite channel of every group between ``node`` and ``panel``."""
        blk = self.block(slot)
        self._enter(blk)
        key = (node, panel)
        out = self._ris.get(key)
        if out is None:
            base = sample_rician_element(self.params, stream(self.seed, RIS, blk, node, panel),
                                         self.elements)
            out = panel_group_channels(base, self.profile)
            self._ris[key] = out
        return out

    def random_phases(self, slot, panel, n_groups):
        blk = self.block(slot)
        self._enter(blk)
        out = self._phases.get(panel)
        if out is None:
            out = stream(self.seed, RAND_PHASE, blk, panel).uniform(0.0, 2 * np.pi, n_groups)
            self._phases[panel] = out
        return out
