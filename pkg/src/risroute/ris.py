"""RIS panels split into equal groups that share one phase shift.

A group reflects the cascaded channel ``h * exp(j*phi) * g`` (inbound
composite ``h``, outbound composite ``g``).  The phase that makes this product
real and positive is the optimum; hardware only offers ``2**K_b`` evenly spaced
levels, so the applied phase is the nearest level and the residual ``delta``
costs a ``cos(delta)**2`` share of the received power.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateChannelError, NoGroupAvailable, ParameterError

TWO_PI = 2.0 * np.pi
LOSS_FORMS = ("projection", "literal")


@dataclass
class RisGroup:
    index: int
    size: int
    k_b: int | None = 2  # None means continuous phase control
    on: bool = True
    busy: bool = False
    phase: float = 0.0

    @property
    def available(self):
        return self.on and not self.busy


@dataclass
class RisPanel:
    id: int
    position: tuple
    total_elements: int
    group_size: int
    k_b: int | None = 2
    groups: list = field(default_factory=list)

    def __post_init__(self):
        if self.group_size < 1 or self.total_elements % self.group_size:
            raise ParameterError(
                f"group size {self.group_size} does not divide {self.total_elements} elements")
        if self.k_b is not None and self.k_b < 1:
            raise ParameterError("K_b must be at least 1")
        if not self.groups:
            self.groups = [RisGroup(b, self.group_size, self.k_b)
                           for b in range(self.total_elements // self.group_size)]

    @property
    def n_groups(self):
        return len(self.groups)

    def available_mask(self):
        return np.array([grp.available for grp in self.groups], dtype=bool)


def optimal_phase(h, g):
    """Phase in [0, 2*pi) that aligns ``h * exp(j*phi) * g`` with the real axis."""
    h = np.asarray(h)
    g = np.asarray(g)
    if np.any(np.abs(h) == 0) or np.any(np.abs(g) == 0):
        raise DegenerateChannelError("phase of a zero channel is undefined")
    out = np.mod(-np.angle(h) - np.angle(g), TWO_PI)
    return float(out) if out.ndim == 0 else out


def quantize_phase(phi_opt, k_b):
    """Snap to the nearest of ``2**k_b`` levels; returns ``(phi_c, delta)``.

    ``delta = phi_opt - phi_c`` lies in ``[-pi/2**k_b, pi/2**k_b)``.  With
    ``k_b=None`` the phase is applied unquantized and ``delta`` is zero.
    """
    phi = np.mod(np.asarray(phi_opt, dtype=float), TWO_PI)
    if k_b is None:
        phi_c, delta = phi, np.zeros_like(phi)
    else:
        if k_b < 1:
            raise ParameterError("K_b must be at least 1")
        levels = 2 ** int(k_b)
        step = TWO_PI / levels
        idx = np.floor(phi / step + 0.5)
        delta = phi - idx * step
        phi_c = np.mod(idx, levels) * step
    if phi_c.ndim == 0:
        return float(phi_c), float(delta)
    return phi_c, delta


def phase_loss(delta, form="projection"):
    """Power share kept under phase error ``delta``."""
    if form == "projection":
        return np.cos(delta) ** 2
    if form == "literal":
        return np.exp(-2.0 * np.asarray(delta, dtype=float))
    raise ConfigError(f"unknown phase-loss form {form!r}")


def snr_scale(p, rho_l, d_in, d_out, alpha, noise):
    """Large-scale SNR factor of a reflected hop."""
    if d_in <= 0 or d_out <= 0:
        raise ParameterError("RIS leg lengths must be positive")
    return p * rho_l ** 2 * (d_in * d_out) ** (-alpha) / noise


def ris_hop_snr(h, g, delta, zeta, form="projection"):
    return zeta * np.abs(h) ** 2 * np.abs(g) ** 2 * phase_loss(delta, form)


def ris_hop_rate(gamma, t_c):
    """Achievable rate after the two-slot estimation overhead per block."""
    if t_c <= 2:
        raise ConfigError(f"coherence length T_c must exceed 2 slots, got {t_c}")
    return (1.0 - 2.0 / t_c) * np.log2(1.0 + np.asarray(gamma, dtype=float))


def group_snrs(h, g, zeta, k_b, applied=None, form="projection"):
    """SNR of every group of a panel.

    ``h`` and ``g`` are per-group composites.  ``applied`` overrides the
    applied phases (random-phase operation); otherwise each group uses its
    quantized optimum.
    """
    h = np.asarray(h)
    g = np.asarray(g)
    phi = optimal_phase(h, g)
    if applied is None:
        _, delta = quantize_phase(phi, k_b)
    else:
        delta = phi - np.asarray(applied, dtype=float)
    return ris_hop_snr(h, g, delta, zeta, form)


def select_group(panel, h, g, zeta=1.0, applied=None, form="projection"):
    """Index of the available group with the highest SNR; ties go to the lowest index."""
    mask = panel.available_mask()
    if not mask.any():
        raise NoGroupAvailable(f"panel {panel.id} has no available group")
    snr = np.where(mask, group_snrs(h, g, zeta, panel.k_b, applied, form), -np.inf)
    return int(np.argmax(snr))
