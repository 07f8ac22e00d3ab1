"""Small-scale fading, spatial correlation across RIS elements, and path loss.

Complex gains are plain numpy complex scalars/arrays; the real part is the
in-phase component and the imaginary part the quadrature component.

Normalisation: every element gain has unit mean power.  A Rician gain with
factor ``K`` splits that power into a line-of-sight part ``K/(K+1)`` with a
uniformly random phase and a circularly symmetric scatter part ``1/(K+1)``.
The magnitude then follows the Rician density with unit second moment.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import ParameterError

# k_factor at or above this is treated as pure line of sight
PURE_LOS_K = 1e6


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watts(dbm):
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


@dataclass(frozen=True)
class RicianParams:
    """Rician factor as a linear power ratio (LoS power / scatter power)."""

    k_factor: float

    def __post_init__(self):
        if not (self.k_factor >= 0):
            raise ParameterError(f"Rician factor must be >= 0, got {self.k_factor}")

    @classmethod
    def from_db(cls, k_db):
        return cls(float(db_to_linear(k_db)))


@dataclass(frozen=True)
class PathLoss:
    rho_l: float
    alpha: float
    distance: float

    def __post_init__(self):
        if self.rho_l <= 0 or self.alpha <= 0:
            raise ParameterError("rho_l and alpha must be positive")
        if not self.distance > 0:
            raise ParameterError(f"distance must be positive, got {self.distance}")


@dataclass(frozen=True)
class CorrelationProfile:
    """Correlation of every element of a group with the group's first element."""

    wavelength: float
    positions: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.mu.ndim != 1 or len(self.mu) != len(self.positions):
            raise ParameterError("one correlation value per element is required")
        if self.mu[0] != 1.0:
            raise ParameterError("correlation of the first element with itself must be 1")
        if np.any(np.abs(self.mu) > 1.0):
            raise ParameterError("correlation values must lie in [-1, 1]")

    @property
    def size(self):
        return len(self.mu)


def sinc_correlation(d, wavelength):
    """sin(2*pi*d/lambda) / (2*pi*d/lambda), equal to 1 at d = 0.

    Accepts scalars or arrays.  ``d`` may be negative; the function is even.
    """
    if not wavelength > 0:
        raise ParameterError(f"wavelength must be positive, got {wavelength}")
    x = 2.0 * np.pi * np.asarray(d, dtype=float) / wavelength
    # np.sinc(t) is sin(pi t)/(pi t)
    out = np.sinc(x / np.pi)
    return float(out) if out.ndim == 0 else out


def element_grid(k_g, dx, dy):
    """Row-major, square-ish planar layout of ``k_g`` elements.

    The grid has ``ceil(sqrt(k_g))`` columns spaced ``dx`` apart and as many
    rows (spaced ``dy``) as needed; the last row may be partial.
    """
    if k_g < 1:
        raise ParameterError("a group needs at least one element")
    cols = int(np.ceil(np.sqrt(k_g)))
    n = np.arange(k_g)
    return np.column_stack([(n % cols) * dx, (n // cols) * dy]).astype(float)


def correlation_profile(k_g, dx, dy, wavelength):
    pos = element_grid(k_g, dx, dy)
    d = np.linalg.norm(pos - pos[0], axis=1)
    mu = np.atleast_1d(sinc_correlation(d, wavelength))
    mu[0] = 1.0
    return CorrelationProfile(wavelength=wavelength, positions=pos, mu=mu)


def sample_rician_element(params, rng, size=None):
    """Draw unit-power Rician gains; the LoS phase is uniform per draw."""
    k = params.k_factor
    phase = rng.uniform(0.0, 2.0 * np.pi, size)
    if k >= PURE_LOS_K:
        return np.exp(1j * phase)
    los = np.sqrt(k / (k + 1.0)) * np.exp(1j * phase)
    sigma = np.sqrt(0.5 / (k + 1.0))
    scatter = sigma * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    return los + scatter


def rician_magnitude_pdf(a, k):
    """Density of |h| for a unit-power Rician gain with factor ``k``."""
    a = np.asarray(a, dtype=float)
    x = 2.0 * a * np.sqrt(k * (1.0 + k))
    # i0e(x) = exp(-x) I0(x) keeps the product finite for large k
    return 2.0 * (1.0 + k) * a * special.i0e(x) * np.exp(x - k - (1.0 + k) * a * a)


def rician_magnitude_cdf(a, k):
    return stats.rice.cdf(a, np.sqrt(2.0 * k), scale=1.0 / np.sqrt(2.0 * (k + 1.0)))


def build_correlated_elements(base, mu):
    """Correlate independent element gains with the first element of the group.

    ``base`` has the group along its last axis.  Element ``n`` becomes
    ``mu[n] * x_1 + sqrt(1 - mu[n]**2) * x_n``; the real coefficients act on
    the in-phase and quadrature parts separately.
    """
    base = np.asarray(base)
    mu = np.asarray(mu, dtype=float)
    if base.shape[-1] != mu.shape[-1]:
        raise ParameterError("profile does not cover the group")
    if np.any(np.abs(mu) > 1.0):
        raise ParameterError("correlation magnitude exceeds 1")
    return mu * base[..., :1] + np.sqrt(1.0 - mu * mu) * base


def composite_group_channel(elements):
    """Sum of the element gains of one group (along the last axis)."""
    elements = np.asarray(elements)
    if elements.ndim == 0 or elements.shape[-1] == 0:
        raise ParameterError("a group channel needs at least one element")
    return elements.sum(axis=-1)


def panel_group_channels(base, profile):
    """Composite channel of every group of a panel.

    ``base`` holds the panel's independent element gains (length B*K_g, group
    after group); returns the B correlated composite gains.
    """
    base = np.asarray(base).reshape(-1, profile.size)
    return composite_group_channel(build_correlated_elements(base, profile.mu))


def apply_path_loss(p, pl):
    """Received power ``p * rho_l * distance**-alpha``."""
    if not p > 0:
        raise ParameterError("transmit power must be positive")
    return p * pl.rho_l * pl.distance ** (-pl.alpha)
