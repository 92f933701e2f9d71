"""First-hitting-time model for a Brownian particle drifting toward an absorbing receiver.

Units are fixed throughout the package: lengths in micrometres, times in
seconds, diffusivity in um^2/s.  ``MediumSpec`` is the only SI-unit input and
is converted by :func:`diffusion_coefficient`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

BOLTZMANN = 1.380649e-23  # J/K

# m^2/s -> um^2/s
_M2_TO_UM2 = 1e12


@dataclass(frozen=True)
class ChannelParams:
    """Transmitter/receiver separation ``distance`` (um), drift ``velocity``
    (um/s) and ``diffusion`` coefficient (um^2/s)."""

    distance: float
    velocity: float
    diffusion: float

    def __post_init__(self):
        if not (self.distance > 0 and math.isfinite(self.distance)):
            raise ValueError(f"distance must be positive and finite, got {self.distance}")
        if not (self.velocity >= 0 and math.isfinite(self.velocity)):
            raise ValueError(f"velocity must be non-negative and finite, got {self.velocity}")
        if not (self.diffusion > 0 and math.isfinite(self.diffusion)):
            raise ValueError(f"diffusion must be positive and finite, got {self.diffusion}")

    @property
    def has_drift(self) -> bool:
        return self.velocity > 0


@dataclass(frozen=True)
class MediumSpec:
    """Fluid and messenger-molecule properties in SI units (radius in nm)."""

    temperature: float
    viscosity: float
    radius_nm: float
    boltzmann: float = BOLTZMANN

    def __post_init__(self):
        for name in ("temperature", "viscosity", "radius_nm", "boltzmann"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class IGParams:
    """Inverse-Gaussian mean ``mu`` (inf without drift) and shape ``lam``."""

    mu: float
    lam: float


def diffusion_coefficient(medium: MediumSpec) -> float:
    """Stokes-Einstein diffusivity ``kT / (6 pi eta r)`` in um^2/s."""
    radius_m = medium.radius_nm * 1e-9
    d_si = medium.boltzmann * medium.temperature / (6.0 * math.pi * medium.viscosity * radius_m)
    return d_si * _M2_TO_UM2


def ig_params(ch: ChannelParams) -> IGParams:
    mu = ch.distance / ch.velocity if ch.has_drift else math.inf
    lam = ch.distance**2 / (2.0 * ch.diffusion)
    return IGParams(mu=mu, lam=lam)


def std_normal_cdf(x):
    """Standard normal cdf Phi(x)."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def q_function(x):
    """Gaussian tail Q(x) = 1 - Phi(x) = erfc(x / sqrt(2)) / 2."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def inverse_gaussian_pdf(t, mu: float, lam: float):
    """Inverse-Gaussian density written in (mean, shape) form."""
    t = np.asarray(t, dtype=float)
    out = np.sqrt(lam / (2.0 * np.pi * t**3)) * np.exp(-lam * (t - mu) ** 2 / (2.0 * mu**2 * t))
    return out if out.ndim else float(out)


def hitting_pdf(t, ch: ChannelParams):
    """Density of the first time the particle reaches ``ch.distance``.

    Also valid without drift (Levy first-passage density).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(np.isnan(t)):
        raise ValueError("hitting_pdf requires t > 0")
    d, v, D = ch.distance, ch.velocity, ch.diffusion
    with np.errstate(over="ignore"):
        out = d / np.sqrt(4.0 * np.pi * D * t**3) * np.exp(-((v * t - d) ** 2) / (4.0 * D * t))
    out = np.where(np.isinf(t), 0.0, out)
    return out if out.ndim else float(out)


def hitting_cdf(t, ch: ChannelParams):
    """Probability that the particle has been absorbed by time ``t``.

    The second inverse-Gaussian term ``exp(2 lam / mu) Phi(-b)`` is evaluated as
    ``exp(2 lam / mu + log Phi(-b))`` so strong-drift channels, where
    ``2 lam / mu`` reaches 1e7 and beyond, do not overflow.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("hitting_cdf requires t >= 0")
    out = np.zeros_like(t)
    # absorption is certain in one dimension, with or without drift
    out[np.isinf(t)] = 1.0
    pos = (t > 0) & np.isfinite(t)
    tp = t[pos]
    d, v, D = ch.distance, ch.velocity, ch.diffusion
    if v > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            root = d / np.sqrt(2.0 * D * tp)
            a = root * (v * tp / d - 1.0)
            b = root * (v * tp / d + 1.0)
            second = np.exp(v * d / D + special.log_ndtr(-b))
        vals = special.ndtr(a) + second
    else:
        with np.errstate(divide="ignore"):
            vals = special.erfc(d / (2.0 * np.sqrt(D * tp)))
    out[pos] = np.clip(vals, 0.0, 1.0)
    return out if out.ndim else float(out)


def hitting_quantile(p: float, ch: ChannelParams, t_hi: float = 1e12) -> float:
    """Smallest ``t`` with ``hitting_cdf(t) >= p`` (inf if never reached below ``t_hi``)."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    if p == 0.0:
        return 0.0
    if hitting_cdf(t_hi, ch) < p:
        return math.inf
    from scipy.optimize import brentq

    lo = 1e-12
    return brentq(lambda s: hitting_cdf(s, ch) - p, lo, t_hi, xtol=1e-14, rtol=1e-13, maxiter=500)
