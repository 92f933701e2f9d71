"""Q-IMoSK symbol model under the Gaussian count approximation.

Each symbol is carried by a distinct molecule type.  In an interval the
receiver sees, per type, a count made of current-symbol molecules ``N_c``,
leftovers from the previous symbol ``N_p`` and noise ``N_n``.  All three are
treated as independent Gaussians, so sums just add means and variances.

The joint probabilities follow the two-factor detector: symbol ``Y`` is
registered when its own count reaches ``tau`` while a single competing type
stays below ``tau``.  This leaves some probability mass unassigned, which is
recorded in :attr:`JointPXY.total_mass` and handled by :mod:`driftcomm.rate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import q_function


class Mode(str, Enum):
    ONE_ISI = "one-isi"
    NO_ISI = "no-isi"


@dataclass(frozen=True)
class ModulationConfig:
    n: int = 1000
    tau: float = 0.0
    alphabet_size: int = 4

    def __post_init__(self):
        if self.alphabet_size not in (2, 4):
            raise ValueError("alphabet_size must be 2 (B-IMoSK) or 4 (Q-IMoSK)")
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("n must be a positive integer")
        if not self.tau >= 0:
            raise ValueError("tau must be non-negative")


@dataclass(frozen=True)
class NoiseModel:
    """Per-type noise count per interval, Gaussian with ``mean`` and ``variance``."""

    mean: float = 0.0
    variance: float = 0.0

    def __post_init__(self):
        if not (self.mean >= 0 and self.variance >= 0):
            raise ValueError("noise mean and variance must be non-negative")
        if self.mean == 0 and self.variance != 0:
            raise ValueError("zero-mean noise must have zero variance")

    @classmethod
    def poisson(cls, mean: float) -> "NoiseModel":
        return cls(mean=mean, variance=mean)


@dataclass(frozen=True)
class CountDistribution:
    mean: float
    variance: float

    def __add__(self, other: "CountDistribution") -> "CountDistribution":
        return CountDistribution(self.mean + other.mean, self.variance + other.variance)


ZERO = CountDistribution(0.0, 0.0)


def count_distribution(n: int, p: float) -> CountDistribution:
    """Normal approximation of Binomial(n, p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if n < 0:
        raise ValueError("n must be non-negative")
    return CountDistribution(n * p, n * p * (1.0 - p))


def noise_distribution(noise: NoiseModel) -> CountDistribution:
    return CountDistribution(noise.mean, noise.variance)


def tail_ge(dist: CountDistribution, tau):
    """P(N >= tau) for a Gaussian count; an indicator when the variance is zero."""
    tau = np.asarray(tau, dtype=float)
    if dist.variance == 0:
        out = (dist.mean >= tau).astype(float)
    else:
        out = q_function((tau - dist.mean) / math.sqrt(dist.variance))
        out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def tail_lt(dist: CountDistribution, tau):
    out = 1.0 - np.asarray(tail_ge(dist, tau))
    return out if out.ndim else float(out)


def _check_probability(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class _Counts:
    cur: CountDistribution
    prev: CountDistribution
    noise: CountDistribution


def _counts(cfg: ModulationConfig, noise: NoiseModel, p_current: float, p_residual: float) -> _Counts:
    _check_probability("p_current", p_current)
    _check_probability("p_residual", p_residual)
    if p_current + p_residual > 1.0 + 1e-12:
        raise ValueError("p_current + p_residual exceeds 1")
    return _Counts(
        count_distribution(cfg.n, p_current),
        count_distribution(cfg.n, p_residual),
        noise_distribution(noise),
    )


def _symbol_weight(cfg: ModulationConfig) -> float:
    # B-IMoSK reuses the quaternary weights; there is no dedicated binary form.
    return 1.0 / 16.0


def triplet_terms(cfg: ModulationConfig, noise: NoiseModel, p_current: float, p_residual: float, tau=None):
    """Detection probabilities for the four kinds of (Z, X, Y) triplet.

    Returns a dict keyed by ``(x_equals_y, z_role)`` where ``z_role`` is
    ``"same"`` when the previous symbol ``Z`` equals the one whose count is
    tested (``X`` on the diagonal, ``Y`` off it) and ``"other"`` otherwise.
    The values are unweighted: multiply by P(Z) P(X) to get P_b.
    """
    c = _counts(cfg, noise, p_current, p_residual)
    tau = cfg.tau if tau is None else tau
    n_, cur, prev = c.noise, c.cur, c.prev
    return {
        (True, "same"): tail_ge(prev + cur + n_, tau) * tail_lt(n_, tau),
        (True, "other"): tail_ge(cur + n_, tau) * tail_lt(prev + n_, tau),
        (False, "same"): tail_ge(prev + n_, tau) * tail_lt(cur + n_, tau),
        (False, "other"): tail_ge(n_, tau) * tail_lt(prev + cur + n_, tau),
    }


def pa_one_isi(x_equals_y: bool, cfg: ModulationConfig, noise: NoiseModel,
               p_current: float, p_residual: float, tau=None):
    """P_a(X, Y) with one interfering previous symbol (uniform Z over 4 types)."""
    terms = triplet_terms(cfg, noise, p_current, p_residual, tau)
    w = _symbol_weight(cfg)
    return w * (terms[(x_equals_y, "same")] + 3.0 * terms[(x_equals_y, "other")])


def pa_no_isi(x_equals_y: bool, cfg: ModulationConfig, noise: NoiseModel, p_current: float, tau=None):
    """P_a(X, Y) when the previous symbol has fully arrived before the next release."""
    c = _counts(cfg, noise, p_current, 0.0)
    tau = cfg.tau if tau is None else tau
    if x_equals_y:
        val = tail_ge(c.cur + c.noise, tau) * tail_lt(c.noise, tau)
    else:
        val = tail_ge(c.noise, tau) * tail_lt(c.cur + c.noise, tau)
    return 0.25 * val


@dataclass(frozen=True)
class JointPXY:
    entries: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.entries.sum())

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def joint_from_pa(cfg: ModulationConfig, pa_diag: float, pa_off: float) -> JointPXY:
    if pa_diag < 0 or pa_off < 0:
        raise ValueError("joint entries must be non-negative")
    m = cfg.alphabet_size
    entries = np.full((m, m), float(pa_off))
    np.fill_diagonal(entries, float(pa_diag))
    return JointPXY(entries)


def joint_for_mode(mode: Mode, cfg: ModulationConfig, noise: NoiseModel,
                   p_current: float, p_residual: float, tau=None) -> JointPXY:
    if Mode(mode) is Mode.ONE_ISI:
        diag = pa_one_isi(True, cfg, noise, p_current, p_residual, tau)
        off = pa_one_isi(False, cfg, noise, p_current, p_residual, tau)
    else:
        diag = pa_no_isi(True, cfg, noise, p_current, tau)
        off = pa_no_isi(False, cfg, noise, p_current, tau)
    return joint_from_pa(cfg, diag, off)


def enumerate_triplets(cfg: ModulationConfig, noise: NoiseModel, p_current: float, p_residual: float):
    """All M^3 ``(Z, X, Y, P_b)`` tuples, symbols labelled ``0..M-1``.

    The competing count for an off-diagonal ``Y`` carries the previous symbol's
    molecules whenever ``Z != Y``, which is what makes the three ``Z != Y``
    cases share one closed form.
    """
    if cfg.alphabet_size != 4:
        raise ValueError("triplet enumeration is defined for Q-IMoSK (M = 4)")
    terms = triplet_terms(cfg, noise, p_current, p_residual)
    w = _symbol_weight(cfg)
    m = cfg.alphabet_size
    out = []
    for z in range(m):
        for x in range(m):
            for y in range(m):
                tested = x if x == y else y
                role = "same" if z == tested else "other"
                out.append((z, x, y, w * float(terms[(x == y, role)])))
    return out
