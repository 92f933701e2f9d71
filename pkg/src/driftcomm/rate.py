"""Mutual information, achievable rate and transmit-mode selection.

The two-factor joint P_a under-fills its probability mass.  Two completions
are supported:

``renormalize``
    divide the joint by its total mass before computing marginals.
``erasure``
    give each transmitted symbol an explicit "no decision" outcome holding the
    missing ``1/M - row_sum`` mass.  Erasures count as errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .modulation import (
    JointPXY,
    ModulationConfig,
    Mode,
    NoiseModel,
    joint_for_mode,
    pa_no_isi,
    pa_one_isi,
)

POLICIES = ("renormalize", "erasure")


@dataclass(frozen=True)
class RateResult:
    mode: Mode
    tau_star: float
    mi_bits: float
    error_prob: float
    total_mass: float
    policy: str
    Ts: float = math.nan
    snr_db: float = math.nan

    @property
    def rate_normalized(self) -> float:
        """Bits per second; zero when the interval is infinite."""
        if math.isinf(self.Ts):
            return 0.0
        return self.mi_bits / self.Ts


@dataclass(frozen=True)
class SnrSpec:
    snr_db: float
    noise_mean: float


def _check_policy(policy: str) -> None:
    if policy not in POLICIES:
        raise ValueError(f"unknown normalization policy {policy!r}; expected one of {POLICIES}")


def completed_joint(joint: JointPXY, policy: str = "renormalize") -> np.ndarray:
    """Proper joint distribution built from a two-factor P_a matrix.

    ``renormalize`` returns an M x M matrix, ``erasure`` an M x (M + 1) matrix
    whose last column is the no-decision outcome.
    """
    _check_policy(policy)
    p = np.asarray(joint.entries, dtype=float)
    if np.any(p < 0):
        raise ValueError("joint entries must be non-negative")
    total = p.sum()
    if policy == "renormalize":
        if total <= 0:
            # nothing is ever detected: every input maps to the same (empty) output
            m = p.shape[0]
            return np.full((m, m), 1.0 / m**2)
        return p / total
    m = p.shape[0]
    rows = p.sum(axis=1)
    # rows can overshoot 1/M slightly when two-factor events overlap
    scale = _cap_scale(rows, m)
    p = p * scale[:, None]
    deficit = np.clip(1.0 / m - p.sum(axis=1), 0.0, None)
    return np.column_stack([p, deficit])


def _cap_scale(rows, m: int):
    """Factor that pulls rows above 1/M back down to 1/M."""
    rows = np.asarray(rows, dtype=float)
    over = rows > 1.0 / m
    return np.divide(1.0 / m, rows, out=np.ones_like(rows), where=over)


def _mi_bits(p: np.ndarray) -> float:
    px = np.broadcast_to(p.sum(axis=1, keepdims=True), p.shape)
    py = np.broadcast_to(p.sum(axis=0, keepdims=True), p.shape)
    mask = p > 0
    # log differences: the product px * py underflows for tiny entries
    terms = p[mask] * (np.log2(p[mask]) - np.log2(px[mask]) - np.log2(py[mask]))
    return float(max(np.sum(terms), 0.0))


def mutual_information(joint: JointPXY, policy: str = "renormalize") -> float:
    """I(X;Y) in bits of the completed joint, with 0 log 0 taken as 0."""
    return _mi_bits(completed_joint(joint, policy))


def error_probability(joint: JointPXY, policy: str = "renormalize") -> float:
    p = completed_joint(joint, policy)
    m = p.shape[0]
    return float(np.clip(1.0 - np.trace(p[:, :m]), 0.0, 1.0))


def snr_to_noise(snr_db: float, n: int, p_current: float, variance_model: str = "power") -> NoiseModel:
    """Noise model whose mean count sits ``snr_db`` below the signal count ``n * p_current``.

    SNR is the squared ratio of expected counts.  ``variance_model`` sets the
    noise spread: ``"power"`` gives a standard deviation equal to the mean (the
    noise power that the SNR refers to), ``"poisson"`` a variance equal to the
    mean.
    """
    if not 0.0 < p_current <= 1.0:
        raise ValueError("p_current must lie in (0, 1]")
    if n < 1:
        raise ValueError("n must be at least 1")
    if math.isinf(snr_db) and snr_db > 0:
        return NoiseModel(0.0, 0.0)
    mean = n * p_current / 10.0 ** (snr_db / 20.0)
    if variance_model == "power":
        return NoiseModel(mean, mean**2)
    if variance_model == "poisson":
        return NoiseModel(mean, mean)
    raise ValueError(f"unknown variance model {variance_model!r}")


def noise_to_snr(noise_mean: float, n: int, p_current: float) -> float:
    if noise_mean == 0:
        return math.inf
    return 20.0 * math.log10(n * p_current / noise_mean)


def default_tau_grid(n: int, noise: NoiseModel, points: int = 512) -> np.ndarray:
    lo = max(1.0, noise.mean / 10.0)
    hi = noise.mean + n + 4.0 * math.sqrt(n / 4.0) + 4.0 * math.sqrt(noise.variance)
    return np.geomspace(lo, hi, points)


def symmetric_mi(diag, off, m: int = 4, policy: str = "renormalize"):
    """I(X;Y) for joints with one value on the diagonal and one off it.

    Vectorized over ``diag``/``off``; agrees with :func:`mutual_information`
    applied to the corresponding matrices.
    """
    _check_policy(policy)
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    row = diag + (m - 1) * off
    with np.errstate(divide="ignore", invalid="ignore"):
        if policy == "renormalize":
            total = m * row
            pd = np.where(total > 0, diag / total, 0.0)
            po = np.where(total > 0, off / total, 0.0)
            out = m * _xlog2(pd, pd * m * m) + m * (m - 1) * _xlog2(po, po * m * m)
        else:
            scale = _cap_scale(row, m)
            d, o = diag * scale, off * scale
            r = row * scale
            out = m * (_xlog2(d, m * d / np.where(r > 0, r, 1.0)) + (m - 1) * _xlog2(o, m * o / np.where(r > 0, r, 1.0)))
    out = np.clip(out, 0.0, math.log2(m))
    return out if out.ndim else float(out)


def _xlog2(p, ratio):
    safe = np.where(p > 0, ratio, 1.0)
    return np.where(p > 0, p * np.log2(safe), 0.0)


def _scan(mode, cfg, noise, p_current, p_residual, policy, taus):
    joint_diag, joint_off = _pa_pair(mode, cfg, noise, p_current, p_residual, taus)
    return np.atleast_1d(symmetric_mi(joint_diag, joint_off, cfg.alphabet_size, policy))


def _pa_pair(mode, cfg, noise, p_current, p_residual, taus):
    if Mode(mode) is Mode.ONE_ISI:
        return (pa_one_isi(True, cfg, noise, p_current, p_residual, taus),
                pa_one_isi(False, cfg, noise, p_current, p_residual, taus))
    return pa_no_isi(True, cfg, noise, p_current, taus), pa_no_isi(False, cfg, noise, p_current, taus)


def achievable_rate(cfg: ModulationConfig, noise: NoiseModel, p_current: float, p_residual: float,
                    mode: Mode, tau_grid: Sequence[float] | None = None, *,
                    policy: str = "renormalize", Ts: float = math.nan, snr_db: float = math.nan,
                    refine: bool = True) -> RateResult:
    """Maximize I(X;Y) over the detection threshold.

    Ties go to the smallest threshold.  With ``refine`` the grid is re-scanned
    once, 64 points between the neighbours of the incumbent.
    """
    _check_policy(policy)
    mode = Mode(mode)
    if mode is Mode.NO_ISI:
        p_residual = 0.0
    taus = default_tau_grid(cfg.n, noise) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    if taus.size == 0:
        raise ValueError("tau grid is empty")
    taus = np.sort(taus)
    mis = _scan(mode, cfg, noise, p_current, p_residual, policy, taus)
    best = int(np.argmax(mis))
    tau_star, mi_star = float(taus[best]), float(mis[best])
    if refine and taus.size > 1:
        lo = taus[max(best - 1, 0)]
        hi = taus[min(best + 1, taus.size - 1)]
        fine = np.linspace(lo, hi, 64)
        fine_mis = _scan(mode, cfg, noise, p_current, p_residual, policy, fine)
        j = int(np.argmax(fine_mis))
        if fine_mis[j] > mi_star:
            tau_star, mi_star = float(fine[j]), float(fine_mis[j])
    joint = joint_for_mode(mode, cfg, noise, p_current, p_residual, tau=tau_star)
    return RateResult(
        mode=mode,
        tau_star=tau_star,
        mi_bits=mi_star,
        error_prob=error_probability(joint, policy),
        total_mass=joint.total_mass,
        policy=policy,
        Ts=Ts,
        snr_db=snr_db,
    )


@dataclass
class ModeSelection:
    selected: Mode
    results: dict = field(default_factory=dict)

    @property
    def envelope_rate(self) -> float:
        return self.results[self.selected].rate_normalized


def choose_mode(one_isi: RateResult, no_isi: RateResult) -> Mode:
    """Argmax of the normalized rate; ties favour the shorter one-ISI interval."""
    if no_isi.rate_normalized > one_isi.rate_normalized:
        return Mode.NO_ISI
    return Mode.ONE_ISI
