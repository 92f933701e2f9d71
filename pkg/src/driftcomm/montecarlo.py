"""Particle-level Monte Carlo used to check the analytic model.

Two simulators live here:

* a 1-D random walk with drift and an absorbing receiver, for the
  hitting-time law;
* a symbol-stream simulator that draws exact binomial molecule counts and
  applies the detector, for P_a, error probability and mutual information.

Random numbers are drawn per fixed-size block of trials, each block with its
own stream spawned from ``(seed, block index)``.  Results therefore do not
depend on how blocks are spread over worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .channel import ChannelParams, hitting_cdf, hitting_quantile, ig_params
from .interval import interval_probabilities
from .modulation import JointPXY, ModulationConfig, Mode, NoiseModel
from .rate import error_probability, mutual_information

BLOCK = 8192
CROSSINGS = ("bridge", "interpolate")


@dataclass(frozen=True)
class SimConfig:
    """Walk settings.  ``dt=None`` picks ``mu / 1000``; ``t_max=None`` picks the
    ``1 - 1e-7`` quantile of the analytic hitting time.  ``crossing="bridge"``
    also absorbs walkers whose path crossed the receiver between two grid
    points (Brownian-bridge test); ``"interpolate"`` only checks grid points."""

    dt: Optional[float] = None
    t_max: Optional[float] = None
    trials: int = 100_000
    seed: int = 42
    crossing: str = "bridge"

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_max is not None and not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.crossing not in CROSSINGS:
            raise ValueError(f"crossing must be one of {CROSSINGS}")

    def resolve(self, ch: ChannelParams, allow_coarse: bool = False) -> "SimConfig":
        """Fill in defaults for ``ch``.

        Without drift the mean hitting time is infinite; the shape parameter
        stands in as the time scale and the horizon defaults to ten of them.
        """
        ig = ig_params(ch)
        scale = ig.mu if ch.has_drift else ig.lam
        dt = self.dt
        if dt is None:
            dt = scale / 1000.0
        elif ch.has_drift and dt > scale / 100.0 and not allow_coarse:
            raise ValueError(f"dt={dt} exceeds mu/100={scale / 100.0}; pass allow_coarse to override")
        t_max = self.t_max
        if t_max is None:
            t_max = hitting_quantile(1.0 - 1e-7, ch) if ch.has_drift else 10.0 * scale
        return SimConfig(dt=dt, t_max=t_max, trials=self.trials, seed=self.seed, crossing=self.crossing)


@dataclass(frozen=True)
class FirstPassageSample:
    time: float
    censored: bool


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _walk(ch: ChannelParams, dt: float, t_max: float, size: int, rng: np.random.Generator,
          crossing: str, monitors=(1,)) -> list[np.ndarray]:
    """First-passage times of ``size`` walkers, inf when censored.

    The walk advances in steps of ``dt``.  Each entry of ``monitors`` is a
    stride: stride ``k`` watches the path only every ``k`` steps, as a walk
    with step ``k * dt`` sharing the same increments would.
    """
    d, v, D = ch.distance, ch.velocity, ch.diffusion
    sd = math.sqrt(2.0 * D * dt)
    n_steps = int(math.ceil(t_max / dt))
    x = np.zeros(size)
    idx = np.arange(size)
    out = [np.full(size, np.inf) for _ in monitors]
    last_x = [np.zeros(size) for _ in monitors]
    done = [np.zeros(size, dtype=bool) for _ in monitors]
    for step in range(1, n_steps + 1):
        x_new = x + v * dt + sd * rng.standard_normal(idx.size)
        for m, stride in enumerate(monitors):
            if step % stride:
                continue
            live = ~done[m][idx]
            if not live.any():
                continue
            x0 = last_x[m][idx]
            h = stride * dt
            t0 = (step - stride) * dt
            hit = live & (x_new >= d)
            frac = np.zeros(idx.size)
            frac[hit] = (d - x0[hit]) / (x_new[hit] - x0[hit])
            if crossing == "bridge":
                below = live & ~hit
                a = d - x0[below]
                b = d - x_new[below]
                p_cross = np.exp(-a * b / (D * h))
                crossed = rng.random(a.size) < p_cross
                sub = np.flatnonzero(below)[crossed]
                hit[sub] = True
                frac[sub] = 0.5
            ids = idx[hit]
            t_hit = t0 + frac[hit] * h
            out[m][ids] = np.where(t_hit <= t_max, t_hit, np.inf)
            done[m][ids] = True
            last_x[m][idx] = x_new
        x = x_new
        alive = np.zeros(idx.size, dtype=bool)
        for m in range(len(monitors)):
            alive |= ~done[m][idx]
        if not alive.all():
            idx = idx[alive]
            x = x[alive]
        if idx.size == 0:
            break
    return out


def _block_job(args):
    ch, sim, block, size, monitors = args
    rng = block_rng(sim.seed, block)
    return _walk(ch, sim.dt, sim.t_max, size, rng, sim.crossing, monitors)


def _run_blocks(ch: ChannelParams, sim: SimConfig, monitors, workers: int) -> list[np.ndarray]:
    sizes = [min(BLOCK, sim.trials - start) for start in range(0, sim.trials, BLOCK)]
    jobs = [(ch, sim, b, s, monitors) for b, s in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_job, jobs))
    else:
        parts = [_block_job(j) for j in jobs]
    return [np.concatenate([p[m] for p in parts]) for m in range(len(monitors))]


def first_passage_times(ch: ChannelParams, sim: SimConfig = SimConfig(), workers: int = 1,
                        allow_coarse: bool = False) -> np.ndarray:
    """Hitting times of ``sim.trials`` independent walkers; censored walkers are ``inf``."""
    sim = sim.resolve(ch, allow_coarse)
    return _run_blocks(ch, sim, (1,), workers)[0]


def sample_first_passage(ch: ChannelParams, sim: SimConfig, rng: np.random.Generator,
                         allow_coarse: bool = False) -> FirstPassageSample:
    sim = sim.resolve(ch, allow_coarse)
    t = _walk(ch, sim.dt, sim.t_max, 1, rng, sim.crossing)[0][0]
    return FirstPassageSample(float(t), bool(np.isinf(t)))


def paired_dt_halving(ch: ChannelParams, sim: SimConfig, workers: int = 1,
                      allow_coarse: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Hitting times at step ``dt`` and ``dt / 2`` along the same Brownian paths.

    Sharing paths removes most of the sampling noise from the difference,
    leaving the discretization effect.
    """
    sim = sim.resolve(ch, allow_coarse)
    fine = SimConfig(dt=sim.dt / 2.0, t_max=sim.t_max, trials=sim.trials, seed=sim.seed,
                     crossing=sim.crossing)
    fine_t, coarse_t = _run_blocks(ch, fine, (1, 2), workers)
    return coarse_t, fine_t


def ks_statistic(samples, analytic_cdf: Callable) -> float:
    """Sup distance between the empirical cdf of ``samples`` and ``analytic_cdf``.

    Censored samples (inf or nan) stay in the denominator and never enter the
    empirical cdf, so the comparison covers the observed range only.
    """
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise ValueError("no samples")
    obs = np.sort(s[np.isfinite(s)])
    if obs.size < 2:
        raise ValueError("need at least two uncensored samples")
    n = s.size
    f = np.asarray(analytic_cdf(obs), dtype=float)
    k = np.arange(1, obs.size + 1)
    upper = np.max(k / n - f)
    lower = np.max(f - (k - 1) / n)
    return float(min(max(upper, lower, 0.0), 1.0))


# --------------------------------------------------------------------------- symbol stream

DETECTORS = ("two_factor", "all_types")


@dataclass(frozen=True)
class StreamResult:
    joint: JointPXY
    counts: np.ndarray
    n_symbols: int
    error_prob: float
    mi_bits: float


def _tally(x, z, counts_by_type, np_counts, tau, m, detector):
    n_sym = x.size
    rows = np.arange(n_sym)
    tallies = np.zeros((m, m), dtype=np.int64)
    own = counts_by_type >= tau
    for y in range(m):
        count_y_ok = own[:, y]
        if detector == "all_types":
            others = np.delete(counts_by_type, y, axis=1)
            event = count_y_ok & np.all(others < tau, axis=1)
        else:
            diag = x == y
            # diagonal: competitor is the previous symbol's type, or a fixed
            # noise-only type when the previous symbol repeats
            comp_diag = np.where(z != x, z, (x + 1) % m)
            comp_count_diag = counts_by_type[rows, comp_diag]
            # off-diagonal: competitor is the sent type, carrying the previous
            # symbol's molecules unless those landed on y
            comp_count_off = counts_by_type[rows, x] + np.where((z != y) & (z != x), np_counts, 0.0)
            comp = np.where(diag, comp_count_diag, comp_count_off)
            event = count_y_ok & (comp < tau)
        np.add.at(tallies[:, y], x[event], 1)
    return tallies


def simulate_stream_probabilities(p_current: float, p_residual: float, cfg: ModulationConfig,
                                  noise: NoiseModel, mode: Mode, n_symbols: int, seed: int = 42,
                                  tau: Optional[float] = None, detector: str = "two_factor",
                                  policy: str = "renormalize") -> StreamResult:
    """Empirical joint from i.i.d. uniform symbols with exact binomial counts.

    In no-ISI mode the leftover probability is forced to zero; the random
    number draws are the same in both modes.
    """
    if detector not in DETECTORS:
        raise ValueError(f"detector must be one of {DETECTORS}")
    if n_symbols < 1:
        raise ValueError("n_symbols must be at least 1")
    if Mode(mode) is Mode.NO_ISI:
        p_residual = 0.0
    tau = cfg.tau if tau is None else float(tau)
    m, n = cfg.alphabet_size, cfg.n
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0xC0FFEE,))))
    symbols = rng.integers(0, m, size=n_symbols + 1)
    z, x = symbols[:-1], symbols[1:]
    n_cur = rng.binomial(n, p_current, size=n_symbols).astype(float)
    n_prev = rng.binomial(n, p_residual, size=n_symbols).astype(float)
    sd = math.sqrt(noise.variance)
    counts = noise.mean + sd * rng.standard_normal((n_symbols, m))
    rows = np.arange(n_symbols)
    counts[rows, x] += n_cur
    counts[rows, z] += n_prev
    tallies = _tally(x, z, counts, n_prev, tau, m, detector)
    joint = JointPXY(tallies / n_symbols)
    return StreamResult(
        joint=joint,
        counts=tallies,
        n_symbols=n_symbols,
        error_prob=error_probability(joint, policy) if joint.total_mass > 0 else 1.0 - 1.0 / m,
        mi_bits=mutual_information(joint, policy),
    )


def simulate_symbol_stream(ch: ChannelParams, cfg: ModulationConfig, noise: NoiseModel, Ts: float,
                           mode: Mode, n_symbols: int, seed: int = 42, **kwargs) -> StreamResult:
    if not Ts > 0 or math.isinf(Ts) or math.isnan(Ts):
        raise ValueError("Ts must be positive and finite")
    p_cur, p_res = interval_probabilities(Ts, ch)
    return simulate_stream_probabilities(p_cur, p_res, cfg, noise, mode, n_symbols, seed, **kwargs)


def censored_fraction_expected(ch: ChannelParams, t_max: float) -> float:
    return 1.0 - float(hitting_cdf(t_max, ch))


def restricted_mean(times, t_max: float) -> float:
    """Sample mean of ``min(T, t_max)``; censored walkers count as ``t_max``."""
    return float(np.mean(np.minimum(np.asarray(times, dtype=float), t_max)))


def analytic_restricted_mean(ch: ChannelParams, t_max: float) -> float:
    """E[min(T, t_max)] = integral of the survival function up to ``t_max``."""
    from scipy import integrate

    pts = None
    if ch.has_drift:
        ig = ig_params(ch)
        sd = math.sqrt(ig.mu**3 / ig.lam)
        pts = [p for p in (ig.mu - 5 * sd, ig.mu, ig.mu + 5 * sd) if 0 < p < t_max]
    val, _ = integrate.quad(lambda t: 1.0 - hitting_cdf(t, ch), 0.0, t_max, points=pts,
                            limit=500, epsabs=1e-13, epsrel=1e-11)
    return float(val)
