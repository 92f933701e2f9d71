"""Scenario presets, run settings and the end-to-end evaluation used by the CLI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional

from .channel import ChannelParams, MediumSpec, diffusion_coefficient, hitting_cdf
from .interval import (
    IntervalResult,
    IsiCriteria,
    SearchGrid,
    optimize_interval_no_isi,
    optimize_interval_one_isi,
)
from .modulation import ModulationConfig, Mode, NoiseModel
from .rate import (
    POLICIES,
    ModeSelection,
    RateResult,
    achievable_rate,
    choose_mode,
    default_tau_grid,
    snr_to_noise,
)

HEXOSE_IN_BLOOD = MediumSpec(temperature=310.0, viscosity=2.46e-3, radius_nm=0.38)
HEXOSE_D = 242.78  # um^2/s, tabulated value for hexoses in blood at 310 K


@dataclass(frozen=True)
class Scenario:
    name: str
    channel: ChannelParams
    medium: Optional[MediumSpec] = None

    @classmethod
    def build(cls, name: str, distance: float, velocity: float,
              diffusion: Optional[float] = None, medium: Optional[MediumSpec] = None) -> "Scenario":
        if (diffusion is None) == (medium is None):
            raise ValueError("give exactly one of an explicit diffusion coefficient or a medium")
        D = diffusion if diffusion is not None else diffusion_coefficient(medium)
        return cls(name, ChannelParams(distance, velocity, D), medium)


PRESETS = {
    "capillaries": Scenario("capillaries", ChannelParams(7.9e2, 7.9e2, HEXOSE_D)),
    "vena_cava": Scenario("vena_cava", ChannelParams(1.2e5, 1.2e5, HEXOSE_D)),
    "no_drift": Scenario("no_drift", ChannelParams(16.0, 0.0, HEXOSE_D)),
    # weak- and strong-drift pairs used to contrast hitting-time densities
    "weak_drift": Scenario("weak_drift", ChannelParams(100.0, 10.0, HEXOSE_D)),
    "strong_drift": Scenario("strong_drift", ChannelParams(1e5, 1e4, HEXOSE_D)),
}

# published intervals (s) per preset: (one-symbol ISI, no ISI); echoed, never asserted
PUBLISHED_INTERVALS = {
    "capillaries": (2.0640, 4.1110),
    "vena_cava": (1.0390, 1.1490),
    "no_drift": (5.9, math.inf),
}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class Settings:
    """Everything besides the channel that a run depends on."""

    n: int = 1000
    alphabet_size: int = 4
    criteria: IsiCriteria = field(default_factory=IsiCriteria)
    delta: float = 1e-6
    grid: SearchGrid = field(default_factory=SearchGrid)
    policy: str = "erasure"
    variance_model: str = "power"
    noise_reference: str = "shared"
    tau_points: int = 512

    def __post_init__(self):
        if self.noise_reference not in ("shared", "mode"):
            raise ValueError("noise_reference must be 'shared' or 'mode'")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.variance_model not in ("power", "poisson"):
            raise ValueError("variance_model must be 'power' or 'poisson'")
        if self.tau_points < 2:
            raise ValueError("tau_points must be at least 2")

    def modulation(self) -> ModulationConfig:
        return ModulationConfig(n=self.n, alphabet_size=self.alphabet_size)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "Settings":
        return replace(self, **changes)


@dataclass(frozen=True)
class Intervals:
    one_isi: IntervalResult
    no_isi: IntervalResult

    def __getitem__(self, mode: Mode) -> IntervalResult:
        return self.one_isi if Mode(mode) is Mode.ONE_ISI else self.no_isi


def intervals(ch: ChannelParams, settings: Settings = Settings()) -> Intervals:
    return Intervals(
        optimize_interval_one_isi(ch, settings.criteria, settings.grid),
        optimize_interval_no_isi(ch, settings.delta, settings.grid),
    )


def reference_hit_probability(ch: ChannelParams, ivs: Intervals) -> float:
    """Hit probability of the signal that an SNR value is quoted against.

    The no-ISI interval's hit probability (``1 - delta`` with drift) is used so
    both modes face the same noise at a given SNR.  Falls back to the one-ISI
    interval when no finite no-ISI interval exists and drift is present.
    """
    if math.isfinite(ivs.no_isi.Ts) or not ch.has_drift:
        return ivs.no_isi.p_hit_current
    if math.isfinite(ivs.one_isi.Ts):
        return ivs.one_isi.p_hit_current
    return float(hitting_cdf(math.inf, ch))


def noise_for(snr_db: float, mode: Mode, ch: ChannelParams, ivs: Intervals,
              settings: Settings) -> NoiseModel:
    if settings.noise_reference == "shared":
        p_sig = reference_hit_probability(ch, ivs)
    else:
        p_sig = ivs[mode].p_hit_current
    return snr_to_noise(snr_db, settings.n, p_sig, settings.variance_model)


def _zero_rate(mode: Mode, settings: Settings, snr_db: float, Ts: float) -> RateResult:
    return RateResult(mode=mode, tau_star=math.nan, mi_bits=0.0, error_prob=1.0 - 1.0 / settings.alphabet_size,
                      total_mass=0.0, policy=settings.policy, Ts=Ts, snr_db=snr_db)


def mode_rate(mode: Mode, ch: ChannelParams, snr_db: float, settings: Settings = Settings(),
              ivs: Optional[Intervals] = None) -> RateResult:
    """Achievable rate of one transmit mode at ``snr_db``.

    An infinite interval carries no throughput; it is reported with zero
    mutual information and chance-level error probability.
    """
    mode = Mode(mode)
    ivs = ivs or intervals(ch, settings)
    iv = ivs[mode]
    if math.isinf(iv.Ts):
        return _zero_rate(mode, settings, snr_db, iv.Ts)
    noise = noise_for(snr_db, mode, ch, ivs, settings)
    grid = default_tau_grid(settings.n, noise, settings.tau_points)
    return achievable_rate(settings.modulation(), noise, iv.p_hit_current, iv.p_residual, mode, grid,
                           policy=settings.policy, Ts=iv.Ts, snr_db=snr_db)


def select_transmit_mode(scenario: Scenario, snr_db: float, settings: Settings = Settings(),
                         ivs: Optional[Intervals] = None) -> ModeSelection:
    ch = scenario.channel
    ivs = ivs or intervals(ch, settings)
    results = {m: mode_rate(m, ch, snr_db, settings, ivs) for m in (Mode.ONE_ISI, Mode.NO_ISI)}
    return ModeSelection(choose_mode(results[Mode.ONE_ISI], results[Mode.NO_ISI]), results)


def with_variable(scenario: Scenario, variable: str, value: float) -> Scenario:
    ch = scenario.channel
    if variable == "velocity":
        return replace(scenario, channel=ChannelParams(ch.distance, value, ch.diffusion))
    if variable == "distance":
        return replace(scenario, channel=ChannelParams(value, ch.velocity, ch.diffusion))
    raise ValueError(f"cannot substitute {variable!r} into a scenario")


def snr_sweep(scenario: Scenario, snrs: Iterable[float], settings: Settings = Settings(),
              modes=(Mode.ONE_ISI, Mode.NO_ISI)) -> list[RateResult]:
    """Rate results ordered by SNR, then by mode."""
    ivs = intervals(scenario.channel, settings)
    return [mode_rate(m, scenario.channel, s, settings, ivs) for s in snrs for m in modes]
