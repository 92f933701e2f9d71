"""Symbol-interval design and achievable rates for drift-assisted molecular channels."""

from .channel import (
    ChannelParams,
    IGParams,
    MediumSpec,
    diffusion_coefficient,
    hitting_cdf,
    hitting_pdf,
    hitting_quantile,
    ig_params,
)
from .interval import (
    IntervalResult,
    IsiCriteria,
    SearchGrid,
    isi_conditions_hold,
    optimize_interval_no_isi,
    optimize_interval_one_isi,
)
from .modulation import JointPXY, Mode, ModulationConfig, NoiseModel, enumerate_triplets, pa_no_isi, pa_one_isi
from .rate import RateResult, achievable_rate, choose_mode, mutual_information, snr_to_noise
from .scenario import PRESETS, Scenario, Settings, select_transmit_mode, snr_sweep

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "IGParams", "MediumSpec", "diffusion_coefficient", "hitting_cdf", "hitting_pdf",
    "hitting_quantile", "ig_params", "IntervalResult", "IsiCriteria", "SearchGrid", "isi_conditions_hold",
    "optimize_interval_no_isi", "optimize_interval_one_isi", "JointPXY", "Mode", "ModulationConfig",
    "NoiseModel", "enumerate_triplets", "pa_no_isi", "pa_one_isi", "RateResult", "achievable_rate",
    "choose_mode", "mutual_information", "snr_to_noise", "PRESETS", "Scenario", "Settings",
    "select_transmit_mode", "snr_sweep",
]
