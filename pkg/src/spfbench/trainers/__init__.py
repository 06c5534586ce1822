from .config import FRAMEWORKS, TrainerConfig
from .data import WindowData
from .energy import EnergyPenalty, energy_penalty_loss
from .frameworks import (PhaseOne, TrainResult, sample_rollout_length, spf_phase_one, train, train_atf,
                         train_one_step, train_pf, train_spf)
from .losses import atf_loss, frozen_prefix, one_step_loss, pf_loss, spf_weighted_loss, squared_loss
from .memory import MemoryMeter, MemoryReport, MemoryRow, retained_memory_report, retained_nbytes
from .supplementary import (CombinedDataset, SupplementaryDataset, acquire, acquire_batch,
                            build_supplementary)

__all__ = [
    "FRAMEWORKS", "TrainerConfig", "WindowData", "EnergyPenalty", "energy_penalty_loss",
    "TrainResult", "sample_rollout_length", "train", "train_atf", "train_one_step", "train_pf",
    "train_spf", "atf_loss", "frozen_prefix", "one_step_loss", "pf_loss", "spf_weighted_loss",
    "squared_loss", "MemoryMeter", "MemoryReport", "MemoryRow", "retained_memory_report",
    "retained_nbytes", "CombinedDataset", "SupplementaryDataset", "acquire", "acquire_batch",
    "build_supplementary", "PhaseOne", "spf_phase_one",
]
