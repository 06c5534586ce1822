from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from ..nn import AdamState

FRAMEWORKS = ("one_step", "atf", "pf", "spf")
_ALIASES = {"onestep": "one_step", "one-step": "one_step", "basic": "one_step"}


@dataclass
class TrainerConfig:
    """Settings shared by all four trainers.

    ``lambdas`` holds the ATF weights for steps 2..delta (step 1 is fixed
    at 1). ``epochs`` is the budget for one-step, ATF and PF; SPF runs
    ``n_init`` one-step epochs followed by ``n_epoch`` mixed epochs.
    """

    framework: str = "one_step"
    delta: int = 1
    lambdas: tuple = None
    delta_max: int = None
    p: float = 0.5
    alpha: float = 1.0
    n_init: int = 50
    n_epoch: int = 200
    n_ui: int = 10
    lambda_pc: float = 0.0
    epochs: int = 100
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 1
    shuffle: bool = False
    seed: int = 0
    delta_schedule: tuple = field(default=())

    def __post_init__(self):
        fw = str(self.framework).lower()
        self.framework = _ALIASES.get(fw, fw)
        if self.framework not in FRAMEWORKS:
            raise ConfigError(f"unknown framework {self.framework!r}")
        if self.delta < 1:
            raise ConfigError("delta must be >= 1")
        if self.lambdas is None:
            self.lambdas = (1.0,) * (self.delta - 1)
        self.lambdas = tuple(float(x) for x in self.lambdas)
        if self.framework == "atf" and len(self.lambdas) != self.delta - 1:
            raise ConfigError(f"ATF needs {self.delta - 1} lambda weights, got {len(self.lambdas)}")
        if self.framework == "pf":
            if self.delta_max is None:
                raise ConfigError("PF requires delta_max")
            if self.delta_max < 1:
                raise ConfigError("delta_max must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.n_init < 1 or self.n_epoch < 1 or self.n_ui < 1:
            raise ConfigError("n_init, n_epoch and n_ui must be >= 1")
        if self.lambda_pc < 0:
            raise ConfigError("lambda_pc must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        self.delta_schedule = tuple(int(d) for d in self.delta_schedule)
        if any(d < 1 for d in self.delta_schedule):
            raise ConfigError("delta_schedule entries must be >= 1")

    @property
    def weights(self):
        """Full ATF weight vector, ``lambda_1 = 1`` first."""
        return (1.0, *self.lambdas)

    def adam(self):
        return AdamState(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    def streams(self):
        """Independent generators for shuffling, PF depth draws and acquisition."""
        ss = np.random.SeedSequence(int(self.seed)).spawn(3)
        return tuple(np.random.default_rng(s) for s in ss)

    def to_dict(self):
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        d["delta_schedule"] = list(self.delta_schedule)
        return d
