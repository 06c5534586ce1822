"""Flat dotted-key experiment configuration.

Files are TOML; nested tables and dotted keys are both accepted and
flattened to ``"section.key"``. Command-line overrides use the same
keys (``--override train.p=0.25``).
"""
from __future__ import annotations

import copy
import json

import tomli

from ..errors import ConfigError
from ..physics import BurgersConfig, ShallowWaterConfig
from ..trainers import TrainerConfig
from .spfd import atomic_write_bytes

# desk-scale protocol
DEFAULTS = {
    "system": "shallow_water",
    "seed": 42,
    "out": "runs/desk",
    "grid.n": 32,
    "grid.side": 1.0,
    "grid.cfl": 0.15,
    "physics.g": 9.81,
    "physics.depth": 1.0,
    "physics.smoothing": 0.05,
    "physics.viscosity": 0.01,
    "physics.length": 1.0,
    "ic.height": [0.2, 1.0],
    "ic.radius": [2.0, 8.0],
    "ic.speed": [1.5, 5.0],
    "data.n_train": 30,
    "data.n_val": 10,
    "data.n_test": 10,
    "data.n_saved": 120,
    "data.save_stride": 5,
    "data.warmup": 20,
    "data.extra_steps": 60,
    "data.fraction": 1.0,
    "reducer.kind": "pod",
    "reducer.m": 64,
    "reducer.epochs": 200,
    "reducer.lr": 1e-3,
    "model.kind": "seq2seq_lstm",
    "model.hidden": 128,
    "model.k_in": 3,
    "model.k_out": 3,
    "train.framework": "one_step",
    "train.delta": 1,
    "train.lambdas": [],
    "train.delta_max": 0,
    "train.p": 0.5,
    "train.alpha": 1.0,
    "train.n_init": 60,
    "train.n_epoch": 60,
    "train.n_ui": 10,
    "train.lambda_pc": 0.0,
    "train.epochs": 120,
    "train.lr": 1e-3,
    "train.beta1": 0.9,
    "train.beta2": 0.999,
    "train.eps": 1e-8,
    "train.batch_size": 32,
    "train.shuffle": True,
    "train.delta_schedule": [],
    "train.seed": -1,
    "run.name": "",
    "eval.start": 41,
    "eval.horizon": 60,
    "eval.threshold": 0.8,
    "eval.extrap_horizon": 60,
    "eval.model": "",
    "eval.error_space": "latent",
    "noise.L": 4.0,
    "noise.amplitudes": [0.0, 0.01, 0.03, 0.1],
    "noise.seed": 7,
    "sweep.p": [0.25, 0.5, 0.75],
    "sweep.alpha": [0.25, 0.5, 0.75, 1.0],
    "sweep.delta": 2,
    "report.runs": [],
}

SYSTEMS = ("shallow_water", "burgers")
FRACTIONS = (1.0, 0.5, 0.3, 0.1, 0.05)


def flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key, value):
    ref = DEFAULTS[key]
    if isinstance(ref, bool):
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key} must be true or false")
    if isinstance(ref, int):
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if isinstance(ref, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        return float(value)
    if isinstance(ref, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list, got {value!r}")
        return list(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}")
    return value


def parse_value(text):
    """TOML scalar/array literal, or a bare string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(toml_value(x) for x in v) + "]"
    return json.dumps(str(v))


class ExperimentConfig:
    def __init__(self, values=None):
        merged = dict(copy.deepcopy(DEFAULTS))
        for k, v in (values or {}).items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {k!r}")
            merged[k] = _coerce(k, v)
        self.values = merged
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **updates):
        vals = dict(self.values)
        vals.update({k.replace("__", "."): v for k, v in updates.items()})
        return ExperimentConfig(vals)

    def with_overrides(self, items):
        vals = dict(self.values)
        for item in items or ():
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not KEY=VALUE")
            k, v = item.split("=", 1)
            k = k.strip()
            if k not in DEFAULTS:
                raise ConfigError(f"unknown config key {k!r}")
            vals[k] = parse_value(v.strip())
        return ExperimentConfig(vals)

    @classmethod
    def load(cls, path, overrides=()):
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls(flatten(raw)).with_overrides(overrides)

    def to_toml(self):
        return "".join(f"{k} = {toml_value(self.values[k])}\n" for k in sorted(self.values))

    def save(self, path):
        atomic_write_bytes(path, self.to_toml().encode("utf-8"))

    def validate(self):
        v = self.values
        if v["system"] not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}")
        if v["grid.n"] < 8:
            raise ConfigError("grid.n must be >= 8")
        for key in ("ic.height", "ic.radius", "ic.speed"):
            r = v[key]
            if len(r) != 2 or r[0] > r[1]:
                raise ConfigError(f"{key} must be [lo, hi] with lo <= hi")
        if v["system"] == "shallow_water" and v["ic.radius"][1] >= v["grid.n"] / 2:
            raise ConfigError("ic.radius upper bound must be below half the grid size")
        for key in ("data.n_train", "data.n_test", "data.n_saved", "data.save_stride"):
            if v[key] < 1:
                raise ConfigError(f"{key} must be >= 1")
        if v["data.n_val"] < 0 or v["data.warmup"] < 0 or v["data.extra_steps"] < 0:
            raise ConfigError("data.n_val, data.warmup and data.extra_steps must be >= 0")
        if not any(abs(v["data.fraction"] - f) < 1e-12 for f in FRACTIONS):
            raise ConfigError(f"data.fraction must be one of {FRACTIONS}")
        if v["reducer.kind"] not in ("pod", "dense_ae"):
            raise ConfigError("reducer.kind must be pod or dense_ae")
        if v["reducer.m"] < 1:
            raise ConfigError("reducer.m must be >= 1")
        if v["model.kind"] not in ("seq2seq_lstm", "one_step_mlp"):
            raise ConfigError("model.kind must be seq2seq_lstm or one_step_mlp")
        k_in = 1 if v["model.kind"] == "one_step_mlp" else v["model.k_in"]
        if k_in < 1 or v["model.k_out"] < 1:
            raise ConfigError("model.k_in and model.k_out must be >= 1")
        if v["eval.start"] < 1 or v["eval.start"] + k_in - 1 > v["data.n_saved"]:
            raise ConfigError("eval.start must place the input window inside the saved steps")
        if v["eval.horizon"] < 1 or v["eval.extrap_horizon"] < 1:
            raise ConfigError("horizons must be >= 1")
        if v["eval.start"] - 1 + k_in + v["eval.horizon"] > v["data.n_saved"] + v["data.extra_steps"]:
            raise ConfigError("eval.horizon runs past the end of the test trajectories")
        if v["eval.error_space"] not in ("latent", "physical"):
            raise ConfigError("eval.error_space must be latent or physical")
        if v["noise.L"] <= 0 or any(a < 0 for a in v["noise.amplitudes"]):
            raise ConfigError("noise.L must be positive and amplitudes non-negative")
        self.trainer_config()

    def k_in(self):
        return 1 if self["model.kind"] == "one_step_mlp" else self["model.k_in"]

    def k_out(self):
        return 1 if self["model.kind"] == "one_step_mlp" else self["model.k_out"]

    def physics_config(self):
        v = self.values
        if v["system"] == "shallow_water":
            return ShallowWaterConfig(g=v["physics.g"], depth=v["physics.depth"],
                                      smoothing=v["physics.smoothing"])
        return BurgersConfig(viscosity=v["physics.viscosity"], length=v["physics.length"])

    def ic_ranges(self):
        if self["system"] == "shallow_water":
            return {"height": tuple(self["ic.height"]), "radius": tuple(self["ic.radius"])}
        return {"speed": tuple(self["ic.speed"])}

    def model_spec(self):
        v = self.values
        if v["model.kind"] == "seq2seq_lstm":
            return {"kind": "seq2seq_lstm", "hidden": v["model.hidden"], "k_in": v["model.k_in"],
                    "k_out": v["model.k_out"], "m": v["reducer.m"]}
        return {"kind": "one_step_mlp", "hidden": [v["model.hidden"]] if v["model.hidden"] else [],
                "activation": "tanh", "m": v["reducer.m"]}

    def train_seed(self):
        return self["seed"] if self["train.seed"] < 0 else self["train.seed"]

    def trainer_config(self):
        v = self.values
        fw = v["train.framework"]
        lambdas = v["train.lambdas"] or None
        delta_max = v["train.delta_max"] or None
        if fw.lower() == "pf" and delta_max is None:
            delta_max = v["train.delta"]
        return TrainerConfig(
            framework=fw, delta=v["train.delta"], lambdas=lambdas, delta_max=delta_max,
            p=v["train.p"], alpha=v["train.alpha"], n_init=v["train.n_init"],
            n_epoch=v["train.n_epoch"], n_ui=v["train.n_ui"], lambda_pc=v["train.lambda_pc"],
            epochs=v["train.epochs"], lr=v["train.lr"], beta1=v["train.beta1"],
            beta2=v["train.beta2"], eps=v["train.eps"], batch_size=v["train.batch_size"],
            shuffle=v["train.shuffle"], seed=self.train_seed(),
            delta_schedule=tuple(v["train.delta_schedule"]))

    def run_name(self):
        if self["run.name"]:
            return self["run.name"]
        tc = self.trainer_config()
        name = tc.framework
        if tc.framework in ("atf", "spf"):
            name += f"_d{tc.delta}"
        elif tc.framework == "pf":
            name += f"_d{tc.delta_max}"
        if tc.framework == "spf" and tc.lambda_pc > 0:
            name += "_pc"
        if self["data.fraction"] < 1.0:
            name += f"_f{self['data.fraction']:g}"
        return name
