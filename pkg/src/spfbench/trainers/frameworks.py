"""Training loops for one-step, ATF, PF and SPF.

All loops share the sample indexing of :class:`WindowData`, the same
shuffle stream and the same batch-loss helper, so degenerate settings
(ATF with delta 1, PF with delta_max 1, SPF with p 1) replay the
one-step trainer exactly.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DivergenceError
from ..nn import adam_step
from .config import TrainerConfig
from .data import WindowData, batches, epoch_order
from .losses import atf_loss, one_step_loss, pf_loss, spf_weighted_loss
from .memory import MemoryMeter
from .supplementary import CombinedDataset, acquire_batch, build_supplementary


@dataclass
class TrainResult:
    model: object
    loss_history: list
    meter: MemoryMeter
    log: list = field(default_factory=list)
    phases: list = field(default_factory=list)

    @property
    def rebuild_epochs(self):
        return [e["epoch"] for e in self.log if e.get("event") == "rebuild"]


def sample_rollout_length(rng, delta_max):
    """Uniform integer in ``[1, delta_max]``."""
    if delta_max < 1:
        raise ConfigError("delta_max must be >= 1")
    return int(rng.integers(1, delta_max + 1))


def _check(loss, epoch, index, phase=None):
    if not np.isfinite(loss):
        raise DivergenceError("training loss is not finite", epoch=epoch, index=index, phase=phase)


def _prepare(f, data, cfg, opt):
    wd = data if isinstance(data, WindowData) else WindowData.for_model(data, f)
    opt = cfg.adam() if opt is None else opt
    return wd, opt


def _one_step_epochs(f, wd, cfg, opt, meter, shuffle_rng, n_epochs, history, phases,
                     phase_name, penalty=None, phase=None, callback=None):
    pairs = wd.samples(1)
    for epoch in range(n_epochs):
        order = epoch_order(len(pairs), shuffle_rng, cfg.shuffle)
        total = 0.0
        for b in batches(order, cfg.batch_size):
            bp = pairs[b]
            meter.start_iteration(1, len(bp))
            x, y = wd.inputs(bp), wd.targets(bp, 1)
            loss, grads = one_step_loss(f, x, y, meter=meter, penalty=penalty)
            _check(loss, epoch, int(b[0]), phase)
            if callback is not None:
                callback("batch", phase=phase_name, epoch=epoch, pairs=bp, inputs=x, targets=y,
                         from_d1=np.ones(len(bp), bool))
            adam_step(f.params, grads, opt)
            meter.end_iteration()
            total += loss * len(bp)
        meter.end_epoch()
        history.append(total / len(pairs))
        phases.append(phase_name)


def train_one_step(f, data, cfg=None, opt=None, epochs=None, penalty=None, callback=None):
    """Plain teacher-forced training on next-step targets."""
    cfg = TrainerConfig() if cfg is None else cfg
    wd, opt = _prepare(f, data, cfg, opt)
    shuffle_rng, _, _ = cfg.streams()
    meter = MemoryMeter()
    hist, phases = [], []
    n = cfg.epochs if epochs is None else epochs
    _one_step_epochs(f, wd, cfg, opt, meter, shuffle_rng, n, hist, phases, "one_step",
                     penalty=penalty, callback=callback)
    return TrainResult(f, hist, meter, [], phases)


def train_atf(f, data, cfg, opt=None, callback=None):
    """Unrolled training over ``delta`` steps with full backpropagation."""
    wd, opt = _prepare(f, data, cfg, opt)
    shuffle_rng, _, _ = cfg.streams()
    meter = MemoryMeter()
    pairs = wd.samples(cfg.delta)
    hist = []
    for epoch in range(cfg.epochs):
        order = epoch_order(len(pairs), shuffle_rng, cfg.shuffle)
        total = 0.0
        for b in batches(order, cfg.batch_size):
            bp = pairs[b]
            meter.start_iteration(cfg.delta, len(bp))
            targets = [wd.targets(bp, j) for j in range(1, cfg.delta + 1)]
            loss, grads = atf_loss(f, wd.inputs(bp), targets, cfg.lambdas, meter=meter)
            _check(loss, epoch, int(b[0]))
            adam_step(f.params, grads, opt)
            meter.end_iteration()
            total += loss * len(bp)
        meter.end_epoch()
        hist.append(total / len(pairs))
    return TrainResult(f, hist, meter, [], ["atf"] * len(hist))


def train_pf(f, data, cfg, opt=None, callback=None):
    """Pushforward: frozen prefix of random depth, gradient through the last step only.

    The frozen copy is refreshed from the live parameters at the start
    of every iteration.
    """
    if cfg.delta_max is None:
        raise ConfigError("PF requires delta_max")
    wd, opt = _prepare(f, data, cfg, opt)
    shuffle_rng, delta_rng, _ = cfg.streams()
    meter = MemoryMeter()
    pairs = wd.samples(cfg.delta_max)
    hist, log = [], []
    for epoch in range(cfg.epochs):
        order = epoch_order(len(pairs), shuffle_rng, cfg.shuffle)
        total = 0.0
        for b in batches(order, cfg.batch_size):
            bp = pairs[b]
            delta = sample_rollout_length(delta_rng, cfg.delta_max)
            frozen = f.copy()
            if callback is not None:
                callback("frozen", epoch=epoch, frozen=frozen, live=f, delta=delta)
            meter.start_iteration(delta, len(bp))
            loss, grads = pf_loss(f, wd.inputs(bp), wd.targets(bp, delta), delta,
                                  frozen=frozen, meter=meter)
            _check(loss, epoch, int(b[0]))
            adam_step(f.params, grads, opt)
            meter.end_iteration()
            total += loss * len(bp)
        meter.end_epoch()
        hist.append(total / len(pairs))
    return TrainResult(f, hist, meter, log, ["pf"] * len(hist))


def _spf_delta(cfg, n_builds):
    if cfg.delta_schedule:
        return cfg.delta_schedule[min(n_builds, len(cfg.delta_schedule) - 1)]
    return cfg.delta


@dataclass
class PhaseOne:
    """State after SPF phase 1; phase 1 does not depend on p, alpha or delta."""

    model: object
    opt: object
    shuffle_state: dict
    meter: MemoryMeter
    history: list
    phases: list


def spf_phase_one(f, data, cfg, opt=None, penalty=None, callback=None):
    """Run the ``n_init`` one-step epochs of SPF and snapshot the result."""
    wd, opt = _prepare(f, data, cfg, opt)
    shuffle_rng, _, _ = cfg.streams()
    meter = MemoryMeter()
    hist, phases = [], []
    _one_step_epochs(f, wd, cfg, opt, meter, shuffle_rng, cfg.n_init, hist, phases, "init",
                     penalty=penalty, phase=1, callback=callback)
    return PhaseOne(f.copy(), opt.copy(), copy.deepcopy(shuffle_rng.bit_generator.state),
                    copy.deepcopy(meter), list(hist), list(phases))


def train_spf(f, data, cfg, opt=None, penalty=None, callback=None, init=None):
    """Stochastic pushforward.

    Phase 1 trains one-step for ``n_init`` epochs. Phase 2 runs
    ``n_epoch`` epochs over ground truth mixed with a supplementary set of
    frozen ``delta``-step predictions: each input comes from ground truth
    with probability ``p`` (weight 1) and from the supplementary set
    otherwise (weight ``alpha``); targets are always ground truth. The
    supplementary set is built once before phase 2 and rebuilt at the
    start of every epoch divisible by ``n_ui`` (1-based).

    ``init`` (from :func:`spf_phase_one` with the same data, model spec
    and phase-1 settings) skips phase 1; the outcome is identical.
    """
    wd, opt = _prepare(f, data, cfg, opt)
    shuffle_rng, _, acq_rng = cfg.streams()
    if init is None:
        meter = MemoryMeter()
        hist, phases = [], []
        _one_step_epochs(f, wd, cfg, opt, meter, shuffle_rng, cfg.n_init, hist, phases, "init",
                         penalty=penalty, phase=1, callback=callback)
    else:
        if len(init.history) != cfg.n_init:
            raise ConfigError(f"phase-1 snapshot has {len(init.history)} epochs, config wants {cfg.n_init}")
        f.load_params(init.model.params)
        opt = init.opt.copy()
        shuffle_rng.bit_generator.state = copy.deepcopy(init.shuffle_state)
        meter = copy.deepcopy(init.meter)
        hist, phases = list(init.history), list(init.phases)
    log = []

    def build(epoch, event, n_builds):
        frozen = f.copy()
        supp = build_supplementary(frozen, wd, _spf_delta(cfg, n_builds), epoch=epoch)
        meter.record_supplementary(supp.nbytes)
        log.append({"event": event, "epoch": epoch, "delta": supp.delta,
                    "fingerprint": supp.fingerprint, "entries": supp.entry_count()})
        if callback is not None:
            callback(event, epoch=epoch, frozen=frozen, supp=supp, data=wd)
        return supp

    supp = build(0, "initial", 0)
    n_builds = 1
    D = CombinedDataset(wd, supp)
    pairs = wd.samples(1)
    for epoch in range(1, cfg.n_epoch + 1):
        if epoch % cfg.n_ui == 0:
            D.supp = build(epoch, "rebuild", n_builds)
            n_builds += 1
        order = epoch_order(len(pairs), shuffle_rng, cfg.shuffle)
        total = 0.0
        for b in batches(order, cfg.batch_size):
            bp = pairs[b]
            meter.start_iteration(1, len(bp))
            x, y, tags = acquire_batch(acq_rng, bp, D, cfg.p)
            if callback is not None:
                callback("batch", phase="spf", epoch=epoch, pairs=bp, inputs=x, targets=y, from_d1=tags)
            loss, grads = spf_weighted_loss(f, x, y, tags, cfg.alpha, meter=meter, penalty=penalty)
            _check(loss, epoch, int(b[0]), phase=2)
            adam_step(f.params, grads, opt)
            meter.end_iteration()
            total += loss * len(bp)
        meter.end_epoch()
        hist.append(total / len(pairs))
        phases.append("spf")
    return TrainResult(f, hist, meter, log, phases)


def train(f, data, cfg, opt=None, penalty=None, callback=None, init=None):
    """Dispatch on ``cfg.framework``; ``init`` only applies to SPF."""
    if cfg.framework == "one_step":
        return train_one_step(f, data, cfg, opt, penalty=penalty, callback=callback)
    if cfg.framework == "atf":
        return train_atf(f, data, cfg, opt, callback=callback)
    if cfg.framework == "pf":
        return train_pf(f, data, cfg, opt, callback=callback)
    return train_spf(f, data, cfg, opt, penalty=penalty, callback=callback, init=init)
