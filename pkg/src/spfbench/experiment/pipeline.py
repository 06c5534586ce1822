"""Experiment commands. Each is a function of (config, input files)."""
from __future__ import annotations

import json
import os
import shutil
from dataclasses import asdict

import numpy as np

from ..errors import ConfigError, FormatError
from ..metrics import EvalSeries, mse, ssim, step_count_above
from ..noise import NoiseSpec, add_noise_to_input
from ..physics import GridSpec, Trajectory, dataset_grid, generate_dataset, total_energy
from ..physics.grid import FieldState
from ..reduction import LatentScaler, Reducer, fit_dense_ae, fit_pod, reconstruction_mse
from ..surrogate import RolloutConfig, build_model, model_from_arrays, rollout
from ..trainers import EnergyPenalty, retained_memory_report, spf_phase_one, train
from ..trainers.memory import MemoryMeter
from .csvio import read_columns, read_csv, write_csv
from .spfd import Container, atomic_write_bytes, read_container, write_container
from .svg import line_chart

SPLITS = ("train", "val", "test")
SPLIT_OFFSETS = {"train": 0, "val": 1, "test": 2}


def _out(cfg):
    return cfg["out"]


def data_dir(cfg):
    return os.path.join(_out(cfg), "data")


def run_dir(cfg, name=None):
    return os.path.join(_out(cfg), "runs", name or cfg.run_name())


def split_seed(cfg, split):
    """Distinct master seed per split; simulation seeds derive from (this, index)."""
    return int(np.random.SeedSequence([int(cfg["seed"]), SPLIT_OFFSETS[split]]).generate_state(1)[0])


# -- trajectories -------------------------------------------------------------

def trajectory_container(t):
    g = t.grid
    meta = {"names": list(t.names), "grid": [g.nx, g.ny, g.dx, g.dy, g.dt], "meta": t.meta}
    return Container("trajectory", meta, {"data": t.data})


def trajectory_from_container(c):
    return Trajectory(GridSpec(*c.meta["grid"]), tuple(c.meta["names"]), c.arrays["data"], c.meta["meta"])


def load_split(cfg, split, fraction=1.0):
    d = os.path.join(data_dir(cfg), split)
    if not os.path.isdir(d):
        raise FileNotFoundError(f"no {split} data under {d}; run generate first")
    files = sorted(f for f in os.listdir(d) if f.endswith(".spfd"))
    if fraction < 1.0:
        files = files[:max(1, int(round(fraction * len(files))))]
    return [trajectory_from_container(read_container(os.path.join(d, f), "trajectory")) for f in files]


def cmd_generate(cfg):
    """Simulate train/val/test splits and write one container per simulation."""
    out = data_dir(cfg)
    tmp = out + ".partial"
    if os.path.exists(tmp):
        shutil.rmtree(tmp)
    base = cfg.physics_config()
    ranges = cfg.ic_ranges()
    grid = dataset_grid(cfg["system"], cfg["grid.n"], base, ranges, cfg["grid.side"],
                        cfg["grid.cfl"] if cfg["system"] == "shallow_water" else None)
    manifest = {"system": cfg["system"], "seed": cfg["seed"], "ranges": ranges,
                "grid": [grid.nx, grid.ny, grid.dx, grid.dy, grid.dt], "splits": {}}
    try:
        for split in SPLITS:
            n = cfg[f"data.n_{split}"]
            if n == 0:
                continue
            n_saved = cfg["data.n_saved"] + (cfg["data.extra_steps"] if split == "test" else 0)
            seed = split_seed(cfg, split)
            trajs = generate_dataset(n, ranges, seed, cfg["system"], grid, base, n_saved,
                                     cfg["data.save_stride"], cfg["data.warmup"])
            for t in trajs:
                write_container(os.path.join(tmp, split, f"sim_{t.meta['index']:04d}.spfd"),
                                trajectory_container(t))
            manifest["splits"][split] = {"count": n, "seed": seed, "steps": n_saved,
                                         "ic": [t.meta["ic"] for t in trajs]}
        atomic_write_bytes(os.path.join(tmp, "manifest.json"),
                           json.dumps(manifest, indent=1, sort_keys=True).encode())
        cfg.save(os.path.join(tmp, "config.toml"))
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if os.path.exists(out):
        shutil.rmtree(out)
    os.replace(tmp, out)
    return manifest


# -- reducer ------------------------------------------------------------------

def reducer_path(cfg):
    return os.path.join(_out(cfg), "reducer.spfd")


def save_reducer(path, r, scaler):
    meta = r.meta()
    meta["scaler"] = [scaler.shift, scaler.scale]
    write_container(path, Container("reducer", meta, dict(r.arrays())))


def load_reducer(cfg):
    c = read_container(reducer_path(cfg), "reducer")
    r = Reducer.from_parts(c.meta, c.arrays)
    return r, LatentScaler(*c.meta["scaler"])


def cmd_fit_reducer(cfg):
    """Fit on the training split only; report train/test reconstruction error."""
    train_set = load_split(cfg, "train")
    train_set = [t.slice(0, cfg["data.n_saved"]) for t in train_set]
    if cfg["reducer.kind"] == "pod":
        r = fit_pod(train_set, cfg["reducer.m"])
    else:
        r = fit_dense_ae(train_set, cfg["reducer.m"], cfg["reducer.epochs"], cfg["reducer.lr"],
                         seed=cfg["seed"])
    scaler = LatentScaler.fit([r.encode_array(t.data) for t in train_set])
    save_reducer(reducer_path(cfg), r, scaler)
    test = load_split(cfg, "test")
    rows = [("train", reconstruction_mse(r, train_set)),
            ("test", reconstruction_mse(r, [t.slice(0, cfg["data.n_saved"]) for t in test]))]
    write_csv(os.path.join(_out(cfg), "reducer_report.csv"), ["split", "mse"], rows)
    return r, rows


# -- training -----------------------------------------------------------------

def encode_split(r, scaler, trajs, n_steps=None):
    return [scaler.transform(r.encode_array(t.data[:n_steps])) for t in trajs]


def make_penalty(cfg, r, scaler, tc):
    if tc.lambda_pc <= 0:
        return None
    if cfg["system"] != "shallow_water" or r.kind != "pod":
        raise ConfigError("the energy penalty needs shallow-water data and a POD reducer")
    return EnergyPenalty(r, tc.lambda_pc, cfg["physics.g"], scaler)


def save_model(path, model, extra=None):
    meta = {"spec": model.spec()}
    meta.update(extra or {})
    write_container(path, Container("model", meta, {k: v for k, v in model.params.items()}))


def load_model(path):
    c = read_container(path, "model")
    return model_from_arrays(c.meta["spec"], c.arrays), c.meta


def _train_inputs(cfg):
    r, scaler = load_reducer(cfg)
    trajs = load_split(cfg, "train", cfg["data.fraction"])
    series = encode_split(r, scaler, trajs, cfg["data.n_saved"])
    tc = cfg.trainer_config()
    model = build_model(cfg.model_spec(), rng=np.random.default_rng(cfg.train_seed()))
    return r, scaler, series, tc, model, make_penalty(cfg, r, scaler, tc)


def cmd_phase_one(cfg):
    """SPF phase 1 for ``cfg``, reusable by SPF runs that differ only in p, alpha or delta."""
    _, _, series, tc, model, penalty = _train_inputs(cfg.replace(**{"train.framework": "spf"}))
    return spf_phase_one(model, series, tc, penalty=penalty)


def cmd_train(cfg, phase_one=None):
    """Train the configured framework; writes model, loss, meter and update log."""
    r, scaler, series, tc, model, penalty = _train_inputs(cfg)
    res = train(model, series, tc, penalty=penalty, init=phase_one)
    out = run_dir(cfg)
    os.makedirs(out, exist_ok=True)
    cfg.save(os.path.join(out, "config.toml"))
    save_model(os.path.join(out, "model.spfd"), model,
               {"trainer": tc.to_dict(), "reducer": r.fingerprint(), "run": cfg.run_name()})
    write_csv(os.path.join(out, "loss.csv"), ["epoch", "phase", "loss"],
              [(i + 1, ph, float(l)) for i, (ph, l) in enumerate(zip(res.phases, res.loss_history))])
    write_meter(os.path.join(out, "meter.csv"), tc, res.meter, model.parameter_count())
    write_csv(os.path.join(out, "updates.csv"), ["event", "epoch", "delta", "entries", "fingerprint"],
              [(e["event"], e["epoch"], e["delta"], e["entries"], e["fingerprint"]) for e in res.log])
    return res


def meter_delta(tc):
    return {"one_step": 1, "atf": tc.delta, "pf": tc.delta_max or 1, "spf": tc.delta}[tc.framework]


def write_meter(path, tc, meter, n_params):
    write_csv(path, ["framework", "delta", "peak_bytes", "supplementary_bytes", "parameters"],
              [(tc.framework, meter_delta(tc), meter.peak, meter.supplementary_bytes, n_params)])


# -- evaluation ---------------------------------------------------------------

def _field_stack(traj, idx):
    return traj.data[idx]


def initial_window(r, scaler, traj, start, k_in, noise=None):
    """Encoded input window of ``k_in`` states from 1-based timestep ``start``."""
    frames = traj.data[start - 1:start - 1 + k_in]
    clamped = 0
    if noise is not None:
        frames, clamped = add_noise_to_input(frames, noise, traj.names)
    return scaler.transform(r.encode_array(frames)), clamped


def evaluate_trajectory(model, r, scaler, traj, start, horizon, g=9.81, noise=None, space="latent"):
    """Roll out from the window at ``start`` and score every predicted step.

    Per-step MSE is taken in scaled latent space, or on decoded fields
    with ``space="physical"``.
    """
    if space not in ("latent", "physical"):
        raise ConfigError(f"unknown error space {space!r}")
    k_in = model.k_in
    first = start - 1 + k_in
    if start < 1 or first + horizon > len(traj):
        raise ConfigError(f"window at {start} with horizon {horizon} exceeds {len(traj)} steps")
    window, clamped = initial_window(r, scaler, traj, start, k_in, noise)
    preds = rollout(model, RolloutConfig(horizon, window))
    truth_frames = traj.data[first:first + horizon]
    truth = scaler.transform(r.encode_array(truth_frames))
    fields = r.decode_array(scaler.inverse(preds))
    if space == "latent":
        per_mse = np.array([mse(p, t) for p, t in zip(preds, truth)])
    else:
        per_mse = np.array([mse(f, t) for f, t in zip(fields, truth_frames)])
    ssims = np.array([ssim(f, t) for f, t in zip(fields, truth_frames)])
    e_pred = e_true = None
    if "h" in traj.names:
        mk = lambda fr: FieldState.from_stack(traj.grid, traj.names, fr)
        e_pred = np.array([total_energy(mk(f), g) for f in fields])
        e_true = np.array([total_energy(mk(f), g) for f in truth_frames])
    steps = np.arange(first + 1, first + horizon + 1)
    return EvalSeries.from_rollout(steps, per_mse, ssims, e_pred, e_true,
                                   {"trajectory": traj.meta.get("index"), "clamped": clamped})


def reducer_only_series(r, traj, first, horizon):
    """Reconstruction quality of the reducer alone over the same steps."""
    frames = traj.data[first:first + horizon]
    rec = r.decode_array(r.encode_array(frames))
    ssims = np.array([ssim(a, b) for a, b in zip(rec, frames)])
    return ssims


def mean_series(series):
    cols = {c: np.mean([getattr(s, c) for s in series], axis=0) for c in EvalSeries.COLUMNS[1:]}
    return EvalSeries(series[0].step, cols["mse"], cols["acc_error"], cols["ssim"],
                      cols["energy_pred"], cols["energy_true"])


def summarize(series, threshold):
    def ms(vals):
        vals = np.asarray(vals, dtype=np.float64)
        return float(vals.mean()), float(vals.std())
    rows = []
    metrics = {
        "mse_step1": [s.mse[0] for s in series],
        "mse_mean": [s.mse.mean() for s in series],
        "acc_error_final": [s.acc_error[-1] for s in series],
        "ssim_step1": [s.ssim[0] for s in series],
        "ssim_mean": [s.ssim.mean() for s in series],
        "steps_above": [step_count_above(s.ssim, threshold) for s in series],
        "energy_abs_error": [np.mean(np.abs(s.energy_pred - s.energy_true)) for s in series],
    }
    for k, v in metrics.items():
        rows.append((k, *ms(v)))
    return rows


def write_eval(path, series):
    m = mean_series(series)
    write_csv(path, list(EvalSeries.COLUMNS), m.rows())
    return m


def _model_path(cfg, model_path=None):
    return model_path or cfg["eval.model"] or os.path.join(run_dir(cfg), "model.spfd")


def _evaluate_all(cfg, model, r, scaler, trajs, start, horizon, noise=None):
    return [evaluate_trajectory(model, r, scaler, t, start, horizon, cfg["physics.g"], noise,
                                cfg["eval.error_space"]) for t in trajs]


def cmd_evaluate(cfg, model_path=None, out_dir=None):
    model, _ = load_model(_model_path(cfg, model_path))
    r, scaler = load_reducer(cfg)
    test = load_split(cfg, "test")
    series = _evaluate_all(cfg, model, r, scaler, test, cfg["eval.start"], cfg["eval.horizon"])
    out = out_dir or run_dir(cfg)
    mean = write_eval(os.path.join(out, "eval.csv"), series)
    summary = summarize(series, cfg["eval.threshold"])
    write_csv(os.path.join(out, "eval_summary.csv"), ["metric", "mean", "std"], summary)
    return mean, summary, series


def cmd_extrapolate(cfg, model_path=None, out_dir=None):
    """Roll out past the training range from its last window."""
    model, _ = load_model(_model_path(cfg, model_path))
    r, scaler = load_reducer(cfg)
    test = load_split(cfg, "test")
    start = cfg["data.n_saved"] - model.k_in + 1
    horizon = cfg["eval.extrap_horizon"]
    first = cfg["data.n_saved"]
    if any(len(t) < first + horizon for t in test):
        raise ConfigError("test trajectories do not extend far enough for extrapolation")
    series = _evaluate_all(cfg, model, r, scaler, test, start, horizon)
    ref = np.mean([reducer_only_series(r, t, first, horizon) for t in test], axis=0)
    m = mean_series(series)
    out = out_dir or run_dir(cfg)
    write_csv(os.path.join(out, "extrapolate.csv"), [*EvalSeries.COLUMNS, "ssim_reducer_only"],
              [(*row, float(x)) for row, x in zip(m.rows(), ref)])
    return m, ref


def cmd_noise_eval(cfg, model_path=None, amplitudes=None, out_dir=None):
    model, _ = load_model(_model_path(cfg, model_path))
    r, scaler = load_reducer(cfg)
    test = load_split(cfg, "test")
    amps = cfg["noise.amplitudes"] if amplitudes is None else amplitudes
    out = out_dir or run_dir(cfg)
    results, rows = {}, []
    for a in amps:
        spec = NoiseSpec(cfg["noise.L"], float(a), cfg["noise.seed"])
        noise = None if a == 0 else spec
        series = _evaluate_all(cfg, model, r, scaler, test, cfg["eval.start"], cfg["eval.horizon"], noise)
        m = write_eval(os.path.join(out, f"noise_{a:g}.csv"), series)
        clamped = sum(s.meta["clamped"] for s in series)
        summ = dict((k, mu) for k, mu, _ in summarize(series, cfg["eval.threshold"]))
        rows.append((float(a), cfg["noise.L"], summ["ssim_step1"], summ["steps_above"],
                     summ["acc_error_final"], clamped))
        results[a] = (m, series)
    write_csv(os.path.join(out, "noise_summary.csv"),
              ["amplitude", "L", "ssim_step1", "steps_above", "acc_error_final", "clamped"], rows)
    return results, rows


# -- sweep and report ---------------------------------------------------------

SWEEP_HEADER = ["p", "alpha", "mse_short", "ssim_short", "mse_long", "ssim_long", "status"]


def cmd_sweep(cfg, ps=None, alphas=None):
    """Train SPF for every (p, alpha) cell and tabulate 1-step and full-horizon scores."""
    ps = cfg["sweep.p"] if ps is None else ps
    alphas = cfg["sweep.alpha"] if alphas is None else alphas
    rows = []
    # an explicit training seed keeps repeated sweeps apart
    tag = f"_s{cfg['train.seed']}" if cfg["train.seed"] >= 0 else ""
    # phase 1 is independent of (p, alpha): train it once
    base = cfg.replace(**{"train.framework": "spf", "train.delta": cfg["sweep.delta"]})
    init = cmd_phase_one(base)
    for p in ps:
        for a in alphas:
            c = base.replace(**{"train.p": float(p), "train.alpha": float(a),
                                "run.name": f"sweep_p{p:g}_a{a:g}{tag}"})
            try:
                cmd_train(c, phase_one=init)
                _, _, series = cmd_evaluate(c)
                rows.append((float(p), float(a),
                             float(np.mean([s.mse[0] for s in series])),
                             float(np.mean([s.ssim[0] for s in series])),
                             float(np.mean([s.mse.mean() for s in series])),
                             float(np.mean([s.ssim.mean() for s in series])), "ok"))
            except (ArithmeticError, ValueError) as exc:
                rows.append((float(p), float(a), np.nan, np.nan, np.nan, np.nan, f"failed: {exc}"))
    write_csv(os.path.join(_out(cfg), f"sweep{tag}.csv"), SWEEP_HEADER, rows)
    return rows


def _load_meter(path):
    cols = read_columns(path)
    meter = MemoryMeter()
    meter.iterations.append((cols["delta"][0], int(cols["peak_bytes"][0]), 0))
    meter.supplementary_bytes = int(cols["supplementary_bytes"][0])
    return cols["framework"][0], int(cols["delta"][0]), meter, int(cols["parameters"][0])


def cmd_report(cfg, runs=None):
    """Merge evaluated runs into a comparison CSV, an SVG chart and a memory table."""
    runs = list(runs if runs is not None else cfg["report.runs"])
    if not runs:
        base = os.path.join(_out(cfg), "runs")
        runs = sorted(os.path.join(base, d) for d in os.listdir(base)) if os.path.isdir(base) else []
    runs = [d for d in runs if os.path.exists(os.path.join(d, "eval.csv"))]
    if not runs:
        raise ConfigError("no evaluated runs to report")
    rows, curves, meters = [], [], []
    steps = None
    for i, d in enumerate(runs):
        name = os.path.basename(os.path.normpath(d))
        cols = read_columns(os.path.join(d, "eval.csv"))
        if steps is None:
            steps = cols["step"]
        elif cols["step"] != steps:
            raise ConfigError(f"run {name} was evaluated on different steps")
        for s, a, q in zip(cols["step"], cols["acc_error"], cols["ssim"]):
            rows.append((name, s, a, q))
        curves.append({"label": f"{name} acc. error", "x": cols["step"], "y": cols["acc_error"],
                       "axis": "left", "dashed": False, "color": _color(i)})
        curves.append({"label": f"{name} SSIM", "x": cols["step"], "y": cols["ssim"],
                       "axis": "right", "dashed": True, "color": _color(i)})
        mp = os.path.join(d, "meter.csv")
        if os.path.exists(mp):
            meters.append(_load_meter(mp))
    out = os.path.join(_out(cfg), "report")
    write_csv(os.path.join(out, "comparison.csv"), ["run", "step", "acc_error", "ssim"], rows)
    svg = line_chart(curves, title="Rollout comparison", left_label="accumulated error",
                     right_label="SSIM")
    atomic_write_bytes(os.path.join(out, "curves.svg"), svg.encode())
    report = None
    if meters:
        report = retained_memory_report(meters)
        write_csv(os.path.join(out, "memory.csv"),
                  ["framework", "delta", "peak_bytes", "supplementary_bytes"],
                  [(m.framework, m.delta, m.peak_bytes, m.supplementary_bytes) for m in report.rows])
    return rows, svg, report


def _color(i):
    from .svg import PALETTE
    return PALETTE[i % len(PALETTE)]
