import math
import os
import struct
import xml.etree.ElementTree as ET
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spfbench.errors import (BadMagicError, ConfigError, CrcError, FormatError, TruncatedError,
                             VersionError)
from spfbench.experiment import pipeline as P
from spfbench.experiment.cli import main
from spfbench.experiment.config import ExperimentConfig, parse_value
from spfbench.experiment.csvio import format_csv, parse_csv, read_columns, same_value, write_csv
from spfbench.experiment.spfd import (Container, decode_container, encode_container, read_container,
                                      write_container)
from spfbench.experiment.svg import line_chart


def sample_container(rng):
    return Container("latent", {"seed": 3, "name": "x"},
                     {"a": rng.normal(size=(3, 4)), "b": np.array(2.5), "empty": np.zeros((0, 2))})


class TestSpfd:
    def test_round_trip_bitwise(self, rng, tmp_path):
        c = sample_container(rng)
        write_container(tmp_path / "x.spfd", c)
        d = read_container(tmp_path / "x.spfd", "latent")
        assert d.kind == "latent" and d.meta == c.meta
        for k in c.arrays:
            assert d.arrays[k].shape == c.arrays[k].shape
            assert d.arrays[k].tobytes() == np.asarray(c.arrays[k]).tobytes()

    def test_special_values(self):
        arr = np.array([np.nan, np.inf, -np.inf, -0.0, 5e-324])
        d = decode_container(encode_container(Container("eval", {}, {"v": arr})))
        assert d.arrays["v"].tobytes() == arr.tobytes()

    def test_every_payload_byte_flip(self, rng):
        buf = bytearray(encode_container(sample_container(rng)))
        payload = 8 * (12 + 1)
        start = len(buf) - 4 - payload
        for i in range(start, len(buf) - 4):
            bad = bytearray(buf)
            bad[i] ^= 0x5A
            with pytest.raises(CrcError):
                decode_container(bytes(bad))

    def test_meta_and_crc_flip(self, rng):
        buf = bytearray(encode_container(sample_container(rng)))
        for i in (14, len(buf) - 1):
            bad = bytearray(buf)
            bad[i] ^= 1
            with pytest.raises(CrcError):
                decode_container(bytes(bad))

    def test_bad_magic(self, rng):
        buf = bytearray(encode_container(sample_container(rng)))
        buf[0] = ord("X")
        with pytest.raises(BadMagicError):
            decode_container(bytes(buf))

    def test_version(self, rng):
        buf = bytearray(encode_container(sample_container(rng)))
        buf[4:6] = struct.pack("<H", 2)
        body = bytes(buf[:-4])
        with pytest.raises(VersionError):
            decode_container(body + struct.pack("<I", zlib.crc32(body)))

    @pytest.mark.parametrize("cut", [1, 9, 40])
    def test_truncated(self, rng, cut):
        buf = encode_container(sample_container(rng))
        with pytest.raises(TruncatedError):
            decode_container(buf[:-cut])

    def test_kind_mismatch(self, rng, tmp_path):
        write_container(tmp_path / "x.spfd", sample_container(rng))
        with pytest.raises(FormatError):
            read_container(tmp_path / "x.spfd", "model")

    def test_layout(self):
        buf = encode_container(Container("model", {}, {"w": np.array([1.0])}))
        assert buf[:4] == b"SPFD"
        assert struct.unpack("<HBB", buf[4:8]) == (1, 4, 0)
        assert struct.unpack("<d", buf[-12:-4])[0] == 1.0
        assert struct.unpack("<I", buf[-4:])[0] == zlib.crc32(buf[:-4])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(allow_nan=False), min_size=1, max_size=30))
    def test_property_round_trip(self, xs):
        arr = np.array(xs)
        d = decode_container(encode_container(Container("trajectory", {}, {"x": arr})))
        assert d.arrays["x"].tobytes() == arr.tobytes()


class TestCsv:
    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(allow_nan=True, allow_infinity=True), min_size=1, max_size=5))
    def test_float_round_trip(self, xs):
        _, rows = parse_csv(format_csv([f"c{i}" for i in range(len(xs))], [xs]))
        for a, b in zip(xs, rows[0]):
            assert same_value(float(a), float(b))
            if not math.isnan(a):
                assert float(b) == a

    def test_mixed(self, tmp_path):
        write_csv(tmp_path / "a.csv", ["name", "n", "x"], [("spf", 3, 0.1), ("atf", 2, 1 / 3)])
        cols = read_columns(tmp_path / "a.csv")
        assert cols == {"name": ["spf", "atf"], "n": [3, 2], "x": [0.1, 1 / 3]}


class TestConfig:
    def test_overrides(self):
        c = ExperimentConfig().with_overrides(["train.p=0.25", "train.framework=spf", "noise.amplitudes=[0.0, 0.5]"])
        assert c["train.p"] == 0.25 and c["noise.amplitudes"] == [0.0, 0.5]
        assert c.trainer_config().framework == "spf"

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(["train.nope=1"])

    def test_type_checked(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(["train.epochs=abc"])

    def test_save_load(self, tmp_path):
        c = ExperimentConfig().with_overrides(["train.alpha=0.75", "run.name=abc"])
        c.save(tmp_path / "c.toml")
        d = ExperimentConfig.load(tmp_path / "c.toml")
        assert d.values == c.values

    def test_nested_tables(self, tmp_path):
        (tmp_path / "c.toml").write_text("seed = 7\n[train]\nframework = \"atf\"\ndelta = 3\n")
        c = ExperimentConfig.load(tmp_path / "c.toml", ["train.lambdas=[0.5, 0.25]"])
        assert c["seed"] == 7 and c.trainer_config().weights == (1.0, 0.5, 0.25)

    def test_radius_bound(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(["ic.radius=[2.0, 16.0]"]).validate()

    def test_run_names(self):
        base = ExperimentConfig()
        assert base.with_overrides(["train.framework=spf", "train.delta=3"]).run_name() == "spf_d3"
        assert base.with_overrides(["train.framework=spf", "train.delta=2",
                                    "train.lambda_pc=1.0"]).run_name() == "spf_d2_pc"
        assert base.with_overrides(["train.framework=atf", "train.delta=3",
                                    "data.fraction=0.1"]).run_name() == "atf_d3_f0.1"

    def test_parse_value(self):
        assert parse_value("3") == 3 and parse_value("true") is True and parse_value("abc") == "abc"


def test_svg_parses():
    svg = line_chart([{"label": "a", "x": [1, 2, 3], "y": [0.1, 0.5, 0.2]},
                      {"label": "b", "x": [1, 2, 3], "y": [0.9, 0.8, 0.7], "axis": "right", "dashed": True}],
                     title="t", left_label="err", right_label="ssim")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 2


TINY = ["grid.n=16", "ic.radius=[2.0, 5.0]", "data.n_train=3", "data.n_val=1", "data.n_test=2",
        "data.n_saved=24", "data.warmup=4", "data.extra_steps=8", "data.save_stride=2",
        "reducer.m=6", "model.hidden=6", "train.epochs=2", "train.n_init=1", "train.n_epoch=2",
        "train.n_ui=1", "train.batch_size=8", "eval.start=5", "eval.horizon=10",
        "eval.extrap_horizon=4", "sweep.p=[0.5]", "sweep.alpha=[0.5, 1.0]",
        "noise.amplitudes=[0.0, 0.01]"]


@pytest.fixture(scope="module")
def tiny(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    cfg = ExperimentConfig().with_overrides(TINY + [f"out={out}"])
    P.cmd_generate(cfg)
    P.cmd_fit_reducer(cfg)
    return cfg


class TestPipeline:
    def test_generate_layout(self, tiny):
        d = P.data_dir(tiny)
        assert sorted(os.listdir(os.path.join(d, "train"))) == [f"sim_{i:04d}.spfd" for i in range(3)]
        t = P.load_split(tiny, "test")[0]
        assert len(t) == 24 + 8
        assert os.path.exists(os.path.join(d, "config.toml"))

    def test_generate_deterministic(self, tiny, tmp_path):
        c = tiny.replace(out=str(tmp_path))
        P.cmd_generate(c)
        for split in ("train", "test"):
            for a, b in zip(P.load_split(tiny, split), P.load_split(c, split)):
                assert np.array_equal(a.data, b.data)

    def test_limited_data_prefix(self, tiny):
        full = P.load_split(tiny, "train")
        part = P.load_split(tiny, "train", fraction=0.3)
        assert len(part) == 1 and np.array_equal(part[0].data, full[0].data)

    @pytest.mark.parametrize("fw", ["one_step", "atf", "pf", "spf"])
    def test_train_evaluate(self, tiny, fw):
        c = tiny.with_overrides([f"train.framework={fw}", "train.delta=2"])
        res = P.cmd_train(c)
        assert all(np.isfinite(res.loss_history))
        _, summary, series = P.cmd_evaluate(c)
        rd = P.run_dir(c)
        cols = read_columns(os.path.join(rd, "eval.csv"))
        assert cols["step"] == list(range(5 + 3, 5 + 3 + 10))
        for f in ("model.spfd", "loss.csv", "meter.csv", "config.toml", "eval_summary.csv"):
            assert os.path.exists(os.path.join(rd, f))

    def test_zero_noise_matches_clean(self, tiny):
        c = tiny.with_overrides(["train.framework=one_step", "run.name=noise_check"])
        P.cmd_train(c)
        _, _, clean = P.cmd_evaluate(c)
        _, rows = P.cmd_noise_eval(c)
        assert rows[0][0] == 0.0
        assert rows[0][2] == pytest.approx(np.mean([s.ssim[0] for s in clean]), abs=0)

    def test_extrapolate(self, tiny):
        c = tiny.with_overrides(["run.name=extrap"])
        P.cmd_train(c)
        m, _ = P.cmd_extrapolate(c)
        assert len(m) == 4

    def test_sweep_and_report(self, tiny):
        rows = P.cmd_sweep(tiny)
        assert len(rows) == 2 and all(r[-1] == "ok" for r in rows)
        _, svg, rep = P.cmd_report(tiny)
        ET.fromstring(svg)
        assert rep is not None and rep.rows


class TestCli:
    def test_help(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["--help"])
        assert e.value.code == 0

    def test_config_error(self, tmp_path, capsys):
        assert main(["generate", "--out", str(tmp_path), "--override", "grid.n=4"]) == 2

    def test_bad_override(self, tmp_path):
        assert main(["train", "--out", str(tmp_path), "--override", "nonsense"]) == 2

    def test_missing_data(self, tmp_path):
        assert main(["fit-reducer", "--out", str(tmp_path / "nothing")]) in (2, 4)

    def test_corrupt_container(self, tiny, tmp_path):
        import shutil
        out = tmp_path / "c"
        shutil.copytree(tiny["out"], out)
        p = out / "reducer.spfd"
        b = bytearray(p.read_bytes())
        b[-10] ^= 0xFF
        p.write_bytes(bytes(b))
        assert main(["train", "--out", str(out)] + [f"--override={o}" for o in TINY]) == 4

    def test_end_to_end(self, tmp_path, capsys):
        args = ["--out", str(tmp_path), "--seed", "5"] + [f"--override={o}" for o in TINY]
        assert main(["generate", *args]) == 0
        assert main(["fit-reducer", *args]) == 0
        assert main(["train", *args]) == 0
        assert main(["evaluate", *args]) == 0
        assert main(["report", *args]) == 0
        assert "one_step" in capsys.readouterr().out


def test_error_space_physical(tiny):
    c = tiny.with_overrides(["run.name=space", "eval.error_space=physical"])
    P.cmd_train(c)
    _, _, phys = P.cmd_evaluate(c)
    _, _, lat = P.cmd_evaluate(c.with_overrides(["eval.error_space=latent"]))
    assert not np.allclose(phys[0].mse, lat[0].mse)
    assert np.array_equal(phys[0].ssim, lat[0].ssim)
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(["eval.error_space=both"]).validate()
