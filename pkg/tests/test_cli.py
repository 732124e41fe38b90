import re

import pytest

from conftest import probe_pins
from rsnn_golden.cli import RunConfig, ConfigError, main, parse_config_text
from rsnn_golden.device import DevicePins, ParameterImage
from rsnn_golden.network import identity_probe_params
from rsnn_golden.trace import format_stimulus, parse_vcd, read_trace

METRICS_RE = re.compile(r"^task=(\w+) float_acc=([\d.]+) quant_acc=([\d.]+) seed=(\d+)$")


def _train(tmp_path, capsys, *args):
    rc = main(["train", *args])
    return rc, capsys.readouterr()


def test_train_xor_some_seed_perfect(tmp_path, capsys):
    for seed in range(5):
        out = tmp_path / f"s{seed}"
        rc, cap = _train(tmp_path, capsys, "--task", "xor", "--seed", str(seed),
                         "--output_dir", str(out))
        assert rc == 0
        m = METRICS_RE.match(cap.out.strip())
        assert m and m.group(1) == "xor" and m.group(4) == str(seed)
        for name in ("params.bin", "params.hex", "model.json", "run.cfg", "metrics.txt"):
            assert (out / name).exists()
        assert len((out / "params.bin").read_bytes()) == 39
        if float(m.group(3)) == 1.0:
            return
    pytest.fail("no seed in 0..4 reached quant_acc=1.0")


def test_resolved_config_reproduces_artifacts(tmp_path, capsys):
    first = tmp_path / "a"
    assert main(["train", "--task", "xor", "--epochs", "20", "--output_dir", str(first)]) == 0
    text = (first / "run.cfg").read_text()
    assert "epochs=20" in text and "lr=0.01" in text and "timesteps=16" in text
    second = tmp_path / "b"
    cfg = tmp_path / "again.cfg"
    cfg.write_text(text.replace(f"output_dir={first}", f"output_dir={second}"))
    assert main(["train", "--config", str(cfg)]) == 0
    for name in ("params.bin", "params.hex", "model.json", "metrics.txt"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    capsys.readouterr()


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ntask=xor\nepochs=3\nseed=1\n")
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg), "--seed", "2", "--output_dir", str(out)]) == 0
    resolved = (out / "run.cfg").read_text()
    assert "seed=2" in resolved and "epochs=3" in resolved
    assert capsys.readouterr().out.strip().endswith("seed=2")


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("task=xor\nlearning_rate=0.1\n")
    assert main(["train", "--config", str(cfg)]) == 2
    assert "unknown config key" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["task=cifar\n", "epochs=many\n", "just words\n", "batch_size=0\n"])
def test_bad_config_values(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["train", "--config", str(cfg), "--output_dir", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_missing_data_file(tmp_path, capsys):
    rc = main(["train", "--task", "iris", "--iris_path", str(tmp_path / "none.data"),
               "--output_dir", str(tmp_path / "o")])
    assert rc == 3
    rc = main(["train", "--task", "mnist3", "--output_dir", str(tmp_path / "o")])
    assert rc == 3
    capsys.readouterr()


def test_corrupt_data_file(tmp_path, capsys):
    bad = tmp_path / "iris.data"
    bad.write_text("5.1,3.5,1.4,0.2,Iris-setosa\nx,1,1,1,Iris-setosa\n")
    rc = main(["train", "--task", "iris", "--iris_path", str(bad), "--output_dir", str(tmp_path)])
    assert rc == 3
    capsys.readouterr()


def test_divergence_exit_code(tmp_path, capsys, monkeypatch):
    import rsnn_golden.cli as cli
    from rsnn_golden.trainer import DivergenceError

    def boom(*a, **k):
        raise DivergenceError("divergence: non-finite loss")
    monkeypatch.setattr(cli, "train", boom)
    assert main(["train", "--task", "xor", "--output_dir", str(tmp_path)]) == 4
    assert "divergence" in capsys.readouterr().err


def test_parse_config_text():
    assert parse_config_text("a = 1\n\n# x\nb=two # trailing\n") == {"a": "1", "b": "two"}
    run = RunConfig()
    with pytest.raises(ConfigError):
        run.update({"seed": ""})


def _write_sim_inputs(tmp_path, image: bytes, pins):
    (tmp_path / "img.bin").write_bytes(image)
    (tmp_path / "stim.txt").write_text(format_stimulus(pins))
    return ["sim", "--image", str(tmp_path / "img.bin"), "--stimulus", str(tmp_path / "stim.txt"),
            "--trace", str(tmp_path / "trace.txt"), "--vcd", str(tmp_path / "trace.vcd")]


def test_sim_zero_image_zero_stimulus(tmp_path):
    args = _write_sim_inputs(tmp_path, bytes(39), [DevicePins()] * 10)
    assert main(args) == 0
    trace = read_trace(tmp_path / "trace.txt")
    assert len(trace) == 39 + 10
    assert all(out == (0, 0, 0) for out in trace.spike_outs)
    assert parse_vcd((tmp_path / "trace.vcd").read_text()).spike_outs == trace.spike_outs


def test_sim_short_image(tmp_path, capsys):
    args = _write_sim_inputs(tmp_path, bytes(38), [DevicePins()])
    assert main(args) == 2
    assert "39" in capsys.readouterr().err


def test_sim_bad_stimulus(tmp_path, capsys):
    args = _write_sim_inputs(tmp_path, bytes(39), [DevicePins()])
    (tmp_path / "stim.txt").write_text("0 1 0 zz 1 000\n")
    assert main(args) == 2
    capsys.readouterr()


def test_sim_identity_probe_first_spike_48(tmp_path):
    image = ParameterImage.from_params(identity_probe_params())
    running = probe_pins(20)[39:]
    args = _write_sim_inputs(tmp_path, image.data, running)
    assert main(args) == 0
    outs = read_trace(tmp_path / "trace.txt").spike_outs
    first = next(t for t, o in enumerate(outs, 1) if any(o))
    assert first == 48
    assert outs[first - 1] == (1, 0, 0)


def test_sim_hex_image(tmp_path):
    image = ParameterImage.from_params(identity_probe_params())
    (tmp_path / "img.hex").write_text(image.to_hex())
    (tmp_path / "stim.txt").write_text(format_stimulus(probe_pins(20)[39:]))
    args = ["sim", "--image", str(tmp_path / "img.hex"), "--stimulus", str(tmp_path / "stim.txt"),
            "--trace", str(tmp_path / "t.txt")]
    assert main(args) == 0
    assert not (tmp_path / "trace.vcd").exists()


def test_emit_design_matches_golden(tmp_path, golden_dir):
    assert main(["emit", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "rsnn_3x3.v").read_text() == (golden_dir / "rsnn_3x3.v").read_text()


def test_emit_repeatable(tmp_path):
    assert main(["emit", "--out", str(tmp_path / "a")]) == 0
    assert main(["emit", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "rsnn_3x3.v").read_bytes() == (tmp_path / "b" / "rsnn_3x3.v").read_bytes()


def test_emit_bench_needs_trace(tmp_path, capsys):
    assert main(["emit", "--out", str(tmp_path), "--bench"]) == 2
    assert not (tmp_path / "rsnn_3x3.v").exists()
    capsys.readouterr()


def test_emit_bad_config(tmp_path, capsys):
    assert main(["emit", "--out", str(tmp_path), "--layers", "0"]) == 2
    capsys.readouterr()


def test_sim_then_emit_bench(tmp_path, golden_dir):
    image = ParameterImage.from_params(identity_probe_params())
    args = _write_sim_inputs(tmp_path, image.data, probe_pins(20)[39:])
    assert main(args) == 0
    out = tmp_path / "hw"
    assert main(["emit", "--out", str(out), "--trace", str(tmp_path / "trace.txt"), "--bench",
                 "--image", str(tmp_path / "img.bin")]) == 0
    assert (out / "tb_rsnn_3x3.v").read_text() == (golden_dir / "tb_rsnn_3x3_probe.v").read_text()
    assert ParameterImage.from_hex((out / "rsnn_3x3_params.hex").read_text()) == image


def test_emit_tampered_trace(tmp_path, capsys):
    args = _write_sim_inputs(tmp_path, bytes(39), [DevicePins(enable=1)] * 3)
    assert main(args) == 0
    path = tmp_path / "trace.txt"
    lines = path.read_text().splitlines()
    fields = lines[-1].split()
    assert fields[6] == "111"  # threshold 0 fires every enabled cycle
    fields[6] = "000"
    lines[-1] = " ".join(fields)
    path.write_text("\n".join(lines) + "\n")
    assert main(["emit", "--out", str(tmp_path / "hw"), "--trace", str(path)]) == 2
    capsys.readouterr()
