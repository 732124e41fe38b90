"""Command-line driver: ``train``, ``sim`` and ``emit``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric divergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .codegen import CodegenError, HwConfig, emit_hw, emit_testbench
from .datasets import DataError, LabeledSet, load_idx, load_iris_csv, split, xor_set
from .device import ParameterImage, load_sequence
from .trace import TraceFormatError, export_vcd, format_trace, parse_stimulus, read_trace, simulate
from .trainer import (
    TASK_DEFAULTS,
    DivergenceError,
    TrainConfig,
    evaluate,
    get_task,
    quantize,
    save_artifacts,
    task_config,
    train,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGENCE = 0, 2, 3, 4

MNIST_CLASSES = {"mnist3": (0, 1, 2), "mnist2": (0, 1)}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a ``train`` run depends on.  ``None`` means "task default"."""
    task: str = "xor"
    seed: int = 0
    timesteps: int | None = None
    epochs: int | None = None
    lr: float | None = None
    slope: float | None = None
    batch_size: int | None = None
    logit_scale: float | None = None
    test_fraction: float = 0.3
    iris_path: str | None = None
    mnist_images: str | None = None
    mnist_labels: str | None = None
    train_limit: int | None = None
    output_dir: str = "runs/out"

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def update(self, values: dict[str, str]) -> None:
        types = {f.name: f.type for f in fields(self)}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(self, key, _coerce(key, raw, types[key]))

    def train_config(self) -> TrainConfig:
        if self.task not in TASK_DEFAULTS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {sorted(TASK_DEFAULTS)}")
        overrides = {k: getattr(self, k) for k in
                     ("timesteps", "epochs", "lr", "slope", "batch_size", "logit_scale")
                     if getattr(self, k) is not None}
        overrides.setdefault("timesteps", get_task(self.task).timesteps)
        try:
            return task_config(self.task, seed=self.seed, **overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def resolved(self) -> str:
        """key=value text with task defaults filled in."""
        cfg = self.train_config()
        lines = []
        for key in self.keys():
            value = getattr(self, key)
            if value is None and hasattr(cfg, key):
                value = getattr(cfg, key)
            if value is not None:
                lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def _coerce(key: str, raw: str, annotation: str):
    raw = raw.strip()
    if raw.lower() in ("", "none"):
        if key in ("task", "output_dir", "seed", "test_fraction"):
            raise ConfigError(f"{key} needs a value")
        return None
    try:
        if "int" in annotation:
            return int(raw)
        if "float" in annotation:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


# -- train ----------------------------------------------------------------

def load_task_data(run: RunConfig) -> tuple[LabeledSet, LabeledSet]:
    if run.task == "xor":
        data = xor_set()
        return data, data
    if run.task == "iris":
        if not run.iris_path:
            raise DataError("iris needs iris_path")
        data = load_iris_csv(run.iris_path)
    else:
        if not (run.mnist_images and run.mnist_labels):
            raise DataError(f"{run.task} needs mnist_images and mnist_labels")
        data = load_idx(run.mnist_images, run.mnist_labels).filter(MNIST_CLASSES[run.task])
    train_set, test_set = split(data, run.test_fraction, run.seed)
    if run.train_limit is not None:
        train_set = train_set.head(run.train_limit)
    return train_set, test_set


def cmd_train(run: RunConfig) -> int:
    cfg = run.train_config()
    try:
        train_set, test_set = load_task_data(run)
    except (OSError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    out = Path(run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.cfg").write_text(run.resolved())
    try:
        model = train(run.task, cfg, train_set)
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    save_artifacts(out, model, cfg)
    params, _ = quantize(model)
    float_acc = evaluate(model, test_set, run.task)
    quant_acc = evaluate(params, test_set, run.task, cfg.timesteps)
    line = f"task={run.task} float_acc={float_acc:.4f} quant_acc={quant_acc:.4f} seed={run.seed}"
    (out / "metrics.txt").write_text(line + "\n")
    print(line)
    return EXIT_OK


# -- sim / emit -----------------------------------------------------------

def cmd_sim(image_path: str, stimulus_path: str, trace_path: str, vcd_path: str | None,
            layers: int = 3, neurons: int = 3) -> int:
    try:
        image = ParameterImage.read(image_path, layers, neurons)
        pins = parse_stimulus(Path(stimulus_path).read_text(), neurons)
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TraceFormatError as exc:
        print(f"config error: stimulus {stimulus_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: image {image_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    trace, _ = simulate(load_sequence(image) + pins, layers=layers, neurons=neurons)
    Path(trace_path).write_text(format_trace(trace))
    if vcd_path:
        Path(vcd_path).write_text(export_vcd(trace))
    return EXIT_OK


def cmd_emit(config: HwConfig, out_dir: str, image_path: str | None = None,
             trace_path: str | None = None, bench: bool = False) -> int:
    if bench and not trace_path:
        print("config error: a bench needs --trace", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    try:
        image = ParameterImage.read(image_path, config.layers, config.neurons) if image_path else None
        trace = read_trace(trace_path) if trace_path else None
        bench_text = emit_testbench(trace, config) if trace is not None else None
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, CodegenError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{config.stem}.v").write_text(emit_hw(config))
    if image is not None:
        (out / f"{config.stem}_params.hex").write_text(image.to_hex())
    if bench_text is not None:
        (out / f"tb_{config.stem}.v").write_text(bench_text)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train, quantize and evaluate one task")
    tr.add_argument("--config", help="key=value file; flags override it")
    for key in RunConfig.keys():
        tr.add_argument(f"--{key}", dest=f"opt_{key}", metavar=key.upper())

    sim = sub.add_parser("sim", help="load an image, replay a stimulus, record a trace")
    sim.add_argument("--image", required=True, help="parameter image (.bin or .hex)")
    sim.add_argument("--stimulus", required=True, help="pin vectors, one per line")
    sim.add_argument("--trace", required=True, help="output trace file")
    sim.add_argument("--vcd", help="output value change dump")

    em = sub.add_parser("emit", help="write the Verilog design and optionally a bench")
    em.add_argument("--layers", type=int, default=3)
    em.add_argument("--neurons", type=int, default=3)
    em.add_argument("--out", required=True, help="output directory")
    em.add_argument("--image", help="also write this image as <stem>_params.hex")
    em.add_argument("--trace", help="trace to replay in a self-checking bench")
    em.add_argument("--bench", action="store_true", help="require a bench (needs --trace)")
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    run = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        run.update(parse_config_text(text))
    run.update({k[4:]: v for k, v in vars(args).items() if k.startswith("opt_") and v is not None})
    return run


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(run_config_from_args(args))
        if args.command == "sim":
            return cmd_sim(args.image, args.stimulus, args.trace, args.vcd)
        return cmd_emit(HwConfig(args.layers, args.neurons), args.out, args.image, args.trace,
                        args.bench)
    except (ConfigError, CodegenError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
