"""Rewrite the committed codegen golden files under tests/golden.

Run after an intentional change to the emitted hardware text, then review
the diff before committing.
"""

from pathlib import Path

from rsnn_golden.codegen import HwConfig, emit_hw, emit_neuron_testbench, emit_testbench, reference_lif_stimulus
from rsnn_golden.device import DevicePins, ParameterImage, load_sequence
from rsnn_golden.network import identity_probe_params
from rsnn_golden.trace import simulate

OUT = Path(__file__).resolve().parent.parent / "tests" / "golden"


def probe_trace(running_ticks=20):
    image = ParameterImage.from_params(identity_probe_params())
    run = [DevicePins(enable=1, spikeIN_reg_enable=1, spike_in=(1, 0, 0))] * running_ticks
    return simulate(load_sequence(image) + run)[0]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    cfg = HwConfig()
    files = {
        f"{cfg.stem}.v": emit_hw(cfg),
        f"tb_{cfg.stem}_probe.v": emit_testbench(probe_trace(), cfg),
        "tb_lif_reference.v": emit_neuron_testbench(reference_lif_stimulus(), name="lif_reference"),
    }
    for name, text in files.items():
        (OUT / name).write_text(text)
        print(f"wrote {OUT / name}")


if __name__ == "__main__":
    main()
