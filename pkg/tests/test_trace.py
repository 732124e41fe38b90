import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import probe_pins, random_image, random_pins
from rsnn_golden.device import DevicePins
from rsnn_golden.trace import (
    SpikeTrace,
    TraceFormatError,
    TraceRecord,
    export_vcd,
    format_stimulus,
    format_trace,
    parse_stimulus,
    parse_trace,
    parse_vcd,
    simulate,
)


def _zero_record(out=(0, 0, 0)):
    return TraceRecord(DevicePins(), out, (0,) * 9)


def _change_blocks(text):
    body = text.split("$enddefinitions $end", 1)[1]
    blocks, current = {}, None
    for line in body.splitlines():
        if line.startswith("#"):
            current = int(line[1:])
            blocks[current] = []
        elif current is not None and line not in ("$dumpvars", "$end") and current > 0:
            blocks[current].append(line)
    return blocks


def test_vcd_empty_trace():
    with pytest.raises(ValueError, match="empty trace"):
        export_vcd(SpikeTrace())


def test_vcd_single_tick_has_no_change_blocks():
    text = export_vcd(SpikeTrace([_zero_record()]))
    assert "$timescale 1ns $end" in text
    assert "$dumpvars" in text
    assert _change_blocks(text) == {0: []}
    for name in ("clk", "reset", "enable", "load_params", "spikeIN_reg_enable",
                 "spike_in [2:0]", "spike_out [2:0]", "membrane_l2_n2 [7:0]"):
        assert f" {name} $end" in text


def test_vcd_single_spike_change():
    text = export_vcd(SpikeTrace([_zero_record(), _zero_record((1, 0, 0))]))
    spike_id = next(l.split()[3] for l in text.splitlines() if l.endswith(" spike_out [2:0] $end"))
    blocks = _change_blocks(text)
    assert blocks[1] == [f"b001 {spike_id}"]


@pytest.mark.parametrize("seed", range(3))
def test_vcd_round_trip(seed):
    rng = random.Random(seed)
    trace, _ = simulate(random_pins(rng, 300, random_image(rng)))
    assert parse_vcd(export_vcd(trace)).records == trace.records


def test_vcd_round_trip_without_membranes():
    trace = SpikeTrace([TraceRecord(DevicePins(enable=1), (0, 1, 0)), TraceRecord(DevicePins(), (0, 0, 0))])
    assert parse_vcd(export_vcd(trace)).records == trace.records


def test_trace_text_round_trip():
    trace, _ = simulate(probe_pins())
    again = parse_trace(format_trace(trace))
    assert again.records == trace.records


def test_stimulus_parsing():
    text = "# comment\n0 1 0 00 1 001  # channel 0\n\n1 0 1 ff 0 110\n"
    pins = parse_stimulus(text)
    assert pins == [DevicePins(0, 1, 0, 0, 1, (1, 0, 0)), DevicePins(1, 0, 1, 255, 0, (0, 1, 1))]
    assert parse_stimulus(format_stimulus(pins)) == pins
    with pytest.raises(TraceFormatError):
        parse_stimulus("0 1 0 00 1\n")
    with pytest.raises(TraceFormatError):
        parse_stimulus("0 1 0 zz 1 000\n")
    with pytest.raises(TraceFormatError):
        parse_stimulus("0 1 0 00 1 0012\n")
