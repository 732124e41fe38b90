"""Per-tick pin/observation records, their text form, and VCD export."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .device import DevicePins, DeviceState, device_tick
from .fixedpoint import to_signed, to_unsigned
from .network import LAYERS, NEURONS, Bits


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    pins: DevicePins
    spike_out: Bits
    membranes: tuple[int, ...] | None = None


@dataclass
class SpikeTrace:
    records: list[TraceRecord] = field(default_factory=list)
    layers: int = LAYERS
    neurons: int = NEURONS

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    @property
    def spike_outs(self) -> list[Bits]:
        return [r.spike_out for r in self.records]


def simulate(pins: Iterable[DevicePins], state: DeviceState | None = None, *,
             layers: int = LAYERS, neurons: int = NEURONS) -> tuple[SpikeTrace, DeviceState]:
    """Drive the device with ``pins`` tick by tick and record everything."""
    if state is None:
        state = DeviceState.initial(layers, neurons)
    trace = SpikeTrace(layers=state.layers, neurons=state.neurons)
    for p in pins:
        state, out = device_tick(state, p)
        trace.append(TraceRecord(p, out, state.net.membranes()))
    return trace, state


# -- text form ------------------------------------------------------------
#
# One tick per line, whitespace separated:
#   reset enable load_params param_in(hex) spikeIN_reg_enable spike_in
# spike_in is written MSB first (channel 0 is the rightmost character).  A
# trace line continues with spike_out (same bit order) and, optionally, the
# membrane potentials in signed decimal, layer-major.

def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in reversed(bits))


def str_to_bits(text: str, width: int) -> Bits:
    if len(text) != width or set(text) - {"0", "1"}:
        raise TraceFormatError(f"expected {width} binary digits, got {text!r}")
    return tuple(int(c) for c in reversed(text))


def _parse_bit(text: str) -> int:
    if text not in ("0", "1"):
        raise TraceFormatError(f"expected 0 or 1, got {text!r}")
    return int(text)


def format_pins(p: DevicePins) -> str:
    return (f"{p.reset} {p.enable} {p.load_params} {p.param_in:02X} "
            f"{p.spikeIN_reg_enable} {bits_to_str(p.spike_in)}")


def _parse_pins(fields: Sequence[str], neurons: int) -> DevicePins:
    try:
        param_in = int(fields[3], 16)
    except ValueError:
        raise TraceFormatError(f"param_in {fields[3]!r} is not hex") from None
    if not 0 <= param_in <= 0xFF:
        raise TraceFormatError(f"param_in {fields[3]!r} is not a byte")
    return DevicePins(
        reset=_parse_bit(fields[0]),
        enable=_parse_bit(fields[1]),
        load_params=_parse_bit(fields[2]),
        param_in=param_in,
        spikeIN_reg_enable=_parse_bit(fields[4]),
        spike_in=str_to_bits(fields[5], neurons),
    )


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_stimulus(text: str, neurons: int = NEURONS) -> list[DevicePins]:
    pins = []
    for lineno, fields in _data_lines(text):
        if len(fields) != 6:
            raise TraceFormatError(f"line {lineno}: expected 6 fields, got {len(fields)}")
        try:
            pins.append(_parse_pins(fields, neurons))
        except TraceFormatError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
    return pins


def format_stimulus(pins: Iterable[DevicePins]) -> str:
    lines = ["# reset enable load_params param_in spikeIN_reg_enable spike_in"]
    lines.extend(format_pins(p) for p in pins)
    return "\n".join(lines) + "\n"


def format_trace(trace: SpikeTrace) -> str:
    lines = [f"# layers={trace.layers} neurons={trace.neurons}",
             "# reset enable load_params param_in spikeIN_reg_enable spike_in spike_out [membranes]"]
    for r in trace.records:
        line = f"{format_pins(r.pins)} {bits_to_str(r.spike_out)}"
        if r.membranes is not None:
            line += " " + " ".join(str(m) for m in r.membranes)
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> SpikeTrace:
    layers, neurons = LAYERS, NEURONS
    for raw in text.splitlines():
        if raw.startswith("# layers="):
            head = dict(kv.split("=") for kv in raw[1:].split())
            layers, neurons = int(head["layers"]), int(head["neurons"])
            break
    trace = SpikeTrace(layers=layers, neurons=neurons)
    n_mem = layers * neurons
    for lineno, fields in _data_lines(text):
        if len(fields) not in (7, 7 + n_mem):
            raise TraceFormatError(f"line {lineno}: expected 7 or {7 + n_mem} fields")
        try:
            pins = _parse_pins(fields, neurons)
            out = str_to_bits(fields[6], neurons)
            mem = tuple(int(v) for v in fields[7:]) or None
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        trace.append(TraceRecord(pins, out, mem))
    return trace


def read_trace(path: str | Path) -> SpikeTrace:
    return parse_trace(Path(path).read_text())


# -- value change dump ----------------------------------------------------

def _signals(trace: SpikeTrace) -> list[tuple[str, int]]:
    n = trace.neurons
    sig = [("clk", 1), ("reset", 1), ("enable", 1), ("load_params", 1), ("param_in", 8),
           ("spikeIN_reg_enable", 1), ("spike_in", n), ("spike_out", n)]
    sig += [(f"membrane_l{l}_n{k}", 8) for l in range(trace.layers) for k in range(n)]
    return sig


def _vcd_id(index: int) -> str:
    chars = [chr(33 + index % 94)]
    index //= 94
    while index:
        chars.append(chr(33 + index % 94))
        index //= 94
    return "".join(chars)


def _record_values(record: TraceRecord, trace: SpikeTrace) -> list[str]:
    p = record.pins
    vals = ["1", str(p.reset), str(p.enable), str(p.load_params), format(p.param_in, "08b"),
            str(p.spikeIN_reg_enable), bits_to_str(p.spike_in), bits_to_str(record.spike_out)]
    n_mem = trace.layers * trace.neurons
    if record.membranes is None:
        vals += ["x" * 8] * n_mem
    else:
        vals += [format(to_unsigned(m), "08b") for m in record.membranes]
    return vals


def export_vcd(trace: SpikeTrace, scope: str = "rsnn_top") -> str:
    """Dump ``trace`` as VCD text, one timestamp per tick (1 ns apart).

    ``clk`` is shown high throughout: each timestamp already is one rising
    edge, and every other value is the one sampled/produced at that edge.
    """
    if not trace.records:
        raise ValueError("empty trace")
    signals = _signals(trace)
    ids = [_vcd_id(i) for i in range(len(signals))]
    out = ["$version rsnn_golden $end", "$timescale 1ns $end", f"$scope module {scope} $end"]
    for (name, width), ident in zip(signals, ids):
        suffix = f" [{width - 1}:0]" if width > 1 else ""
        out.append(f"$var wire {width} {ident} {name}{suffix} $end")
    out += ["$upscope $end", "$enddefinitions $end"]

    def change(width: int, ident: str, value: str) -> str:
        return f"b{value} {ident}" if width > 1 else f"{value}{ident}"

    prev = _record_values(trace.records[0], trace)
    out += ["#0", "$dumpvars"]
    out += [change(w, i, v) for (_, w), i, v in zip(signals, ids, prev)]
    out.append("$end")
    for t, record in enumerate(trace.records[1:], 1):
        vals = _record_values(record, trace)
        out.append(f"#{t}")
        out += [change(w, i, v) for (_, w), i, v, old in zip(signals, ids, vals, prev) if v != old]
        prev = vals
    return "\n".join(out) + "\n"


def parse_vcd(text: str) -> SpikeTrace:
    """Read back what :func:`export_vcd` writes (not a general VCD parser)."""
    names: dict[str, str] = {}
    widths: dict[str, int] = {}
    lines = iter(text.splitlines())
    for line in lines:
        tok = line.split()
        if tok[:1] == ["$var"]:
            names[tok[3]] = tok[4]
            widths[tok[4]] = int(tok[2])
        elif tok[:1] == ["$enddefinitions"]:
            break
    neurons = widths["spike_out"]
    layers = sum(1 for n in widths if n.startswith("membrane_")) // neurons

    current: dict[str, str] = {}
    snapshots: list[dict[str, str]] = []
    for line in lines:
        line = line.strip()
        if not line or line in ("$dumpvars", "$end"):
            continue
        if line.startswith("#"):
            if current:
                snapshots.append(dict(current))
            continue
        if line.startswith("b"):
            value, ident = line[1:].split()
        else:
            value, ident = line[0], line[1:]
        current[names[ident]] = value
    snapshots.append(dict(current))

    trace = SpikeTrace(layers=layers, neurons=neurons)
    mem_names = [f"membrane_l{l}_n{k}" for l in range(layers) for k in range(neurons)]
    for snap in snapshots:
        pins = DevicePins(int(snap["reset"]), int(snap["enable"]), int(snap["load_params"]),
                          int(snap["param_in"], 2), int(snap["spikeIN_reg_enable"]),
                          str_to_bits(snap["spike_in"], neurons))
        if "x" in snap[mem_names[0]]:
            mem = None
        else:
            mem = tuple(to_signed(int(snap[m], 2)) for m in mem_names)
        trace.append(TraceRecord(pins, str_to_bits(snap["spike_out"], neurons), mem))
    return trace
