"""Verilog-2001 generation for the network and self-checking test benches.

The emitted RTL is a transcription of the golden model: same update order,
widths, saturation points and FIPO byte order.  Benches replay a recorded
trace one stimulus vector per clock and compare ``spike_out`` after every
rising edge; each expected value is re-simulated before it is written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .device import SHARED_BYTES, DeviceState, device_tick, image_size
from .fixedpoint import to_unsigned
from .neuron import LifState, NeuronParams, lif_step
from .trace import SpikeTrace, bits_to_str


class CodegenError(ValueError):
    pass


@dataclass(frozen=True)
class HwConfig:
    layers: int = 3
    neurons: int = 3
    data_width: int = 8

    def __post_init__(self) -> None:
        if self.layers < 1 or self.neurons < 1:
            raise CodegenError("layers and neurons must be >= 1")
        if self.data_width != 8:
            raise CodegenError("only 8-bit data is supported")

    @property
    def image_bytes(self) -> int:
        return image_size(self.layers, self.neurons)

    @property
    def acc_width(self) -> int:
        # wide enough for neurons * [-128, 127], never below the 10-bit update wire
        return max(10, 8 + math.ceil(math.log2(self.neurons)) if self.neurons > 1 else 10)

    @property
    def stem(self) -> str:
        return f"rsnn_{self.layers}x{self.neurons}"


NEURON_LIF = """\
// Leaky integrate-and-fire neuron.  Threshold check on the pre-update
// membrane; on a spike the membrane drops by the threshold (8-bit wrap) and
// the refractory counter loads.
module LeakyIntegrateFireNeuron(
    input clk,
    input reset,
    input enable,
    input [7:0] input_current,
    input [7:0] threshold,
    input [7:0] decay,
    input [7:0] refractory_period,
    output reg spike_out
);

    reg [7:0] membrane_potential = 8'b0;
    reg [7:0] refractory_counter = 8'b0;
    wire signed [9:0] potential_update;

    initial spike_out = 1'b0;

    assign potential_update = $signed({membrane_potential[7], membrane_potential[7], membrane_potential})
        + $signed({input_current[7], input_current[7], input_current})
        + (membrane_potential[7] ? $signed({decay[7], decay[7], decay})
                                 : -$signed({decay[7], decay[7], decay}));

    always @(posedge clk or posedge reset) begin
        spike_out <= 1'b0;
        if (reset) begin
            membrane_potential <= 8'b0;
            refractory_counter <= 8'b0;
        end else if (enable) begin
            if (refractory_counter > 0) begin
                refractory_counter <= refractory_counter - 1;
            end else begin
                if (potential_update[9] && potential_update < -128)
                    membrane_potential <= 8'b1000_0000;
                else if (potential_update > 127)
                    membrane_potential <= 8'b0111_1111;
                else
                    membrane_potential <= potential_update[7:0];
                if ($signed(membrane_potential) >= $signed(threshold)) begin
                    spike_out <= 1'b1;
                    membrane_potential <= $signed(membrane_potential) - $signed(threshold);
                    refractory_counter <= refractory_period;
                end
            end
        end
    end
endmodule
"""

NEURON_RLIF = """\
// Recurrent LIF neuron: its own registered spike adds feedback_scale to the
// next update.  Feedback, like the input, is dropped on a spike cycle.
module RecurrentLIFNeuron(
    input clk,
    input reset,
    input enable,
    input [7:0] input_current,
    input [7:0] threshold,
    input [7:0] decay,
    input [7:0] refractory_period,
    input [7:0] feedback_scale,
    output reg spike_out,
    output [7:0] membrane
);

    reg [7:0] membrane_potential = 8'b0;
    reg [7:0] refractory_counter = 8'b0;
    wire signed [9:0] potential_update;

    initial spike_out = 1'b0;
    assign membrane = membrane_potential;

    assign potential_update = $signed({membrane_potential[7], membrane_potential[7], membrane_potential})
        + $signed({input_current[7], input_current[7], input_current})
        + (membrane_potential[7] ? $signed({decay[7], decay[7], decay})
                                 : -$signed({decay[7], decay[7], decay}))
        + (spike_out ? $signed({feedback_scale[7], feedback_scale[7], feedback_scale})
                     : $signed(10'd0));

    always @(posedge clk or posedge reset) begin
        spike_out <= 1'b0;
        if (reset) begin
            membrane_potential <= 8'b0;
            refractory_counter <= 8'b0;
        end else if (enable) begin
            if (refractory_counter > 0) begin
                refractory_counter <= refractory_counter - 1;
            end else begin
                if (potential_update[9] && potential_update < -128)
                    membrane_potential <= 8'b1000_0000;
                else if (potential_update > 127)
                    membrane_potential <= 8'b0111_1111;
                else
                    membrane_potential <= potential_update[7:0];
                if ($signed(membrane_potential) >= $signed(threshold)) begin
                    spike_out <= 1'b1;
                    membrane_potential <= $signed(membrane_potential) - $signed(threshold);
                    refractory_counter <= refractory_period;
                end
            end
        end
    end
endmodule
"""

LAYER = """\
// N recurrent neurons sharing threshold/decay/refractory/feedback.  Input
// current of neuron n: spike-gated sum of its N weights, accumulated at
// ACC_W bits and saturated once to 8 bits.  Weight i of neuron n lives in
// byte n*N+i of the weights bus.
module RLIFLayer #(
    parameter N = 3,
    parameter ACC_W = 10
) (
    input clk,
    input reset,
    input enable,
    input [N-1:0] spikes_in,
    input [N*N*8-1:0] weights,
    input [7:0] threshold,
    input [7:0] decay,
    input [7:0] refractory_period,
    input [7:0] feedback_scale,
    output [N-1:0] spikes_out,
    output [N*8-1:0] membranes
);

    genvar n;
    generate
        for (n = 0; n < N; n = n + 1) begin : neuron
            reg signed [ACC_W-1:0] acc;
            wire [7:0] current;
            integer i;

            always @* begin
                acc = {ACC_W{1'b0}};
                for (i = 0; i < N; i = i + 1)
                    if (spikes_in[i])
                        acc = acc + $signed({{(ACC_W-8){weights[(n*N+i)*8+7]}}, weights[(n*N+i)*8 +: 8]});
            end

            assign current = (acc > 127) ? 8'h7F :
                             (acc < -128) ? 8'h80 : acc[7:0];

            RecurrentLIFNeuron u_neuron (
                .clk(clk),
                .reset(reset),
                .enable(enable),
                .input_current(current),
                .threshold(threshold),
                .decay(decay),
                .refractory_period(refractory_period),
                .feedback_scale(feedback_scale),
                .spike_out(spikes_out[n]),
                .membrane(membranes[n*8 +: 8])
            );
        end
    endgenerate
endmodule
"""

NETWORK = """\
// L fully connected layers.  Each layer's spikes are the neurons' registered
// outputs, so layer l sees layer l-1 one clock late.  Parameter byte j of the
// flat bus is params[j*8 +: 8]; per layer: N*N weights, threshold, decay,
// refractory_period, feedback_scale.
module RSNN #(
    parameter L = 3,
    parameter N = 3,
    parameter ACC_W = 10
) (
    input clk,
    input reset,
    input enable,
    input [N-1:0] spike_in,
    input [L*(N*N+4)*8-1:0] params,
    output [N-1:0] spike_out,
    output [L*N*8-1:0] membranes
);

    localparam LB = N*N+4;

    wire [N-1:0] spikes [0:L];
    assign spikes[0] = spike_in;
    assign spike_out = spikes[L];

    genvar l;
    generate
        for (l = 0; l < L; l = l + 1) begin : layer
            RLIFLayer #(.N(N), .ACC_W(ACC_W)) u_layer (
                .clk(clk),
                .reset(reset),
                .enable(enable),
                .spikes_in(spikes[l]),
                .weights(params[l*LB*8 +: N*N*8]),
                .threshold(params[(l*LB+N*N)*8 +: 8]),
                .decay(params[(l*LB+N*N+1)*8 +: 8]),
                .refractory_period(params[(l*LB+N*N+2)*8 +: 8]),
                .feedback_scale(params[(l*LB+N*N+3)*8 +: 8]),
                .spikes_out(spikes[l+1]),
                .membranes(membranes[l*N*8 +: N*8])
            );
        end
    endgenerate
endmodule
"""

FIPO = """\
// First-in parallel-out parameter store.  Each shift moves every byte one
// slot toward 0 and writes data_in at the top, so after DEPTH shifts the
// first byte loaded is byte 0 of data_out.
module FIPOMemory #(
    parameter DEPTH = 39
) (
    input clk,
    input reset,
    input shift_en,
    input [7:0] data_in,
    output reg [DEPTH*8-1:0] data_out
);

    initial data_out = {DEPTH*8{1'b0}};

    always @(posedge clk or posedge reset) begin
        if (reset)
            data_out <= {DEPTH*8{1'b0}};
        else if (shift_en)
            data_out <= {data_in, data_out[DEPTH*8-1:8]};
    end
endmodule
"""

CONTROL = """\
// Load controller: counts bytes while load_params is high in STARTUP and
// moves to RUNNING on the DEPTH-th byte.  A long load_params pulse is
// harmless; only reset returns to STARTUP.
module ControlMemory #(
    parameter DEPTH = 39,
    parameter CW = 6
) (
    input clk,
    input reset,
    input load_params,
    output shift_en,
    output running
);

    localparam STARTUP = 1'b0;
    localparam RUNNING = 1'b1;

    reg state = STARTUP;
    reg [CW-1:0] count = {CW{1'b0}};

    assign running = (state == RUNNING);
    assign shift_en = load_params && (state == STARTUP);

    always @(posedge clk or posedge reset) begin
        if (reset) begin
            state <= STARTUP;
            count <= {CW{1'b0}};
        end else if (shift_en) begin
            count <= count + 1'b1;
            if (count == DEPTH-1)
                state <= RUNNING;
        end
    end
endmodule
"""

REGN = """\
// Register with load enable.
module RegN #(
    parameter W = 3
) (
    input clk,
    input reset,
    input load,
    input [W-1:0] d,
    output reg [W-1:0] q
);

    initial q = {W{1'b0}};

    always @(posedge clk or posedge reset) begin
        if (reset)
            q <= {W{1'b0}};
        else if (load)
            q <= d;
    end
endmodule
"""

SYNC = """\
// Two-flop synchronizer: a value sampled on edge t reaches q by edge t+1
// and is acted on at edge t+2.
module Synchronizer #(
    parameter W = 1
) (
    input clk,
    input reset,
    input [W-1:0] d,
    output reg [W-1:0] q
);

    reg [W-1:0] meta = {W{1'b0}};

    initial q = {W{1'b0}};

    always @(posedge clk or posedge reset) begin
        if (reset) begin
            meta <= {W{1'b0}};
            q <= {W{1'b0}};
        end else begin
            meta <= d;
            q <= meta;
        end
    end
endmodule
"""


def _top(cfg: HwConfig) -> str:
    n, depth = cfg.neurons, cfg.image_bytes
    cw = max(1, depth.bit_length())
    return f"""\
// Top level: startup mode loads {depth} parameter bytes through param_in
// (one per clock while load_params is high); running mode latches the
// synchronized spike_in whenever the synchronized spikeIN_reg_enable is high
// and steps the network while enable is high.
module {cfg.stem}_top (
    input clk,
    input reset,
    input enable,
    input load_params,
    input [7:0] param_in,
    input spikeIN_reg_enable,
    input [{n - 1}:0] spike_in,
    output [{n - 1}:0] spike_out
);

    wire shift_en;
    wire running;
    wire [{depth}*8-1:0] params;
    wire [{n - 1}:0] spike_in_sync;
    wire reg_enable_sync;
    wire [{n - 1}:0] spike_in_reg;
    wire [{cfg.layers * n}*8-1:0] membranes;

    ControlMemory #(.DEPTH({depth}), .CW({cw})) u_control (
        .clk(clk),
        .reset(reset),
        .load_params(load_params),
        .shift_en(shift_en),
        .running(running)
    );

    FIPOMemory #(.DEPTH({depth})) u_fipo (
        .clk(clk),
        .reset(reset),
        .shift_en(shift_en),
        .data_in(param_in),
        .data_out(params)
    );

    Synchronizer #(.W({n})) u_sync_spikes (
        .clk(clk),
        .reset(reset),
        .d(spike_in),
        .q(spike_in_sync)
    );

    Synchronizer #(.W(1)) u_sync_reg_enable (
        .clk(clk),
        .reset(reset),
        .d(spikeIN_reg_enable),
        .q(reg_enable_sync)
    );

    RegN #(.W({n})) u_spike_in_reg (
        .clk(clk),
        .reset(reset),
        .load(running && reg_enable_sync),
        .d(spike_in_sync),
        .q(spike_in_reg)
    );

    RSNN #(.L({cfg.layers}), .N({n}), .ACC_W({cfg.acc_width})) u_rsnn (
        .clk(clk),
        .reset(reset),
        .enable(enable && running),
        .spike_in(spike_in_reg),
        .params(params),
        .spike_out(spike_out),
        .membranes(membranes)
    );
endmodule
"""


def _header(cfg: HwConfig) -> str:
    n = cfg.neurons
    return f"""\
// {cfg.stem}: recurrent spiking network, {cfg.layers} layer(s) x {n} neuron(s), 8-bit data.
// Generated by rsnn_golden.codegen; do not edit by hand.
//
// Parameter image: {cfg.image_bytes} bytes, loaded first byte first.  Layer-major;
// per layer {n * n} weights (neuron n's weights from inputs 0..{n - 1}, neuron by
// neuron), then threshold, decay, refractory_period, feedback_scale.
// All values two's complement except refractory_period (unsigned).
`timescale 1ns / 1ps
"""


def emit_hw(config: HwConfig = HwConfig()) -> str:
    parts = [_header(config), NEURON_LIF, NEURON_RLIF, LAYER, NETWORK, FIPO, CONTROL, REGN,
             SYNC, _top(config)]
    return "\n".join(parts)


def _check_trace(trace: SpikeTrace, config: HwConfig) -> list:
    if not trace.records:
        raise CodegenError("empty trace")
    if (trace.layers, trace.neurons) != (config.layers, config.neurons):
        raise CodegenError(f"trace is for {trace.layers}x{trace.neurons}, config is "
                           f"{config.layers}x{config.neurons}")
    state = DeviceState.initial(config.layers, config.neurons)
    expected = []
    for t, rec in enumerate(trace.records):
        state, out = device_tick(state, rec.pins)
        if tuple(out) != tuple(rec.spike_out):
            raise CodegenError(f"tick {t}: trace records spike_out={bits_to_str(rec.spike_out)}, "
                               f"golden model gives {bits_to_str(out)}")
        expected.append(out)
    return expected


def emit_testbench(trace: SpikeTrace, config: HwConfig = HwConfig()) -> str:
    """Self-checking bench for ``<stem>_top`` replaying ``trace``.

    The trace must start from the power-up state (all registers zero).
    """
    expected = _check_trace(trace, config)
    n = config.neurons
    top = f"{config.stem}_top"
    lines = [
        f"// Self-checking bench for {top}: {len(trace)} tick(s) replayed from a golden-model trace.",
        "// One stimulus vector per clock period, applied 1 ns after the rising edge;",
        "// spike_out is compared 1 ns after each rising edge.",
        "`timescale 1ns / 1ps",
        f"module tb_{top};",
        "    reg clk = 1'b0;",
        "    reg reset = 1'b0;",
        "    reg enable = 1'b0;",
        "    reg load_params = 1'b0;",
        "    reg [7:0] param_in = 8'h00;",
        "    reg spikeIN_reg_enable = 1'b0;",
        f"    reg [{n - 1}:0] spike_in = {n}'b0;",
        f"    wire [{n - 1}:0] spike_out;",
        "    integer first_fail = -1;",
        "",
        f"    {top} dut (.clk(clk), .reset(reset), .enable(enable), .load_params(load_params),",
        "        .param_in(param_in), .spikeIN_reg_enable(spikeIN_reg_enable),",
        "        .spike_in(spike_in), .spike_out(spike_out));",
        "",
        "    always #5 clk = ~clk;",
        "",
        "    task tick(input r, input e, input lp, input [7:0] pi, input sre,",
        f"              input [{n - 1}:0] si, input [{n - 1}:0] want, input integer t);",
        "        begin",
        "            reset = r; enable = e; load_params = lp; param_in = pi;",
        "            spikeIN_reg_enable = sre; spike_in = si;",
        "            @(posedge clk); #1;",
        "            if (spike_out !== want) begin",
        "                $display(\"tick %0d: spike_out=%b expected %b\", t, spike_out, want);",
        "                if (first_fail < 0) first_fail = t;",
        "            end",
        "        end",
        "    endtask",
        "",
        "    initial begin",
    ]
    for t, (rec, out) in enumerate(zip(trace.records, expected)):
        p = rec.pins
        lines.append(f"        tick(1'b{p.reset}, 1'b{p.enable}, 1'b{p.load_params}, 8'h{p.param_in:02X}, "
                     f"1'b{p.spikeIN_reg_enable}, {n}'b{bits_to_str(p.spike_in)}, "
                     f"{n}'b{bits_to_str(out)}, {t});")
    lines += [
        "        if (first_fail < 0) $display(\"TB_RESULT: PASS\");",
        "        else $display(\"TB_RESULT: FAIL %0d\", first_fail);",
        "        $finish;",
        "    end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"


# -- single neuron benches ------------------------------------------------

@dataclass(frozen=True)
class NeuronStimulus:
    reset: int
    enable: int
    input_current: int
    params: NeuronParams


def neuron_spikes(stimulus: Sequence[NeuronStimulus]) -> list[int]:
    """spike_out of the plain LIF neuron after each edge, from power-up."""
    state = LifState()
    out = []
    for s in stimulus:
        state = lif_step(state, s.input_current, s.params, s.enable, s.reset)
        out.append(state.spike_reg)
    return out


def emit_neuron_testbench(stimulus: Sequence[NeuronStimulus], name: str = "lif") -> str:
    """Self-checking bench driving ``LeakyIntegrateFireNeuron`` directly."""
    if not stimulus:
        raise CodegenError("empty stimulus")
    expected = neuron_spikes(stimulus)
    lines = [
        f"// Self-checking bench for LeakyIntegrateFireNeuron: {len(stimulus)} clock(s).",
        "// One stimulus vector per clock period, applied 1 ns after the rising edge;",
        "// spike_out is compared 1 ns after each rising edge.",
        "`timescale 1ns / 1ps",
        f"module tb_{name};",
        "    reg clk = 1'b0;",
        "    reg reset = 1'b0;",
        "    reg enable = 1'b0;",
        "    reg [7:0] input_current = 8'h00;",
        "    reg [7:0] threshold = 8'h00;",
        "    reg [7:0] decay = 8'h00;",
        "    reg [7:0] refractory_period = 8'h00;",
        "    wire spike_out;",
        "    integer first_fail = -1;",
        "",
        "    LeakyIntegrateFireNeuron uut (.clk(clk), .reset(reset), .enable(enable),",
        "        .input_current(input_current), .threshold(threshold), .decay(decay),",
        "        .refractory_period(refractory_period), .spike_out(spike_out));",
        "",
        "    always #5 clk = ~clk;",
        "",
        "    task tick(input r, input e, input [7:0] ic, input [7:0] th, input [7:0] dc,",
        "              input [7:0] rp, input want, input integer t);",
        "        begin",
        "            reset = r; enable = e; input_current = ic;",
        "            threshold = th; decay = dc; refractory_period = rp;",
        "            @(posedge clk); #1;",
        "            if (spike_out !== want) begin",
        "                $display(\"tick %0d: spike_out=%b expected %b\", t, spike_out, want);",
        "                if (first_fail < 0) first_fail = t;",
        "            end",
        "        end",
        "    endtask",
        "",
        "    initial begin",
    ]
    for t, (s, out) in enumerate(zip(stimulus, expected)):
        p = s.params
        lines.append(f"        tick(1'b{s.reset}, 1'b{s.enable}, 8'h{to_unsigned(s.input_current):02X}, "
                     f"8'h{to_unsigned(p.threshold):02X}, 8'h{to_unsigned(p.decay):02X}, "
                     f"8'h{p.refractory_period:02X}, 1'b{out}, {t});")
    lines += [
        "        if (first_fail < 0) $display(\"TB_RESULT: PASS\");",
        "        else $display(\"TB_RESULT: FAIL %0d\", first_fail);",
        "        $finish;",
        "    end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"


def reference_lif_stimulus(tail: int = 500) -> list[NeuronStimulus]:
    """The classic LIF bench schedule (20 ns clock, edges at 10 + 20k ns)
    resampled to one vector per rising edge.

    threshold=127, decay=1, refractory_period=10.  Held segments, in edges:
    reset 1; then current 10 x2, 60 x6 (enabled), 60 x2 disabled, 60 x1,
    30 x5, disabled x2, 75 x3, reset x2, 75 x2, 15 x5, disabled x2, 15 x3,
    then current 5 for ``tail`` edges (the original waits up to 10 us for a
    spike).
    """
    p = NeuronParams(threshold=127, decay=1, refractory_period=10)
    segments = [  # (edges, reset, enable, current)
        (1, 1, 0, 0),
        (2, 0, 1, 10),
        (6, 0, 1, 60),
        (2, 0, 0, 60),
        (1, 0, 1, 60),
        (5, 0, 1, 30),
        (2, 0, 0, 30),
        (3, 0, 1, 75),
        (2, 1, 1, 75),
        (2, 0, 1, 75),
        (5, 0, 1, 15),
        (2, 0, 0, 15),
        (3, 0, 1, 15),
        (tail, 0, 1, 5),
    ]
    return [NeuronStimulus(r, e, c, p) for count, r, e, c in segments for _ in range(count)]
