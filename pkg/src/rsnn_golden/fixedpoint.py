"""Saturating two's-complement arithmetic used by the neuron datapath.

Only the two widths the hardware has are modelled: 8-bit registers and the
10-bit ``potential_update`` wire.  Values are plain Python ints holding the
signed interpretation.
"""

I8_MIN, I8_MAX = -128, 127
I10_MIN, I10_MAX = -512, 511


def to_signed(value: int, bits: int = 8) -> int:
    """Interpret the low ``bits`` bits of ``value`` as two's complement."""
    mask = (1 << bits) - 1
    value &= mask
    if value & (1 << (bits - 1)):
        value -= 1 << bits
    return value


def to_unsigned(value: int, bits: int = 8) -> int:
    """Bit pattern of a signed value, as an unsigned int."""
    return value & ((1 << bits) - 1)


def wrap8(value: int) -> int:
    """Plain 8-bit register assignment: keep the low byte, no clipping."""
    return to_signed(value, 8)


def saturate8(x: int) -> int:
    if x < I8_MIN:
        return I8_MIN
    if x > I8_MAX:
        return I8_MAX
    return x


def leak_term(membrane: int, decay: int) -> int:
    """Constant leak toward zero.

    A negative membrane gets ``+decay``, a non-negative one ``-decay``.  With a
    negative decay this pushes the membrane away from zero; that is what the
    RTL does and it is kept.
    """
    return decay if membrane < 0 else -decay


def potential_update(membrane: int, input_current: int, decay: int, feedback: int = 0) -> int:
    """Exact 10-bit sum ``membrane + input + leak + feedback`` (not yet saturated)."""
    return membrane + input_current + leak_term(membrane, decay) + feedback
