"""Per-agent encoder and per-neighbor decoder state machines.

Only grid indices travel on the wire; both ends advance an identical
quantization-range recursion (recenter on the last quantized value, shrink
the width along the length schedule), so the decoder reconstructs the
encoder's output bit-exactly as long as delivery is lossless and in order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .quantizer import (
    CodecError,
    Interval,
    QuantizerSpec,
    SaturationError,
    dequantize_vector,
    quantize_vector,
)


class DesynchronizationError(RuntimeError):
    """Frame step does not match the tracked range state (fatal by design)."""


class EncoderSaturationError(SaturationError):
    """Saturation with agent/step context attached."""

    def __init__(self, agent_id, step, coordinates, clamped):
        super().__init__(
            f"agent {agent_id} saturated at step {step}, coordinates {coordinates}",
            clamped=clamped,
            coordinates=coordinates,
        )
        self.agent_id = agent_id
        self.step = step


@dataclass(frozen=True)
class LengthSchedule:
    """Range length l(k) = l0 * exp(-decay_rate * period * k)."""

    l0: float
    decay_rate: float
    period: float

    def __post_init__(self):
        if self.l0 <= 0 or self.decay_rate <= 0 or self.period <= 0:
            raise ValueError("schedule parameters must be positive")

    @classmethod
    def from_step_decay(cls, l0: float, step_decay: float, period: float):
        """Schedule given directly as l(k) = l0 * exp(-step_decay * k)."""
        return cls(l0=l0, decay_rate=step_decay / period, period=period)

    @property
    def step_decay(self) -> float:
        return self.decay_rate * self.period

    def length(self, k: int) -> float:
        return self.l0 * math.exp(-self.step_decay * k)


@dataclass(frozen=True)
class RangeState:
    """Tracked quantization range: center +- half_width at sampling step k."""

    center: np.ndarray
    half_width: float
    step_index: int

    @classmethod
    def initial(cls, dim: int, spec: QuantizerSpec, schedule: LengthSchedule):
        return cls(
            center=np.zeros(dim),
            half_width=spec.L * schedule.length(0) / 2.0,
            step_index=0,
        )

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_width


@dataclass(frozen=True)
class Frame:
    agent_id: int
    step_index: int
    payload: np.ndarray
    bit_length: int


def _advance(state: RangeState, spec: QuantizerSpec, schedule: LengthSchedule,
             q: np.ndarray) -> RangeState:
    k_next = state.step_index + 1
    return RangeState(
        center=q,
        half_width=spec.L * schedule.length(k_next) / 2.0,
        step_index=k_next,
    )


def encode(state: RangeState, schedule: LengthSchedule, spec: QuantizerSpec,
           z: np.ndarray, k: int, agent_id: int = 0):
    """Quantize z in the current range; returns (frame, next range, dequantized q)."""
    if state.step_index != k:
        raise DesynchronizationError(
            f"encoder range at step {state.step_index}, asked to encode step {k}"
        )
    try:
        payload = quantize_vector(spec, state.lower, state.upper, z)
    except SaturationError as err:
        raise EncoderSaturationError(
            agent_id=agent_id, step=k, coordinates=err.coordinates, clamped=err.clamped
        ) from err
    q = dequantize_vector(spec, state.lower, state.upper, payload)
    frame = Frame(
        agent_id=agent_id,
        step_index=k,
        payload=payload,
        bit_length=payload.size * spec.bits_per_index,
    )
    return frame, _advance(state, spec, schedule, q), q


def decode(state: RangeState, schedule: LengthSchedule, spec: QuantizerSpec,
           frame: Frame):
    """Dequantize a frame against the tracked range; returns (q, next range)."""
    if frame.step_index != state.step_index:
        raise DesynchronizationError(
            f"frame for step {frame.step_index} presented to range at step "
            f"{state.step_index}"
        )
    q = dequantize_vector(spec, state.lower, state.upper, frame.payload)
    return q, _advance(state, spec, schedule, q)


_HEADER = struct.Struct(">HI")


def pack_bits(frame: Frame, spec: QuantizerSpec) -> bytes:
    """[agent_id: 16-bit BE][step: 32-bit BE][payload bits MSB-first, byte-padded]."""
    bits = spec.bits_per_index
    acc = 0
    for idx in frame.payload:
        idx = int(idx)
        if not 0 <= idx <= spec.L:
            raise CodecError(f"index {idx} outside the grid")
        acc = (acc << bits) | idx
    nbits = bits * frame.payload.size
    nbytes = (nbits + 7) // 8
    acc <<= nbytes * 8 - nbits
    return _HEADER.pack(frame.agent_id, frame.step_index) + acc.to_bytes(nbytes, "big")


def unpack_bits(data: bytes, n: int, spec: QuantizerSpec) -> Frame:
    """Invert pack_bits for a payload of 2n indices."""
    count = 2 * n
    bits = spec.bits_per_index
    nbits = bits * count
    nbytes = (nbits + 7) // 8
    if len(data) != _HEADER.size + nbytes:
        raise CodecError(
            f"frame of {len(data)} bytes, expected {_HEADER.size + nbytes}"
        )
    agent_id, step_index = _HEADER.unpack_from(data)
    acc = int.from_bytes(data[_HEADER.size:], "big") >> (nbytes * 8 - nbits)
    payload = np.empty(count, dtype=np.int64)
    mask = (1 << bits) - 1
    for i in range(count - 1, -1, -1):
        payload[i] = acc & mask
        acc >>= bits
    if payload.max(initial=0) > spec.L:
        raise CodecError("payload contains an out-of-grid index")
    return Frame(
        agent_id=agent_id, step_index=step_index, payload=payload, bit_length=nbits
    )


def bandwidth_per_step(spec: QuantizerSpec, n: int, mode: str = "full") -> int:
    """Bits one agent sends per sampling step.

    "full" counts the fixed-width wire format; "zero-suppressed" is the
    accounting convention where the zero level is never transmitted.
    """
    if mode == "full":
        return 2 * n * spec.bits_per_index
    if mode == "zero-suppressed":
        return 2 * n * max(1, math.ceil(math.log2(spec.L)))
    raise ValueError(f"unknown bandwidth mode {mode!r}")
