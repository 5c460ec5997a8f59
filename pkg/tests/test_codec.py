import numpy as np
import pytest

from qdpd import codec
from qdpd.codec import (
    DesynchronizationError,
    EncoderSaturationError,
    Frame,
    LengthSchedule,
    RangeState,
)
from qdpd.quantizer import CodecError, QuantizerSpec


def _pair(L=16, dim=2, l0=1.0, step_decay=0.001, period=0.05):
    spec = QuantizerSpec(L)
    schedule = LengthSchedule.from_step_decay(l0, step_decay, period)
    enc = RangeState.initial(dim, spec, schedule)
    dec = RangeState.initial(dim, spec, schedule)
    return spec, schedule, enc, dec


def test_schedule_length():
    s = LengthSchedule.from_step_decay(0.8, 0.1, 0.05)
    assert s.length(0) == pytest.approx(0.8)
    assert s.length(1) == pytest.approx(0.8 * np.exp(-0.1))
    assert s.step_decay == pytest.approx(0.1)
    assert s.decay_rate == pytest.approx(2.0)


def test_initial_range_symmetric():
    spec, schedule, enc, _ = _pair(L=10, l0=0.5)
    np.testing.assert_allclose(enc.lower, -2.5)
    np.testing.assert_allclose(enc.upper, 2.5)


def test_roundtrip_single_step():
    spec, schedule, enc, dec = _pair()
    z = np.array([0.3, -0.2])
    frame, enc2, q_enc = codec.encode(enc, schedule, spec, z, 0, agent_id=3)
    q_dec, dec2 = codec.decode(dec, schedule, spec, frame)
    np.testing.assert_array_equal(q_dec, q_enc)
    np.testing.assert_array_equal(dec2.center, enc2.center)
    assert dec2.half_width == enc2.half_width
    assert dec2.step_index == enc2.step_index == 1
    assert np.all(np.abs(q_enc - z) <= schedule.length(0) / 2 + 1e-15)


def test_desync_detected():
    spec, schedule, enc, dec = _pair()
    frame, enc, _ = codec.encode(enc, schedule, spec, np.zeros(2), 0)
    _, dec = codec.decode(dec, schedule, spec, frame)
    with pytest.raises(DesynchronizationError):
        codec.decode(dec, schedule, spec, frame)  # replayed frame
    with pytest.raises(DesynchronizationError):
        codec.encode(enc, schedule, spec, np.zeros(2), 0)  # stale step


def test_encoder_saturation_context():
    spec, schedule, enc, _ = _pair(L=4, l0=0.1)
    with pytest.raises(EncoderSaturationError) as err:
        codec.encode(enc, schedule, spec, np.array([5.0, 0.0]), 0, agent_id=7)
    assert err.value.agent_id == 7
    assert err.value.step == 0
    assert err.value.coordinates == [0]


def test_pack_unpack_roundtrip():
    spec = QuantizerSpec(67)
    rng = np.random.default_rng(5)
    for _ in range(200):
        payload = rng.integers(0, 68, size=4)
        frame = Frame(agent_id=int(rng.integers(0, 100)),
                      step_index=int(rng.integers(0, 1 << 20)),
                      payload=payload, bit_length=4 * spec.bits_per_index)
        wire = codec.pack_bits(frame, spec)
        assert len(wire) == 6 + (4 * 7 + 7) // 8
        back = codec.unpack_bits(wire, 2, spec)
        assert back.agent_id == frame.agent_id
        assert back.step_index == frame.step_index
        np.testing.assert_array_equal(back.payload, payload)


def test_pack_rejects_bad_index():
    spec = QuantizerSpec(4)
    frame = Frame(agent_id=0, step_index=0, payload=np.array([5, 0]), bit_length=6)
    with pytest.raises(CodecError):
        codec.pack_bits(frame, spec)


def test_unpack_rejects_bad_length():
    spec = QuantizerSpec(4)
    with pytest.raises(CodecError):
        codec.unpack_bits(b"\x00" * 3, 2, spec)


def test_bandwidth_per_step():
    spec = QuantizerSpec(67)
    assert codec.bandwidth_per_step(spec, 1, "full") == 14
    assert codec.bandwidth_per_step(spec, 1, "zero-suppressed") == 14
    spec2 = QuantizerSpec(64)
    assert codec.bandwidth_per_step(spec2, 1, "full") == 14
    assert codec.bandwidth_per_step(spec2, 1, "zero-suppressed") == 12
    with pytest.raises(ValueError):
        codec.bandwidth_per_step(spec, 1, "bogus")


def test_lockstep_long_run():
    """10^5 encode/decode steps through the wire format stay bit-identical,
    with per-coordinate error at most half the scheduled length."""
    spec, schedule, enc, dec = _pair(L=16, dim=2, l0=1.0, step_decay=1e-5)
    rng = np.random.default_rng(42)
    z = np.zeros(2)
    for k in range(100_000):
        # Stay strictly inside the shrinking range around the last output.
        half = enc.half_width
        z = enc.center + rng.uniform(-0.95, 0.95, size=2) * half
        frame, enc, q_enc = codec.encode(enc, schedule, spec, z, k)
        wire = codec.pack_bits(frame, spec)
        frame2 = codec.unpack_bits(wire, 1, spec)
        q_dec, dec = codec.decode(dec, schedule, spec, frame2)
        assert np.array_equal(q_dec, q_enc)
        assert np.array_equal(dec.center, enc.center)
        assert dec.half_width == enc.half_width
        assert np.all(np.abs(z - q_enc) <= schedule.length(k) / 2 * (1 + 1e-12))
