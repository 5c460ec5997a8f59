import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdpd.quantizer import (
    CodecError,
    Interval,
    QuantizerSpec,
    SaturationError,
    dequantize,
    dequantize_vector,
    quantize,
    quantize_vector,
)


def _grid(spec, rng):
    return [dequantize(spec, rng, i) for i in range(spec.L + 1)]


def test_endpoints_and_midpoints():
    spec = QuantizerSpec(4)
    rng = Interval(0.0, 4.0)
    assert quantize(spec, rng, 0.0) == 0
    assert quantize(spec, rng, 4.0) == 4
    assert quantize(spec, rng, 2.4) == 2
    assert quantize(spec, rng, 2.6) == 3
    # Ties break toward the smaller index.
    assert quantize(spec, rng, 0.5) == 0
    assert quantize(spec, rng, 1.5) == 1


def test_half_cell_slack_clamps():
    spec = QuantizerSpec(4)
    rng = Interval(0.0, 4.0)
    assert quantize(spec, rng, 4.5) == 4
    assert quantize(spec, rng, -0.5) == 0
    with pytest.raises(SaturationError):
        quantize(spec, rng, 4.5 + 1e-9)
    with pytest.raises(SaturationError):
        quantize(spec, rng, -0.5 - 1e-9)


def test_saturation_reports_side():
    spec = QuantizerSpec(4)
    rng = Interval(0.0, 4.0)
    with pytest.raises(SaturationError) as err:
        quantize(spec, rng, 100.0)
    assert err.value.clamped == 4


def test_degenerate_range_maps_to_zero():
    spec = QuantizerSpec(8)
    rng = Interval(1.5, 1.5)
    assert quantize(spec, rng, 123.0) == 0
    assert dequantize(spec, rng, 0) == 1.5
    idx = quantize_vector(spec, [1.5, 0.0], [1.5, 1.0], [999.0, 0.5])
    np.testing.assert_array_equal(idx, [0, 4])


def test_bits_per_index():
    assert QuantizerSpec(1).bits_per_index == 1
    assert QuantizerSpec(3).bits_per_index == 2
    assert QuantizerSpec(4).bits_per_index == 3
    assert QuantizerSpec(67).bits_per_index == 7


def test_index_validation():
    spec = QuantizerSpec(4)
    rng = Interval(0.0, 1.0)
    with pytest.raises(CodecError):
        dequantize(spec, rng, 5)
    with pytest.raises(CodecError):
        dequantize_vector(spec, [0.0], [1.0], [-1])


def test_exhaustive_small_levels():
    """Error bound, monotonicity, and grid idempotence for every L <= 8."""
    for L in range(1, 9):
        spec = QuantizerSpec(L)
        rng = Interval(-1.3, 2.1)
        cell = rng.width / L
        grid = _grid(spec, rng)
        samples = np.linspace(rng.lower - 0.4999 * cell, rng.upper + 0.4999 * cell, 4001)
        prev = 0
        for s in samples:
            i = quantize(spec, rng, float(s))
            assert abs(dequantize(spec, rng, i) - s) <= 0.5 * cell + 1e-12
            assert i >= prev
            prev = i
        for i, gpt in enumerate(grid):
            assert quantize(spec, rng, gpt) == i


@settings(max_examples=300, deadline=None)
@given(
    L=st.integers(min_value=9, max_value=4096),
    lo=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    width=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
    t=st.floats(min_value=-0.5, max_value=1.5),
)
def test_randomized_error_bound(L, lo, width, t):
    spec = QuantizerSpec(L)
    rng = Interval(lo, lo + width)
    cell = rng.width / L
    s = rng.lower + t * rng.width
    if not (rng.lower - 0.5 * cell <= s <= rng.upper + 0.5 * cell):
        return
    i = quantize(spec, rng, s)
    assert 0 <= i <= L
    assert abs(dequantize(spec, rng, i) - s) <= 0.5 * cell * (1 + 1e-9) + 1e-12 * abs(lo)


@settings(max_examples=200, deadline=None)
@given(
    L=st.integers(min_value=9, max_value=512),
    data=st.data(),
)
def test_randomized_monotonicity_and_idempotence(L, data):
    spec = QuantizerSpec(L)
    rng = Interval(-3.0, 5.0)
    s1 = data.draw(st.floats(min_value=-3.0, max_value=5.0))
    s2 = data.draw(st.floats(min_value=-3.0, max_value=5.0))
    if s1 > s2:
        s1, s2 = s2, s1
    assert quantize(spec, rng, s1) <= quantize(spec, rng, s2)
    i = data.draw(st.integers(min_value=0, max_value=L))
    assert quantize(spec, rng, dequantize(spec, rng, i)) == i


@settings(max_examples=200, deadline=None)
@given(
    vals=st.lists(st.floats(min_value=-0.9, max_value=0.9), min_size=1, max_size=6),
    L=st.integers(min_value=2, max_value=128),
)
def test_vector_matches_scalar(vals, L):
    spec = QuantizerSpec(L)
    lo, hi = -1.0, 1.0
    v = np.array(vals)
    idx = quantize_vector(spec, lo, hi, v)
    rng = Interval(lo, hi)
    expected = [quantize(spec, rng, float(s)) for s in vals]
    np.testing.assert_array_equal(idx, expected)
    q = dequantize_vector(spec, np.full(v.shape, lo), np.full(v.shape, hi), idx)
    expected_q = [dequantize(spec, rng, i) for i in expected]
    np.testing.assert_allclose(q, expected_q, rtol=0, atol=0)


def test_vector_saturation_lists_coordinates():
    spec = QuantizerSpec(4)
    with pytest.raises(SaturationError) as err:
        quantize_vector(spec, [0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.5, 9.0, -9.0])
    assert err.value.coordinates == [1, 2]
