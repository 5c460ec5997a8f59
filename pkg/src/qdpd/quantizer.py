"""Finite-level uniform quantizer over a closed interval.

Values are mapped to the nearest of the L+1 grid points l + i*(u-l)/L with
ties broken toward the smaller index. Inputs within half a cell beyond an
endpoint clamp to that endpoint; anything further out saturates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SaturationError(Exception):
    """Input fell outside the quantizer range (beyond the half-cell slack)."""

    def __init__(self, message, clamped, coordinates=None):
        super().__init__(message)
        self.clamped = clamped
        self.coordinates = coordinates


class CodecError(ValueError):
    """Malformed index or frame handed to the codec layer."""


@dataclass(frozen=True)
class QuantizerSpec:
    """Grid with level_count_minus_one + 1 points."""

    level_count_minus_one: int

    def __post_init__(self):
        if self.level_count_minus_one < 1:
            raise ValueError("need at least two quantization levels")

    @property
    def L(self) -> int:
        return self.level_count_minus_one

    @property
    def bits_per_index(self) -> int:
        return max(1, math.ceil(math.log2(self.L + 1)))


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("interval endpoints must be finite")
        if self.lower > self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower


def quantize(spec: QuantizerSpec, rng: Interval, s: float) -> int:
    """Index of the grid point nearest to s; ties go to the smaller index."""
    cell = rng.width / spec.L
    if cell == 0.0:
        return 0
    if s - rng.upper > 0.5 * cell or rng.lower - s > 0.5 * cell:
        clamped = 0 if s < rng.lower else spec.L
        raise SaturationError(
            f"value {s} outside range [{rng.lower}, {rng.upper}] with slack "
            f"{0.5 * cell}",
            clamped=clamped,
        )
    i = math.ceil((s - rng.lower) / cell - 0.5)
    return min(spec.L, max(0, i))


def dequantize(spec: QuantizerSpec, rng: Interval, index: int) -> float:
    if not 0 <= index <= spec.L:
        raise CodecError(f"index {index} outside {{0,...,{spec.L}}}")
    return rng.lower + index * rng.width / spec.L


def quantize_vector(spec: QuantizerSpec, lower, upper, v) -> np.ndarray:
    """Coordinatewise quantization against per-coordinate ranges.

    Saturated coordinates are reported together in a single error.
    """
    v = np.asarray(v, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != v.shape:
        lower = np.broadcast_to(lower, v.shape)
    if upper.shape != v.shape:
        upper = np.broadcast_to(upper, v.shape)
    L = spec.L
    cell = (upper - lower) / L
    live = cell > 0.0
    half = 0.5 * cell
    # Degenerate (zero-width) coordinates map to index 0 and cannot saturate.
    sat_mask = live & (((v - upper) > half) | ((lower - v) > half))
    if sat_mask.any():
        sat = np.flatnonzero(sat_mask)
        clamped = np.where(v < lower, 0, L)
        raise SaturationError(
            f"coordinates {sat.tolist()} saturated",
            clamped=clamped,
            coordinates=sat.tolist(),
        )
    t = (v - lower) / np.where(live, cell, 1.0)
    idx = np.ceil(t - 0.5).astype(np.int64)
    idx[~live] = 0
    np.clip(idx, 0, L, out=idx)
    return idx


def dequantize_vector(spec: QuantizerSpec, lower, upper, indices) -> np.ndarray:
    indices = np.asarray(indices)
    if indices.size and (int(indices.min()) < 0 or int(indices.max()) > spec.L):
        raise CodecError("index vector outside the quantizer grid")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return lower + indices * (upper - lower) / spec.L
