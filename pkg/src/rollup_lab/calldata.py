"""Calldata payloads, gas schedules and compressibility."""
from __future__ import annotations

import lzma
import math
import zlib
from collections import Counter
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .units import BLOB_BYTES


@dataclass(frozen=True)
class GasSchedule:
    zero_byte_gas: float
    nonzero_byte_gas: float
    label: str

    def __post_init__(self):
        if self.zero_byte_gas <= 0 or self.nonzero_byte_gas <= 0:
            raise ValueError("byte gas costs must be positive")
        if self.nonzero_byte_gas < self.zero_byte_gas:
            raise ValueError("nonzero_byte_gas must be at least zero_byte_gas")


PRE_PECTRA = GasSchedule(4, 16, "pre-pectra")
PECTRA = GasSchedule(10, 40, "pectra")
SCHEDULES = {s.label: s for s in (PRE_PECTRA, PECTRA)}


def get_schedule(name: str) -> GasSchedule:
    key = name.strip().lower().replace("_", "-")
    if key == "prepectra":
        key = "pre-pectra"
    if key not in SCHEDULES:
        raise KeyError(f"unknown gas schedule {name!r}; known: {', '.join(SCHEDULES)}")
    return SCHEDULES[key]


@dataclass(frozen=True)
class Payload:
    data: bytes
    seed: int | None = None
    zero_ratio: float | None = None

    def __len__(self) -> int:
        return len(self.data)

    @property
    def zeros(self) -> int:
        return self.data.count(0)


def gen_payload(size: int, zero_ratio: float, seed: int = 0) -> Payload:
    """Each byte is zero with probability ``zero_ratio``, else uniform on 1..255."""
    if size < 0:
        raise ValueError("size must be nonnegative")
    if not 0 <= zero_ratio <= 1:
        raise ValueError("zero_ratio must be in [0, 1]")
    rng = np.random.default_rng(seed)
    values = rng.integers(1, 256, size=size, dtype=np.uint8)
    values[rng.random(size) < zero_ratio] = 0
    return Payload(values.tobytes(), seed, zero_ratio)


def calldata_gas(payload: Payload | bytes, schedule: GasSchedule = PRE_PECTRA) -> float:
    data = payload.data if isinstance(payload, Payload) else payload
    zeros = data.count(0)
    return zeros * schedule.zero_byte_gas + (len(data) - zeros) * schedule.nonzero_byte_gas


def gas_to_fill_blob(schedule: GasSchedule, zero_ratio: float, blob_bytes: int = BLOB_BYTES) -> float:
    """Expected calldata gas for one blob's worth of payload."""
    if not 0 <= zero_ratio <= 1:
        raise ValueError("zero_ratio must be in [0, 1]")
    return blob_bytes * (zero_ratio * schedule.zero_byte_gas + (1 - zero_ratio) * schedule.nonzero_byte_gas)


class Compressor(Protocol):
    name: str

    def compress(self, data: bytes, quality: int) -> bytes: ...


class CompressionError(RuntimeError):
    pass


class ZlibCompressor:
    """DEFLATE; quality 0..11 maps onto zlib levels 1..9."""

    name = "zlib"

    def compress(self, data: bytes, quality: int) -> bytes:
        return zlib.compress(data, max(1, min(9, int(quality))))


class LzmaCompressor:
    """LZMA; quality 0..11 maps onto presets 0..9."""

    name = "lzma"

    def compress(self, data: bytes, quality: int) -> bytes:
        return lzma.compress(data, preset=max(0, min(9, int(quality))))


class EntropyBound:
    """Order-0 entropy estimate of an ideal compressor; quality is ignored.

    The output is a placeholder of the estimated size, so it works through
    the same interface as the real compressors.
    """

    name = "entropy"
    header_bytes = 8

    def estimate(self, data: bytes) -> float:
        n = len(data)
        if n == 0:
            return 0.0
        h = -sum(c / n * math.log2(c / n) for c in Counter(data).values())
        return h * n / 8 + self.header_bytes

    def compress(self, data: bytes, quality: int) -> bytes:
        return bytes(math.ceil(self.estimate(data)))


COMPRESSORS: dict[str, Compressor] = {
    c.name: c for c in (ZlibCompressor(), LzmaCompressor(), EntropyBound())
}
DEFAULT_COMPRESSOR = "zlib"


def get_compressor(name: str) -> Compressor:
    if name not in COMPRESSORS:
        raise KeyError(f"unknown compressor {name!r}; known: {', '.join(COMPRESSORS)}")
    return COMPRESSORS[name]


def compression_ratio(
    payload: Payload | bytes, compressor: Compressor | str = DEFAULT_COMPRESSOR, quality: int = 11
) -> float:
    """Compressed size over original size."""
    data = payload.data if isinstance(payload, Payload) else payload
    if not data:
        raise ValueError("cannot compute a ratio for an empty payload")
    comp = get_compressor(compressor) if isinstance(compressor, str) else compressor
    try:
        out = comp.compress(data, quality)
    except Exception as exc:
        raise CompressionError(f"{getattr(comp, 'name', comp)!s} failed: {exc}") from exc
    if not isinstance(out, (bytes, bytearray)) or len(out) == 0:
        raise CompressionError(f"{getattr(comp, 'name', comp)!s} returned no data")
    return len(out) / len(data)


@dataclass(frozen=True)
class SweepRow:
    zero_ratio: float
    quality: int
    schedule: str
    mean_gas: float
    expected_gas: float
    mean_ratio: float


def sweep(
    zero_ratios: list[float],
    qualities: list[int],
    schedule: GasSchedule = PECTRA,
    compressor: str = DEFAULT_COMPRESSOR,
    seeds: int = 100,
    size: int = BLOB_BYTES,
    base_seed: int = 0,
) -> list[SweepRow]:
    """Mean calldata gas and compression ratio over ``seeds`` payloads."""
    rows = []
    for r in zero_ratios:
        payloads = [gen_payload(size, r, base_seed + s) for s in range(seeds)]
        mean_gas = sum(calldata_gas(p, schedule) for p in payloads) / seeds
        for q in qualities:
            mean_ratio = sum(compression_ratio(p, compressor, q) for p in payloads) / seeds
            rows.append(SweepRow(r, q, schedule.label, mean_gas, gas_to_fill_blob(schedule, r, size), mean_ratio))
    return rows
