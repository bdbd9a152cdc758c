import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from rollup_lab.calldata import (
    PECTRA,
    PRE_PECTRA,
    CompressionError,
    EntropyBound,
    GasSchedule,
    Payload,
    calldata_gas,
    compression_ratio,
    gas_to_fill_blob,
    gen_payload,
    get_compressor,
    get_schedule,
)
from rollup_lab.units import BLOB_BYTES


def blob_with_zeros(zeros: int) -> bytes:
    return bytes(zeros) + b"\x07" * (BLOB_BYTES - zeros)


def test_calldata_gas_examples():
    assert calldata_gas(b"", PRE_PECTRA) == 0
    assert calldata_gas(blob_with_zeros(1_424), PRE_PECTRA) == 2_080_064
    # 127,140 * 40 + 3,932 * 10
    assert calldata_gas(blob_with_zeros(3_932), PECTRA) == 5_124_920
    assert abs(5_124_920 - 5_124_950) / 5_124_950 < 5e-4


def test_gas_to_fill_examples():
    assert gas_to_fill_blob(PECTRA, 0.03) == pytest.approx(5_124_915.2)
    assert abs(gas_to_fill_blob(PECTRA, 0.03) - 5_124_950) / 5_124_950 < 1e-4
    assert gas_to_fill_blob(PECTRA, 0) == 5_242_880
    assert gas_to_fill_blob(PRE_PECTRA, 0) == 2_097_152


def test_schedules():
    assert get_schedule("pectra") is PECTRA and get_schedule("pre_pectra") is PRE_PECTRA
    with pytest.raises(ValueError):
        GasSchedule(16, 4, "backwards")
    with pytest.raises(KeyError):
        get_schedule("osaka")


def test_gen_payload_examples():
    assert gen_payload(0, 0.03, 1).data == b""
    assert gen_payload(1000, 0.03, 5).data == gen_payload(1000, 0.03, 5).data
    p = gen_payload(BLOB_BYTES, 0.03, 0)
    sd = math.sqrt(BLOB_BYTES * 0.03 * 0.97)
    assert abs(p.zeros - 3_932) < 4 * sd
    assert len(p) == BLOB_BYTES
    with pytest.raises(ValueError):
        gen_payload(10, 1.5, 0)


@settings(max_examples=50)
@given(st.integers(0, 5000), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_payload_determinism(size, ratio, seed):
    a, b = gen_payload(size, ratio, seed), gen_payload(size, ratio, seed)
    assert a.data == b.data and len(a) == size


@given(st.binary(max_size=2000), st.binary(max_size=2000), st.integers(0, 2**16))
def test_calldata_gas_linear_and_permutation_invariant(a, b, seed):
    for s in (PRE_PECTRA, PECTRA):
        assert calldata_gas(a + b, s) == calldata_gas(a, s) + calldata_gas(b, s)
        shuffled = bytearray(a)
        random.Random(seed).shuffle(shuffled)
        assert calldata_gas(bytes(shuffled), s) == calldata_gas(a, s)


def test_gas_to_fill_is_expected_payload_gas():
    seeds = 100
    mean = sum(calldata_gas(gen_payload(BLOB_BYTES, 0.03, s), PECTRA) for s in range(seeds)) / seeds
    assert abs(mean - gas_to_fill_blob(PECTRA, 0.03)) / gas_to_fill_blob(PECTRA, 0.03) < 1e-3


@pytest.mark.parametrize("name", ["zlib", "lzma", "entropy"])
@pytest.mark.parametrize("quality", [0, 5, 11])
def test_compression_extremes(name, quality):
    assert compression_ratio(bytes(BLOB_BYTES), name, quality) < 0.01
    r = compression_ratio(gen_payload(BLOB_BYTES, 0.03, 1), name, quality)
    assert 0.95 < r <= 1.1


def test_compression_monotone_in_zero_ratio():
    ratios = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9]
    seeds = 100
    for name in ("zlib", "entropy"):
        means = [
            sum(compression_ratio(gen_payload(4096, r, s), name, 6) for s in range(seeds)) / seeds
            for r in ratios
        ]
        assert all(b <= a for a, b in zip(means, means[1:])), (name, means)


def test_entropy_bound_value():
    # order-0 entropy of the 3% payload is about 7.95 bits per byte
    est = EntropyBound().estimate(gen_payload(BLOB_BYTES, 0.03, 0).data) / BLOB_BYTES
    assert 0.99 < est < 0.995


def test_compressor_failure_is_explicit():
    class Broken:
        name = "broken"

        def compress(self, data, quality):
            raise RuntimeError("boom")

    class Empty:
        name = "empty"

        def compress(self, data, quality):
            return b""

    with pytest.raises(CompressionError):
        compression_ratio(b"abc", Broken())
    with pytest.raises(CompressionError):
        compression_ratio(b"abc", Empty())
    with pytest.raises(KeyError):
        get_compressor("brotli-missing")
    with pytest.raises(ValueError):
        compression_ratio(Payload(b""), "zlib")
