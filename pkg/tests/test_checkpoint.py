import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from capssc.checkpoint import (MAGIC, CheckpointFormatError, atomic_write, checkpoint_read, checkpoint_time,
                               checkpoint_write, decode, encode)
from capssc.fields import EVEN, ODD, QuarterField, VorticityField


@settings(max_examples=40)
@given(hnp.arrays(np.float64, st.tuples(st.integers(9, 20)).map(lambda s: (s[0], s[0])),
                  elements=st.floats(allow_nan=False, allow_infinity=False, width=64)),
       st.floats(0, 1e6))
def test_round_trip_is_bit_exact(values, t):
    values = values.copy()
    values[0] = 0.0
    values[:, 0] = 0.0
    w = VorticityField(values, time=t)
    back = decode(encode(w))
    assert isinstance(back, VorticityField)
    assert back.values.tobytes() == w.values.tobytes()
    assert back.time == t and back.extent == w.extent


def test_file_round_trip_with_other_parity(tmp_path):
    rng = np.random.default_rng(0)
    q = QuarterField(rng.normal(size=(17, 17)), extent=2.0, parity=(EVEN, ODD))
    checkpoint_write(q, tmp_path / "q.ckpt", time=1.5)
    back = checkpoint_read(tmp_path / "q.ckpt", parity=(EVEN, ODD))
    assert np.array_equal(back.values, q.values) and back.parity == (EVEN, ODD)
    assert checkpoint_time(tmp_path / "q.ckpt") == 1.5


def test_header_layout():
    blob = encode(VorticityField(np.zeros((9, 9)), time=2.0))
    assert blob[:8] == MAGIC and len(blob) == 32 + 8 * 81 + 4
    _, version, side, t, h = struct.unpack_from("<8sIIdd", blob)
    assert (version, side, t, h) == (1, 9, 2.0, 0.25)


def test_truncated_and_corrupted_files():
    blob = encode(VorticityField(np.zeros((9, 9))))
    with pytest.raises(CheckpointFormatError):
        decode(blob[:-10])
    with pytest.raises(CheckpointFormatError):
        decode(blob[:20])
    flipped = bytearray(blob)
    flipped[100] ^= 1
    with pytest.raises(CheckpointFormatError, match="CRC"):
        decode(bytes(flipped))
    with pytest.raises(CheckpointFormatError, match="magic"):
        decode(b"NOTACKPT" + blob[8:])


def test_version_bump_is_an_explicit_incompatibility():
    blob = bytearray(encode(VorticityField(np.zeros((9, 9)))))
    struct.pack_into("<I", blob, 8, 2)
    with pytest.raises(CheckpointFormatError, match="version 2"):
        decode(bytes(blob))


def test_atomic_write_leaves_no_temporary_files(tmp_path):
    atomic_write(tmp_path / "a.txt", "one")
    atomic_write(tmp_path / "a.txt", b"two")
    assert (tmp_path / "a.txt").read_bytes() == b"two"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_checkpoint_time_rejects_other_files(tmp_path):
    (tmp_path / "x").write_bytes(b"hello world, definitely not a checkpoint")
    with pytest.raises(CheckpointFormatError):
        checkpoint_time(tmp_path / "x")
