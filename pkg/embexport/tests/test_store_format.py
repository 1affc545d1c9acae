"""Store writer and verifier: byte layout, round-trip, corruption offsets.

Offsets in the corruption tests are derived from the layout by hand:
18-byte header (4 magic + 2 version + 4 width + 8 count), then per record
2 + len(id) + 2 + 4*h bytes.
"""

from __future__ import annotations

import struct

import numpy as np
import pytest

from embexport import FormatError, StoreWriter, iter_records, verify_store

HEADER = struct.Struct("<4sHIQ")


def _write_store(path, h, records):
    with StoreWriter(path, h, len(records)) as writer:
        for doc_id, idx, vec in records:
            writer.write(doc_id, idx, vec)
    return path


def _vec(h, seed):
    return np.random.default_rng(seed).normal(size=h).astype(np.float32)


class TestWriter:
    def test_header_layout(self, tmp_path):
        path = _write_store(tmp_path / "s.bin", 4, [("ab", 3, _vec(4, 0))])
        raw = path.read_bytes()
        assert HEADER.unpack(raw[:18]) == (b"D2SE", 1, 4, 1)
        # 18 header + 2 idlen + 2 id + 2 idx + 16 vector
        assert len(raw) == 40

    def test_round_trip_exact_float32(self, tmp_path):
        records = [("déjà-01", 0, _vec(6, 1)), ("x", 2, _vec(6, 2)), ("x", 1, _vec(6, 3))]
        path = _write_store(tmp_path / "s.bin", 6, records)
        got = list(iter_records(path))
        assert [(d, i) for d, i, _ in got] == [("déjà-01", 0), ("x", 2), ("x", 1)]
        for (_, _, want), (_, _, have) in zip(records, got):
            assert have.dtype == np.float32
            assert np.array_equal(want, have)

    def test_count_enforced_on_close(self, tmp_path):
        writer = StoreWriter(tmp_path / "s.bin", 4, 2)
        writer.write("a", 0, _vec(4, 0))
        with pytest.raises(ValueError, match="promised 2"):
            writer.close()

    def test_extra_record_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="more than"):
            with StoreWriter(tmp_path / "s.bin", 4, 1) as writer:
                writer.write("a", 0, _vec(4, 0))
                writer.write("b", 0, _vec(4, 1))

    def test_vector_shape_checked(self, tmp_path):
        with pytest.raises(ValueError, match="shape"):
            with StoreWriter(tmp_path / "s.bin", 4, 1) as writer:
                writer.write("a", 0, _vec(5, 0))

    def test_bad_dimensions_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            StoreWriter(tmp_path / "s.bin", 0, 1)
        with pytest.raises(ValueError):
            StoreWriter(tmp_path / "s.bin", 4, -1)


class TestVerify:
    def test_summary_fields(self, tmp_path):
        records = [("a", 0, _vec(4, 0)), ("a", 1, _vec(4, 1)), ("b", 0, _vec(4, 2)),
                   ("c", 0, _vec(4, 3)), ("c", 2, _vec(4, 4))]
        path = _write_store(tmp_path / "s.bin", 4, records)
        summary = verify_store(path)
        assert summary.h == 4
        assert summary.count == 5
        assert summary.n_documents == 3
        assert summary.file_size == 18 + 5 * (2 + 1 + 2 + 16)

    def test_empty_store_ok(self, tmp_path):
        path = _write_store(tmp_path / "s.bin", 4, [])
        summary = verify_store(path)
        assert (summary.count, summary.n_documents, summary.file_size) == (0, 0, 18)


class TestCorruption:
    """Every structural fault is rejected with the byte offset of the fault."""

    def _one_record_file(self, tmp_path):
        # id "ab": idlen at 18, id at 20, index at 22, vector at 24..40
        return _write_store(tmp_path / "s.bin", 4, [("ab", 1, _vec(4, 0))])

    def test_corrupt_magic_offset_zero(self, tmp_path):
        path = self._one_record_file(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[0:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 0
        assert "magic" in str(err.value)

    def test_unsupported_version_offset_four(self, tmp_path):
        path = self._one_record_file(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[4:6] = struct.pack("<H", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 4
        assert "version 9" in str(err.value)

    def test_truncated_header(self, tmp_path):
        path = self._one_record_file(tmp_path)
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 0
        assert "header" in str(err.value)

    def test_truncated_mid_record_reports_field_start(self, tmp_path):
        path = self._one_record_file(tmp_path)
        path.write_bytes(path.read_bytes()[:30])  # cut inside the vector
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 24
        assert "vector" in str(err.value)

    def test_header_count_larger_than_file(self, tmp_path):
        path = self._one_record_file(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[10:18] = struct.pack("<Q", 2)
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 40

    def test_trailing_bytes(self, tmp_path):
        path = self._one_record_file(tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00\x00\x00")
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 40
        assert "3 trailing bytes" in str(err.value)

    def test_invalid_utf8_doc_id(self, tmp_path):
        path = self._one_record_file(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[20:22] = b"\xff\xfe"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 20
        assert "UTF-8" in str(err.value)

    def test_non_finite_vector(self, tmp_path):
        path = self._one_record_file(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[24:28] = struct.pack("<f", float("nan"))
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 24
        assert "non-finite" in str(err.value)

    def test_duplicate_record(self, tmp_path):
        # second record's vector starts at 18 + 23 + (2 + 3 + 2) = 48
        path = _write_store(tmp_path / "s.bin", 4, [("dup", 1, _vec(4, 0)), ("dup", 1, _vec(4, 1))])
        with pytest.raises(FormatError) as err:
            verify_store(path)
        assert err.value.offset == 48
        assert "duplicate" in str(err.value)
