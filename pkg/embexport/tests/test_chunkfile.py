"""Chunk-file parsing and validation."""

from __future__ import annotations

import json

import pytest

from embexport import ChunkFileError, read_chunk_file


def _write(path, rows):
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row if isinstance(row, str) else json.dumps(row))
            fh.write("\n")
    return path


class TestReadChunkFile:
    def test_round_trip_order_and_fields(self, tmp_path):
        rows = [
            {"doc_id": "b", "chunk_index": 0, "tokens": ["tok1", "tok2"]},
            {"doc_id": "a", "chunk_index": 1, "tokens": ["kw0"]},
            {"doc_id": "a", "chunk_index": 0, "tokens": ["tok3", "tok4", "tok5"]},
        ]
        records = read_chunk_file(_write(tmp_path / "c.jsonl", rows))
        assert [(r.doc_id, r.chunk_index) for r in records] == [("b", 0), ("a", 1), ("a", 0)]
        assert records[0].tokens == ("tok1", "tok2")
        assert records[2].text == "tok3 tok4 tok5"

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('\n{"doc_id": "a", "chunk_index": 0, "tokens": ["x"]}\n   \n', encoding="utf-8")
        assert len(read_chunk_file(path)) == 1

    def test_empty_file_gives_no_records(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("", encoding="utf-8")
        assert read_chunk_file(path) == []

    def test_invalid_json_reports_line_number(self, tmp_path):
        rows = [
            {"doc_id": "a", "chunk_index": 0, "tokens": ["x"]},
            {"doc_id": "a", "chunk_index": 1, "tokens": ["x"]},
            "{not json",
        ]
        with pytest.raises(ChunkFileError) as err:
            read_chunk_file(_write(tmp_path / "c.jsonl", rows))
        assert err.value.lineno == 3
        assert "invalid JSON" in err.value.reason

    def test_non_object_line_rejected(self, tmp_path):
        with pytest.raises(ChunkFileError) as err:
            read_chunk_file(_write(tmp_path / "c.jsonl", ["[1, 2]"]))
        assert "not a JSON object" in err.value.reason

    @pytest.mark.parametrize("missing", ["doc_id", "chunk_index", "tokens"])
    def test_missing_field(self, tmp_path, missing):
        row = {"doc_id": "a", "chunk_index": 0, "tokens": ["x"]}
        del row[missing]
        with pytest.raises(ChunkFileError) as err:
            read_chunk_file(_write(tmp_path / "c.jsonl", [row]))
        assert missing in err.value.reason

    @pytest.mark.parametrize("doc_id", [7, "", None])
    def test_bad_doc_id(self, tmp_path, doc_id):
        row = {"doc_id": doc_id, "chunk_index": 0, "tokens": ["x"]}
        with pytest.raises(ChunkFileError):
            read_chunk_file(_write(tmp_path / "c.jsonl", [row]))

    @pytest.mark.parametrize("chunk_index", ["1", True, None, -1, 65536])
    def test_bad_chunk_index(self, tmp_path, chunk_index):
        row = {"doc_id": "a", "chunk_index": chunk_index, "tokens": ["x"]}
        with pytest.raises(ChunkFileError):
            read_chunk_file(_write(tmp_path / "c.jsonl", [row]))

    def test_chunk_index_u16_boundary_accepted(self, tmp_path):
        row = {"doc_id": "a", "chunk_index": 65535, "tokens": ["x"]}
        records = read_chunk_file(_write(tmp_path / "c.jsonl", [row]))
        assert records[0].chunk_index == 65535

    @pytest.mark.parametrize("tokens", ["x", [], [""], ["ok", 3], None])
    def test_bad_tokens(self, tmp_path, tokens):
        row = {"doc_id": "a", "chunk_index": 0, "tokens": tokens}
        with pytest.raises(ChunkFileError):
            read_chunk_file(_write(tmp_path / "c.jsonl", [row]))

    def test_duplicate_chunk_rejected(self, tmp_path):
        rows = [
            {"doc_id": "a", "chunk_index": 0, "tokens": ["x"]},
            {"doc_id": "a", "chunk_index": 0, "tokens": ["y"]},
        ]
        with pytest.raises(ChunkFileError) as err:
            read_chunk_file(_write(tmp_path / "c.jsonl", rows))
        assert err.value.lineno == 2
        assert "duplicate" in err.value.reason

    def test_oversized_doc_id_rejected(self, tmp_path):
        row = {"doc_id": "x" * 65536, "chunk_index": 0, "tokens": ["x"]}
        with pytest.raises(ChunkFileError) as err:
            read_chunk_file(_write(tmp_path / "c.jsonl", [row]))
        assert "65535" in err.value.reason
