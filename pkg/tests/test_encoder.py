"""Chunk encoder: vocabulary, forward identities, hand-derived gradients."""

from __future__ import annotations

import numpy as np
import pytest
from conftest import finite_difference_max_error

from d2sattn import (
    ChunkPolicy,
    DocumentMatrix,
    EmbeddingStore,
    EncoderGradients,
    EncoderParameters,
    ReferenceEncoder,
    TokenVocabulary,
    chunk,
    encode_chunk,
    encode_document,
    init_encoder_params,
)
from d2sattn.encoder import (
    OOV_ID,
    encode_chunk_with_cache,
    encode_document_with_cache,
    encoder_backward,
    encoder_backward_document,
)
from d2sattn.errors import EmptyChunkError, MissingEmbeddingError


class TestTokenVocabulary:
    def test_build_orders_by_frequency_then_lexicographic(self):
        lists = [["b", "a", "b"], ["c", "a", "b"]]
        vocab = TokenVocabulary.build(lists, cap=10)
        assert vocab.tokens == ["b", "a", "c"]

    def test_cap_and_oov(self):
        vocab = TokenVocabulary.build([["a", "a", "b", "c"]], cap=2)
        assert vocab.tokens == ["a", "b"]
        assert vocab.size == 3  # two tokens + the OOV slot
        assert vocab.ids(["a", "b", "zzz"]).tolist() == [1, 2, OOV_ID]

    def test_oov_id_is_zero(self):
        assert OOV_ID == 0
        vocab = TokenVocabulary(["x"])
        assert vocab.ids(["missing"]).tolist() == [0]


class TestInit:
    def test_bounds_and_bias(self):
        rng = np.random.default_rng(0)
        params = init_encoder_params(vocab_size=50, h=16, rng=rng)
        bound = 1.0 / 4.0
        assert np.all(np.abs(params.token_embeddings) <= bound)
        assert np.all(np.abs(params.projection) <= bound)
        assert np.all(params.proj_bias == 0.0)
        assert params.h == 16

    def test_seeded_reproducibility(self):
        a = init_encoder_params(10, 4, np.random.default_rng(5))
        b = init_encoder_params(10, 4, np.random.default_rng(5))
        assert np.array_equal(a.token_embeddings, b.token_embeddings)


def _identity_params(vocab_size, h, rng=None):
    emb = (
        np.zeros((vocab_size, h))
        if rng is None
        else rng.uniform(-0.5, 0.5, size=(vocab_size, h))
    )
    return EncoderParameters(emb, np.eye(h), np.zeros(h))


class TestEncodeChunk:
    def test_single_token_identity_projection(self):
        rng = np.random.default_rng(1)
        params = _identity_params(5, 4, rng)
        out = encode_chunk(params, np.array([2]))
        assert np.allclose(out, np.tanh(params.token_embeddings[2]))

    def test_two_token_mean_pool(self):
        rng = np.random.default_rng(2)
        params = _identity_params(5, 4, rng)
        e1, e2 = params.token_embeddings[1], params.token_embeddings[3]
        out = encode_chunk(params, np.array([1, 3]))
        assert np.allclose(out, np.tanh((e1 + e2) / 2.0))

    def test_zero_parameters_fixed_point(self):
        params = EncoderParameters(np.zeros((4, 3)), np.zeros((3, 3)), np.zeros(3))
        assert np.array_equal(encode_chunk(params, np.array([0, 1])), np.zeros(3))

    def test_token_order_invariance(self):
        rng = np.random.default_rng(3)
        params = init_encoder_params(20, 6, rng)
        ids = rng.integers(0, 20, size=7)
        perm = rng.permutation(7)
        assert np.allclose(
            encode_chunk(params, ids), encode_chunk(params, ids[perm]), atol=1e-15
        )

    def test_output_bounded_open_interval(self):
        rng = np.random.default_rng(4)
        params = init_encoder_params(20, 8, rng)
        for _ in range(10):
            ids = rng.integers(0, 20, size=int(rng.integers(1, 9)))
            out = encode_chunk(params, ids)
            assert np.all(out > -1.0) and np.all(out < 1.0)

    def test_empty_chunk_rejected(self):
        params = init_encoder_params(4, 2, np.random.default_rng(0))
        with pytest.raises(EmptyChunkError):
            encode_chunk(params, np.array([], dtype=np.int64))


class TestChunkBackward:
    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(5)
        params = init_encoder_params(10, 4, rng)
        _, cache = encode_chunk_with_cache(params, np.array([1, 2, 3]))
        grads = encoder_backward(params, cache, np.zeros(4))
        assert not grads.token_embeddings.any()
        assert not grads.projection.any()
        assert not grads.proj_bias.any()

    def test_absent_token_rows_stay_zero(self):
        rng = np.random.default_rng(6)
        params = init_encoder_params(10, 4, rng)
        _, cache = encode_chunk_with_cache(params, np.array([2, 5]))
        grads = encoder_backward(params, cache, rng.standard_normal(4))
        touched = np.flatnonzero(np.abs(grads.token_embeddings).sum(axis=1))
        assert set(touched.tolist()) <= {2, 5}

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        params = init_encoder_params(6, 4, rng)
        ids = np.array([1, 4, 4])
        upstream = rng.standard_normal(4)

        def loss():
            return float(upstream @ encode_chunk(params, ids))

        _, cache = encode_chunk_with_cache(params, ids)
        grads = encoder_backward(params, cache, upstream)
        err = finite_difference_max_error(
            loss,
            [
                (params.token_embeddings, grads.token_embeddings),
                (params.projection, grads.projection),
                (params.proj_bias, grads.proj_bias),
            ],
        )
        assert err <= 1e-4

    def test_repeated_token_accumulates(self):
        # a token appearing twice in the chunk receives both shares of dx/len
        rng = np.random.default_rng(8)
        params = _identity_params(4, 3, rng)
        _, cache = encode_chunk_with_cache(params, np.array([2, 2]))
        upstream = np.ones(3)
        grads = encoder_backward(params, cache, upstream)
        dt = upstream * (1.0 - cache.output**2)
        assert np.allclose(grads.token_embeddings[2], dt)  # 2 * dt/2


def _toy_doc(rng, vocab, n_tokens, w, n):
    words = [vocab.tokens[int(rng.integers(0, len(vocab.tokens)))] for _ in range(n_tokens)]
    return chunk(words, ChunkPolicy(words_per_chunk=w, max_chunks=n), "doc")


class TestEncodeDocument:
    def test_fused_matches_per_chunk_compose(self, kernel_backend):
        rng = np.random.default_rng(9)
        vocab = TokenVocabulary([f"t{i}" for i in range(12)])
        encoder = ReferenceEncoder(vocab, init_encoder_params(vocab.size, 5, rng))
        doc = _toy_doc(rng, vocab, 17, 4, 6)
        dm = encode_document(encoder, doc)
        assert dm.d.shape == (5, 6)
        for j, ch in enumerate(doc.chunks):
            if doc.valid_mask[j]:
                expected = encode_chunk(encoder.params, vocab.ids(ch))
                assert np.allclose(dm.d[:, j], expected, atol=1e-12)
            else:
                assert not dm.d[:, j].any()

    def test_masked_columns_zero_and_mask_copied(self, kernel_backend):
        rng = np.random.default_rng(10)
        vocab = TokenVocabulary([f"t{i}" for i in range(8)])
        encoder = ReferenceEncoder(vocab, init_encoder_params(vocab.size, 4, rng))
        doc = _toy_doc(rng, vocab, 5, 3, 4)  # 2 valid, 2 masked
        dm = encode_document(encoder, doc)
        assert dm.valid_mask.tolist() == [True, True, False, False]
        assert not dm.d[:, 2:].any()
        assert dm.n_valid == 2

    def test_document_backward_matches_per_chunk_sum(self, kernel_backend):
        rng = np.random.default_rng(11)
        vocab = TokenVocabulary([f"t{i}" for i in range(10)])
        params = init_encoder_params(vocab.size, 4, rng)
        encoder = ReferenceEncoder(vocab, params)
        doc = _toy_doc(rng, vocab, 11, 4, 4)
        dm, cache = encode_document_with_cache(encoder, doc)
        upstream = rng.standard_normal(dm.d.shape)
        upstream[:, ~dm.valid_mask] = 0.0

        fused = EncoderGradients.zeros_like(params)
        encoder_backward_document(params, cache, dm, upstream, fused)

        composed = EncoderGradients.zeros_like(params)
        for j, ch in enumerate(doc.valid_chunks()):
            _, ch_cache = encode_chunk_with_cache(params, vocab.ids(ch))
            encoder_backward(params, ch_cache, upstream[:, j], out=composed)

        assert np.allclose(fused.token_embeddings, composed.token_embeddings, atol=1e-12)
        assert np.allclose(fused.projection, composed.projection, atol=1e-12)
        assert np.allclose(fused.proj_bias, composed.proj_bias, atol=1e-12)


class TestStoreMode:
    def _store_for(self, doc, h, rng):
        store = EmbeddingStore(h=h)
        for j, ok in enumerate(doc.valid_mask):
            if ok:
                store.vectors[(doc.doc_id, j)] = rng.standard_normal(h).astype(np.float32)
        return store

    def test_lookup_populates_columns(self):
        rng = np.random.default_rng(12)
        vocab = TokenVocabulary([f"t{i}" for i in range(6)])
        doc = _toy_doc(rng, vocab, 7, 3, 4)
        store = self._store_for(doc, 5, rng)
        dm = encode_document(store, doc)
        assert dm.d.dtype == np.float64
        for j in range(doc.n_chunks):
            if doc.valid_mask[j]:
                assert np.allclose(dm.d[:, j], store.vectors[(doc.doc_id, j)])
            else:
                assert not dm.d[:, j].any()

    def test_missing_embedding_raises(self):
        rng = np.random.default_rng(13)
        vocab = TokenVocabulary([f"t{i}" for i in range(6)])
        doc = _toy_doc(rng, vocab, 7, 3, 4)
        store = self._store_for(doc, 5, rng)
        del store.vectors[(doc.doc_id, 1)]
        with pytest.raises(MissingEmbeddingError) as err:
            encode_document(store, doc)
        assert err.value.chunk_index == 1


def test_document_matrix_properties():
    dm = DocumentMatrix(np.zeros((3, 4)), np.array([True, True, False, False]))
    assert (dm.h, dm.n, dm.n_valid) == (3, 4, 2)
