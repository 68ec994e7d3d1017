"""Tests for the token and expression encoders."""

import numpy as np
import pytest

from gated_grounder.autodiff.tape import Tape
from gated_grounder.language.encoder import (
    encode_chunk,
    encode_ids,
    encode_language,
    encode_visited,
)


def _reference_birnn(store, ids):
    """Straight-line bidirectional tanh RNN."""
    x = store["embed.tokens"][ids]
    finals = []
    for direction, order in (("fwd", range(len(ids))), ("bwd", range(len(ids) - 1, -1, -1))):
        w_x, w_h, b = (store[f"encoder.{direction}.{n}"] for n in ("W_x", "W_h", "b"))
        h = np.zeros(w_h.shape[0])
        for t in order:
            h = np.tanh(w_x @ x[t] + w_h @ h + b)
        finals.append(h)
    return np.concatenate(finals)


def test_expression_embedding_matches_reference(model):
    ids = [2, 5, 9, 3, 1, 4]
    q = encode_ids(ids, Tape(model.store))
    assert q.shape == (2 * model.config.model.hidden_dim,)
    np.testing.assert_allclose(q.value, _reference_birnn(model.store, ids), atol=1e-12)


def test_direction_matters(model):
    tape = Tape(model.store)
    assert not np.allclose(encode_ids([2, 3], tape).value, encode_ids([3, 2], tape).value)


def test_chunk_embedding_is_mean_pooled(model):
    graph, _ = model.parse("red box left of cup")
    v = encode_chunk(graph.chunks[0].tokens, Tape(model.store))
    table = model.store["embed.tokens"]
    expected = (table[model.vocab.lookup("red")] + table[model.vocab.lookup("box")]) / 2
    np.testing.assert_allclose(v.value, expected, atol=1e-15)


def test_language_encoding_shapes_and_pooling(model):
    graph, _ = model.parse("red box left of blue ball and box above cup")
    tape = Tape(model.store)
    encoding = encode_language(graph, tape)
    d_t = model.config.model.token_dim
    assert encoding.chunks.shape == (4, d_t)
    assert encoding.relations.shape == (2, d_t)
    for i, chunk in enumerate(graph.chunks):
        np.testing.assert_allclose(
            encoding.gamma(i).value, encode_chunk(chunk.tokens, tape).value, atol=1e-15
        )
    bare, _ = model.parse("cup")
    assert encode_language(bare, tape).relations is None


def test_visited_set_encodes_concatenated_tokens(model):
    graph, order = model.parse("box left of ball and box above cup")
    tape = Tape(model.store)
    f_s = encode_visited([s.tokens for s in order], tape)
    ids = [t.id for s in order for t in s.tokens]
    np.testing.assert_allclose(f_s.value, _reference_birnn(model.store, ids), atol=1e-12)


def test_empty_inputs_raise(model):
    tape = Tape(model.store)
    with pytest.raises(ValueError):
        encode_ids([], tape)
    with pytest.raises(ValueError):
        encode_visited([], tape)
