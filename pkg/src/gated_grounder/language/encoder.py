"""Text encoders: token embeddings and a bidirectional recurrent encoder."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from gated_grounder.autodiff import ops
from gated_grounder.autodiff.tape import Tape, Var
from gated_grounder.language.parser import LanguageSceneGraph
from gated_grounder.language.vocabulary import Token

TOKEN_TABLE = "embed.tokens"


@dataclass
class LanguageEncoding:
    """Continuous features of a parsed expression.

    Attributes:
        chunks: (N, D_t) chunk embeddings v^l_j
        relations: (R, D_t) relation edge features e^l, None without relations
        q: (2H,) whole-expression embedding
        whole: (D_t,) mean token embedding of the whole expression
    """

    chunks: Var
    relations: Optional[Var]
    q: Var
    whole: Var

    def gamma(self, chunk: int) -> Var:
        return ops.take(self.chunks, chunk)


def encode_ids(token_ids: Sequence[int], tape: Tape) -> Var:
    """Bidirectional tanh-RNN over token ids; returns [h_fwd_last; h_bwd_last]."""
    if len(token_ids) == 0:
        raise ValueError("Cannot encode an empty token sequence")
    embedded = ops.take(tape.param(TOKEN_TABLE), np.asarray(token_ids, dtype=np.int64))
    finals = []
    for direction in ("fwd", "bwd"):
        pre = ops.add(
            ops.linear(embedded, tape.param(f"encoder.{direction}.W_x")),
            tape.param(f"encoder.{direction}.b"),
        )
        w_h = tape.param(f"encoder.{direction}.W_h")
        finals.append(ops.tanh_rnn(pre, w_h, reverse=direction == "bwd"))
    return ops.concat(finals)


def encode_expression(tokens: Sequence[Token], tape: Tape) -> Var:
    """Whole-expression embedding q of dimension 2H."""
    return encode_ids([token.id for token in tokens], tape)


def encode_chunk(tokens: Sequence[Token], tape: Tape) -> Var:
    """Mean-pooled token embeddings of one chunk, dimension D_t."""
    if len(tokens) == 0:
        raise ValueError("Cannot encode an empty chunk")
    ids = np.asarray([token.id for token in tokens], dtype=np.int64)
    return ops.mean(ops.take(tape.param(TOKEN_TABLE), ids), axis=0)


def _pooled(groups: Sequence[Sequence[Token]], tape: Tape) -> Var:
    # one gather plus one averaging matmul for all groups
    ids = np.asarray([token.id for group in groups for token in group], dtype=np.int64)
    pool = np.zeros((len(groups), len(ids)))
    start = 0
    for row, group in enumerate(groups):
        pool[row, start:start + len(group)] = 1.0 / len(group)
        start += len(group)
    return ops.matmul(pool, ops.take(tape.param(TOKEN_TABLE), ids))


def encode_language(graph: LanguageSceneGraph, tape: Tape) -> LanguageEncoding:
    """Encode chunks, relation edges and the whole expression."""
    chunks = _pooled([chunk.tokens for chunk in graph.chunks], tape)
    relations = _pooled([rel.tokens for rel in graph.relations], tape) if graph.relations else None
    q = encode_expression(graph.tokens, tape)
    whole = encode_chunk(graph.tokens, tape)
    return LanguageEncoding(chunks=chunks, relations=relations, q=q, whole=whole)


def encode_visited(visited: Sequence[Sequence[Token]], tape: Tape) -> Var:
    """f_s: the encoder run over the concatenated tokens of the visited set."""
    if not visited:
        raise ValueError("Visited set is empty")
    return encode_ids([token.id for tokens in visited for token in tokens], tape)
