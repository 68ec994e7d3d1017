"""Expression language: vocabulary, parser and text encoders."""

from gated_grounder.language.encoder import (
    LanguageEncoding,
    encode_chunk,
    encode_expression,
    encode_language,
    encode_visited,
)
from gated_grounder.language.parser import (
    LanguageSceneGraph,
    NounChunk,
    Relation,
    SubExpression,
    describe,
    order_sub_expressions,
    parse,
)
from gated_grounder.language.vocabulary import UNK_ID, Token, Vocabulary, tokenize

__all__ = [
    "LanguageEncoding",
    "LanguageSceneGraph",
    "NounChunk",
    "Relation",
    "SubExpression",
    "Token",
    "UNK_ID",
    "Vocabulary",
    "describe",
    "encode_chunk",
    "encode_expression",
    "encode_language",
    "encode_visited",
    "order_sub_expressions",
    "parse",
    "tokenize",
]
