"""Grammar parser producing the language scene graph.

Grammar of the closed expression language::

    expr   := clause ("and" clause)* | chunk
    clause := chunk REL chunk
    chunk  := attr* noun
"""

from dataclasses import dataclass, replace
from typing import List, Literal, Sequence, Tuple

from gated_grounder.errors import ParseError
from gated_grounder.language.vocabulary import CONJUNCTION, UNK_ID, Token, Vocabulary

Order = Literal["forward", "backward"]


@dataclass(frozen=True)
class NounChunk:
    """One noun chunk occurrence."""

    tokens: Tuple[Token, ...]
    attributes: Tuple[str, ...]
    noun: str
    start: int

    @property
    def text(self) -> str:
        return " ".join(token.text for token in self.tokens)


@dataclass(frozen=True)
class Relation:
    """Edge of the language graph: subject chunk -> object chunk."""

    subject: int
    tokens: Tuple[Token, ...]
    object: int

    @property
    def phrase(self) -> str:
        return " ".join(token.text for token in self.tokens)


@dataclass(frozen=True)
class SubExpression:
    """A clause guiding one reasoning step.

    `subject` and `object` index the graph's chunks and select gamma_1 and
    gamma_2; a bare chunk has subject == object. `clause` is the parse
    position, `index` the position in processing order.
    """

    subject: int
    object: int
    tokens: Tuple[Token, ...]
    clause: int
    index: int

    @property
    def text(self) -> str:
        return " ".join(token.text for token in self.tokens)

    @property
    def single_chunk(self) -> bool:
        return self.subject == self.object


@dataclass(frozen=True)
class LanguageSceneGraph:
    """Noun chunks, relations and ordered sub-expressions of an expression."""

    tokens: Tuple[Token, ...]
    chunks: Tuple[NounChunk, ...]
    relations: Tuple[Relation, ...]
    sub_expressions: Tuple[SubExpression, ...]

    @property
    def num_chunks(self) -> int:
        return len(self.chunks)

    @property
    def num_steps(self) -> int:
        return len(self.sub_expressions)

    @property
    def text(self) -> str:
        return " ".join(token.text for token in self.tokens)


class _Cursor:
    def __init__(self, tokens: Sequence[Token], vocab: Vocabulary):
        self.tokens = list(tokens)
        self.vocab = vocab
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected: str) -> ParseError:
        if self.at_end():
            return ParseError(
                f"Expected {expected} at position {self.pos}, got end of input", self.pos
            )
        token = self.peek()
        detail = "unknown word" if token.id == UNK_ID else f"'{token.text}'"
        return ParseError(f"Expected {expected} at position {self.pos}, got {detail}", self.pos)

    def chunk(self) -> NounChunk:
        start = self.pos
        attributes = []
        while not self.at_end() and self.peek().text in self.vocab.colors:
            attributes.append(self.peek().text)
            self.pos += 1
        if self.at_end() or self.peek().text not in self.vocab.nouns or self.peek().id == UNK_ID:
            raise self.fail("a noun")
        noun = self.peek().text
        self.pos += 1
        return NounChunk(tuple(self.tokens[start:self.pos]), tuple(attributes), noun, start)

    def relation(self) -> Tuple[Token, ...]:
        for phrase in self.vocab.relation_phrases:
            end = self.pos + len(phrase)
            if tuple(t.text for t in self.tokens[self.pos:end]) == phrase:
                matched = tuple(self.tokens[self.pos:end])
                self.pos = end
                return matched
        raise self.fail("a relation")


def parse(tokens: Sequence[Token], vocab: Vocabulary) -> LanguageSceneGraph:
    """Parse a token sequence into a language scene graph.

    Args:
        tokens: Output of tokenize()
        vocab: Vocabulary holding the grammar's word classes

    Returns:
        Graph with one node per chunk occurrence, one relation and one
        sub-expression per clause; a bare chunk yields a single
        sub-expression with gamma_1 == gamma_2

    Raises:
        ParseError: If the tokens fall outside the grammar
    """
    if not tokens:
        raise ParseError("Expression is empty", position=0)
    cursor = _Cursor(tokens, vocab)
    chunks: List[NounChunk] = [cursor.chunk()]
    relations: List[Relation] = []
    subs: List[SubExpression] = []

    if cursor.at_end():
        subs.append(SubExpression(0, 0, chunks[0].tokens, clause=0, index=0))
    else:
        while True:
            clause_start = chunks[-1].start
            subject = len(chunks) - 1
            rel_tokens = cursor.relation()
            chunks.append(cursor.chunk())
            relations.append(Relation(subject, rel_tokens, len(chunks) - 1))
            clause_tokens = tuple(cursor.tokens[clause_start:cursor.pos])
            subs.append(
                SubExpression(
                    subject, len(chunks) - 1, clause_tokens, clause=len(subs), index=len(subs)
                )
            )
            if cursor.at_end():
                break
            if cursor.peek().text != CONJUNCTION:
                raise cursor.fail(f"'{CONJUNCTION}'")
            cursor.pos += 1
            chunks.append(cursor.chunk())

    return LanguageSceneGraph(tuple(tokens), tuple(chunks), tuple(relations), tuple(subs))


def order_sub_expressions(
    graph: LanguageSceneGraph, order: Order = "backward"
) -> List[SubExpression]:
    """Sub-expressions in processing order.

    Args:
        graph: Parsed language graph
        order: "forward" keeps parse order, "backward" reverses it

    Returns:
        Sub-expressions with `index` set to their processing position
    """
    if order not in ("forward", "backward"):
        raise ValueError(f"Unknown order: {order}")
    ordered = list(graph.sub_expressions)
    if order == "backward":
        ordered.reverse()
    return [replace(sub, index=i) for i, sub in enumerate(ordered)]


def whole_expression(graph: LanguageSceneGraph) -> SubExpression:
    """The full expression as one step, rooted at the first chunk (clause -1)."""
    return SubExpression(subject=0, object=0, tokens=graph.tokens, clause=-1, index=0)


def describe(graph: LanguageSceneGraph) -> str:
    """Indented text rendering of a language graph."""
    lines = [f"expression: {graph.text}", f"chunks (N={graph.num_chunks}):"]
    for i, chunk in enumerate(graph.chunks):
        attrs = ",".join(chunk.attributes) or "-"
        lines.append(f"  [{i}] {chunk.text}  (noun={chunk.noun}, attrs={attrs})")
    lines.append(f"relations ({len(graph.relations)}):")
    for i, rel in enumerate(graph.relations):
        lines.append(f"  [{i}] {rel.subject} --{rel.phrase}--> {rel.object}")
    lines.append(f"sub-expressions (T={graph.num_steps}):")
    for sub in graph.sub_expressions:
        lines.append(f"  [{sub.clause}] {sub.text}  (chunks {sub.subject}, {sub.object})")
    return "\n".join(lines)
