"""Closed vocabulary and tokenization of referring expressions."""

from dataclasses import dataclass
from typing import Dict, List

from gated_grounder.config import GrammarConfig
from gated_grounder.errors import ParseError

UNK = "<unk>"
UNK_ID = 0
CONJUNCTION = "and"


@dataclass(frozen=True)
class Token:
    """A lowercased word and its vocabulary id."""

    text: str
    id: int


class Vocabulary:
    """Word <-> id mapping built from a grammar.

    Ids are assigned in a fixed order (UNK, conjunction, nouns, colors,
    relation words) so the same grammar always yields the same table.
    """

    def __init__(self, grammar: GrammarConfig):
        self.grammar = grammar
        words: List[str] = [UNK, CONJUNCTION]
        for word in [*grammar.nouns, *grammar.colors]:
            if word not in words:
                words.append(word)
        for phrase in grammar.relations:
            for word in phrase.split():
                if word not in words:
                    words.append(word)
        self.words = words
        self.ids: Dict[str, int] = {word: i for i, word in enumerate(words)}
        self.nouns = set(grammar.nouns)
        self.colors = set(grammar.colors)
        # longest phrases first so "left of" wins over any one-word prefix
        self.relation_phrases = sorted(
            (tuple(phrase.split()) for phrase in grammar.relations), key=len, reverse=True
        )

    def __len__(self) -> int:
        return len(self.words)

    def lookup(self, word: str) -> int:
        return self.ids.get(word, UNK_ID)


def tokenize(expression: str, vocab: Vocabulary) -> List[Token]:
    """Whitespace-split and lowercase an expression.

    Args:
        expression: Raw expression text
        vocab: Vocabulary for id lookup (unknown words map to UNK)

    Returns:
        Token sequence

    Raises:
        ParseError: If the expression has no tokens
    """
    words = expression.lower().split()
    if not words:
        raise ParseError("Expression is empty", position=0)
    return [Token(word, vocab.lookup(word)) for word in words]
