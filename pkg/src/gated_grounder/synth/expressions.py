"""Referring-expression generation and exhaustive clause checking."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gated_grounder.config import GrammarConfig
from gated_grounder.errors import GenerationError
from gated_grounder.language.parser import LanguageSceneGraph, NounChunk, parse
from gated_grounder.language.vocabulary import Vocabulary, tokenize
from gated_grounder.models import GroundTruth, Scene
from gated_grounder.synth.relations import relation_holds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChunkSpec:
    """A noun chunk as words: optional color attribute plus a noun."""

    noun: str
    color: Optional[str] = None

    def render(self) -> str:
        return f"{self.color} {self.noun}" if self.color else self.noun


@dataclass(frozen=True)
class ClauseSpec:
    """`subject relation anchor`; a clause without relation is a bare chunk."""

    subject: ChunkSpec
    relation: Optional[str] = None
    anchor: Optional[ChunkSpec] = None

    def render(self) -> str:
        if self.relation is None:
            return self.subject.render()
        return f"{self.subject.render()} {self.relation} {self.anchor.render()}"


def render(clauses: Sequence[ClauseSpec]) -> str:
    return " and ".join(clause.render() for clause in clauses)


def chunk_matches(scene: Scene, index: int, chunk: ChunkSpec, grammar: GrammarConfig) -> bool:
    """True if object `index` has the chunk's category and (if given) color."""
    obj = scene.objects[index]
    if grammar.nouns[obj.category] != chunk.noun:
        return False
    return chunk.color is None or grammar.colors[obj.color] == chunk.color


def satisfies_clause(scene: Scene, index: int, clause: ClauseSpec, grammar: GrammarConfig) -> bool:
    """Check one clause for one candidate, trying every other object as anchor.

    Args:
        scene: Scene whose boxes define the geometry
        index: Candidate standing in for the clause subject
        clause: Clause to verify
        grammar: Word lists mapping ids to words, plus the relation margin

    Returns:
        True if the subject chunk matches and some anchor satisfies the relation
    """
    if not chunk_matches(scene, index, clause.subject, grammar):
        return False
    if clause.relation is None:
        return True
    boxes = scene.boxes()
    for other in range(scene.num_objects):
        if other == index or not chunk_matches(scene, other, clause.anchor, grammar):
            continue
        if relation_holds(clause.relation, boxes[index], boxes[other], grammar.relation_margin):
            return True
    return False


def matching_objects(
    scene: Scene, clauses: Sequence[ClauseSpec], grammar: GrammarConfig
) -> List[int]:
    """Ids of every object satisfying all clauses."""
    return [
        i for i in range(scene.num_objects)
        if all(satisfies_clause(scene, i, clause, grammar) for clause in clauses)
    ]


def _chunk_spec(chunk: NounChunk) -> ChunkSpec:
    # the generator never emits more than one attribute
    return ChunkSpec(noun=chunk.noun, color=chunk.attributes[-1] if chunk.attributes else None)


def clauses_of(graph: LanguageSceneGraph) -> List[ClauseSpec]:
    """Recover clause specs from a parsed expression."""
    if not graph.relations:
        return [ClauseSpec(subject=_chunk_spec(graph.chunks[0]))]
    return [
        ClauseSpec(
            subject=_chunk_spec(graph.chunks[rel.subject]),
            relation=rel.phrase,
            anchor=_chunk_spec(graph.chunks[rel.object]),
        )
        for rel in graph.relations
    ]


def replay_expression(scene: Scene, expression: str, grammar: GrammarConfig) -> List[int]:
    """Parse an expression and return the ids it identifies in `scene`."""
    vocab = Vocabulary(grammar)
    graph = parse(tokenize(expression, vocab), vocab)
    return matching_objects(scene, clauses_of(graph), grammar)


def _maybe_color(rng: np.random.Generator, grammar: GrammarConfig, color_id: int) -> Optional[str]:
    return grammar.colors[color_id] if rng.random() < grammar.color_probability else None


def generate_expression(scene: Scene, grammar: GrammarConfig, seed: int) -> Tuple[str, GroundTruth]:
    """Generate a conjunction of relation clauses that singles out the target.

    Every clause shares the target's subject chunk; anchors are drawn from
    the (anchor, relation) pairs that hold for the target on the scene
    geometry. Candidates are resampled until the exhaustive checker
    identifies exactly the target.

    Args:
        scene: Scene with the true (un-jittered) geometry
        grammar: Vocabulary, clause-count range and retry budget
        seed: Generation seed

    Returns:
        Expression text and its ground truth

    Raises:
        GenerationError: If no unique expression is found within max_retries
    """
    rng = np.random.default_rng(seed)
    target = scene.target_id
    boxes = scene.boxes()
    pairs = [
        (anchor, relation)
        for anchor in range(scene.num_objects)
        if anchor != target
        for relation in grammar.relations
        if relation_holds(relation, boxes[target], boxes[anchor], grammar.relation_margin)
    ]
    if not pairs:
        raise GenerationError(f"No relation holds for target {target} in scene {scene.seed}")

    target_obj = scene.objects[target]
    high = min(grammar.max_clauses, len(pairs))
    low = min(grammar.min_clauses, high)

    for attempt in range(grammar.max_retries):
        count = int(rng.integers(low, high + 1))
        chosen = rng.choice(len(pairs), size=count, replace=False)
        subject = ChunkSpec(
            grammar.nouns[target_obj.category], _maybe_color(rng, grammar, target_obj.color)
        )
        clauses = []
        for p in sorted(chosen.tolist()):
            anchor, relation = pairs[p]
            anchor_obj = scene.objects[anchor]
            anchor_chunk = ChunkSpec(
                grammar.nouns[anchor_obj.category], _maybe_color(rng, grammar, anchor_obj.color)
            )
            clauses.append(ClauseSpec(subject, relation, anchor_chunk))

        if matching_objects(scene, clauses, grammar) == [target]:
            text = render(clauses)
            truth = GroundTruth(target_box=list(target_obj.box), target_id=target, expression=text)
            return text, truth
        logger.debug("Expression attempt %d for scene %d was ambiguous", attempt + 1, scene.seed)

    raise GenerationError(
        f"No unique expression for target {target} after {grammar.max_retries} attempts"
    )
