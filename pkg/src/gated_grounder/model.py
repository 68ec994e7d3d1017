"""The grounding model: parameters plus one forward pass per example."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from gated_grounder.autodiff import ops
from gated_grounder.autodiff.params import ParameterStore, ParamSpec
from gated_grounder.autodiff.tape import Tape, Var, backward
from gated_grounder.config import RunConfig
from gated_grounder.graphs.builder import CATEGORICAL, VISUAL, build_bimodal_graph
from gated_grounder.language.encoder import encode_language
from gated_grounder.language.parser import (
    LanguageSceneGraph,
    SubExpression,
    order_sub_expressions,
    parse,
    whole_expression,
)
from gated_grounder.language.vocabulary import Vocabulary, tokenize
from gated_grounder.matching.heads import (
    match_scores,
    matching_loss,
    matching_probabilities,
    refine_box,
    regression_loss,
    select_node,
    total_loss,
    training_target,
)
from gated_grounder.errors import ConfigurationError
from gated_grounder.models import Example, Prediction, Scene
from gated_grounder.reasoning.dgc import ReasoningResult, reason

logger = logging.getLogger(__name__)

SPATIAL_RAW = 5


def _uniform(*shape: int, fan_in: int) -> ParamSpec:
    return ParamSpec(shape=tuple(shape), fan_in=fan_in)


def parameter_specs(config: RunConfig, vocab_size: int) -> Dict[str, ParamSpec]:
    """Every trainable tensor, in initialization order.

    Args:
        config: Run configuration (scene vocabularies and model dimensions)
        vocab_size: Size of the token vocabulary

    Returns:
        Mapping of parameter name to ParamSpec
    """
    m = config.model
    d_t, h, d_g, s = m.token_dim, m.hidden_dim, m.graph_dim, m.spatial_dim
    specs: Dict[str, ParamSpec] = {
        "embed.tokens": _uniform(vocab_size, d_t, fan_in=1),
        "embed.category": _uniform(config.scene.num_categories, m.category_dim, fan_in=1),
        "embed.color": _uniform(config.scene.num_colors, m.color_dim, fan_in=1),
    }
    for direction in ("fwd", "bwd"):
        specs[f"encoder.{direction}.W_x"] = _uniform(h, d_t, fan_in=d_t)
        specs[f"encoder.{direction}.W_h"] = _uniform(h, h, fan_in=h)
        specs[f"encoder.{direction}.b"] = _uniform(h, fan_in=h)
    specs["spatial.W_mu"] = _uniform(s, SPATIAL_RAW, fan_in=SPATIAL_RAW)

    node_inputs = {
        VISUAL: config.scene.descriptor_dim,
        CATEGORICAL: m.category_dim + m.color_dim,
    }
    for graph, d_in in node_inputs.items():
        specs[f"{graph}.match.W_b1"] = _uniform(m.attention_dim, d_in, fan_in=d_in)
        specs[f"{graph}.match.W_l"] = _uniform(m.attention_dim, d_t, fan_in=d_t)
        specs[f"{graph}.match.W_b2"] = _uniform(1, m.attention_dim, fan_in=m.attention_dim)
        fan_node = d_in + s + d_t
        specs[f"{graph}.W_a"] = _uniform(d_g, fan_node, fan_in=fan_node)
        specs[f"{graph}.b_a"] = _uniform(d_g, fan_in=fan_node)
        specs[f"{graph}.W_e"] = _uniform(d_g, 2 * d_g + 2 * s, fan_in=2 * d_g + 2 * s)
        specs[f"{graph}.W_f"] = _uniform(d_g, d_t, fan_in=d_t)
        specs[f"{graph}.W_Q"] = _uniform(1, d_g, fan_in=d_g)
        specs[f"{graph}.W_s"] = _uniform(d_g, 2 * h, fan_in=2 * h)
        specs[f"{graph}.W_nu"] = _uniform(1, d_g, fan_in=d_g)
        for step in range(1, m.max_steps + 1):
            prefix = f"{graph}.step{step}"
            specs[f"{prefix}.W_tilde"] = _uniform(d_g, d_g, fan_in=d_g)
            specs[f"{prefix}.b_tilde"] = _uniform(d_g, fan_in=d_g)
            specs[f"{prefix}.W_hat"] = _uniform(d_g, d_g, fan_in=d_g)
            specs[f"{prefix}.b_hat"] = _uniform(d_g, fan_in=d_g)
            specs[f"{prefix}.W_k"] = _uniform(d_g, d_g, fan_in=d_g)
        specs[f"{graph}.W_v"] = _uniform(m.match_dim, d_g, fan_in=d_g)
    specs["match.W_q"] = _uniform(m.match_dim, 2 * h, fan_in=2 * h)

    fan_egr = 2 * d_g + 2 * h
    specs["egr.W1"] = _uniform(m.regression_hidden, fan_egr, fan_in=fan_egr)
    specs["egr.b1"] = _uniform(m.regression_hidden, fan_in=fan_egr)
    specs["egr.W2"] = _uniform(4, m.regression_hidden, fan_in=m.regression_hidden)
    # start from the mean box of the scene generator
    mid = (config.scene.min_size + config.scene.max_size) / 2
    specs["egr.b2"] = ParamSpec(shape=(4,), init="constant", fill=(0.5, 0.5, mid, mid))
    return specs


@dataclass
class ForwardResult:
    """Loss, prediction and reasoning record of one example."""

    tape: Tape
    loss: Var
    loss_ce: float
    loss_reg: float
    target: int
    prediction: Prediction
    reasoning: ReasoningResult
    language: LanguageSceneGraph
    order: List[SubExpression]


class GroundingModel:
    """Parameters plus the forward pass of the grounding pipeline.

    Args:
        config: Run configuration (dimensions and ablation flags)
        store: Existing parameters (freshly initialized if None)
    """

    def __init__(self, config: RunConfig, store: Optional[ParameterStore] = None):
        self.config = config
        self.vocab = Vocabulary(config.grammar)
        self.specs = parameter_specs(config, len(self.vocab))
        if store is None:
            store = ParameterStore.initialize(self.specs, config.model.param_seed)
        else:
            store.check_specs(self.specs)
        self.store = store

    def parse(self, expression: str) -> Tuple[LanguageSceneGraph, List[SubExpression]]:
        """Language graph and sub-expressions in the configured order."""
        graph = parse(tokenize(expression, self.vocab), self.vocab)
        return graph, order_sub_expressions(graph, self.config.ablation.order)

    def check_scene(self, scene: Scene) -> None:
        """Category and color ids must index the embedding tables.

        Raises:
            ConfigurationError: If an id is outside the configured vocabularies
        """
        limits = {
            "category": self.config.scene.num_categories,
            "color": self.config.scene.num_colors,
        }
        for obj in scene.objects:
            for attr, limit in limits.items():
                value = getattr(obj, attr)
                if value >= limit:
                    raise ConfigurationError(
                        f"Object {obj.id} has {attr} {value}, but the config only has {limit}"
                    )

    def forward(
        self, example: Example, tape: Optional[Tape] = None, open_gates: bool = False
    ) -> ForwardResult:
        """Run the full pipeline on one example and mark its loss on the tape.

        Args:
            example: Scene (detector boxes) and ground truth
            tape: Tape to record on (a fresh one over self.store if None)
            open_gates: Activate every node while keeping per-step guidance

        Returns:
            ForwardResult

        Raises:
            ParseError: If the expression is outside the grammar
            ConfigurationError: If the scene uses ids the model has no embedding for
            NumericError: If any intermediate value is non-finite
        """
        tape = Tape(self.store) if tape is None else tape
        ablation = self.config.ablation
        scene, truth = example.scene, example.truth
        self.check_scene(scene)

        graph, order = self.parse(truth.expression)
        if not ablation.dgc:
            order = [whole_expression(graph)]
        language = encode_language(graph, tape)
        bimodal = build_bimodal_graph(scene, language, tape, ablation.graphs)
        result = reason(
            bimodal,
            language,
            order,
            tape,
            self.config.model.max_steps,
            dgc=ablation.dgc,
            open_gates=open_gates,
        )

        scores = {}
        degenerate = np.zeros(scene.num_objects, dtype=bool)
        for g in (result.visual, result.categorical):
            if g is not None:
                scores[g.name], flags = match_scores(g.features, language.q, g.name, tape)
                degenerate |= flags
        if len(scores) == 2:
            combined = ops.add(scores[VISUAL], scores[CATEGORICAL])
            theta_a, theta_c = scores[VISUAL].value, scores[CATEGORICAL].value
        else:
            only = next(iter(scores.values()))
            combined = ops.scale(only, 2.0)
            theta_a = theta_c = only.value

        target = training_target(scene, truth)
        ce = matching_loss(combined, target)
        selected = select_node(theta_a, theta_c)
        raw_box = list(scene.objects[selected].box)

        if ablation.egr:
            box_target = self._refine(result, language.q, target, tape)
            reg = regression_loss(box_target, truth.target_box)
            if selected == target:
                box_selected = box_target
            else:
                box_selected = self._refine(result, language.q, selected, tape)
            loss = total_loss(ce, reg)
            refined_box = box_selected.value.tolist()
            loss_reg = reg.item()
        else:
            loss = ce
            refined_box = raw_box
            loss_reg = 0.0
        tape.mark_loss(loss)

        prediction = Prediction(
            scores_visual=theta_a.tolist(),
            scores_categorical=theta_c.tolist(),
            probabilities=matching_probabilities(theta_a, theta_c).tolist(),
            selected_id=selected,
            refined_box=refined_box,
            raw_box=raw_box,
            degenerate_nodes=np.flatnonzero(degenerate).tolist(),
        )
        return ForwardResult(
            tape=tape,
            loss=loss,
            loss_ce=ce.item(),
            loss_reg=loss_reg,
            target=target,
            prediction=prediction,
            reasoning=result,
            language=graph,
            order=order,
        )

    def _refine(self, result: ReasoningResult, q: Var, node: int, tape: Tape) -> Var:
        d_g = self.config.model.graph_dim
        features = []
        for graph in (result.visual, result.categorical):
            if graph is None:
                features.append(tape.constant(np.zeros(d_g)))
            else:
                features.append(ops.take(graph.features, node))
        return refine_box(features[0], features[1], q, tape)

    def forward_and_tape(
        self, batch: Sequence[Example], open_gates: bool = False
    ) -> Tuple[float, List[ForwardResult]]:
        """Forward every example of a batch on its own tape; returns the mean loss."""
        results = [self.forward(example, open_gates=open_gates) for example in batch]
        return float(np.mean([r.loss.item() for r in results])), results

    def gradients(self, results: Sequence[ForwardResult]) -> Dict[str, np.ndarray]:
        """Batch-mean gradients for every parameter."""
        total = {name: np.zeros_like(value) for name, value in self.store.items()}
        for result in results:
            for name, grad in backward(result.tape).items():
                total[name] += grad
        return {name: grad / len(results) for name, grad in total.items()}
