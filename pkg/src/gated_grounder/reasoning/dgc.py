"""Sub-expression-guided dynamic gating and gated message passing."""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from gated_grounder.autodiff import ops
from gated_grounder.autodiff.tape import Tape, Var
from gated_grounder.graphs.builder import CATEGORICAL, VISUAL, BimodalGraph, GraphState, edge_index
from gated_grounder.language.encoder import LanguageEncoding, encode_visited
from gated_grounder.language.parser import SubExpression
from gated_grounder.models import StepTrace

logger = logging.getLogger(__name__)

FALLBACK_NONE = "none"
FALLBACK_CATEGORICAL = "categorical"
FALLBACK_ARGMAX = "argmax"
FALLBACK_SINGLE = "single"
FALLBACK_ALL = "all"
FALLBACK_OPEN = "open"


@dataclass
class SubGraph:
    """Active nodes of one step and their weights on one graph.

    Attributes:
        active: Sorted node indices (size M)
        node_weights: (M,) softmax weights
        edge_weights: (M, M) row-normalized weights over retained edges
        retained: (M, M) boolean mask of retained edges
    """

    active: np.ndarray
    node_weights: Var
    edge_weights: Var
    retained: np.ndarray

    @property
    def size(self) -> int:
        return len(self.active)


@dataclass
class StepState:
    """Everything one reasoning step decided, per graph."""

    step: int
    sub_expression: SubExpression
    active: np.ndarray
    fallback: str
    tau: Dict[str, np.ndarray] = field(default_factory=dict)
    gates: Dict[str, np.ndarray] = field(default_factory=dict)
    sub_graphs: Dict[str, SubGraph] = field(default_factory=dict)

    def to_trace(self) -> StepTrace:
        edge_rows = {}
        for name, sub in self.sub_graphs.items():
            weights = sub.edge_weights.value
            rows = []
            for r, c in zip(*np.nonzero(sub.retained)):
                rows.append([int(sub.active[r]), int(sub.active[c]), float(weights[r, c])])
            edge_rows[name] = rows
        return StepTrace(
            step=self.step,
            sub_expression=self.sub_expression.text,
            tau={name: tau.tolist() for name, tau in self.tau.items()},
            gates={name: gates.tolist() for name, gates in self.gates.items()},
            active=self.active.tolist(),
            fallback=self.fallback,
            node_weights={
                name: sub.node_weights.value.tolist() for name, sub in self.sub_graphs.items()
            },
            edge_weights=edge_rows,
        )


@dataclass
class ReasoningResult:
    """Final graphs after T steps plus the per-step record."""

    visual: Optional[GraphState]
    categorical: Optional[GraphState]
    steps: List[StepState]

    def traces(self) -> List[StepTrace]:
        return [step.to_trace() for step in self.steps]


def correlation_scores(features: Var, gamma1: Var, gamma2: Var, graph: str, tape: Tape) -> Var:
    """tau_i = max(mu1_i, mu2_i) with mu_delta = W_Q tanh(v_i + W_f gamma_delta).

    Args:
        features: (K, D_g) current node features
        gamma1: Subject chunk embedding
        gamma2: Object chunk embedding (gamma1 for a bare chunk)
        graph: "visual" or "categorical"
        tape: Tape bound to the parameter store

    Returns:
        (K,) correlation scores
    """
    w_f = tape.param(f"{graph}.W_f")
    w_q = tape.param(f"{graph}.W_Q")
    k = features.shape[0]
    scores = [
        ops.reshape(ops.linear(ops.tanh(ops.add(features, ops.linear(gamma, w_f))), w_q), (k,))
        for gamma in (gamma1, gamma2)
    ]
    return ops.maximum(scores[0], scores[1])


def apply_gate(tau: np.ndarray) -> np.ndarray:
    """d_i = 1 iff tau_i is strictly above the mean of tau.

    When no node qualifies (all scores equal, or K = 1) the argmax is
    activated, lowest index first.
    """
    tau = np.asarray(tau, dtype=np.float64)
    gates = np.zeros(len(tau), dtype=np.int64)
    if not np.all(tau == tau[0]):
        gates[tau > tau.mean()] = 1
    if not gates.any():
        gates[int(np.argmax(tau))] = 1
    return gates


def build_sub_graphs(
    gates_visual: np.ndarray, gates_categorical: np.ndarray, tau_categorical: np.ndarray
) -> Tuple[np.ndarray, str]:
    """Shared active set of both sub-graphs.

    Nodes on in both graphs; failing that, nodes on in the categorical
    graph (adopting the matching visual nodes); failing that, the argmax of
    the categorical scores.

    Returns:
        (active indices, fallback label)
    """
    both = np.flatnonzero((np.asarray(gates_visual) == 1) & (np.asarray(gates_categorical) == 1))
    if both.size:
        return both, FALLBACK_NONE
    categorical = np.flatnonzero(np.asarray(gates_categorical) == 1)
    if categorical.size:
        return categorical, FALLBACK_CATEGORICAL
    return np.array([int(np.argmax(tau_categorical))]), FALLBACK_ARGMAX


def node_weights(tau: Var, active: np.ndarray) -> Var:
    """Softmax of the correlation scores over the active nodes."""
    return ops.softmax(ops.take(tau, active))


def edge_weights(
    graph: GraphState, active: np.ndarray, f_s: Var, tape: Tape
) -> Tuple[Var, np.ndarray]:
    """Normalized weights of the retained edges between active nodes.

    Scores are W_nu tanh(e_ij + W_s f_s). For each source the threshold is
    the mean of its M-1 outgoing scores; edges strictly above it are kept
    and softmax-normalized per source. A source keeping nothing gets an
    all-zero row.

    Returns:
        ((M, M) weights, (M, M) retained mask)
    """
    m = len(active)
    if m == 1:
        return tape.constant(np.zeros((1, 1))), np.zeros((1, 1), dtype=bool)

    rows, cols = np.nonzero(~np.eye(m, dtype=bool))
    k = graph.num_nodes
    index = np.array([edge_index(int(active[r]), int(active[c]), k) for r, c in zip(rows, cols)])
    sub_edges = ops.take(graph.edges, index)
    projected = ops.linear(f_s, tape.param(f"{graph.name}.W_s"))
    scores = ops.reshape(
        ops.linear(ops.tanh(ops.add(sub_edges, projected)), tape.param(f"{graph.name}.W_nu")),
        (len(index),),
    )

    per_source = scores.value.reshape(m, m - 1)
    threshold = per_source.mean(axis=1)
    keep = per_source > threshold[:, None]
    keep[np.all(per_source == per_source[:, :1], axis=1)] = False
    retained = np.zeros((m, m), dtype=bool)
    retained[rows, cols] = keep.reshape(-1)
    tape.freeze(f"{graph.name}.edges", retained)

    dense = ops.scatter(scores, rows, cols, (m, m))
    return ops.masked_softmax(dense, retained), retained


def _step_param(graph: str, step: int, name: str, max_steps: int, tape: Tape) -> Var:
    return tape.param(f"{graph}.step{min(step, max_steps)}.{name}")


def message_pass(
    features: Var,
    active: np.ndarray,
    weights_node: Var,
    weights_edge: Var,
    graph: str,
    step: int,
    max_steps: int,
    tape: Tape,
) -> Var:
    """One gated update of the active nodes.

    For active i: v~_i = sum_j w_ij (W~ v_j w_j + b~), v^_i = w_i W^ v_i + b^,
    v_i(k) = W_k (v~_i + v^_i) + v_i(k-1). Inactive rows are copied unchanged.

    Args:
        features: (K, D_g) node features before the step
        active: Active node indices (size M)
        weights_node: (M,) node weights
        weights_edge: (M, M) edge weights
        graph: "visual" or "categorical"
        step: 1-based step number selecting the step parameters
        max_steps: Steps with their own parameters; later steps reuse the last
        tape: Tape bound to the parameter store

    Returns:
        (K, D_g) features after the step
    """
    m = len(active)
    current = ops.take(features, active)
    w = ops.reshape(weights_node, (m, 1))

    messages = ops.add(
        ops.linear(ops.mul(current, w), _step_param(graph, step, "W_tilde", max_steps, tape)),
        _step_param(graph, step, "b_tilde", max_steps, tape),
    )
    neighbours = ops.matmul(weights_edge, messages)
    self_loop = ops.add(
        ops.mul(ops.linear(current, _step_param(graph, step, "W_hat", max_steps, tape)), w),
        _step_param(graph, step, "b_hat", max_steps, tape),
    )
    updated = ops.add(
        ops.linear(
            ops.add(neighbours, self_loop), _step_param(graph, step, "W_k", max_steps, tape)
        ),
        current,
    )
    return ops.row_update(features, active, updated)


def reason(
    bimodal: BimodalGraph,
    language: LanguageEncoding,
    sub_expressions: Sequence[SubExpression],
    tape: Tape,
    max_steps: int,
    dgc: bool = True,
    open_gates: bool = False,
) -> ReasoningResult:
    """Run one reasoning step per sub-expression on both graphs.

    Each step starts from zeroed gates and weights, gates the nodes with
    the current sub-expression, extracts the shared active set, weights
    nodes and edges (edges conditioned on the visited set including the
    current sub-expression) and passes messages on each graph.

    With dgc=False nothing is sub-expression specific: every node is
    active, node weights come from the whole expression's mean token
    embedding and edge scores from q. Callers pass the whole expression
    as the single step (see parser.whole_expression).

    open_gates keeps the sub-expression guidance but activates every node;
    training uses it to warm up the correlation scores before gating.

    Args:
        bimodal: Freshly built graphs (a disabled graph is None)
        language: Encoded language graph (chunks, q and the whole expression)
        sub_expressions: Sub-expressions in processing order
        tape: Tape bound to the parameter store
        max_steps: Steps with dedicated parameters
        dgc: Dynamic gating on/off
        open_gates: Force all gates to 1 while keeping per-step guidance

    Returns:
        ReasoningResult with final graphs and one StepState per step
    """
    if not sub_expressions:
        raise ValueError("Reasoning needs at least one sub-expression")
    graphs: Dict[str, GraphState] = {g.name: g for g in bimodal.graphs()}
    features = {name: g.features for name, g in graphs.items()}
    k = next(iter(graphs.values())).num_nodes
    visited: List[SubExpression] = []
    steps: List[StepState] = []

    for step, sub in enumerate(sub_expressions, start=1):
        visited.append(sub)
        if dgc:
            gamma1, gamma2 = language.gamma(sub.subject), language.gamma(sub.object)
        else:
            gamma1 = gamma2 = language.whole

        taus = {
            name: correlation_scores(features[name], gamma1, gamma2, name, tape) for name in graphs
        }
        if not dgc:
            gates = {name: np.ones(k, dtype=np.int64) for name in graphs}
            active, fallback = np.arange(k), FALLBACK_ALL
            f_s = language.q
        elif open_gates:
            gates = {name: np.ones(k, dtype=np.int64) for name in graphs}
            active, fallback = np.arange(k), FALLBACK_OPEN
            f_s = encode_visited([s.tokens for s in visited], tape)
        else:
            gates = {name: apply_gate(tau.value) for name, tau in taus.items()}
            if len(graphs) == 2:
                active, fallback = build_sub_graphs(
                    gates[VISUAL], gates[CATEGORICAL], taus[CATEGORICAL].value
                )
            else:
                active, fallback = np.flatnonzero(next(iter(gates.values()))), FALLBACK_SINGLE
            f_s = encode_visited([s.tokens for s in visited], tape)
        for name, g in gates.items():
            tape.freeze(f"{name}.gates", g)
        tape.freeze("active", active)
        if fallback in (FALLBACK_CATEGORICAL, FALLBACK_ARGMAX):
            logger.debug(
                "Step %d: sub-graph fallback '%s' activated %s", step, fallback, active.tolist()
            )

        state = StepState(
            step=step,
            sub_expression=sub,
            active=active,
            fallback=fallback,
            tau={name: tau.value.copy() for name, tau in taus.items()},
            gates=gates,
        )
        for name, graph in graphs.items():
            weights_node = node_weights(taus[name], active)
            weights_edge, retained = edge_weights(graph, active, f_s, tape)
            state.sub_graphs[name] = SubGraph(active, weights_node, weights_edge, retained)
            features[name] = message_pass(
                features[name], active, weights_node, weights_edge, name, step, max_steps, tape
            )
        steps.append(state)

    final = {}
    last = steps[-1]
    for name, graph in graphs.items():
        sub = last.sub_graphs[name]
        node_w = np.zeros(k)
        node_w[sub.active] = sub.node_weights.value
        edge_w = np.zeros((k, k))
        edge_w[np.ix_(sub.active, sub.active)] = sub.edge_weights.value
        final[name] = replace(
            graph,
            features=features[name],
            gates=last.gates[name].copy(),
            node_weights=node_w,
            edge_weights=edge_w,
        )
    return ReasoningResult(
        visual=final.get(VISUAL), categorical=final.get(CATEGORICAL), steps=steps
    )
