"""Visual and categorical graph construction.

Both graphs are complete and directed over the K candidates. Node i of
either graph refers to candidate i; edges are stored for every ordered
pair (i, j), i != j, in row-major order.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from gated_grounder.autodiff import ops
from gated_grounder.autodiff.params import ParameterStore
from gated_grounder.autodiff.tape import Tape, Var
from gated_grounder.errors import ConfigurationError
from gated_grounder.language.encoder import LanguageEncoding
from gated_grounder.models import Scene

VISUAL = "visual"
CATEGORICAL = "categorical"
SPATIAL_WEIGHT = "spatial.W_mu"


@dataclass(frozen=True)
class GraphNode:
    """Read-only view of one node."""

    feature: np.ndarray
    gate: int
    weight: float


@dataclass(frozen=True)
class GraphEdge:
    """Read-only view of one directed edge."""

    feature: np.ndarray
    weight: float


def edge_pairs(num_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sources and destinations of all ordered pairs i != j, row-major."""
    src, dst = np.nonzero(~np.eye(num_nodes, dtype=bool))
    return src.astype(np.int64), dst.astype(np.int64)


def edge_index(src: int, dst: int, num_nodes: int) -> int:
    """Position of edge (src, dst) in the row-major edge list."""
    if src == dst or not (0 <= src < num_nodes and 0 <= dst < num_nodes):
        raise IndexError(f"No edge ({src}, {dst}) in a {num_nodes}-node graph")
    return src * (num_nodes - 1) + (dst if dst < src else dst - 1)


@dataclass
class GraphState:
    """Node features, fixed edge features and the per-step gating state.

    Attributes:
        name: "visual" or "categorical"
        features: (K, D_g) node features v_i(k)
        edges: (K(K-1), D_g) edge features e_ij, fixed after construction
        chunk_index: k_i, the best-matching noun chunk per node
        gates: d_i per node
        node_weights: w_i per node (zero outside the active set)
        edge_weights: (K, K) w_ij (zero outside retained edges)
    """

    name: str
    features: Var
    edges: Var
    chunk_index: np.ndarray
    gates: np.ndarray = field(default=None)
    node_weights: np.ndarray = field(default=None)
    edge_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        k = self.num_nodes
        if self.gates is None:
            self.gates = np.zeros(k, dtype=np.int64)
        if self.node_weights is None:
            self.node_weights = np.zeros(k)
        if self.edge_weights is None:
            self.edge_weights = np.zeros((k, k))

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def node(self, i: int) -> GraphNode:
        return GraphNode(
            feature=self.features.value[i],
            gate=int(self.gates[i]),
            weight=float(self.node_weights[i]),
        )

    def edge(self, src: int, dst: int) -> GraphEdge:
        row = self.edges.value[edge_index(src, dst, self.num_nodes)]
        return GraphEdge(feature=row, weight=float(self.edge_weights[src, dst]))


@dataclass
class BimodalGraph:
    """Visual and categorical graphs over the same candidates.

    A graph disabled by the ablation settings is None.
    """

    visual: Optional[GraphState]
    categorical: Optional[GraphState]
    spatial: Var

    def graphs(self):
        return [g for g in (self.visual, self.categorical) if g is not None]


def raw_spatial(boxes: np.ndarray) -> np.ndarray:
    """[x, y, w, h, w*h] per box."""
    boxes = np.atleast_2d(np.asarray(boxes, dtype=np.float64))
    return np.concatenate([boxes, (boxes[:, 2] * boxes[:, 3])[:, None]], axis=1)


def spatial_features(boxes: np.ndarray, tape: Tape) -> Var:
    """mu_i = W_mu [x, y, w, h, w*h] for every box, as a (K, S) matrix."""
    return ops.linear(raw_spatial(boxes), tape.param(SPATIAL_WEIGHT))


def chunk_match(
    node_inputs: np.ndarray, chunk_embeddings: np.ndarray, store: ParameterStore, graph: str
) -> Tuple[np.ndarray, np.ndarray]:
    """Best-matching noun chunk per node.

    beta_ij = W_b2 tanh(W_b1 o_i + W_l v_j); k_i = argmax_j beta_ij with
    ties going to the lowest j. The selection is discrete, so this runs on
    plain arrays.

    Args:
        node_inputs: (K, D_in) visual descriptors or categorical embeddings
        chunk_embeddings: (N, D_t) chunk embeddings
        store: Parameters
        graph: "visual" or "categorical"

    Returns:
        (k, beta) with k of shape (K,) and beta of shape (K, N)
    """
    w_node = store[f"{graph}.match.W_b1"]
    w_chunk = store[f"{graph}.match.W_l"]
    w_out = store[f"{graph}.match.W_b2"]
    hidden = np.tanh(
        (node_inputs @ w_node.T)[:, None, :] + (chunk_embeddings @ w_chunk.T)[None, :, :]
    )
    beta = hidden @ w_out[0]
    return np.argmax(beta, axis=1).astype(np.int64), beta


def _check_dims(
    name: str, inputs: Var, spatial: Var, language: LanguageEncoding, store: ParameterStore
):
    expected = inputs.shape[1] + spatial.shape[1] + language.chunks.shape[1]
    actual = store[f"{name}.W_a"].shape[1]
    if expected != actual:
        raise ConfigurationError(
            f"{name} graph expects {actual} input features per node, got {expected}. "
            "Check that the checkpoint matches the scene and model config."
        )


def _build(
    name: str, inputs: Var, spatial: Var, language: LanguageEncoding, tape: Tape
) -> GraphState:
    _check_dims(name, inputs, spatial, language, tape.store)
    k, _ = chunk_match(inputs.value, language.chunks.value, tape.store, name)
    tape.freeze(f"{name}.chunk", k)

    nodes = ops.add(
        ops.linear(
            ops.concat([inputs, spatial, ops.take(language.chunks, k)], axis=1),
            tape.param(f"{name}.W_a"),
        ),
        tape.param(f"{name}.b_a"),
    )
    src, dst = edge_pairs(inputs.shape[0])
    edges = ops.linear(
        ops.concat(
            [
                ops.take(nodes, src),
                ops.take(nodes, dst),
                ops.take(spatial, src),
                ops.take(spatial, dst),
            ],
            axis=1,
        ),
        tape.param(f"{name}.W_e"),
    )
    return GraphState(name=name, features=nodes, edges=edges, chunk_index=k)


def categorical_inputs(scene: Scene, tape: Tape) -> Var:
    """zeta_i = [category embedding; color embedding] per candidate."""
    return ops.concat(
        [
            ops.take(tape.param("embed.category"), scene.categories()),
            ops.take(tape.param("embed.color"), scene.colors()),
        ],
        axis=1,
    )


def build_visual_graph(
    scene: Scene, language: LanguageEncoding, tape: Tape, spatial: Optional[Var] = None
) -> GraphState:
    """Visual graph from descriptors, spatial features and matched chunks.

    Args:
        scene: Candidates (detector boxes and descriptors)
        language: Encoded language graph
        tape: Tape bound to the parameter store
        spatial: Precomputed spatial features (computed if None)

    Returns:
        GraphState with all gates 0
    """
    spatial = spatial_features(scene.boxes(), tape) if spatial is None else spatial
    return _build(VISUAL, tape.constant(scene.descriptors()), spatial, language, tape)


def build_categorical_graph(
    scene: Scene, language: LanguageEncoding, tape: Tape, spatial: Optional[Var] = None
) -> GraphState:
    """Categorical graph: as the visual one with descriptors replaced by zeta."""
    spatial = spatial_features(scene.boxes(), tape) if spatial is None else spatial
    return _build(CATEGORICAL, categorical_inputs(scene, tape), spatial, language, tape)


def build_bimodal_graph(
    scene: Scene, language: LanguageEncoding, tape: Tape, graphs: str = "both"
) -> BimodalGraph:
    """Both graphs sharing one set of spatial features.

    Args:
        graphs: "a" (visual only), "c" (categorical only) or "both"
    """
    spatial = spatial_features(scene.boxes(), tape)
    visual = categorical = None
    if graphs in ("a", "both"):
        visual = build_visual_graph(scene, language, tape, spatial)
    if graphs in ("c", "both"):
        categorical = build_categorical_graph(scene, language, tape, spatial)
    return BimodalGraph(visual=visual, categorical=categorical, spatial=spatial)
