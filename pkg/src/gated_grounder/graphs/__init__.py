"""Bimodal graph construction."""

from gated_grounder.graphs.builder import (
    CATEGORICAL,
    VISUAL,
    BimodalGraph,
    GraphEdge,
    GraphNode,
    GraphState,
    build_bimodal_graph,
    build_categorical_graph,
    build_visual_graph,
    chunk_match,
    edge_index,
    edge_pairs,
    raw_spatial,
    spatial_features,
)

__all__ = [
    "CATEGORICAL",
    "VISUAL",
    "BimodalGraph",
    "GraphEdge",
    "GraphNode",
    "GraphState",
    "build_bimodal_graph",
    "build_categorical_graph",
    "build_visual_graph",
    "chunk_match",
    "edge_index",
    "edge_pairs",
    "raw_spatial",
    "spatial_features",
]
