"""Tests for visual and categorical graph construction."""

import numpy as np
import pytest

from gated_grounder.autodiff.tape import Tape
from gated_grounder.errors import ConfigurationError
from gated_grounder.graphs.builder import (
    build_bimodal_graph,
    build_visual_graph,
    edge_index,
    edge_pairs,
    raw_spatial,
)
from gated_grounder.language.encoder import encode_language
from gated_grounder.synth.dataset import derive_seed, generate_example
from gated_grounder.synth.scenes import generate_scene


def _encode(model, example):
    tape = Tape(model.store)
    graph, _ = model.parse(example.truth.expression)
    return tape, encode_language(graph, tape)


def _reference_graph(store, name, node_inputs, boxes, chunks):
    """Straight-line node and edge features with loop-based chunk matching."""
    k = len(node_inputs)
    mu = np.array([store["spatial.W_mu"] @ np.array([*b, b[2] * b[3]]) for b in boxes])
    w_b1, w_l, w_b2 = (store[f"{name}.match.{n}"] for n in ("W_b1", "W_l", "W_b2"))
    nodes = []
    for i in range(k):
        beta = [float(w_b2[0] @ np.tanh(w_b1 @ node_inputs[i] + w_l @ c)) for c in chunks]
        best = int(np.argmax(beta))
        x = np.concatenate([node_inputs[i], mu[i], chunks[best]])
        nodes.append(store[f"{name}.W_a"] @ x + store[f"{name}.b_a"])
    edges = []
    for i in range(k):
        for j in range(k):
            if i != j:
                x = np.concatenate([nodes[i], nodes[j], mu[i], mu[j]])
                edges.append(store[f"{name}.W_e"] @ x)
    return np.array(nodes), np.array(edges)


def test_edge_pairs_are_row_major():
    src, dst = edge_pairs(3)
    assert src.tolist() == [0, 0, 1, 1, 2, 2]
    assert dst.tolist() == [1, 2, 0, 2, 0, 1]
    for position, (i, j) in enumerate(zip(src, dst)):
        assert edge_index(int(i), int(j), 3) == position
    with pytest.raises(IndexError):
        edge_index(1, 1, 3)


def test_raw_spatial_appends_area():
    np.testing.assert_allclose(raw_spatial([[0.5, 0.4, 0.2, 0.3]]), [[0.5, 0.4, 0.2, 0.3, 0.06]])


def test_graph_matches_reference_on_random_instances(model, tiny_config):
    for i in range(100):
        example = generate_example(tiny_config.scene, tiny_config.grammar, derive_seed(100, i))
        tape, language = _encode(model, example)
        bimodal = build_bimodal_graph(example.scene, language, tape)
        chunks = language.chunks.value

        nodes, edges = _reference_graph(
            model.store, "visual", example.scene.descriptors(), example.scene.boxes(), chunks
        )
        np.testing.assert_allclose(bimodal.visual.features.value, nodes, atol=1e-10)
        np.testing.assert_allclose(bimodal.visual.edges.value, edges, atol=1e-10)

        zeta = np.concatenate(
            [
                model.store["embed.category"][example.scene.categories()],
                model.store["embed.color"][example.scene.colors()],
            ],
            axis=1,
        )
        nodes, edges = _reference_graph(
            model.store, "categorical", zeta, example.scene.boxes(), chunks
        )
        np.testing.assert_allclose(bimodal.categorical.features.value, nodes, atol=1e-10)
        np.testing.assert_allclose(bimodal.categorical.edges.value, edges, atol=1e-10)


def test_graph_sizes_and_initial_state(model, example):
    tape, language = _encode(model, example)
    bimodal = build_bimodal_graph(example.scene, language, tape)
    k = example.scene.num_objects
    for graph in bimodal.graphs():
        assert graph.num_nodes == k
        assert graph.num_edges == k * (k - 1)
        assert graph.features.shape == (k, model.config.model.graph_dim)
        assert graph.node(0).gate == 0
        assert graph.node(0).weight == 0.0
        np.testing.assert_array_equal(
            graph.edge(2, 1).feature, graph.edges.value[edge_index(2, 1, k)]
        )
        assert 0 <= graph.chunk_index.min() and graph.chunk_index.max() < language.chunks.shape[0]


def test_single_graph_ablations(model, example):
    tape, language = _encode(model, example)
    visual_only = build_bimodal_graph(example.scene, language, tape, graphs="a")
    assert visual_only.categorical is None and visual_only.visual is not None
    categorical_only = build_bimodal_graph(example.scene, language, tape, graphs="c")
    assert categorical_only.visual is None and len(categorical_only.graphs()) == 1


def test_chunk_choice_is_frozen_on_the_tape(model, example):
    tape, language = _encode(model, example)
    build_bimodal_graph(example.scene, language, tape)
    labels = [label for label, _ in tape.decisions]
    assert "visual.chunk" in labels and "categorical.chunk" in labels


def test_descriptor_size_mismatch_is_a_configuration_error(model, tiny_config, example):
    wide = tiny_config.scene.model_copy(update={"descriptor_dim": 12})
    scene = generate_scene(wide, 0)
    tape, language = _encode(model, example)
    with pytest.raises(ConfigurationError):
        build_visual_graph(scene, language, tape)
