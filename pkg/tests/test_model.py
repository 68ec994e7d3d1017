"""Tests for the full forward pass, gradients and gradient checking."""

import numpy as np
import pytest

from gated_grounder.autodiff.gradcheck import grad_check
from gated_grounder.autodiff.params import ParameterStore
from gated_grounder.autodiff.tape import backward
from gated_grounder.errors import ConfigurationError, ParseError
from gated_grounder.model import GroundingModel, parameter_specs
from gated_grounder.models import Example


def _variant(config, **ablation):
    return config.model_copy(update={"ablation": config.ablation.model_copy(update=ablation)})


def test_parameter_names_cover_every_step(tiny_config, model):
    names = set(model.specs)
    for graph in ("visual", "categorical"):
        for step in (1, 2):
            assert f"{graph}.step{step}.W_k" in names
        assert f"{graph}.step3.W_k" not in names
    assert {"embed.tokens", "spatial.W_mu", "match.W_q", "egr.W1", "egr.b2"} <= names
    assert list(model.store) == list(parameter_specs(tiny_config, len(model.vocab)))


def test_store_with_wrong_shapes_is_rejected(tiny_config, model):
    wider = tiny_config.model_copy(
        update={"model": tiny_config.model.model_copy(update={"graph_dim": 7})}
    )
    with pytest.raises(ConfigurationError):
        GroundingModel(wider, model.store)


def test_forward_outputs(model, example):
    result = model.forward(example)
    k = example.scene.num_objects
    prediction = result.prediction
    assert len(prediction.scores_visual) == len(prediction.scores_categorical) == k
    assert all(-1.0 <= s <= 1.0 for s in prediction.scores_visual + prediction.scores_categorical)
    assert abs(sum(prediction.probabilities) - 1.0) <= 1e-12
    combined = np.add(prediction.scores_visual, prediction.scores_categorical)
    assert prediction.selected_id == int(np.argmax(combined))
    assert prediction.raw_box == example.scene.objects[prediction.selected_id].box
    assert len(prediction.refined_box) == 4
    assert result.loss.item() == pytest.approx(result.loss_ce + result.loss_reg, abs=1e-12)
    p = prediction.probabilities[result.target]
    assert result.loss_ce == pytest.approx(-np.log(p), abs=1e-10)
    assert result.tape.check_order()
    assert len(result.reasoning.steps) == len(result.order)


def test_forward_is_deterministic(model, example):
    first, second = model.forward(example), model.forward(example)
    assert first.loss.item() == second.loss.item()
    assert first.prediction == second.prediction


def test_without_regression_the_raw_box_is_reported(tiny_config, example):
    model = GroundingModel(_variant(tiny_config, egr=False))
    result = model.forward(example)
    assert result.loss_reg == 0.0
    assert result.prediction.refined_box == result.prediction.raw_box
    assert result.loss.item() == pytest.approx(result.loss_ce)
    grads = backward(result.tape, model.store)
    np.testing.assert_array_equal(grads["egr.W1"], np.zeros_like(model.store["egr.W1"]))


def test_single_graph_reports_its_scores_twice(tiny_config, example):
    model = GroundingModel(_variant(tiny_config, graphs="a"))
    prediction = model.forward(example).prediction
    assert prediction.scores_visual == prediction.scores_categorical


def test_order_changes_the_step_sequence(tiny_config, small_example):
    forward = GroundingModel(_variant(tiny_config, order="forward")).forward(small_example)
    backward_ = GroundingModel(_variant(tiny_config, order="backward")).forward(small_example)
    assert [s.clause for s in forward.order] == [0, 1]
    assert [s.clause for s in backward_.order] == [1, 0]


def test_unparseable_expression_raises(model, example):
    truth = example.truth.model_copy(update={"expression": "box sideways ball"})
    with pytest.raises(ParseError):
        model.forward(Example(scene=example.scene, truth=truth))


def test_batch_gradients_are_means(model, example):
    pair = [example, example]
    mean_loss, results = model.forward_and_tape(pair)
    assert mean_loss == pytest.approx(results[0].loss.item())
    single = backward(model.forward(example).tape, model.store)
    batch = model.gradients(results)
    for name in model.store:
        np.testing.assert_allclose(batch[name], single[name], atol=1e-14)
    assert set(batch) == set(model.store)


def test_gradients_reach_the_language_encoder(model, small_example):
    grads = backward(model.forward(small_example).tape, model.store)
    assert np.any(grads["encoder.fwd.W_x"] != 0.0)
    assert np.any(grads["embed.tokens"] != 0.0)
    assert np.any(grads["visual.W_a"] != 0.0)
    # chunk matching is a discrete choice
    np.testing.assert_array_equal(grads["visual.match.W_b1"], 0.0)


@pytest.mark.parametrize("dgc, egr", [(True, True), (False, True), (True, False)])
def test_full_model_gradient_check(small_config, small_example, dgc, egr):
    model = GroundingModel(_variant(small_config, dgc=dgc, egr=egr))
    report = grad_check(
        lambda tape: model.forward(small_example, tape).loss,
        model.store,
        eps=1e-5,
        coords_per_tensor=4,
        seed=1,
    )
    assert report.checked > 0
    assert report.passed(1e-4), (report.worst, report.max_rel_error)


def test_gradient_check_restores_parameters(small_config, small_example):
    model = GroundingModel(small_config)
    before = {name: value.copy() for name, value in model.store.items()}
    grad_check(
        lambda tape: model.forward(small_example, tape).loss,
        model.store,
        names=["egr.b2", "spatial.W_mu"],
    )
    for name, value in model.store.items():
        np.testing.assert_array_equal(value, before[name])


def test_scene_ids_outside_the_vocabularies_are_rejected(model, example):
    objects = list(example.scene.objects)
    objects[1] = objects[1].model_copy(update={"color": model.config.scene.num_colors})
    scene = example.scene.model_copy(update={"objects": objects})
    with pytest.raises(ConfigurationError, match="color"):
        model.forward(Example(scene=scene, truth=example.truth))


def test_zero_norm_nodes_are_reported(model, example):
    assert model.forward(example).prediction.degenerate_nodes == []
    zeroed = ParameterStore({name: value for name, value in model.store.items()})
    zeroed["match.W_q"][...] = 0.0
    prediction = GroundingModel(model.config, zeroed).forward(example).prediction
    assert prediction.degenerate_nodes == list(range(example.scene.num_objects))
    assert prediction.scores_visual == [0.0] * example.scene.num_objects


def test_baseline_takes_one_step_over_the_whole_expression(tiny_config, small_example):
    result = GroundingModel(_variant(tiny_config, dgc=False)).forward(small_example)
    assert len(result.order) == len(result.reasoning.steps) == 1
    assert result.order[0].tokens == result.language.tokens
    assert result.reasoning.steps[0].fallback == "all"


def test_open_gate_forward_activates_every_node(model, small_example):
    result = model.forward(small_example, open_gates=True)
    k = small_example.scene.num_objects
    assert len(result.reasoning.steps) == 2
    for step in result.reasoning.steps:
        assert step.active.tolist() == list(range(k))
        assert step.fallback == "open"
