#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: test_distill.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import numpy
import pytest

from ebdistill import (
    AugmentationConfig,
    CombinedPrediction,
    Dataset,
    DistilledModel,
    MLPConfig,
    MLPModel,
    Space,
    ValidationError,
    build_beta_dataset,
    fit_scaler,
    generate_augmented_features,
    predict_combined,
    predict_combined_arrays,
    predict_error_bar,
    train_mlp,
    train_model_b,
)


@pytest.fixture(scope="module")
def beta(calibrated_ensemble, scaled_data):
    aug = generate_augmented_features(
        scaled_data.features,
        AugmentationConfig(0.05, 4 * scaled_data.n_rows, seed=8),
    )
    return build_beta_dataset(aug, calibrated_ensemble, scaled_data.feature_names)


@pytest.fixture(scope="module")
def models(synthetic_data, scaled_data, beta, tiny_mlp):
    s_alpha = fit_scaler(synthetic_data)
    model_a, _ = train_mlp(scaled_data.features, scaled_data.targets, tiny_mlp)
    model_b = train_model_b(beta, tiny_mlp, sigma_floor=1e-6)

    return s_alpha, model_a, model_b


def test_train_model_b(beta, models):
    _, _, model_b = models

    assert isinstance(model_b, DistilledModel)
    assert model_b.input_dim == beta.n_features
    assert model_b.sigma_floor == 1e-6
    assert model_b.net.trained is True

    scaler = model_b.input_scaler
    numpy.testing.assert_array_equal(scaler.mins, beta.features.min(axis=0))
    numpy.testing.assert_array_equal(scaler.maxs, beta.features.max(axis=0))


def test_model_b_learns_smooth_error_bars():
    rng = numpy.random.default_rng(0)
    X = rng.random((400, 2))
    beta = Dataset(X, 0.5 + X[:, 0], ("a", "b"), "sigma_A", Space.SCALED)

    config = MLPConfig(
        hidden_widths=(16, 16),
        epochs=200,
        learning_rate=0.005,
        batch_size=32,
        init_seed=1,
        shuffle_seed=2,
    )
    model_b = train_model_b(beta, config)

    error = predict_error_bar(model_b, X) - beta.targets
    assert numpy.sqrt(numpy.mean(error**2)) < 0.05


def test_predict_error_bar_floor(models):
    _, _, model_b = models

    rng = numpy.random.default_rng(1)
    X = rng.uniform(-1.0, 2.0, size=(100_000, model_b.input_dim))
    sigma = predict_error_bar(model_b, X)

    assert sigma.shape == (100_000,)
    assert numpy.all(sigma >= model_b.sigma_floor)


def test_predict_error_bar_wrong_width(models):
    _, _, model_b = models

    with pytest.raises(ValidationError, match="Model B"):
        predict_error_bar(model_b, numpy.zeros((1, model_b.input_dim + 1)))


def test_train_model_b_rejects_negative_targets(tiny_mlp):
    beta = Dataset(numpy.zeros((4, 1)), [0.1, -0.1, 0.2, 0.3], ("a",), "sigma_A")

    with pytest.raises(ValidationError, match="non-negative"):
        train_model_b(beta, tiny_mlp)


def test_distilled_model_validation(models):
    _, _, model_b = models

    with pytest.raises(ValidationError):
        DistilledModel(
            net=model_b.net,
            input_scaler=model_b.input_scaler,
            sigma_floor=0,
        )

    other = Dataset(numpy.zeros((2, 5)), numpy.zeros(2), "abcde", "y")
    other_scaler = fit_scaler(other)
    with pytest.raises(ValidationError, match="input_dim"):
        DistilledModel(net=model_b.net, input_scaler=other_scaler)


def test_predict_combined_uses_model_a(synthetic_data, models):
    s_alpha, model_a, model_b = models

    output = predict_combined_arrays(model_a, model_b, s_alpha, synthetic_data.features)
    expected = model_a.predict(s_alpha.transform(synthetic_data.features))

    assert numpy.array_equal(output.value, expected)
    numpy.testing.assert_array_equal(
        output.error_bar,
        predict_error_bar(model_b, s_alpha.transform(synthetic_data.features)),
    )


def test_predict_combined_rows(synthetic_data, models):
    s_alpha, model_a, model_b = models

    rows = predict_combined(model_a, model_b, s_alpha, synthetic_data.features[:5])

    assert len(rows) == 5
    assert all(isinstance(row, CombinedPrediction) for row in rows)
    assert all(row.error_bar >= model_b.sigma_floor for row in rows)


def test_predict_combined_two_forward_passes(synthetic_data, models, mocker):
    s_alpha, model_a, model_b = models

    spy = mocker.spy(MLPModel, "predict")
    predict_combined(model_a, model_b, s_alpha, synthetic_data.features)

    assert spy.call_count == 2


def test_predict_combined_dimension_mismatch(models):
    s_alpha, model_a, model_b = models

    narrow_a = train_mlp(numpy.zeros((4, 2)), numpy.zeros(4), model_a.config)[0]

    with pytest.raises(ValidationError, match="disagree"):
        predict_combined_arrays(narrow_a, model_b, s_alpha, numpy.zeros((1, 3)))
