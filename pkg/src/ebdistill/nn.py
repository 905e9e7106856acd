#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: ebdistill contributors
# @Date: 2026-10-19
# @Filename: nn.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""A small fully connected ReLU network trained with Adam on squared error.

The same learner is used for the predictive model, for each ensemble member,
and for the distilled error-bar model. Everything runs in 64-bit floating point
and is fully determined by the data and the two seeds in `.MLPConfig`.

"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from typing import Any, Dict, List, Tuple

import numpy

from . import log
from .exceptions import TrainingError, ValidationError
from .streams import StreamKey, make_rng


__all__ = [
    "MLPConfig",
    "MLPModel",
    "TrainReport",
    "Gradients",
    "init_mlp",
    "mlp_forward",
    "mlp_loss_and_grads",
    "train_mlp",
]


@dataclass(frozen=True)
class MLPConfig:
    """Architecture and optimiser settings of an `.MLPModel`.

    The full-scale architecture is ``hidden_widths=(2048, 2048)``; the packaged
    configuration defaults to ``(64, 64)`` for desk-scale runs.

    """

    hidden_widths: Tuple[int, ...] = (2048, 2048)
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 64
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    init_seed: int = 0
    shuffle_seed: int = 0

    def __post_init__(self):
        widths = tuple(int(width) for width in self.hidden_widths)
        object.__setattr__(self, "hidden_widths", widths)

        if any(width < 1 for width in widths):
            raise ValidationError(f"hidden widths must be >= 1, got {widths}.")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}.")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}.")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive.")
        if not 0 < self.adam_beta1 < 1 or not 0 < self.adam_beta2 < 1:
            raise ValidationError("Adam betas must be in (0, 1).")
        if not self.adam_epsilon > 0:
            raise ValidationError("adam_epsilon must be positive.")
        if self.init_seed < 0 or self.shuffle_seed < 0:
            raise ValidationError("seeds must be non-negative.")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["hidden_widths"] = list(self.hidden_widths)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> MLPConfig:
        return cls(**{**data, "hidden_widths": tuple(data["hidden_widths"])})


@dataclass(frozen=True)
class MLPModel:
    """Weights and biases of a feed-forward network with a scalar linear output.

    Layer ``l`` maps ``weights[l].shape[0]`` inputs to ``weights[l].shape[1]``
    outputs. All hidden layers use ReLU.

    """

    weights: Tuple[numpy.ndarray, ...]
    biases: Tuple[numpy.ndarray, ...]
    config: MLPConfig
    input_dim: int
    trained: bool = False

    def __post_init__(self):
        weights = tuple(_readonly(ww) for ww in self.weights)
        biases = tuple(_readonly(bb) for bb in self.biases)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

        dims = [self.input_dim, *self.config.hidden_widths, 1]
        if len(weights) != len(dims) - 1 or len(biases) != len(weights):
            raise ValidationError("number of layers does not match the configuration.")

        for layer, (ww, bb) in enumerate(zip(weights, biases)):
            if ww.shape != (dims[layer], dims[layer + 1]):
                raise ValidationError(
                    f"layer {layer} weights have shape {ww.shape}, "
                    f"expected {(dims[layer], dims[layer + 1])}."
                )
            if bb.shape != (dims[layer + 1],):
                raise ValidationError(f"layer {layer} biases have shape {bb.shape}.")
            if not (numpy.all(numpy.isfinite(ww)) and numpy.all(numpy.isfinite(bb))):
                raise ValidationError(f"layer {layer} has non-finite parameters.")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def parameter_count(self) -> int:
        return int(sum(ww.size + bb.size for ww, bb in zip(self.weights, self.biases)))

    @property
    def macs_per_row(self) -> int:
        """Multiply-accumulate operations needed to evaluate one row."""

        return int(sum(ww.size for ww in self.weights))

    def predict(self, X: numpy.ndarray) -> numpy.ndarray:
        """Evaluates the network on the rows of ``X``."""

        return mlp_forward(self, X)


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch training mean squared error."""

    epoch_losses: numpy.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "epoch_losses", _readonly(self.epoch_losses))

    @property
    def final_loss(self) -> float:
        return float(self.epoch_losses[-1])


@dataclass(frozen=True)
class Gradients:
    """Gradients of the loss, shaped like the model parameters."""

    weights: Tuple[numpy.ndarray, ...]
    biases: Tuple[numpy.ndarray, ...]


def _readonly(value) -> numpy.ndarray:
    array = numpy.array(value, dtype=numpy.float64, copy=True)
    array.setflags(write=False)
    return array


def _check_input(m: MLPModel, X: numpy.ndarray) -> numpy.ndarray:
    X = numpy.asarray(X, dtype=numpy.float64)
    if X.ndim != 2 or X.shape[1] != m.input_dim:
        raise ValidationError(
            f"model expects {m.input_dim} input columns, "
            f"got an array of shape {X.shape}."
        )
    return X


def _layer_dims(input_dim: int, config: MLPConfig) -> List[int]:
    return [input_dim, *config.hidden_widths, 1]


def init_mlp(input_dim: int, config: MLPConfig) -> MLPModel:
    """Initialises a network with He-uniform weights and zero biases.

    Each weight matrix is drawn from ``U(-sqrt(6 / fan_in), sqrt(6 / fan_in))``
    using the generator seeded with ``config.init_seed``.

    """

    if input_dim < 1:
        raise ValidationError(f"input_dim must be >= 1, got {input_dim}.")

    rng = make_rng(config.init_seed, StreamKey.INIT)
    dims = _layer_dims(input_dim, config)

    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = numpy.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(numpy.zeros(fan_out))

    return MLPModel(
        weights=tuple(weights),
        biases=tuple(biases),
        config=config,
        input_dim=input_dim,
        trained=False,
    )


def _forward(
    weights: Tuple[numpy.ndarray, ...] | List[numpy.ndarray],
    biases: Tuple[numpy.ndarray, ...] | List[numpy.ndarray],
    X: numpy.ndarray,
) -> Tuple[numpy.ndarray, List[numpy.ndarray]]:
    """Returns the output and the pre-activations of every layer."""

    pre_activations = []
    activation = X
    n_layers = len(weights)

    for layer in range(n_layers):
        z = activation @ weights[layer] + biases[layer]
        pre_activations.append(z)
        activation = numpy.maximum(z, 0.0) if layer < n_layers - 1 else z

    return activation[:, 0], pre_activations


def _backward(
    weights: Tuple[numpy.ndarray, ...] | List[numpy.ndarray],
    X: numpy.ndarray,
    pre_activations: List[numpy.ndarray],
    d_output: numpy.ndarray,
) -> Tuple[List[numpy.ndarray], List[numpy.ndarray]]:
    n_layers = len(weights)
    grad_w: List[numpy.ndarray] = [numpy.empty(0)] * n_layers
    grad_b: List[numpy.ndarray] = [numpy.empty(0)] * n_layers

    dz = d_output[:, None]
    for layer in range(n_layers - 1, -1, -1):
        inputs = X if layer == 0 else numpy.maximum(pre_activations[layer - 1], 0.0)
        grad_w[layer] = inputs.T @ dz
        grad_b[layer] = dz.sum(axis=0)
        if layer > 0:
            dz = (dz @ weights[layer].T) * (pre_activations[layer - 1] > 0)

    return grad_w, grad_b


def mlp_forward(m: MLPModel, X: numpy.ndarray) -> numpy.ndarray:
    """Evaluates the network; returns one scalar per row of ``X``."""

    X = _check_input(m, X)
    output, _ = _forward(m.weights, m.biases, X)
    return output


def mlp_loss_and_grads(
    m: MLPModel,
    X: numpy.ndarray,
    y: numpy.ndarray,
) -> Tuple[float, Gradients]:
    """Mean squared error of the network on ``(X, y)`` and its exact gradients."""

    X = _check_input(m, X)
    y = numpy.asarray(y, dtype=numpy.float64)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValidationError(f"y has shape {y.shape} for {X.shape[0]} rows.")

    loss, grad_w, grad_b = _loss_and_grads(m.weights, m.biases, X, y)
    return loss, Gradients(weights=tuple(grad_w), biases=tuple(grad_b))


def _loss_and_grads(weights, biases, X, y):
    output, pre_activations = _forward(weights, biases, X)
    residual = output - y

    loss = float(numpy.mean(residual**2))
    d_output = 2.0 * residual / X.shape[0]

    grad_w, grad_b = _backward(weights, X, pre_activations, d_output)
    return loss, grad_w, grad_b


def train_mlp(
    X: numpy.ndarray,
    y: numpy.ndarray,
    config: MLPConfig,
) -> Tuple[MLPModel, TrainReport]:
    """Trains a network with mini-batch Adam.

    Each epoch permutes the rows with the shuffle stream, then walks the
    mini-batches in order (the last one may be smaller). The loss reported for an
    epoch is the row-weighted mean of the mini-batch losses seen during it.

    Parameters
    ----------
    X
        The ``(n_rows, n_features)`` training inputs.
    y
        The ``(n_rows,)`` training targets, in their own units.
    config
        The network and optimiser configuration.

    Returns
    -------
    model, report
        The trained `.MLPModel` and its `.TrainReport`.

    Raises
    ------
    TrainingError
        If a non-finite loss is encountered.

    """

    X = numpy.asarray(X, dtype=numpy.float64)
    y = numpy.asarray(y, dtype=numpy.float64)

    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"inconsistent shapes X={X.shape}, y={y.shape}.")
    if X.shape[0] < 1:
        raise ValidationError("cannot train on an empty dataset.")

    model = init_mlp(X.shape[1], config)
    weights = [ww.copy() for ww in model.weights]
    biases = [bb.copy() for bb in model.biases]
    params = weights + biases

    first_moment = [numpy.zeros_like(pp) for pp in params]
    second_moment = [numpy.zeros_like(pp) for pp in params]

    beta1 = config.adam_beta1
    beta2 = config.adam_beta2
    rng = make_rng(config.shuffle_seed, StreamKey.SHUFFLE)

    n_rows = X.shape[0]
    epoch_losses = numpy.zeros(config.epochs)
    step = 0

    for epoch in range(config.epochs):
        order = rng.permutation(n_rows)
        weighted_loss = 0.0

        for start in range(0, n_rows, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, grad_w, grad_b = _loss_and_grads(weights, biases, X[batch], y[batch])

            if not numpy.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}.")

            weighted_loss += loss * len(batch)
            step += 1

            correction1 = 1.0 - beta1**step
            correction2 = 1.0 - beta2**step
            for pp, gg, mm, vv in zip(
                params,
                grad_w + grad_b,
                first_moment,
                second_moment,
            ):
                mm *= beta1
                mm += (1.0 - beta1) * gg
                vv *= beta2
                vv += (1.0 - beta2) * gg**2
                pp -= (
                    config.learning_rate
                    * (mm / correction1)
                    / (numpy.sqrt(vv / correction2) + config.adam_epsilon)
                )

        epoch_losses[epoch] = weighted_loss / n_rows
        if not numpy.isfinite(epoch_losses[epoch]):
            raise TrainingError(f"non-finite training loss at epoch {epoch}.")

        log.debug(f"epoch {epoch}: mse={epoch_losses[epoch]:.6g}")

    for pp in params:
        if not numpy.all(numpy.isfinite(pp)):
            raise TrainingError("training produced non-finite parameters.")

    trained = MLPModel(
        weights=tuple(weights),
        biases=tuple(biases),
        config=config,
        input_dim=X.shape[1],
        trained=True,
    )

    return trained, TrainReport(epoch_losses=epoch_losses)
