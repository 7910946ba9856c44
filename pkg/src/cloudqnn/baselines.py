"""Classical baselines: a small MLP and the Xu-Randall cloud-cover scheme.

The MLP is fixed at three hidden layers of 12, 6, 2 units plus a single
linear output (203 scalars for 8 inputs, 179 for 6).  Hidden activation is
leaky-ReLU (slope 0.01) or tanh; the output is unclamped.  Flattening order
for checkpoints and gradients: per layer, weight matrix row-major, then its
bias vector, input layer first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._batch import batch_arrays
from .errors import ConfigurationError, ValidationError

HIDDEN_SIZES = (12, 6, 2)
LEAKY_SLOPE = 0.01
ACTIVATIONS = ("leaky_relu", "tanh")


@dataclass
class MlpModel:
    """Feed-forward weights for the fixed [n_in, 12, 6, 2, 1] topology."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "leaky_relu"

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"activation must be one of {ACTIVATIONS}, got {self.activation!r}"
            )
        sizes = layer_sizes(self.n_inputs)
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ConfigurationError("MLP needs one weight matrix and bias per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ConfigurationError(
                    f"layer {i} shapes {w.shape}/{b.shape} do not match topology {sizes}"
                )

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def copy(self) -> "MlpModel":
        return MlpModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )


def layer_sizes(n_inputs: int) -> tuple[int, ...]:
    return (n_inputs, *HIDDEN_SIZES, 1)


def mlp_param_count(n_inputs: int) -> int:
    sizes = layer_sizes(n_inputs)
    return sum(sizes[i + 1] * sizes[i] + sizes[i + 1] for i in range(len(sizes) - 1))


def mlp_unflatten(n_inputs: int, flat: np.ndarray, activation: str) -> MlpModel:
    flat = np.asarray(flat, dtype=float)
    expected = mlp_param_count(n_inputs)
    if flat.shape != (expected,):
        raise ValidationError(
            f"flat MLP vector must have length {expected}, got {flat.shape}"
        )
    sizes = layer_sizes(n_inputs)
    weights, biases, pos = [], [], 0
    for i in range(len(sizes) - 1):
        n_out, n_in = sizes[i + 1], sizes[i]
        weights.append(flat[pos : pos + n_out * n_in].reshape(n_out, n_in).copy())
        pos += n_out * n_in
        biases.append(flat[pos : pos + n_out].copy())
        pos += n_out
    return MlpModel(weights, biases, activation)


def init_mlp(
    n_inputs: int, rng: np.random.Generator, activation: str = "leaky_relu"
) -> MlpModel:
    """Balanced-variance uniform weights, zero biases."""
    sizes = layer_sizes(n_inputs)
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, activation)


def _activate(model: MlpModel, z: np.ndarray) -> np.ndarray:
    if model.activation == "tanh":
        return np.tanh(z)
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _activate_grad(model: MlpModel, z: np.ndarray) -> np.ndarray:
    if model.activation == "tanh":
        return 1.0 - np.tanh(z) ** 2
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


def mlp_forward_batch(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Feed-forward outputs for a (B, n_inputs) matrix, shape (B,)."""
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if x.shape[1] != model.n_inputs:
        raise ValidationError(
            f"features have {x.shape[1]} columns; model wants {model.n_inputs}"
        )
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        x = _activate(model, x @ w.T + b)
    out = x @ model.weights[-1].T + model.biases[-1]
    return out[:, 0]


def mlp_forward(model: MlpModel, features: np.ndarray) -> float:
    """Single-sample feed-forward output (unclamped)."""
    features = np.asarray(features, dtype=float)
    if features.shape != (model.n_inputs,):
        raise ValidationError(
            f"features must have shape ({model.n_inputs},), got {features.shape}"
        )
    return float(mlp_forward_batch(model, features[None, :])[0])


def mlp_gradient(model: MlpModel, batch) -> tuple[np.ndarray, float]:
    """Reverse-mode gradient of the batch MSE in flatten order, plus the MSE."""
    rows, targets = batch_arrays(batch)
    if rows.shape[1] != model.n_inputs:
        raise ValidationError(
            f"batch rows have {rows.shape[1]} features; model wants {model.n_inputs}"
        )
    # forward pass, caching pre-activations per hidden layer
    activations = [rows]
    pre = []
    x = rows
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = x @ w.T + b
        pre.append(z)
        x = _activate(model, z)
        activations.append(x)
    outputs = (x @ model.weights[-1].T + model.biases[-1])[:, 0]
    errors = outputs - targets
    mse = float(np.mean(errors**2))

    batch_size = rows.shape[0]
    delta = ((2.0 / batch_size) * errors)[:, None]
    grad_w = [np.zeros_like(w) for w in model.weights]
    grad_b = [np.zeros_like(b) for b in model.biases]
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w[layer] = delta.T @ activations[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer]) * _activate_grad(
                model, pre[layer - 1]
            )
    parts = []
    for gw, gb in zip(grad_w, grad_b):
        parts.append(gw.ravel())
        parts.append(gb)
    return np.concatenate(parts), mse


@dataclass(frozen=True)
class XuRandallConstants:
    """Tunable scheme constants; defaults follow the original formulation."""

    p: float = 0.25
    alpha0: float = 100.0
    gamma: float = 0.49

    def __post_init__(self) -> None:
        if self.p <= 0 or self.alpha0 <= 0 or self.gamma <= 0:
            raise ConfigurationError(
                f"Xu-Randall constants must be positive, got {self}"
            )


def saturation_specific_humidity(temperature, pressure):
    """q_sat from the Magnus saturation vapor pressure over water.

    e_s(T) = 610.94 * exp(17.625 (T - 273.15) / (T - 30.11)) Pa,
    q_sat = 0.622 e_s / (p - 0.378 e_s).  Raises when the denominator is not
    positive (vapor pressure at or above ambient pressure).
    """
    t = np.asarray(temperature, dtype=float)
    p = np.asarray(pressure, dtype=float)
    if np.any(p <= 0):
        raise ValidationError("pressure must be positive")
    e_s = 610.94 * np.exp(17.625 * (t - 273.15) / (t - 30.11))
    denominator = p - 0.378 * e_s
    if np.any(denominator <= 0):
        raise ValidationError(
            "saturation vapor pressure reaches ambient pressure; "
            "temperature/pressure combination out of range"
        )
    q_sat = 0.622 * e_s / denominator
    if np.ndim(temperature) == 0 and np.ndim(pressure) == 0:
        return float(q_sat)
    return q_sat


def xu_randall_cloud_cover(
    q_v,
    q_c,
    q_i,
    temperature,
    pressure,
    constants: XuRandallConstants = XuRandallConstants(),
):
    """Diagnostic cloud fraction RH^p (1 - exp(-alpha0 q_l / ((1-RH) q_sat)^gamma)).

    RH is q_v / q_sat clamped to [0, 1]. At RH = 1 the exponent diverges
    whenever condensate q_l = q_c + q_i is positive, so that case takes the
    defined limit RH^p = 1; with q_l = 0 the second factor is identically
    zero and the result is 0 at every RH. Output clamped to [0, 1]. Scalar
    in, scalar out; arrays broadcast elementwise.
    """
    scalar = all(
        np.ndim(a) == 0 for a in (q_v, q_c, q_i, temperature, pressure)
    )
    q_v = np.atleast_1d(np.asarray(q_v, dtype=float))
    q_c = np.atleast_1d(np.asarray(q_c, dtype=float))
    q_i = np.atleast_1d(np.asarray(q_i, dtype=float))
    t = np.atleast_1d(np.asarray(temperature, dtype=float))
    p = np.atleast_1d(np.asarray(pressure, dtype=float))
    q_v, q_c, q_i, t, p = np.broadcast_arrays(q_v, q_c, q_i, t, p)
    if np.any(q_v < 0) or np.any(q_c < 0) or np.any(q_i < 0):
        raise ValidationError("humidities must be non-negative")
    if np.any(t <= 150) or np.any(t >= 350):
        raise ValidationError("temperature must lie in (150, 350) K")
    q_sat = saturation_specific_humidity(t, p)
    rh = np.clip(q_v / q_sat, 0.0, 1.0)
    q_l = q_c + q_i
    out = np.where(q_l > 0.0, 1.0, 0.0)
    interior = rh < 1.0
    scale = ((1.0 - rh[interior]) * q_sat[interior]) ** constants.gamma
    out[interior] = rh[interior] ** constants.p * (
        1.0 - np.exp(-constants.alpha0 * q_l[interior] / scale)
    )
    out = np.clip(out, 0.0, 1.0)
    if scalar:
        return float(out[0])
    return out
