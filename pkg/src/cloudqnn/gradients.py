"""Analytic gradients of the circuit model and the batch MSE loss.

Three routes, all aligned with ParameterSet.flatten order:

* parameter_shift_gradient: the hardware-compatible rule. Every gate
  generator is a Pauli string over 2 with eigenvalues +-1/2, so
  df/dtheta_j = [f(theta_j + pi/2) - f(theta_j - pi/2)] / 2, costing exactly
  two circuit evaluations per angle plus one for the readout terms.
* finite_difference_gradient: central-difference oracle over every scalar.
* an adjoint-mode batch gradient (numba path) that walks the circuit
  backwards once per sample instead of shifting each angle; used by training
  and cross-checked against the two routes above in the tests.
"""

from __future__ import annotations

import numpy as np

from . import _fastpath
from ._batch import batch_arrays
from .errors import ConfigurationError, ValidationError
from .qnn import (
    CircuitConfig,
    ParameterSet,
    evolve,
    evolve_batch,
    forward,
    forward_sampled,
    gate_program,
    param_count,
    probs_to_expectations,
    readout_diagonal,
    unflatten,
)


def parameter_shift_gradient(
    config: CircuitConfig, params: ParameterSet, angles: np.ndarray
) -> np.ndarray:
    """Exact df/dtheta for every trainable scalar via +-pi/2 shifts."""
    n_circ = config.n_circuit_angles
    flat = params.flatten()
    grad = np.zeros(flat.shape[0])
    shifted = flat.copy()
    for j in range(n_circ):
        shifted[j] = flat[j] + 0.5 * np.pi
        f_plus = forward(config, unflatten(config, shifted), angles)
        shifted[j] = flat[j] - 0.5 * np.pi
        f_minus = forward(config, unflatten(config, shifted), angles)
        shifted[j] = flat[j]
        grad[j] = 0.5 * (f_plus - f_minus)
    # readout terms share one unshifted evaluation: df/dw_n = <sigma_z_n>, df/db = 1
    state = evolve(config, params, angles)
    z = probs_to_expectations(state.probabilities(), config.n_qubits)
    grad[n_circ : n_circ + config.n_qubits] = z
    grad[-1] = 1.0
    return grad


def finite_difference_gradient(
    config: CircuitConfig,
    params: ParameterSet,
    angles: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    """Central differences over every scalar parameter, readout included."""
    if h <= 0:
        raise ValidationError(f"finite-difference step must be positive, got {h}")
    flat = params.flatten()
    grad = np.zeros(flat.shape[0])
    shifted = flat.copy()
    for j in range(flat.shape[0]):
        shifted[j] = flat[j] + h
        f_plus = forward(config, unflatten(config, shifted), angles)
        shifted[j] = flat[j] - h
        f_minus = forward(config, unflatten(config, shifted), angles)
        shifted[j] = flat[j]
        grad[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


def _adjoint_loss_gradient(
    config: CircuitConfig,
    params: ParameterSet,
    rows: np.ndarray,
    targets: np.ndarray,
) -> tuple[np.ndarray, float]:
    amps = evolve_batch(config, params, rows)
    probs = np.abs(amps) ** 2
    z = probs_to_expectations(probs, config.n_qubits)
    outputs = z @ params.readout_weights + params.bias
    errors = outputs - targets
    mse = float(np.mean(errors**2))
    residuals = (2.0 / rows.shape[0]) * errors

    grad = np.zeros(param_count(config))
    n_circ = config.n_circuit_angles
    grad[n_circ : n_circ + config.n_qubits] = residuals @ z
    grad[-1] = float(np.sum(residuals))

    lam = amps * readout_diagonal(config, params)[None, :]
    lam *= residuals[:, None]
    program = gate_program(config)
    circ_grad = np.zeros(n_circ)
    _fastpath.adjoint_accumulate(
        amps,
        lam,
        program.kinds,
        program.q0s,
        program.q1s,
        program.srcs,
        np.ascontiguousarray(np.asarray(rows, dtype=np.float64)),
        np.ascontiguousarray(params.circuit_angles()),
        circ_grad,
    )
    grad[:n_circ] = circ_grad
    return grad, mse


def _shift_rule_loss_gradient(
    config: CircuitConfig,
    params: ParameterSet,
    rows: np.ndarray,
    targets: np.ndarray,
    n_shots: int | None,
    rng: np.random.Generator | None,
) -> tuple[np.ndarray, float]:
    if n_shots is not None and rng is None:
        raise ConfigurationError("shot-based gradients need a random generator")

    def f(p: ParameterSet, x: np.ndarray) -> float:
        if n_shots is None:
            return forward(config, p, x)
        return forward_sampled(config, p, x, n_shots, rng)

    n_params = param_count(config)
    n_circ = config.n_circuit_angles
    batch_size = rows.shape[0]
    grad = np.zeros(n_params)
    mse = 0.0
    flat = params.flatten()
    shifted = flat.copy()
    for i in range(batch_size):
        output = f(params, rows[i])
        residual = (2.0 / batch_size) * (output - targets[i])
        mse += (output - targets[i]) ** 2 / batch_size
        sample_grad = np.zeros(n_params)
        for j in range(n_circ):
            shifted[j] = flat[j] + 0.5 * np.pi
            f_plus = f(unflatten(config, shifted), rows[i])
            shifted[j] = flat[j] - 0.5 * np.pi
            f_minus = f(unflatten(config, shifted), rows[i])
            shifted[j] = flat[j]
            sample_grad[j] = 0.5 * (f_plus - f_minus)
        state = evolve(config, params, rows[i])
        probs = state.probabilities()
        sample_grad[n_circ : n_circ + config.n_qubits] = probs_to_expectations(
            probs, config.n_qubits
        )
        sample_grad[-1] = 1.0
        grad += residual * sample_grad
    return grad, float(mse)


def loss_gradient(
    config: CircuitConfig,
    params: ParameterSet,
    batch,
    method: str = "auto",
    n_shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    """Gradient of the batch MSE (1/B) sum (f(x_i) - y_i)^2, plus the MSE.

    method "auto" takes the adjoint route when numba is present and falls
    back to per-sample parameter shifts otherwise; "adjoint" and
    "parameter_shift" force a route. Shot-based gradients (n_shots set) always
    use the shift rule, since that is the estimator hardware would run.
    """
    rows, targets = batch_arrays(batch)
    if rows.shape[1] != config.n_qubits:
        raise ValidationError(
            f"batch rows have {rows.shape[1]} features; config wants {config.n_qubits}"
        )
    if method not in ("auto", "adjoint", "parameter_shift"):
        raise ConfigurationError(f"unknown gradient method {method!r}")
    if method == "adjoint" and not _fastpath.HAVE_NUMBA:
        raise ConfigurationError("adjoint gradients need numba; use parameter_shift")
    if n_shots is not None or method == "parameter_shift" or (
        method == "auto" and not _fastpath.HAVE_NUMBA
    ):
        return _shift_rule_loss_gradient(config, params, rows, targets, n_shots, rng)
    return _adjoint_loss_gradient(config, params, rows, targets)
