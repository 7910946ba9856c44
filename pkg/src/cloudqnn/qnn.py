"""Data-reuploading circuit model: architecture, parameters, and readout.

The circuit acts on N qubits (one per input feature).  Repeated n_enc times:
an encoding layer Rx(x_n) on every qubit, then a variational block V made of
Rzz, Rxx, Ryy nearest-neighbour chains.  After that, n_var trailing blocks W
(the V structure plus a final Rx layer on all qubits).  The model output is
f(x) = sum_n w_n <sigma_z_n> + b.

Parameter flattening order (also the checkpoint order): encoding blocks in k
order, each block in index order; then trailing blocks in l order; then the
readout weights; then the bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _fastpath
from .errors import ConfigurationError, ValidationError
from .statevector import (
    MAX_QUBITS,
    QuantumState,
    _z_sign_matrix,
    apply_rx,
    apply_two_qubit_rotation,
    estimate_expectations_z,
    init_state,
    probs_to_expectations,
    sample_bitstrings,
)

_evaluation_count = 0


def evaluation_count() -> int:
    """Number of circuit evolutions since the last reset (one per state prepared)."""
    return _evaluation_count


def reset_evaluation_count() -> None:
    global _evaluation_count
    _evaluation_count = 0


def _count_evaluations(n: int) -> None:
    global _evaluation_count
    _evaluation_count += n


@dataclass(frozen=True)
class CircuitConfig:
    """Architecture hyperparameters: qubit count and block multiplicities."""

    n_qubits: int
    n_enc: int = 5
    n_var: int = 3

    def __post_init__(self) -> None:
        # entangling chains need at least one qubit pair
        if not 2 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(
                f"n_qubits must be in [2, {MAX_QUBITS}], got {self.n_qubits}"
            )
        if self.n_enc < 1:
            raise ConfigurationError(f"n_enc must be >= 1, got {self.n_enc}")
        if self.n_var < 0:
            raise ConfigurationError(f"n_var must be >= 0, got {self.n_var}")

    @property
    def v_block_size(self) -> int:
        return 3 * (self.n_qubits - 1)

    @property
    def w_block_size(self) -> int:
        return 4 * self.n_qubits - 3

    @property
    def n_circuit_angles(self) -> int:
        return self.v_block_size * self.n_enc + self.w_block_size * self.n_var


def param_count(config: CircuitConfig) -> int:
    """Total trainable scalars: circuit angles + N readout weights + bias."""
    return config.n_circuit_angles + config.n_qubits + 1


@dataclass
class ParameterSet:
    """Trainable parameters grouped by role; see module docstring for order."""

    encoding_blocks: list[np.ndarray]
    trailing_blocks: list[np.ndarray]
    readout_weights: np.ndarray
    bias: float

    def flatten(self) -> np.ndarray:
        parts = list(self.encoding_blocks) + list(self.trailing_blocks)
        parts.append(np.asarray(self.readout_weights, dtype=float))
        parts.append(np.array([self.bias], dtype=float))
        return np.concatenate(parts)

    def circuit_angles(self) -> np.ndarray:
        """All block angles in flattening order, without the readout terms."""
        parts = list(self.encoding_blocks) + list(self.trailing_blocks)
        if not parts:
            return np.zeros(0)
        return np.concatenate(parts)

    def copy(self) -> "ParameterSet":
        return ParameterSet(
            [b.copy() for b in self.encoding_blocks],
            [b.copy() for b in self.trailing_blocks],
            self.readout_weights.copy(),
            float(self.bias),
        )


def unflatten(config: CircuitConfig, flat: np.ndarray) -> ParameterSet:
    """Inverse of ParameterSet.flatten for the given architecture."""
    flat = np.asarray(flat, dtype=float)
    expected = param_count(config)
    if flat.shape != (expected,):
        raise ValidationError(
            f"flat parameter vector must have length {expected}, got {flat.shape}"
        )
    pos = 0
    encoding = []
    for _ in range(config.n_enc):
        encoding.append(flat[pos : pos + config.v_block_size].copy())
        pos += config.v_block_size
    trailing = []
    for _ in range(config.n_var):
        trailing.append(flat[pos : pos + config.w_block_size].copy())
        pos += config.w_block_size
    weights = flat[pos : pos + config.n_qubits].copy()
    pos += config.n_qubits
    return ParameterSet(encoding, trailing, weights, float(flat[pos]))


def init_params(
    config: CircuitConfig, rng: np.random.Generator, bias: float = 0.0
) -> ParameterSet:
    """Small-angle start: angles U(-0.1, 0.1), weights U(-1/N, 1/N), given bias."""
    n = config.n_qubits
    encoding = [
        rng.uniform(-0.1, 0.1, size=config.v_block_size) for _ in range(config.n_enc)
    ]
    trailing = [
        rng.uniform(-0.1, 0.1, size=config.w_block_size) for _ in range(config.n_var)
    ]
    weights = rng.uniform(-1.0 / n, 1.0 / n, size=n)
    return ParameterSet(encoding, trailing, weights, float(bias))


def _check_length(name: str, vec: np.ndarray, expected: int) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (expected,):
        raise ValidationError(f"{name} must have length {expected}, got {vec.shape}")
    return vec


def apply_encoding_layer(state: QuantumState, angles: np.ndarray) -> QuantumState:
    """Rx(angles[n]) on qubit n for every qubit."""
    angles = _check_length("encoding angles", angles, state.n_qubits)
    for n in range(state.n_qubits):
        apply_rx(state, n, angles[n])
    return state


def apply_v_block(state: QuantumState, theta: np.ndarray) -> QuantumState:
    """Rzz chain, then Rxx chain, then Ryy chain over pairs (n, n+1)."""
    n = state.n_qubits
    theta = _check_length("V block parameters", theta, 3 * (n - 1))
    for chain, axis in enumerate(("z", "x", "y")):
        offset = chain * (n - 1)
        for pair in range(n - 1):
            apply_two_qubit_rotation(state, axis, pair, pair + 1, theta[offset + pair])
    return state


def apply_w_block(state: QuantumState, phi: np.ndarray) -> QuantumState:
    """The V structure followed by an Rx layer on every qubit."""
    n = state.n_qubits
    phi = _check_length("W block parameters", phi, 4 * n - 3)
    apply_v_block(state, phi[: 3 * (n - 1)])
    for qubit in range(n):
        apply_rx(state, qubit, phi[3 * (n - 1) + qubit])
    return state


def evolve(
    config: CircuitConfig, params: ParameterSet, angles: np.ndarray
) -> QuantumState:
    """Prepare the full circuit state for one input; counts one evaluation."""
    angles = _check_length("input angles", angles, config.n_qubits)
    if len(params.encoding_blocks) != config.n_enc or len(params.trailing_blocks) != config.n_var:
        raise ValidationError(
            f"parameter set has {len(params.encoding_blocks)} encoding and "
            f"{len(params.trailing_blocks)} trailing blocks; config wants "
            f"{config.n_enc} and {config.n_var}"
        )
    state = init_state(config.n_qubits)
    for block in params.encoding_blocks:
        apply_encoding_layer(state, angles)
        apply_v_block(state, block)
    for block in params.trailing_blocks:
        apply_w_block(state, block)
    _count_evaluations(1)
    return state


@dataclass(frozen=True)
class GateProgram:
    """Flat gate list: kind 0=Rx, 1=Rzz, 2=Rxx, 3=Ryy on (q0, q1).

    src >= 0 reads circuit_angles()[src]; src < 0 reads input angle -src-1.
    """

    kinds: np.ndarray
    q0s: np.ndarray
    q1s: np.ndarray
    srcs: np.ndarray


@lru_cache(maxsize=None)
def gate_program(config: CircuitConfig) -> GateProgram:
    kinds: list[int] = []
    q0s: list[int] = []
    q1s: list[int] = []
    srcs: list[int] = []

    def add(kind: int, q0: int, q1: int, src: int) -> None:
        kinds.append(kind)
        q0s.append(q0)
        q1s.append(q1)
        srcs.append(src)

    n = config.n_qubits
    param = 0
    for _ in range(config.n_enc):
        for qubit in range(n):
            add(0, qubit, 0, -qubit - 1)
        for kind in (1, 2, 3):
            for pair in range(n - 1):
                add(kind, pair, pair + 1, param)
                param += 1
    for _ in range(config.n_var):
        for kind in (1, 2, 3):
            for pair in range(n - 1):
                add(kind, pair, pair + 1, param)
                param += 1
        for qubit in range(n):
            add(0, qubit, 0, param)
            param += 1
    program = GateProgram(
        kinds=np.array(kinds, dtype=np.int8),
        q0s=np.array(q0s, dtype=np.int32),
        q1s=np.array(q1s, dtype=np.int32),
        srcs=np.array(srcs, dtype=np.int32),
    )
    for arr in (program.kinds, program.q0s, program.q1s, program.srcs):
        arr.setflags(write=False)
    return program


def _readout(params: ParameterSet, z_expectations: np.ndarray) -> float:
    return float(np.dot(params.readout_weights, z_expectations) + params.bias)


def forward(
    config: CircuitConfig, params: ParameterSet, angles: np.ndarray
) -> float:
    """Exact model output sum_n w_n <sigma_z_n> + b for one input."""
    state = evolve(config, params, angles)
    z = probs_to_expectations(state.probabilities(), config.n_qubits)
    return _readout(params, z)


def forward_sampled(
    config: CircuitConfig,
    params: ParameterSet,
    angles: np.ndarray,
    n_shots: int,
    rng: np.random.Generator,
) -> float:
    """Model output with every <sigma_z_n> estimated from one shared shot batch."""
    state = evolve(config, params, angles)
    counts = sample_bitstrings(state, n_shots, rng)
    z = estimate_expectations_z(counts, config.n_qubits)
    return _readout(params, z)


def _angle_matrix(config: CircuitConfig, angle_rows: np.ndarray) -> np.ndarray:
    rows = np.ascontiguousarray(np.atleast_2d(np.asarray(angle_rows, dtype=np.float64)))
    if rows.shape[1] != config.n_qubits:
        raise ValidationError(
            f"angle rows must have {config.n_qubits} columns, got {rows.shape[1]}"
        )
    return rows


def evolve_batch(
    config: CircuitConfig, params: ParameterSet, angle_rows: np.ndarray
) -> np.ndarray:
    """Final-state amplitudes for a batch of inputs, shape (B, 2**N)."""
    rows = _angle_matrix(config, angle_rows)
    n_rows = rows.shape[0]
    if _fastpath.HAVE_NUMBA:
        circ = np.ascontiguousarray(params.circuit_angles())
        if circ.shape != (config.n_circuit_angles,):
            raise ValidationError(
                f"parameter set has {circ.shape[0]} circuit angles; config wants "
                f"{config.n_circuit_angles}"
            )
        program = gate_program(config)
        amps = np.zeros((n_rows, 1 << config.n_qubits), dtype=np.complex128)
        amps[:, 0] = 1.0
        _fastpath.evolve_batch(
            amps,
            program.kinds,
            program.q0s,
            program.q1s,
            program.srcs,
            rows,
            circ,
        )
        _count_evaluations(n_rows)
        return amps
    return np.stack([evolve(config, params, rows[i]).amplitudes for i in range(n_rows)])


def probabilities_batch(
    config: CircuitConfig, params: ParameterSet, angle_rows: np.ndarray
) -> np.ndarray:
    """Born probabilities per batch row, shape (B, 2**N)."""
    amps = evolve_batch(config, params, angle_rows)
    return np.abs(amps) ** 2


def forward_batch(
    config: CircuitConfig, params: ParameterSet, angle_rows: np.ndarray
) -> np.ndarray:
    """Exact model outputs for a batch of inputs, shape (B,)."""
    probs = probabilities_batch(config, params, angle_rows)
    z = probs_to_expectations(probs, config.n_qubits)
    return z @ params.readout_weights + params.bias


def readout_diagonal(config: CircuitConfig, params: ParameterSet) -> np.ndarray:
    """Diagonal of the readout observable sum_n w_n Z_n in the basis order."""
    return params.readout_weights @ _z_sign_matrix(config.n_qubits)
