"""Dense statevector simulator for the gate set the regression circuit needs.

Conventions, fixed once and relied on everywhere else in the package:

* Qubit ``n`` is bit ``n`` of the basis-state index (little endian), so the
  index of a computational basis state is ``sum_n b_n * 2**n``.
* Every rotation uses the generator convention ``exp(-i * angle/2 * P)`` with
  ``P`` a single Pauli or a two-qubit Pauli string (eigenvalues +-1).
* Amplitudes are complex128; global phase is carried along, never stripped.

The gate kernels operate on the *last* axis of an amplitude array, so the
same code path serves a single ``(2**n,)`` state and a batch ``(B, 2**n)``
of independent states.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ValidationError

MAX_QUBITS = 12


@dataclass
class QuantumState:
    """Amplitude vector over the 2**n_qubits computational basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())


@dataclass
class BitstringCounts:
    """Measurement tallies: basis-state index -> number of shots observed."""

    counts: dict[int, int]
    n_shots: int


def init_state(n_qubits: int) -> QuantumState:
    """All-qubits-zero state |0...0>."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}"
        )
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n_qubits, amps)


def _check_qubit(n_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise ConfigurationError(f"qubit index {qubit} out of range for {n_qubits} qubits")


@lru_cache(maxsize=None)
def _pair_tables(n_qubits: int, qubit_a: int, qubit_b: int):
    """Index permutation (both target bits flipped) and bit-parity table."""
    idx = np.arange(1 << n_qubits)
    perm = idx ^ ((1 << qubit_a) | (1 << qubit_b))
    parity = ((idx >> qubit_a) ^ (idx >> qubit_b)) & 1
    perm.setflags(write=False)
    parity.setflags(write=False)
    return perm, parity


@lru_cache(maxsize=None)
def _z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    """Pauli-Z eigenvalue (+1 for bit 0, -1 for bit 1) per basis index."""
    idx = np.arange(1 << n_qubits)
    signs = 1.0 - 2.0 * ((idx >> qubit) & 1)
    signs.setflags(write=False)
    return signs


def rx_kernel(amps: np.ndarray, n_qubits: int, qubit: int, angle: float) -> None:
    """In-place exp(-i angle/2 X_qubit) on the last axis of ``amps``."""
    if not amps.flags.c_contiguous:
        raise ValueError("gate kernels require a C-contiguous amplitude array")
    half = 0.5 * angle
    c = np.cos(half)
    ms = -1j * np.sin(half)
    # bit q has stride 2**q: expose it as its own axis
    shaped = amps.reshape(amps.shape[:-1] + (-1, 2, 1 << qubit))
    a0 = shaped[..., 0, :].copy()
    a1 = shaped[..., 1, :]
    shaped[..., 0, :] = c * a0 + ms * a1
    shaped[..., 1, :] = ms * a0 + c * a1


def two_qubit_rotation_kernel(
    amps: np.ndarray, n_qubits: int, axis: str, qubit_a: int, qubit_b: int, angle: float
) -> None:
    """In-place exp(-i angle/2 P_a P_b) with P the Pauli named by ``axis``."""
    perm, parity = _pair_tables(n_qubits, qubit_a, qubit_b)
    half = 0.5 * angle
    if axis == "z":
        # diagonal: eigenvalue +1 on equal bits, -1 on unequal bits
        phases = np.where(parity == 0, np.exp(-1j * half), np.exp(1j * half))
        amps *= phases
    elif axis == "x":
        amps[...] = np.cos(half) * amps - 1j * np.sin(half) * amps[..., perm]
    elif axis == "y":
        # (Y_a Y_b psi)[i] = s_i psi[i ^ mask], s_i = -1 iff the two bits agree
        sign = 2.0 * parity - 1.0
        amps[...] = np.cos(half) * amps - 1j * np.sin(half) * (sign * amps[..., perm])
    else:
        raise ConfigurationError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def pauli_string_kernel(
    amps: np.ndarray, n_qubits: int, axis: str, qubits: tuple[int, ...]
) -> np.ndarray:
    """Return P|psi> for P a one- or two-qubit Pauli string; ``amps`` untouched."""
    if axis == "z":
        out = amps.copy()
        for q in qubits:
            out *= _z_signs(n_qubits, q)
        return out
    if len(qubits) == 1:
        idx = np.arange(1 << n_qubits)
        flipped = amps[..., idx ^ (1 << qubits[0])]
        if axis == "x":
            return flipped
        # single Y: out[i] = psi[i^mask] * (+i if bit_q(i)=1 else -i)
        bit = (idx >> qubits[0]) & 1
        return flipped * np.where(bit == 1, 1j, -1j)
    perm, parity = _pair_tables(n_qubits, qubits[0], qubits[1])
    if axis == "x":
        return amps[..., perm]
    # two-qubit YY: sign -1 where the source bits agree
    sign = 2.0 * parity - 1.0
    return sign * amps[..., perm]


def apply_rx(state: QuantumState, qubit: int, angle: float) -> QuantumState:
    """Rotate ``qubit`` about X by ``angle`` radians (in place; state returned)."""
    _check_qubit(state.n_qubits, qubit)
    rx_kernel(state.amplitudes, state.n_qubits, qubit, angle)
    return state


def apply_two_qubit_rotation(
    state: QuantumState, axis: str, qubit_a: int, qubit_b: int, angle: float
) -> QuantumState:
    """Apply exp(-i angle/2 P_a P_b) for axis in {x, y, z} (in place)."""
    _check_qubit(state.n_qubits, qubit_a)
    _check_qubit(state.n_qubits, qubit_b)
    if qubit_a == qubit_b:
        raise ConfigurationError(f"two-qubit rotation needs distinct qubits, got {qubit_a} twice")
    two_qubit_rotation_kernel(state.amplitudes, state.n_qubits, axis, qubit_a, qubit_b, angle)
    return state


def expectation_z(state: QuantumState, qubit: int) -> float:
    """Exact <sigma_z> on ``qubit``: sum of (+-1) * |amplitude|^2."""
    _check_qubit(state.n_qubits, qubit)
    signs = _z_signs(state.n_qubits, qubit)
    return float(np.real(np.sum(signs * np.abs(state.amplitudes) ** 2)))


def all_expectations_z(state: QuantumState) -> np.ndarray:
    """<sigma_z> on every qubit at once; one pass over the probabilities."""
    probs = state.probabilities()
    return probs_to_expectations(probs, state.n_qubits)


@lru_cache(maxsize=None)
def _z_sign_matrix(n_qubits: int) -> np.ndarray:
    """(n_qubits, 2**n_qubits) matrix of Z eigenvalues, row per qubit."""
    mat = np.stack([_z_signs(n_qubits, q) for q in range(n_qubits)])
    mat.setflags(write=False)
    return mat


def probs_to_expectations(probs: np.ndarray, n_qubits: int) -> np.ndarray:
    """Map Born probabilities (last axis) to per-qubit <sigma_z> values."""
    return probs @ _z_sign_matrix(n_qubits).T


def sample_bitstrings(
    state: QuantumState, n_shots: int, rng: np.random.Generator
) -> BitstringCounts:
    """Draw ``n_shots`` i.i.d. basis-state outcomes from the Born distribution."""
    if n_shots < 1:
        raise ValidationError(f"n_shots must be >= 1, got {n_shots}")
    probs = state.probabilities()
    probs = probs / probs.sum()  # guard the multinomial against 1e-16 drift
    draws = rng.multinomial(n_shots, probs)
    nonzero = np.nonzero(draws)[0]
    counts = {int(i): int(draws[i]) for i in nonzero}
    return BitstringCounts(counts=counts, n_shots=n_shots)


def estimate_expectations_z(counts: BitstringCounts, n_qubits: int) -> np.ndarray:
    """Per-qubit (n_plus - n_minus)/n_shots estimator from measured counts."""
    dim = 1 << n_qubits
    total = 0
    acc = np.zeros(n_qubits)
    for index, count in counts.counts.items():
        if not 0 <= index < dim:
            raise ValidationError(f"basis index {index} out of range for {n_qubits} qubits")
        if count < 0:
            raise ValidationError(f"negative count {count} at index {index}")
        total += count
        bits = (index >> np.arange(n_qubits)) & 1
        acc += count * (1.0 - 2.0 * bits)
    if total != counts.n_shots:
        raise ValidationError(
            f"counts sum to {total} but n_shots is {counts.n_shots}"
        )
    return acc / counts.n_shots
