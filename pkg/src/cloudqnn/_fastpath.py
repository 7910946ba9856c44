"""Numba-jitted circuit kernels for batched evaluation and adjoint gradients.

This module is an optional accelerator: everything here recomputes exactly
what the numpy reference path in :mod:`cloudqnn.statevector` produces, gate
for gate, and the test suite holds the two paths to 1e-12 of each other.
When numba is unavailable the package falls back to the reference path.

Bit convention matches statevector.py: qubit n is bit n of the basis index.
Gate codes: 0 = Rx, 1 = Rzz, 2 = Rxx, 3 = Ryy.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _rx_row(row, q, theta):
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    tk = 1 << q
    half = row.shape[0] >> 1
    for g in range(half):
        i0 = ((g >> q) << (q + 1)) + (g & (tk - 1))
        i1 = i0 + tk
        a0 = row[i0]
        a1 = row[i1]
        row[i0] = c * a0 - 1j * s * a1
        row[i1] = c * a1 - 1j * s * a0


@njit(cache=True)
def _rpp_row(row, kind, qa, qb, theta):
    # two-qubit exp(-i theta/2 P_a P_b); kind 1=zz, 2=xx, 3=yy
    n = row.shape[0]
    if kind == 1:
        # zz eigenvalue +1 when the two bits agree
        p_even = np.cos(0.5 * theta) - 1j * np.sin(0.5 * theta)
        p_odd = np.conj(p_even)
        for i in range(n):
            if ((i >> qa) ^ (i >> qb)) & 1:
                row[i] *= p_odd
            else:
                row[i] *= p_even
        return
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    mask = (1 << qa) | (1 << qb)
    tka = 1 << qa
    half = n >> 1
    for g in range(half):
        i = ((g >> qa) << (qa + 1)) + (g & (tka - 1))  # bit qa of i is 0
        j = i ^ mask
        ai = row[i]
        aj = row[j]
        if kind == 2:
            row[i] = c * ai - 1j * s * aj
            row[j] = c * aj - 1j * s * ai
        else:
            # YY pair sign: -1 when the two bits of the index agree
            sgn = -1.0 if ((i >> qb) & 1) == 0 else 1.0
            row[i] = c * ai - 1j * s * sgn * aj
            row[j] = c * aj - 1j * s * sgn * ai


@njit(cache=True)
def _bracket_im(lam, phi, kind, qa, qb):
    """Im(<lam| P |phi>) for P the generator Pauli string of gate ``kind``."""
    dim = phi.shape[0]
    acc = 0.0 + 0.0j
    if kind == 0:
        tk = 1 << qa
        for i in range(dim):
            acc += np.conj(lam[i]) * phi[i ^ tk]
    elif kind == 1:
        for i in range(dim):
            v = np.conj(lam[i]) * phi[i]
            if ((i >> qa) ^ (i >> qb)) & 1:
                acc -= v
            else:
                acc += v
    elif kind == 2:
        mask = (1 << qa) | (1 << qb)
        for i in range(dim):
            acc += np.conj(lam[i]) * phi[i ^ mask]
    else:
        mask = (1 << qa) | (1 << qb)
        for i in range(dim):
            v = np.conj(lam[i]) * phi[i ^ mask]
            if ((i >> qa) ^ (i >> qb)) & 1:
                acc += v
            else:
                acc -= v
    return acc.imag


@njit(cache=True)
def evolve_batch(amps, kinds, q0s, q1s, srcs, angle_rows, circuit_params):
    """Run the gate program over every row of ``amps`` in place.

    ``srcs[g] >= 0`` reads circuit_params[srcs[g]]; ``srcs[g] < 0`` reads the
    per-row data angle at feature index ``-srcs[g] - 1``.
    """
    n_rows = amps.shape[0]
    n_gates = kinds.shape[0]
    for b in range(n_rows):
        row = amps[b]
        for g in range(n_gates):
            si = srcs[g]
            theta = circuit_params[si] if si >= 0 else angle_rows[b, -si - 1]
            if kinds[g] == 0:
                _rx_row(row, q0s[g], theta)
            else:
                _rpp_row(row, kinds[g], q0s[g], q1s[g], theta)


@njit(cache=True)
def adjoint_accumulate(psi, lam, kinds, q0s, q1s, srcs, angle_rows, circuit_params, grad_out):
    """Accumulate d(sum_b Im-readout)/d(theta) into grad_out, destroying psi/lam.

    For each row b, ``psi[b]`` must hold the final circuit state and ``lam[b]``
    the observable image O|psi_b> already scaled by that row's loss weight.
    The recursion walks the circuit backwards: the contribution of gate g with
    generator P is Im(<lam_g| P |phi_g>), then both vectors are pulled back
    through the inverse gate.
    """
    n_rows = psi.shape[0]
    n_gates = kinds.shape[0]
    for b in range(n_rows):
        phi = psi[b]
        lm = lam[b]
        for g in range(n_gates - 1, -1, -1):
            si = srcs[g]
            theta = circuit_params[si] if si >= 0 else angle_rows[b, -si - 1]
            k = kinds[g]
            if si >= 0:
                grad_out[si] += _bracket_im(lm, phi, k, q0s[g], q1s[g])
            if k == 0:
                _rx_row(phi, q0s[g], -theta)
                _rx_row(lm, q0s[g], -theta)
            else:
                _rpp_row(phi, k, q0s[g], q1s[g], -theta)
                _rpp_row(lm, k, q0s[g], q1s[g], -theta)
