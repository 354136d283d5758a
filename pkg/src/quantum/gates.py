"""
Gate definitions for the statevector simulator.

Angles may be python floats or numpy arrays of shape (R,); an array angle
yields a batch of matrices of shape (R, K, K) so one gate object can carry a
different angle for every row of a batched state.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import GateConstructionError


# kind -> (number of wires, number of angles)
GATE_ARITY = {
    'U3': (1, 3),
    'RY': (1, 1),
    'H': (1, 0),
    'CNOT': (2, 0),
    'RXX': (2, 1),
    'RYY': (2, 1),
    'RZZ': (2, 1),
    'CU3': (2, 3),
}

# Kinds whose angles obey the two-term +-pi/2 shift rule. CU3 is only exact
# when its control is never touched again (see circuit.ParamCircuit).
SHIFTABLE_KINDS = {'U3', 'RY', 'RXX', 'RYY', 'RZZ', 'CU3'}

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_CNOT = np.array([
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 1, 0],
], dtype=np.complex128)

PAULI_PRODUCTS = {
    'RXX': np.kron(_X, _X),
    'RYY': np.kron(_Y, _Y),
    'RZZ': np.kron(_Z, _Z),
}


def u3_matrix(theta, phi, lam):
    """U3(theta, phi, lam) with angles broadcast to a common batch shape."""
    theta, phi, lam = np.broadcast_arrays(
        np.asarray(theta, dtype=np.float64),
        np.asarray(phi, dtype=np.float64),
        np.asarray(lam, dtype=np.float64),
    )
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -np.exp(1j * lam) * s
    out[..., 1, 0] = np.exp(1j * phi) * s
    out[..., 1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def ry_matrix(theta):
    theta = np.asarray(theta, dtype=np.float64)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def ising_matrix(kind, theta):
    """exp(-i theta/2 P⊗P); P⊗P squares to identity so the series closes."""
    theta = np.asarray(theta, dtype=np.float64)
    c = np.cos(theta / 2)[..., None, None]
    s = np.sin(theta / 2)[..., None, None]
    return c * np.eye(4, dtype=np.complex128) - 1j * s * PAULI_PRODUCTS[kind]


def cu3_matrix(theta, phi, lam):
    u = u3_matrix(theta, phi, lam)
    out = np.zeros(u.shape[:-2] + (4, 4), dtype=np.complex128)
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 2:, 2:] = u
    return out


@dataclass(frozen=True)
class GateSpec:
    """
    A named parameterized unitary plus its target wires.

    For two-wire kinds the first wire is the more significant local bit;
    for CNOT and CU3 it is the control.
    """
    kind: str
    params: Tuple
    wires: Tuple[int, ...]

    @property
    def n_wires(self):
        return len(self.wires)

    def matrix(self):
        kind = self.kind
        if kind == 'U3':
            return u3_matrix(*self.params)
        if kind == 'RY':
            return ry_matrix(self.params[0])
        if kind == 'H':
            return _H
        if kind == 'CNOT':
            return _CNOT
        if kind in PAULI_PRODUCTS:
            return ising_matrix(kind, self.params[0])
        if kind == 'CU3':
            return cu3_matrix(*self.params)
        raise GateConstructionError(f"Unknown gate kind '{kind}'")


def build_gate(kind, params=(), wires=()):
    """
    Validate and build a GateSpec

    Args:
        kind: One of U3, RY, H, CNOT, RXX, RYY, RZZ, CU3
        params: Angles in radians (3 for U3/CU3, 1 for RY and Ising kinds, 0 otherwise)
        wires: Target wire indices (1 or 2)

    Returns:
        GateSpec
    """
    if kind not in GATE_ARITY:
        raise GateConstructionError(f"Unknown gate kind '{kind}'")
    n_wires, n_params = GATE_ARITY[kind]
    params = tuple(params)
    wires = tuple(int(w) for w in wires)
    if len(params) != n_params:
        raise GateConstructionError(
            f"{kind} takes {n_params} angle(s), got {len(params)}"
        )
    if len(wires) != n_wires:
        raise GateConstructionError(
            f"{kind} acts on {n_wires} wire(s), got {len(wires)}"
        )
    if len(set(wires)) != len(wires):
        raise GateConstructionError(f"{kind} wires must be distinct, got {wires}")
    return GateSpec(kind=kind, params=params, wires=wires)
