"""
Dense statevector simulation of up to 10 qubits.

Wire 0 is the most significant bit of the basis index. Amplitudes are
complex128 with shape (2**n,) or, for batched evaluation, (B, 2**n).
Gates are applied by moving the target axes of the (2,)*n tensor view to
the end and contracting with the small gate matrix; no 2**n x 2**n operator
is ever built.
"""
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from errors import ConfigurationError, WiringError


MAX_WIRES = 10


@dataclass(frozen=True)
class StateVector:
    n_wires: int
    active_wires: Tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_wires <= MAX_WIRES:
            raise ConfigurationError(
                f"n_wires must be in [1, {MAX_WIRES}], got {self.n_wires}"
            )
        if len(set(self.active_wires)) != len(self.active_wires):
            raise WiringError(f"Duplicate active wires {self.active_wires}")
        for w in self.active_wires:
            if not 0 <= w < self.n_wires:
                raise WiringError(f"Active wire {w} outside register of {self.n_wires}")
        if self.amplitudes.shape[-1] != 2 ** self.n_wires:
            raise ConfigurationError(
                f"Expected {2 ** self.n_wires} amplitudes, got {self.amplitudes.shape[-1]}"
            )

    @property
    def batched(self):
        return self.amplitudes.ndim == 2

    @property
    def batch_size(self):
        return self.amplitudes.shape[0] if self.batched else 1

    def norm(self):
        return np.linalg.norm(self.amplitudes, axis=-1)


def new_state(n_wires, batch_size=None):
    """|0...0> on n_wires wires, all active; optionally repeated batch_size times."""
    if not isinstance(n_wires, (int, np.integer)) or not 1 <= n_wires <= MAX_WIRES:
        raise ConfigurationError(f"n_wires must be in [1, {MAX_WIRES}], got {n_wires}")
    shape = (2 ** n_wires,) if batch_size is None else (batch_size, 2 ** n_wires)
    amps = np.zeros(shape, dtype=np.complex128)
    amps[..., 0] = 1.0
    return StateVector(n_wires=int(n_wires), active_wires=tuple(range(n_wires)), amplitudes=amps)


def _check_active(state, wires):
    for w in wires:
        if not 0 <= w < state.n_wires:
            raise WiringError(f"Wire {w} outside register of {state.n_wires} wires")
        if w not in state.active_wires:
            raise WiringError(f"Wire {w} is not active (active: {state.active_wires})")


def apply_gate(state, gate):
    """Apply gate's unitary to its wires, identity elsewhere."""
    _check_active(state, gate.wires)
    matrix = gate.matrix()
    n = state.n_wires
    k = len(gate.wires)
    dim = 2 ** k

    amps = state.amplitudes
    psi = amps.reshape((-1,) + (2,) * n)
    axes = [1 + w for w in gate.wires]
    tail = list(range(n + 1 - k, n + 1))
    psi = np.moveaxis(psi, axes, tail)
    moved = psi.shape
    psi = psi.reshape(moved[0], -1, dim)

    if matrix.ndim == 2:
        out = psi @ matrix.T
    else:
        # (R, K, K) per-row matrices; a single-row state broadcasts up to R rows
        out = psi @ np.swapaxes(matrix.reshape(-1, dim, dim), -1, -2)

    rows = out.shape[0]
    out = out.reshape((rows,) + moved[1:])
    out = np.moveaxis(out, tail, axes).reshape(rows, 2 ** n)
    if amps.ndim == 1 and rows == 1:
        out = out[0]
    return replace(state, amplitudes=out)


def _probabilities(state):
    probs = np.abs(state.amplitudes) ** 2
    return probs.reshape((-1,) + (2,) * state.n_wires)


def expectation_z(state, wire):
    """<Z> on one wire: sum of |amp|^2 weighted +1 for bit 0, -1 for bit 1."""
    _check_active(state, (wire,))
    probs = np.moveaxis(_probabilities(state), 1 + wire, 1)
    probs = probs.reshape(probs.shape[0], 2, -1).sum(axis=-1)
    z = probs[:, 0] - probs[:, 1]
    return float(z[0]) if not state.batched else z


def expectations_z(state, wires):
    """<Z> on several wires at once; shape (O,) or (B, O)."""
    values = [np.atleast_1d(expectation_z(state, w)) for w in wires]
    out = np.stack(values, axis=-1) if values else np.zeros((state.batch_size, 0))
    return out if state.batched else out[0]


def deactivate_wire(state, wire):
    """
    Drop a wire from the active set without touching amplitudes.

    This is the discard half of a deferred measurement: every later gate or
    expectation on the wire is rejected.
    """
    if wire not in state.active_wires:
        raise WiringError(f"Wire {wire} already inactive or out of range")
    active = tuple(w for w in state.active_wires if w != wire)
    return replace(state, active_wires=active)
