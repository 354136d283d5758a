"""
Parameterized circuits: an ordered gate list plus the registry of which
gate angles are trainable parameters and which carry encoded inputs.
"""
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from errors import DifferentiationError, ShapeError, WiringError
from quantum.gates import GATE_ARITY, SHIFTABLE_KINDS, GateSpec, build_gate
from quantum.statevector import apply_gate, deactivate_wire, new_state


class Param(NamedTuple):
    """Angle bound to trainable parameter `index`."""
    index: int


class Input(NamedTuple):
    """Angle bound to encoded input feature `index`."""
    index: int


Slot = Tuple[int, int]  # (gate position, angle position)


@dataclass
class ParamCircuit:
    """
    Ordered gates over a fixed register with trainable and input slots.

    param_slots[p] lists every (gate, angle) slot that reads parameter p;
    more than one slot per parameter expresses weight sharing. Wires listed
    in discards[g] are deactivated right before gate g (g == len(gates)
    means after the last gate).
    """
    n_wires: int
    gates: List[GateSpec] = field(default_factory=list)
    param_slots: List[List[Slot]] = field(default_factory=list)
    input_slots: List[List[Slot]] = field(default_factory=list)
    discards: Dict[int, List[int]] = field(default_factory=dict)

    @property
    def n_params(self):
        return len(self.param_slots)

    @property
    def n_inputs(self):
        return len(self.input_slots)

    def new_params(self, count):
        """Reserve `count` fresh trainable parameters; returns their Param refs."""
        start = len(self.param_slots)
        self.param_slots.extend([] for _ in range(count))
        return [Param(i) for i in range(start, start + count)]

    def new_inputs(self, count):
        start = len(self.input_slots)
        self.input_slots.extend([] for _ in range(count))
        return [Input(i) for i in range(start, start + count)]

    def add(self, kind, wires, angles=()):
        """
        Append a gate whose angles are floats, Param refs or Input refs.

        Returns:
            Position of the new gate
        """
        position = len(self.gates)
        values = [0.0 if isinstance(a, (Param, Input)) else float(a) for a in angles]
        gate = build_gate(kind, values, wires)
        dropped = self.discarded_wires()
        for w in gate.wires:
            if not 0 <= w < self.n_wires:
                raise WiringError(f"Wire {w} outside circuit of {self.n_wires} wires")
            if w in dropped:
                raise WiringError(f"Gate {kind} addresses discarded wire {w}")
        for a, angle in enumerate(angles):
            if isinstance(angle, Param):
                self.param_slots[angle.index].append((position, a))
            elif isinstance(angle, Input):
                self.input_slots[angle.index].append((position, a))
        self.gates.append(gate)
        return position

    def discard(self, wire):
        if wire in self.discarded_wires():
            raise WiringError(f"Wire {wire} discarded twice")
        self.discards.setdefault(len(self.gates), []).append(wire)

    def discarded_wires(self):
        return {w for wires in self.discards.values() for w in wires}

    def active_wires(self, initial=None):
        """Wires still active after the whole circuit has run."""
        initial = tuple(range(self.n_wires)) if initial is None else tuple(initial)
        dropped = self.discarded_wires()
        return tuple(w for w in initial if w not in dropped)

    def check_shiftable(self, slots):
        """
        Every slot must sit on a gate with a +-pi/2 shift rule.

        A CU3 angle only qualifies when its control wire is never acted on
        again, so the two control branches never interfere and the U3 global
        phase stays unobservable.
        """
        for position, _ in slots:
            gate = self.gates[position]
            if gate.kind not in SHIFTABLE_KINDS:
                raise DifferentiationError(
                    f"Gate {position} ({gate.kind}) has no shift rule"
                )
            if gate.kind == 'CU3':
                control = gate.wires[0]
                for later in self.gates[position + 1:]:
                    if control in later.wires:
                        raise DifferentiationError(
                            f"CU3 at {position} has its control wire {control} "
                            f"reused later; the two-term shift rule is not exact"
                        )

    def all_param_slots(self):
        return [(p, slot) for p, slots in enumerate(self.param_slots) for slot in slots]

    def all_input_slots(self):
        return [(i, slot) for i, slots in enumerate(self.input_slots) for slot in slots]


def _as_rows(values, width, name):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        if values.shape[0] != width:
            raise ShapeError(f"Expected {width} {name}, got {values.shape[0]}")
        return values[None, :], False
    if values.ndim == 2 and values.shape[1] == width:
        return values, True
    raise ShapeError(f"Expected {name} of shape ({width},) or (B, {width}), got {values.shape}")


def bind_angles(circuit, params, inputs):
    """
    Resolve every gate angle to a float or a per-row array.

    Args:
        params: (P,) or (R, P)
        inputs: (I,) or (R, I)

    Returns:
        (angles, rows, batched) where angles[g][a] is a float or an (R,) array
    """
    params, p_batched = _as_rows(params, circuit.n_params, 'params')
    inputs, i_batched = _as_rows(inputs, circuit.n_inputs, 'inputs')
    rows = max(params.shape[0], inputs.shape[0])
    if params.shape[0] not in (1, rows) or inputs.shape[0] not in (1, rows):
        raise ShapeError(
            f"Batch mismatch between params ({params.shape[0]}) and inputs ({inputs.shape[0]})"
        )
    angles = [list(g.params) for g in circuit.gates]
    for p, slots in enumerate(circuit.param_slots):
        column = params[:, p] if p_batched else params[0, p]
        for g, a in slots:
            angles[g][a] = column
    for i, slots in enumerate(circuit.input_slots):
        column = inputs[:, i] if i_batched else inputs[0, i]
        for g, a in slots:
            angles[g][a] = column
    return angles, rows, (p_batched or i_batched)


def execute(circuit, angles, state0=None):
    """Run the circuit with pre-bound angles (see bind_angles)."""
    state = new_state(circuit.n_wires) if state0 is None else state0
    if state.n_wires != circuit.n_wires:
        raise ShapeError(
            f"Circuit acts on {circuit.n_wires} wires, state has {state.n_wires}"
        )
    for position, gate in enumerate(circuit.gates):
        for w in circuit.discards.get(position, ()):
            state = deactivate_wire(state, w)
        bound = GateSpec(kind=gate.kind, params=tuple(angles[position]), wires=gate.wires)
        state = apply_gate(state, bound)
    for w in circuit.discards.get(len(circuit.gates), ()):
        state = deactivate_wire(state, w)
    return state


def run_circuit(circuit, params, inputs=None, state0=None):
    """
    Bind parameters and inputs into their slots and apply the gates in order

    Args:
        circuit: ParamCircuit
        params: Trainable angles, (n_params,) or (B, n_params)
        inputs: Encoded inputs, (n_inputs,) or (B, n_inputs)
        state0: Initial StateVector (defaults to |0...0>)

    Returns:
        Final StateVector (batched when params or inputs are)
    """
    if inputs is None:
        inputs = np.zeros(circuit.n_inputs)
    angles, _, _ = bind_angles(circuit, params, inputs)
    return execute(circuit, angles, state0)


def random_circuit(rng, n_wires, n_gates, n_params, n_inputs=0, pooling=False):
    """
    Random circuit for gradient cross-checks.

    Every trainable parameter is used at least once; some are shared by
    several gates. With pooling=True the circuit ends in a pooling-style
    CU3 whose control is discarded right after.
    """
    circuit = ParamCircuit(n_wires=n_wires)
    params = circuit.new_params(n_params)
    inputs = circuit.new_inputs(n_inputs)
    for ref, wire in zip(inputs, range(n_wires)):
        circuit.add('RY', (wire,), (ref,))

    pending = list(params)
    kinds = [k for k in GATE_ARITY if k != 'CU3']
    if n_wires < 2:
        kinds = [k for k in kinds if GATE_ARITY[k][0] == 1]
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        arity, n_angles = GATE_ARITY[kind]
        wires = tuple(int(w) for w in rng.choice(n_wires, size=arity, replace=False))
        angles = []
        for _ in range(n_angles):
            if pending:
                angles.append(pending.pop(0))
            else:
                angles.append(params[rng.integers(len(params))] if params else float(rng.uniform(-np.pi, np.pi)))
        circuit.add(kind, wires, angles)
    # Any parameter not yet placed gets its own RY
    for ref in pending:
        circuit.add('RY', (int(rng.integers(n_wires)),), (ref,))

    if pooling and n_wires >= 2 and n_params >= 3:
        control, target = n_wires - 1, n_wires - 2
        circuit.add('CU3', (control, target), tuple(params[:3]))
        circuit.discard(control)
    return circuit
