"""
Quantum layer blocks: angle encoding, convolution, pooling, dense,
attention and the variational readout.

Each block exists twice: as an `append_*` builder that writes its gates
into a ParamCircuit (used by the model, so a whole per-token stack is one
differentiable circuit), and as a state-level operation that builds a small
circuit around the current active wires and runs it.
"""
from dataclasses import dataclass

import numpy as np
import torch

from errors import ArchitectureError, AttentionError, ShapeError
from quantum.circuit import ParamCircuit, run_circuit
from quantum.gradients import circuit_expectations, evaluate_expectations
from quantum.statevector import apply_gate, new_state
from quantum.gates import build_gate


CONV_BLOCK_SIZE = 15
POOL_SIZE = 3
DENSE_SIZES = {1: 3, 2: 15, 3: 63}


def _angles(values, expected, name):
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.shape[0] != expected:
        raise ShapeError(f"{name} takes {expected} angles, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise ShapeError(f"{name} angles must be finite")
    return values


def conv_pairs(active):
    """
    Even-offset pairs, then odd-offset pairs.

    A wrap pair (last, first) is added only for an even count above 2; with two
    wires it would repeat the single even pair.
    """
    active = tuple(active)
    k = len(active)
    even = [(active[i], active[i + 1]) for i in range(0, k - 1, 2)]
    odd = [(active[i], active[i + 1]) for i in range(1, k - 1, 2)]
    if k % 2 == 0 and k > 2:
        odd.append((active[-1], active[0]))
    return even + odd


def pool_pairs(active):
    """(keep, drop) pairs; the lower-indexed wire of each pair is kept."""
    active = tuple(active)
    if len(active) < 2 or len(active) % 2:
        raise ArchitectureError(f"Pooling needs an even number (>= 2) of active wires, got {len(active)}")
    return [(active[i], active[i + 1]) for i in range(0, len(active), 2)]


def dense_size(k):
    if k not in DENSE_SIZES:
        raise ArchitectureError(f"Dense layer supports 1 to 3 active wires, got {k}")
    return DENSE_SIZES[k]


def append_angle_encoding(circuit, wires, inputs):
    for wire, ref in zip(wires, inputs):
        circuit.add('RY', (wire,), (ref,))


def append_two_qubit_block(circuit, a, b, angles):
    """U3⊗U3, RXX, RYY, RZZ, U3⊗U3: 15 angles, universal on two qubits."""
    circuit.add('U3', (a,), angles[0:3])
    circuit.add('U3', (b,), angles[3:6])
    circuit.add('RXX', (a, b), angles[6:7])
    circuit.add('RYY', (a, b), angles[7:8])
    circuit.add('RZZ', (a, b), angles[8:9])
    circuit.add('U3', (a,), angles[9:12])
    circuit.add('U3', (b,), angles[12:15])


def append_qconv(circuit, active, angles):
    if len(active) < 2:
        raise ArchitectureError(f"Convolution needs >= 2 active wires, got {len(active)}")
    for a, b in conv_pairs(active):
        append_two_qubit_block(circuit, a, b, angles)


def append_qpool(circuit, active, angles):
    """CU3 from every drop wire onto its keep wire, then discard the drop wire."""
    kept = []
    for keep, drop in pool_pairs(active):
        circuit.add('CU3', (drop, keep), angles)
        circuit.discard(drop)
        kept.append(keep)
    return tuple(kept)


def _append_three_qubit_dense(circuit, wires, angles):
    # U3 layer, then three rounds of (Ising couplings on every pair, U3 layer): 9 + 3 * 18
    pairs = [(wires[0], wires[1]), (wires[1], wires[2]), (wires[0], wires[2])]
    cursor = 0
    for w in wires:
        circuit.add('U3', (w,), angles[cursor:cursor + 3])
        cursor += 3
    for _ in range(3):
        for a, b in pairs:
            for kind in ('RXX', 'RYY', 'RZZ'):
                circuit.add(kind, (a, b), angles[cursor:cursor + 1])
                cursor += 1
        for w in wires:
            circuit.add('U3', (w,), angles[cursor:cursor + 3])
            cursor += 3


def append_qdense(circuit, active, angles):
    active = tuple(active)
    k = len(active)
    dense_size(k)
    if k == 1:
        circuit.add('U3', active, angles[0:3])
    elif k == 2:
        append_two_qubit_block(circuit, active[0], active[1], angles)
    else:
        _append_three_qubit_dense(circuit, active, angles)


def append_u3_layer(circuit, wires, angles):
    for i, w in enumerate(wires):
        circuit.add('U3', (w,), angles[3 * i:3 * i + 3])


def append_variational(circuit, wires, angles):
    for w in wires:
        circuit.add('H', (w,))
    for w, angle in zip(wires, angles):
        circuit.add('RY', (w,), (angle,))
    for a, b in zip(wires[:-1], wires[1:]):
        circuit.add('CNOT', (a, b))


def build_feature_circuit(n_qubits, stages, conv=True):
    """
    Per-token extractor: angle encoding, (conv -> pool) x stages, dense.

    Parameter layout: for each stage [conv (15) if conv, pool (3)], then dense.

    Returns:
        (circuit, readout wires)
    """
    circuit = ParamCircuit(n_wires=n_qubits)
    wires = tuple(range(n_qubits))
    append_angle_encoding(circuit, wires, circuit.new_inputs(n_qubits))
    active = wires
    for _ in range(stages):
        if conv:
            append_qconv(circuit, active, circuit.new_params(CONV_BLOCK_SIZE))
        active = append_qpool(circuit, active, circuit.new_params(POOL_SIZE))
    append_qdense(circuit, active, circuit.new_params(dense_size(len(active))))
    return circuit, active


def build_projection_circuit(n_qubits):
    """Angle encoding followed by one trainable U3 per wire (query/key/value projection)."""
    circuit = ParamCircuit(n_wires=n_qubits)
    wires = tuple(range(n_qubits))
    append_angle_encoding(circuit, wires, circuit.new_inputs(n_qubits))
    append_u3_layer(circuit, wires, circuit.new_params(3 * n_qubits))
    return circuit


def build_variational_circuit(n_qubits):
    circuit = ParamCircuit(n_wires=n_qubits)
    wires = tuple(range(n_qubits))
    append_angle_encoding(circuit, wires, circuit.new_inputs(n_qubits))
    append_variational(circuit, wires, circuit.new_params(n_qubits))
    return circuit


# State-level operations


def angle_encode(features, n_wires):
    """|0...0> with RY(feature_i) on wire i."""
    features = np.asarray(features, dtype=np.float64).reshape(-1)
    if features.shape[0] != n_wires:
        raise ShapeError(f"Expected {n_wires} features, got {features.shape[0]}")
    state = new_state(n_wires)
    for wire, angle in enumerate(features):
        state = apply_gate(state, build_gate('RY', (angle,), (wire,)))
    return state


def _run_block(state, params, build):
    circuit = ParamCircuit(n_wires=state.n_wires)
    build(circuit)
    return run_circuit(circuit, params, None, state0=state)


def qconv_layer(state, params):
    params = _angles(params, CONV_BLOCK_SIZE, 'Convolution block')
    if len(state.active_wires) < 2:
        raise ArchitectureError(f"Convolution needs >= 2 active wires, got {len(state.active_wires)}")
    return _run_block(
        state, params,
        lambda c: append_qconv(c, state.active_wires, c.new_params(CONV_BLOCK_SIZE)),
    )


def qpool_layer(state, params):
    params = _angles(params, POOL_SIZE, 'Pooling')
    pool_pairs(state.active_wires)
    return _run_block(
        state, params,
        lambda c: append_qpool(c, state.active_wires, c.new_params(POOL_SIZE)),
    )


def qdense(state, params):
    k = len(state.active_wires)
    params = _angles(params, dense_size(k), f'Dense ({k} wires)')
    return _run_block(
        state, params,
        lambda c: append_qdense(c, state.active_wires, c.new_params(dense_size(k))),
    )


def qvariational(features, params):
    """H, RY(params_i), CNOT chain on angle-encoded features; returns <Z_i> per wire."""
    features = np.asarray(features, dtype=np.float64).reshape(-1)
    d = features.shape[0]
    params = _angles(params, d, 'Variational layer')
    circuit = build_variational_circuit(d)
    return evaluate_expectations(circuit, params, features)


@dataclass
class AttentionParams:
    """One U3 per wire for each of the query, key and value projection circuits."""
    query_angles: np.ndarray
    key_angles: np.ndarray
    value_angles: np.ndarray

    @classmethod
    def random(cls, n_qubits, rng, scale=np.pi):
        draw = lambda: rng.uniform(-scale, scale, size=3 * n_qubits)
        return cls(draw(), draw(), draw())


def attention_weights(queries, keys, key_padding_mask=None, causal=False):
    """
    softmax(q k^T / sqrt(d)) over unmasked key positions

    Args:
        queries: (B, Tq, d)
        keys: (B, Tk, d)
        key_padding_mask: (B, Tk) bool, True at padding positions
        causal: Block keys after the query position

    Returns:
        (B, Tq, Tk) weights, rows summing to 1
    """
    d = queries.shape[-1]
    scores = queries @ keys.transpose(-1, -2) / np.sqrt(d)
    blocked = attention_mask(queries.shape, keys.shape, key_padding_mask, causal, scores.device)
    if blocked.all(dim=-1).any():
        raise AttentionError("Attention row with every key position masked")
    scores = scores.masked_fill(blocked, float('-inf'))
    return torch.softmax(scores, dim=-1)


def attention_mask(query_shape, key_shape, key_padding_mask, causal, device=None):
    batch, tq = query_shape[0], query_shape[1]
    tk = key_shape[1]
    blocked = torch.zeros(batch, tq, tk, dtype=torch.bool, device=device)
    if key_padding_mask is not None:
        blocked = blocked | key_padding_mask[:, None, :].to(torch.bool)
    if causal:
        future = torch.ones(tq, tk, dtype=torch.bool, device=device).triu(diagonal=1)
        blocked = blocked | future[None]
    return blocked


def uniform_weights(query_shape, key_shape, key_padding_mask=None, causal=False, device=None):
    """Equal weight on every unmasked key; stands in for attention in ablations."""
    blocked = attention_mask(query_shape, key_shape, key_padding_mask, causal, device)
    if blocked.all(dim=-1).any():
        raise AttentionError("Attention row with every key position masked")
    allowed = (~blocked).to(torch.float64)
    return allowed / allowed.sum(dim=-1, keepdim=True)


def project(reps, angles, circuit, workers=1):
    """Angle-encode each (…, d) representation, run the projection circuit, read <Z>."""
    d = reps.shape[-1]
    flat = reps.reshape(-1, d)
    out = circuit_expectations(flat, angles, circuit, tuple(range(d)), workers)
    return out.reshape(reps.shape)


def quantum_attention(query_reps, key_reps, query_angles, key_angles, value_angles,
                      circuit, key_padding_mask=None, causal=False, workers=1):
    """
    softmax(q k^T / sqrt(d)) v with q, k, v read from projection circuits.

    Returns:
        (outputs (B, Tq, d), weights (B, Tq, Tk))
    """
    q = project(query_reps, query_angles, circuit, workers)
    k = project(key_reps, key_angles, circuit, workers)
    v = project(key_reps, value_angles, circuit, workers)
    weights = attention_weights(q, k, key_padding_mask, causal)
    return weights @ v, weights


def qattention(token_reps, params, mask=None):
    """
    Self-attention over one token sequence

    Args:
        token_reps: (T, d) token representations in [-pi, pi]
        params: AttentionParams
        mask: (T,) bool, True at padding positions

    Returns:
        (T, d) numpy array
    """
    reps = np.asarray(token_reps, dtype=np.float64)
    if reps.ndim != 2:
        raise ShapeError(f"Expected (T, d) token representations, got shape {reps.shape}")
    d = reps.shape[1]
    angles = [
        torch.as_tensor(_angles(a, 3 * d, name))
        for a, name in ((params.query_angles, 'Query'), (params.key_angles, 'Key'),
                        (params.value_angles, 'Value'))
    ]
    key_mask = None if mask is None else torch.as_tensor(np.asarray(mask, dtype=bool))[None]
    circuit = build_projection_circuit(d)
    with torch.no_grad():
        out, _ = quantum_attention(torch.as_tensor(reps)[None], torch.as_tensor(reps)[None],
                                   *angles, circuit, key_padding_mask=key_mask)
    return out[0].numpy()
