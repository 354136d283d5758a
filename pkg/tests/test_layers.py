import numpy as np
import pytest
import torch
from numpy.testing import assert_allclose
from torch.func import functional_call

from errors import ArchitectureError, AttentionError, ShapeError
from models.qedacvc.modules import QuantumAttention, QuantumFeatureExtractor, QuantumVariational
from quantum.gates import build_gate
from quantum.gradients import evaluate_expectations
from quantum.layers import (
    AttentionParams,
    angle_encode,
    attention_weights,
    build_feature_circuit,
    build_projection_circuit,
    conv_pairs,
    qattention,
    qconv_layer,
    qdense,
    qpool_layer,
    qvariational,
    uniform_weights,
)
from quantum.statevector import StateVector, apply_gate, expectation_z, expectations_z, new_state


def operator(kind, params, wires, n_wires):
    """Dense 2^n x 2^n matrix of one gate, built from bit patterns (wire 0 = MSB)."""
    m = build_gate(kind, params, wires).matrix()
    dim = 2 ** n_wires
    bit = lambda index, wire: (index >> (n_wires - 1 - wire)) & 1
    local = lambda index: sum(bit(index, w) << (len(wires) - 1 - k) for k, w in enumerate(wires))
    others = [w for w in range(n_wires) if w not in wires]
    out = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        for j in range(dim):
            if all(bit(i, w) == bit(j, w) for w in others):
                out[i, j] = m[local(i), local(j)]
    return out


def random_state(rng, n_wires):
    psi = rng.normal(size=2 ** n_wires) + 1j * rng.normal(size=2 ** n_wires)
    return StateVector(n_wires, tuple(range(n_wires)), psi / np.linalg.norm(psi))


def projection(reps, angles):
    reps = np.atleast_2d(reps)
    return evaluate_expectations(build_projection_circuit(reps.shape[1]), angles, reps)

def test_angle_encoding_sets_z_to_cosine():
    features = np.array([0.0, np.pi / 3, np.pi])
    state = angle_encode(features, 3)
    for wire, angle in enumerate(features):
        assert expectation_z(state, wire) == pytest.approx(np.cos(angle), abs=1e-12)


def test_angle_encoding_length_mismatch():
    with pytest.raises(ShapeError):
        angle_encode([0.1, 0.2], 3)


@pytest.mark.parametrize('active, expected', [
    ((0, 1), [(0, 1)]),
    ((0, 1, 2), [(0, 1), (1, 2)]),
    ((0, 1, 2, 3), [(0, 1), (2, 3), (1, 2), (3, 0)]),
])
def test_conv_pairs(active, expected):
    assert conv_pairs(active) == expected


def test_conv_layer_preserves_norm_and_wires(rng):
    state = angle_encode(rng.uniform(-np.pi, np.pi, 4), 4)
    out = qconv_layer(state, rng.uniform(-np.pi, np.pi, 15))
    assert out.active_wires == state.active_wires
    assert abs(out.norm() - 1.0) < 1e-12


def test_conv_layer_rejects_single_wire(rng):
    state = qpool_layer(angle_encode([0.1, 0.2], 2), np.zeros(3))
    with pytest.raises(ArchitectureError):
        qconv_layer(state, np.zeros(15))


def test_pooling_halves_active_wires(rng):
    state = angle_encode(rng.uniform(-np.pi, np.pi, 8), 8)
    state = qpool_layer(state, rng.uniform(-np.pi, np.pi, 3))
    assert state.active_wires == (0, 2, 4, 6)
    state = qpool_layer(state, rng.uniform(-np.pi, np.pi, 3))
    assert state.active_wires == (0, 4)


def test_pooling_needs_even_active_count():
    with pytest.raises(ArchitectureError):
        qpool_layer(angle_encode([0.1, 0.2, 0.3], 3), np.zeros(3))


def test_pooling_with_zero_angles_keeps_kept_wire_expectation():
    state = angle_encode([0.4, 1.3], 2)
    pooled = qpool_layer(state, np.zeros(3))
    assert expectation_z(pooled, 0) == pytest.approx(np.cos(0.4), abs=1e-12)


@pytest.mark.parametrize('n_active, n_angles', [(1, 3), (2, 15), (3, 63)])
def test_dense_sizes(n_active, n_angles, rng):
    state = angle_encode(rng.uniform(-np.pi, np.pi, n_active), n_active)
    out = qdense(state, rng.uniform(-np.pi, np.pi, n_angles))
    assert abs(out.norm() - 1.0) < 1e-12
    with pytest.raises(ShapeError):
        qdense(state, np.zeros(n_angles + 1))


def test_dense_rejects_four_wires():
    with pytest.raises(ArchitectureError):
        qdense(angle_encode(np.zeros(4), 4), np.zeros(63))


@pytest.mark.parametrize('conv, n_params', [(True, 2 * (15 + 3) + 15), (False, 2 * 3 + 15)])
def test_feature_circuit_layout(conv, n_params):
    circuit, readout = build_feature_circuit(8, 2, conv=conv)
    assert readout == (0, 4)
    assert circuit.n_params == n_params
    assert circuit.n_inputs == 8
    assert circuit.active_wires() == (0, 4)


def test_variational_with_zero_angles_reads_zero():
    out = qvariational(np.zeros(4), np.zeros(4))
    assert_allclose(out, np.zeros(4), atol=1e-12)


def test_variational_output_in_range(rng):
    out = qvariational(rng.uniform(-np.pi, np.pi, 5), rng.uniform(-np.pi, np.pi, 5))
    assert out.shape == (5,)
    assert np.all(np.abs(out) <= 1.0)


def test_attention_rows_sum_to_one_and_skip_padding():
    q = torch.randn(1, 3, 4, dtype=torch.float64)
    k = torch.randn(1, 3, 4, dtype=torch.float64)
    mask = torch.tensor([[False, False, True]])
    weights = attention_weights(q, k, mask)
    assert_allclose(weights.sum(-1).numpy(), np.ones((1, 3)), atol=1e-12)
    assert torch.all(weights[..., 2] == 0)


def test_causal_attention_first_row_attends_to_itself():
    q = torch.randn(2, 4, 3, dtype=torch.float64)
    weights = attention_weights(q, q, causal=True)
    assert_allclose(weights[:, 0, 0].numpy(), [1.0, 1.0])
    assert torch.all(weights.triu(diagonal=1) == 0)


def test_fully_masked_row_is_an_error():
    q = torch.randn(1, 2, 3, dtype=torch.float64)
    with pytest.raises(AttentionError):
        attention_weights(q, q, torch.tensor([[True, True]]))


def test_uniform_weights_average_unmasked_keys():
    weights = uniform_weights((1, 2, 4), (1, 3, 4), torch.tensor([[False, True, False]]))
    assert_allclose(weights[0].numpy(), [[0.5, 0.0, 0.5], [0.5, 0.0, 0.5]])


def test_qattention_outputs_convex_combinations(rng):
    params = AttentionParams.random(4, rng)
    reps = rng.uniform(-np.pi, np.pi, (5, 4))
    out = qattention(reps, params, mask=np.array([False, False, False, True, True]))
    assert out.shape == (5, 4)
    assert np.all(np.abs(out) <= 1.0 + 1e-12)


def test_qattention_rejects_wrong_angle_count(rng):
    params = AttentionParams(np.zeros(12), np.zeros(12), np.zeros(11))
    with pytest.raises(ShapeError):
        qattention(rng.uniform(size=(3, 4)), params)


def test_conv_layer_matches_full_matrix_oracle(rng):
    state = random_state(rng, 4)
    angles = rng.uniform(-np.pi, np.pi, 15)
    expected = state.amplitudes
    for a, b in conv_pairs((0, 1, 2, 3)):
        for kind, wires, block in [
            ('U3', (a,), angles[0:3]), ('U3', (b,), angles[3:6]),
            ('RXX', (a, b), angles[6:7]), ('RYY', (a, b), angles[7:8]), ('RZZ', (a, b), angles[8:9]),
            ('U3', (a,), angles[9:12]), ('U3', (b,), angles[12:15]),
        ]:
            expected = operator(kind, block, wires, 4) @ expected
    out = qconv_layer(state, angles)
    assert np.max(np.abs(out.amplitudes - expected)) < 1e-12


def test_zero_angles_leave_state_unchanged(rng):
    state = random_state(rng, 4)
    assert_allclose(qconv_layer(state, np.zeros(15)).amplitudes, state.amplitudes, atol=1e-14)
    for n_wires, n_angles in [(1, 3), (2, 15), (3, 63)]:
        state = random_state(rng, n_wires)
        assert_allclose(qdense(state, np.zeros(n_angles)).amplitudes, state.amplitudes, atol=1e-14)


def test_single_wire_dense_is_a_u3(rng):
    state = qpool_layer(random_state(rng, 2), rng.uniform(-np.pi, np.pi, 3))
    assert state.active_wires == (0,)
    angles = rng.uniform(-np.pi, np.pi, 3)
    expected = apply_gate(state, build_gate('U3', angles, (0,)))
    assert_allclose(qdense(state, angles).amplitudes, expected.amplitudes, atol=1e-14)


def test_variational_matches_gate_by_gate_run(rng):
    features = rng.uniform(-np.pi, np.pi, 4)
    angles = rng.uniform(-np.pi, np.pi, 4)
    state = new_state(4)
    for wire in range(4):
        state = apply_gate(state, build_gate('RY', (features[wire],), (wire,)))
    for wire in range(4):
        state = apply_gate(state, build_gate('H', (), (wire,)))
    for wire in range(4):
        state = apply_gate(state, build_gate('RY', (angles[wire],), (wire,)))
    for wire in range(3):
        state = apply_gate(state, build_gate('CNOT', (), (wire, wire + 1)))
    assert_allclose(qvariational(features, angles), expectations_z(state, range(4)), atol=1e-12)


def test_single_token_attention_returns_its_value(rng):
    params = AttentionParams.random(3, rng)
    reps = rng.uniform(-np.pi, np.pi, (1, 3))
    assert_allclose(qattention(reps, params), projection(reps, params.value_angles), atol=1e-12)


def test_identical_tokens_attend_uniformly(rng):
    row = torch.as_tensor(rng.uniform(-1, 1, 4))
    q = torch.as_tensor(rng.uniform(-1, 1, (1, 3, 4)))
    weights = attention_weights(q, row.expand(1, 3, 4))
    assert_allclose(weights.numpy(), np.full((1, 3, 3), 1 / 3), atol=1e-12)

    params = AttentionParams.random(4, rng)
    reps = np.tile(rng.uniform(-np.pi, np.pi, 4), (3, 1))
    value = projection(reps[:1], params.value_angles)
    assert_allclose(qattention(reps, params), np.repeat(value, 3, axis=0), atol=1e-12)


def test_two_token_attention_oracle(rng):
    params = AttentionParams.random(3, rng)
    reps = rng.uniform(-np.pi, np.pi, (2, 3))
    q = projection(reps, params.query_angles)
    k = projection(reps, params.key_angles)
    v = projection(reps, params.value_angles)
    scores = q @ k.T / np.sqrt(3)
    weights = np.exp(scores - scores.max(axis=1, keepdims=True))
    weights /= weights.sum(axis=1, keepdims=True)
    assert_allclose(qattention(reps, params), weights @ v, atol=1e-12)


@pytest.mark.parametrize('make_block, input_shape, n_args', [
    (lambda: QuantumFeatureExtractor(4, 1, init_scale=0.5), (2, 4), 1),
    (lambda: QuantumFeatureExtractor(4, 1, conv=False, init_scale=0.5), (2, 4), 1),
    (lambda: QuantumAttention(3, causal=True, init_scale=0.5), (1, 2, 3), 2),
    (lambda: QuantumVariational(3, init_scale=0.5), (2, 3), 1),
])
def test_quantum_blocks_pass_gradcheck(make_block, input_shape, n_args):
    torch.manual_seed(0)
    block = make_block()
    names = [name for name, _ in block.named_parameters()]

    def run(x, *params):
        return functional_call(block, dict(zip(names, params)), (x,) * n_args)

    x = (torch.rand(input_shape, dtype=torch.float64) * 2 - 1).requires_grad_()
    params = [p.detach().clone().requires_grad_() for p in block.parameters()]
    assert torch.autograd.gradcheck(run, (x, *params), eps=1e-6, atol=1e-6)
