import numpy as np
import pytest
import torch
from numpy.testing import assert_allclose

from errors import DifferentiationError, ShapeError
from quantum.circuit import ParamCircuit, random_circuit, run_circuit
from quantum.gradients import (
    circuit_expectations,
    evaluate_expectations,
    finite_diff_grad,
    param_shift_grad,
)
from quantum.statevector import new_state


def ry_circuit():
    circuit = ParamCircuit(n_wires=1)
    (theta,) = circuit.new_params(1)
    circuit.add('RY', (0,), (theta,))
    return circuit


def test_empty_circuit_leaves_state_unchanged():
    state0 = new_state(2)
    state = run_circuit(ParamCircuit(n_wires=2), np.zeros(0), state0=state0)
    assert_allclose(state.amplitudes, state0.amplitudes)


def test_ry_pi_slot_flips_qubit():
    state = run_circuit(ry_circuit(), [np.pi])
    assert_allclose(np.abs(state.amplitudes), [0, 1], atol=1e-15)


def test_parameter_count_mismatch():
    with pytest.raises(ShapeError):
        run_circuit(ry_circuit(), [0.1, 0.2])


@pytest.mark.parametrize('theta, expected', [(0.0, 0.0), (np.pi / 2, -1.0)])
def test_param_shift_single_rotation(theta, expected):
    grad = param_shift_grad(ry_circuit(), [theta])
    assert grad.shape == (1, 1)
    assert grad[0, 0] == pytest.approx(expected, abs=1e-12)


def test_finite_difference_single_rotation():
    grad = finite_diff_grad(ry_circuit(), [1.0], step=1e-4)
    assert abs(grad[0, 0] + np.sin(1.0)) < 1e-7


@pytest.mark.parametrize('grad_fn', [param_shift_grad, finite_diff_grad])
def test_unknown_differentiation_target(grad_fn):
    with pytest.raises(ValueError, match='wrt'):
        grad_fn(ry_circuit(), [0.3], wrt='weights')


def test_zero_gate_circuit_has_zero_gradient():
    circuit = ParamCircuit(n_wires=2)
    circuit.new_params(3)
    assert_allclose(param_shift_grad(circuit, np.ones(3)), np.zeros((2, 3)))
    assert_allclose(finite_diff_grad(circuit, np.ones(3)), np.zeros((2, 3)))


def test_shared_parameter_sums_both_slots():
    circuit = ParamCircuit(n_wires=1)
    (theta,) = circuit.new_params(1)
    circuit.add('RY', (0,), (theta,))
    circuit.add('RY', (0,), (theta,))
    # <Z> = cos(2 theta)
    grad = param_shift_grad(circuit, [0.3])
    assert grad[0, 0] == pytest.approx(-2 * np.sin(0.6), abs=1e-12)


@pytest.mark.parametrize('seed', range(20))
def test_param_shift_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n_wires = int(rng.integers(1, 9))
    n_params = int(rng.integers(1, 31))
    circuit = random_circuit(rng, n_wires, int(rng.integers(1, 25)), n_params,
                             n_inputs=int(rng.integers(0, n_wires + 1)), pooling=bool(seed % 2))
    params = rng.uniform(-np.pi, np.pi, n_params)
    inputs = rng.uniform(-np.pi, np.pi, circuit.n_inputs)
    for wrt in ('params', 'inputs'):
        exact = param_shift_grad(circuit, params, inputs, wrt=wrt)
        approx = finite_diff_grad(circuit, params, inputs, step=1e-4, wrt=wrt)
        assert np.max(np.abs(exact - approx), initial=0.0) < 1e-6


def test_three_qubit_twelve_parameter_circuit(rng):
    circuit = random_circuit(rng, 3, 10, 12)
    params = rng.uniform(-np.pi, np.pi, 12)
    assert np.max(np.abs(param_shift_grad(circuit, params) - finite_diff_grad(circuit, params))) < 1e-6


def test_gradient_is_linear_in_output_scale(rng):
    circuit = random_circuit(rng, 2, 6, 4, n_inputs=2)
    x = torch.tensor(rng.uniform(-1, 1, (2, 2)))
    start = rng.uniform(-1, 1, 4)
    grads = []
    for scale in (1.0, 3.5):
        p = torch.tensor(start, requires_grad=True)
        (scale * circuit_expectations(x, p, circuit, (0, 1)).sum()).backward()
        grads.append(p.grad.numpy())
    assert_allclose(grads[1], 3.5 * grads[0], atol=1e-10)


def test_batched_gradient_matches_rows(rng):
    circuit = random_circuit(rng, 3, 8, 5, n_inputs=3)
    params = rng.uniform(-np.pi, np.pi, 5)
    inputs = rng.uniform(-np.pi, np.pi, (4, 3))
    batched = param_shift_grad(circuit, params, inputs)
    for row in range(4):
        assert_allclose(batched[row], param_shift_grad(circuit, params, inputs[row]), atol=1e-12)


def test_worker_count_does_not_change_result(rng):
    circuit = random_circuit(rng, 4, 12, 10)
    params = rng.uniform(-np.pi, np.pi, 10)
    single = param_shift_grad(circuit, params, chunk_rows=4, workers=1)
    threaded = param_shift_grad(circuit, params, chunk_rows=4, workers=3)
    assert np.array_equal(single, threaded)


def test_cu3_with_reused_control_is_not_differentiable():
    circuit = ParamCircuit(n_wires=2)
    angles = circuit.new_params(3)
    circuit.add('CU3', (1, 0), angles)
    circuit.add('H', (1,))
    with pytest.raises(DifferentiationError):
        param_shift_grad(circuit, np.zeros(3))


def test_torch_bridge_passes_gradcheck(rng):
    circuit = random_circuit(rng, 3, 8, 6, n_inputs=3)
    inputs = torch.tensor(rng.uniform(-1, 1, (2, 3)), dtype=torch.float64, requires_grad=True)
    params = torch.tensor(rng.uniform(-1, 1, 6), dtype=torch.float64, requires_grad=True)
    fn = lambda x, p: circuit_expectations(x, p, circuit, (0, 1, 2))
    assert torch.autograd.gradcheck(fn, (inputs, params), eps=1e-6, atol=1e-6)


def test_bridge_forward_matches_simulator(rng):
    circuit = random_circuit(rng, 2, 5, 4, n_inputs=2)
    x = rng.uniform(-1, 1, (3, 2))
    p = rng.uniform(-1, 1, 4)
    out = circuit_expectations(torch.as_tensor(x), torch.as_tensor(p), circuit, (0, 1))
    assert_allclose(out.numpy(), evaluate_expectations(circuit, p, x, (0, 1)), atol=1e-15)
