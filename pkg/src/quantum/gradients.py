"""
Exact parameter-shift gradients of Pauli-Z expectations, a central
finite-difference oracle, and the torch autograd bridge that lets circuits
sit inside an nn.Module.

All shifted circuits of one call are stacked into a single batched
simulation (in chunks); chunks may run on a thread pool and are always
reduced in ascending slot order, so results do not depend on the worker
count.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import torch

from errors import ShapeError
from quantum.circuit import _as_rows, bind_angles, execute, run_circuit
from quantum.statevector import expectations_z


SHIFT = np.pi / 2
DEFAULT_CHUNK_ROWS = 4096


def _resolve(circuit, params, inputs, observable_wires):
    if inputs is None:
        inputs = np.zeros(circuit.n_inputs)
    params2, p_batched = _as_rows(params, circuit.n_params, 'params')
    inputs2, i_batched = _as_rows(inputs, circuit.n_inputs, 'inputs')
    batch = max(params2.shape[0], inputs2.shape[0])
    if params2.shape[0] not in (1, batch) or inputs2.shape[0] not in (1, batch):
        raise ShapeError("Batch mismatch between params and inputs")
    params2 = np.broadcast_to(params2, (batch, circuit.n_params))
    inputs2 = np.broadcast_to(inputs2, (batch, circuit.n_inputs))
    if observable_wires is None:
        observable_wires = circuit.active_wires()
    return params2, inputs2, batch, (p_batched or i_batched), tuple(observable_wires)


def _z_rows(state, observable_wires, rows):
    z = np.atleast_2d(expectations_z(state, observable_wires))
    return np.broadcast_to(z, (rows, len(observable_wires)))


def evaluate_expectations(circuit, params, inputs=None, observable_wires=None):
    """<Z_o> for each observable wire; (O,) or (B, O) following the inputs."""
    params2, inputs2, batch, batched, wires = _resolve(circuit, params, inputs, observable_wires)
    state = run_circuit(circuit, params2, inputs2)
    z = _z_rows(state, wires, batch)
    return z if batched else z[0]


def _map_chunks(fn, chunks, workers):
    if workers and workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, chunks))
    return [fn(chunk) for chunk in chunks]


def param_shift_grad(circuit, params, inputs=None, observable_wires=None,
                     wrt='params', chunk_rows=DEFAULT_CHUNK_ROWS, workers=1):
    """
    Jacobian of <Z_o> with respect to trainable angles (or encoded inputs)

    Entry (o, p) = 1/2 [<Z_o>(theta_p + pi/2) - <Z_o>(theta_p - pi/2)], summed
    over every slot that shares parameter p.

    Args:
        circuit: ParamCircuit
        params: (P,) or (B, P)
        inputs: (I,) or (B, I)
        observable_wires: Wires to measure (defaults to the circuit's final active wires)
        wrt: 'params' or 'inputs'
        chunk_rows: Upper bound on simulated rows per batched run
        workers: Threads used to evaluate chunks

    Returns:
        (O, width) array, or (B, O, width) when params or inputs are batched
    """
    params2, inputs2, batch, batched, wires = _resolve(circuit, params, inputs, observable_wires)
    if wrt == 'params':
        slots, width = circuit.all_param_slots(), circuit.n_params
    elif wrt == 'inputs':
        slots, width = circuit.all_input_slots(), circuit.n_inputs
    else:
        raise ValueError(f"wrt must be 'params' or 'inputs', got {wrt!r}")
    circuit.check_shiftable([slot for _, slot in slots])

    jac = np.zeros((batch, len(wires), width))
    if not slots:
        return jac if batched else jac[0]

    per_chunk = max(1, chunk_rows // (2 * batch))
    chunks = [slots[i:i + per_chunk] for i in range(0, len(slots), per_chunk)]

    def shifted_difference(chunk):
        rows = 2 * len(chunk) * batch
        angles, _, _ = bind_angles(
            circuit,
            np.tile(params2, (2 * len(chunk), 1)),
            np.tile(inputs2, (2 * len(chunk), 1)),
        )
        for s, (_, (g, a)) in enumerate(chunk):
            offset = np.zeros(rows)
            offset[2 * s * batch:(2 * s + 1) * batch] = SHIFT
            offset[(2 * s + 1) * batch:(2 * s + 2) * batch] = -SHIFT
            angles[g][a] = np.broadcast_to(angles[g][a], (rows,)) + offset
        z = _z_rows(execute(circuit, angles), wires, rows)
        z = z.reshape(len(chunk), 2, batch, len(wires))
        return 0.5 * (z[:, 0] - z[:, 1])

    for chunk, diff in zip(chunks, _map_chunks(shifted_difference, chunks, workers)):
        for s, (index, _) in enumerate(chunk):
            jac[:, :, index] += diff[s]
    return jac if batched else jac[0]


def finite_diff_grad(circuit, params, inputs=None, observable_wires=None, step=1e-4,
                     wrt='params', chunk_rows=DEFAULT_CHUNK_ROWS):
    """
    Central differences [f(x + step) - f(x - step)] / (2 step) per parameter.

    Shifts the parameter itself, so every slot sharing it moves together.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if wrt not in ('params', 'inputs'):
        raise ValueError(f"wrt must be 'params' or 'inputs', got {wrt!r}")
    params2, inputs2, batch, batched, wires = _resolve(circuit, params, inputs, observable_wires)
    width = circuit.n_params if wrt == 'params' else circuit.n_inputs
    jac = np.zeros((batch, len(wires), width))
    per_chunk = max(1, chunk_rows // (2 * batch))

    for start in range(0, width, per_chunk):
        columns = list(range(start, min(width, start + per_chunk)))
        rep_params = np.tile(params2, (2 * len(columns), 1))
        rep_inputs = np.tile(inputs2, (2 * len(columns), 1))
        target = rep_params if wrt == 'params' else rep_inputs
        for s, j in enumerate(columns):
            target[2 * s * batch:(2 * s + 1) * batch, j] += step
            target[(2 * s + 1) * batch:(2 * s + 2) * batch, j] -= step
        rows = rep_params.shape[0]
        z = _z_rows(run_circuit(circuit, rep_params, rep_inputs), wires, rows)
        z = z.reshape(len(columns), 2, batch, len(wires))
        for s, j in enumerate(columns):
            jac[:, :, j] = (z[s, 0] - z[s, 1]) / (2 * step)
    return jac if batched else jac[0]


class CircuitFunction(torch.autograd.Function):
    """
    Autograd node for a ParamCircuit measured in Z.

    forward: inputs (B, I), params (P,) -> <Z> (B, O)
    backward: vector-Jacobian products from parameter-shift Jacobians, for
    both the trainable angles and the encoded inputs.
    """

    @staticmethod
    def forward(ctx, inputs, params, circuit, observable_wires, workers=1):
        x = inputs.detach().cpu().numpy()
        theta = params.detach().cpu().numpy()
        z = evaluate_expectations(circuit, theta, x, observable_wires)
        ctx.save_for_backward(inputs, params)
        ctx.circuit = circuit
        ctx.observable_wires = observable_wires
        ctx.workers = workers
        return torch.as_tensor(np.ascontiguousarray(z), dtype=inputs.dtype, device=inputs.device)

    @staticmethod
    def backward(ctx, grad_output):
        inputs, params = ctx.saved_tensors
        x = inputs.detach().cpu().numpy()
        theta = params.detach().cpu().numpy()
        g = grad_output.detach().cpu().numpy()
        grad_inputs = grad_params = None

        if ctx.needs_input_grad[0]:
            jac = param_shift_grad(ctx.circuit, theta, x, ctx.observable_wires,
                                   wrt='inputs', workers=ctx.workers)
            grad_inputs = torch.as_tensor(np.einsum('bo,boi->bi', g, jac),
                                          dtype=inputs.dtype, device=inputs.device)
        if ctx.needs_input_grad[1]:
            jac = param_shift_grad(ctx.circuit, theta, x, ctx.observable_wires,
                                   wrt='params', workers=ctx.workers)
            grad_params = torch.as_tensor(np.einsum('bo,bop->p', g, jac),
                                          dtype=params.dtype, device=params.device)
        return grad_inputs, grad_params, None, None, None


def circuit_expectations(inputs, params, circuit, observable_wires, workers=1):
    """Differentiable <Z> readout of `circuit` for a (B, I) batch of inputs."""
    return CircuitFunction.apply(inputs, params, circuit, tuple(observable_wires), workers)
