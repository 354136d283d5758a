"""Statevector simulator, parameterized circuits and parameter-shift gradients"""
from .gates import GateSpec, build_gate
from .statevector import StateVector, new_state, apply_gate, expectation_z, expectations_z, deactivate_wire
from .circuit import ParamCircuit, Param, Input, run_circuit, random_circuit
from .gradients import param_shift_grad, finite_diff_grad, evaluate_expectations, circuit_expectations

__all__ = [
    'GateSpec', 'build_gate',
    'StateVector', 'new_state', 'apply_gate', 'expectation_z', 'expectations_z', 'deactivate_wire',
    'ParamCircuit', 'Param', 'Input', 'run_circuit', 'random_circuit',
    'param_shift_grad', 'finite_diff_grad', 'evaluate_expectations', 'circuit_expectations',
]
