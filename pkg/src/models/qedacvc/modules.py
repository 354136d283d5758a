"""
torch building blocks wrapping the quantum circuits.

Every trainable angle is an nn.Parameter; the circuits themselves are built
once per module and evaluated through the parameter-shift autograd bridge.
"""
import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from quantum.gradients import circuit_expectations
from quantum.layers import (
    CONV_BLOCK_SIZE,
    POOL_SIZE,
    build_feature_circuit,
    build_projection_circuit,
    build_variational_circuit,
    dense_size,
    quantum_attention,
    uniform_weights,
)


def _angles(*shape, scale):
    return nn.Parameter(torch.empty(*shape, dtype=torch.float64).uniform_(-scale * math.pi, scale * math.pi))


class QuantumBlock(nn.Module):
    """Marker base: parameters of these modules count as quantum parameters."""


class QuantumFeatureExtractor(QuantumBlock):
    """
    Per-token angle encoding -> (conv -> pool) x stages -> dense -> <Z> readout

    Args:
        n_qubits: Register width (= embedding dimension)
        stages: Number of conv/pool repetitions
        conv: Include the convolution layers (off in ablation O1)
        init_scale: Angles start uniform in ±init_scale·π
        workers: Threads for shifted circuit evaluation
    """

    def __init__(self, n_qubits, stages, conv=True, init_scale=0.1, workers=1):
        super().__init__()
        self.n_qubits = n_qubits
        self.stages = stages
        self.use_conv = conv
        self.workers = workers
        self.circuit, self.readout = build_feature_circuit(n_qubits, stages, conv=conv)

        if conv:
            self.conv = _angles(stages, CONV_BLOCK_SIZE, scale=init_scale)
        else:
            self.register_parameter('conv', None)
        self.pool = _angles(stages, POOL_SIZE, scale=init_scale)
        self.dense = _angles(dense_size(len(self.readout)), scale=init_scale)

    def flat_angles(self):
        # Must follow the parameter layout of build_feature_circuit
        parts = []
        for stage in range(self.stages):
            if self.use_conv:
                parts.append(self.conv[stage])
            parts.append(self.pool[stage])
        parts.append(self.dense)
        return torch.cat(parts)

    def forward(self, angles):
        shape = angles.shape
        flat = angles.reshape(-1, self.n_qubits)
        z = circuit_expectations(flat, self.flat_angles(), self.circuit, self.readout, self.workers)
        # Readout occupies the first k slots, zero-padded back to d
        z = F.pad(z, (0, self.n_qubits - len(self.readout)))
        return z.reshape(shape)


class QuantumAttention(QuantumBlock):
    """Single-head attention whose q/k/v come from U3 projection circuits."""

    def __init__(self, n_qubits, causal=False, init_scale=0.1, workers=1):
        super().__init__()
        self.n_qubits = n_qubits
        self.causal = causal
        self.workers = workers
        self.circuit = build_projection_circuit(n_qubits)
        self.query = _angles(3 * n_qubits, scale=init_scale)
        self.key = _angles(3 * n_qubits, scale=init_scale)
        self.value = _angles(3 * n_qubits, scale=init_scale)

    def forward(self, query_reps, key_reps, key_padding_mask=None):
        out, _ = quantum_attention(
            query_reps, key_reps, self.query, self.key, self.value, self.circuit,
            key_padding_mask=key_padding_mask, causal=self.causal, workers=self.workers,
        )
        return out


class UniformAttention(nn.Module):
    """Averages the unmasked key representations; replaces attention when it is ablated."""

    def __init__(self, causal=False):
        super().__init__()
        self.causal = causal

    def forward(self, query_reps, key_reps, key_padding_mask=None):
        weights = uniform_weights(query_reps.shape, key_reps.shape, key_padding_mask,
                                  self.causal, key_reps.device)
        return weights.to(key_reps.dtype) @ key_reps


class QuantumVariational(QuantumBlock):
    """H, RY(angle_i), CNOT chain on angle-encoded features; <Z_i> per wire."""

    def __init__(self, n_qubits, init_scale=0.1, workers=1):
        super().__init__()
        self.n_qubits = n_qubits
        self.workers = workers
        self.circuit = build_variational_circuit(n_qubits)
        self.angles = _angles(n_qubits, scale=init_scale)

    def forward(self, features):
        shape = features.shape
        flat = features.reshape(-1, self.n_qubits)
        z = circuit_expectations(flat, self.angles, self.circuit, tuple(range(self.n_qubits)), self.workers)
        return z.reshape(shape)
