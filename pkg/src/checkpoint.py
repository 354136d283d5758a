"""
Single-file checkpoint container.

Layout:
  b"QEDC" | u32 format version | 32-byte sha256 of everything after it |
  u64 metadata length | metadata (UTF-8 JSON) | sections (little-endian f8)

The metadata holds the config, vocabulary, epoch, best metrics, optimizer
scalars and a table of (name, shape, offset) for every section.
"""
import hashlib
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from errors import CheckpointError, CheckpointVersionError, ChecksumError
from models.qedacvc.config import ModelConfig
from models.qedacvc.model import QEDACVC
from preprocessing.tokenizer import Vocab
from training.optimizer import OptimState


MAGIC = b'QEDC'
FORMAT_VERSION = 1
_HEADER = struct.Struct('<4sI32s')
_META_LEN = struct.Struct('<Q')
_MOMENTS = ('optim.first_moment', 'optim.second_moment')


@dataclass
class Checkpoint:
    model_config: ModelConfig
    vocab: Vocab
    parameters: dict
    optim: OptimState = None
    epoch: int = 0
    best_metrics: dict = field(default_factory=dict)
    training_config: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def save_checkpoint(ckpt, path):
    """Write atomically: a temp file in the same directory is renamed over `path`."""
    path = Path(path)
    sections = dict(ckpt.parameters)
    optim_meta = None
    if ckpt.optim is not None:
        sections[_MOMENTS[0]] = ckpt.optim.first_moment
        sections[_MOMENTS[1]] = ckpt.optim.second_moment
        optim_meta = {
            'step_count': ckpt.optim.step_count,
            'learning_rate': ckpt.optim.learning_rate,
            'beta1': ckpt.optim.beta1,
            'beta2': ckpt.optim.beta2,
            'epsilon': ckpt.optim.epsilon,
        }

    table = []
    blobs = []
    offset = 0
    for name, values in sections.items():
        values = np.asarray(values, dtype='<f8')
        blob = values.tobytes(order='C')
        table.append({'name': name, 'shape': list(values.shape), 'offset': offset, 'nbytes': len(blob)})
        blobs.append(blob)
        offset += len(blob)

    metadata = json.dumps({
        'model_config': ckpt.model_config.model_dump(mode='json'),
        'training_config': ckpt.training_config,
        'vocab': ckpt.vocab.to_dict(),
        'epoch': ckpt.epoch,
        'best_metrics': ckpt.best_metrics,
        'optim': optim_meta,
        'sections': table,
    }, ensure_ascii=False, sort_keys=True).encode('utf-8')

    body = _META_LEN.pack(len(metadata)) + metadata + b''.join(blobs)
    digest = hashlib.sha256(body).digest()

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + '.tmp')
    with open(tmp, 'wb') as f:
        f.write(_HEADER.pack(MAGIC, ckpt.format_version, digest))
        f.write(body)
    os.replace(tmp, path)


def load_checkpoint(path):
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size + _META_LEN.size:
        raise ChecksumError(f"{path}: truncated checkpoint")
    magic, version, digest = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version} is not supported (expected {FORMAT_VERSION})"
        )
    body = data[_HEADER.size:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError(f"{path}: checksum mismatch, file is corrupted")

    (meta_len,) = _META_LEN.unpack_from(body)
    meta_end = _META_LEN.size + meta_len
    metadata = json.loads(body[_META_LEN.size:meta_end].decode('utf-8'))
    payload = body[meta_end:]

    sections = {}
    for entry in metadata['sections']:
        start = entry['offset']
        values = np.frombuffer(payload[start:start + entry['nbytes']], dtype='<f8')
        sections[entry['name']] = values.reshape(entry['shape']).astype(np.float64)

    optim = None
    if metadata['optim'] is not None:
        optim = OptimState(
            first_moment=sections.pop(_MOMENTS[0]),
            second_moment=sections.pop(_MOMENTS[1]),
            **metadata['optim'],
        )
    return Checkpoint(
        model_config=ModelConfig(**metadata['model_config']),
        vocab=Vocab.from_dict(metadata['vocab']),
        parameters=sections,
        optim=optim,
        epoch=metadata['epoch'],
        best_metrics=metadata['best_metrics'],
        training_config=metadata['training_config'],
        format_version=version,
    )


def model_parameters(model):
    """Named float64 arrays for every trainable tensor, in registration order."""
    return {name: p.detach().cpu().numpy().astype(np.float64) for name, p in model.named_parameters()}


def build_model(ckpt):
    """Fresh QEDACVC carrying the checkpoint's parameters."""
    model = QEDACVC(ckpt.model_config)
    expected = dict(model.named_parameters())
    missing = sorted(set(expected) - set(ckpt.parameters))
    if missing:
        raise CheckpointError(f"Checkpoint lacks parameters: {', '.join(missing)}")
    with torch.no_grad():
        for name, param in expected.items():
            values = torch.as_tensor(ckpt.parameters[name], dtype=param.dtype)
            if values.shape != param.shape:
                raise CheckpointError(f"Parameter {name}: shape {tuple(values.shape)} != {tuple(param.shape)}")
            param.copy_(values)
    model.eval()
    return model
