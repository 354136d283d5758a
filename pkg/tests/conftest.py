import sys
from pathlib import Path

import numpy as np
import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from models.qedacvc.config import ModelConfig
from preprocessing.tokenizer import Vocab


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def vocab():
    return Vocab(tokens=['a', 'b', 'c', 'd'], languages=['en', 'fr'])


@pytest.fixture
def tiny_config(vocab):
    torch.manual_seed(0)
    return ModelConfig(
        n_qubits=4,
        conv_pool_stages=1,
        seq_len=6,
        dropout_rate=0.0,
        vocab_size=len(vocab),
        languages=['en', 'fr'],
    )
