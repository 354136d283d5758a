"""
Model and training configuration.

Config files are either JSON or flat `key = value` text; keys are routed to
ModelConfig or TrainingConfig by field name and CLI flags override them.
"""
import json
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from errors import ConfigurationError


# Named learning rates: desk-scale default and the two values printed for the original runs
LEARNING_RATE_PRESETS = {
    'desk': 1e-3,
    'table1': 1e-5,
    'eval': 2e-7,
}

# 10000 / 3000 / 1000 train / test / validation, scaled proportionally
DEFAULT_SPLIT_RATIOS = (10 / 14, 3 / 14, 1 / 14)


class AblationMode(str, Enum):
    O1 = 'O1'
    O2 = 'O2'
    O3 = 'O3'
    O4 = 'O4'
    O5 = 'O5'

    @property
    def description(self):
        return {
            'O1': 'Without Quantum Convolution Layer',
            'O2': 'With Quantum Convolution Layer',
            'O3': 'Without Quantum Attention Layer',
            'O4': 'With Quantum Attention Layer',
            'O5': 'Complete Model',
        }[self.value]

    def layers(self, variational_head=True):
        """(convolution, attention, variational head) switches for this mode."""
        if self is AblationMode.O1:
            return False, True, True
        if self in (AblationMode.O2, AblationMode.O3):
            return True, False, True
        if self is AblationMode.O4:
            return True, True, variational_head
        return True, True, True


class ModelConfig(BaseModel):
    """Architecture of the hybrid encoder-decoder; embed_dim always equals n_qubits."""
    model_config = ConfigDict(use_enum_values=False, validate_assignment=True)

    n_qubits: int = Field(8, ge=2, le=10, description="Wires per token register")
    conv_pool_stages: int = Field(2, ge=1, description="Conv -> pool repetitions per token")
    seq_len: int = Field(16, ge=2, description="Maximum token positions, specials included")
    dropout_rate: float = Field(0.02, ge=0.0, lt=1.0, description="Dropout on embedding rows")
    ablation_mode: AblationMode = Field(AblationMode.O5)
    vocab_size: int = Field(0, ge=0, description="Joint vocabulary size, set from the corpus")
    variational_head: bool = Field(True, description="Variational readout in mode O4")
    positional_embedding: bool = Field(True, description="Learned position rows added to token rows")
    init_scale: float = Field(0.1, gt=0.0, description="Quantum angles start uniform in ±init_scale·π")
    languages: List[str] = Field(default_factory=list)
    workers: int = Field(1, ge=1, description="Threads for shifted circuit evaluation")

    @field_validator('languages', mode='before')
    @classmethod
    def _split_languages(cls, value):
        if isinstance(value, str):
            return [v.strip() for v in value.split(',') if v.strip()]
        return value

    @model_validator(mode='after')
    def _check_register(self):
        block = 2 ** self.conv_pool_stages
        if self.n_qubits % block or self.n_qubits // block < 2:
            raise ValueError(
                f"n_qubits / 2^conv_pool_stages must be a whole number >= 2, "
                f"got {self.n_qubits} / {block}"
            )
        if self.n_qubits // block > 3:
            raise ValueError(
                f"{self.n_qubits // block} wires reach the dense layer; it supports at most 3"
            )
        return self

    @property
    def embed_dim(self):
        return self.n_qubits

    @property
    def readout_wires(self):
        return self.n_qubits // 2 ** self.conv_pool_stages

    def layer_switches(self):
        return self.ablation_mode.layers(self.variational_head)

    def updated(self, **changes):
        """Validated copy with some fields replaced."""
        try:
            return type(self)(**{**self.model_dump(), **changes})
        except ValidationError as exc:
            raise ConfigurationError(str(exc)) from exc


class TrainingConfig(BaseModel):
    epochs: int = Field(150, ge=1)
    learning_rate: float = Field(LEARNING_RATE_PRESETS['desk'], gt=0.0)
    batch_size: int = Field(8, ge=1)
    seed: int = Field(0, ge=0)
    split_ratios: Tuple[float, float, float] = Field(DEFAULT_SPLIT_RATIOS)
    min_freq: int = Field(1, ge=1)
    bleu_smoothing: bool = False
    max_decode_len: Optional[int] = Field(None, ge=1)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(1e-8, gt=0.0)

    @field_validator('learning_rate', mode='before')
    @classmethod
    def _preset(cls, value):
        if isinstance(value, str) and value.strip() in LEARNING_RATE_PRESETS:
            return LEARNING_RATE_PRESETS[value.strip()]
        return value

    @field_validator('split_ratios', mode='before')
    @classmethod
    def _split_ratios(cls, value):
        if isinstance(value, str):
            return tuple(float(v) for v in value.split(','))
        return value

    @field_validator('split_ratios')
    @classmethod
    def _ratios_sum(cls, value):
        if any(r < 0 for r in value) or abs(sum(value) - 1.0) > 1e-6:
            raise ValueError(f"split ratios must be non-negative and sum to 1, got {value}")
        return value


def _read_config_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    text = path.read_text(encoding='utf-8')
    if path.suffix == '.json':
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc

    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        values[key] = value
    return values


def load_config(path=None, overrides=None):
    """
    Build (ModelConfig, TrainingConfig) from an optional file plus overrides

    Args:
        path: JSON or key = value config file
        overrides: Mapping of field name -> value; None values are ignored

    Returns:
        (ModelConfig, TrainingConfig)
    """
    values = _read_config_file(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    model_fields = set(ModelConfig.model_fields)
    training_fields = set(TrainingConfig.model_fields)
    unknown = sorted(set(values) - model_fields - training_fields)
    if unknown:
        raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}")
    try:
        model = ModelConfig(**{k: v for k, v in values.items() if k in model_fields})
        training = TrainingConfig(**{k: v for k, v in values.items() if k in training_fields})
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc
    return model, training
