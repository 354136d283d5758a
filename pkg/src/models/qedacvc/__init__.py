"""QEDACVC hybrid quantum-classical translator"""
from .config import AblationMode, ModelConfig, TrainingConfig, load_config
from .model import QEDACVC, greedy_decode, translate

__all__ = ['AblationMode', 'ModelConfig', 'TrainingConfig', 'load_config', 'QEDACVC', 'greedy_decode', 'translate']
