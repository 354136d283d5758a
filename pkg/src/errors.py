"""
Exception hierarchy shared by every layer of the translator.

Each category carries the process exit code the CLI reports for it.
"""


class QedacvcError(Exception):
    """Base class for all errors raised by this package"""

    exit_code = 1


class ConfigurationError(QedacvcError, ValueError):
    exit_code = 1


class WiringError(ConfigurationError):
    """Gate or measurement addressed an inactive or out-of-range wire"""


class GateConstructionError(ConfigurationError):
    """Gate kind, arity or angle count mismatch"""


class ShapeError(ConfigurationError):
    """Parameter, input or sequence length mismatch"""


class ArchitectureError(ConfigurationError):
    """Layer applied to a register it cannot act on"""


class DifferentiationError(ConfigurationError):
    """Trainable slot whose gate has no exact two-term shift rule"""


class AttentionError(ConfigurationError):
    """Attention row with every key position masked"""


class DataError(QedacvcError):
    exit_code = 2


class VocabularyError(DataError):
    pass


class CorpusFormatError(DataError):
    pass


class EvaluationError(DataError):
    pass


class DecodingError(DataError):
    pass


class NumericalError(QedacvcError, ArithmeticError):
    exit_code = 3


class TrainingError(NumericalError):
    """Non-finite loss or gradient during an update"""


class CheckpointError(DataError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class VerificationError(QedacvcError):
    exit_code = 4
