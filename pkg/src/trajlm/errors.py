"""Exception types shared across the package."""


class TrajLMError(Exception):
    """Base class for all package errors."""


class DomainError(TrajLMError, ValueError):
    """Input violates a documented precondition (out-of-bounds point, bad shape, ...)."""


class ConfigError(TrajLMError, ValueError):
    """Invalid configuration value or combination."""


class VocabError(TrajLMError, KeyError):
    """Unknown token or out-of-range token id."""


class CheckpointError(TrajLMError, ValueError):
    """Checkpoint bytes cannot be loaded."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


class CheckpointShapeError(CheckpointError):
    """A stored parameter does not match the shape implied by its config."""


class CheckpointVocabError(CheckpointError):
    """Checkpoint was trained against a different vocabulary."""


class SessionFullError(TrajLMError, RuntimeError):
    """An incremental scoring session reached the model's maximum sequence length."""


class DataError(TrajLMError, ValueError):
    """Corpus or report file does not match its documented schema."""
