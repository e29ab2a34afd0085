from __future__ import annotations


class OccliteError(Exception):
    """Base class for every error raised by occlite."""


class RejectedInputError(OccliteError, ValueError):
    """An input tensor or file does not have the expected shape or format."""


class ConfigurationError(OccliteError, ValueError):
    """A configuration, weight set or layer geometry is inconsistent."""


class UsageError(OccliteError, ValueError):
    """A caller asked for something that is not supported, e.g. an unknown
    output format.
    """


class GenerationError(OccliteError, RuntimeError):
    """A synthetic scene could not be generated."""

    def __init__(self, message: str, seed: int) -> None:
        super().__init__(f"{message} (seed={seed})")
        self.seed = seed
