"""Model backends: protocols, deterministic mocks, and remote transports."""

from .base import (
    DEFAULT_SAMPLE_RATE,
    EMBEDDING_DIM,
    ASRBackend,
    BackendError,
    BackendProtocolError,
    BackendSet,
    BackendUnavailableError,
    ChatBackend,
    EmbeddingBackend,
    MOSBackend,
    TTSBackend,
)
from .mock import make_mock_backends

__all__ = [
    "DEFAULT_SAMPLE_RATE",
    "EMBEDDING_DIM",
    "ASRBackend",
    "BackendError",
    "BackendProtocolError",
    "BackendSet",
    "BackendUnavailableError",
    "ChatBackend",
    "EmbeddingBackend",
    "MOSBackend",
    "TTSBackend",
    "make_mock_backends",
]
