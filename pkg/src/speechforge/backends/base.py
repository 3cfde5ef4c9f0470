"""Protocols every model backend implements.

The pipeline only ever talks to these five interfaces; whether the model
behind one is a deterministic mock, an HTTP service, or a subprocess is a
construction-time choice.  Audio crosses the boundary as float arrays plus a
sample rate; embeddings are unit-norm float vectors of EMBEDDING_DIM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

EMBEDDING_DIM = 256
DEFAULT_SAMPLE_RATE = 22050


class BackendError(Exception):
    """A backend failed to produce a result."""


class BackendProtocolError(BackendError):
    """A backend replied with something outside its contract."""


class BackendUnavailableError(BackendError):
    """The backend cannot be reached (service down, process dead)."""


@runtime_checkable
class ChatBackend(Protocol):
    def complete(self, prompt: str, temperature: float = 0.7,
                 max_tokens: int = 1024) -> str: ...


@runtime_checkable
class TTSBackend(Protocol):
    def synthesize(self, text: str, speaker_embedding: np.ndarray,
                   sample_rate: int = DEFAULT_SAMPLE_RATE) -> np.ndarray: ...


@runtime_checkable
class ASRBackend(Protocol):
    def transcribe(self, samples: np.ndarray, sample_rate: int,
                   language: str) -> str: ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray: ...


@runtime_checkable
class MOSBackend(Protocol):
    def score(self, samples: np.ndarray, sample_rate: int,
              metric: str = "dnsmos") -> float: ...


@dataclass
class BackendSet:
    """One backend per model kind, as the pipeline consumes them."""

    chat: ChatBackend
    tts: TTSBackend
    asr: ASRBackend
    embedding: EmbeddingBackend
    mos: MOSBackend

    KINDS = ("chat", "tts", "asr", "embedding", "mos")
