"""Synthetic spoken-dialogue corpus construction toolkit.

Submodules:
    records    dialogue metadata model, JSON codec, corpus store
    audio      WAV I/O, resampling-free DSP helpers, SNR mixing
    watermark  spread-spectrum audio watermark embed/detect
    qa         text normalization, edit-distance rates, transcript gating
    backends   model-backend protocols, mock/HTTP/subprocess implementations
    textpipe   instruction filtering and spoken-style rewriting
    voices     speaker identification and virtual voice-library construction
    synth      dialogue audio rendering
    corpusops  partitioning, statistics, evaluation harness
    pipeline   end-to-end orchestration
"""

__version__ = "0.1.0"
