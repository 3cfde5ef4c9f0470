"""WAV I/O and basic signal operations.

All audio is float64 in [-1, 1] in memory, shape (n,) for mono or
(n, channels) for multi-channel.  Files are 16-bit PCM.  Quantization is
round(x * 32768) clipped to the int16 range on write, x = int / 32768 on
read; this keeps the round-trip error of any in-range sample at or below
1/32768.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

PCM_SCALE = 32768.0


class AudioFormatError(Exception):
    pass


def write_wav(path: Path | str, samples: np.ndarray, sample_rate: int) -> None:
    samples = np.asarray(samples)
    if samples.ndim == 1:
        channels = 1
    elif samples.ndim == 2:
        channels = samples.shape[1]
    else:
        raise AudioFormatError(f"expected 1-D or 2-D samples, got shape {samples.shape}")
    ints = np.clip(np.rint(samples * PCM_SCALE), -32768, 32767).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(ints.tobytes())


def encode_wav_bytes(samples: np.ndarray, sample_rate: int) -> bytes:
    """A complete WAV file as bytes (for transport, no filesystem touch)."""
    import io

    samples = np.asarray(samples)
    channels = 1 if samples.ndim == 1 else samples.shape[1]
    ints = np.clip(np.rint(samples * PCM_SCALE), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(ints.tobytes())
    return buf.getvalue()


def decode_wav_bytes(data: bytes) -> tuple[np.ndarray, int]:
    import io

    with wave.open(io.BytesIO(data), "rb") as r:
        if r.getsampwidth() != 2:
            raise AudioFormatError(
                f"only 16-bit PCM is supported, got {8 * r.getsampwidth()}-bit")
        channels = r.getnchannels()
        raw = r.readframes(r.getnframes())
        rate = r.getframerate()
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
    if channels > 1:
        samples = samples.reshape(-1, channels)
    return samples, rate


def read_wav(path: Path | str) -> tuple[np.ndarray, int]:
    with wave.open(str(path), "rb") as r:
        if r.getsampwidth() != 2:
            raise AudioFormatError(
                f"{path}: only 16-bit PCM is supported, got {8 * r.getsampwidth()}-bit")
        if r.getcomptype() != "NONE":
            raise AudioFormatError(f"{path}: compressed WAV is not supported")
        channels = r.getnchannels()
        raw = r.readframes(r.getnframes())
        rate = r.getframerate()
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
    if channels > 1:
        data = data.reshape(-1, channels)
    return data, rate


def power(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.mean(np.square(x)))


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(power(x)))


def rms_db(x: np.ndarray) -> float:
    p = power(x)
    if p == 0.0:
        return float("-inf")
    return 10.0 * float(np.log10(p))


def duration_seconds(x: np.ndarray, sample_rate: int) -> float:
    return x.shape[0] / sample_rate


def silence(n_samples: int, channels: int = 1) -> np.ndarray:
    if channels == 1:
        return np.zeros(n_samples)
    return np.zeros((n_samples, channels))


def match_length(x: np.ndarray, n_samples: int) -> np.ndarray:
    """Loop or truncate a mono signal to exactly n_samples."""
    if x.shape[0] == 0:
        raise ValueError("cannot extend an empty signal")
    if x.shape[0] >= n_samples:
        return x[:n_samples]
    reps = -(-n_samples // x.shape[0])
    return np.tile(x, reps)[:n_samples]


def mix_at_snr(signal: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """Add noise to signal at an exact signal-to-noise ratio in dB.

    The noise is looped or truncated to the signal length before scaling.
    """
    signal = np.asarray(signal, dtype=np.float64)
    noise = match_length(np.asarray(noise, dtype=np.float64), signal.shape[0])
    p_signal = power(signal)
    p_noise = power(noise)
    if p_signal == 0.0:
        raise ValueError("signal has zero power, SNR is undefined")
    if p_noise == 0.0:
        raise ValueError("noise has zero power, SNR is undefined")
    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return signal + gain * noise


def measure_snr(signal: np.ndarray, noise_component: np.ndarray) -> float:
    return 10.0 * float(np.log10(power(signal) / power(noise_component)))


def concat(parts: list[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts, axis=0)


def stack_channels(tracks: list[np.ndarray]) -> np.ndarray:
    """Interleave equal-role mono tracks into (n, channels), zero-padding to
    the longest."""
    n = max(t.shape[0] for t in tracks)
    out = np.zeros((n, len(tracks)))
    for i, t in enumerate(tracks):
        out[: t.shape[0], i] = t
    return out
